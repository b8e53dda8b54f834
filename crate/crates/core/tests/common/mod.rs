//! Oracles shared by the integration tests. They are deliberately written
//! from the defining formulas, not from the library's code paths.
#![allow(dead_code)]

use feedcap::GeneralCodingConfig;
use nalgebra::{DMatrix, DVector};

/// `ln det` of a symmetric positive definite matrix via Cholesky.
pub fn logdet(m: &DMatrix<f64>) -> f64 {
    let c = m.clone().cholesky().expect("positive definite");
    2.0 * c.l().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// Average input power `tr K_u / (T+1)` of `u = r - Ghat ybar`, from the
/// two independent sources `W` and `N`.
pub fn estimator_power(cfg: &GeneralCodingConfig, g_hat: &DMatrix<f64>) -> f64 {
    let size = cfg.horizon() + 1;
    let gamma = cfg.gamma();
    let zi = cfg.z_inv();
    let on_w = &gamma - g_hat * &zi * &gamma;
    let k_u = &on_w * on_w.transpose() + g_hat * g_hat.transpose();
    k_u.trace() / size as f64
}

/// Minimizer of the input power over strictly lower-triangular `Ghat`.
/// Rows decouple; row `t` is a ridge least-squares problem stacked as
/// `[H_t' ; I] g = [gamma_t' ; 0]`, with `H_t` the first `t` rows of
/// `Z^-1 Gamma`, solved by QR.
pub fn least_squares_estimator(cfg: &GeneralCodingConfig) -> DMatrix<f64> {
    let size = cfg.horizon() + 1;
    let gamma = cfg.gamma();
    let h = cfg.z_inv() * &gamma;
    let k = gamma.ncols();
    let mut g = DMatrix::zeros(size, size);
    for t in 1..size {
        let mut stacked = DMatrix::zeros(k + t, t);
        stacked
            .view_mut((0, 0), (k, t))
            .copy_from(&h.rows(0, t).transpose());
        stacked
            .view_mut((k, 0), (t, t))
            .copy_from(&DMatrix::identity(t, t));
        let mut rhs = DVector::zeros(k + t);
        rhs.rows_mut(0, k).copy_from(&gamma.row(t).transpose());
        let qr = stacked.qr();
        let qtb = qr.q().transpose() * rhs;
        let x = qr.r().solve_upper_triangular(&qtb).expect("full column rank");
        g.view_mut((t, 0), (1, t)).copy_from(&x.transpose());
    }
    g
}

/// Coefficient of determination of the least-squares line through `(x, y)`.
pub fn r_squared(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy * sxy / (sxx * syy)
}

/// Strictly lower-triangular matrix with entries from `next`.
pub fn strictly_lower(size: usize, mut next: impl FnMut() -> f64) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(size, size);
    for i in 1..size {
        for j in 0..i {
            g[(i, j)] = next();
        }
    }
    g
}
