//! Dense finite-horizon quantities of the general coding structure.
//!
//! Notation on the horizon `0..=T`:
//!
//! ```text
//! r = Gamma W,            Gamma = [C; CA; ...; CA^T],  W ~ N(0, I)
//! y = Z^-1 u + N,         u = r + G y   (G strictly lower triangular)
//! ybar = Z^-1 r + N
//! ```
//!
//! Everything here is built from explicit `(T+1) x (T+1)` matrices, which
//! keeps it independent of the recursive Riccati code path it is compared
//! against.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::channel::{augment, ChannelModel};
use crate::error::{Error, Result};
use crate::riccati::{trajectory, AugmentedPlant};
use crate::statespace::{companion_form, is_observable, observability_matrix};

/// Largest horizon accepted by the dense routines.
pub const MAX_HORIZON: usize = 256;

/// Encoder `(A, C)` over a given channel and horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralCodingConfig {
    a: DMatrix<f64>,
    c: DMatrix<f64>,
    horizon: usize,
    channel: ChannelModel,
}

impl GeneralCodingConfig {
    /// Requires `(A, C)` observable, `n <= T <= MAX_HORIZON`, and no
    /// eigenvalue of `A` on the unit circle or shared with `F`.
    pub fn new(a: DMatrix<f64>, c: DMatrix<f64>, horizon: usize, channel: ChannelModel) -> Result<Self> {
        if horizon > MAX_HORIZON {
            return Err(Error::InvalidArgument(format!(
                "horizon {horizon} exceeds the dense limit {MAX_HORIZON}"
            )));
        }
        if a.nrows() == 0 || a.nrows() > horizon + 1 {
            return Err(Error::InvalidArgument(format!(
                "encoder dimension {} must be between 1 and T + 1 = {}",
                a.nrows(),
                horizon + 1
            )));
        }
        augment(&channel, &a, &c)?;
        if !is_observable(&a, &c)? {
            return Err(Error::InvalidArgument("(A, C) is not observable".into()));
        }
        Ok(Self {
            a,
            c,
            horizon,
            channel,
        })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn channel(&self) -> &ChannelModel {
        &self.channel
    }

    /// Encoder dimension `n + 1`.
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn plant(&self) -> Result<AugmentedPlant> {
        augment(&self.channel, &self.a, &self.c)
    }

    /// `[C; CA; ...; CA^T]`.
    pub fn gamma(&self) -> DMatrix<f64> {
        observability_matrix(&self.a, &self.c, self.horizon + 1).expect("dimensions checked on construction")
    }

    /// Lower-triangular Toeplitz matrix of `Z^-1`.
    pub fn z_inv(&self) -> DMatrix<f64> {
        self.channel
            .inverse_toeplitz(self.horizon)
            .expect("validated channel is SISO")
            .matrix()
    }

    /// Lower-triangular Toeplitz matrix of `Z`.
    pub fn z(&self) -> DMatrix<f64> {
        self.channel
            .toeplitz(self.horizon)
            .expect("unit feedthrough is invertible")
            .matrix()
    }
}

fn logdet_spd(m: &DMatrix<f64>) -> Result<f64> {
    let chol = Cholesky::new(m.clone()).ok_or_else(|| Error::Singular("matrix is not positive definite".into()))?;
    Ok(2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = Cholesky::new(m.clone()).ok_or_else(|| Error::Singular("matrix is not positive definite".into()))?;
    let mut inv = chol.inverse();
    inv = (&inv + inv.transpose()) * 0.5;
    Ok(inv)
}

fn lower_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    m.clone()
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::Singular("lower-triangular factor".into()))
}

fn require_strictly_lower(g: &DMatrix<f64>, size: usize) -> Result<()> {
    if g.shape() != (size, size) {
        return Err(Error::Dimension(format!("generator must be {size}x{size}")));
    }
    for i in 0..size {
        for j in i..size {
            if g[(i, j)] != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "generator is not strictly lower triangular at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// `1/2 log2 det(I + Z^-1 Gamma Gamma' Z^-1')`.
pub fn mutual_info_matrix_form(cfg: &GeneralCodingConfig) -> Result<f64> {
    let zg = cfg.z_inv() * cfg.gamma();
    let k = DMatrix::identity(cfg.horizon + 1, cfg.horizon + 1) + &zg * zg.transpose();
    Ok(0.5 * logdet_spd(&k)? / std::f64::consts::LN_2)
}

/// Channel-output covariance `K_y` with an explicit feedback generator `G`.
pub fn output_covariance(cfg: &GeneralCodingConfig, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let size = cfg.horizon + 1;
    require_strictly_lower(g, size)?;
    let zi = cfg.z_inv();
    let m = lower_inverse(&(DMatrix::identity(size, size) - &zi * g))?;
    let zg = &zi * cfg.gamma();
    let inner = &zg * zg.transpose() + DMatrix::identity(size, size);
    Ok(&m * inner * m.transpose())
}

/// `1/2 log2 det K_y` for an explicit feedback generator.
pub fn mutual_info_with_generator(cfg: &GeneralCodingConfig, g: &DMatrix<f64>) -> Result<f64> {
    let ky = output_covariance(cfg, g)?;
    Ok(0.5 * logdet_spd(&((&ky + ky.transpose()) * 0.5))? / std::f64::consts::LN_2)
}

/// `1/2 sum log2 K_{e,t}` along the Riccati trajectory started at `Sigma_0`.
pub fn riccati_information_bits(cfg: &GeneralCodingConfig) -> Result<f64> {
    let tr = trajectory(&cfg.plant()?, cfg.horizon);
    Ok(tr.information_nats() / std::f64::consts::LN_2)
}

/// Estimation-side quantities for the message `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteHorizonReport {
    pub mutual_info_bits: f64,
    /// Bits per channel use, `I / (T + 1)`.
    pub rate: f64,
    /// Minimum MSE of `W` from `ybar^T`, by the conditional-covariance formula.
    pub mmse_w: DMatrix<f64>,
    /// Bayesian Fisher information `I + Gamma' Z^-1' Z^-1 Gamma`.
    pub fisher_w: DMatrix<f64>,
    /// Bayesian Cramer-Rao bound, the inverse Fisher information.
    pub crb_w: DMatrix<f64>,
    /// `(1/(T+1)) sum_t C A^t MMSE_{W,t} A^t' C'`, with `MMSE_{W,t}` the
    /// error covariance given `ybar_0..ybar_{t-1}`.
    pub input_power: f64,
    /// Innovation variances `K_{e,0..=T}` from the Riccati recursion.
    pub ke_sequence: Vec<f64>,
}

/// MMSE of `W` given the first `rows` entries of `ybar`, as
/// `I - K_{W ybar} K_{ybar}^-1 K_{ybar W}`.
fn conditional_mmse(zg: &DMatrix<f64>, rows: usize) -> Result<DMatrix<f64>> {
    let k = zg.ncols();
    if rows == 0 {
        return Ok(DMatrix::identity(k, k));
    }
    let h = zg.rows(0, rows).into_owned();
    let kyy = &h * h.transpose() + DMatrix::identity(rows, rows);
    let chol = Cholesky::new(kyy).ok_or_else(|| Error::Singular("output covariance".into()))?;
    let sol = chol.solve(&h);
    let mut m = DMatrix::identity(k, k) - h.transpose() * sol;
    m = (&m + m.transpose()) * 0.5;
    Ok(m)
}

pub fn mmse_fisher_crb(cfg: &GeneralCodingConfig) -> Result<FiniteHorizonReport> {
    let t1 = cfg.horizon + 1;
    let gamma = cfg.gamma();
    let zg = cfg.z_inv() * &gamma;
    let k = cfg.dim();
    let fisher = DMatrix::identity(k, k) + zg.transpose() * &zg;
    let crb = spd_inverse(&fisher)?;
    let mmse = conditional_mmse(&zg, t1)?;
    let mi = mutual_info_matrix_form(cfg)?;

    let mut power = 0.0;
    let mut at = DMatrix::identity(k, k);
    for t in 0..t1 {
        let m_t = conditional_mmse(&zg, t)?;
        let row = &cfg.c * &at;
        power += (&row * m_t * row.transpose())[(0, 0)];
        at = &cfg.a * at;
    }
    power /= t1 as f64;

    let tr = trajectory(&cfg.plant()?, cfg.horizon);
    Ok(FiniteHorizonReport {
        mutual_info_bits: mi,
        rate: mi / t1 as f64,
        mmse_w: mmse,
        fisher_w: fisher,
        crb_w: crb,
        input_power: power,
        ke_sequence: tr.ke,
    })
}

/// Strictly causal linear maps from `ybar` produced by the time-varying
/// Kalman predictor of the augmented plant.
struct KalmanMaps {
    /// Row `t` maps `ybar` to `rhat_t = DD Xhat_t`.
    estimator: DMatrix<f64>,
    /// Row `t` maps `ybar` to the innovation `e_t`.
    innovation: DMatrix<f64>,
}

fn kalman_maps(cfg: &GeneralCodingConfig) -> Result<KalmanMaps> {
    let plant = cfg.plant()?;
    let tr = trajectory(&plant, cfg.horizon);
    let t1 = cfg.horizon + 1;
    let dim = plant.dim();
    let mut x_hat = DMatrix::<f64>::zeros(dim, t1);
    let mut estimator = DMatrix::zeros(t1, t1);
    let mut innovation = DMatrix::zeros(t1, t1);
    for t in 0..t1 {
        estimator.set_row(t, &(plant.d_bb() * &x_hat).row(0));
        let mut e = -(plant.c_bb() * &x_hat);
        e[(0, t)] += 1.0;
        innovation.set_row(t, &e.row(0));
        let l = DMatrix::from_column_slice(dim, 1, tr.gains[t].as_slice());
        x_hat = plant.a_bb() * x_hat + l * e;
    }
    Ok(KalmanMaps {
        estimator,
        innovation,
    })
}

/// Optimal feedback generator and the strictly causal estimator it is
/// built from: returns `(G*, Ghat*)` with `G* = -Ghat* (I - Z^-1 Ghat*)^-1`.
pub fn optimal_feedback_generator(cfg: &GeneralCodingConfig) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let g_hat = kalman_maps(cfg)?.estimator;
    Ok((generator_from_estimator(cfg, &g_hat)?, g_hat))
}

/// `G = -Ghat (I - Z^-1 Ghat)^-1`.
pub fn generator_from_estimator(cfg: &GeneralCodingConfig, g_hat: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let size = cfg.horizon + 1;
    require_strictly_lower(g_hat, size)?;
    let inv = lower_inverse(&(DMatrix::identity(size, size) - cfg.z_inv() * g_hat))?;
    let mut g = -(g_hat * inv);
    clear_upper(&mut g);
    Ok(g)
}

/// `Ghat = -G (I - Z^-1 G)^-1`.
pub fn estimator_from_generator(cfg: &GeneralCodingConfig, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let size = cfg.horizon + 1;
    require_strictly_lower(g, size)?;
    let inv = lower_inverse(&(DMatrix::identity(size, size) - cfg.z_inv() * g))?;
    let mut g_hat = -(g * inv);
    clear_upper(&mut g_hat);
    Ok(g_hat)
}

fn clear_upper(m: &mut DMatrix<f64>) {
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            m[(i, j)] = 0.0;
        }
    }
}

/// Channel-input covariance `K_u` for an explicit feedback generator `G`.
pub fn input_covariance(cfg: &GeneralCodingConfig, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let size = cfg.horizon + 1;
    require_strictly_lower(g, size)?;
    let zi = cfg.z_inv();
    let m = lower_inverse(&(DMatrix::identity(size, size) - &zi * g))?;
    let gm = g * &m;
    let on_w = (DMatrix::identity(size, size) + &gm * &zi) * cfg.gamma();
    Ok(&on_w * on_w.transpose() + &gm * gm.transpose())
}

/// Average input power `tr(K_u) / (T+1)` when the feedback is written as an
/// estimator, `u = r - Ghat ybar`.
pub fn input_power_with_estimator(cfg: &GeneralCodingConfig, g_hat: &DMatrix<f64>) -> Result<f64> {
    let size = cfg.horizon + 1;
    if g_hat.shape() != (size, size) {
        return Err(Error::Dimension(format!("estimator must be {size}x{size}")));
    }
    let on_w = (DMatrix::identity(size, size) - g_hat * cfg.z_inv()) * cfg.gamma();
    Ok((on_w.norm_squared() + g_hat.norm_squared()) / size as f64)
}

/// Covariance of the innovations `e^T` produced by the Kalman predictor,
/// propagated analytically; diagonal with entries `K_{e,t}`.
pub fn innovation_covariance(cfg: &GeneralCodingConfig) -> Result<DMatrix<f64>> {
    let e = kalman_maps(cfg)?.innovation;
    let zg = cfg.z_inv() * cfg.gamma();
    let on_w = &e * zg;
    Ok(&on_w * on_w.transpose() + &e * e.transpose())
}

/// `E[u_t e_tau]` under the optimal generator, entry `(t, tau)`.
pub fn input_innovation_cross(cfg: &GeneralCodingConfig) -> Result<DMatrix<f64>> {
    let maps = kalman_maps(cfg)?;
    let size = cfg.horizon + 1;
    let zg = cfg.z_inv() * cfg.gamma();
    let u_w = cfg.gamma() - &maps.estimator * &zg;
    let u_n = -&maps.estimator;
    let e_w = &maps.innovation * &zg;
    let e_n = &maps.innovation;
    debug_assert_eq!(u_w.nrows(), size);
    Ok(u_w * e_w.transpose() + u_n * e_n.transpose())
}

/// Converts `(A, C, G)` to the channel-input parametrization
/// `u = B Z N + (I + B) r_cp` with `cov(r_cp) = K_r`; returns `(K_r, B)`.
pub fn cp_convert(cfg: &GeneralCodingConfig, g: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let size = cfg.horizon + 1;
    require_strictly_lower(g, size)?;
    let gz = g * cfg.z_inv();
    let inv = lower_inverse(&(DMatrix::identity(size, size) - &gz))?;
    let mut b = gz * inv;
    clear_upper(&mut b);
    let gamma = cfg.gamma();
    Ok((&gamma * gamma.transpose(), b))
}

/// Channel-input covariance `B Z Z' B' + (I + B) K_r (I + B)'`.
pub fn cp_input_covariance(
    channel: &ChannelModel,
    k_r: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let size = k_r.nrows();
    if k_r.shape() != (size, size) || b.shape() != (size, size) || size == 0 {
        return Err(Error::Dimension("K_r and B must be square of equal size".into()));
    }
    let z = channel.toeplitz(size - 1)?.matrix();
    let bz = b * z;
    let ib = DMatrix::identity(size, size) + b;
    Ok(&bz * bz.transpose() + &ib * k_r * ib.transpose())
}

/// `1/2 log2 det(Z Z' + K_r)`; `det(Z Z') = 1` so no noise term remains.
pub fn cp_rate_bits(channel: &ChannelModel, k_r: &DMatrix<f64>) -> Result<f64> {
    let size = k_r.nrows();
    if size == 0 {
        return Err(Error::Dimension("K_r must be nonempty".into()));
    }
    let z = channel.toeplitz(size - 1)?.matrix();
    let m = &z * z.transpose() + k_r;
    Ok(0.5 * logdet_spd(&((&m + m.transpose()) * 0.5))? / std::f64::consts::LN_2)
}

/// Inverse of [`cp_convert`] for positive definite `K_r`: a `(T+1)`-dimensional
/// encoder with `Gamma(A, C) = K_r^{1/2}` and `G = (I + B)^-1 B Z`.
///
/// The free last row of the shifted block is `[2, 0, .., 0]`, which puts every
/// eigenvalue of `A` on the circle of radius `2^{1/(T+1)}`.
pub fn cp_convert_back(
    channel: &ChannelModel,
    k_r: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<(GeneralCodingConfig, DMatrix<f64>)> {
    let size = k_r.nrows();
    if k_r.shape() != (size, size) || b.shape() != (size, size) || size == 0 {
        return Err(Error::Dimension("K_r and B must be square of equal size".into()));
    }
    require_strictly_lower(b, size)?;
    let sym = (k_r + k_r.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    if eig.eigenvalues.iter().any(|&l| l <= 1e-12 * lmax) {
        return Err(Error::Singular("K_r is not positive definite".into()));
    }
    let sqrt_l = DVector::from_iterator(size, eig.eigenvalues.iter().map(|l| l.sqrt()));
    let inv_sqrt_l = sqrt_l.map(|s| 1.0 / s);
    let gamma0 = &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_l) * eig.eigenvectors.transpose();
    let gamma0_inv = &eig.eigenvectors * DMatrix::from_diagonal(&inv_sqrt_l) * eig.eigenvectors.transpose();
    let shift = companion_form(2.0, &vec![0.0; size - 1]);
    let a = &gamma0_inv * shift * &gamma0;
    let c = gamma0.rows(0, 1).into_owned();
    let cfg = GeneralCodingConfig::new(a, c, size - 1, channel.clone())?;
    let ib = DMatrix::identity(size, size) + b;
    let ib_inv = lower_inverse(&ib)?;
    let mut g = ib_inv * b * cfg.z();
    clear_upper(&mut g);
    Ok((cfg, g))
}
