//! Linear-systems toolkit: state-space containers, eigenstructure queries,
//! finite-horizon Toeplitz operators and a small Sylvester solver.
//!
//! Companion-form convention used throughout the crate: for
//! `companion_form(c0, [c1, .., cn])`
//!
//! ```text
//!     | 0  1  0 .. 0  |
//!     | 0  0  1 .. 0  |
//! A = | ..        ..  |
//!     | c0 c1 c2 .. cn|
//! ```
//!
//! the characteristic polynomial is `z^(n+1) - cn z^n - ... - c1 z - c0` and
//! `det A = (-1)^n c0`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Relative tolerance for classifying eigenvalues against the unit circle.
pub const TAU_CIRC: f64 = 1e-9;

/// Relative singular-value threshold for numerical rank decisions on
/// controllability/observability matrices.
pub const RANK_TOL: f64 = 1e-10;

const SCHUR_MAX_ITER: usize = 10_000;

/// A discrete-time system `x+ = A x + B u`, `y = C x + D u`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

impl StateSpaceSystem {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let (p, q) = d.shape();
        if b.shape() != (n, q) {
            return Err(Error::Dimension(format!(
                "B must be {}x{}, got {}x{}",
                n,
                q,
                b.nrows(),
                b.ncols()
            )));
        }
        if c.shape() != (p, n) {
            return Err(Error::Dimension(format!(
                "C must be {}x{}, got {}x{}",
                p,
                n,
                c.nrows(),
                c.ncols()
            )));
        }
        Ok(Self { a, b, c, d })
    }

    /// Memoryless system `y = D u`.
    pub fn static_gain(d: DMatrix<f64>) -> Self {
        let (p, q) = d.shape();
        Self {
            a: DMatrix::zeros(0, 0),
            b: DMatrix::zeros(0, q),
            c: DMatrix::zeros(p, 0),
            d,
        }
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.d.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.d.nrows()
    }

    pub fn is_siso(&self) -> bool {
        self.input_dim() == 1 && self.output_dim() == 1
    }

    /// Transfer function `D + C (zI - A)^-1 B` at a complex point (SISO only).
    pub fn evaluate(&self, z: Complex64) -> Result<Complex64> {
        if !self.is_siso() {
            return Err(Error::NotSiso);
        }
        let n = self.state_dim();
        let d = Complex64::new(self.d[(0, 0)], 0.0);
        if n == 0 {
            return Ok(d);
        }
        let spectrum = eigen_spectrum(&self.a)?;
        let scale = 1.0_f64.max(z.norm());
        if spectrum
            .eigenvalues
            .iter()
            .any(|l| (l - z).norm() <= 1e-12 * scale)
        {
            return Err(Error::Pole { re: z.re, im: z.im });
        }
        let resolvent = DMatrix::<Complex64>::from_fn(n, n, |i, j| {
            let diag = if i == j { z } else { Complex64::new(0.0, 0.0) };
            diag - Complex64::new(self.a[(i, j)], 0.0)
        });
        let rhs = DVector::<Complex64>::from_fn(n, |i, _| Complex64::new(self.b[(i, 0)], 0.0));
        let sol = resolvent
            .lu()
            .solve(&rhs)
            .ok_or(Error::Pole { re: z.re, im: z.im })?;
        let mut acc = d;
        for i in 0..n {
            acc += Complex64::new(self.c[(0, i)], 0.0) * sol[i];
        }
        Ok(acc)
    }

    /// Zero-state response of a SISO system to `inputs`.
    pub fn simulate(&self, inputs: &[f64]) -> Result<Vec<f64>> {
        if !self.is_siso() {
            return Err(Error::NotSiso);
        }
        let mut x = DVector::<f64>::zeros(self.state_dim());
        let mut out = Vec::with_capacity(inputs.len());
        for &u in inputs {
            let y = (&self.c * &x)[(0, 0)] + self.d[(0, 0)] * u;
            out.push(y);
            x = &self.a * &x + &self.b.column(0) * u;
        }
        Ok(out)
    }
}

#[derive(Serialize, Deserialize)]
struct SystemRepr {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    d: Vec<Vec<f64>>,
}

impl Serialize for StateSpaceSystem {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SystemRepr {
            a: matrix_to_rows(&self.a),
            b: matrix_to_rows(&self.b),
            c: matrix_to_rows(&self.c),
            d: matrix_to_rows(&self.d),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for StateSpaceSystem {
    fn deserialize<De: Deserializer<'de>>(de: De) -> std::result::Result<Self, De::Error> {
        use serde::de::Error as _;
        let repr = SystemRepr::deserialize(de)?;
        let d = matrix_from_rows(&repr.d, 0).map_err(De::Error::custom)?;
        let n = repr.a.len();
        let a = matrix_from_rows(&repr.a, n).map_err(De::Error::custom)?;
        let b = matrix_from_rows(&repr.b, d.ncols()).map_err(De::Error::custom)?;
        let c = matrix_from_rows(&repr.c, n).map_err(De::Error::custom)?;
        StateSpaceSystem::new(a, b, c, d).map_err(De::Error::custom)
    }
}

/// Row-major nested representation of a matrix.
pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

/// Builds a matrix from row-major nested arrays. `ncols_if_empty` is used
/// when there are no rows to infer the column count from.
pub fn matrix_from_rows(rows: &[Vec<f64>], ncols_if_empty: usize) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Ok(DMatrix::zeros(0, ncols_if_empty));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Dimension("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// Serde adapter storing a `DMatrix` as row-major nested arrays.
pub mod serde_matrix {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        super::matrix_to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        super::matrix_from_rows(&rows, 0).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter storing a `DVector` as a flat array.
pub mod serde_vector {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        Ok(DVector::from_vec(Vec::<f64>::deserialize(d)?))
    }
}

/// Eigenvalues of a square matrix classified against the unit circle.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    /// Eigenvalues with `|z| > 1 + TAU_CIRC`.
    pub unstable_count: usize,
    /// Eigenvalues with `||z| - 1| <= TAU_CIRC`.
    pub unit_circle_count: usize,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn unstable(&self) -> impl Iterator<Item = &Complex64> {
        self.eigenvalues.iter().filter(|z| z.norm() > 1.0 + TAU_CIRC)
    }

    pub fn stable_count(&self) -> usize {
        self.len() - self.unstable_count - self.unit_circle_count
    }
}

fn require_square(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

pub fn eigen_spectrum(m: &DMatrix<f64>) -> Result<Spectrum> {
    require_square(m)?;
    if m.nrows() == 0 {
        return Ok(Spectrum {
            eigenvalues: Vec::new(),
            unstable_count: 0,
            unit_circle_count: 0,
        });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITER).ok_or(
        Error::NoConvergence {
            iterations: SCHUR_MAX_ITER,
            residual: f64::NAN,
        },
    )?;
    let eigenvalues: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    let mut unstable_count = 0;
    let mut unit_circle_count = 0;
    for z in &eigenvalues {
        let r = z.norm();
        if (r - 1.0).abs() <= TAU_CIRC {
            unit_circle_count += 1;
        } else if r > 1.0 {
            unstable_count += 1;
        }
    }
    Ok(Spectrum {
        eigenvalues,
        unstable_count,
        unit_circle_count,
    })
}

/// Product of the magnitudes of the eigenvalues strictly outside the unit
/// circle; 1 when there are none.
pub fn degree_of_instability(m: &DMatrix<f64>) -> Result<f64> {
    let spectrum = eigen_spectrum(m)?;
    Ok(spectrum.unstable().map(|z| z.norm()).product())
}

pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eigen_spectrum(m)?.spectral_radius())
}

/// `[[0_{n x 1}, I_n], [top_coeff, a_f]]`, see the module docs for the sign
/// convention.
pub fn companion_form(top_coeff: f64, a_f: &[f64]) -> DMatrix<f64> {
    let n = a_f.len();
    let mut a = DMatrix::zeros(n + 1, n + 1);
    for i in 0..n {
        a[(i, i + 1)] = 1.0;
    }
    a[(n, 0)] = top_coeff;
    for (j, &v) in a_f.iter().enumerate() {
        a[(n, j + 1)] = v;
    }
    a
}

/// Stacked `[C; CA; ...; CA^(rows-1)]`.
pub fn observability_matrix(a: &DMatrix<f64>, c: &DMatrix<f64>, rows: usize) -> Result<DMatrix<f64>> {
    require_square(a)?;
    if rows == 0 {
        return Err(Error::InvalidArgument("rows must be at least 1".into()));
    }
    if c.ncols() != a.nrows() {
        return Err(Error::Dimension(format!(
            "C has {} columns but A is {}x{}",
            c.ncols(),
            a.nrows(),
            a.nrows()
        )));
    }
    let p = c.nrows();
    let mut out = DMatrix::zeros(p * rows, a.ncols());
    let mut block = c.clone();
    for k in 0..rows {
        out.view_mut((k * p, 0), (p, a.ncols())).copy_from(&block);
        block = &block * a;
    }
    Ok(out)
}

/// `[B, AB, ..., A^(n-1) B]`.
pub fn controllability_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    require_square(a)?;
    if b.nrows() != a.nrows() {
        return Err(Error::Dimension("B rows must match A".into()));
    }
    let n = a.nrows();
    let q = b.ncols();
    let mut out = DMatrix::zeros(n, n * q);
    let mut block = b.clone();
    for k in 0..n {
        out.view_mut((0, k * q), (n, q)).copy_from(&block);
        block = a * &block;
    }
    Ok(out)
}

/// Singular values in descending order, by one-sided Jacobi rotations.
///
/// Used instead of the bidiagonalization SVD, which loses accuracy on some
/// rank-deficient inputs.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let work = if m.nrows() >= m.ncols() { m.clone() } else { m.transpose() };
    let mut u = work;
    let n = u.ncols();
    for _ in 0..100 {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let alpha = u.column(i).norm_squared();
                let beta = u.column(j).norm_squared();
                let gamma = u.column(i).dot(&u.column(j));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..u.nrows() {
                    let (x, y) = (u[(r, i)], u[(r, j)]);
                    u[(r, i)] = c * x - s * y;
                    u[(r, j)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..n).map(|j| u.column(j).norm()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Numerical rank from singular values, relative to the largest one.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = singular_values(m);
    let smax = sv[0];
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

pub fn is_observable(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<bool> {
    let n = a.nrows();
    if n == 0 {
        return Ok(true);
    }
    let obs = observability_matrix(a, c, n)?;
    Ok(numerical_rank(&obs, RANK_TOL) == n)
}

/// Solves `F phi - phi A = Q` by Kronecker vectorization.
pub fn solve_sylvester(f: &DMatrix<f64>, a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    require_square(f)?;
    require_square(a)?;
    let m = f.nrows();
    let k = a.nrows();
    if q.shape() != (m, k) {
        return Err(Error::Dimension(format!(
            "Q must be {}x{}, got {}x{}",
            m,
            k,
            q.nrows(),
            q.ncols()
        )));
    }
    if m == 0 || k == 0 {
        return Ok(DMatrix::zeros(m, k));
    }
    let sf = eigen_spectrum(f)?;
    let sa = eigen_spectrum(a)?;
    let scale = 1.0 + f.norm() + a.norm();
    let gap = sf
        .eigenvalues
        .iter()
        .flat_map(|lf| sa.eigenvalues.iter().map(move |la| (lf - la).norm()))
        .fold(f64::INFINITY, f64::min);
    if gap <= TAU_CIRC * scale {
        return Err(Error::SingularSylvester { gap });
    }
    // vec(F X - X A) = (I_k (x) F - A' (x) I_m) vec(X), column-major vec.
    let dim = m * k;
    let mut kron = DMatrix::<f64>::zeros(dim, dim);
    for j in 0..k {
        for i in 0..m {
            let row = j * m + i;
            for l in 0..m {
                kron[(row, j * m + l)] += f[(i, l)];
            }
            for l in 0..k {
                kron[(row, l * m + i)] -= a[(l, j)];
            }
        }
    }
    let rhs = DVector::from_column_slice(q.as_slice());
    let sol = kron
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularSylvester { gap })?;
    Ok(DMatrix::from_column_slice(m, k, sol.as_slice()))
}

/// (Strictly) lower-triangular Toeplitz matrix of an impulse response
/// truncated to a finite horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzOperator {
    impulse: Vec<f64>,
    strictly_causal: bool,
}

impl ToeplitzOperator {
    pub fn new(impulse: Vec<f64>, strictly_causal: bool) -> Result<Self> {
        if impulse.is_empty() {
            return Err(Error::InvalidArgument("impulse response must be nonempty".into()));
        }
        if strictly_causal && impulse[0] != 0.0 {
            return Err(Error::NotStrictlyCausal(impulse[0]));
        }
        Ok(Self {
            impulse,
            strictly_causal,
        })
    }

    pub fn impulse(&self) -> &[f64] {
        &self.impulse
    }

    pub fn size(&self) -> usize {
        self.impulse.len()
    }

    pub fn is_strictly_causal(&self) -> bool {
        self.strictly_causal
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.size();
        DMatrix::from_fn(n, n, |i, j| if i >= j { self.impulse[i - j] } else { 0.0 })
    }

    /// Causal convolution truncated to the horizon.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.size() {
            return Err(Error::Dimension(format!(
                "input length {} != operator size {}",
                x.len(),
                self.size()
            )));
        }
        Ok((0..x.len())
            .map(|i| (0..=i).map(|j| self.impulse[i - j] * x[j]).sum())
            .collect())
    }

    /// Inverse operator; it is again lower-triangular Toeplitz.
    pub fn inverse(&self) -> Result<Self> {
        let h = &self.impulse;
        if h[0] == 0.0 {
            return Err(Error::Singular("Toeplitz operator with zero diagonal".into()));
        }
        let mut g = vec![0.0; h.len()];
        g[0] = 1.0 / h[0];
        for t in 1..h.len() {
            let acc: f64 = (1..=t).map(|k| h[k] * g[t - k]).sum();
            g[t] = -acc / h[0];
        }
        Self::new(g, false)
    }
}

/// Impulse response `D, CB, CAB, ...` up to index `horizon`.
pub fn toeplitz_of(sys: &StateSpaceSystem, horizon: usize) -> Result<ToeplitzOperator> {
    if !sys.is_siso() {
        return Err(Error::NotSiso);
    }
    let mut impulse = Vec::with_capacity(horizon + 1);
    impulse.push(sys.d()[(0, 0)]);
    let mut x = sys.b().column(0).into_owned();
    for _ in 0..horizon {
        impulse.push((sys.c() * &x)[(0, 0)]);
        x = sys.a() * x;
    }
    ToeplitzOperator::new(impulse, false)
}

/// `D + C (e^{j 2 pi theta} I - A)^-1 B`.
pub fn frequency_response(sys: &StateSpaceSystem, theta: f64) -> Result<Complex64> {
    let z = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * theta);
    sys.evaluate(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn spectrum_of_optimal_encoder_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -2.0, -0.887]);
        let s = eigen_spectrum(&m).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.unstable_count, 2);
        assert!(close(degree_of_instability(&m).unwrap(), 2.0, 1e-12));
    }

    #[test]
    fn spectrum_of_zero_and_factored_companion() {
        let s = eigen_spectrum(&DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(s.unstable_count, 0);
        assert!(s.eigenvalues.iter().all(|z| z.norm() < 1e-15));

        // z^2 - 5/2 z + 1 = (z - 2)(z - 1/2)
        let m = companion_form(-1.0, &[2.5]);
        let s = eigen_spectrum(&m).unwrap();
        let mut mags: Vec<f64> = s.eigenvalues.iter().map(|z| z.norm()).collect();
        mags.sort_by(f64::total_cmp);
        assert!(close(mags[0], 0.5, 1e-12) && close(mags[1], 2.0, 1e-12));
        assert_eq!(s.unstable_count, 1);
    }

    #[test]
    fn non_square_is_rejected() {
        assert!(matches!(
            eigen_spectrum(&DMatrix::zeros(2, 3)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn degree_of_instability_cases() {
        let stable = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, 0.0, -0.3]);
        assert_eq!(degree_of_instability(&stable).unwrap(), 1.0);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 0.5, -2.0]));
        assert!(close(degree_of_instability(&d).unwrap(), 6.0, 1e-12));
    }

    #[test]
    fn companion_layout() {
        let a = companion_form(-2.0, &[-0.887]);
        assert_eq!(a, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -2.0, -0.887]));
        assert_eq!(companion_form(2.0, &[]), DMatrix::from_element(1, 1, 2.0));
        // char poly z^3 - 2 => det = (-1)^2 * 2
        let a = companion_form(2.0, &[0.0, 0.0]);
        assert!(close(a.determinant(), 2.0, 1e-12));
        for z in eigen_spectrum(&a).unwrap().eigenvalues {
            assert!(close((z * z * z).re, 2.0, 1e-9) && (z * z * z).im.abs() < 1e-9);
        }
    }

    #[test]
    fn observability_of_companion() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -2.0, -0.887]);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        assert_eq!(observability_matrix(&a, &c, 2).unwrap(), DMatrix::identity(2, 2));
        let o3 = observability_matrix(&a, &c, 3).unwrap();
        // C A^2 = [0 1] A = [-2, -0.887]
        assert!(close(o3[(2, 0)], -2.0, 1e-15) && close(o3[(2, 1)], -0.887, 1e-15));
        let zero = observability_matrix(&a, &DMatrix::zeros(1, 2), 2).unwrap();
        assert_eq!(numerical_rank(&zero, RANK_TOL), 0);
    }

    #[test]
    fn sylvester_scalar_and_homogeneous() {
        let f = DMatrix::from_element(1, 1, 0.5);
        let a = DMatrix::from_element(1, 1, 2.0);
        let phi = solve_sylvester(&f, &a, &DMatrix::from_element(1, 1, -3.0)).unwrap();
        assert!(close(phi[(0, 0)], 2.0, 1e-14));
        let f = DMatrix::from_row_slice(2, 2, &[0.1, 0.3, 0.0, -0.4]);
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -2.0, -0.887]);
        assert_eq!(solve_sylvester(&f, &a, &DMatrix::zeros(2, 2)).unwrap(), DMatrix::zeros(2, 2));
    }

    #[test]
    fn sylvester_shared_eigenvalue_is_singular() {
        let f = DMatrix::from_element(1, 1, 0.5);
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 3.0]);
        assert!(matches!(
            solve_sylvester(&f, &a, &DMatrix::zeros(1, 2)),
            Err(Error::SingularSylvester { .. })
        ));
    }

    #[test]
    fn singular_values_of_rank_one_product() {
        let a = companion_form(-2.0, &[-1.8844040600291998, -2.738322795236803]);
        let z = eigen_spectrum(&a)
            .unwrap()
            .eigenvalues
            .into_iter()
            .find(|z| z.im > 0.0)
            .unwrap();
        let p = &a * &a - &a * (2.0 * z.re) + DMatrix::identity(3, 3) * z.norm_sqr();
        let sv = singular_values(&p);
        assert!((sv[0] - p.norm()).abs() < 1e-12 * p.norm());
        assert!(sv[1] < 1e-12 * sv[0]);
        assert_eq!(numerical_rank(&p, RANK_TOL), 1);
        let d = DMatrix::from_row_slice(2, 3, &[3.0, 0.0, 0.0, 0.0, -4.0, 0.0]);
        assert_eq!(singular_values(&d), vec![4.0, 3.0]);
    }

    #[test]
    fn toeplitz_contract() {
        let id = StateSpaceSystem::static_gain(DMatrix::from_element(1, 1, 1.0));
        assert_eq!(toeplitz_of(&id, 3).unwrap().impulse(), &[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            ToeplitzOperator::new(vec![1.0, 2.0], true),
            Err(Error::NotStrictlyCausal(_))
        ));
        let op = ToeplitzOperator::new(vec![1.0, 0.5, -1.0, 0.35], false).unwrap();
        let inv = op.inverse().unwrap();
        let prod = op.matrix() * inv.matrix();
        assert!((prod - DMatrix::identity(4, 4)).amax() < 1e-14);
    }

    #[test]
    fn frequency_response_static_and_pole() {
        let g = StateSpaceSystem::static_gain(DMatrix::from_element(1, 1, 0.7));
        assert_eq!(frequency_response(&g, 0.3).unwrap(), Complex64::new(0.7, 0.0));
        let integrator = StateSpaceSystem::new(
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 0.0),
        )
        .unwrap();
        assert!(matches!(frequency_response(&integrator, 0.0), Err(Error::Pole { .. })));
    }

    #[test]
    fn json_round_trip_keeps_empty_dimensions() {
        let g = StateSpaceSystem::static_gain(DMatrix::from_element(1, 1, 1.0));
        let s = serde_json::to_string(&g).unwrap();
        let back: StateSpaceSystem = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.state_dim(), 0);
    }
}
