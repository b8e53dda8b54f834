//! Riccati recursion for the augmented encoder/channel plant, its steady
//! state by two independent routes, and the associated Kalman gains.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statespace::{eigen_spectrum, solve_sylvester, StateSpaceSystem, TAU_CIRC};

/// Successive-difference tolerance for the steady-state iteration, relative
/// to `max(1, ||Sigma||_inf)`.
pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 200_000;
/// Relative singular-value threshold for the rank certificate.
pub const RANK_REL_TOL: f64 = 1e-6;
/// Closed-loop spectral radius must stay below `1 - STABILITY_MARGIN`.
pub const STABILITY_MARGIN: f64 = 1e-8;
/// Relative residual accepted from the closed-form reduced solution.
const REDUCED_RESIDUAL_TOL: f64 = 1e-8;

/// `AA = [[A, 0], [G C, F]]`, `CC = [C, H]`, `DD = [C, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedPlant {
    a_bb: DMatrix<f64>,
    c_bb: DMatrix<f64>,
    d_bb: DMatrix<f64>,
    a: DMatrix<f64>,
    c: DMatrix<f64>,
    f: DMatrix<f64>,
    g: DMatrix<f64>,
    h: DMatrix<f64>,
}

impl AugmentedPlant {
    /// Assembles the plant from the encoder pair `(A, C)` and the channel
    /// triple `(F, G, H)`. Only dimensions are checked here; spectral
    /// preconditions are enforced by [`crate::channel::augment`].
    pub fn from_blocks(
        a: &DMatrix<f64>,
        c: &DMatrix<f64>,
        f: &DMatrix<f64>,
        g: &DMatrix<f64>,
        h: &DMatrix<f64>,
    ) -> Result<Self> {
        let k = a.nrows();
        let m = f.nrows();
        if k == 0 || a.ncols() != k {
            return Err(Error::Dimension(format!(
                "encoder matrix must be square and nonempty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if c.shape() != (1, k) {
            return Err(Error::Dimension(format!("encoder output row must be 1x{k}")));
        }
        if f.ncols() != m || g.shape() != (m, 1) || h.shape() != (1, m) {
            return Err(Error::Dimension("channel blocks (F, G, H) are inconsistent".into()));
        }
        let dim = k + m;
        let mut a_bb = DMatrix::zeros(dim, dim);
        a_bb.view_mut((0, 0), (k, k)).copy_from(a);
        a_bb.view_mut((k, 0), (m, k)).copy_from(&(g * c));
        a_bb.view_mut((k, k), (m, m)).copy_from(f);
        let mut c_bb = DMatrix::zeros(1, dim);
        c_bb.view_mut((0, 0), (1, k)).copy_from(c);
        c_bb.view_mut((0, k), (1, m)).copy_from(h);
        let mut d_bb = DMatrix::zeros(1, dim);
        d_bb.view_mut((0, 0), (1, k)).copy_from(c);
        Ok(Self {
            a_bb,
            c_bb,
            d_bb,
            a: a.clone(),
            c: c.clone(),
            f: f.clone(),
            g: g.clone(),
            h: h.clone(),
        })
    }

    pub fn a_bb(&self) -> &DMatrix<f64> {
        &self.a_bb
    }

    pub fn c_bb(&self) -> &DMatrix<f64> {
        &self.c_bb
    }

    pub fn d_bb(&self) -> &DMatrix<f64> {
        &self.d_bb
    }

    pub fn encoder_a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn encoder_c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn channel_f(&self) -> &DMatrix<f64> {
        &self.f
    }

    pub fn channel_g(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn channel_h(&self) -> &DMatrix<f64> {
        &self.h
    }

    /// Encoder order index; the encoder state has dimension `n + 1`.
    pub fn n(&self) -> usize {
        self.a.nrows() - 1
    }

    pub fn m(&self) -> usize {
        self.f.nrows()
    }

    pub fn dim(&self) -> usize {
        self.a_bb.nrows()
    }

    /// Channel input power `DD Sigma DD'` carried by a covariance.
    pub fn power(&self, sigma: &DMatrix<f64>) -> f64 {
        quad(&self.d_bb, sigma)
    }

    /// Innovation variance `CC Sigma CC' + 1`.
    pub fn innovation_variance(&self, sigma: &DMatrix<f64>) -> f64 {
        quad(&self.c_bb, sigma) + 1.0
    }

    /// Kalman gain `AA Sigma CC' / K_e`.
    pub fn gain(&self, sigma: &DMatrix<f64>) -> DVector<f64> {
        let ke = self.innovation_variance(sigma);
        let v = &self.a_bb * sigma * self.c_bb.transpose();
        v.column(0) / ke
    }
}

fn quad(row: &DMatrix<f64>, sigma: &DMatrix<f64>) -> f64 {
    (row * sigma * row.transpose())[(0, 0)]
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// One step of the recursion. Returns `(Sigma_{t+1}, L_t, K_{e,t})`.
pub fn riccati_step(plant: &AugmentedPlant, sigma: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, f64) {
    let a = &plant.a_bb;
    let ke = plant.innovation_variance(sigma);
    let asc = a * sigma * plant.c_bb.transpose();
    let mut next = a * sigma * a.transpose() - &asc * asc.transpose() / ke;
    symmetrize(&mut next);
    let gain = asc.column(0) / ke;
    (next, gain, ke)
}

/// `blockdiag(I_{n+1}, 0_m)`.
pub fn initial_condition(n: usize, m: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(n + 1 + m, n + 1 + m);
    for i in 0..=n {
        s[(i, i)] = 1.0;
    }
    s
}

/// Riccati trajectory started from [`initial_condition`].
///
/// For a horizon `T`, `sigmas` holds `Sigma_0..=Sigma_{T+1}` while `gains`
/// and `ke` hold indices `0..=T`, so that the error covariance after the
/// last transmission is available.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiTrajectory {
    pub sigmas: Vec<DMatrix<f64>>,
    pub gains: Vec<DVector<f64>>,
    pub ke: Vec<f64>,
}

impl RiccatiTrajectory {
    pub fn horizon(&self) -> usize {
        self.ke.len() - 1
    }

    /// `1/2 sum_t log(K_{e,t})` in nats.
    pub fn information_nats(&self) -> f64 {
        0.5 * self.ke.iter().map(|k| k.ln()).sum::<f64>()
    }

    /// Time-averaged input power `(1/(T+1)) sum_t DD Sigma_t DD'`.
    pub fn average_power(&self, plant: &AugmentedPlant) -> f64 {
        let t = self.ke.len();
        self.sigmas[..t].iter().map(|s| plant.power(s)).sum::<f64>() / t as f64
    }
}

pub fn trajectory(plant: &AugmentedPlant, horizon: usize) -> RiccatiTrajectory {
    let mut sigma = initial_condition(plant.n(), plant.m());
    let mut sigmas = Vec::with_capacity(horizon + 2);
    let mut gains = Vec::with_capacity(horizon + 1);
    let mut ke = Vec::with_capacity(horizon + 1);
    for _ in 0..=horizon {
        let (next, l, k) = riccati_step(plant, &sigma);
        sigmas.push(sigma);
        gains.push(l);
        ke.push(k);
        sigma = next;
    }
    sigmas.push(sigma);
    RiccatiTrajectory { sigmas, gains, ke }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolutionPath {
    Iteration,
    ReducedOrder,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution {
    pub sigma: DMatrix<f64>,
    /// `[L1; L2]`, encoder part first.
    pub gain: DVector<f64>,
    pub ke: f64,
    pub rank: usize,
    pub closed_loop_radius: f64,
    pub path: SolutionPath,
    pub iterations: usize,
}

impl RiccatiSolution {
    /// `1/2 log2 K_e`.
    pub fn rate_bits(&self) -> f64 {
        0.5 * self.ke.log2()
    }

    /// Encoder block `L1` of the gain.
    pub fn l1(&self, plant: &AugmentedPlant) -> DVector<f64> {
        self.gain.rows(0, plant.n() + 1).into_owned()
    }

    /// Channel-state block `L2` of the gain.
    pub fn l2(&self, plant: &AugmentedPlant) -> DVector<f64> {
        self.gain.rows(plant.n() + 1, plant.m()).into_owned()
    }
}

/// `max |Sigma - step(Sigma)|`.
pub fn riccati_residual(plant: &AugmentedPlant, sigma: &DMatrix<f64>) -> f64 {
    let (next, _, _) = riccati_step(plant, sigma);
    (next - sigma).amax()
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn numerical_rank(m: &DMatrix<f64>) -> usize {
    crate::statespace::numerical_rank(m, RANK_REL_TOL)
}

fn finalize(
    plant: &AugmentedPlant,
    sigma: DMatrix<f64>,
    path: SolutionPath,
    iterations: usize,
) -> Result<RiccatiSolution> {
    let gain = plant.gain(&sigma);
    let ke = plant.innovation_variance(&sigma);
    let closed = plant.a_bb() - &gain * plant.c_bb();
    let radius = eigen_spectrum(&closed)?.spectral_radius();
    if radius >= 1.0 - STABILITY_MARGIN {
        return Err(Error::NotStabilizing(radius));
    }
    let rank = numerical_rank(&sigma);
    Ok(RiccatiSolution {
        sigma,
        gain,
        ke,
        rank,
        closed_loop_radius: radius,
        path,
        iterations,
    })
}

/// Iterates the recursion from [`initial_condition`] until the successive
/// difference drops below `tol * max(1, ||Sigma||_inf)`.
pub fn solve_steady_by_iteration(plant: &AugmentedPlant, tol: f64, max_iter: usize) -> Result<RiccatiSolution> {
    let mut sigma = initial_condition(plant.n(), plant.m());
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let (next, _, _) = riccati_step(plant, &sigma);
        residual = inf_norm(&(&next - &sigma));
        let scale = inf_norm(&next).max(1.0);
        sigma = next;
        if !residual.is_finite() {
            break;
        }
        if residual <= tol * scale {
            return finalize(plant, sigma, SolutionPath::Iteration, it);
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

pub fn solve_steady(plant: &AugmentedPlant) -> Result<RiccatiSolution> {
    solve_steady_by_iteration(plant, DEFAULT_TOL, DEFAULT_MAX_ITER)
}

/// Reduced output row `C + H phi` with `F phi - phi A = -G C`.
pub fn reduced_output(plant: &AugmentedPlant) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let phi = solve_sylvester(&plant.f, &plant.a, &(-(&plant.g * &plant.c)))?;
    let c = &plant.c + &plant.h * &phi;
    Ok((phi, c))
}

/// Stabilizing solution of `X = A X A' - A X c' c X A' / (c X c' + 1)`.
///
/// The solution lives on the unstable invariant subspace of `A`. On that
/// subspace `X^-1` solves the Stein equation `P = B P B' + B c' c B'` with
/// `B = A_u^-T`, which is solved in closed form.
pub fn solve_reduced_dare(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = a.nrows();
    let spectrum = eigen_spectrum(a)?;
    if let Some(z) = spectrum
        .eigenvalues
        .iter()
        .find(|z| (z.norm() - 1.0).abs() <= TAU_CIRC)
    {
        return Err(Error::UnitCircle(z.norm()));
    }
    if spectrum.unstable_count == 0 {
        return Ok(DMatrix::zeros(k, k));
    }
    if spectrum.unstable_count == k {
        let x = solve_unstable_dare(a, c)?;
        check_reduced_residual(a, c, &x)?;
        return Ok(x);
    }
    let v = unstable_subspace(a, &spectrum.eigenvalues, spectrum.unstable_count)?;
    let au = v.transpose() * a * &v;
    let cu = c * &v;
    let y = solve_unstable_dare(&au, &cu)?;
    let mut x = &v * y * v.transpose();
    symmetrize(&mut x);
    check_reduced_residual(a, c, &x)?;
    Ok(x)
}

/// Near-repeated eigenvalues close to the circle make the Stein solve
/// inaccurate without any singularity being detected, so the result is
/// checked against the equation it claims to solve.
fn check_reduced_residual(a: &DMatrix<f64>, c: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<()> {
    let axc = a * x * c.transpose();
    let ke = (c * x * c.transpose())[(0, 0)] + 1.0;
    let rhs = a * x * a.transpose() - &axc * axc.transpose() / ke;
    let residual = inf_norm(&(x - rhs));
    if residual.is_finite() && residual <= REDUCED_RESIDUAL_TOL * inf_norm(x).max(1.0) {
        Ok(())
    } else {
        Err(Error::Singular(format!("reduced Riccati solution has residual {residual:.3e}")))
    }
}

fn solve_unstable_dare(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let b = a
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("encoder matrix".into()))?
        .transpose();
    let bc = &b * c.transpose();
    let q = &bc * bc.transpose();
    let p = solve_stein(&b, &q)?;
    let mut x = p
        .try_inverse()
        .ok_or_else(|| Error::Singular("reduced information matrix".into()))?;
    symmetrize(&mut x);
    Ok(x)
}

/// Orthonormal basis of the unstable invariant subspace, taken as the range
/// of `p(A) = prod (A - lambda I)` over the stable eigenvalues, read off the
/// dominant eigenvectors of `p(A) p(A)'`.
fn unstable_subspace(
    a: &DMatrix<f64>,
    eigenvalues: &[num_complex::Complex64],
    dim: usize,
) -> Result<DMatrix<f64>> {
    let k = a.nrows();
    let id = DMatrix::<f64>::identity(k, k);
    let mut p = id.clone();
    for z in eigenvalues.iter().filter(|z| z.norm() < 1.0) {
        if z.im.abs() <= 1e-12 * z.norm().max(1.0) {
            p = p * (a - &id * z.re);
        } else if z.im > 0.0 {
            p = p * (a * a - a * (2.0 * z.re) + &id * z.norm_sqr());
        }
    }
    let eig = (&p * p.transpose()).symmetric_eigen();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let top = eig.eigenvalues[order[0]];
    if !(top > 0.0) || eig.eigenvalues[order[dim - 1]] <= 1e-24 * top {
        return Err(Error::Singular("invariant subspace".into()));
    }
    let u = &eig.eigenvectors;
    Ok(DMatrix::from_fn(k, dim, |i, j| u[(i, order[j])]))
}

/// Solves `P = B P B' + Q` for Schur-stable `B` by vectorization.
pub fn solve_stein(b: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = b.nrows();
    let dim = k * k;
    // vec(B P B') = (B (x) B) vec(P)
    let mut lhs = DMatrix::<f64>::identity(dim, dim);
    for j in 0..k {
        for i in 0..k {
            let row = j * k + i;
            for l in 0..k {
                for p in 0..k {
                    lhs[(row, l * k + p)] -= b[(i, p)] * b[(j, l)];
                }
            }
        }
    }
    let rhs = DVector::from_column_slice(q.as_slice());
    let sol = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("Stein equation".into()))?;
    let mut p = DMatrix::from_column_slice(k, k, sol.as_slice());
    symmetrize(&mut p);
    Ok(p)
}

/// Steady state through the Sylvester decoupling and the reduced-order
/// Riccati equation on the encoder block.
pub fn solve_steady_by_reduction(plant: &AugmentedPlant) -> Result<RiccatiSolution> {
    let (phi, c_red) = reduced_output(plant)?;
    let x = solve_reduced_dare(&plant.a, &c_red)?;
    let k = plant.n() + 1;
    let m = plant.m();
    let mut sigma = DMatrix::zeros(k + m, k + m);
    sigma.view_mut((0, 0), (k, k)).copy_from(&x);
    if m > 0 {
        let xp = &x * phi.transpose();
        sigma.view_mut((0, k), (k, m)).copy_from(&xp);
        sigma.view_mut((k, 0), (m, k)).copy_from(&xp.transpose());
        sigma.view_mut((k, k), (m, m)).copy_from(&(&phi * &xp));
    }
    symmetrize(&mut sigma);
    finalize(plant, sigma, SolutionPath::ReducedOrder, 0)
}

/// Steady-state innovation filter from the channel noise to the innovation,
/// realized as `(AA - L CC, -L, CC, 1)`.
pub fn innovation_filter(plant: &AugmentedPlant, sol: &RiccatiSolution) -> Result<StateSpaceSystem> {
    let l = DMatrix::from_column_slice(plant.dim(), 1, sol.gain.as_slice());
    let closed = plant.a_bb() - &l * plant.c_bb();
    StateSpaceSystem::new(closed, -l, plant.c_bb().clone(), DMatrix::from_element(1, 1, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statespace::{companion_form, frequency_response};

    fn scalar_plant(a: f64) -> AugmentedPlant {
        AugmentedPlant::from_blocks(
            &DMatrix::from_element(1, 1, a),
            &DMatrix::from_element(1, 1, 1.0),
            &DMatrix::zeros(0, 0),
            &DMatrix::zeros(0, 1),
            &DMatrix::zeros(1, 0),
        )
        .unwrap()
    }

    fn isi3_plant(a: &DMatrix<f64>) -> AugmentedPlant {
        let f = DMatrix::from_row_slice(3, 3, &[0.0, -0.6, 0.4, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let g = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let h = DMatrix::from_row_slice(1, 3, &[0.5, -1.0, 0.4]);
        let mut c = DMatrix::zeros(1, a.nrows());
        c[(0, 0)] = 1.0;
        AugmentedPlant::from_blocks(a, &c, &f, &g, &h).unwrap()
    }

    #[test]
    fn zero_covariance_is_fixed() {
        let p = isi3_plant(&companion_form(-2.0, &[-0.887]));
        let (next, l, ke) = riccati_step(&p, &DMatrix::zeros(5, 5));
        assert_eq!(next, DMatrix::zeros(5, 5));
        assert_eq!(l, DVector::zeros(5));
        assert_eq!(ke, 1.0);
    }

    #[test]
    fn scalar_step_and_fixed_point() {
        let p = scalar_plant(2.0);
        let (next, _, ke) = riccati_step(&p, &DMatrix::from_element(1, 1, 1.0));
        assert!((next[(0, 0)] - 2.0).abs() < 1e-15);
        assert_eq!(ke, 2.0);
        let sol = solve_steady(&p).unwrap();
        assert!((sol.sigma[(0, 0)] - 3.0).abs() < 1e-10);
        assert!((sol.ke - 4.0).abs() < 1e-10);
        assert_eq!(sol.rank, 1);
        let red = solve_steady_by_reduction(&p).unwrap();
        assert!((red.sigma[(0, 0)] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn initial_conditions() {
        assert_eq!(initial_condition(0, 1), DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        let s = initial_condition(1, 3);
        assert_eq!(s.diagonal().as_slice(), &[1.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(initial_condition(2, 0), DMatrix::identity(3, 3));
    }

    #[test]
    fn stable_encoder_needs_no_power() {
        let p = isi3_plant(&companion_form(0.3, &[0.2]));
        let sol = solve_steady(&p).unwrap();
        assert!(sol.sigma.amax() < 1e-10);
        assert!((sol.ke - 1.0).abs() < 1e-10);
    }

    #[test]
    fn isi3_optimum_two_paths_agree() {
        let p = isi3_plant(&companion_form(-2.0, &[-0.887]));
        let it = solve_steady(&p).unwrap();
        let red = solve_steady_by_reduction(&p).unwrap();
        assert!((it.ke - 4.0).abs() < 1e-8, "ke = {}", it.ke);
        assert!((p.power(&it.sigma) - 0.743).abs() < 5e-3, "power = {}", p.power(&it.sigma));
        let scale = it.sigma.amax().max(1.0);
        assert!((&it.sigma - &red.sigma).amax() <= 1e-8 * scale);
        assert_eq!(it.rank, 2);
        assert!(it.closed_loop_radius < 1.0);
    }

    #[test]
    fn mixed_encoder_spectrum_two_paths_agree() {
        // eigenvalues 2, 0.5 and the complex pair 1.2 e^{+-0.7i}
        let r = 1.2_f64;
        let (c1, c2) = (2.0 * r * 0.7_f64.cos(), -r * r);
        let blocks = [DMatrix::from_row_slice(2, 2, &[2.5, -1.0, 1.0, 0.0]), DMatrix::from_row_slice(2, 2, &[c1, c2, 1.0, 0.0])];
        let mut a = DMatrix::zeros(4, 4);
        a.view_mut((0, 0), (2, 2)).copy_from(&blocks[0]);
        a.view_mut((2, 2), (2, 2)).copy_from(&blocks[1]);
        a[(0, 3)] = 0.3;
        let p = isi3_plant(&a);
        let it = solve_steady(&p).unwrap();
        let red = solve_steady_by_reduction(&p).unwrap();
        let scale = it.sigma.amax().max(1.0);
        assert!((&it.sigma - &red.sigma).amax() <= 1e-8 * scale);
        assert!((it.ke - 2.0 * r * r * 2.0 * r * r).abs() < 1e-6 * it.ke);
        assert_eq!(it.rank, 3);
    }

    #[test]
    fn decoupled_reduction_is_block_diagonal() {
        let a = companion_form(-2.0, &[-0.887]);
        let f = DMatrix::from_element(1, 1, 0.5);
        let g = DMatrix::zeros(1, 1);
        let h = DMatrix::from_element(1, 1, 0.3);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let p = AugmentedPlant::from_blocks(&a, &c, &f, &g, &h).unwrap();
        let sol = solve_steady_by_reduction(&p).unwrap();
        assert!(sol.sigma.row(2).amax() < 1e-14);
        assert!(sol.sigma.column(2).amax() < 1e-14);
    }

    #[test]
    fn innovation_filter_is_all_pass() {
        let p = isi3_plant(&companion_form(-2.0, &[-0.887]));
        let sol = solve_steady(&p).unwrap();
        let tf = innovation_filter(&p, &sol).unwrap();
        for k in 0..16 {
            let th = -0.5 + k as f64 / 16.0;
            let mag = frequency_response(&tf, th).unwrap().norm();
            assert!((mag - 2.0).abs() < 1e-6, "|T| = {mag}");
        }
    }

    #[test]
    fn trajectory_bookkeeping() {
        let p = scalar_plant(2.0);
        let tr = trajectory(&p, 3);
        assert_eq!(tr.sigmas.len(), 5);
        assert_eq!(tr.ke.len(), 4);
        assert_eq!(tr.horizon(), 3);
        assert_eq!(tr.ke[0], 2.0);
        assert!(tr.ke.iter().all(|&k| k >= 1.0));
    }
}
