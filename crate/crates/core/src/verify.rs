//! Invariant suite behind the `verify` command: each check reports its
//! measured residual against a fixed tolerance.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::capacity::{design_objective, gm_capacity, power_for_rate, EncoderDesign};
use crate::channel::ChannelModel;
use crate::error::Result;
use crate::finite_horizon::{
    cp_convert, cp_convert_back, cp_input_covariance, cp_rate_bits, input_covariance, input_innovation_cross,
    innovation_covariance, input_power_with_estimator, mmse_fisher_crb,
    mutual_info_with_generator, optimal_feedback_generator, riccati_information_bits, GeneralCodingConfig,
};
use crate::random::{random_config_on, random_plant};
use crate::riccati::{
    innovation_filter, solve_steady_by_iteration, solve_steady_by_reduction, trajectory, DEFAULT_MAX_ITER,
    DEFAULT_TOL,
};
use crate::statespace::{eigen_spectrum, frequency_response};

const SUITE_SEED: u64 = 0x5eed_0f_c0de;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: &str, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            residual,
            tolerance,
            passed: residual <= tolerance,
        }
    }

    fn failed(name: &str, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            residual: f64::INFINITY,
            tolerance,
            passed: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    /// Adds the grid-search optimizer oracle and the GM cross-check.
    pub full: bool,
    /// Perturbs the iteration solution before the two-path comparison; used
    /// to check that the harness reports failures.
    pub inject_fault: bool,
    pub random_cases: usize,
}

impl VerifyOptions {
    pub fn quick() -> Self {
        Self {
            full: false,
            inject_fault: false,
            random_cases: 10,
        }
    }

    pub fn full() -> Self {
        Self {
            full: true,
            random_cases: 20,
            ..Self::quick()
        }
    }
}

fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / a.amax().max(b.amax()).max(1.0)
}

/// Largest pairwise spread of a list of values.
fn spread(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

fn logdet(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .cholesky()
        .map_or(f64::NAN, |c| 2.0 * c.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// Strictly causal estimator from the normal equations: row `t` regresses
/// `r_t` on `ybar_0..ybar_{t-1}`.
fn normal_equation_estimator(cfg: &GeneralCodingConfig) -> DMatrix<f64> {
    let size = cfg.horizon() + 1;
    let gamma = cfg.gamma();
    let zg = cfg.z_inv() * &gamma;
    let kry = &gamma * zg.transpose();
    let kyy = &zg * zg.transpose() + DMatrix::identity(size, size);
    let mut g = DMatrix::zeros(size, size);
    for t in 1..size {
        let k = kyy.view((0, 0), (t, t)).into_owned();
        let rhs = kry.view((t, 0), (1, t)).transpose();
        if let Some(x) = k.cholesky().map(|c| c.solve(&rhs)) {
            g.view_mut((t, 0), (1, t)).copy_from(&x.transpose());
        }
    }
    g
}

fn finite_horizon_checks(channel: &ChannelModel, cases: usize, checks: &mut Vec<Check>) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED);
    let (mut chain, mut power, mut white, mut orth, mut indep, mut cp, mut cp_rate, mut opt) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for case in 0..cases {
        let cfg = random_config_on(&mut rng, channel, 2, 20);
        let rep = mmse_fisher_crb(&cfg)?;
        let ln2 = std::f64::consts::LN_2;
        let five = [
            rep.mutual_info_bits,
            riccati_information_bits(&cfg)?,
            0.5 * logdet(&rep.fisher_w) / ln2,
            -0.5 * logdet(&rep.mmse_w) / ln2,
            -0.5 * logdet(&rep.crb_w) / ln2,
        ];
        chain = chain.max(spread(&five));
        let plant = cfg.plant()?;
        let riccati_power = trajectory(&plant, cfg.horizon()).average_power(&plant);
        power = power.max((riccati_power - rep.input_power).abs());

        let ke = innovation_covariance(&cfg)?;
        let size = cfg.horizon() + 1;
        for i in 0..size {
            for j in 0..size {
                if i != j {
                    white = white.max(ke[(i, j)].abs());
                }
            }
        }
        let cross = input_innovation_cross(&cfg)?;
        for t in 0..size {
            for tau in 0..t {
                orth = orth.max(cross[(t, tau)].abs());
            }
        }

        let mut g = DMatrix::zeros(size, size);
        for i in 1..size {
            for j in 0..i {
                g[(i, j)] = 0.1 * ((case * 31 + i * 7 + j * 3) as f64).sin();
            }
        }
        indep = indep.max((mutual_info_with_generator(&cfg, &g)? - rep.mutual_info_bits).abs());

        let (g_star, g_hat) = optimal_feedback_generator(&cfg)?;
        let kalman = input_power_with_estimator(&cfg, &g_hat)?;
        let ne = input_power_with_estimator(&cfg, &normal_equation_estimator(&cfg))?;
        opt = opt.max((kalman - ne).abs());
        let direct = input_covariance(&cfg, &g_star)?.trace() / size as f64;
        opt = opt.max((direct - kalman).abs());

        let (k_r, b) = cp_convert(&cfg, &g)?;
        cp_rate = cp_rate.max((cp_rate_bits(channel, &k_r)? - rep.mutual_info_bits).abs());
        if cfg.dim() == size {
            let (back, g_back) = cp_convert_back(channel, &k_r, &b)?;
            let ku = input_covariance(&cfg, &g)?;
            cp = cp.max(rel_diff(&ku, &input_covariance(&back, &g_back)?));
            cp = cp.max(rel_diff(&ku, &cp_input_covariance(channel, &k_r, &b)?));
        } else {
            let ku = input_covariance(&cfg, &g)?;
            cp = cp.max(rel_diff(&ku, &cp_input_covariance(channel, &k_r, &b)?));
        }
    }
    checks.push(Check::new("finite-horizon information chain", chain, 1e-8));
    checks.push(Check::new("finite-horizon power identity", power, 1e-8));
    checks.push(Check::new("innovation whiteness", white, 1e-9));
    checks.push(Check::new("input/innovation orthogonality", orth, 1e-10));
    checks.push(Check::new("information independent of generator", indep, 1e-10));
    checks.push(Check::new("optimal generator vs normal equations", opt, 1e-8));
    checks.push(Check::new("channel-input parametrization round trip", cp, 1e-8));
    checks.push(Check::new("channel-input parametrization rate", cp_rate, 1e-8));
    Ok(())
}

fn design_checks(channel: &ChannelModel, design: &EncoderDesign, opts: &VerifyOptions, checks: &mut Vec<Check>) -> Result<()> {
    let plant = design.plant()?;
    checks.push(Check::new(
        "steady rate identity",
        (0.5 * (design.ke).log2() - design.rate).abs().max((design.ke - (2.0 * design.rate).exp2()).abs()),
        1e-6,
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED ^ 1);
    let mut worst = 0.0f64;
    let mut plants = vec![plant.clone()];
    for _ in 0..opts.random_cases {
        plants.push(random_plant(&mut rng, 3, 3)?);
    }
    for (i, p) in plants.iter().enumerate() {
        let it = solve_steady_by_iteration(p, DEFAULT_TOL, DEFAULT_MAX_ITER);
        let red = solve_steady_by_reduction(p);
        match (it, red) {
            (Ok(mut a), Ok(b)) => {
                if opts.inject_fault && i == 0 {
                    a.sigma[(0, 0)] *= 1.0 + 1e-6;
                }
                worst = worst.max(rel_diff(&a.sigma, &b.sigma));
            }
            _ => worst = f64::INFINITY,
        }
    }
    checks.push(Check::new("Riccati iteration vs reduction", worst, 1e-8));

    let sol = solve_steady_by_reduction(&plant)?;
    let filter = innovation_filter(&plant, &sol)?;
    let di: f64 = eigen_spectrum(&design.a_star)?.unstable().map(|z| z.norm()).product();
    let flat = (0..128)
        .map(|k| frequency_response(&filter, 2.0 * PI * (k as f64 + 0.5) / 128.0).map(|h| (h.norm() - di).abs()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    checks.push(Check::new("innovation filter all-pass", flat, 1e-6));
    let grid = 4096;
    let bode = (0..grid)
        .map(|k| frequency_response(&filter, 2.0 * PI * (k as f64 + 0.5) / grid as f64).map(|h| h.norm().ln()))
        .collect::<Result<Vec<_>>>()?
        .iter()
        .sum::<f64>()
        / grid as f64;
    checks.push(Check::new("Bode integral", (bode - di.ln()).abs(), 1e-3));

    if opts.full {
        checks.push(grid_search_check(channel, design));
        if channel.order() > 0 {
            match gm_capacity(channel, design.power, 8) {
                Ok(gm) => checks.push(Check::new("GM cross-oracle rate", (gm.rate - design.rate).abs(), 3e-3)),
                Err(_) => checks.push(Check::failed("GM cross-oracle rate", 3e-3)),
            }
        }
    }
    Ok(())
}

/// Dense scan of the companion parameters; the optimizer must not be beaten
/// by any grid point by more than `1e-6`.
fn grid_search_check(channel: &ChannelModel, design: &EncoderDesign) -> Check {
    let name = "optimizer vs grid search";
    let n = design.n_star;
    let steps: usize = match n {
        0 => 1,
        1 => 4001,
        2 => 161,
        _ => return Check::new(name, 0.0, 1e-6),
    };
    let mut best = f64::INFINITY;
    for sign in [1.0, -1.0] {
        for idx in 0..steps.pow(n as u32) {
            let mut rest = idx;
            let a_f: Vec<f64> = (0..n)
                .map(|_| {
                    let k = rest % steps;
                    rest /= steps;
                    -4.0 + 8.0 * k as f64 / (steps - 1) as f64
                })
                .collect();
            best = best.min(design_objective(channel, design.rate, sign, &a_f));
        }
    }
    Check::new(name, (design.power - best).max(0.0), 1e-6)
}

/// Runs the suite on `channel` with its rate-one design.
pub fn run_suite(channel: &ChannelModel, opts: &VerifyOptions) -> Vec<Check> {
    let mut checks = Vec::new();
    match power_for_rate(channel, 1.0) {
        Ok(design) => {
            if design_checks(channel, &design, opts, &mut checks).is_err() {
                checks.push(Check::failed("design checks", 0.0));
            }
        }
        Err(_) => checks.push(Check::failed("rate-one design", 0.0)),
    }
    if finite_horizon_checks(channel, opts.random_cases, &mut checks).is_err() {
        checks.push(Check::failed("finite-horizon checks", 0.0));
    }
    checks
}

/// Fixed-width table, one line per check.
pub fn format_table(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
    let mut out = format!("{:<width$}  {:>12}  {:>9}  result\n", "check", "residual", "tol");
    for c in checks {
        out.push_str(&format!(
            "{:<width$}  {:>12.3e}  {:>9.1e}  {}\n",
            c.name,
            c.residual,
            c.tolerance,
            if c.passed { "pass" } else { "FAIL" }
        ));
    }
    out
}
