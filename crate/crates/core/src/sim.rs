//! Seeded Monte Carlo over the coding loop.
//!
//! Every trial draws its own noise from a ChaCha8 generator keyed by
//! `(seed, trial)`: the 64-bit seed fixes the key and the trial index selects
//! the stream, so results do not depend on scheduling. Gaussian samples come
//! from `rand_distr::StandardNormal` (ziggurat transform). Trials are summed
//! in fixed chunks in index order, which keeps outputs bit-identical for any
//! thread count.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::EncoderDesign;
use crate::coding::{build_codebook, pe_from_sigmas, predicted_mse, Codebook, GainSchedule, Scheme};
use crate::error::{Error, Result};

/// Default cap on simulated channel uses per run.
pub const DEFAULT_BUDGET: u64 = 2_000_000_000;

/// Trials per deterministic reduction chunk.
const CHUNK: usize = 256;

/// Below this many errors the binomial error bar switches to Wilson.
const WILSON_BELOW: u64 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimMode {
    Digital,
    Analog,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub trials: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub mode: SimMode,
    /// Analog mode only: fixed message instead of `N(0, I)` draws.
    #[serde(default)]
    pub w_fixed: Option<Vec<f64>>,
    /// Multiplies every noise sample; `0` gives noiseless runs.
    #[serde(default = "one")]
    pub noise_scale: f64,
    #[serde(default)]
    pub schedule: GainSchedule,
    /// Analog mode: horizons at which the MSE is reported.
    #[serde(default)]
    pub mse_checkpoints: Vec<usize>,
    #[serde(default = "default_budget")]
    pub budget: u64,
}

fn one() -> f64 {
    1.0
}

fn default_budget() -> u64 {
    DEFAULT_BUDGET
}

impl SimConfig {
    pub fn digital(trials: usize, horizon: usize, epsilon: f64, seed: u64) -> Self {
        Self {
            trials,
            horizon,
            epsilon,
            seed,
            mode: SimMode::Digital,
            w_fixed: None,
            noise_scale: 1.0,
            schedule: GainSchedule::Steady,
            mse_checkpoints: Vec::new(),
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn analog(trials: usize, horizon: usize, seed: u64) -> Self {
        Self {
            mode: SimMode::Analog,
            epsilon: 0.0,
            ..Self::digital(trials, horizon, 0.0, seed)
        }
    }

    fn validate(&self, design: &EncoderDesign) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if !self.noise_scale.is_finite() || self.noise_scale < 0.0 {
            return Err(Error::InvalidArgument("noise scale must be finite and nonnegative".into()));
        }
        if let Some(w) = &self.w_fixed {
            if w.len() != design.n_star + 1 {
                return Err(Error::Dimension(format!(
                    "fixed message has length {}, design needs {}",
                    w.len(),
                    design.n_star + 1
                )));
            }
        }
        if let Some(&t) = self.mse_checkpoints.iter().find(|&&t| t > self.horizon) {
            return Err(Error::InvalidArgument(format!("MSE checkpoint {t} exceeds T = {}", self.horizon)));
        }
        Ok(())
    }
}

/// Empirical and predicted error probability at one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeRow {
    #[serde(rename = "T")]
    pub horizon: usize,
    pub pe_emp: f64,
    pub pe_emp_sigma: f64,
    pub pe_theory: f64,
}

/// Empirical MSE matrix of `xhat_{0,t}` against the predictor for the gain
/// schedule in use, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseRow {
    pub t: usize,
    pub det_emp: f64,
    pub trace_emp: f64,
    pub det_theory: f64,
    pub trace_theory: f64,
    pub entries: Vec<f64>,
    /// Standard error of each entry of `entries`.
    pub entries_se: Vec<f64>,
    pub entries_theory: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub config: SimConfig,
    pub design_power: f64,
    /// Digital mode: one row per checkpoint horizon.
    pub pe: Vec<PeRow>,
    /// Error counts matching `pe`.
    pub errors: Vec<u64>,
    /// Trial mean of the running power average, `t = 0..=T`.
    pub avg_power_trace: Vec<f64>,
    /// Analog mode: `(1/trials) sum |W - xhat_{0,t}|^2` for `t = 0..=T`.
    pub sq_error_trace: Vec<f64>,
    pub mse: Vec<MseRow>,
}

/// Binomial standard deviation of `errors / trials`: normal approximation,
/// or the half-width of the one-sigma Wilson interval for few errors.
pub fn binomial_sigma(errors: u64, trials: u64) -> f64 {
    let n = trials as f64;
    let p = errors as f64 / n;
    if errors >= WILSON_BELOW {
        (p * (1.0 - p) / n).sqrt()
    } else {
        let z2 = 1.0;
        (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n)
    }
}

/// Noise generator of one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn noise_vec(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

fn chunked<T, F, M>(trials: usize, per_trial: F, merge: M, zero: T) -> T
where
    T: Send + Sync + Clone,
    F: Fn(usize) -> T + Sync,
    M: Fn(&mut T, T) + Sync,
{
    let chunks: Vec<T> = (0..trials.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = zero.clone();
            for i in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                merge(&mut acc, per_trial(i));
            }
            acc
        })
        .collect();
    let mut total = zero;
    for c in chunks {
        merge(&mut total, c);
    }
    total
}

fn add_into(acc: &mut [f64], x: &[f64]) {
    for (a, b) in acc.iter_mut().zip(x) {
        *a += b;
    }
}

/// Digital transmission: at every horizon `tau <= T` whose codebook is
/// buildable, each trial sends a uniform message from the `tau` book through
/// a loop of length `tau + 1` and decodes `xhat_{0,tau}`. The noise of a trial
/// is one stream shared by all horizons.
pub fn run_digital(design: &EncoderDesign, cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate(design)?;
    if cfg.mode != SimMode::Digital {
        return Err(Error::InvalidArgument("configuration is not in digital mode".into()));
    }
    // The final horizon must be buildable; shorter ones are skipped while
    // some mode still has sigma >= 1.
    let final_book = build_codebook(design, cfg.horizon, cfg.epsilon)?;
    let mut books: Vec<(usize, Codebook, Scheme)> = Vec::new();
    for tau in 0..cfg.horizon {
        if let Ok(book) = build_codebook(design, tau, cfg.epsilon) {
            books.push((tau, book, Scheme::new(design, tau, cfg.schedule)?));
        }
    }
    books.push((cfg.horizon, final_book, Scheme::new(design, cfg.horizon, cfg.schedule)?));

    let uses: u64 = books.iter().map(|(tau, ..)| *tau as u64 + 1).sum::<u64>() * cfg.trials as u64;
    if uses > cfg.budget {
        return Err(Error::Budget {
            needed: uses,
            budget: cfg.budget,
        });
    }

    let len = cfg.horizon + 1;
    let nb = books.len();
    let per_trial = |i: usize| -> Result<(Vec<u64>, Vec<f64>)> {
        let mut rng = trial_rng(cfg.seed, i as u64);
        let noise = noise_vec(&mut rng, len, cfg.noise_scale);
        let mut errors = vec![0u64; nb];
        let mut power = vec![0.0; len];
        for (j, (_, book, scheme)) in books.iter().enumerate() {
            let index = rng.random_range(0..book.size);
            let w = book.encode_message(index)?;
            let tr = scheme.run(&w, &noise)?;
            if book.decode_message(tr.final_estimate())? != index {
                errors[j] += 1;
            }
            if j == nb - 1 {
                power.copy_from_slice(&tr.power_running_avg);
            }
        }
        Ok((errors, power))
    };
    let (errors, power) = chunked(
        cfg.trials,
        per_trial,
        |acc: &mut Result<(Vec<u64>, Vec<f64>)>, x| {
            if let (Ok(a), Ok(b)) = (acc.as_mut(), &x) {
                for (e, f) in a.0.iter_mut().zip(&b.0) {
                    *e += f;
                }
                add_into(&mut a.1, &b.1);
            } else if acc.is_ok() {
                *acc = x;
            }
        },
        Ok((vec![0u64; nb], vec![0.0; len])),
    )?;

    let n = cfg.trials as u64;
    let pe = books
        .iter()
        .zip(&errors)
        .map(|((tau, book, _), &e)| PeRow {
            horizon: *tau,
            pe_emp: e as f64 / n as f64,
            pe_emp_sigma: binomial_sigma(e, n),
            pe_theory: pe_from_sigmas(&book.sigmas, cfg.epsilon),
        })
        .collect();
    Ok(SimResult {
        config: cfg.clone(),
        design_power: design.power,
        pe,
        errors,
        avg_power_trace: power.iter().map(|p| p / n as f64).collect(),
        sq_error_trace: Vec::new(),
        mse: Vec::new(),
    })
}

/// Analog transmission of `W ~ N(0, I)` (or `w_fixed`) over `T + 1` uses.
pub fn run_analog(design: &EncoderDesign, cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate(design)?;
    if cfg.mode != SimMode::Analog {
        return Err(Error::InvalidArgument("configuration is not in analog mode".into()));
    }
    let uses = cfg.trials as u64 * (cfg.horizon as u64 + 1);
    if uses > cfg.budget {
        return Err(Error::Budget {
            needed: uses,
            budget: cfg.budget,
        });
    }
    let scheme = Scheme::new(design, cfg.horizon, cfg.schedule)?;
    let k = design.n_star + 1;
    let len = cfg.horizon + 1;
    let checkpoints = cfg.mse_checkpoints.clone();
    let nc = checkpoints.len();

    // Accumulator layout: power[len] | sq_error[len] | products[nc*k*k] | squares[nc*k*k].
    let kk = k * k;
    let width = 2 * len + 2 * nc * kk;
    let per_trial = |i: usize| -> Result<Vec<f64>> {
        let mut rng = trial_rng(cfg.seed, i as u64);
        let noise = noise_vec(&mut rng, len, cfg.noise_scale);
        let w = match &cfg.w_fixed {
            Some(w) => DVector::from_column_slice(w),
            None => DVector::from_iterator(k, (0..k).map(|_| rng.sample::<f64, _>(StandardNormal))),
        };
        let tr = scheme.run(&w, &noise)?;
        let mut acc = vec![0.0; width];
        acc[..len].copy_from_slice(&tr.power_running_avg);
        for t in 0..len {
            acc[len + t] = (&w - &tr.x_hat_0[t]).norm_squared();
        }
        for (ci, &t) in checkpoints.iter().enumerate() {
            let e = &w - &tr.x_hat_0[t];
            for a in 0..k {
                for b in 0..k {
                    let v = e[a] * e[b];
                    acc[2 * len + ci * kk + a * k + b] = v;
                    acc[2 * len + nc * kk + ci * kk + a * k + b] = v * v;
                }
            }
        }
        Ok(acc)
    };
    let sums = chunked(
        cfg.trials,
        per_trial,
        |acc: &mut Result<Vec<f64>>, x| match (acc.as_mut(), &x) {
            (Ok(a), Ok(b)) => add_into(a, b),
            (Ok(_), Err(_)) => *acc = x,
            _ => {}
        },
        Ok(vec![0.0; width]),
    )?;

    let n = cfg.trials as f64;
    let mut mse = Vec::with_capacity(nc);
    for (ci, &t) in checkpoints.iter().enumerate() {
        let mean: Vec<f64> = sums[2 * len + ci * kk..2 * len + (ci + 1) * kk].iter().map(|s| s / n).collect();
        let se: Vec<f64> = sums[2 * len + nc * kk + ci * kk..2 * len + nc * kk + (ci + 1) * kk]
            .iter()
            .zip(&mean)
            .map(|(s2, m)| ((s2 / n - m * m).max(0.0) / (n - 1.0).max(1.0)).sqrt())
            .collect();
        let emp = DMatrix::from_row_slice(k, k, &mean);
        let theory = predicted_mse(design, t, cfg.schedule)?;
        mse.push(MseRow {
            t,
            det_emp: emp.determinant(),
            trace_emp: emp.trace(),
            det_theory: theory.determinant(),
            trace_theory: theory.trace(),
            entries: mean,
            entries_se: se,
            entries_theory: theory.transpose().iter().copied().collect(),
        });
    }
    Ok(SimResult {
        config: cfg.clone(),
        design_power: design.power,
        pe: Vec::new(),
        errors: Vec::new(),
        avg_power_trace: sums[..len].iter().map(|s| s / n).collect(),
        sq_error_trace: sums[len..2 * len].iter().map(|s| s / n).collect(),
        mse,
    })
}

pub fn run(design: &EncoderDesign, cfg: &SimConfig) -> Result<SimResult> {
    match cfg.mode {
        SimMode::Digital => run_digital(design, cfg),
        SimMode::Analog => run_analog(design, cfg),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PowerRow {
    t: usize,
    power_avg: f64,
    sq_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MseCsvRow {
    t: usize,
    det_emp: f64,
    trace_emp: f64,
    det_theory: f64,
    trace_theory: f64,
}

fn write_rows<R: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

impl SimResult {
    /// Writes `pe.csv` (`T,pe_emp,pe_emp_sigma,pe_theory`), `power.csv`
    /// (`t,power_avg,sq_error`), `mse.csv`
    /// (`t,det_emp,trace_emp,det_theory,trace_theory`) and `summary.json`
    /// (the whole result) into `dir`, creating it if needed.
    pub fn export(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_rows(dir.join("pe.csv").as_path(), &["T", "pe_emp", "pe_emp_sigma", "pe_theory"], &self.pe)?;
        write_rows(
            dir.join("power.csv").as_path(),
            &["t", "power_avg", "sq_error"],
            self.avg_power_trace.iter().enumerate().map(|(t, &p)| PowerRow {
                t,
                power_avg: p,
                sq_error: self.sq_error_trace.get(t).copied(),
            }),
        )?;
        write_rows(
            dir.join("mse.csv").as_path(),
            &["t", "det_emp", "trace_emp", "det_theory", "trace_theory"],
            self.mse.iter().map(|m| MseCsvRow {
                t: m.t,
                det_emp: m.det_emp,
                trace_emp: m.trace_emp,
                det_theory: m.det_theory,
                trace_theory: m.trace_theory,
            }),
        )?;
        std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read_summary(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json"))?)?)
    }
}

pub fn read_pe_csv(path: &Path) -> Result<Vec<PeRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows: std::result::Result<Vec<PeRow>, _> = r.deserialize().collect();
    Ok(rows?)
}

pub fn read_power_csv(path: &Path) -> Result<Vec<(usize, f64)>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows: std::result::Result<Vec<PowerRow>, _> = r.deserialize().collect();
    Ok(rows?.into_iter().map(|p| (p.t, p.power_avg)).collect())
}
