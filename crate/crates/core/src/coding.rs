//! Executable encoder/decoder loop, the digital codebook, and the
//! closed-form error and distortion predictors.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::capacity::EncoderDesign;
use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::riccati::{initial_condition, trajectory};

/// Gains used by the decoder-side filters of the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GainSchedule {
    /// Steady-state `L1*, L2*` from `t = 0`.
    #[default]
    Steady,
    /// Gains of the Riccati trajectory started at `Sigma_0`.
    TimeVarying,
}

/// Error covariance of `xhat_{0,t}` when the decoder runs the time-varying
/// Kalman gains: `A^{-t-1} Sigma_{x,t+1} A'^{-t-1}`.
pub fn analog_mse(design: &EncoderDesign, t: usize) -> Result<DMatrix<f64>> {
    let plant = design.plant()?;
    let tr = trajectory(&plant, t);
    let k = design.n_star + 1;
    let sigma_x = tr.sigmas[t + 1].view((0, 0), (k, k)).into_owned();
    let a_inv = inverse(&design.a_star)?;
    let p = a_inv.pow((t + 1) as u32);
    let m = &p * sigma_x * p.transpose();
    Ok((&m + m.transpose()) * 0.5)
}

/// Error covariance of `xhat_{0,t}` when the decoder runs the steady gains
/// from `t = 0`, propagated exactly:
/// `S_{k+1} = (AA - L CC) S_k (AA - L CC)' + L L'` from `Sigma_0`.
pub fn steady_gain_mse(design: &EncoderDesign, t: usize) -> Result<DMatrix<f64>> {
    let plant = design.plant()?;
    let l = design.gain();
    let closed = plant.a_bb() - &l * plant.c_bb();
    let ll = &l * l.transpose();
    let mut s = initial_condition(plant.n(), plant.m());
    for _ in 0..=t {
        s = &closed * s * closed.transpose() + &ll;
    }
    let k = design.n_star + 1;
    let p = inverse(&design.a_star)?.pow((t + 1) as u32);
    let m = &p * s.view((0, 0), (k, k)) * p.transpose();
    Ok((&m + m.transpose()) * 0.5)
}

/// MSE predictor matching the gains the loop runs.
pub fn predicted_mse(design: &EncoderDesign, t: usize, schedule: GainSchedule) -> Result<DMatrix<f64>> {
    match schedule {
        GainSchedule::Steady => steady_gain_mse(design, t),
        GainSchedule::TimeVarying => analog_mse(design, t),
    }
}

fn inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    a.clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("encoder matrix A".into()))
}

/// Standard Gaussian tail `Q(x) = P(N > x)`.
pub fn gaussian_tail(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// `PE_T = 1 - prod_i (1 - 2 Q(sigma_{T,i}^{-eps} / 2))`.
pub fn theoretical_pe(design: &EncoderDesign, horizon: usize, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    let (sigmas, _) = sorted_modes(&analog_mse(design, horizon)?);
    Ok(pe_from_sigmas(&sigmas, epsilon))
}

/// Evaluated as `-expm1(sum ln(1 - 2Q))` so that tiny error probabilities
/// keep their relative accuracy.
pub fn pe_from_sigmas(sigmas: &[f64], epsilon: f64) -> f64 {
    let log_keep: f64 = sigmas
        .iter()
        .map(|&s| (-2.0 * gaussian_tail(s.powf(-epsilon) / 2.0)).ln_1p())
        .sum();
    (-log_keep.exp_m1()).clamp(0.0, 1.0)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {epsilon}")))
    }
}

/// Square roots of the eigenvalues of a PSD matrix in descending order, with
/// orthonormal eigenvectors whose largest-magnitude entry is positive.
fn sorted_modes(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let k = m.nrows();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut basis = DMatrix::zeros(k, k);
    let mut sigmas = Vec::with_capacity(k);
    for (j, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        let pivot = v.iamax();
        if v[pivot] < 0.0 {
            v = -v;
        }
        basis.set_column(j, &v);
        sigmas.push(eig.eigenvalues[i].max(0.0).sqrt());
    }
    (sigmas, basis)
}

/// Partition of the unit hypercube spanned by the error eigenbasis.
///
/// Message indices are mixed-radix, row-major over the cell multi-index:
/// mode 0 is the most significant digit.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub horizon: usize,
    pub epsilon: f64,
    /// Columns `e_0..e_n`, ordered by decreasing `sigma`.
    pub eig_basis: DMatrix<f64>,
    pub sigmas: Vec<f64>,
    pub segments_per_side: Vec<u64>,
    pub size: u128,
    /// Rate of the design the book was built for, bits per use.
    pub design_rate: f64,
}

/// Serialized summary of a codebook.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookSummary {
    #[serde(rename = "T")]
    pub horizon: usize,
    pub epsilon: f64,
    #[serde(rename = "M_T")]
    pub size: String,
    pub rate_actual: f64,
    pub sigmas: Vec<f64>,
    pub segments_per_side: Vec<u64>,
    /// `(1 - eps) * rate - rate_actual`; nonnegative when the floor is the
    /// only loss.
    pub rate_margin: f64,
}

pub fn build_codebook(design: &EncoderDesign, horizon: usize, epsilon: f64) -> Result<Codebook> {
    check_epsilon(epsilon)?;
    let (sigmas, basis) = sorted_modes(&analog_mse(design, horizon)?);
    let mut segments = Vec::with_capacity(sigmas.len());
    let mut size: u128 = 1;
    for (mode, &sigma) in sigmas.iter().enumerate() {
        if !(sigma < 1.0) {
            return Err(Error::HorizonTooShort {
                horizon,
                epsilon,
                mode,
                sigma,
            });
        }
        let k = sigma.powf(-(1.0 - epsilon)).floor();
        if !(k < u64::MAX as f64) {
            return Err(Error::CodebookOverflow(horizon));
        }
        let k = (k as u64).max(1);
        size = size.checked_mul(k as u128).ok_or(Error::CodebookOverflow(horizon))?;
        segments.push(k);
    }
    Ok(Codebook {
        horizon,
        epsilon,
        eig_basis: basis,
        sigmas,
        segments_per_side: segments,
        size,
        design_rate: design.rate,
    })
}

impl Codebook {
    pub fn dim(&self) -> usize {
        self.sigmas.len()
    }

    /// `log2 M_T / (T + 1)`.
    pub fn rate_actual(&self) -> f64 {
        self.segments_per_side.iter().map(|&k| (k as f64).log2()).sum::<f64>() / (self.horizon + 1) as f64
    }

    pub fn summary(&self) -> CodebookSummary {
        let rate_actual = self.rate_actual();
        CodebookSummary {
            horizon: self.horizon,
            epsilon: self.epsilon,
            size: self.size.to_string(),
            rate_actual,
            sigmas: self.sigmas.clone(),
            segments_per_side: self.segments_per_side.clone(),
            rate_margin: (1.0 - self.epsilon) * self.design_rate - rate_actual,
        }
    }

    pub fn multi_index(&self, index: u128) -> Result<Vec<u64>> {
        if index >= self.size {
            return Err(Error::IndexOutOfRange {
                index,
                size: self.size,
            });
        }
        let mut rest = index;
        let mut digits = vec![0; self.dim()];
        for (d, &k) in digits.iter_mut().zip(&self.segments_per_side).rev() {
            *d = (rest % k as u128) as u64;
            rest /= k as u128;
        }
        Ok(digits)
    }

    pub fn flat_index(&self, digits: &[u64]) -> u128 {
        digits
            .iter()
            .zip(&self.segments_per_side)
            .fold(0u128, |acc, (&d, &k)| acc * k as u128 + d as u128)
    }

    /// Center of cell `index`: `sum_i alpha_i e_i`, `alpha_i in [-1/2, 1/2]`.
    pub fn encode_message(&self, index: u128) -> Result<DVector<f64>> {
        let digits = self.multi_index(index)?;
        let alpha = DVector::from_iterator(
            self.dim(),
            digits
                .iter()
                .zip(&self.segments_per_side)
                .map(|(&d, &k)| (d as f64 + 0.5) / k as f64 - 0.5),
        );
        Ok(&self.eig_basis * alpha)
    }

    /// Nearest center. Coordinates outside the cube fall into the boundary
    /// cell; a point on a cell face goes to the lower digit.
    pub fn decode_message(&self, x_hat: &DVector<f64>) -> Result<u128> {
        if x_hat.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "estimate has length {}, codebook dimension is {}",
                x_hat.len(),
                self.dim()
            )));
        }
        let alpha = self.eig_basis.transpose() * x_hat;
        let digits: Vec<u64> = alpha
            .iter()
            .zip(&self.segments_per_side)
            .map(|(&a, &k)| {
                let cell = ((a + 0.5) * k as f64).ceil() - 1.0;
                if cell.is_nan() {
                    0
                } else {
                    cell.clamp(0.0, (k - 1) as f64) as u64
                }
            })
            .collect();
        Ok(self.flat_index(&digits))
    }
}

/// Signals of one run of the loop.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionTrace {
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    /// Decoder estimates `xhat_{0,t}`, `t = 0..=T`.
    pub x_hat_0: Vec<DVector<f64>>,
    pub power_running_avg: Vec<f64>,
    /// Largest magnitude of any internal state or signal of the loop.
    pub max_abs_internal: f64,
}

impl TransmissionTrace {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn final_estimate(&self) -> &DVector<f64> {
        self.x_hat_0.last().expect("trace covers at least one use")
    }

    /// Columns `t, u, y, power_avg, x_hat_0_0, ..`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let k = self.x_hat_0.first().map_or(0, |x| x.len());
        let mut header = vec!["t".to_string(), "u".into(), "y".into(), "power_avg".into()];
        header.extend((0..k).map(|i| format!("x_hat_0_{i}")));
        w.write_record(&header)?;
        for t in 0..self.len() {
            let mut row = vec![
                t.to_string(),
                self.u[t].to_string(),
                self.y[t].to_string(),
                self.power_running_avg[t].to_string(),
            ];
            row.extend(self.x_hat_0[t].iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Precomputed bounded loop for a design and horizon.
///
/// The transmitter keeps the estimation error `xtilde_t = x_t - xhat_t`
/// instead of `x_t` itself, starting from `xtilde_0 = W`. Its dynamics
/// `xtilde_{t+1} = A xtilde_t - L1 e_t` together with the channel state and
/// the decoder copy `shat` form the stabilized closed loop, so every signal
/// stays bounded. The receiver accumulates
/// `xhat_{0,t} = xhat_{0,t-1} + A^{-t-1} L1 e_t`, which equals
/// `A^{-t-1} xhat_{t+1}` without forming the growing `xhat`.
#[derive(Debug, Clone)]
pub struct Scheme {
    a: DMatrix<f64>,
    c: DVector<f64>,
    f: DMatrix<f64>,
    g: DVector<f64>,
    h: DVector<f64>,
    l1: Vec<DVector<f64>>,
    l2: Vec<DVector<f64>>,
    /// `A^{-t-1} L1_t`.
    back_gain: Vec<DVector<f64>>,
    horizon: usize,
}

impl Scheme {
    pub fn new(design: &EncoderDesign, horizon: usize, schedule: GainSchedule) -> Result<Self> {
        let k = design.n_star + 1;
        let channel = &design.channel;
        let m = channel.order();
        if design.a_star.shape() != (k, k) || design.l1.len() != k || design.l2.len() != m {
            return Err(Error::Dimension("design and channel orders disagree".into()));
        }
        let (l1, l2): (Vec<_>, Vec<_>) = match schedule {
            GainSchedule::Steady => (vec![design.l1.clone()], vec![design.l2.clone()]),
            GainSchedule::TimeVarying => trajectory(&design.plant()?, horizon)
                .gains
                .iter()
                .map(|l| (l.rows(0, k).into_owned(), l.rows(k, m).into_owned()))
                .unzip(),
        };
        let a_inv = inverse(&design.a_star)?;
        let mut pow = a_inv.clone();
        let mut back_gain = Vec::with_capacity(horizon + 1);
        for t in 0..=horizon {
            back_gain.push(&pow * &l1[t.min(l1.len() - 1)]);
            pow = &a_inv * pow;
        }
        Ok(Self {
            a: design.a_star.clone(),
            c: design.c_star.row(0).transpose(),
            f: channel.f().clone(),
            g: channel.g().column(0).into_owned(),
            h: channel.h().row(0).transpose(),
            l1,
            l2,
            back_gain,
            horizon,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn gains(&self, t: usize) -> (&DVector<f64>, &DVector<f64>) {
        let i = t.min(self.l1.len() - 1);
        (&self.l1[i], &self.l2[i])
    }

    /// Runs uses `0..=T` with channel noise `noise[t]`, channel state `s_0 = 0`.
    pub fn run(&self, w: &DVector<f64>, noise: &[f64]) -> Result<TransmissionTrace> {
        let k = self.dim();
        if w.len() != k {
            return Err(Error::Dimension(format!("message has length {}, expected {k}", w.len())));
        }
        let len = self.horizon + 1;
        if noise.len() < len {
            return Err(Error::Dimension(format!(
                "noise has length {}, need at least {len}",
                noise.len()
            )));
        }
        let m = self.f.nrows();
        let mut x_tilde = w.clone();
        let mut s = DVector::zeros(m);
        let mut s_hat = DVector::zeros(m);
        let mut x0 = DVector::zeros(k);
        let mut trace = TransmissionTrace {
            u: Vec::with_capacity(len),
            y: Vec::with_capacity(len),
            x_hat_0: Vec::with_capacity(len),
            power_running_avg: Vec::with_capacity(len),
            max_abs_internal: 0.0,
        };
        let mut energy = 0.0;
        let mut peak: f64 = 0.0;
        for (t, &n) in noise.iter().take(len).enumerate() {
            let (l1, l2) = self.gains(t);
            let u = self.c.dot(&x_tilde);
            let y = self.h.dot(&s) + u + n;
            let e = y - self.h.dot(&s_hat);
            s = &self.f * s + &self.g * u;
            s_hat = &self.f * s_hat + l2 * e;
            x_tilde = &self.a * x_tilde - l1 * e;
            x0 += &self.back_gain[t] * e;

            energy += u * u;
            peak = peak
                .max(u.abs())
                .max(e.abs())
                .max(x_tilde.amax())
                .max(s.amax())
                .max(s_hat.amax());
            trace.u.push(u);
            trace.y.push(y);
            trace.x_hat_0.push(x0.clone());
            trace.power_running_avg.push(energy / (t + 1) as f64);
        }
        trace.max_abs_internal = peak;
        Ok(trace)
    }
}

/// Bounded loop with steady-state gains; see [`Scheme`].
pub fn run_transmission(
    design: &EncoderDesign,
    channel: &ChannelModel,
    w: &DVector<f64>,
    horizon: usize,
    noise: &[f64],
) -> Result<TransmissionTrace> {
    if channel != &design.channel {
        return Err(Error::Dimension("design was built for a different channel".into()));
    }
    Scheme::new(design, horizon, GainSchedule::Steady)?.run(w, noise)
}

/// Trace of the loop in its original form, where the encoder runs
/// `x_{t+1} = A x_t` from `x_0 = W` and sends `u_t = C x_t - C xhat_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnmodifiedTrace {
    pub trace: TransmissionTrace,
    /// Encoder output `r_t = C A^t W`.
    pub r: Vec<f64>,
}

pub fn run_unmodified(design: &EncoderDesign, w: &DVector<f64>, horizon: usize, noise: &[f64]) -> Result<UnmodifiedTrace> {
    let k = design.n_star + 1;
    if w.len() != k {
        return Err(Error::Dimension(format!("message has length {}, expected {k}", w.len())));
    }
    if noise.len() < horizon + 1 {
        return Err(Error::Dimension(format!("noise has length {}, need {}", noise.len(), horizon + 1)));
    }
    let a = &design.a_star;
    let a_inv = inverse(a)?;
    let c = design.c_star.row(0).transpose();
    let ch = &design.channel;
    let (f, g, h) = (ch.f(), ch.g().column(0).into_owned(), ch.h().row(0).transpose());
    let m = ch.order();
    let mut x = w.clone();
    let mut x_hat = DVector::zeros(k);
    let mut s = DVector::zeros(m);
    let mut s_hat = DVector::zeros(m);
    let mut back = a_inv.clone();
    let mut out = UnmodifiedTrace {
        trace: TransmissionTrace {
            u: Vec::new(),
            y: Vec::new(),
            x_hat_0: Vec::new(),
            power_running_avg: Vec::new(),
            max_abs_internal: 0.0,
        },
        r: Vec::new(),
    };
    let mut energy = 0.0;
    let mut peak: f64 = 0.0;
    for (t, &n) in noise.iter().take(horizon + 1).enumerate() {
        let r = c.dot(&x);
        let u = r - c.dot(&x_hat);
        let y = h.dot(&s) + u + n;
        let e = y - h.dot(&s_hat);
        s = f * s + &g * u;
        s_hat = f * s_hat + &design.l2 * e;
        x_hat = a * x_hat + &design.l1 * e;
        x = a * x;
        energy += u * u;
        peak = peak.max(r.abs()).max(x.amax()).max(x_hat.amax());
        out.r.push(r);
        out.trace.u.push(u);
        out.trace.y.push(y);
        out.trace.x_hat_0.push(&back * &x_hat);
        out.trace.power_running_avg.push(energy / (t + 1) as f64);
        back = &a_inv * back;
    }
    out.trace.max_abs_internal = peak;
    Ok(out)
}
