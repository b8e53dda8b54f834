//! Random channels, encoders and finite-horizon configurations for the
//! property suites.
//!
//! Eigenvalue magnitudes are log-uniform on `[0.2, 0.9] U [1.1, 3]`, so
//! encoders mix stable and unstable modes and stay clear of the unit circle.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::{augment, validate, ChannelModel, ChannelSpec};
use crate::error::Result;
use crate::finite_horizon::GeneralCodingConfig;
use crate::riccati::AugmentedPlant;
use crate::statespace::eigen_spectrum;

const STABLE: (f64, f64) = (0.2, 0.9);
const UNSTABLE: (f64, f64) = (1.1, 3.0);
/// Minimum distance between encoder and channel eigenvalues.
const SEPARATION: f64 = 0.05;
const MAX_TRIES: usize = 1000;
/// Cap on `rho(A)^T` for finite-horizon configurations. The dense oracles
/// work with `Gamma = [C; ..; CA^T]` directly, and their rounding error grows
/// with the square of this dynamic range.
pub const GROWTH_CAP: f64 = 1e3;

fn log_uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// `k` eigenvalues as `(re, im)`; complex ones come in conjugate pairs.
fn sample_roots<R: Rng>(rng: &mut R, k: usize, bands: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut roots = Vec::with_capacity(k);
    while roots.len() < k {
        let band = bands[rng.random_range(0..bands.len())];
        let r = log_uniform(rng, band);
        if k - roots.len() >= 2 && rng.random_bool(0.3) {
            let angle = rng.random_range(0.3..2.8);
            roots.push((r * f64::cos(angle), r * f64::sin(angle)));
            roots.push((r * f64::cos(angle), -r * f64::sin(angle)));
        } else {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            roots.push((sign * r, 0.0));
        }
    }
    roots
}

/// Real block-diagonal matrix with the given spectrum.
fn real_form(roots: &[(f64, f64)]) -> DMatrix<f64> {
    let k = roots.len();
    let mut d = DMatrix::zeros(k, k);
    let mut i = 0;
    while i < k {
        let (re, im) = roots[i];
        if im != 0.0 {
            d[(i, i)] = re;
            d[(i + 1, i + 1)] = re;
            d[(i, i + 1)] = -im.abs();
            d[(i + 1, i)] = im.abs();
            i += 2;
        } else {
            d[(i, i)] = re;
            i += 1;
        }
    }
    d
}

fn random_orthogonal<R: Rng>(rng: &mut R, k: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(k, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    g.qr().q()
}

/// Coefficients of `prod (1 - r z^-1)` in ascending powers of `z^-1`.
fn monic_poly(roots: &[(f64, f64)]) -> Vec<f64> {
    let mut p = vec![1.0];
    let mut i = 0;
    while i < roots.len() {
        let factor = if roots[i].1 != 0.0 {
            let (re, im) = roots[i];
            i += 2;
            vec![1.0, -2.0 * re, re * re + im * im]
        } else {
            i += 1;
            vec![1.0, -roots[i - 1].0]
        };
        let mut q = vec![0.0; p.len() + factor.len() - 1];
        for (a, x) in p.iter().enumerate() {
            for (b, y) in factor.iter().enumerate() {
                q[a + b] += x * y;
            }
        }
        p = q;
    }
    p
}

/// Stable minimum-phase channel of order `m` with poles and zeros of `Z^-1`
/// in the stable band.
pub fn random_channel<R: Rng>(rng: &mut R, m: usize) -> ChannelModel {
    if m == 0 {
        return ChannelModel::awgn();
    }
    for _ in 0..MAX_TRIES {
        let den = monic_poly(&sample_roots(rng, m, &[STABLE]));
        let num = monic_poly(&sample_roots(rng, m, &[STABLE]));
        if let Ok(ch) = validate(&ChannelSpec::Rational { num, den }) {
            if ch.order() == m {
                return ch;
            }
        }
    }
    unreachable!("random channels of order {m} are valid with probability one")
}

/// Encoder pair `(A, C)` of dimension `k` with at least `min_unstable`
/// unstable modes, spectrum separated from the channel's.
pub fn random_encoder<R: Rng>(
    rng: &mut R,
    k: usize,
    min_unstable: usize,
    channel: &ChannelModel,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let poles = eigen_spectrum(channel.f()).map(|s| s.eigenvalues).unwrap_or_default();
    for _ in 0..MAX_TRIES {
        let mut roots = sample_roots(rng, min_unstable.min(k), &[UNSTABLE]);
        roots.extend(sample_roots(rng, k - roots.len(), &[STABLE, UNSTABLE]));
        let clear = roots.iter().all(|&(re, im)| {
            poles
                .iter()
                .all(|p| ((p.re - re).powi(2) + (p.im - im).powi(2)).sqrt() > SEPARATION)
        });
        if !clear {
            continue;
        }
        let q = random_orthogonal(rng, k);
        let a = &q * real_form(&roots) * q.transpose();
        let c = DMatrix::from_fn(1, k, |_, _| rng.sample::<f64, _>(StandardNormal));
        if augment(channel, &a, &c).is_ok() {
            return (a, c);
        }
    }
    unreachable!("no admissible encoder found")
}

/// Augmented plant with random channel order `0..=m_max` and encoder
/// dimension `1..=k_max`, with at least one unstable encoder mode.
pub fn random_plant<R: Rng>(rng: &mut R, k_max: usize, m_max: usize) -> Result<AugmentedPlant> {
    let m = rng.random_range(0..=m_max);
    let channel = random_channel(rng, m);
    let k = rng.random_range(1..=k_max);
    let (a, c) = random_encoder(rng, k, 1, &channel);
    augment(&channel, &a, &c)
}

/// Configuration with `n <= n_max`, channel order `m <= m_max`,
/// `n <= T <= t_max` and `rho(A)^T <= GROWTH_CAP`.
pub fn random_config<R: Rng>(rng: &mut R, n_max: usize, m_max: usize, t_max: usize) -> GeneralCodingConfig {
    let m = rng.random_range(0..=m_max);
    let channel = random_channel(rng, m);
    random_config_on(rng, &channel, n_max, t_max)
}

pub fn random_config_on<R: Rng>(
    rng: &mut R,
    channel: &ChannelModel,
    n_max: usize,
    t_max: usize,
) -> GeneralCodingConfig {
    for _ in 0..MAX_TRIES {
        let n = rng.random_range(0..=n_max.min(t_max));
        let (a, c) = random_encoder(rng, n + 1, 0, channel);
        let rho = eigen_spectrum(&a).map_or(f64::INFINITY, |s| s.spectral_radius());
        let t_cap = if rho > 1.0 {
            ((GROWTH_CAP.ln() / rho.ln()).floor() as usize).min(t_max)
        } else {
            t_max
        };
        if t_cap < n {
            continue;
        }
        let t = rng.random_range(n..=t_cap);
        if let Ok(cfg) = GeneralCodingConfig::new(a, c, t, channel.clone()) {
            return cfg;
        }
    }
    unreachable!("no admissible configuration found")
}
