//! Channel descriptions, validation and the encoder/channel plant builder.
//!
//! A channel is stored through the inverse filter `Z^-1 = (F, G, H, 1)`:
//!
//! ```text
//! s+ = F s + G u
//! y  = H s + u + N
//! ```

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::riccati::AugmentedPlant;
use crate::statespace::{
    controllability_matrix, eigen_spectrum, frequency_response, matrix_from_rows, matrix_to_rows,
    numerical_rank, observability_matrix, toeplitz_of, StateSpaceSystem, ToeplitzOperator, RANK_TOL,
    TAU_CIRC,
};

const ISI3_JSON: &str = include_str!("../../../data/channels/isi3.json");

/// User-facing channel description, as read from a JSON channel file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ChannelSpec {
    /// Coefficients of `Z^-1` in ascending powers of `z^-1`.
    Rational { num: Vec<f64>, den: Vec<f64> },
    Statespace {
        #[serde(rename = "F")]
        f: Vec<Vec<f64>>,
        #[serde(rename = "G")]
        g: Vec<f64>,
        #[serde(rename = "H")]
        h: Vec<f64>,
        #[serde(rename = "D", default = "one")]
        d: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl ChannelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Realization `(F, G, H, D)` without any validation. Rational channels
    /// are realized in controller canonical form.
    pub fn realize(&self) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, f64)> {
        match self {
            ChannelSpec::Rational { num, den } => realize_rational(num, den),
            ChannelSpec::Statespace { f, g, h, d } => {
                let m = f.len();
                let f = matrix_from_rows(f, 0)?;
                if f.ncols() != m {
                    return Err(Error::InvalidChannel(format!("F must be square, got {}x{}", m, f.ncols())));
                }
                if g.len() != m || h.len() != m {
                    return Err(Error::InvalidChannel(format!(
                        "G and H must have length {m}, got {} and {}",
                        g.len(),
                        h.len()
                    )));
                }
                Ok((
                    f,
                    DMatrix::from_column_slice(m, 1, g),
                    DMatrix::from_row_slice(1, m, h),
                    *d,
                ))
            }
        }
    }
}

fn trim_trailing_zeros(v: &[f64]) -> &[f64] {
    let mut end = v.len();
    while end > 1 && v[end - 1] == 0.0 {
        end -= 1;
    }
    &v[..end]
}

fn realize_rational(num: &[f64], den: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, f64)> {
    if num.is_empty() || den.is_empty() {
        return Err(Error::InvalidChannel("numerator and denominator must be nonempty".into()));
    }
    if num.iter().chain(den).any(|x| !x.is_finite()) {
        return Err(Error::InvalidChannel("non-finite coefficient".into()));
    }
    let d0 = den[0];
    if d0 == 0.0 {
        return Err(Error::InvalidChannel("leading denominator coefficient is zero".into()));
    }
    let num = trim_trailing_zeros(num);
    let den = trim_trailing_zeros(den);
    let m = num.len().max(den.len()) - 1;
    let coef = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0) / d0;
    let d = coef(num, 0);
    let mut f = DMatrix::zeros(m, m);
    let mut h = DMatrix::zeros(1, m);
    for j in 0..m {
        f[(0, j)] = -coef(den, j + 1);
        h[(0, j)] = coef(num, j + 1) - coef(den, j + 1) * d;
    }
    for i in 1..m {
        f[(i, i - 1)] = 1.0;
    }
    let mut g = DMatrix::zeros(m, 1);
    if m > 0 {
        g[(0, 0)] = 1.0;
    }
    Ok((f, g, h, d))
}

/// A validated stable minimum-phase channel with unit feedthrough.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    inv_z: StateSpaceSystem,
    gain_normalized: bool,
}

impl Serialize for ChannelModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_spec().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ChannelModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = ChannelSpec::deserialize(d)?;
        validate(&spec).map_err(serde::de::Error::custom)
    }
}

impl ChannelModel {
    /// Memoryless unit channel `y = u + N`.
    pub fn awgn() -> Self {
        Self {
            inv_z: StateSpaceSystem::static_gain(DMatrix::from_element(1, 1, 1.0)),
            gain_normalized: false,
        }
    }

    /// The third-order ISI channel shipped with the crate.
    pub fn isi3() -> Self {
        let spec = ChannelSpec::from_json(ISI3_JSON).expect("bundled channel parses");
        validate(&spec).expect("bundled channel is valid")
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        validate(&ChannelSpec::from_file(path)?)
    }

    pub fn inv_z(&self) -> &StateSpaceSystem {
        &self.inv_z
    }

    pub fn order(&self) -> usize {
        self.inv_z.state_dim()
    }

    pub fn gain_normalized(&self) -> bool {
        self.gain_normalized
    }

    pub fn f(&self) -> &DMatrix<f64> {
        self.inv_z.a()
    }

    pub fn g(&self) -> &DMatrix<f64> {
        self.inv_z.b()
    }

    pub fn h(&self) -> &DMatrix<f64> {
        self.inv_z.c()
    }

    pub fn to_spec(&self) -> ChannelSpec {
        ChannelSpec::Statespace {
            f: matrix_to_rows(self.f()),
            g: self.g().column(0).iter().copied().collect(),
            h: self.h().row(0).iter().copied().collect(),
            d: self.inv_z.d()[(0, 0)],
        }
    }

    /// Finite-horizon operator of `Z^-1` on indices `0..=horizon`.
    pub fn inverse_toeplitz(&self, horizon: usize) -> Result<ToeplitzOperator> {
        toeplitz_of(&self.inv_z, horizon)
    }

    /// Finite-horizon operator of `Z` on indices `0..=horizon`.
    pub fn toeplitz(&self, horizon: usize) -> Result<ToeplitzOperator> {
        self.inverse_toeplitz(horizon)?.inverse()
    }

    /// `Z^-1(e^{j 2 pi theta})`.
    pub fn inverse_response(&self, theta: f64) -> Result<Complex64> {
        frequency_response(&self.inv_z, theta)
    }

    /// `Z(z)` at an arbitrary complex point.
    pub fn response_at(&self, z: Complex64) -> Result<Complex64> {
        let inv = self.inv_z.evaluate(z)?;
        if inv.norm() == 0.0 {
            return Err(Error::Pole { re: z.re, im: z.im });
        }
        Ok(inv.inv())
    }

    /// `|Z(e^{j 2 pi theta})|^2`.
    pub fn power_gain(&self, theta: f64) -> Result<f64> {
        Ok(1.0 / self.inverse_response(theta)?.norm_sqr())
    }
}

/// Normalizes the feedthrough to one and checks stability, minimum phase
/// and minimality.
pub fn validate(spec: &ChannelSpec) -> Result<ChannelModel> {
    let (f, g, mut h, d) = spec.realize()?;
    if !d.is_finite() || f.iter().chain(g.iter()).chain(h.iter()).any(|x| !x.is_finite()) {
        return Err(Error::InvalidChannel("non-finite entry".into()));
    }
    if d == 0.0 {
        return Err(Error::DegenerateChannel);
    }
    let gain_normalized = d != 1.0;
    h /= d;
    let m = f.nrows();
    if m > 0 {
        let sf = eigen_spectrum(&f)?;
        let rf = sf.spectral_radius();
        if rf >= 1.0 - TAU_CIRC {
            return Err(Error::UnstableChannel(rf));
        }
        let rz = eigen_spectrum(&(&f - &g * &h))?.spectral_radius();
        if rz >= 1.0 - TAU_CIRC {
            return Err(Error::NonMinimumPhase(rz));
        }
        let rank = numerical_rank(&controllability_matrix(&f, &g)?, RANK_TOL);
        if rank < m {
            return Err(Error::Uncontrollable { rank, order: m });
        }
        let rank = numerical_rank(&observability_matrix(&f, &h, m)?, RANK_TOL);
        if rank < m {
            return Err(Error::Unobservable { rank, order: m });
        }
    }
    let inv_z = StateSpaceSystem::new(f, g, h, DMatrix::from_element(1, 1, 1.0))?;
    Ok(ChannelModel {
        inv_z,
        gain_normalized,
    })
}

/// Same as [`validate`]; spelled out for call sites where the feedthrough is
/// known to differ from one.
pub fn normalize_gain(spec: &ChannelSpec) -> Result<ChannelModel> {
    validate(spec)
}

/// Builds the augmented plant for an encoder pair `(A, C)`.
///
/// `A` must have no eigenvalue on the unit circle and none shared with `F`.
pub fn augment(channel: &ChannelModel, a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<AugmentedPlant> {
    let sa = eigen_spectrum(a)?;
    if let Some(z) = sa.eigenvalues.iter().find(|z| (z.norm() - 1.0).abs() <= TAU_CIRC) {
        return Err(Error::UnitCircle(z.norm()));
    }
    if channel.order() > 0 {
        let sf = eigen_spectrum(channel.f())?;
        let scale = 1.0 + a.norm() + channel.f().norm();
        for za in &sa.eigenvalues {
            if sf.eigenvalues.iter().any(|zf| (za - zf).norm() <= TAU_CIRC * scale) {
                return Err(Error::EigenvalueCollision(za.norm()));
            }
        }
    }
    AugmentedPlant::from_blocks(a, c, channel.f(), channel.g(), channel.h())
}

/// One channel use: returns `(s_{t+1}, y_t)`.
pub fn simulate_channel_step(
    channel: &ChannelModel,
    state: &DVector<f64>,
    u: f64,
    noise: f64,
) -> Result<(DVector<f64>, f64)> {
    if state.len() != channel.order() {
        return Err(Error::Dimension(format!(
            "channel state must have length {}, got {}",
            channel.order(),
            state.len()
        )));
    }
    let y = channel.h().row(0).dot(&state.transpose()) + u + noise;
    let next = channel.f() * state + channel.g().column(0) * u;
    Ok((next, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn isi3_spec() -> ChannelSpec {
        ChannelSpec::Statespace {
            f: vec![vec![0.0, -0.6, 0.4], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
            g: vec![1.0, 0.0, 0.0],
            h: vec![0.5, -1.0, 0.4],
            d: 1.0,
        }
    }

    #[test]
    fn isi3_state_space_is_valid() {
        let ch = validate(&isi3_spec()).unwrap();
        assert_eq!(ch.order(), 3);
        assert!(!ch.gain_normalized());
    }

    #[test]
    fn rational_realization_matches_state_space() {
        let rational = ChannelSpec::Rational {
            num: vec![1.0, 0.5, -0.4],
            den: vec![1.0, 0.0, 0.6, -0.4],
        };
        assert_eq!(validate(&rational).unwrap(), validate(&isi3_spec()).unwrap());
        assert_eq!(ChannelModel::isi3(), validate(&isi3_spec()).unwrap());
    }

    #[test]
    fn awgn_channel() {
        let spec = ChannelSpec::Statespace {
            f: vec![],
            g: vec![],
            h: vec![],
            d: 1.0,
        };
        let ch = validate(&spec).unwrap();
        assert_eq!(ch.order(), 0);
        assert_eq!(ch, ChannelModel::awgn());
        let (s, y) = simulate_channel_step(&ch, &DVector::zeros(0), 0.7, 0.2).unwrap();
        assert_eq!(s.len(), 0);
        assert!((y - 0.9).abs() < 1e-15);
    }

    #[test]
    fn rejects_unstable_and_nonminimum_phase() {
        let spec = ChannelSpec::Statespace {
            f: vec![vec![1.1]],
            g: vec![1.0],
            h: vec![0.0],
            d: 1.0,
        };
        assert!(matches!(validate(&spec), Err(Error::UnstableChannel(_))));
        let spec = ChannelSpec::Statespace {
            f: vec![vec![0.5]],
            g: vec![1.0],
            h: vec![-1.0],
            d: 1.0,
        };
        assert!(matches!(validate(&spec), Err(Error::NonMinimumPhase(_))));
    }

    #[test]
    fn rejects_non_minimal_realizations() {
        let spec = ChannelSpec::Statespace {
            f: vec![vec![0.5, 0.0], vec![0.0, 0.2]],
            g: vec![1.0, 0.0],
            h: vec![0.3, 0.1],
            d: 1.0,
        };
        assert!(matches!(validate(&spec), Err(Error::Uncontrollable { rank: 1, order: 2 })));
        let spec = ChannelSpec::Statespace {
            f: vec![vec![0.5, 0.0], vec![0.0, 0.2]],
            g: vec![1.0, 1.0],
            h: vec![0.3, 0.0],
            d: 1.0,
        };
        assert!(matches!(validate(&spec), Err(Error::Unobservable { rank: 1, order: 2 })));
    }

    #[test]
    fn gain_normalization() {
        let spec = |d: f64| ChannelSpec::Statespace {
            f: vec![vec![0.5]],
            g: vec![1.0],
            h: vec![0.4],
            d,
        };
        let ch = normalize_gain(&spec(2.0)).unwrap();
        assert!(ch.gain_normalized());
        assert!((ch.h()[(0, 0)] - 0.2).abs() < 1e-15);
        assert_eq!(ch.inverse_toeplitz(4).unwrap().impulse()[0], 1.0);
        let flipped = normalize_gain(&spec(-1.0)).unwrap();
        assert_eq!(flipped.inv_z().d()[(0, 0)], 1.0);
        assert!((flipped.h()[(0, 0)] + 0.4).abs() < 1e-15);
        assert_eq!(normalize_gain(&spec(1.0)).unwrap(), validate(&spec(1.0)).unwrap());
        assert!(matches!(normalize_gain(&spec(0.0)), Err(Error::DegenerateChannel)));
    }

    #[test]
    fn validation_is_idempotent() {
        let ch = ChannelModel::isi3();
        assert_eq!(validate(&ch.to_spec()).unwrap(), ch);
        let json = serde_json::to_string(&ch).unwrap();
        let back: ChannelModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, ch);
    }

    #[test]
    fn impulse_through_channel_matches_toeplitz() {
        let ch = ChannelModel::isi3();
        let t = 10;
        let h = ch.inverse_toeplitz(t).unwrap();
        let mut s = DVector::zeros(3);
        for k in 0..=t {
            let u = if k == 0 { 1.0 } else { 0.0 };
            let (next, y) = simulate_channel_step(&ch, &s, u, 0.0).unwrap();
            assert!((y - h.impulse()[k]).abs() < 1e-14);
            s = next;
        }
        for (got, want) in h.impulse()[..4].iter().zip([1.0, 0.5, -1.0, 0.1]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn augment_shapes_and_rejections() {
        let ch = ChannelModel::isi3();
        let a = crate::statespace::companion_form(-2.0, &[-0.887]);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let p = augment(&ch, &a, &c).unwrap();
        assert_eq!(p.dim(), 5);
        let p0 = augment(&ChannelModel::awgn(), &a, &c).unwrap();
        assert_eq!(p0.a_bb(), &a);
        assert_eq!(p0.c_bb(), &c);
        assert_eq!(p0.d_bb(), &c);

        let unit = DMatrix::from_element(1, 1, -1.0);
        let c1 = DMatrix::from_element(1, 1, 1.0);
        assert!(matches!(augment(&ch, &unit, &c1), Err(Error::UnitCircle(_))));
        let spec = ChannelSpec::Statespace {
            f: vec![vec![0.5]],
            g: vec![1.0],
            h: vec![0.4],
            d: 1.0,
        };
        let ch1 = validate(&spec).unwrap();
        let shared = DMatrix::from_element(1, 1, 0.5);
        assert!(matches!(augment(&ch1, &shared, &c1), Err(Error::EigenvalueCollision(_))));
    }

    #[test]
    fn rejects_malformed_json() {
        assert!(ChannelSpec::from_json(r#"{"kind":"rational","num":[1.0]}"#).is_err());
        let spec = ChannelSpec::from_json(r#"{"kind":"statespace","F":[[0.5]],"G":[1.0],"H":[0.2,0.1]}"#).unwrap();
        assert!(matches!(validate(&spec), Err(Error::InvalidChannel(_))));
    }
}
