//! Feedback capacity of stable minimum-phase Gaussian channels with memory.
//!
//! The crate computes the optimal Kalman-filter based feedback encoder for a
//! channel `Z`, evaluates its rate/power trade-off, and simulates digital
//! and analog transmission over the channel.

pub mod capacity;
pub mod channel;
pub mod coding;
pub mod error;
pub mod finite_horizon;
pub mod optim;
pub mod random;
pub mod riccati;
pub mod sim;
pub mod statespace;
pub mod verify;

pub use channel::{augment, normalize_gain, simulate_channel_step, validate, ChannelModel, ChannelSpec};
pub use error::{Error, Result};
pub use riccati::{AugmentedPlant, RiccatiSolution, RiccatiTrajectory};
pub use statespace::{StateSpaceSystem, ToeplitzOperator};
pub use capacity::{capacity_for_power, power_for_rate, upper_bound, EncoderDesign, OptimizerReport};
pub use coding::{build_codebook, run_transmission, theoretical_pe, Codebook, GainSchedule, Scheme, TransmissionTrace};
pub use finite_horizon::{FiniteHorizonReport, GeneralCodingConfig};
pub use sim::{run_analog, run_digital, SimConfig, SimMode, SimResult};
