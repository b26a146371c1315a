//! Simulation and optimization toolkit for fronthaul-limited cell-free massive
//! MIMO downlink with hybrid centralized/distributed zero-forcing precoding.
//!
//! The pipeline for one network drop is:
//!
//! 1. [`scenario::generate_drop`] places APs and users and produces the
//!    large-scale fading matrix.
//! 2. [`channel::ChannelStats`] turns it into MMSE estimate statistics.
//! 3. [`grouping::sweep_select`] splits users into a centralized and a
//!    distributed group under the per-AP fronthaul budget, evaluating each
//!    candidate with the closed-form SINRs in [`se`] and powers from [`power`].
//! 4. [`oracle`] re-derives the same SINRs by brute-force Monte Carlo.
//!
//! All powers are normalized by the noise power, so the noise term in every
//! SINR denominator is exactly one.

pub mod channel;
pub mod error;
pub mod experiment;
pub mod fronthaul;
pub mod grouping;
pub mod oracle;
pub mod power;
pub mod precoding;
pub mod rng;
pub mod scenario;
pub mod se;

pub use channel::{ChannelDraw, ChannelStats};
pub use error::{Error, Result};
pub use fronthaul::{BitRate, FronthaulParams};
pub use grouping::{GroupingMethod, SweepMode};
pub use power::{Objective, ScaSettings};
pub use precoding::{ApPrecoders, Grouping};
pub use scenario::{PathLossModel, Scenario, SystemParams};
pub use se::{PowerAllocation, SeReport};

/// Complex baseband sample type used throughout.
pub type C64 = num_complex::Complex64;
