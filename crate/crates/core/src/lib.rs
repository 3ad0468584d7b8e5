//! Link-level simulator for a three-cell, interference-limited MIMO-OFDM
//! downlink: interference alignment, coordinated multi-point, and SIMO/MIMO
//! baselines run end to end over a synthetic channel with dirty-RF
//! impairments.

// NaN must fail the `!(x > 0.0)` style guards
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod coding;
pub mod error;
pub mod harness;
pub mod impairments;
pub mod metrics;
pub mod numerics;
pub mod phy;
pub mod precoding;
pub mod system;

pub use error::{Error, Result};
