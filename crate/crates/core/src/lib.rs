//! Link-level simulation and analysis of OFDM schemes built on the
//! single-parity MDS code over the integers `1..=q`.
//!
//! Two modulation families are provided:
//!
//! - **MDS-APM**: one MDS tuple selects the amplitude ring of every
//!   subcarrier, a second selects a disjoint phase set, and the remaining
//!   bits pick a phase inside each set.
//! - **MDS-IQM**: independent MDS tuples select disjoint PAM sets for the
//!   in-phase and quadrature components.
//!
//! Conventional OFDM with PSK/QAM is included as a baseline. The crate covers
//! codebook construction, bit mapping, Rayleigh fading, exhaustive and
//! low-complexity ML detection, Monte-Carlo BER sweeps and the closed-form
//! analysis (minimum Euclidean distances, union bound, detection complexity,
//! achievable rate).

mod error;

pub mod analysis;
pub mod bits;
pub mod channel;
pub mod cli;
pub mod constellation;
pub mod detect;
pub mod mdscode;
pub mod modem;
pub mod sim;

pub use error::{Error, Result};
