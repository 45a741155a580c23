//! Beam-based interleaved training for hybrid massive-antenna downlink.
//!
//! The crate simulates single-user and multi-user beam training over a
//! beamspace channel and evaluates the matching closed-form training length
//! and outage expressions.

pub mod analytic;
pub mod channel;
pub mod harness;
pub mod mu;
pub mod special;
pub mod su;
