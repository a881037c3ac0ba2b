//! Secrecy-throughput planning for a UAV decode-and-forward relay operating
//! with short packets.
//!
//! The crate evaluates finite-blocklength secrecy rates under a bounded
//! eavesdropper location error and maximizes the average secrecy throughput
//! over powers, blocklengths and the UAV path by alternating convex
//! restrictions.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod geom;
pub mod linalg;
pub mod oracle;
pub mod planner;
pub mod radio;
pub mod sca;
pub mod scenario;
pub mod secrecy;
pub mod solver;

pub use error::{Error, Result};
