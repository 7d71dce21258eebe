//! Wireless network virtualization for multi-cell massive MIMO: service
//! providers design virtual precoders on their own channels, and each cell's
//! infrastructure provider realizes them with an online precoder that trades
//! demand deviation against a long-term average power limit.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod config;
pub mod controller;
pub mod dump;
pub mod error;
pub mod experiment;
pub mod fd;
pub mod linalg;
pub mod metrics;
pub mod precoders;
pub mod scenario;
pub mod solver;

pub use error::{Result, WnvError};
