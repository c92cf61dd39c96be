//! Temporal statistics of human-body line-of-sight blockage on mmWave links.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod applications;
pub mod cli;
pub mod conditional;
pub mod config;
pub mod error;
pub mod geometry;
pub mod numerics;
pub mod renewal;
pub mod residence;
pub mod simulator;
pub mod table;

pub use error::{BlockageError, Result};
pub use geometry::{build_zone, zone_length, BlockageZone, LinkGeometry, Point};
pub use residence::{ScenarioConfig, ScenarioKind};
pub use table::{Atom, DistributionTable};
