//! Kinematic analysis, walking-performance metrics and constrained
//! multi-objective synthesis of closed-chain legged mechanisms.
//!
//! The crate is organised bottom-up:
//!
//! * [`linkage`]: dyad solver, topologies, forward kinematics and tracing.
//! * [`trajectory`]: bench/walking trajectories, feature points, multi-leg layouts.
//! * [`target`]: compound-cycloid target curves.
//! * [`metrics`]: stance, impact, crossing heights, obstacle-crossing probability, shape distances.
//! * [`moo`]: constrained NSGA-II and knee-point selection.
//! * [`pipeline`]: hierarchical shape-constrained design flow and its single-level baseline.
//! * [`rtclm`]: the reconfigurable seven-bar leg and its stepwise design.
//! * [`io`] and [`plot`]: file formats and SVG output.

pub mod error;
pub mod io;
pub mod linkage;
pub mod metrics;
pub mod moo;
pub mod pipeline;
pub mod plot;
pub mod rtclm;
pub mod target;
pub mod trajectory;

pub use error::{Error, Result};
