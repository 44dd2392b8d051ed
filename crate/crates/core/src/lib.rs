//! Exact continuous-time SIS epidemic simulation on graphs, and detection of
//! high-degree vertices from the re-infection times observed in an epidemic
//! trace.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: contact networks, including the planted-hub benchmark family.
//! - [`sim`]: event-driven sampler of the SIS Markov process and its event log.
//! - [`estimator`]: the re-infection statistic `R_K`, threshold and top-m
//!   selection rules, and the cumulative-infection-time baseline.
//! - [`oracle`]: exact transient analysis of the full `2^n`-state chain for
//!   tiny graphs, used to validate the simulator.
//! - [`experiments`]: seeded accuracy and intervention sweeps with CSV output.
//! - [`cli`]: the `sis-hubs` command line.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod graph;
pub mod manifest;
pub mod oracle;
pub mod seeds;
pub mod sim;

pub use error::{Error, Result};
pub use estimator::{Estimate, EstimatorConfig, NodeTimeline, Rule};
pub use graph::{Graph, GraphSpec, Vertex};
pub use sim::{EpidemicParams, Event, EventKind, EventLog, InitialCondition};
