//! Adaptive two-stage stochastic programming on scenario trees.
//!
//! The crate builds multi-stage, two-stage and adaptive two-stage models of
//! capacity expansion problems, computes analytical bounds on the value of
//! revising decisions at a chosen stage, runs approximation heuristics and
//! hosts two worked applications: a multi-period newsvendor and a generation
//! expansion planning study.

pub mod bounds;
pub mod error;
pub mod experiments;
pub mod formulations;
pub mod genexp;
pub mod heuristics;
pub mod newsvendor;
pub mod scenario_tree;

pub use error::{Error, Result};
pub use formulations::{BuildOptions, CapacityExpansionData, CompiledModel, ExpansionProblem, PerNode, Structure};
pub use scenario_tree::{NodeId, ScenarioTree, TreeFile, TreeGenConfig};
