//! Numerical laboratory for order-preserving dynamical systems.
//!
//! The crate simulates cooperative networks and discretized
//! reaction-diffusion systems with no-flux boundaries, locates and classifies
//! their equilibria through the linearized time-T flow, estimates omega limit
//! sets from trajectory tails, and runs segment/basin/homogeneity sampling
//! experiments over the resulting classifications.

pub mod classify;
pub mod dsl;
pub mod equilibrium;
pub mod error;
pub mod fixtures;
pub mod flow;
pub mod grid;
pub mod linalg;
pub mod model;
pub mod order;
pub mod prevalence;

pub use classify::{ClassifierParams, Classification, FrozenOutcome, OmegaEstimate, TrajectoryClass};
pub use equilibrium::{AnalysisParams, EquilibriumDb, EquilibriumRecord, Stability};
pub use error::{CoreError, Result};
pub use flow::{FlowResult, IntegratorConfig, Scheme, TerminalFlag, Trajectory};
pub use grid::Grid;
pub use model::{CooperativityReport, Model};
pub use order::{ConeOrder, Layout, Segment, StateVec};
pub use prevalence::{HomogeneityReport, LineReport, PropertyReport};
