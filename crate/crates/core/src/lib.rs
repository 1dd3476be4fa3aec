//! Phase retrieval under random ReLU generative priors.
//!
//! The crate samples Gaussian generators `G(x) = relu(W_d ⋯ relu(W_1 x))`
//! and Gaussian phaseless measurements `b = |A G(x₀)|`, minimizes the
//! amplitude risk `½‖|A G(x)| − b‖²` with a gradient method that negates the
//! iterate whenever that lowers the objective, and checks the expected
//! landscape geometry numerically.

pub mod baseline;
pub mod concentration;
pub mod error;
pub mod experiments;
pub mod generator;
pub mod io;
pub mod geometry;
pub mod linalg;
pub mod measurement;
pub mod objective;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
pub use generator::{active_rows, ActivePath, GeneratorNetwork, VarianceScheme};
pub use measurement::{MeasurementEnsemble, MeasurementScheme, Observation};
pub use objective::{Evaluation, Problem};
pub use solver::{dpr_solve, dpr_solve_two_start, Optimizer, SolverConfig, Start, StepScaling, TrialResult};
pub use concentration::{count_sign_patterns, rrcp_deviation, wdc_deviation, DeviationReport};
pub use baseline::{thresholded_amplitude_flow, SparseProblem};
