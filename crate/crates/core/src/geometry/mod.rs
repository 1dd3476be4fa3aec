//! Closed-form quantities from the expected geometry of random ReLU
//! generators under Gaussian phaseless measurements.

mod angles;
mod fields;
mod landscape;
mod operators;

pub use angles::{g_theta, iterate_angles, rho_d, AngleSequence};
pub use fields::{
    classify_with, h_vector, htilde_vector, in_critical_set, vbar_vector, CriticalBalls, CriticalClass,
};
pub use landscape::{
    expected_residual, landscape_for_generator, landscape_grid, GridSpec, LandscapeGrid, LandscapePoint,
    LandscapeSpec,
};
pub use operators::{phi_matrix, q_matrix, swap_matrix, PhiOperator, SwapMatrix};
