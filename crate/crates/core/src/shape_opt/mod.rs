//! Shape gradient, descent smoothing, step control, the optimization loop
//! and finite-difference verification.

pub mod gradcheck;
pub mod gradient;
pub mod optimizer;
pub mod smoothing;
pub mod step;

pub use gradcheck::{gradient_check, radial_field, smoothed_normal_field, GradCheckReport, GradCheckRow};
pub use gradient::{
    balance_multiplier, eulerian_derivative, shape_gradient, shape_gradient_with, update_multiplier, BoundaryGradient,
    GradientRecovery,
};
pub use optimizer::{optimize, IterationRecord, OptimConfig, OptimReport, Rejection, VolumeFeedback};
pub use smoothing::{h1_inner, smooth_descent, solve_helmholtz};
pub use step::{step_control, StepRule};
