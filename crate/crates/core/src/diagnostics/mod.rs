//! Steadiness measurements and numerical checks of the gradient and
//! norm-preservation results.

mod steadiness;
mod sweep;
mod theorems;

pub use steadiness::{
    gradient_norms, graph_smoothness, signal_magnification, steadiness_report, Magnification, Smoothness, SteadinessReport,
    SMOOTHNESS_EXACT_LIMIT, SMOOTHNESS_SAMPLES,
};
pub use sweep::{depth_sweep, linear_probe, run_cell, SweepCell, SweepConfig, Variant};
pub use theorems::{
    theorem1_gradient, theorem2_check, theorem2_check_with, Theorem2Report, THEOREM2_COV_FACTOR, THEOREM2_MEAN_SIGMAS,
    THEOREM2_NORM_TOL,
};
