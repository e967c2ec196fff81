//! Synthetic experiments: target and view synthesis, noise models, error
//! metrics, cup sizing and the multi-run suite.

mod metrics;
mod sphere;
mod suite;
mod synth;

pub use metrics::{evaluate_reconstruction, Metrics};
pub use suite::{
    fitted_template, run_rng, run_suite, ExperimentConfig, GroupSummary, RunRecord, SuiteReport, TIMING_COLUMN,
};
pub use sphere::{estimate_cup_diameter, fit_sphere, Sphere};
pub use synth::{
    add_contour_noise, default_target, perturb_initialization, simulate_case, synthesize_views, CameraConfig,
    NoiseLevelSpec, SimulatedCase, TARGET_BUMP, TARGET_RADIUS, TARGET_SCALE,
};
