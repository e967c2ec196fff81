//! Square-root velocity representation of planar curves, elastic alignment
//! and 2D–3D correspondence inference.

mod align;
mod curve;
mod dp;
pub mod io;
mod repr;
mod rotation;

pub use align::{elastic_align, infer_correspondences, AlignConfig, AlignmentResult, ModelWindow};
pub use curve::{resample_by_arclength, smooth_curve, Curve2D, MIN_SAMPLES};
pub use dp::{dp_on_samples, dp_reparameterize, warp_cost, warp_samples, Reparam, DEFAULT_SLOPES, MIN_GRID};
pub use repr::{closure_point, from_srvf, l2_distance, quadrature_weights, to_srvf, SrvfCurve};
pub use rotation::{optimal_rotation, procrustes, rotation_matrix, RotationFit};
