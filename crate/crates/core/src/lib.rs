//! Template-based 3D surface reconstruction from calibrated 2D silhouette
//! contours.
//!
//! A hemispherical template is deformed by an embedded deformation graph
//! until its projected outlines agree with contour observations in N ≥ 3
//! calibrated views. Correspondences between observed contour points and
//! template vertices come from elastic (square-root velocity) curve
//! alignment; the deformation parameters are found by damped Gauss-Newton.
//!
//! Layout:
//!
//! - [`geometry`]: meshes, similarity transforms, pinhole views, alpha-shape
//!   silhouettes, point-to-surface distance, mesh and view I/O.
//! - [`srvf`]: planar curves, square-root velocity representation, elastic
//!   alignment and correspondence inference.
//! - [`deform`]: the embedded deformation graph.
//! - [`solver`]: energy terms, Jacobian, Gauss-Newton and the two-stage
//!   reconstruction driver.
//! - [`baselines`]: nearest-neighbour correspondence strategies used for
//!   comparison.
//! - [`experiment`]: synthetic cases, noise models, metrics, cup sizing and
//!   the multi-run suite.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod deform;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod solver;
pub mod srvf;

pub use error::{Error, Result};

pub type Vec2 = nalgebra::Vector2<f64>;
pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat2 = nalgebra::Matrix2<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
