use super::repr::{quadrature_weights, SrvfCurve};
use crate::{Error, Mat2, Result, Vec2};

/// Optimal planar rotation and whether the cross-covariance vanished.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationFit {
    pub matrix: Mat2,
    pub angle: f64,
    pub degenerate: bool,
}

pub fn rotation_matrix(angle: f64) -> Mat2 {
    let (s, c) = angle.sin_cos();
    Mat2::new(c, -s, s, c)
}

/// Weighted Procrustes in SO(2): the rotation `O` minimising
/// `Σ w_k |O·model_k − obs_k|²`. Maximising `Σ w_k obs_k · (O model_k)` over
/// the angle gives `θ = atan2(Σ w (model × obs), Σ w (model · obs))`, which
/// is already a proper rotation.
pub fn procrustes(model: &[Vec2], obs: &[Vec2], weights: &[f64]) -> RotationFit {
    let (mut dot, mut crs) = (0.0, 0.0);
    for ((m, o), w) in model.iter().zip(obs).zip(weights) {
        dot += w * m.dot(o);
        crs += w * (m.x * o.y - m.y * o.x);
    }
    let scale = dot.abs().max(crs.abs());
    if !(scale > 1e-300) {
        return RotationFit { matrix: Mat2::identity(), angle: 0.0, degenerate: true };
    }
    let angle = crs.atan2(dot);
    RotationFit { matrix: rotation_matrix(angle), angle, degenerate: false }
}

/// Rotation best aligning `q_model` onto `q_obs`.
pub fn optimal_rotation(q_model: &SrvfCurve, q_obs: &SrvfCurve) -> Result<RotationFit> {
    if q_model.len() != q_obs.len() {
        return Err(Error::Parameter(format!(
            "sample counts differ: {} vs {}",
            q_model.len(),
            q_obs.len()
        )));
    }
    let w = quadrature_weights(q_obs.len(), q_obs.closed);
    Ok(procrustes(&q_model.samples, &q_obs.samples, &w))
}
