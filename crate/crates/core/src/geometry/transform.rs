use serde::{Deserialize, Serialize};

use super::Mesh;
use crate::{Error, Mat3, Result, Vec3};

const ORTHONORMAL_TOL: f64 = 1e-9;

/// `v ↦ scale · rotation · v + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTransform {
    pub scale: f64,
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl SimilarityTransform {
    pub fn new(scale: f64, rotation: Mat3, translation: Vec3) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Parameter(format!("scale must be positive, got {scale}")));
        }
        check_rotation(&rotation)?;
        if !translation.iter().all(|c| c.is_finite()) {
            return Err(Error::Parameter("translation is not finite".into()));
        }
        Ok(SimilarityTransform { scale, rotation, translation })
    }

    pub fn identity() -> Self {
        SimilarityTransform { scale: 1.0, rotation: Mat3::identity(), translation: Vec3::zeros() }
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.scale * (self.rotation * v) + self.translation
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &SimilarityTransform) -> SimilarityTransform {
        SimilarityTransform {
            scale: self.scale * other.scale,
            rotation: self.rotation * other.rotation,
            translation: self.apply(&other.translation),
        }
    }

    /// Same scale and rotation but acting about `center` instead of the origin,
    /// followed by the stored translation: `v ↦ c + sR(v − c) + t`.
    pub fn about(&self, center: &Vec3) -> SimilarityTransform {
        SimilarityTransform {
            scale: self.scale,
            rotation: self.rotation,
            translation: center - self.scale * (self.rotation * center) + self.translation,
        }
    }
}

impl Default for SimilarityTransform {
    fn default() -> Self {
        Self::identity()
    }
}

pub(crate) fn check_rotation(r: &Mat3) -> Result<()> {
    let defect = (r.transpose() * r - Mat3::identity()).abs().max();
    if !(defect <= ORTHONORMAL_TOL) || r.determinant() <= 0.0 {
        return Err(Error::Parameter(format!(
            "matrix is not a proper rotation (orthonormality defect {defect:e})"
        )));
    }
    Ok(())
}

pub fn apply_similarity(mesh: &Mesh, xf: &SimilarityTransform) -> Mesh {
    mesh.map_vertices(|_, v| xf.apply(v))
}

pub fn rot_x(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Rotation from Euler angles (radians) applied about x, then y, then z.
pub fn euler_xyz(rx: f64, ry: f64, rz: f64) -> Mat3 {
    rot_z(rz) * rot_y(ry) * rot_x(rx)
}
