use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use serde::{Deserialize, Serialize};

use crate::geometry::Mesh;
use crate::{Error, Mat3, Result, Vec3};

/// A fitted sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    pub center: Vec3,
    pub radius: f64,
}

/// Relative spread below which the points count as coplanar.
const PLANARITY_TOL: f64 = 1e-10;

/// Least-squares sphere through `points`: the algebraic fit of
/// `‖p‖² = 2c·p + d`, then one Gauss-Newton step on the geometric residuals
/// `‖p − c‖ − r`.
pub fn fit_sphere(points: &[Vec3]) -> Result<Sphere> {
    if points.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 points, got {}", points.len())));
    }
    let n = points.len() as f64;
    let mean = points.iter().sum::<Vec3>() / n;
    let mut cov = Mat3::zeros();
    for p in points {
        let d = p - mean;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov).eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    if !(hi > 0.0) || lo <= PLANARITY_TOL * hi {
        return Err(Error::Fit("points are coplanar or coincident".into()));
    }

    // Centred coordinates keep the normal equations well conditioned.
    let mut ata = Matrix4::zeros();
    let mut atb = Vector4::zeros();
    for p in points {
        let d = p - mean;
        let row = Vector4::new(2.0 * d.x, 2.0 * d.y, 2.0 * d.z, 1.0);
        ata += row * row.transpose();
        atb += row * d.norm_squared();
    }
    let sol = ata.cholesky().ok_or_else(|| Error::Fit("algebraic system is singular".into()))?.solve(&atb);
    let c = Vec3::new(sol[0], sol[1], sol[2]);
    let r2 = sol[3] + c.norm_squared();
    if !(r2 > 0.0) {
        return Err(Error::Fit("algebraic fit has no real radius".into()));
    }
    let mut center = c + mean;
    let mut radius = r2.sqrt();

    let mut jtj = Matrix4::zeros();
    let mut jtr = Vector4::zeros();
    for p in points {
        let d = p - center;
        let dist = d.norm();
        if dist == 0.0 {
            continue;
        }
        let u = d / dist;
        let row = Vector4::new(-u.x, -u.y, -u.z, -1.0);
        let res = dist - radius;
        jtj += row * row.transpose();
        jtr += row * res;
    }
    if let Some(chol) = jtj.cholesky() {
        let step = -chol.solve(&jtr);
        center += Vec3::new(step[0], step[1], step[2]);
        radius += step[3];
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Fit(format!("refined radius {radius} is not positive")));
    }
    Ok(Sphere { center, radius })
}

/// Cup diameter (mm) of an acetabular surface: twice the radius of the
/// least-squares sphere through its vertices.
pub fn estimate_cup_diameter(mesh: &Mesh) -> Result<f64> {
    Ok(2.0 * fit_sphere(&mesh.vertices)?.radius)
}
