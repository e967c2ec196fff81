use nalgebra::Matrix2x3;
use serde::{Deserialize, Serialize};

use super::transform::{check_rotation, rot_z};
use super::{Mesh, SimilarityTransform};
use crate::{Error, Mat3, Result, Vec2, Vec3};

/// Calibrated pinhole view: intrinsics `K` (pixels) and the pose
/// `{R, t}` taking model coordinates (mm) into the camera frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ViewDoc", into = "ViewDoc")]
pub struct View {
    pub intrinsics: Mat3,
    pub rotation: Mat3,
    pub translation: Vec3,
    pub width: u32,
    pub height: u32,
}

/// JSON layout: row-major `K` and `R`, `t`, `width`, `height`.
#[derive(Serialize, Deserialize)]
struct ViewDoc {
    #[serde(rename = "K")]
    k: [f64; 9],
    #[serde(rename = "R")]
    r: [f64; 9],
    t: [f64; 3],
    width: u32,
    height: u32,
}

fn row_major(m: &Mat3) -> [f64; 9] {
    let mut out = [0.0; 9];
    for r in 0..3 {
        for c in 0..3 {
            out[3 * r + c] = m[(r, c)];
        }
    }
    out
}

impl TryFrom<ViewDoc> for View {
    type Error = Error;
    fn try_from(d: ViewDoc) -> Result<View> {
        View::new(
            Mat3::from_row_slice(&d.k),
            Mat3::from_row_slice(&d.r),
            Vec3::from(d.t),
            d.width,
            d.height,
        )
    }
}

impl From<View> for ViewDoc {
    fn from(v: View) -> ViewDoc {
        ViewDoc {
            k: row_major(&v.intrinsics),
            r: row_major(&v.rotation),
            t: [v.translation.x, v.translation.y, v.translation.z],
            width: v.width,
            height: v.height,
        }
    }
}

impl View {
    pub fn new(intrinsics: Mat3, rotation: Mat3, translation: Vec3, width: u32, height: u32) -> Result<Self> {
        if intrinsics[(2, 2)] != 1.0 {
            return Err(Error::Parameter("intrinsics K[2][2] must be 1".into()));
        }
        if intrinsics[(1, 0)] != 0.0 || intrinsics[(2, 0)] != 0.0 || intrinsics[(2, 1)] != 0.0 {
            return Err(Error::Parameter("intrinsics must be upper triangular".into()));
        }
        check_rotation(&rotation)?;
        Ok(View { intrinsics, rotation, translation, width, height })
    }

    /// Pinhole intrinsics with square pixels and no skew.
    pub fn intrinsics_matrix(focal_px: f64, cx: f64, cy: f64) -> Mat3 {
        Mat3::new(focal_px, 0.0, cx, 0.0, focal_px, cy, 0.0, 0.0, 1.0)
    }

    /// A camera at `distance` from the model origin, elevated by `elevation`
    /// radians above the model's `z = 0` plane and looking at the origin from
    /// the `-y` side. Model `+z` points up in the image.
    pub fn looking_at_origin(intrinsics: Mat3, distance: f64, elevation: f64, width: u32, height: u32) -> Result<Self> {
        let (se, ce) = elevation.sin_cos();
        let forward = -Vec3::new(0.0, -ce, se);
        let up = Vec3::z();
        let down = -(up - forward * up.dot(&forward)).normalize();
        let right = down.cross(&forward);
        let rotation = Mat3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        View::new(intrinsics, rotation, Vec3::new(0.0, 0.0, distance), width, height)
    }

    /// Same camera with the model first rotated by `angle` radians about
    /// its own z axis: `R' = R · Rz(angle)`.
    pub fn rotated_about_model_z(&self, angle: f64) -> View {
        View { rotation: self.rotation * rot_z(angle), ..self.clone() }
    }

    /// Pose composed with a rigid model transform, so that projecting `xf(P)`
    /// through `self` equals projecting `P` through the result.
    pub fn compose_rigid(&self, xf: &SimilarityTransform) -> Result<View> {
        if (xf.scale - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter("view composition requires a unit-scale transform".into()));
        }
        Ok(View {
            rotation: self.rotation * xf.rotation,
            translation: self.rotation * xf.translation + self.translation,
            ..self.clone()
        })
    }

    pub fn to_camera(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    /// Image of `p`, or `None` when it does not lie in front of the camera.
    pub fn project_point(&self, p: &Vec3) -> Option<Vec2> {
        let cam = self.to_camera(p);
        if !(cam.z > 0.0) {
            return None;
        }
        let h = self.intrinsics * cam;
        Some(Vec2::new(h.x / h.z, h.y / h.z))
    }

    /// Image of `p` together with the 2×3 derivative of the pixel position
    /// with respect to the model-frame point.
    pub fn project_with_jacobian(&self, p: &Vec3) -> Option<(Vec2, Matrix2x3<f64>)> {
        let cam = self.to_camera(p);
        if !(cam.z > 0.0) {
            return None;
        }
        let h = self.intrinsics * cam;
        let inv = 1.0 / h.z;
        let px = Vec2::new(h.x * inv, h.y * inv);
        let k = &self.intrinsics;
        let mut d_cam = Matrix2x3::zeros();
        for c in 0..3 {
            d_cam[(0, c)] = (k[(0, c)] - px.x * k[(2, c)]) * inv;
            d_cam[(1, c)] = (k[(1, c)] - px.y * k[(2, c)]) * inv;
        }
        Some((px, d_cam * self.rotation))
    }

    pub fn depth(&self, p: &Vec3) -> f64 {
        self.to_camera(p).z
    }
}

/// Projected vertex images with their source vertex indices.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedSet {
    pub points: Vec<Vec2>,
    pub source_vertex: Vec<usize>,
}

impl ProjectedSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Perspective projection of every mesh vertex.
pub fn project_vertices(mesh: &Mesh, view: &View) -> Result<ProjectedSet> {
    let mut points = Vec::with_capacity(mesh.vertices.len());
    for (i, v) in mesh.vertices.iter().enumerate() {
        match view.project_point(v) {
            Some(p) => points.push(p),
            None => {
                return Err(Error::Projection { view: 0, vertex: i, depth: view.depth(v) });
            }
        }
    }
    Ok(ProjectedSet { source_vertex: (0..points.len()).collect(), points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{apply_similarity, euler_xyz, generate_hemisphere};

    fn simple_view() -> View {
        View::new(
            View::intrinsics_matrix(1000.0, 512.0, 512.0),
            Mat3::identity(),
            Vec3::new(0.0, 0.0, 1000.0),
            1024,
            1024,
        )
        .unwrap()
    }

    fn single(p: Vec3) -> Mesh {
        Mesh::new(vec![p], vec![]).unwrap()
    }

    #[test]
    fn principal_ray() {
        let ps = project_vertices(&single(Vec3::zeros()), &simple_view()).unwrap();
        assert_eq!(ps.points[0], Vec2::new(512.0, 512.0));
    }

    #[test]
    fn lateral_offset() {
        let ps = project_vertices(&single(Vec3::new(100.0, 0.0, 0.0)), &simple_view()).unwrap();
        assert!((ps.points[0] - Vec2::new(612.0, 512.0)).norm() < 1e-12);
    }

    #[test]
    fn behind_camera_names_vertex() {
        let m = Mesh::new(vec![Vec3::zeros(), Vec3::new(0.0, 0.0, -2000.0)], vec![]).unwrap();
        match project_vertices(&m, &simple_view()) {
            Err(Error::Projection { vertex, depth, .. }) => {
                assert_eq!(vertex, 1);
                assert_eq!(depth, -1000.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn json_layout() {
        let v = simple_view();
        let s = serde_json::to_string(&v).unwrap();
        assert!(s.contains("\"K\":[1000.0,0.0,512.0"));
        let back: View = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        let bad = s.replace("\"K\":[1000.0,0.0,512.0,0.0,1000.0,512.0,0.0,0.0,1.0]", "\"K\":[1,0,0,0,1,0,0,0,2]");
        assert!(serde_json::from_str::<View>(&bad).is_err());
    }

    #[test]
    fn looking_at_origin_centres_model() {
        let v = View::looking_at_origin(View::intrinsics_matrix(2000.0, 512.0, 512.0), 1000.0, 0.5, 1024, 1024).unwrap();
        let p = v.project_point(&Vec3::zeros()).unwrap();
        assert!((p - Vec2::new(512.0, 512.0)).norm() < 1e-9);
        // model +z appears above the centre (smaller row index)
        assert!(v.project_point(&Vec3::new(0.0, 0.0, 10.0)).unwrap().y < 512.0);
    }

    #[test]
    fn projection_equivariance() {
        let m = generate_hemisphere(20.0, 3).unwrap();
        let view = simple_view();
        let xf = SimilarityTransform::new(1.0, euler_xyz(0.2, -0.4, 0.9), Vec3::new(5.0, -3.0, 40.0)).unwrap();
        let a = project_vertices(&apply_similarity(&m, &xf), &view).unwrap();
        let b = project_vertices(&m, &view.compose_rigid(&xf).unwrap()).unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            assert!((p - q).norm() < 1e-9);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let v = View::looking_at_origin(View::intrinsics_matrix(2000.0, 512.0, 512.0), 1000.0, 0.4, 1024, 1024).unwrap();
        let p = Vec3::new(12.0, -7.0, 18.0);
        let (_, j) = v.project_with_jacobian(&p).unwrap();
        let h = 1e-5;
        for c in 0..3 {
            let mut e = Vec3::zeros();
            e[c] = h;
            let fd = (v.project_point(&(p + e)).unwrap() - v.project_point(&(p - e)).unwrap()) / (2.0 * h);
            assert!((fd - j.column(c)).norm() < 1e-6);
        }
    }
}
