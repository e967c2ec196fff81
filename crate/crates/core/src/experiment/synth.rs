use log::warn;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::{apply_similarity, euler_xyz, generate_hemisphere, Mesh, SimilarityTransform, View};
use crate::solver::mesh_silhouette;
use crate::srvf::Curve2D;
use crate::{Error, Result, Vec2, Vec3};

/// Pinhole camera used as the prototype for every synthetic view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraConfig {
    pub focal_px: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    /// Source-to-model distance, mm.
    pub distance_mm: f64,
    /// Camera elevation above the template's rim plane, degrees.
    pub elevation_deg: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        CameraConfig {
            focal_px: 2000.0,
            cx: 512.0,
            cy: 512.0,
            width: 1024,
            height: 1024,
            distance_mm: 1000.0,
            elevation_deg: 30.0,
        }
    }
}

impl CameraConfig {
    pub fn prototype(&self) -> Result<View> {
        let k = View::intrinsics_matrix(self.focal_px, self.cx, self.cy);
        View::looking_at_origin(k, self.distance_mm, self.elevation_deg.to_radians(), self.width, self.height)
    }
}

/// Radius of the synthetic target before warping, mm.
pub const TARGET_RADIUS: f64 = 25.0;
/// Anisotropic scale applied to the synthetic target.
pub const TARGET_SCALE: [f64; 3] = [1.12, 1.0, 0.96];
/// Height (mm) and angular width (rad) of the synthetic target's bump.
pub const TARGET_BUMP: (f64, f64) = (2.5, 0.35);

/// The default synthetic acetabulum: a hemisphere of radius 25 mm with a
/// smooth radial bump, then scaled anisotropically.
pub fn default_target(refinement_level: u32) -> Result<Mesh> {
    let hemi = generate_hemisphere(TARGET_RADIUS, refinement_level)?;
    let bump_dir = Vec3::new(0.6, -0.5, 0.62).normalize();
    let (height, width) = TARGET_BUMP;
    Ok(hemi.map_vertices(|_, p| {
        let dir = p / p.norm();
        let gap = (dir - bump_dir).norm_squared();
        let q = p + dir * height * (-gap / (2.0 * width * width)).exp();
        Vec3::new(TARGET_SCALE[0] * q.x, TARGET_SCALE[1] * q.y, TARGET_SCALE[2] * q.z)
    }))
}

/// One view per angle (degrees about the model z axis) and the silhouette of
/// `target` in each.
pub fn synthesize_views(target: &Mesh, angles_deg: &[f64], prototype: &View) -> Result<(Vec<View>, Vec<Curve2D>)> {
    let mut views = Vec::with_capacity(angles_deg.len());
    let mut contours = Vec::with_capacity(angles_deg.len());
    for (k, &a) in angles_deg.iter().enumerate() {
        let view = prototype.rotated_about_model_z(a.to_radians());
        let sil = mesh_silhouette(target, &view, k, None).map_err(|e| match e {
            Error::Projection { view, vertex, depth } => {
                Error::Config(format!("target vertex {vertex} has depth {depth} in view {view}"))
            }
            other => other,
        })?;
        contours.push(Curve2D::new(sil.points, sil.closed)?);
        views.push(view);
    }
    Ok((views, contours))
}

/// Adds independent zero-mean Gaussian noise of `sd` pixels to every
/// coordinate.
pub fn add_contour_noise<R: Rng>(contours: &[Curve2D], sd: f64, rng: &mut R) -> Result<Vec<Curve2D>> {
    if !(sd >= 0.0 && sd.is_finite()) {
        return Err(Error::Parameter(format!("noise SD must be nonnegative, got {sd}")));
    }
    if sd == 0.0 {
        return Ok(contours.to_vec());
    }
    let normal = Normal::new(0.0, sd).map_err(|e| Error::Parameter(e.to_string()))?;
    Ok(contours
        .iter()
        .map(|c| Curve2D {
            points: c.points.iter().map(|p| p + Vec2::new(normal.sample(rng), normal.sample(rng))).collect(),
            closed: c.closed,
        })
        .collect())
}

/// Standard deviations of the initialization perturbation at one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseLevelSpec {
    pub level: usize,
    /// Per-axis Euler angle SD, rad.
    pub rot_sd: f64,
    /// Per-axis translation SD, mm.
    pub trans_sd: f64,
    /// Listed scale value `v`; the scale factor is drawn from
    /// `N(1, (v − 1)²)`.
    pub scale_value: f64,
}

impl NoiseLevelSpec {
    /// Levels 1 to 5 of the simulation protocol; level 0 is noise free.
    pub fn table(level: usize) -> Result<NoiseLevelSpec> {
        const ROT: [f64; 6] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
        const TRANS: [f64; 6] = [0.0, 10.0, 30.0, 50.0, 80.0, 100.0];
        const SCALE: [f64; 6] = [1.0, 1.1, 1.2, 1.3, 1.4, 1.5];
        if level > 5 {
            return Err(Error::Parameter(format!("noise level {level} outside 0..=5")));
        }
        Ok(NoiseLevelSpec { level, rot_sd: ROT[level], trans_sd: TRANS[level], scale_value: SCALE[level] })
    }

    pub fn scale_sd(&self) -> f64 {
        self.scale_value - 1.0
    }
}

/// Draws a random similarity transform at the given noise level: Euler
/// angles, translation and a scale factor, each Gaussian. Non-positive scale
/// draws are redrawn.
pub fn perturb_initialization<R: Rng>(level: usize, rng: &mut R) -> Result<SimilarityTransform> {
    let spec = NoiseLevelSpec::table(level)?;
    if level == 0 {
        return Ok(SimilarityTransform::identity());
    }
    let gauss = |sd: f64| Normal::new(0.0, sd).map_err(|e| Error::Parameter(e.to_string()));
    let rot = gauss(spec.rot_sd)?;
    let trans = gauss(spec.trans_sd)?;
    let scale = gauss(spec.scale_sd())?;
    let rotation = euler_xyz(rot.sample(rng), rot.sample(rng), rot.sample(rng));
    let translation = Vec3::new(trans.sample(rng), trans.sample(rng), trans.sample(rng));
    let mut s = 1.0 + scale.sample(rng);
    while s <= 0.0 {
        warn!("non-positive scale draw {s:.4} at level {level}; redrawing");
        s = 1.0 + scale.sample(rng);
    }
    SimilarityTransform::new(s, rotation, translation)
}

/// Everything one synthetic reconstruction needs, plus its ground truth.
#[derive(Debug, Clone)]
pub struct SimulatedCase {
    pub target: Mesh,
    /// Template after fitting and perturbation; the reconstruction start.
    pub template: Mesh,
    pub views: Vec<View>,
    pub observations: Vec<Curve2D>,
    pub ground_truth: Vec<Curve2D>,
    pub perturbation: SimilarityTransform,
}

/// Builds a case: views and clean contours of `target`, noisy observations,
/// and `template` perturbed about `center` at the given level.
#[allow(clippy::too_many_arguments)]
pub fn simulate_case<R: Rng>(
    target: &Mesh,
    template: &Mesh,
    center: &Vec3,
    angles_deg: &[f64],
    prototype: &View,
    contour_sd: f64,
    level: usize,
    rng: &mut R,
) -> Result<SimulatedCase> {
    let (views, ground_truth) = synthesize_views(target, angles_deg, prototype)?;
    let perturbation = perturb_initialization(level, rng)?;
    let observations = add_contour_noise(&ground_truth, contour_sd, rng)?;
    let template = apply_similarity(template, &perturbation.about(center));
    Ok(SimulatedCase { target: target.clone(), template, views, observations, ground_truth, perturbation })
}
