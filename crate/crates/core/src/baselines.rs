//! Nearest-neighbour correspondence strategies used as comparison baselines.
//!
//! Both pair each observed contour point with the closest projected
//! silhouette point. The normal-filtered variant then drops pairs whose 2D
//! curve normals disagree by more than a threshold. Normals come from central
//! differences along each curve and are oriented away from the curve's
//! centroid; this construction is a stand-in, as the published method does
//! not describe its normal estimation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::SilhouetteCurve;
use crate::solver::CorrespondenceSet;
use crate::srvf::Curve2D;
use crate::{Error, Result, Vec2};

/// Default normal-angle threshold for the filtered variant, degrees.
pub const DEFAULT_NORMAL_THRESHOLD_DEG: f64 = 30.0;

/// How observation points are paired with template vertices.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum CorrespondenceStrategy {
    /// Elastic curve alignment, recomputed in at most three rounds.
    #[default]
    Srvf,
    /// Euclidean nearest neighbour, recomputed every outer iteration.
    Icp,
    /// Nearest neighbour with normal-angle outlier rejection.
    IcpNormVec { threshold_deg: f64 },
}

impl CorrespondenceStrategy {
    pub fn validate(&self) -> Result<()> {
        if let CorrespondenceStrategy::IcpNormVec { threshold_deg } = *self {
            if !(threshold_deg > 0.0 && threshold_deg <= 90.0) {
                return Err(Error::Parameter(format!("normal threshold {threshold_deg}° outside (0, 90]")));
            }
        }
        Ok(())
    }

    /// Whether correspondences are re-derived at every outer iteration.
    pub fn recomputes_every_iteration(&self) -> bool {
        !matches!(self, CorrespondenceStrategy::Srvf)
    }

    /// Short name used on the command line and in reports.
    pub fn name(&self) -> &'static str {
        match self {
            CorrespondenceStrategy::Srvf => "srvf",
            CorrespondenceStrategy::Icp => "icp",
            CorrespondenceStrategy::IcpNormVec { .. } => "icp-normvec",
        }
    }
}

impl fmt::Display for CorrespondenceStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CorrespondenceStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "srvf" => Ok(CorrespondenceStrategy::Srvf),
            "icp" => Ok(CorrespondenceStrategy::Icp),
            "icp-normvec" => Ok(CorrespondenceStrategy::IcpNormVec { threshold_deg: DEFAULT_NORMAL_THRESHOLD_DEG }),
            other => Err(Error::Parameter(format!("unknown strategy {other:?}; expected srvf, icp or icp-normvec"))),
        }
    }
}

/// Index of the silhouette point nearest to `p`; ties go to the lowest index.
fn nearest_index(points: &[Vec2], p: &Vec2) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, s) in points.iter().enumerate() {
        let d = (s - p).norm_squared();
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

/// Pairs every observation point with the vertex behind its Euclidean-nearest
/// silhouette point.
pub fn icp_correspondences(silhouette: &SilhouetteCurve, obs: &Curve2D, view: usize) -> Result<CorrespondenceSet> {
    if silhouette.is_empty() {
        return Err(Error::Degenerate(format!("empty silhouette in view {view}")));
    }
    if obs.is_empty() {
        return Err(Error::Degenerate(format!("empty observation in view {view}")));
    }
    let mut set = CorrespondenceSet::new();
    for p in &obs.points {
        let j = nearest_index(&silhouette.points, p);
        set.push(view, silhouette.source_vertex[j], *p);
    }
    Ok(set)
}

/// Unit normals from central differences (one-sided at the ends of an open
/// curve), each flipped to point away from the curve centroid.
pub fn curve_normals(points: &[Vec2], closed: bool) -> Result<Vec<Vec2>> {
    let n = points.len();
    if n < 3 {
        return Err(Error::Degenerate(format!("normals need at least 3 points, got {n}")));
    }
    let centroid = points.iter().sum::<Vec2>() / n as f64;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = match (closed, i) {
            (true, _) => (points[(i + n - 1) % n], points[(i + 1) % n]),
            (false, 0) => (points[0], points[1]),
            (false, i) if i == n - 1 => (points[n - 2], points[n - 1]),
            (false, i) => (points[i - 1], points[i + 1]),
        };
        let t = b - a;
        let len = t.norm();
        if len == 0.0 {
            return Err(Error::Degenerate(format!("repeated points around index {i}")));
        }
        let mut normal = Vec2::new(t.y, -t.x) / len;
        if normal.dot(&(points[i] - centroid)) < 0.0 {
            normal = -normal;
        }
        out.push(normal);
    }
    Ok(out)
}

/// Angle in degrees between two unit vectors.
fn angle_deg(a: &Vec2, b: &Vec2) -> f64 {
    a.dot(b).clamp(-1.0, 1.0).acos().to_degrees()
}

/// Nearest-neighbour pairs whose curve normals differ by at most
/// `angle_threshold_deg`.
pub fn normvec_correspondences(
    silhouette: &SilhouetteCurve,
    obs: &Curve2D,
    view: usize,
    angle_threshold_deg: f64,
) -> Result<CorrespondenceSet> {
    CorrespondenceStrategy::IcpNormVec { threshold_deg: angle_threshold_deg }.validate()?;
    let sil_normals = curve_normals(&silhouette.points, silhouette.closed)?;
    let obs_normals = curve_normals(&obs.points, obs.closed)?;
    let mut set = CorrespondenceSet::new();
    for (p, n_obs) in obs.points.iter().zip(&obs_normals) {
        let j = nearest_index(&silhouette.points, p);
        if angle_deg(&sil_normals[j], n_obs) <= angle_threshold_deg {
            set.push(view, silhouette.source_vertex[j], *p);
        }
    }
    Ok(set)
}
