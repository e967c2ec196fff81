use serde::{Deserialize, Serialize};

use super::curve::Curve2D;
use super::dp::{dp_on_samples, warp_cost, warp_samples, Reparam, DEFAULT_SLOPES};
use super::repr::{from_srvf, quadrature_weights, to_srvf, SrvfCurve};
use super::rotation::{procrustes, rotation_matrix, RotationFit};
use crate::geometry::SilhouetteCurve;
use crate::solver::CorrespondenceSet;
use crate::{Error, Mat2, Result, Vec2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlignConfig {
    /// Arc-length samples per curve.
    pub samples: usize,
    /// DP lattice size.
    pub grid: usize,
    pub slopes: Vec<(usize, usize)>,
    /// Coarse stride (in samples) over start points of a closed model curve.
    pub start_stride: usize,
    pub max_rounds: usize,
    /// Relative decrease of the distance below which alternation stops.
    pub tolerance: f64,
    /// Window lengths tried for an open observation against a closed model,
    /// as multiples of the observation/model arc-length ratio.
    pub window_spans: Vec<f64>,
    /// Largest rotation magnitude allowed, rad. Calibrated views share an
    /// image frame with the model projection, so large turns are spurious.
    pub max_rotation: f64,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            samples: 100,
            grid: 100,
            slopes: DEFAULT_SLOPES.to_vec(),
            start_stride: 5,
            max_rounds: 10,
            tolerance: 1e-6,
            window_spans: vec![0.85, 1.0, 1.15],
            max_rotation: std::f64::consts::FRAC_PI_2,
        }
    }
}

/// Portion of the model curve matched against the observation, as
/// arc-length fractions of the model curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelWindow {
    pub start: f64,
    pub span: f64,
    pub reversed: bool,
}

impl ModelWindow {
    pub const FULL: ModelWindow = ModelWindow { start: 0.0, span: 1.0, reversed: false };

    /// Model arc fraction of window parameter `u ∈ [0, 1]`.
    pub fn model_param(&self, u: f64) -> f64 {
        if self.reversed {
            self.start - self.span * u
        } else {
            self.start + self.span * u
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult {
    pub rotation: Mat2,
    pub angle: f64,
    pub gamma: Reparam,
    /// L2 distance between the aligned SRVFs.
    pub distance: f64,
    /// L2 distance with identity rotation and warp on the full model curve.
    pub initial_distance: f64,
    /// Warped and rotated model curve in observation pixel coordinates.
    pub aligned_model_curve: Curve2D,
    pub window: ModelWindow,
    pub rounds: usize,
}

/// Windows that get the full rotation/warp alternation after screening.
const FULLY_REFINED_CANDIDATES: usize = 3;

struct WindowFit {
    angle: f64,
    gamma: Reparam,
    cost: f64,
    initial_cost: f64,
    q_model: SrvfCurve,
    rounds: usize,
}

fn open_srvf(points: Vec<Vec2>) -> Result<SrvfCurve> {
    to_srvf(&Curve2D::new(points, false)?)
}

fn rotate_all(samples: &[Vec2], rot: &Mat2) -> Vec<Vec2> {
    samples.iter().map(|s| rot * s).collect()
}

/// Procrustes restricted to `|θ| ≤ max`. The weighted cost is
/// `const − 2ρ cos(θ − θ*)`, so the constrained optimum is the bound nearest
/// the free optimum.
fn bounded_procrustes(model: &[Vec2], obs: &[Vec2], weights: &[f64], max: f64) -> RotationFit {
    let fit = procrustes(model, obs, weights);
    if fit.angle.abs() <= max {
        return fit;
    }
    let angle = fit.angle.clamp(-max, max);
    RotationFit { matrix: rotation_matrix(angle), angle, degenerate: fit.degenerate }
}

/// Alternates Procrustes rotation and DP warping for one model window.
fn fit_window(
    model: &Curve2D,
    window: ModelWindow,
    q_obs: &SrvfCurve,
    cfg: &AlignConfig,
    max_rounds: usize,
) -> Result<WindowFit> {
    let n = cfg.samples;
    let to = window.model_param(1.0);
    let q_model = open_srvf(model.sample_arc(window.start, to, n))?;
    let weights = quadrature_weights(n, false);

    let mut gamma = Reparam::identity(cfg.grid);
    let initial_cost = warp_cost(&q_model.samples, &q_obs.samples, &gamma);
    let mut fit = bounded_procrustes(&q_model.samples, &q_obs.samples, &weights, cfg.max_rotation);
    let mut cost = warp_cost(&rotate_all(&q_model.samples, &fit.matrix), &q_obs.samples, &gamma);
    if !(cost <= initial_cost) {
        fit = RotationFit { matrix: Mat2::identity(), angle: 0.0, degenerate: fit.degenerate };
        cost = initial_cost;
    }
    let mut rounds = 0;
    while rounds < max_rounds {
        rounds += 1;
        let rotated = rotate_all(&q_model.samples, &fit.matrix);
        let (new_gamma, _) = dp_on_samples(&rotated, &q_obs.samples, cfg.grid, &cfg.slopes)?;
        let warped = warp_samples(&q_model.samples, &new_gamma);
        let new_fit = bounded_procrustes(&warped, &q_obs.samples, &weights, cfg.max_rotation);
        let new_cost = warp_cost(&rotate_all(&q_model.samples, &new_fit.matrix), &q_obs.samples, &new_gamma);
        if !(new_cost < cost) {
            break;
        }
        let (d_old, d_new) = (cost.sqrt(), new_cost.sqrt());
        gamma = new_gamma;
        fit = new_fit;
        cost = new_cost;
        if d_old - d_new < cfg.tolerance * d_old {
            break;
        }
    }
    Ok(WindowFit { angle: fit.angle, gamma, cost, initial_cost, q_model, rounds })
}

/// Elastic alignment of `model_curve` onto `obs_curve`: rotation in SO(2)
/// plus a monotone reparameterisation of the model, after both curves are
/// reduced to unit-length, centred square-root velocity samples.
///
/// The observation is cut at its first point when closed. A closed model is
/// additionally searched over start points (coarse stride, then refined
/// around the best) and, for open observations, over sub-windows and both
/// traversal directions. The full, unrotated, unwarped model is always one
/// of the candidates, so the result is never worse than no alignment.
pub fn elastic_align(model_curve: &Curve2D, obs_curve: &Curve2D, cfg: &AlignConfig) -> Result<AlignmentResult> {
    let n = cfg.samples;
    if cfg.grid > n {
        return Err(Error::Parameter(format!("DP grid {} exceeds sample count {n}", cfg.grid)));
    }
    let q_obs = open_srvf(obs_curve.sample_arc(0.0, 1.0, n))?;

    let mut candidates = vec![ModelWindow::FULL];
    let stride = cfg.start_stride.max(1);
    let mut spans = vec![1.0];
    let mut directions = vec![false];
    if model_curve.closed {
        if obs_curve.closed {
            if (model_curve.signed_area() > 0.0) != (obs_curve.signed_area() > 0.0) {
                directions = vec![true];
            }
        } else {
            let ratio = obs_curve.arc_length() / model_curve.arc_length();
            spans = cfg.window_spans.iter().map(|f| (f * ratio).clamp(0.05, 1.0)).collect();
            spans.dedup();
            directions = vec![false, true];
        }
        for &reversed in &directions {
            for &span in &spans {
                for j in (0..n).step_by(stride) {
                    if j == 0 && span == 1.0 && !reversed {
                        continue;
                    }
                    candidates.push(ModelWindow { start: j as f64 / n as f64, span, reversed });
                }
            }
        }
    } else if !obs_curve.closed {
        candidates.push(ModelWindow { start: 1.0, span: 1.0, reversed: true });
    }

    // Screen every candidate with a single rotation/warp round, refine the
    // start of the best one locally, then run full alternation on the few
    // most promising windows.
    let mut screened: Vec<(ModelWindow, f64)> = Vec::with_capacity(candidates.len());
    let mut initial_cost = None;
    for w in candidates {
        let fit = fit_window(model_curve, w, &q_obs, cfg, 1)?;
        initial_cost.get_or_insert(fit.initial_cost);
        screened.push((w, fit.cost));
    }
    if model_curve.closed && stride > 1 {
        let center = screened.iter().min_by(|a, b| a.1.total_cmp(&b.1)).map(|(w, _)| *w).unwrap();
        for off in 1..stride {
            for sign in [-1.0, 1.0] {
                let start = (center.start + sign * off as f64 / n as f64).rem_euclid(1.0);
                let w = ModelWindow { start, ..center };
                screened.push((w, fit_window(model_curve, w, &q_obs, cfg, 1)?.cost));
            }
        }
    }
    screened.sort_by(|a, b| a.1.total_cmp(&b.1));

    let mut best: Option<(ModelWindow, WindowFit)> = None;
    for &(w, _) in screened.iter().take(FULLY_REFINED_CANDIDATES) {
        let fit = fit_window(model_curve, w, &q_obs, cfg, cfg.max_rounds)?;
        if best.as_ref().is_none_or(|(_, b)| fit.cost < b.cost) {
            best = Some((w, fit));
        }
    }
    let (window, fit) = best.ok_or_else(|| Error::Internal("no alignment candidate".into()))?;
    let initial_cost = initial_cost.unwrap_or(fit.initial_cost);

    let rotation = rotation_matrix(fit.angle);
    let aligned = SrvfCurve {
        samples: rotate_all(&warp_samples(&fit.q_model.samples, &fit.gamma), &rotation),
        centroid: q_obs.centroid,
        original_length: q_obs.original_length,
        closed: false,
    };
    let normalised = from_srvf(&aligned, Vec2::zeros());
    let mean = normalised.centroid();
    let points = normalised
        .points
        .iter()
        .map(|p| (p - mean) * q_obs.original_length + q_obs.centroid)
        .collect();

    Ok(AlignmentResult {
        rotation,
        angle: fit.angle,
        gamma: fit.gamma,
        distance: fit.cost.max(0.0).sqrt(),
        initial_distance: initial_cost.max(0.0).sqrt(),
        aligned_model_curve: Curve2D { points, closed: false },
        window,
        rounds: fit.rounds,
    })
}

/// Turns an alignment into 2D–3D correspondences: every observation point is
/// mapped through `γ` to an arc-length parameter of the model (silhouette)
/// curve, and the silhouette sample nearest in parameter supplies the vertex.
pub fn infer_correspondences(
    alignment: &AlignmentResult,
    silhouette: &SilhouetteCurve,
    obs: &Curve2D,
    view_index: usize,
) -> Result<CorrespondenceSet> {
    let model = Curve2D::new(silhouette.points.clone(), silhouette.closed)?;
    let model_params = model.arc_params();
    let mut set = CorrespondenceSet::new();
    for (p, tau) in obs.points.iter().zip(obs.arc_params()) {
        let u = alignment.gamma.eval(tau);
        if !(-1e-12..=1.0 + 1e-12).contains(&u) {
            return Err(Error::Internal(format!("warped parameter {u} outside [0, 1]")));
        }
        let sigma = alignment.window.model_param(u);
        let sigma = if model.closed { sigma.rem_euclid(1.0) } else { sigma.clamp(0.0, 1.0) };
        let gap = |s: f64| {
            let d = (s - sigma).abs();
            if model.closed {
                d.min(1.0 - d)
            } else {
                d
            }
        };
        let j = (0..model_params.len())
            .min_by(|&a, &b| gap(model_params[a]).total_cmp(&gap(model_params[b])))
            .ok_or_else(|| Error::Degenerate("empty silhouette".into()))?;
        set.push(view_index, silhouette.source_vertex[j], *p);
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::srvf::rotation_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::TAU;

    fn shape(t: f64) -> Vec2 {
        let a = TAU * t;
        let r = 40.0 + 8.0 * (3.0 * a).cos() + 5.0 * (2.0 * a).sin();
        Vec2::new(r * a.cos(), 0.8 * r * a.sin())
    }

    fn closed_shape(n: usize, warp: impl Fn(f64) -> f64) -> Curve2D {
        Curve2D::new((0..n).map(|i| shape(warp(i as f64 / n as f64))).collect(), true).unwrap()
    }

    fn open_arc(n: usize, warp: impl Fn(f64) -> f64) -> Curve2D {
        Curve2D::new((0..n).map(|i| shape(0.6 * warp(i as f64 / (n - 1) as f64))).collect(), false).unwrap()
    }

    fn silhouette_of(c: &Curve2D) -> SilhouetteCurve {
        SilhouetteCurve { points: c.points.clone(), source_vertex: (0..c.len()).map(|i| 1000 + i).collect(), closed: c.closed }
    }

    #[test]
    fn identical_curves() {
        let c = closed_shape(150, |t| t);
        let r = elastic_align(&c, &c, &AlignConfig::default()).unwrap();
        assert!(r.distance < 1e-9);
        assert!(r.angle.abs() < 1e-9);
        assert!(r.gamma.lattice.iter().all(|(a, b)| a == b));
        assert_eq!(r.window, ModelWindow::FULL);
    }

    #[test]
    fn similarity_and_warp_invariance() {
        let model = open_arc(2000, |t| t);
        let rot = rotation_matrix(25f64.to_radians());
        let obs_pts = open_arc(2000, |t| t * t).points.iter().map(|p| rot * p * 1.7 + Vec2::new(300.0, -120.0)).collect();
        let obs = Curve2D::new(obs_pts, false).unwrap();
        let r = elastic_align(&model, &obs, &AlignConfig::default()).unwrap();
        assert!(r.distance < 1e-3, "{}", r.distance);
        assert!((r.angle - 25f64.to_radians()).abs() < 1e-3);
        assert!(r.distance <= r.initial_distance + 1e-9);
    }

    #[test]
    fn noise_reduces_distance_below_unaligned() {
        let model = closed_shape(100, |t| t);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let noise = Normal::new(0.0, 2.0).unwrap();
        let obs = Curve2D::new(
            model.points.iter().map(|p| p + Vec2::new(noise.sample(&mut rng), noise.sample(&mut rng))).collect(),
            true,
        )
        .unwrap();
        let r = elastic_align(&model, &obs, &AlignConfig::default()).unwrap();
        assert!(r.distance < r.initial_distance, "{} vs {}", r.distance, r.initial_distance);
    }

    #[test]
    fn aligned_curve_lands_on_observation() {
        let model = closed_shape(200, |t| t);
        let obs = Curve2D::new(model.points.iter().map(|p| p * 0.5 + Vec2::new(500.0, 400.0)).collect(), true).unwrap();
        let r = elastic_align(&model, &obs, &AlignConfig::default()).unwrap();
        let resampled = obs.sample_arc(0.0, 1.0, 100);
        let worst = r
            .aligned_model_curve
            .points
            .iter()
            .zip(&resampled)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(worst < 0.5, "{worst}");
    }

    #[test]
    fn identity_correspondences_follow_index() {
        let c = closed_shape(100, |t| t);
        let r = elastic_align(&c, &c, &AlignConfig::default()).unwrap();
        let set = infer_correspondences(&r, &silhouette_of(&c), &c, 2).unwrap();
        assert_eq!(set.len(), 100);
        for (i, t) in set.triples.iter().enumerate() {
            assert_eq!(t.vertex, 1000 + i);
            assert_eq!(t.view, 2);
            assert_eq!(t.point, c.points[i]);
        }
    }

    #[test]
    fn quadratic_warp_maps_midpoint_to_quarter() {
        // Uniformly spaced model line; the warp is imposed directly.
        let model = Curve2D::new((0..101).map(|i| Vec2::new(i as f64, 0.0)).collect(), false).unwrap();
        let sil = silhouette_of(&model);
        let obs = Curve2D::new((0..81).map(|i| Vec2::new(i as f64, 5.0)).collect(), false).unwrap();
        let grid = 101;
        let lattice: Vec<(usize, usize)> = (0..grid).map(|a| {
            let t = a as f64 / 100.0;
            (a, (t * t * 100.0).round() as usize)
        }).collect::<Vec<_>>();
        let mut monotone = vec![lattice[0]];
        for p in lattice.into_iter().skip(1) {
            if p.1 > monotone.last().unwrap().1 {
                monotone.push(p);
            }
        }
        monotone.last_mut().unwrap().0 = 100;
        let r = AlignmentResult {
            rotation: Mat2::identity(),
            angle: 0.0,
            gamma: Reparam { grid, lattice: monotone },
            distance: 0.0,
            initial_distance: 0.0,
            aligned_model_curve: model.clone(),
            window: ModelWindow::FULL,
            rounds: 0,
        };
        let set = infer_correspondences(&r, &sil, &obs, 0).unwrap();
        assert_eq!(set.len(), 81);
        let mid = set.triples[40].vertex - 1000;
        assert!((mid as f64 - 25.0).abs() <= 2.0, "midpoint mapped to {mid}");
    }

    #[test]
    fn open_observation_finds_its_window() {
        let model = closed_shape(200, |t| t);
        let obs = Curve2D::new(model.sample_arc(0.3, 0.7, 80), false).unwrap();
        let r = elastic_align(&model, &obs, &AlignConfig::default()).unwrap();
        assert!(!r.window.reversed);
        assert!((r.window.start - 0.3).abs() < 0.03, "{:?}", r.window);
        let set = infer_correspondences(&r, &silhouette_of(&model), &obs, 0).unwrap();
        let params = model.arc_params();
        for (k, t) in set.triples.iter().enumerate() {
            let expected = 0.3 + 0.4 * k as f64 / 79.0;
            assert!((params[t.vertex - 1000] - expected).abs() < 0.03);
        }
    }

    #[test]
    fn reversed_open_observation() {
        let model = closed_shape(200, |t| t);
        let obs = Curve2D::new(model.sample_arc(0.7, 0.3, 80), false).unwrap();
        let r = elastic_align(&model, &obs, &AlignConfig::default()).unwrap();
        assert!(r.window.reversed, "{:?}", r.window);
        assert!(r.distance < 0.05);
    }
}
