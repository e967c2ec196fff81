use std::time::Instant;

use log::debug;
use serde::{Deserialize, Serialize};

use super::config::SolverConfig;
use super::energy::{Energy, TermCosts};
use super::gauss_newton::gauss_newton_solve;
use crate::baselines::{icp_correspondences, normvec_correspondences, CorrespondenceStrategy};
use crate::deform::{build_graph, deform_mesh, reinitialize};
use crate::geometry::{
    default_alpha, extract_silhouette, project_vertices, projected_edge_bound, Mesh, SilhouetteCurve, View,
};
use crate::solver::CorrespondenceSet;
use crate::srvf::{elastic_align, infer_correspondences, smooth_curve, Curve2D};
use crate::{Error, Result};

/// One outer iteration: a Gauss-Newton solve followed by a graph rebuild.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterIteration {
    /// Correspondence round the solve used (1-based).
    pub round: usize,
    pub correspondences: usize,
    /// Costs over accepted Gauss-Newton steps.
    pub cost_trace: Vec<f64>,
    /// Unweighted term values after the solve.
    pub terms: TermCosts,
    /// Mean vertex displacement produced by this iteration, mm.
    pub displacement: f64,
    /// The solve hit the damping ceiling; the iteration kept its last
    /// accepted state.
    pub stalled: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub correspondence_s: f64,
    pub solve_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    #[serde(skip)]
    pub mesh: Option<Mesh>,
    pub strategy: CorrespondenceStrategy,
    pub final_cost: f64,
    pub outer: Vec<OuterIteration>,
    /// Correspondence computations performed, including the first.
    pub correspondence_rounds: usize,
    /// Outer iterations run.
    pub iterations: usize,
    pub gn_iterations: usize,
    pub converged: bool,
    /// Settling threshold in effect, mm.
    pub threshold: f64,
    pub timings: Timings,
}

impl ReconstructionResult {
    pub fn mesh(&self) -> &Mesh {
        self.mesh.as_ref().expect("result carries its mesh")
    }

    pub fn report_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Silhouette of `mesh` in `view`, with projection failures attributed to
/// view `k`. Without a fixed `alpha`, the larger of the spacing-based default
/// and the longest projected mesh edge is used.
pub fn mesh_silhouette(mesh: &Mesh, view: &View, k: usize, alpha: Option<f64>) -> Result<SilhouetteCurve> {
    let projected = project_vertices(mesh, view).map_err(|e| match e {
        Error::Projection { vertex, depth, .. } => Error::Projection { view: k, vertex, depth },
        other => other,
    })?;
    let alpha = match alpha {
        Some(a) => a,
        None => default_alpha(&projected)?.max(projected_edge_bound(mesh, &projected)?),
    };
    extract_silhouette(&projected, alpha)
}

/// Gaussian smoothing with a width of `sigma_px` pixels of arc length,
/// converted to points by the curve's mean spacing.
fn smooth_px(curve: &Curve2D, sigma_px: f64) -> Result<Curve2D> {
    let gaps = if curve.closed { curve.len() } else { curve.len().saturating_sub(1) };
    if sigma_px == 0.0 || gaps == 0 {
        return Ok(curve.clone());
    }
    let spacing = curve.arc_length() / gaps as f64;
    if !(spacing > 0.0) {
        return Ok(curve.clone());
    }
    smooth_curve(curve, sigma_px / spacing)
}

/// Replaces each pair's target with the raw observation point at the same
/// index. `set` holds a subsequence of `guide`'s points in order.
fn retarget(set: &mut CorrespondenceSet, guide: &Curve2D, raw: &Curve2D) -> Result<()> {
    let mut i = 0;
    for c in set.triples.iter_mut() {
        while i < guide.points.len() && guide.points[i] != c.point {
            i += 1;
        }
        if i == guide.points.len() {
            return Err(Error::Internal("correspondence target not on the guide contour".into()));
        }
        c.point = raw.points[i];
        i += 1;
    }
    Ok(())
}

/// Correspondences between the current mesh and the observed contours in
/// every view, by the given strategy.
///
/// Matching runs on curves smoothed along their point sequence
/// (`observation_smoothing`): the observed contour for every strategy, and
/// also the model silhouette for elastic alignment. The resulting pairs
/// target the raw observed points.
pub fn compute_correspondences(
    mesh: &Mesh,
    observations: &[Curve2D],
    views: &[View],
    strategy: &CorrespondenceStrategy,
    cfg: &SolverConfig,
) -> Result<CorrespondenceSet> {
    let mut set = CorrespondenceSet::new();
    for (k, (obs, view)) in observations.iter().zip(views).enumerate() {
        let sil = mesh_silhouette(mesh, view, k, cfg.alpha)?;
        let guide = smooth_px(obs, cfg.observation_smoothing)?;
        let mut part = match *strategy {
            CorrespondenceStrategy::Srvf => {
                let model = smooth_px(&Curve2D::new(sil.points.clone(), sil.closed)?, cfg.observation_smoothing)?;
                let alignment = elastic_align(&model, &guide, &cfg.align)?;
                let smoothed_sil = SilhouetteCurve { points: model.points, ..sil };
                infer_correspondences(&alignment, &smoothed_sil, &guide, k)?
            }
            CorrespondenceStrategy::Icp => icp_correspondences(&sil, &guide, k)?,
            CorrespondenceStrategy::IcpNormVec { threshold_deg } => {
                normvec_correspondences(&sil, &guide, k, threshold_deg)?
            }
        };
        retarget(&mut part, &guide, obs)?;
        set.extend(part);
    }
    Ok(set)
}

/// Deforms `template` until its silhouettes agree with `observations`.
///
/// Each outer iteration solves for the graph parameters with the current
/// correspondences fixed, applies the deformation and rebuilds the graph on
/// the new shape. Once an iteration moves the mesh by less than the settling
/// threshold, elastic correspondences are recomputed if the mesh moved since
/// the last round and the round budget allows; otherwise the loop ends.
/// Nearest-neighbour strategies recompute correspondences every iteration.
pub fn reconstruct(
    template: &Mesh,
    observations: &[Curve2D],
    views: &[View],
    cfg: &SolverConfig,
    strategy: &CorrespondenceStrategy,
) -> Result<ReconstructionResult> {
    cfg.validate()?;
    strategy.validate()?;
    if views.len() < 3 {
        return Err(Error::Parameter(format!("need at least 3 views, got {}", views.len())));
    }
    if observations.len() != views.len() {
        return Err(Error::Parameter(format!(
            "{} observation curves for {} views",
            observations.len(),
            views.len()
        )));
    }
    let start = Instant::now();
    let mut timings = Timings::default();
    let threshold = cfg.recorrespond_threshold.unwrap_or(cfg.recorrespond_fraction * template.bounding_box_diagonal());

    let mut mesh = template.clone();
    let mut graph = build_graph(&mesh, cfg.graph_nodes, cfg.graph_neighbors)?;
    let t = Instant::now();
    let mut corrs = compute_correspondences(&mesh, observations, views, strategy, cfg)?;
    timings.correspondence_s += t.elapsed().as_secs_f64();
    let mut rounds = 1;
    let mut round_mesh = mesh.clone();
    let mut outer = Vec::new();
    let mut converged = false;
    let mut gn_iterations = 0;

    while outer.len() < cfg.max_outer_iters {
        let t = Instant::now();
        let (cost_trace, stalled) = match gauss_newton_solve(&mut graph, &mesh, &corrs, views, cfg) {
            Ok(report) => {
                gn_iterations += report.iterations;
                (report.cost_trace, false)
            }
            Err(Error::SolverStall { cost, .. }) => (vec![cost], true),
            Err(e) => return Err(e),
        };
        let energy = Energy { mesh: &mesh, corrs: &corrs, views, weights: cfg.weights, normalize_per_view: cfg.normalize_per_view };
        let terms = energy.term_costs(&graph)?;
        let next = deform_mesh(&mesh, &graph)?;
        timings.solve_s += t.elapsed().as_secs_f64();
        let displacement = next.mean_vertex_displacement(&mesh)?;
        graph = reinitialize(&graph, &next)?;
        mesh = next;
        debug!(
            "outer {} round {rounds}: cost {:.6e} -> {:.6e}, moved {displacement:.4} mm",
            outer.len(),
            cost_trace[0],
            cost_trace[cost_trace.len() - 1]
        );
        outer.push(OuterIteration { round: rounds, correspondences: corrs.len(), cost_trace, terms, displacement, stalled });

        let settled = displacement < threshold;
        let recompute = if strategy.recomputes_every_iteration() {
            !settled
        } else {
            settled && rounds < cfg.max_recorrespondences && mesh.mean_vertex_displacement(&round_mesh)? >= threshold
        };
        if settled && !recompute {
            converged = true;
            break;
        }
        if recompute {
            if outer.len() == cfg.max_outer_iters {
                break;
            }
            let t = Instant::now();
            corrs = compute_correspondences(&mesh, observations, views, strategy, cfg)?;
            timings.correspondence_s += t.elapsed().as_secs_f64();
            rounds += 1;
            round_mesh = mesh.clone();
        }
    }

    let final_cost = Energy { mesh: &mesh, corrs: &corrs, views, weights: cfg.weights, normalize_per_view: cfg.normalize_per_view }
        .cost(&graph)?;
    timings.total_s = start.elapsed().as_secs_f64();
    Ok(ReconstructionResult {
        mesh: Some(mesh),
        strategy: *strategy,
        final_cost,
        iterations: outer.len(),
        outer,
        correspondence_rounds: rounds,
        gn_iterations,
        converged,
        threshold,
        timings,
    })
}
