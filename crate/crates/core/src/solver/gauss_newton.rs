use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::config::SolverConfig;
use super::energy::{Energy, SparseJacobian};
use crate::deform::DeformationGraph;
use crate::geometry::{Mesh, View};
use crate::solver::CorrespondenceSet;
use crate::{Error, Result};

/// Outcome of one damped Gauss-Newton run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnReport {
    /// Cost at the start followed by the cost after every accepted step.
    pub cost_trace: Vec<f64>,
    /// Accepted steps.
    pub iterations: usize,
    /// Stopped on the relative-decrease test or a vanishing gradient rather
    /// than the iteration cap.
    pub converged: bool,
    pub final_lambda: f64,
}

impl GnReport {
    pub fn final_cost(&self) -> f64 {
        *self.cost_trace.last().expect("trace starts with the initial cost")
    }
}

/// Gradient norm below which a state counts as stationary, relative to the
/// square root of the cost scale.
const STATIONARY_GRADIENT: f64 = 1e-10;

fn solve_dense(jac: &SparseJacobian, gradient: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
    let mut a: DMatrix<f64> = jac.normal_matrix();
    for i in 0..a.nrows() {
        a[(i, i)] += lambda;
    }
    let chol = a.cholesky()?;
    let step = -chol.solve(gradient);
    step.iter().all(|x| x.is_finite()).then_some(step)
}

/// Jacobi-preconditioned conjugate gradients on `(JᵀJ + λI) x = −g`, using
/// only products with `J` and `Jᵀ`.
fn solve_sparse(jac: &SparseJacobian, gradient: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
    let n = jac.cols;
    let diag = jac.normal_diagonal().map(|d| 1.0 / (d + lambda));
    let apply = |x: &DVector<f64>| jac.tr_mul(&jac.mul(x)) + x * lambda;
    let b = -gradient;
    let mut x = DVector::zeros(n);
    let mut r = b.clone();
    let mut z = r.component_mul(&diag);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    let target = 1e-12 * b.norm();
    for _ in 0..(10 * n).max(100) {
        if r.norm() <= target {
            break;
        }
        let ap = apply(&p);
        let pap = p.dot(&ap);
        if !(pap > 0.0) {
            return None;
        }
        let alpha = rz / pap;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        z = r.component_mul(&diag);
        let rz_new = r.dot(&z);
        p = &z + &p * (rz_new / rz);
        rz = rz_new;
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Levenberg-damped Gauss-Newton over the node parameters of `graph`, with
/// correspondences held fixed. Steps are `δ = −(JᵀJ + λI)⁻¹ Jᵀr`; a step that
/// does not lower the cost is rejected and `λ` grows tenfold, an accepted one
/// shrinks it tenfold. Returns [`Error::SolverStall`] when `λ` passes the
/// configured ceiling at a non-stationary point.
pub fn gauss_newton_solve(
    graph: &mut DeformationGraph,
    mesh: &Mesh,
    corrs: &CorrespondenceSet,
    views: &[View],
    cfg: &SolverConfig,
) -> Result<GnReport> {
    cfg.validate()?;
    let energy = Energy { mesh, corrs, views, weights: cfg.weights, normalize_per_view: cfg.normalize_per_view };
    let dense = graph.node_count() <= cfg.dense_node_limit;
    let mut x = graph.params_vector();
    let mut cost = energy.cost(graph)?;
    let mut lambda = cfg.lambda0;
    let mut report = GnReport { cost_trace: vec![cost], iterations: 0, converged: false, final_lambda: lambda };

    while report.iterations < cfg.max_gn_iters {
        let jac = energy.jacobian(graph)?;
        let r = energy.weighted_residuals(graph)?;
        let gradient = jac.tr_mul(&r);
        if gradient.norm() <= STATIONARY_GRADIENT * cost.sqrt().max(1.0) {
            report.converged = true;
            break;
        }
        let accepted = loop {
            let step = if dense { solve_dense(&jac, &gradient, lambda) } else { solve_sparse(&jac, &gradient, lambda) };
            if let Some(step) = step {
                let trial = &x + step;
                graph.set_params_vector(&trial)?;
                // A trial that pushes a vertex behind a camera is rejected like
                // any other cost increase.
                match energy.cost(graph) {
                    Ok(c) if c < cost => break Some((trial, c)),
                    Ok(_) | Err(Error::Projection { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
            lambda *= 10.0;
            if lambda > cfg.lambda_max {
                break None;
            }
        };
        let Some((trial, new_cost)) = accepted else {
            graph.set_params_vector(&x)?;
            report.final_lambda = lambda;
            // Rounding can leave a tiny gradient that no step improves on.
            if gradient.norm() <= 1e-6 * cost.sqrt().max(1.0) {
                report.converged = true;
                return Ok(report);
            }
            return Err(Error::SolverStall { lambda, cost, gradient_norm: gradient.norm() });
        };
        x = trial;
        let decrease = (cost - new_cost) / cost;
        cost = new_cost;
        lambda = (lambda / 10.0).max(1e-15);
        report.cost_trace.push(cost);
        report.iterations += 1;
        if decrease < cfg.gn_tolerance {
            report.converged = true;
            break;
        }
    }
    graph.set_params_vector(&x)?;
    report.final_lambda = lambda;
    Ok(report)
}
