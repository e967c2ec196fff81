use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::deform::{DeformationGraph, PARAMS_PER_NODE};
use crate::geometry::{Mesh, View};
use crate::solver::CorrespondenceSet;
use crate::{Error, Result, Vec3};

/// Weights of the rigidity, smoothness and data terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyWeights {
    pub w_rot: f64,
    pub w_reg: f64,
    pub w_obs: f64,
}

/// Data residuals are in pixels and regularization residuals in mm, so the
/// default smoothness weight is large.
impl Default for EnergyWeights {
    fn default() -> Self {
        EnergyWeights { w_rot: 1.0, w_reg: 5000.0, w_obs: 100.0 }
    }
}

impl EnergyWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.w_rot, self.w_reg, self.w_obs];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Parameter(format!("energy weights must be finite and nonnegative: {self:?}")));
        }
        if all.iter().all(|&w| w == 0.0) {
            return Err(Error::Parameter("energy weights are all zero".into()));
        }
        Ok(())
    }
}

/// Unweighted squared norms of the three residual blocks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TermCosts {
    pub rot: f64,
    pub reg: f64,
    pub obs: f64,
}

/// Sparse Jacobian stored as one list of (column, value) pairs per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseJacobian {
    pub cols: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseJacobian {
    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows.len(), self.cols);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// `J x`.
    pub fn mul(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.rows.len(), self.rows.iter().map(|row| row.iter().map(|&(j, v)| v * x[j]).sum()))
    }

    /// `Jᵀ y`.
    pub fn tr_mul(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.cols);
        for (row, &yi) in self.rows.iter().zip(y.iter()) {
            for &(j, v) in row {
                out[j] += v * yi;
            }
        }
        out
    }

    /// `JᵀJ` as a dense matrix.
    pub fn normal_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.cols, self.cols);
        for row in &self.rows {
            for &(a, va) in row {
                for &(b, vb) in row {
                    m[(a, b)] += va * vb;
                }
            }
        }
        m
    }

    /// Diagonal of `JᵀJ`.
    pub fn normal_diagonal(&self) -> DVector<f64> {
        let mut d = DVector::zeros(self.cols);
        for row in &self.rows {
            for &(j, v) in row {
                d[j] += v * v;
            }
        }
        d
    }
}

/// Orthonormality defects of each node's affine block: `c1·c2, c1·c3, c2·c3,
/// c1·c1−1, c2·c2−1, c3·c3−1` for its columns `c1, c2, c3`.
pub fn residuals_rot(graph: &DeformationGraph) -> DVector<f64> {
    let mut r = Vec::with_capacity(6 * graph.node_count());
    for np in &graph.node_params {
        let (c1, c2, c3) = (np.affine.column(0), np.affine.column(1), np.affine.column(2));
        r.extend([c1.dot(&c2), c1.dot(&c3), c2.dot(&c3), c1.dot(&c1) - 1.0, c2.dot(&c2) - 1.0, c3.dot(&c3) - 1.0]);
    }
    DVector::from_vec(r)
}

/// Neighbour consistency residuals `A_j(g_k − g_j) + g_j + t_j − (g_k + t_k)`
/// for every directed edge `(j, k)`.
pub fn residuals_reg(graph: &DeformationGraph) -> DVector<f64> {
    let mut r = Vec::with_capacity(3 * graph.edge_count());
    for (j, k) in graph.edges() {
        let (gj, gk) = (graph.nodes[j], graph.nodes[k]);
        let (pj, pk) = (&graph.node_params[j], &graph.node_params[k]);
        let e = pj.affine * (gk - gj) + gj + pj.translation - (gk + pk.translation);
        r.extend(e.iter());
    }
    DVector::from_vec(r)
}

/// Stacking order of the data residuals: by view, then by position in the
/// correspondence set.
fn obs_order(corrs: &CorrespondenceSet, n_views: usize) -> Vec<usize> {
    (0..n_views).flat_map(|k| corrs.view_indices(k)).collect()
}

fn check_obs_inputs(graph: &DeformationGraph, mesh: &Mesh, corrs: &CorrespondenceSet, views: &[View]) -> Result<()> {
    if graph.vertex_bindings.len() != mesh.vertex_count() {
        return Err(Error::Parameter(format!(
            "graph binds {} vertices, mesh has {}",
            graph.vertex_bindings.len(),
            mesh.vertex_count()
        )));
    }
    corrs.validate(views.len(), mesh.vertex_count())
}

fn deformed_vertex(graph: &DeformationGraph, mesh: &Mesh, i: usize) -> Vec3 {
    graph.deform_point(&mesh.vertices[i], &graph.vertex_bindings[i])
}

/// Reprojection residuals `φ(P̃_i, R_k, t_k) − p` of every correspondence.
pub fn residuals_obs(
    graph: &DeformationGraph,
    mesh: &Mesh,
    corrs: &CorrespondenceSet,
    views: &[View],
) -> Result<DVector<f64>> {
    check_obs_inputs(graph, mesh, corrs, views)?;
    let order = obs_order(corrs, views.len());
    let mut r = Vec::with_capacity(2 * order.len());
    for &idx in &order {
        let c = &corrs.triples[idx];
        let p = deformed_vertex(graph, mesh, c.vertex);
        let view = &views[c.view];
        let x = view
            .project_point(&p)
            .ok_or(Error::Projection { view: c.view, vertex: c.vertex, depth: view.depth(&p) })?;
        r.extend((x - c.point).iter());
    }
    Ok(DVector::from_vec(r))
}

/// The full energy with its weights and data-term options, ready to be
/// evaluated at any parameter state of a graph bound to `mesh`.
#[derive(Debug, Clone)]
pub struct Energy<'a> {
    pub mesh: &'a Mesh,
    pub corrs: &'a CorrespondenceSet,
    pub views: &'a [View],
    pub weights: EnergyWeights,
    /// Scale each view's data residuals by `1/√|ℕ(k)|`.
    pub normalize_per_view: bool,
}

impl<'a> Energy<'a> {
    pub fn new(mesh: &'a Mesh, corrs: &'a CorrespondenceSet, views: &'a [View], weights: EnergyWeights) -> Self {
        Energy { mesh, corrs, views, weights, normalize_per_view: false }
    }

    /// Per-view data scale, before the square root of `w_obs`.
    fn view_scales(&self) -> Vec<f64> {
        (0..self.views.len())
            .map(|k| {
                let n = self.corrs.triples.iter().filter(|c| c.view == k).count();
                if self.normalize_per_view && n > 0 {
                    1.0 / (n as f64).sqrt()
                } else {
                    1.0
                }
            })
            .collect()
    }

    pub fn term_costs(&self, graph: &DeformationGraph) -> Result<TermCosts> {
        let obs = residuals_obs(graph, self.mesh, self.corrs, self.views)?;
        let scales = self.view_scales();
        let order = obs_order(self.corrs, self.views.len());
        let obs_cost: f64 = order
            .iter()
            .enumerate()
            .map(|(row, &idx)| {
                let s = scales[self.corrs.triples[idx].view];
                s * s * (obs[2 * row].powi(2) + obs[2 * row + 1].powi(2))
            })
            .sum();
        Ok(TermCosts {
            rot: residuals_rot(graph).norm_squared(),
            reg: residuals_reg(graph).norm_squared(),
            obs: obs_cost,
        })
    }

    /// `w_rot·E_rot + w_reg·E_reg + w_obs·E_obs`.
    pub fn cost(&self, graph: &DeformationGraph) -> Result<f64> {
        let t = self.term_costs(graph)?;
        Ok(self.weights.w_rot * t.rot + self.weights.w_reg * t.reg + self.weights.w_obs * t.obs)
    }

    /// Residual vector whose squared norm is [`Energy::cost`]: rotation
    /// block, regularization block, then data block, each scaled by the
    /// square root of its weight.
    pub fn weighted_residuals(&self, graph: &DeformationGraph) -> Result<DVector<f64>> {
        let rot = residuals_rot(graph) * self.weights.w_rot.sqrt();
        let reg = residuals_reg(graph) * self.weights.w_reg.sqrt();
        let mut obs = residuals_obs(graph, self.mesh, self.corrs, self.views)?;
        let scales = self.view_scales();
        let so = self.weights.w_obs.sqrt();
        for (row, idx) in obs_order(self.corrs, self.views.len()).into_iter().enumerate() {
            let s = so * scales[self.corrs.triples[idx].view];
            obs[2 * row] *= s;
            obs[2 * row + 1] *= s;
        }
        let mut r = Vec::with_capacity(rot.len() + reg.len() + obs.len());
        r.extend(rot.iter());
        r.extend(reg.iter());
        r.extend(obs.iter());
        Ok(DVector::from_vec(r))
    }

    /// Analytic Jacobian of [`Energy::weighted_residuals`] with respect to
    /// the flat node parameter vector.
    pub fn jacobian(&self, graph: &DeformationGraph) -> Result<SparseJacobian> {
        check_obs_inputs(graph, self.mesh, self.corrs, self.views)?;
        let cols = graph.param_count();
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();

        let sr = self.weights.w_rot.sqrt();
        for (j, np) in graph.node_params.iter().enumerate() {
            let o = PARAMS_PER_NODE * j;
            let a = &np.affine;
            let col = |r: usize, c: usize| o + 3 * r + c;
            // Products of two different columns, then squared norms.
            for (p, q) in [(0, 1), (0, 2), (1, 2)] {
                let mut row = Vec::with_capacity(6);
                for r in 0..3 {
                    row.push((col(r, p), sr * a[(r, q)]));
                    row.push((col(r, q), sr * a[(r, p)]));
                }
                rows.push(row);
            }
            for p in 0..3 {
                rows.push((0..3).map(|r| (col(r, p), sr * 2.0 * a[(r, p)])).collect());
            }
        }

        let sg = self.weights.w_reg.sqrt();
        for (j, k) in graph.edges() {
            let d = graph.nodes[k] - graph.nodes[j];
            let (oj, ok) = (PARAMS_PER_NODE * j, PARAMS_PER_NODE * k);
            for r in 0..3 {
                let mut row = Vec::with_capacity(5);
                for c in 0..3 {
                    row.push((oj + 3 * r + c, sg * d[c]));
                }
                row.push((oj + 9 + r, sg));
                row.push((ok + 9 + r, -sg));
                rows.push(row);
            }
        }

        let scales = self.view_scales();
        let so = self.weights.w_obs.sqrt();
        for idx in obs_order(self.corrs, self.views.len()) {
            let c = &self.corrs.triples[idx];
            let view = &self.views[c.view];
            let p = deformed_vertex(graph, self.mesh, c.vertex);
            let (_, jp) = view
                .project_with_jacobian(&p)
                .ok_or(Error::Projection { view: c.view, vertex: c.vertex, depth: view.depth(&p) })?;
            let s = so * scales[c.view];
            let v = self.mesh.vertices[c.vertex];
            let bindings = &graph.vertex_bindings[c.vertex];
            for axis in 0..2 {
                let mut row = Vec::with_capacity(PARAMS_PER_NODE * bindings.len());
                for b in bindings {
                    let o = PARAMS_PER_NODE * b.node;
                    let local = v - graph.nodes[b.node];
                    for r in 0..3 {
                        let dr = s * b.weight * jp[(axis, r)];
                        for cc in 0..3 {
                            row.push((o + 3 * r + cc, dr * local[cc]));
                        }
                        row.push((o + 9 + r, dr));
                    }
                }
                rows.push(row);
            }
        }
        Ok(SparseJacobian { cols, rows })
    }
}

/// `w_rot·‖r_rot‖² + w_reg·‖r_reg‖² + w_obs·‖r_obs‖²` with unnormalized data
/// stacking.
pub fn total_cost(
    graph: &DeformationGraph,
    mesh: &Mesh,
    corrs: &CorrespondenceSet,
    views: &[View],
    weights: &EnergyWeights,
) -> Result<f64> {
    weights.validate()?;
    Energy::new(mesh, corrs, views, *weights).cost(graph)
}

/// Jacobian of the weighted residual vector (see [`Energy::jacobian`]).
pub fn jacobian(
    graph: &DeformationGraph,
    mesh: &Mesh,
    corrs: &CorrespondenceSet,
    views: &[View],
    weights: &EnergyWeights,
) -> Result<SparseJacobian> {
    Energy::new(mesh, corrs, views, *weights).jacobian(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deform::build_graph;
    use crate::geometry::{euler_xyz, generate_hemisphere};
    use crate::Mat3;

    #[test]
    fn rot_residuals_of_stretch() {
        let mesh = generate_hemisphere(10.0, 2).unwrap();
        let mut g = build_graph(&mesh, 6, 2).unwrap();
        assert!(residuals_rot(&g).iter().all(|&x| x == 0.0));
        g.node_params[0].affine = Mat3::from_diagonal(&Vec3::new(2.0, 1.0, 1.0));
        g.node_params[1].affine = euler_xyz(0.4, 1.2, -2.0);
        let r = residuals_rot(&g);
        assert_eq!(r.rows(0, 6).as_slice(), &[0.0, 0.0, 0.0, 3.0, 0.0, 0.0]);
        assert!(r.rows(6, 6).amax() < 1e-12);
    }

    #[test]
    fn reg_residuals_vanish_under_translation() {
        let mesh = generate_hemisphere(10.0, 2).unwrap();
        let mut g = build_graph(&mesh, 8, 3).unwrap();
        assert_eq!(residuals_reg(&g).len(), 3 * g.edge_count());
        assert!(residuals_reg(&g).iter().all(|&x| x == 0.0));
        g.node_params.iter_mut().for_each(|p| p.translation = Vec3::new(1.0, 2.0, 3.0));
        assert!(residuals_reg(&g).amax() < 1e-12);
    }

    #[test]
    fn identity_rot_block_is_twice_columns() {
        let mesh = generate_hemisphere(10.0, 2).unwrap();
        let g = build_graph(&mesh, 6, 2).unwrap();
        let corrs = CorrespondenceSet::new();
        let e = Energy::new(&mesh, &corrs, &[], EnergyWeights { w_rot: 1.0, w_reg: 0.0, w_obs: 0.0 });
        let j = e.jacobian(&g).unwrap().to_dense();
        // Node 0: rows 3..6 are the squared-norm defects, d(c·c)/dc = 2c = 2e_p.
        for p in 0..3 {
            for col in 0..12 {
                let expect = if col == 3 * p + p { 2.0 } else { 0.0 };
                assert_eq!(j[(3 + p, col)], expect);
            }
        }
        // Cross terms at identity: d(c1·c2)/dA[0][1] = A[0][0] = 1, d/dA[1][0] = A[1][1] = 1.
        assert_eq!(j[(0, 1)], 1.0);
        assert_eq!(j[(0, 3)], 1.0);
        assert_eq!(j.row(0).iter().filter(|&&x| x != 0.0).count(), 2);
    }
}
