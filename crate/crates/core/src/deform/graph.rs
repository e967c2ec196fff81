use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::geometry::Mesh;
use crate::{Error, Mat3, Result, Vec3};

/// Default number of nodes blended per vertex.
pub const DEFAULT_NEIGHBORS: usize = 4;
/// Default node count for templates of a few thousand vertices.
pub const DEFAULT_NODES: usize = 64;
/// Parameters per node: a row-major 3×3 affine block followed by a translation.
pub const PARAMS_PER_NODE: usize = 12;

/// Affine transform attached to one graph node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeParams {
    pub affine: Mat3,
    pub translation: Vec3,
}

impl NodeParams {
    pub fn identity() -> Self {
        NodeParams { affine: Mat3::identity(), translation: Vec3::zeros() }
    }
}

/// A vertex's blend of nearby nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Binding {
    pub node: usize,
    pub weight: f64,
}

/// Embedded deformation graph bound to one mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeformationGraph {
    /// Node positions `g_j`.
    pub nodes: Vec<Vec3>,
    /// Mesh vertex each node was sampled from.
    pub node_vertices: Vec<usize>,
    pub node_params: Vec<NodeParams>,
    /// Symmetric regularization neighbourhoods, each sorted ascending.
    pub node_neighbors: Vec<Vec<usize>>,
    /// Per mesh vertex, `m` (node, weight) pairs whose weights sum to one.
    pub vertex_bindings: Vec<Vec<Binding>>,
    /// Nodes blended per vertex.
    pub m: usize,
}

/// Relative tolerance under which two distances count as tied. Symmetric
/// templates produce many exact ties that rounding would otherwise break
/// differently after a rigid move.
const TIE_TOLERANCE: f64 = 1e-9;

/// Indices of the `count` nearest `points` to `p`, nearest first; ties go to
/// the lower index.
fn nearest(p: &Vec3, points: &[Vec3], count: usize) -> Vec<(usize, f64)> {
    let mut d: Vec<(usize, f64)> = points.iter().enumerate().map(|(j, g)| (j, (p - g).norm())).collect();
    d.sort_by(|a, b| a.1.total_cmp(&b.1));
    let scale = d.last().map_or(0.0, |x| x.1) * TIE_TOLERANCE;
    let mut start = 0;
    for i in 1..=d.len() {
        if i == d.len() || d[i].1 - d[i - 1].1 > scale {
            d[start..i].sort_by_key(|x| x.0);
            start = i;
        }
    }
    d.truncate(count);
    d
}

/// Farthest-point sampling over the mesh vertices, seeded at vertex 0.
fn farthest_point_sample(vertices: &[Vec3], count: usize) -> Vec<usize> {
    let mut chosen = vec![0usize];
    let mut dist: Vec<f64> = vertices.iter().map(|v| (v - vertices[0]).norm_squared()).collect();
    let scale = dist.iter().fold(0.0f64, |a, &b| a.max(b));
    while chosen.len() < count {
        let far = dist.iter().fold(0.0f64, |a, &b| a.max(b));
        let best = dist.iter().position(|&d| d >= far - TIE_TOLERANCE * scale).unwrap_or(0);
        chosen.push(best);
        let g = vertices[best];
        for (d, v) in dist.iter_mut().zip(vertices) {
            *d = d.min((v - g).norm_squared());
        }
    }
    chosen
}

/// Blend weights of a point before normalization: `1 - d/d_max` over the `m`
/// nearest nodes, with `d_max` the distance to the `(m+1)`-th nearest.
/// Near-ties are ordered by index, so `d_max` is taken as the largest of the
/// `m + 1` distances to keep every weight nonnegative.
pub fn raw_binding(p: &Vec3, nodes: &[Vec3], m: usize) -> Vec<Binding> {
    let near = nearest(p, nodes, m + 1);
    let d_max = near.iter().fold(0.0f64, |a, x| a.max(x.1));
    near[..m]
        .iter()
        .map(|&(node, d)| Binding { node, weight: if d_max > 0.0 { 1.0 - d / d_max } else { 0.0 } })
        .collect()
}

fn normalized_binding(p: &Vec3, nodes: &[Vec3], m: usize) -> Vec<Binding> {
    let mut b = raw_binding(p, nodes, m);
    let sum: f64 = b.iter().map(|x| x.weight).sum();
    // All m nodes sitting exactly at d_max leave no preference; share evenly.
    for x in &mut b {
        x.weight = if sum > 0.0 { x.weight / sum } else { 1.0 / m as f64 };
    }
    b
}

/// Samples `n_nodes` nodes from `mesh` and binds every vertex to its `m`
/// nearest nodes. All node transforms start at identity.
pub fn build_graph(mesh: &Mesh, n_nodes: usize, m: usize) -> Result<DeformationGraph> {
    if m < 2 {
        return Err(Error::Parameter(format!("m = {m}, need at least 2")));
    }
    if n_nodes < 4 || n_nodes < m + 1 {
        return Err(Error::Parameter(format!("{n_nodes} nodes cannot support m = {m}")));
    }
    if n_nodes > mesh.vertex_count() {
        return Err(Error::Parameter(format!(
            "{n_nodes} nodes requested from a mesh of {} vertices",
            mesh.vertex_count()
        )));
    }
    let node_vertices = farthest_point_sample(&mesh.vertices, n_nodes);
    let nodes: Vec<Vec3> = node_vertices.iter().map(|&i| mesh.vertices[i]).collect();
    if let Some(j) = (1..nodes.len()).find(|&j| nodes[..j].contains(&nodes[j])) {
        return Err(Error::Degenerate(format!("node {j} duplicates an earlier node; mesh has too few distinct vertices")));
    }

    let mut node_neighbors = vec![Vec::new(); n_nodes];
    for (j, g) in nodes.iter().enumerate() {
        // The nearest entry is the node itself.
        for (k, _) in nearest(g, &nodes, m + 1).into_iter().filter(|&(k, _)| k != j).take(m) {
            node_neighbors[j].push(k);
            node_neighbors[k].push(j);
        }
    }
    for list in &mut node_neighbors {
        list.sort_unstable();
        list.dedup();
    }

    let vertex_bindings = mesh.vertices.iter().map(|p| normalized_binding(p, &nodes, m)).collect();
    Ok(DeformationGraph {
        nodes,
        node_vertices,
        node_params: vec![NodeParams::identity(); n_nodes],
        node_neighbors,
        vertex_bindings,
        m,
    })
}

impl DeformationGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn param_count(&self) -> usize {
        PARAMS_PER_NODE * self.nodes.len()
    }

    /// Directed regularization edges `(j, k)` in node order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.node_neighbors.iter().enumerate().flat_map(|(j, ks)| ks.iter().map(move |&k| (j, k)))
    }

    pub fn edge_count(&self) -> usize {
        self.node_neighbors.iter().map(Vec::len).sum()
    }

    /// Blended image of `p` under the given bindings and the current node
    /// transforms.
    pub fn deform_point(&self, p: &Vec3, bindings: &[Binding]) -> Vec3 {
        let mut out = Vec3::zeros();
        for b in bindings {
            let g = self.nodes[b.node];
            let np = &self.node_params[b.node];
            out += b.weight * (np.affine * (p - g) + g + np.translation);
        }
        out
    }

    /// Flat parameter vector: for each node, `A` row-major then `t`.
    pub fn params_vector(&self) -> DVector<f64> {
        let mut x = DVector::zeros(self.param_count());
        for (j, np) in self.node_params.iter().enumerate() {
            let o = PARAMS_PER_NODE * j;
            for r in 0..3 {
                for c in 0..3 {
                    x[o + 3 * r + c] = np.affine[(r, c)];
                }
                x[o + 9 + r] = np.translation[r];
            }
        }
        x
    }

    pub fn set_params_vector(&mut self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.param_count() {
            return Err(Error::Parameter(format!(
                "parameter vector has length {}, graph needs {}",
                x.len(),
                self.param_count()
            )));
        }
        for (j, np) in self.node_params.iter_mut().enumerate() {
            let o = PARAMS_PER_NODE * j;
            for r in 0..3 {
                for c in 0..3 {
                    np.affine[(r, c)] = x[o + 3 * r + c];
                }
                np.translation[r] = x[o + 9 + r];
            }
        }
        Ok(())
    }

    pub fn reset_params(&mut self) {
        self.node_params.iter_mut().for_each(|p| *p = NodeParams::identity());
    }

    /// Sets every node to the parameters that reproduce the rigid motion
    /// `x ↦ R x + t`.
    pub fn set_rigid(&mut self, rotation: &Mat3, translation: &Vec3) {
        for (g, np) in self.nodes.iter().zip(&mut self.node_params) {
            np.affine = *rotation;
            np.translation = rotation * g - g + translation;
        }
    }

    /// JSON dump of nodes, neighbourhoods and node parameters.
    pub fn debug_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Dump<'a> {
            nodes: &'a [Vec3],
            neighbors: &'a [Vec<usize>],
            params: &'a [NodeParams],
        }
        Ok(serde_json::to_string_pretty(&Dump {
            nodes: &self.nodes,
            neighbors: &self.node_neighbors,
            params: &self.node_params,
        })?)
    }
}

/// Applies the graph's node transforms to the mesh it was built for.
pub fn deform_mesh(mesh: &Mesh, graph: &DeformationGraph) -> Result<Mesh> {
    if graph.vertex_bindings.len() != mesh.vertex_count() {
        return Err(Error::Parameter(format!(
            "graph binds {} vertices, mesh has {}",
            graph.vertex_bindings.len(),
            mesh.vertex_count()
        )));
    }
    Ok(mesh.map_vertices(|i, p| graph.deform_point(p, &graph.vertex_bindings[i])))
}

/// Rebuilds the graph on the current deformed shape with identity transforms.
pub fn reinitialize(graph: &DeformationGraph, deformed_mesh: &Mesh) -> Result<DeformationGraph> {
    build_graph(deformed_mesh, graph.node_count(), graph.m)
}
