use serde::{Deserialize, Serialize};

use crate::geometry::{point_to_surface_distance, Mesh};
use crate::{Error, Result};

/// Reconstruction error summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Mean per-vertex error, mm.
    pub mae: f64,
    /// Population standard deviation of the per-vertex errors, mm.
    pub sd: f64,
    /// Distance of every reconstructed vertex to the target surface, mm.
    pub per_vertex: Vec<f64>,
}

impl Metrics {
    pub fn from_errors(per_vertex: Vec<f64>) -> Result<Metrics> {
        if per_vertex.is_empty() {
            return Err(Error::Parameter("no errors to summarize".into()));
        }
        let n = per_vertex.len() as f64;
        let mae = per_vertex.iter().sum::<f64>() / n;
        let var = per_vertex.iter().map(|e| (e - mae).powi(2)).sum::<f64>() / n;
        Ok(Metrics { mae, sd: var.sqrt(), per_vertex })
    }
}

/// Point-to-surface distance from every vertex of `recon` to `target`.
pub fn evaluate_reconstruction(recon: &Mesh, target: &Mesh) -> Result<Metrics> {
    if recon.vertices.is_empty() {
        return Err(Error::Parameter("reconstruction has no vertices".into()));
    }
    let errors = recon.vertices.iter().map(|p| point_to_surface_distance(p, target)).collect::<Result<Vec<_>>>()?;
    Metrics::from_errors(errors)
}
