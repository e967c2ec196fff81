use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec2};

/// One 2D–3D pairing: observation pixel `point` in view `view` constrains
/// the image of mesh vertex `vertex`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub view: usize,
    pub vertex: usize,
    pub point: Vec2,
}

/// Correspondences of all views, stacked by view and then by observation
/// order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceSet {
    pub triples: Vec<Correspondence>,
}

impl CorrespondenceSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn push(&mut self, view: usize, vertex: usize, point: Vec2) {
        self.triples.push(Correspondence { view, vertex, point });
    }

    /// Appends `other`, then restores the by-view stacking order. The sort is
    /// stable so observation order inside a view is kept.
    pub fn extend(&mut self, other: CorrespondenceSet) {
        self.triples.extend(other.triples);
        self.triples.sort_by_key(|c| c.view);
    }

    /// Index set of the observations that belong to view `k`.
    pub fn view_indices(&self, k: usize) -> Vec<usize> {
        (0..self.triples.len()).filter(|&i| self.triples[i].view == k).collect()
    }

    pub fn validate(&self, n_views: usize, n_vertices: usize) -> Result<()> {
        for (i, c) in self.triples.iter().enumerate() {
            if c.view >= n_views {
                return Err(Error::Parameter(format!("correspondence {i} names view {} of {n_views}", c.view)));
            }
            if c.vertex >= n_vertices {
                return Err(Error::Parameter(format!(
                    "correspondence {i} names vertex {} of {n_vertices}",
                    c.vertex
                )));
            }
            if !(c.point.x.is_finite() && c.point.y.is_finite()) {
                return Err(Error::Parameter(format!("correspondence {i} has a non-finite point")));
            }
        }
        Ok(())
    }
}
