use crate::{Error, Result, Vec3};

/// Indexed triangle surface. Coordinates are millimetres.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
}

impl Mesh {
    /// Builds a mesh after checking face indices and coordinate finiteness.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = Mesh { vertices, faces };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if let Some(i) = self.vertices.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::Parameter(format!("vertex {i} has non-finite coordinates")));
        }
        for (fi, f) in self.faces.iter().enumerate() {
            if f.iter().any(|&i| i >= n) {
                return Err(Error::Parameter(format!(
                    "face {fi} references a vertex outside 0..{n}"
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::Parameter(format!("face {fi} is degenerate: {f:?}")));
            }
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn centroid(&self) -> Vec3 {
        if self.vertices.is_empty() {
            return Vec3::zeros();
        }
        self.vertices.iter().sum::<Vec3>() / self.vertices.len() as f64
    }

    /// Axis-aligned bounding box as (min, max).
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    pub fn bounding_box_diagonal(&self) -> f64 {
        if self.vertices.is_empty() {
            return 0.0;
        }
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    pub fn triangle(&self, face: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[face];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len())
            .map(|f| {
                let [a, b, c] = self.triangle(f);
                0.5 * (b - a).cross(&(c - a)).norm()
            })
            .sum()
    }

    /// Returns a copy with every vertex replaced by `f(index, vertex)`.
    pub fn map_vertices(&self, mut f: impl FnMut(usize, &Vec3) -> Vec3) -> Mesh {
        Mesh {
            vertices: self.vertices.iter().enumerate().map(|(i, v)| f(i, v)).collect(),
            faces: self.faces.clone(),
        }
    }

    /// Mean Euclidean distance between corresponding vertices of two meshes
    /// with the same vertex count.
    pub fn mean_vertex_displacement(&self, other: &Mesh) -> Result<f64> {
        if self.vertices.len() != other.vertices.len() {
            return Err(Error::Parameter(format!(
                "vertex count mismatch: {} vs {}",
                self.vertices.len(),
                other.vertices.len()
            )));
        }
        if self.vertices.is_empty() {
            return Ok(0.0);
        }
        let total: f64 = self
            .vertices
            .iter()
            .zip(&other.vertices)
            .map(|(a, b)| (a - b).norm())
            .sum();
        Ok(total / self.vertices.len() as f64)
    }
}
