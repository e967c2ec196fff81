use std::collections::HashMap;

use super::Mesh;
use crate::{Error, Result, Vec3};

pub const MAX_REFINEMENT_LEVEL: u32 = 7;

/// Triangulated hemisphere: the `z >= 0` cap of a sphere of `radius`
/// centred at the origin.
///
/// Built by repeated 1→4 subdivision of the upper half of an octahedron with
/// every new vertex pushed back onto the sphere. Midpoints of rim edges stay
/// in the `z = 0` plane, so the boundary is a regular ring on the equator.
/// Faces are wound counter-clockwise seen from outside.
pub fn generate_hemisphere(radius: f64, refinement_level: u32) -> Result<Mesh> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Parameter(format!("radius must be positive, got {radius}")));
    }
    if refinement_level > MAX_REFINEMENT_LEVEL {
        return Err(Error::Parameter(format!(
            "refinement level {refinement_level} outside [0, {MAX_REFINEMENT_LEVEL}]"
        )));
    }

    let mut dirs = vec![
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(-1.0, 0.0, 0.0),
        Vec3::new(0.0, -1.0, 0.0),
        Vec3::new(0.0, 0.0, 1.0),
    ];
    let mut faces: Vec<[usize; 3]> = vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]];

    for _ in 0..refinement_level {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: usize, b: usize, dirs: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                dirs.push((dirs[a] + dirs[b]).normalize());
                dirs.len() - 1
            })
        };
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut dirs);
            let bc = midpoint(b, c, &mut dirs);
            let ca = midpoint(c, a, &mut dirs);
            next.push([a, ab, ca]);
            next.push([ab, b, bc]);
            next.push([ca, bc, c]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }

    let vertices = dirs.into_iter().map(|d| d * radius).collect();
    Mesh::new(vertices, faces)
}
