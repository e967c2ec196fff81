use super::Mesh;
use crate::{Error, Result, Vec3};

/// Closest point to `p` on triangle `(a, b, c)` by Voronoi-region
/// classification.
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

pub fn point_triangle_distance(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    (p - closest_point_on_triangle(p, a, b, c)).norm()
}

/// Exact minimum distance from `p` to the triangles of `mesh`. A mesh without
/// faces is treated as a point cloud.
pub fn point_to_surface_distance(p: &Vec3, mesh: &Mesh) -> Result<f64> {
    if mesh.vertices.is_empty() {
        return Err(Error::Parameter("distance query against an empty mesh".into()));
    }
    if mesh.faces.is_empty() {
        return Ok(mesh.vertices.iter().map(|v| (p - v).norm()).fold(f64::INFINITY, f64::min));
    }
    let mut best_sq = f64::INFINITY;
    for &[i, j, k] in &mesh.faces {
        let (a, b, c) = (&mesh.vertices[i], &mesh.vertices[j], &mesh.vertices[k]);
        // Cheap rejection: the triangle's bounding sphere around `a` is
        // farther than the best distance so far.
        let reach = (b - a).norm().max((c - a).norm());
        let to_a = (p - a).norm();
        if to_a - reach > 0.0 && (to_a - reach).powi(2) > best_sq {
            continue;
        }
        let d = (p - closest_point_on_triangle(p, a, b, c)).norm_squared();
        if d < best_sq {
            best_sq = d;
        }
    }
    Ok(best_sq.sqrt())
}
