use delaunator::{next_halfedge, triangulate, Point, Triangulation, EMPTY};

use super::{Mesh, ProjectedSet};
use crate::{Error, Result, Vec2};

/// Ordered outline of a projected vertex set.
#[derive(Debug, Clone, PartialEq)]
pub struct SilhouetteCurve {
    pub points: Vec<Vec2>,
    pub source_vertex: Vec<usize>,
    pub closed: bool,
}

impl SilhouetteCurve {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Multiplier applied to the median nearest-neighbour spacing to get the
/// default alpha.
pub const DEFAULT_ALPHA_SPACING_FACTOR: f64 = 3.0;

fn delaunay(points: &[Vec2]) -> Result<Triangulation> {
    if points.len() < 3 {
        return Err(Error::Degenerate(format!(
            "alpha shape needs at least 3 points, got {}",
            points.len()
        )));
    }
    let pts: Vec<Point> = points.iter().map(|p| Point { x: p.x, y: p.y }).collect();
    let tri = triangulate(&pts);
    if tri.triangles.is_empty() {
        return Err(Error::Degenerate("points are collinear".into()));
    }
    Ok(tri)
}

/// Default alpha: [`DEFAULT_ALPHA_SPACING_FACTOR`] times the median
/// nearest-neighbour distance of the projected points.
pub fn default_alpha(projected: &ProjectedSet) -> Result<f64> {
    let tri = delaunay(&projected.points)?;
    let mut nearest = vec![f64::INFINITY; projected.points.len()];
    for e in 0..tri.triangles.len() {
        let a = tri.triangles[e];
        let b = tri.triangles[next_halfedge(e)];
        let d = (projected.points[a] - projected.points[b]).norm();
        nearest[a] = nearest[a].min(d);
        nearest[b] = nearest[b].min(d);
    }
    let mut finite: Vec<f64> = nearest.into_iter().filter(|d| d.is_finite() && *d > 0.0).collect();
    if finite.is_empty() {
        return Err(Error::Degenerate("no distinct neighbouring points".into()));
    }
    finite.sort_by(f64::total_cmp);
    Ok(DEFAULT_ALPHA_SPACING_FACTOR * finite[finite.len() / 2])
}

/// Longest image-space edge of the mesh faces, given the projection of every
/// mesh vertex in vertex order. An alpha at least this large keeps every
/// Delaunay triangle that a projected face covers, so the outline cannot cut
/// into the projected surface where the vertex density is uneven.
pub fn projected_edge_bound(mesh: &Mesh, projected: &ProjectedSet) -> Result<f64> {
    if projected.points.len() != mesh.vertex_count() {
        return Err(Error::Parameter(format!(
            "{} projected points for {} vertices",
            projected.points.len(),
            mesh.vertex_count()
        )));
    }
    let p = &projected.points;
    Ok(mesh
        .faces
        .iter()
        .flat_map(|f| [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])])
        .map(|(a, b)| (p[a] - p[b]).norm())
        .fold(0.0, f64::max))
}

fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Radius of the smallest circle enclosing the triangle: the circumradius for
/// acute triangles, half the longest edge otherwise. Never exceeds the
/// triangle's longest edge, so any alpha above the point-set diameter keeps
/// every Delaunay triangle.
fn enclosing_radius(a: &Vec2, b: &Vec2, c: &Vec2) -> f64 {
    let ab = (b - a).norm_squared();
    let bc = (c - b).norm_squared();
    let ca = (a - c).norm_squared();
    let (longest, o1, o2) = if ab >= bc && ab >= ca {
        (ab, bc, ca)
    } else if bc >= ca {
        (bc, ab, ca)
    } else {
        (ca, ab, bc)
    };
    if longest >= o1 + o2 {
        return 0.5 * longest.sqrt();
    }
    let area2 = cross(&(b - a), &(c - a)).abs();
    if area2 == 0.0 {
        return 0.5 * longest.sqrt();
    }
    (ab * bc * ca).sqrt() / (2.0 * area2)
}

/// Alpha-shape outline of a projected point set.
///
/// Delaunay triangles whose enclosing radius is below `alpha` are kept; the
/// boundary is the set of edges with exactly one kept neighbour, walked into
/// loops. The loop enclosing the largest area is returned, oriented so the
/// shape lies to its left (counter-clockwise in x-right/y-up axes) and
/// starting at its lexicographically smallest point. For alpha larger than
/// the diameter of the set the result is the convex hull.
pub fn extract_silhouette(projected: &ProjectedSet, alpha: f64) -> Result<SilhouetteCurve> {
    if !(alpha > 0.0) {
        return Err(Error::Parameter(format!("alpha must be positive, got {alpha}")));
    }
    if projected.points.len() != projected.source_vertex.len() {
        return Err(Error::Parameter("projected set lists differ in length".into()));
    }
    let pts = &projected.points;
    let tri = delaunay(pts)?;
    let n_tri = tri.triangles.len() / 3;

    let mut keep = vec![false; n_tri];
    let mut ccw = vec![true; n_tri];
    for t in 0..n_tri {
        let [a, b, c] = [tri.triangles[3 * t], tri.triangles[3 * t + 1], tri.triangles[3 * t + 2]];
        keep[t] = enclosing_radius(&pts[a], &pts[b], &pts[c]) < alpha;
        ccw[t] = cross(&(pts[b] - pts[a]), &(pts[c] - pts[a])) > 0.0;
    }
    if !keep.iter().any(|&k| k) {
        return Err(Error::Degenerate(format!("alpha {alpha} removes every triangle")));
    }

    // Directed boundary edges with the kept triangle on their left.
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for e in 0..tri.triangles.len() {
        let t = e / 3;
        if !keep[t] {
            continue;
        }
        let opp = tri.halfedges[e];
        if opp != EMPTY && keep[opp / 3] {
            continue;
        }
        let (a, b) = (tri.triangles[e], tri.triangles[next_halfedge(e)]);
        edges.push(if ccw[t] { (a, b) } else { (b, a) });
    }

    let mut outgoing: Vec<Vec<usize>> = vec![Vec::new(); pts.len()];
    for (i, &(a, _)) in edges.iter().enumerate() {
        outgoing[a].push(i);
    }

    let mut used = vec![false; edges.len()];
    let mut best: Option<(f64, Vec<usize>)> = None;
    for start in 0..edges.len() {
        if used[start] {
            continue;
        }
        let mut cycle = vec![edges[start].0];
        used[start] = true;
        let mut current = start;
        loop {
            let (from, to) = edges[current];
            if to == edges[start].0 {
                break;
            }
            let back = pts[from] - pts[to];
            // The next edge of the same face wedge is the first one reached
            // rotating clockwise from the incoming direction reversed.
            let next = outgoing[to]
                .iter()
                .copied()
                .filter(|&e| !used[e])
                .min_by(|&e1, &e2| {
                    let cw = |e: usize| {
                        let d = pts[edges[e].1] - pts[to];
                        let ccw_angle = cross(&d, &back).atan2(d.dot(&back));
                        ccw_angle.rem_euclid(std::f64::consts::TAU)
                    };
                    cw(e1).total_cmp(&cw(e2))
                });
            match next {
                Some(e) => {
                    used[e] = true;
                    cycle.push(to);
                    current = e;
                }
                None => break,
            }
        }
        if cycle.len() < 3 {
            continue;
        }
        let area: f64 = (0..cycle.len())
            .map(|i| cross(&pts[cycle[i]], &pts[cycle[(i + 1) % cycle.len()]]))
            .sum::<f64>()
            * 0.5;
        if best.as_ref().is_none_or(|(a, _)| area > *a) {
            best = Some((area, cycle));
        }
    }

    let (_, mut cycle) = best.ok_or_else(|| Error::Degenerate("alpha shape has no boundary loop".into()))?;
    let first = (0..cycle.len())
        .min_by(|&i, &j| {
            let (p, q) = (pts[cycle[i]], pts[cycle[j]]);
            p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y))
        })
        .unwrap_or(0);
    cycle.rotate_left(first);

    Ok(SilhouetteCurve {
        points: cycle.iter().map(|&i| pts[i]).collect(),
        source_vertex: cycle.iter().map(|&i| projected.source_vertex[i]).collect(),
        closed: true,
    })
}
