use super::curve::{Curve2D, MIN_SAMPLES};
use crate::{Error, Result, Vec2};

/// Square-root velocity samples of a curve normalised to unit length and
/// centred at the origin.
///
/// Open curves are sampled at `t_i = i / (n - 1)`; closed curves at
/// `t_i = i / n` with the parameter domain wrapping around.
#[derive(Debug, Clone, PartialEq)]
pub struct SrvfCurve {
    pub samples: Vec<Vec2>,
    pub centroid: Vec2,
    pub original_length: f64,
    pub closed: bool,
}

impl SrvfCurve {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Parameter step between samples.
    pub fn step(&self) -> f64 {
        param_step(self.samples.len(), self.closed)
    }

    /// Squared L2 norm under the quadrature used throughout.
    pub fn norm_squared(&self) -> f64 {
        let w = quadrature_weights(self.samples.len(), self.closed);
        self.samples.iter().zip(&w).map(|(q, w)| w * q.norm_squared()).sum()
    }
}

pub(crate) fn param_step(n: usize, closed: bool) -> f64 {
    if closed {
        1.0 / n as f64
    } else {
        1.0 / (n - 1) as f64
    }
}

/// Trapezoidal weights on the sample grid (uniform for closed curves).
pub fn quadrature_weights(n: usize, closed: bool) -> Vec<f64> {
    let h = param_step(n, closed);
    let mut w = vec![h; n];
    if !closed && n > 1 {
        w[0] = 0.5 * h;
        w[n - 1] = 0.5 * h;
    }
    w
}

/// L2 distance between two sampled SRVFs of equal length.
pub fn l2_distance(a: &[Vec2], b: &[Vec2], closed: bool) -> f64 {
    let w = quadrature_weights(a.len(), closed);
    a.iter()
        .zip(b)
        .zip(&w)
        .map(|((x, y), w)| w * (x - y).norm_squared())
        .sum::<f64>()
        .sqrt()
}

/// `q(t) = ċ(t) / sqrt(|ċ(t)|)` of the curve after centring at its centroid
/// and scaling to unit length. Velocities use central differences,
/// one-sided at the ends of open curves. The length used for scaling is the
/// quadrature of `|ċ|` on the same grid, so `∫|q|² = 1` holds exactly in
/// the discrete inner product and [`from_srvf`] inverts the map up to the
/// local finite-difference error.
pub fn to_srvf(curve: &Curve2D) -> Result<SrvfCurve> {
    let n = curve.points.len();
    if n < MIN_SAMPLES {
        return Err(Error::Parameter(format!("SRVF needs at least {MIN_SAMPLES} samples, got {n}")));
    }
    let centroid = curve.centroid();
    let c: Vec<Vec2> = curve.points.iter().map(|p| p - centroid).collect();
    let h = param_step(n, curve.closed);

    let mut velocity = Vec::with_capacity(n);
    for i in 0..n {
        let v = if curve.closed {
            (c[(i + 1) % n] - c[(i + n - 1) % n]) / (2.0 * h)
        } else if i == 0 {
            (c[1] - c[0]) / h
        } else if i == n - 1 {
            (c[n - 1] - c[n - 2]) / h
        } else {
            (c[i + 1] - c[i - 1]) / (2.0 * h)
        };
        if !(v.norm() > 0.0) {
            return Err(Error::Degenerate(format!("zero velocity at sample {i} (repeated point)")));
        }
        velocity.push(v);
    }
    let weights = quadrature_weights(n, curve.closed);
    let length: f64 = velocity.iter().zip(&weights).map(|(v, w)| w * v.norm()).sum();
    let samples = velocity
        .iter()
        .map(|v| {
            let v = v / length;
            v / v.norm().sqrt()
        })
        .collect();
    Ok(SrvfCurve { samples, centroid, original_length: length, closed: curve.closed })
}

/// Integrates `c(t) = origin + ∫ q |q| ds` with the trapezoidal rule. The
/// result lives in the normalised (unit-length) frame of `q`. Closed input
/// yields `n` points; the closing segment back to the first point is implied.
pub fn from_srvf(q: &SrvfCurve, origin: Vec2) -> Curve2D {
    let n = q.samples.len();
    let h = q.step();
    let mut points = Vec::with_capacity(n);
    let mut c = origin;
    points.push(c);
    for i in 1..n {
        let a = q.samples[i - 1] * q.samples[i - 1].norm();
        let b = q.samples[i] * q.samples[i].norm();
        c += (a + b) * (0.5 * h);
        points.push(c);
    }
    Curve2D { points, closed: q.closed }
}

/// Endpoint of the closed-curve integral, i.e. where integration returns
/// after the closing segment. For a well-formed closed SRVF this is close to
/// the origin.
pub fn closure_point(q: &SrvfCurve, origin: Vec2) -> Vec2 {
    let c = from_srvf(q, origin);
    let last = q.samples[q.samples.len() - 1];
    let first = q.samples[0];
    c.points[c.points.len() - 1] + (last * last.norm() + first * first.norm()) * (0.5 * q.step())
}
