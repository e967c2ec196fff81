use crate::{Error, Result, Vec2};

/// Ordered planar point sequence in pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve2D {
    pub points: Vec<Vec2>,
    pub closed: bool,
}

impl Curve2D {
    pub fn new(points: Vec<Vec2>, closed: bool) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Degenerate(format!("curve needs at least 2 points, got {}", points.len())));
        }
        if !points.iter().all(|p| p.x.is_finite() && p.y.is_finite()) {
            return Err(Error::Parameter("curve has non-finite coordinates".into()));
        }
        let c = Curve2D { points, closed };
        if !(c.arc_length() > 0.0) {
            return Err(Error::Degenerate("curve has zero arc length".into()));
        }
        Ok(c)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn segment_count(&self) -> usize {
        if self.closed {
            self.points.len()
        } else {
            self.points.len().saturating_sub(1)
        }
    }

    fn segment(&self, i: usize) -> (Vec2, Vec2) {
        (self.points[i], self.points[(i + 1) % self.points.len()])
    }

    /// Cumulative arc length at every vertex; closed curves get one extra
    /// entry holding the length including the closing segment.
    pub fn cumulative_length(&self) -> Vec<f64> {
        let mut acc = Vec::with_capacity(self.segment_count() + 1);
        acc.push(0.0);
        let mut s = 0.0;
        for i in 0..self.segment_count() {
            let (a, b) = self.segment(i);
            s += (b - a).norm();
            acc.push(s);
        }
        acc
    }

    pub fn arc_length(&self) -> f64 {
        *self.cumulative_length().last().unwrap_or(&0.0)
    }

    /// Arc-length parameter of each point as a fraction of the total length.
    pub fn arc_params(&self) -> Vec<f64> {
        let cum = self.cumulative_length();
        let total = *cum.last().unwrap_or(&0.0);
        cum[..self.points.len()].iter().map(|s| s / total).collect()
    }

    /// Point at arc-length fraction `s`. Closed curves wrap `s` modulo 1;
    /// open curves clamp it to [0, 1].
    pub fn point_at(&self, s: f64) -> Vec2 {
        self.sample_arc(s, s, 1)[0]
    }

    /// `n` points at uniformly spaced fractions from `from` to `to`
    /// (inclusive). `to < from` walks the curve backwards.
    pub fn sample_arc(&self, from: f64, to: f64, n: usize) -> Vec<Vec2> {
        let cum = self.cumulative_length();
        let total = *cum.last().unwrap();
        let segs = self.segment_count();
        (0..n)
            .map(|i| {
                let f = if n == 1 { from } else { from + (to - from) * i as f64 / (n - 1) as f64 };
                let s = if self.closed { f.rem_euclid(1.0) } else { f.clamp(0.0, 1.0) };
                let target = s * total;
                let seg = match cum.binary_search_by(|c| c.total_cmp(&target)) {
                    Ok(i) => i.min(segs - 1),
                    Err(i) => i.saturating_sub(1).min(segs - 1),
                };
                let (a, b) = self.segment(seg);
                let len = cum[seg + 1] - cum[seg];
                if len <= 0.0 {
                    a
                } else {
                    a + (b - a) * ((target - cum[seg]) / len).clamp(0.0, 1.0)
                }
            })
            .collect()
    }

    /// Shoelace area; positive for counter-clockwise loops in x-right/y-up
    /// axes. Open curves are closed implicitly.
    pub fn signed_area(&self) -> f64 {
        let n = self.points.len();
        0.5 * (0..n)
            .map(|i| {
                let (a, b) = (self.points[i], self.points[(i + 1) % n]);
                a.x * b.y - a.y * b.x
            })
            .sum::<f64>()
    }

    pub fn reversed(&self) -> Curve2D {
        let mut points = self.points.clone();
        points.reverse();
        Curve2D { points, closed: self.closed }
    }

    pub fn centroid(&self) -> Vec2 {
        self.points.iter().sum::<Vec2>() / self.points.len() as f64
    }
}

pub const MIN_SAMPLES: usize = 8;

/// Resamples to `n` points at uniform arc-length spacing. Open curves keep
/// both endpoints; closed curves start at the first point and space `n`
/// points around the whole loop.
pub fn resample_by_arclength(curve: &Curve2D, n: usize) -> Result<Curve2D> {
    if n < MIN_SAMPLES {
        return Err(Error::Parameter(format!("need at least {MIN_SAMPLES} samples, got {n}")));
    }
    if !(curve.arc_length() > 0.0) {
        return Err(Error::Degenerate("cannot resample a zero-length curve".into()));
    }
    let points = if curve.closed {
        let mut p = curve.sample_arc(0.0, 1.0, n + 1);
        p.pop();
        p
    } else {
        curve.sample_arc(0.0, 1.0, n)
    };
    Ok(Curve2D { points, closed: curve.closed })
}

/// Gaussian smoothing along the point sequence with standard deviation
/// `sigma` in points. Closed curves wrap around; open curves renormalize the
/// kernel at their ends. The point count and order are kept, so index `i` of
/// the result still stands for input point `i`.
pub fn smooth_curve(curve: &Curve2D, sigma: f64) -> Result<Curve2D> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Parameter(format!("smoothing sigma must be nonnegative, got {sigma}")));
    }
    let n = curve.points.len();
    if sigma == 0.0 || n < 3 {
        return Ok(curve.clone());
    }
    let half = ((3.0 * sigma).ceil() as usize).min(if curve.closed { (n - 1) / 2 } else { n - 1 });
    let kernel: Vec<f64> = (0..=half).map(|d| (-0.5 * (d as f64 / sigma).powi(2)).exp()).collect();
    let points = (0..n)
        .map(|i| {
            let (mut acc, mut wsum) = (Vec2::zeros(), 0.0);
            for d in -(half as isize)..=half as isize {
                let j = i as isize + d;
                let j = if curve.closed {
                    j.rem_euclid(n as isize) as usize
                } else if j < 0 || j >= n as isize {
                    continue;
                } else {
                    j as usize
                };
                let w = kernel[d.unsigned_abs()];
                acc += w * curve.points[j];
                wsum += w;
            }
            acc / wsum
        })
        .collect();
    Curve2D::new(points, curve.closed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    #[test]
    fn straight_segment_unit_spacing() {
        let c = Curve2D::new(vec![Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0)], false).unwrap();
        let r = resample_by_arclength(&c, 11).unwrap();
        for (i, p) in r.points.iter().enumerate() {
            assert!((p - Vec2::new(i as f64, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn uniform_input_is_fixed_point() {
        let pts: Vec<Vec2> = (0..20).map(|i| Vec2::new(i as f64 * 0.5, 3.0)).collect();
        let c = Curve2D::new(pts, false).unwrap();
        let r = resample_by_arclength(&c, 20).unwrap();
        for (a, b) in r.points.iter().zip(&c.points) {
            assert!((a - b).norm() < 1e-9);
        }
        let ring: Vec<Vec2> = (0..16).map(|i| {
            let a = TAU * i as f64 / 16.0;
            Vec2::new(a.cos(), a.sin())
        }).collect();
        let c = Curve2D::new(ring, true).unwrap();
        let r = resample_by_arclength(&c, 16).unwrap();
        for (a, b) in r.points.iter().zip(&c.points) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn irregular_circle_gets_even_chords() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut angles: Vec<f64> = (0..200).map(|_| rng.random_range(0.0..TAU)).collect();
        angles.sort_by(f64::total_cmp);
        let c = Curve2D::new(angles.iter().map(|a| Vec2::new(a.cos(), a.sin())).collect(), true).unwrap();
        let r = resample_by_arclength(&c, 100).unwrap();
        let chords: Vec<f64> = (0..100).map(|i| (r.points[(i + 1) % 100] - r.points[i]).norm()).collect();
        let mean = chords.iter().sum::<f64>() / 100.0;
        assert!(chords.iter().all(|c| (c - mean).abs() / mean < 0.01));
        assert!((r.arc_length() - c.arc_length()).abs() / c.arc_length() < 0.005);
    }

    #[test]
    fn smoothing_reduces_noise_and_keeps_indexing() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let clean: Vec<Vec2> = (0..120).map(|i| {
            let a = TAU * i as f64 / 120.0;
            50.0 * Vec2::new(a.cos(), a.sin())
        }).collect();
        let noisy: Vec<Vec2> = clean.iter().map(|p| p + Vec2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))).collect();
        let c = Curve2D::new(noisy.clone(), true).unwrap();
        let s = smooth_curve(&c, 2.0).unwrap();
        assert_eq!(s.len(), 120);
        let err = |pts: &[Vec2]| pts.iter().zip(&clean).map(|(a, b)| (a - b).norm()).sum::<f64>();
        assert!(err(&s.points) < 0.6 * err(&noisy));
        assert_eq!(smooth_curve(&c, 0.0).unwrap(), c);
        // A straight open segment is a fixed point away from its ends.
        let line = Curve2D::new((0..30).map(|i| Vec2::new(i as f64, 2.0 * i as f64)).collect(), false).unwrap();
        let sl = smooth_curve(&line, 1.5).unwrap();
        for i in 6..24 {
            assert!((sl.points[i] - line.points[i]).norm() < 1e-9);
        }
    }

    #[test]
    fn zero_length_rejected() {
        assert!(matches!(
            Curve2D::new(vec![Vec2::new(1.0, 1.0); 3], false),
            Err(Error::Degenerate(_))
        ));
        let c = Curve2D::new(vec![Vec2::zeros(), Vec2::new(1.0, 0.0)], false).unwrap();
        assert!(matches!(resample_by_arclength(&c, 4), Err(Error::Parameter(_))));
    }

    #[test]
    fn arc_params_and_point_at() {
        let c = Curve2D::new(vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(0.0, 1.0)], true)
            .unwrap();
        assert_eq!(c.arc_params(), vec![0.0, 0.25, 0.5, 0.75]);
        assert!((c.point_at(0.875) - Vec2::new(0.0, 0.5)).norm() < 1e-12);
        assert!((c.point_at(1.125) - Vec2::new(0.5, 0.0)).norm() < 1e-12);
        assert!(c.signed_area() > 0.0);
        assert!(c.reversed().signed_area() < 0.0);
    }
}
