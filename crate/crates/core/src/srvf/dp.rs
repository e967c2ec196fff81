//! Dynamic-programming search for the reparameterisation `γ` minimising
//! `|q_obs − (q_model ∘ γ) √γ̇|²` over monotone lattice paths.

use super::repr::{quadrature_weights, SrvfCurve};
use crate::{Error, Result, Vec2};

/// Admissible lattice steps as (observation cells, model cells).
pub const DEFAULT_SLOPES: [(usize, usize); 7] = [(1, 1), (1, 2), (2, 1), (1, 3), (3, 1), (2, 3), (3, 2)];

pub const MIN_GRID: usize = 8;

/// Piecewise-linear warp `γ: [0,1] → [0,1]` whose knots sit on a
/// `grid × grid` lattice. Knot `(a, b)` stands for `γ(a/(grid−1)) = b/(grid−1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reparam {
    pub grid: usize,
    pub lattice: Vec<(usize, usize)>,
}

impl Reparam {
    pub fn identity(grid: usize) -> Self {
        Reparam { grid, lattice: vec![(0, 0), (grid - 1, grid - 1)] }
    }

    pub fn knots(&self) -> Vec<(f64, f64)> {
        let g = (self.grid - 1) as f64;
        self.lattice.iter().map(|&(a, b)| (a as f64 / g, b as f64 / g)).collect()
    }

    /// `γ(t)` by linear interpolation between knots.
    pub fn eval(&self, t: f64) -> f64 {
        let knots = self.knots();
        let t = t.clamp(0.0, 1.0);
        for w in knots.windows(2) {
            let ((t0, g0), (t1, g1)) = (w[0], w[1]);
            if t <= t1 {
                return g0 + (g1 - g0) * (t - t0) / (t1 - t0);
            }
        }
        1.0
    }

    /// Inverse warp `γ⁻¹(s)`; well defined because every lattice step is
    /// strictly increasing in both coordinates.
    pub fn eval_inverse(&self, s: f64) -> f64 {
        let knots = self.knots();
        let s = s.clamp(0.0, 1.0);
        for w in knots.windows(2) {
            let ((t0, g0), (t1, g1)) = (w[0], w[1]);
            if s <= g1 {
                return t0 + (t1 - t0) * (s - g0) / (g1 - g0);
            }
        }
        1.0
    }

    /// `γ` at `n` uniform samples of [0, 1].
    pub fn sampled(&self, n: usize) -> Vec<f64> {
        (0..n).map(|k| self.eval(k as f64 / (n - 1) as f64)).collect()
    }

    /// For each of `n` samples, the value `γ(t_k)` and the slope of the
    /// lattice segment that owns the sample. A segment from obs node `a'` to
    /// `a` owns the samples with `t_k ∈ (t_a', t_a]`; sample 0 belongs to the
    /// first segment. Membership is decided in integer arithmetic.
    pub fn sample_warp(&self, n: usize) -> Vec<(f64, f64)> {
        let g = self.grid - 1;
        let mut out = Vec::with_capacity(n);
        let mut seg = 1;
        for k in 0..n {
            while seg + 1 < self.lattice.len() && k * g > self.lattice[seg].0 * (n - 1) {
                seg += 1;
            }
            let (a0, b0) = self.lattice[seg - 1];
            let (a1, b1) = self.lattice[seg];
            let slope = (b1 - b0) as f64 / (a1 - a0) as f64;
            let t = k as f64 / (n - 1) as f64;
            let gamma = (b0 as f64 + slope * (t * g as f64 - a0 as f64)) / g as f64;
            out.push((gamma.clamp(0.0, 1.0), slope));
        }
        out
    }
}

/// Linear interpolation of uniformly sampled values on [0, 1].
pub(crate) fn interpolate(samples: &[Vec2], s: f64) -> Vec2 {
    let n = samples.len();
    let x = s.clamp(0.0, 1.0) * (n - 1) as f64;
    let i = (x.floor() as usize).min(n - 2);
    let f = x - i as f64;
    samples[i] * (1.0 - f) + samples[i + 1] * f
}

/// `√γ̇(t_k) · q_model(γ(t_k))` at the `n` model sample parameters.
pub fn warp_samples(model: &[Vec2], reparam: &Reparam) -> Vec<Vec2> {
    reparam
        .sample_warp(model.len())
        .into_iter()
        .map(|(g, slope)| interpolate(model, g) * slope.sqrt())
        .collect()
}

/// Squared L2 cost of a warp with trapezoidal weights.
pub fn warp_cost(model: &[Vec2], obs: &[Vec2], reparam: &Reparam) -> f64 {
    let w = quadrature_weights(obs.len(), false);
    warp_samples(model, reparam)
        .iter()
        .zip(obs)
        .zip(&w)
        .map(|((m, o), w)| w * (o - m).norm_squared())
        .sum()
}

/// Optimal lattice path for open SRVF sample sequences of equal length.
pub fn dp_on_samples(model: &[Vec2], obs: &[Vec2], grid: usize, slopes: &[(usize, usize)]) -> Result<(Reparam, f64)> {
    let n = obs.len();
    if model.len() != n {
        return Err(Error::Parameter(format!("sample counts differ: {} vs {n}", model.len())));
    }
    if grid < MIN_GRID {
        return Err(Error::Parameter(format!("DP grid must be at least {MIN_GRID}, got {grid}")));
    }
    if grid > n {
        return Err(Error::Parameter(format!("DP grid {grid} exceeds sample count {n}")));
    }
    let g = grid - 1;
    let weights = quadrature_weights(n, false);
    // Last sample owned by lattice column a: max k with k·g ≤ a·(n−1).
    let last_sample: Vec<usize> = (0..grid).map(|a| a * (n - 1) / g).collect();
    let inv_g = 1.0 / g as f64;

    let edge_cost = |a0: usize, b0: usize, a1: usize, b1: usize| -> f64 {
        let slope = (b1 - b0) as f64 / (a1 - a0) as f64;
        let root = slope.sqrt();
        let start = if a0 == 0 { 0 } else { last_sample[a0] + 1 };
        let mut cost = 0.0;
        for k in start..=last_sample[a1] {
            let t = k as f64 / (n - 1) as f64;
            let gamma = (b0 as f64 + slope * (t * g as f64 - a0 as f64)) * inv_g;
            let d = obs[k] - interpolate(model, gamma) * root;
            cost += weights[k] * d.norm_squared();
        }
        cost
    };

    let idx = |a: usize, b: usize| a * grid + b;
    let mut best = vec![f64::INFINITY; grid * grid];
    let mut from = vec![usize::MAX; grid * grid];
    best[0] = 0.0;
    for a in 1..grid {
        for b in 1..grid {
            let mut bc = f64::INFINITY;
            let mut bf = usize::MAX;
            for &(da, db) in slopes {
                if da > a || db > b {
                    continue;
                }
                let (a0, b0) = (a - da, b - db);
                let prev = best[idx(a0, b0)];
                if !prev.is_finite() {
                    continue;
                }
                let c = prev + edge_cost(a0, b0, a, b);
                if c < bc {
                    bc = c;
                    bf = idx(a0, b0);
                }
            }
            best[idx(a, b)] = bc;
            from[idx(a, b)] = bf;
        }
    }
    let end = idx(g, g);
    if !best[end].is_finite() {
        return Err(Error::Internal("no admissible lattice path".into()));
    }
    let mut lattice = vec![(g, g)];
    let mut cur = end;
    while cur != 0 {
        cur = from[cur];
        lattice.push((cur / grid, cur % grid));
    }
    lattice.reverse();
    Ok((Reparam { grid, lattice }, best[end]))
}

/// Reparameterisation of `q_model` best matching `q_obs` with the default
/// slope set. Both curves must be open and sampled on the same grid.
pub fn dp_reparameterize(q_model: &SrvfCurve, q_obs: &SrvfCurve, grid: usize) -> Result<Reparam> {
    if q_model.closed || q_obs.closed {
        return Err(Error::Parameter("cut closed curves open before reparameterising".into()));
    }
    Ok(dp_on_samples(&q_model.samples, &q_obs.samples, grid, &DEFAULT_SLOPES)?.0)
}
