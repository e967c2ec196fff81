use serde::{Deserialize, Serialize};

use super::energy::EnergyWeights;
use crate::deform::{DEFAULT_NEIGHBORS, DEFAULT_NODES};
use crate::srvf::AlignConfig;
use crate::{Error, Result};

/// Settings of the Gauss-Newton solve and the outer reconstruction loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_outer_iters: usize,
    /// Accepted Gauss-Newton steps per outer iteration.
    pub max_gn_iters: usize,
    /// Relative cost decrease below which a Gauss-Newton run stops.
    pub gn_tolerance: f64,
    /// Initial Levenberg damping.
    pub lambda0: f64,
    /// Damping ceiling; passing it without progress is a stall.
    pub lambda_max: f64,
    /// Mean vertex displacement (mm) between outer iterations below which the
    /// deformation counts as settled. `None` derives it from
    /// `recorrespond_fraction`.
    pub recorrespond_threshold: Option<f64>,
    /// Settling threshold as a fraction of the template's bounding-box
    /// diagonal.
    pub recorrespond_fraction: f64,
    /// Total elastic correspondence rounds, 1 to 3.
    pub max_recorrespondences: usize,
    pub weights: EnergyWeights,
    /// Scale each view's data residuals by `1/√|ℕ(k)|`.
    pub normalize_per_view: bool,
    pub graph_nodes: usize,
    pub graph_neighbors: usize,
    /// Largest node count solved with dense Cholesky; larger graphs use
    /// conjugate gradients.
    pub dense_node_limit: usize,
    /// Fixed alpha (px) for silhouette extraction; `None` picks it from the
    /// projected point spacing.
    pub alpha: Option<f64>,
    /// Standard deviation, in pixels of arc length, of the Gaussian
    /// smoothing applied to curves before matching; 0 disables it.
    pub observation_smoothing: f64,
    pub align: AlignConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_outer_iters: 30,
            max_gn_iters: 10,
            gn_tolerance: 1e-3,
            lambda0: 1e-4,
            lambda_max: 1e8,
            recorrespond_threshold: None,
            recorrespond_fraction: 0.005,
            max_recorrespondences: 3,
            weights: EnergyWeights::default(),
            normalize_per_view: false,
            graph_nodes: DEFAULT_NODES,
            graph_neighbors: DEFAULT_NEIGHBORS,
            dense_node_limit: 128,
            alpha: None,
            observation_smoothing: 12.0,
            align: AlignConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        let positive = [
            ("gn_tolerance", self.gn_tolerance),
            ("lambda0", self.lambda0),
            ("lambda_max", self.lambda_max),
            ("recorrespond_fraction", self.recorrespond_fraction),
            ("align.max_rotation", self.align.max_rotation),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(t) = self.recorrespond_threshold {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::Config(format!("recorrespond_threshold must be positive, got {t}")));
            }
        }
        if let Some(a) = self.alpha {
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::Config(format!("alpha must be positive, got {a}")));
            }
        }
        if !(self.observation_smoothing >= 0.0 && self.observation_smoothing.is_finite()) {
            return Err(Error::Config(format!(
                "observation_smoothing must be nonnegative, got {}",
                self.observation_smoothing
            )));
        }
        if !(1..=3).contains(&self.max_recorrespondences) {
            return Err(Error::Config(format!(
                "max_recorrespondences must be 1 to 3, got {}",
                self.max_recorrespondences
            )));
        }
        if self.max_outer_iters == 0 || self.max_gn_iters == 0 {
            return Err(Error::Config("iteration limits must be at least 1".into()));
        }
        Ok(())
    }
}
