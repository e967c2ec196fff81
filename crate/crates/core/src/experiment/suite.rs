use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::evaluate_reconstruction;
use super::sphere::{fit_sphere, Sphere};
use super::synth::{default_target, simulate_case, CameraConfig};
use crate::baselines::CorrespondenceStrategy;
use crate::geometry::io::read_mesh;
use crate::geometry::{generate_hemisphere, Mesh};
use crate::solver::{reconstruct, SolverConfig};
use crate::{Error, Result};

/// Settings of a multi-run simulation experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Target mesh (`.ply` or `.obj`); the built-in warped hemisphere when
    /// absent.
    pub target: Option<PathBuf>,
    /// Subdivision level of the built-in target.
    pub target_refinement: u32,
    /// Subdivision level of the hemispherical template.
    pub template_refinement: u32,
    /// View angles about the model z axis, degrees.
    pub angles_deg: Vec<f64>,
    /// Contour noise SD, pixels.
    pub contour_sd: f64,
    /// Initialization noise levels to run, each in 0..=5.
    pub levels: Vec<usize>,
    pub runs: usize,
    pub seed: u64,
    pub strategies: Vec<CorrespondenceStrategy>,
    pub solver: SolverConfig,
    pub camera: CameraConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            target: None,
            target_refinement: 5,
            template_refinement: 5,
            angles_deg: vec![0.0, 20.0, -20.0],
            contour_sd: 2.0,
            levels: vec![1, 2, 3, 4, 5],
            runs: 10,
            seed: 20240,
            strategies: vec![CorrespondenceStrategy::Srvf],
            solver: SolverConfig::default(),
            camera: CameraConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.angles_deg.len() < 3 {
            return Err(Error::Config(format!("need at least 3 view angles, got {}", self.angles_deg.len())));
        }
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.levels.is_empty() || self.levels.iter().any(|&l| l > 5) {
            return Err(Error::Config(format!("levels must be a nonempty subset of 0..=5, got {:?}", self.levels)));
        }
        if self.strategies.is_empty() {
            return Err(Error::Config("no correspondence strategy selected".into()));
        }
        if !(self.contour_sd >= 0.0 && self.contour_sd.is_finite()) {
            return Err(Error::Config(format!("contour SD must be nonnegative, got {}", self.contour_sd)));
        }
        for s in &self.strategies {
            s.validate()?;
        }
        self.solver.validate()
    }

    pub fn load_target(&self) -> Result<Mesh> {
        match &self.target {
            Some(path) => read_mesh(path),
            None => default_target(self.target_refinement),
        }
    }
}

/// RNG of one run. The stream is selected by level and run index, so every
/// run is reproducible on its own.
pub fn run_rng(seed: u64, level: usize, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((level as u64) << 32) | run as u64);
    rng
}

/// Hemispherical template placed on the least-squares sphere of `target`.
pub fn fitted_template(target: &Mesh, refinement: u32) -> Result<(Mesh, Sphere)> {
    let sphere = fit_sphere(&target.vertices)?;
    let hemi = generate_hemisphere(sphere.radius, refinement)?;
    Ok((hemi.map_vertices(|_, p| p + sphere.center), sphere))
}

/// One CSV row of a suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub level: usize,
    pub run: usize,
    pub strategy: String,
    pub mae_mm: Option<f64>,
    pub sd_mm: Option<f64>,
    pub initial_mae_mm: Option<f64>,
    pub iterations: Option<usize>,
    pub recorrespondences: Option<usize>,
    pub converged: Option<bool>,
    pub failed: bool,
    pub message: String,
    pub wall_time_s: f64,
}

/// Name of the CSV column that varies between otherwise identical runs.
pub const TIMING_COLUMN: &str = "wall_time_s";

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub records: Vec<RunRecord>,
}

/// Aggregate over the runs of one level and strategy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub level: usize,
    pub strategy: String,
    pub runs: usize,
    pub failures: usize,
    /// Mean MAE over successful runs; `None` when every run failed.
    pub mean_mae_mm: Option<f64>,
    pub mean_initial_mae_mm: Option<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl SuiteReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for r in &self.records {
            wtr.serialize(r)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn summary(&self) -> Vec<GroupSummary> {
        let mut keys: Vec<(usize, String)> = Vec::new();
        for r in &self.records {
            let key = (r.level, r.strategy.clone());
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        keys.into_iter()
            .map(|(level, strategy)| {
                let group: Vec<&RunRecord> =
                    self.records.iter().filter(|r| r.level == level && r.strategy == strategy).collect();
                GroupSummary {
                    level,
                    runs: group.len(),
                    failures: group.iter().filter(|r| r.failed).count(),
                    mean_mae_mm: mean(group.iter().filter_map(|r| r.mae_mm)),
                    mean_initial_mae_mm: mean(group.iter().filter_map(|r| r.initial_mae_mm)),
                    strategy,
                }
            })
            .collect()
    }

    /// Box plot of per-run MAE, one group per level with one box per
    /// strategy. Failed runs are counted in the labels, not plotted.
    pub fn box_plot_svg(&self) -> String {
        box_plot_svg(&self.records)
    }

    /// Writes `suite.csv` and `suite.svg` into `dir`.
    pub fn write_files(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut csv_out = BufWriter::new(File::create(dir.join("suite.csv"))?);
        self.write_csv(&mut csv_out)?;
        csv_out.flush()?;
        std::fs::write(dir.join("suite.svg"), self.box_plot_svg())?;
        Ok(())
    }
}

struct Job {
    level: usize,
    run: usize,
    strategy: CorrespondenceStrategy,
}

fn run_one(cfg: &ExperimentConfig, target: &Mesh, template: &Mesh, sphere: &Sphere, job: &Job) -> RunRecord {
    let start = Instant::now();
    let mut record = RunRecord {
        level: job.level,
        run: job.run,
        strategy: job.strategy.name().to_string(),
        mae_mm: None,
        sd_mm: None,
        initial_mae_mm: None,
        iterations: None,
        recorrespondences: None,
        converged: None,
        failed: false,
        message: String::new(),
        wall_time_s: 0.0,
    };
    let outcome = (|| -> Result<()> {
        let proto = cfg.camera.prototype()?;
        // Same stream for every strategy, so they all see the same case.
        let mut rng = run_rng(cfg.seed, job.level, job.run);
        let case =
            simulate_case(target, template, &sphere.center, &cfg.angles_deg, &proto, cfg.contour_sd, job.level, &mut rng)?;
        record.initial_mae_mm = Some(evaluate_reconstruction(&case.template, target)?.mae);
        let result = reconstruct(&case.template, &case.observations, &case.views, &cfg.solver, &job.strategy)?;
        record.iterations = Some(result.iterations);
        record.recorrespondences = Some(result.correspondence_rounds);
        record.converged = Some(result.converged);
        let metrics = evaluate_reconstruction(result.mesh(), target)?;
        if !metrics.mae.is_finite() {
            return Err(Error::Degenerate("reconstruction error is not finite".into()));
        }
        record.mae_mm = Some(metrics.mae);
        record.sd_mm = Some(metrics.sd);
        Ok(())
    })();
    if let Err(e) = outcome {
        warn!("level {} run {} ({}) failed: {e}", job.level, job.run, job.strategy);
        record.failed = true;
        record.message = e.to_string();
    }
    record.wall_time_s = start.elapsed().as_secs_f64();
    record
}

/// Runs every (level, run, strategy) combination of `cfg`. Runs execute in
/// parallel; rows come back ordered by level, run and strategy. A failing
/// run becomes a row with `failed` set and the suite continues.
pub fn run_suite(cfg: &ExperimentConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let target = cfg.load_target()?;
    let (template, sphere) = fitted_template(&target, cfg.template_refinement)?;
    let mut jobs = Vec::new();
    for &level in &cfg.levels {
        for run in 0..cfg.runs {
            for &strategy in &cfg.strategies {
                jobs.push(Job { level, run, strategy });
            }
        }
    }
    info!("suite: {} runs", jobs.len());
    let records = jobs.par_iter().map(|job| run_one(cfg, &target, &template, &sphere, job)).collect();
    Ok(SuiteReport { records })
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

const PALETTE: [&str; 4] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52"];

fn box_plot_svg(records: &[RunRecord]) -> String {
    let mut levels: Vec<usize> = records.iter().map(|r| r.level).collect();
    levels.sort_unstable();
    levels.dedup();
    let mut strategies: Vec<&str> = Vec::new();
    for r in records {
        if !strategies.contains(&r.strategy.as_str()) {
            strategies.push(&r.strategy);
        }
    }
    let max_mae = records.iter().filter_map(|r| r.mae_mm).fold(0.0f64, f64::max).max(1e-3);
    // Errors span orders of magnitude once baselines diverge.
    let log_scale = max_mae > 50.0;
    let (w, h, left, right, top, bottom) = (160.0 * levels.len().max(1) as f64 + 80.0, 420.0, 60.0, 20.0, 30.0, 60.0);
    let plot_h = h - top - bottom;
    let y_of = |v: f64| {
        let frac = if log_scale { (1.0 + v).ln() / (1.0 + max_mae).ln() } else { v / max_mae };
        top + plot_h * (1.0 - frac)
    };
    let group_w = (w - left - right) / levels.len().max(1) as f64;
    let box_w = (group_w * 0.7 / strategies.len().max(1) as f64).min(40.0);

    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    );
    s += &format!("<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n");
    s += &format!(
        "<line x1=\"{left}\" y1=\"{top}\" x2=\"{left}\" y2=\"{}\" stroke=\"black\"/>\n",
        top + plot_h
    );
    s += &format!(
        "<line x1=\"{left}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"black\"/>\n",
        w - right,
        y = top + plot_h
    );
    for i in 0..=4 {
        let v = max_mae * i as f64 / 4.0;
        let v = if log_scale { (1.0 + max_mae).powf(i as f64 / 4.0) - 1.0 } else { v };
        s += &format!(
            "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">{v:.2}</text>\n",
            left - 4.0,
            y_of(v) + 4.0
        );
    }
    s += &format!(
        "<text x=\"14\" y=\"{:.1}\" transform=\"rotate(-90 14 {:.1})\" text-anchor=\"middle\">MAE (mm){}</text>\n",
        top + plot_h / 2.0,
        top + plot_h / 2.0,
        if log_scale { ", log(1+x) axis" } else { "" }
    );
    for (li, &level) in levels.iter().enumerate() {
        let gx = left + group_w * li as f64;
        s += &format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">level {level}</text>\n",
            gx + group_w / 2.0,
            top + plot_h + 18.0
        );
        for (si, strategy) in strategies.iter().enumerate() {
            let group: Vec<&RunRecord> =
                records.iter().filter(|r| r.level == level && r.strategy == *strategy).collect();
            let mut maes: Vec<f64> = group.iter().filter_map(|r| r.mae_mm).collect();
            let failures = group.iter().filter(|r| r.failed).count();
            let cx = gx + group_w * 0.15 + box_w * (si as f64 + 0.5);
            let color = PALETTE[si % PALETTE.len()];
            if failures > 0 {
                s += &format!(
                    "<text x=\"{cx:.1}\" y=\"{:.1}\" text-anchor=\"middle\" fill=\"{color}\">{failures}✕</text>\n",
                    top + plot_h + 32.0
                );
            }
            if maes.is_empty() {
                continue;
            }
            maes.sort_by(f64::total_cmp);
            let [lo, q1, med, q3, hi] = [0.0, 0.25, 0.5, 0.75, 1.0].map(|q| y_of(quantile(&maes, q)));
            let x0 = cx - box_w / 2.0;
            s += &format!("<line x1=\"{cx:.1}\" y1=\"{lo:.1}\" x2=\"{cx:.1}\" y2=\"{hi:.1}\" stroke=\"{color}\"/>\n");
            s += &format!(
                "<rect x=\"{x0:.1}\" y=\"{q3:.1}\" width=\"{box_w:.1}\" height=\"{:.1}\" fill=\"{color}\" fill-opacity=\"0.35\" stroke=\"{color}\"/>\n",
                (q1 - q3).max(0.5)
            );
            s += &format!(
                "<line x1=\"{x0:.1}\" y1=\"{med:.1}\" x2=\"{:.1}\" y2=\"{med:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
                x0 + box_w
            );
        }
    }
    for (si, strategy) in strategies.iter().enumerate() {
        let x = left + 10.0 + 110.0 * si as f64;
        let color = PALETTE[si % PALETTE.len()];
        s += &format!("<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"10\" height=\"10\" fill=\"{color}\"/>\n", h - 16.0);
        s += &format!("<text x=\"{:.1}\" y=\"{:.1}\">{strategy}</text>\n", x + 14.0, h - 7.0);
    }
    s += "</svg>\n";
    s
}
