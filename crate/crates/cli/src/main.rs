use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use cuprecon::baselines::CorrespondenceStrategy;
use cuprecon::experiment::{
    estimate_cup_diameter, evaluate_reconstruction, fitted_template, run_rng, run_suite, simulate_case,
    ExperimentConfig,
};
use cuprecon::geometry::io::{read_mesh, read_views, write_mesh, write_views};
use cuprecon::solver::reconstruct;
use cuprecon::srvf::io::{read_curve_csv, write_curve_csv};
use cuprecon::srvf::Curve2D;

#[derive(Parser)]
#[command(name = "cuprecon", version, about = "Template-based surface reconstruction from calibrated contours")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a synthetic case: target, perturbed template, views and contours.
    Simulate(SimulateArgs),
    /// Deform a template to match contour observations.
    Reconstruct(ReconstructArgs),
    /// Per-vertex error of a reconstruction against a target mesh.
    Evaluate(EvaluateArgs),
    /// Run the multi-level, multi-run simulation protocol.
    Suite(SuiteArgs),
    /// Cup diameter from a least-squares sphere fit.
    Cupsize(CupsizeArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment configuration (JSON); flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Correspondence strategy: srvf, icp or icp-normvec.
    #[arg(long)]
    strategy: Option<CorrespondenceStrategy>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_json_file(path)
                .with_context(|| format!("reading config {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.strategy {
            cfg.strategies = vec![s];
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: ConfigArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Initialization noise level, 0 to 5.
    #[arg(long, default_value_t = 1)]
    level: usize,
    /// Run index, selecting the random stream together with the seed.
    #[arg(long, default_value_t = 0)]
    run: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Contour noise SD, pixels.
    #[arg(long)]
    contour_sd: Option<f64>,
}

#[derive(Args)]
struct ReconstructArgs {
    #[command(flatten)]
    common: ConfigArgs,
    #[arg(long)]
    template: PathBuf,
    /// Views as written by `simulate` (JSON).
    #[arg(long)]
    views: PathBuf,
    /// One contour CSV per view.
    #[arg(long, num_args = 1.., required = true)]
    contours: Vec<PathBuf>,
    /// Output mesh (`.ply` or `.obj`).
    #[arg(long)]
    out: PathBuf,
    /// Optional JSON report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    recon: PathBuf,
    #[arg(long)]
    target: PathBuf,
    /// Write the reconstruction with an `error_mm` vertex property.
    #[arg(long)]
    error_mesh: Option<PathBuf>,
}

#[derive(Args)]
struct SuiteArgs {
    #[command(flatten)]
    common: ConfigArgs,
    /// Output directory for `suite.csv` and `suite.svg`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    runs: Option<usize>,
    /// Comma-separated noise levels.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct CupsizeArgs {
    #[arg(long)]
    mesh: PathBuf,
}

fn write_curve(path: &Path, curve: &Curve2D, view: usize) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    write_curve_csv(&mut w, curve, view)?;
    w.flush()?;
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let mut cfg = args.common.load()?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(sd) = args.contour_sd {
        cfg.contour_sd = sd;
    }
    cfg.validate()?;
    let target = cfg.load_target()?;
    let (template, sphere) = fitted_template(&target, cfg.template_refinement)?;
    let proto = cfg.camera.prototype()?;
    let mut rng = run_rng(cfg.seed, args.level, args.run);
    let case = simulate_case(&target, &template, &sphere.center, &cfg.angles_deg, &proto, cfg.contour_sd, args.level, &mut rng)?;

    std::fs::create_dir_all(&args.out)?;
    write_mesh(&args.out.join("target.ply"), &case.target, None)?;
    write_mesh(&args.out.join("template.ply"), &case.template, None)?;
    write_views(&args.out.join("views.json"), &case.views)?;
    for (k, (obs, truth)) in case.observations.iter().zip(&case.ground_truth).enumerate() {
        write_curve(&args.out.join(format!("contour_{k}.csv")), obs, k)?;
        write_curve(&args.out.join(format!("truth_{k}.csv")), truth, k)?;
    }
    std::fs::write(args.out.join("perturbation.json"), serde_json::to_string_pretty(&case.perturbation)?)?;
    println!("wrote case with {} views to {}", case.views.len(), args.out.display());
    Ok(())
}

fn reconstruct_cmd(args: &ReconstructArgs) -> Result<()> {
    let cfg = args.common.load()?;
    let strategy = cfg.strategies[0];
    let template = read_mesh(&args.template).with_context(|| format!("reading {}", args.template.display()))?;
    let views = read_views(&args.views).with_context(|| format!("reading {}", args.views.display()))?;
    if args.contours.len() != views.len() {
        bail!("{} contour files for {} views", args.contours.len(), views.len());
    }
    let mut observations: Vec<Option<Curve2D>> = vec![None; views.len()];
    for path in &args.contours {
        let (k, curve) =
            read_curve_csv(File::open(path).with_context(|| format!("opening {}", path.display()))?)?;
        match observations.get_mut(k) {
            Some(slot @ None) => *slot = Some(curve),
            Some(Some(_)) => bail!("view {k} given twice"),
            None => bail!("{} names view {k}, but only {} views exist", path.display(), views.len()),
        }
    }
    let observations: Vec<Curve2D> = observations.into_iter().map(|c| c.expect("every view filled")).collect();

    info!("reconstructing with {strategy}");
    let result = reconstruct(&template, &observations, &views, &cfg.solver, &strategy)?;
    write_mesh(&args.out, result.mesh(), None)?;
    if let Some(report) = &args.report {
        std::fs::write(report, result.report_json()?)?;
    }
    println!(
        "{}: {} outer iterations, {} correspondence rounds, final cost {:.6e}, converged {}",
        strategy, result.iterations, result.correspondence_rounds, result.final_cost, result.converged
    );
    Ok(())
}

fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let recon = read_mesh(&args.recon)?;
    let target = read_mesh(&args.target)?;
    let metrics = evaluate_reconstruction(&recon, &target)?;
    if let Some(path) = &args.error_mesh {
        write_mesh(path, &recon, Some(&metrics.per_vertex))?;
    }
    println!("{}", serde_json::json!({ "mae_mm": metrics.mae, "sd_mm": metrics.sd, "vertices": metrics.per_vertex.len() }));
    Ok(())
}

fn suite(args: &SuiteArgs) -> Result<()> {
    let mut cfg = args.common.load()?;
    if let Some(runs) = args.runs {
        cfg.runs = runs;
    }
    if let Some(levels) = &args.levels {
        cfg.levels = levels.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let report = run_suite(&cfg)?;
    report.write_files(&args.out)?;
    for s in report.summary() {
        let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.3}"));
        println!(
            "level {} {:<12} runs {:>3} failures {:>3} mean MAE {} mm (initial {})",
            s.level,
            s.strategy,
            s.runs,
            s.failures,
            fmt(s.mean_mae_mm),
            fmt(s.mean_initial_mae_mm)
        );
    }
    println!("wrote {}", args.out.join("suite.csv").display());
    Ok(())
}

fn cupsize(args: &CupsizeArgs) -> Result<()> {
    let mesh = read_mesh(&args.mesh)?;
    println!("{:.4}", estimate_cup_diameter(&mesh)?);
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Simulate(a) => simulate(&a),
        Command::Reconstruct(a) => reconstruct_cmd(&a),
        Command::Evaluate(a) => evaluate(&a),
        Command::Suite(a) => suite(&a),
        Command::Cupsize(a) => cupsize(&a),
    }
}
