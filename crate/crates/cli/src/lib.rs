//! Command-line surface: track, simulate, evaluate, ablate and plotdata.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pedtrack_core::experiments::{
    combined_scenarios, suite_scenarios, sweep, unit_grid, SweepParam, SweepRow,
};
use pedtrack_core::io::{
    detections_by_frame, gt_table, parse_mot, parse_tensors, parse_warps, plot_rows, read_text,
    result_rows, result_table, simulation_files, write_atomic, RunConfig, Sidecars,
};
use pedtrack_core::metrics::evaluate_with_events;
use pedtrack_core::simulation::{generate, standard_suite, FeatureMapSpec, Suite};
use pedtrack_core::{Tracker, WarpMatrix};

#[derive(Debug, Parser)]
#[command(
    name = "pedtrack",
    version,
    about = "Occlusion-robust pedestrian tracking by detection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Track detections from a MOTChallenge file and write result rows.
    Track(TrackArgs),
    /// Generate a synthetic scenario as gt, det and sidecar files.
    Simulate(SimulateArgs),
    /// Score a result file against ground truth.
    Evaluate(EvaluateArgs),
    /// Sweep one parameter over 0.0..=1.0 on simulated scenarios.
    Ablate(AblateArgs),
    /// Per-track trajectories as CSV for plotting.
    Plotdata(PlotArgs),
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    /// key = value configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Detection file (id -1 rows); overrides `input` from the config.
    #[arg(long)]
    pub det: Option<PathBuf>,
    /// Result file; overrides `output` from the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Embedding tensor per detection row.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Feature-map tensor per detection row (needs --heatmaps).
    #[arg(long, requires = "heatmaps")]
    pub features: Option<PathBuf>,
    /// Keypoint heatmap tensor per detection row (needs --features).
    #[arg(long, requires = "features")]
    pub heatmaps: Option<PathBuf>,
    /// Camera warps, line n mapping frame n to n + 1.
    #[arg(long)]
    pub warps: Option<PathBuf>,
    /// Sequence length; defaults to the last frame holding a detection.
    #[arg(long)]
    pub frames: Option<u32>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: Suite,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving gt.txt, det.txt and the sidecars.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Also render feature maps and keypoint heatmaps.
    #[arg(long)]
    pub pixels: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub iou: f64,
    /// Report file; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-frame FP/FN/IDSW log.
    #[arg(long)]
    pub events: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Param {
    Alpha0,
    ThetaV,
}

impl From<Param> for SweepParam {
    fn from(p: Param) -> Self {
        match p {
            Param::Alpha0 => SweepParam::Alpha0,
            Param::ThetaV => SweepParam::SpeedThreshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteChoice {
    Cross,
    Follow,
    Linger,
    Crowd,
    Combined,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long, value_enum)]
    pub param: Param,
    #[arg(long, value_enum, default_value_t = SuiteChoice::Combined)]
    pub suite: SuiteChoice,
    /// Seeds 0..N per suite.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    /// Base configuration for every sweep point.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// CSV table; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Track(a) => track(&a),
        Command::Simulate(a) => simulate(&a),
        Command::Evaluate(a) => evaluate(&a),
        Command::Ablate(a) => ablate(&a),
        Command::Plotdata(a) => plotdata(&a),
    }
}

fn read(path: &Path) -> Result<String> {
    Ok(read_text(path)?)
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::parse(&read(p)?).with_context(|| format!("config {}", p.display())),
        None => Ok(RunConfig::default()),
    }
}

fn tensors(path: Option<&PathBuf>) -> Result<Option<Vec<pedtrack_core::io::SidecarTensor>>> {
    path.map(|p| parse_tensors(&read(p)?).with_context(|| format!("sidecar {}", p.display())))
        .transpose()
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => Ok(write_atomic(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Runs the tracker over a detection file and returns the result file text.
pub fn track_text(args: &TrackArgs, cfg: &RunConfig, det_path: &Path) -> Result<String> {
    let rows = parse_mot(&read(det_path)?)
        .with_context(|| format!("detections {}", det_path.display()))?;
    let sidecars = Sidecars {
        embeddings: tensors(args.embeddings.as_ref())?,
        features: tensors(args.features.as_ref())?,
        heatmaps: tensors(args.heatmaps.as_ref())?,
    };
    let mut by_frame = detections_by_frame(&rows, &sidecars)?;
    let last = by_frame.keys().next_back().copied().unwrap_or(0);
    let frames = match args.frames {
        Some(n) if n < last => {
            bail!("--frames {n} is shorter than the last detection frame {last}")
        }
        Some(n) => n,
        None => last,
    };
    let warps = match &args.warps {
        Some(p) => {
            let w = parse_warps(&read(p)?).with_context(|| format!("warps {}", p.display()))?;
            if (w.len() as u64) + 1 < u64::from(frames) {
                bail!(
                    "{} holds {} warps, {} frames need {}",
                    p.display(),
                    w.len(),
                    frames,
                    frames - 1
                );
            }
            w
        }
        None => Vec::new(),
    };
    let mut tracker = Tracker::new(cfg.effective_tracker())?;
    for frame in 1..=frames {
        let dets = by_frame.remove(&frame).unwrap_or_default();
        let warp = if frame >= 2 {
            warps.get(frame as usize - 2).copied()
        } else {
            None
        }
        .unwrap_or_else(WarpMatrix::identity);
        tracker
            .step(frame, &dets, &warp)
            .with_context(|| format!("frame {frame}"))?;
    }
    Ok(pedtrack_core::io::write_mot(&result_rows(
        &tracker.results(),
    )))
}

fn track(args: &TrackArgs) -> Result<()> {
    let cfg = load_config(args.config.as_deref())?;
    let det = args
        .det
        .clone()
        .or_else(|| cfg.input.clone())
        .context("no detection file: pass --det or set `input`")?;
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .context("no result file: pass --out or set `output`")?;
    let text = track_text(args, &cfg, &det)?;
    write_atomic(&out, &text)?;
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let mut spec = standard_suite(args.scenario, args.seed);
    if args.pixels {
        spec.feature_maps = Some(FeatureMapSpec::default());
    }
    let files = simulation_files(&generate(&spec)?);
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let mut outputs = vec![
        ("gt.txt", files.gt),
        ("det.txt", files.det),
        ("embeddings.txt", files.embeddings),
        ("visibility.txt", files.visibility),
    ];
    outputs.extend(files.features.map(|f| ("features.txt", f)));
    outputs.extend(files.heatmaps.map(|h| ("heatmaps.txt", h)));
    for (name, text) in outputs {
        write_atomic(&args.out_dir.join(name), &text)?;
    }
    Ok(())
}

fn evaluate(args: &EvaluateArgs) -> Result<()> {
    if !(args.iou > 0.0 && args.iou <= 1.0) {
        bail!("--iou must lie in (0, 1], got {}", args.iou);
    }
    let gt = gt_table(
        &parse_mot(&read(&args.gt)?)
            .with_context(|| format!("ground truth {}", args.gt.display()))?,
    )?;
    let pred = result_table(
        &parse_mot(&read(&args.pred)?)
            .with_context(|| format!("results {}", args.pred.display()))?,
    )?;
    let (report, events) = evaluate_with_events(&gt, &pred, args.iou);
    if let Some(p) = &args.events {
        let mut log = String::from("frame,kind,gt_id,pred_id\n");
        for e in &events {
            log.push_str(&format!("{e}\n"));
        }
        write_atomic(p, &log)?;
    }
    emit(args.out.as_deref(), &report.to_kv())
}

/// `param,idf1,mota,idsw` header plus one line per sweep point.
pub fn ablation_table(param: SweepParam, rows: &[SweepRow]) -> String {
    let mut out = format!("{},idf1,mota,idsw\n", param.name());
    for r in rows {
        out.push_str(&format!(
            "{:.1},{:.6},{:.6},{}\n",
            r.value, r.report.idf1, r.report.mota, r.report.idsw
        ));
    }
    out
}

pub fn ablation_rows(
    param: SweepParam,
    suite: SuiteChoice,
    seeds: u64,
    cfg: &RunConfig,
) -> Result<Vec<SweepRow>> {
    let scenarios = match suite {
        SuiteChoice::Cross => suite_scenarios(Suite::Cross, 0..seeds)?,
        SuiteChoice::Follow => suite_scenarios(Suite::Follow, 0..seeds)?,
        SuiteChoice::Linger => suite_scenarios(Suite::Linger, 0..seeds)?,
        SuiteChoice::Crowd => suite_scenarios(Suite::Crowd, 0..seeds)?,
        SuiteChoice::Combined => combined_scenarios(0..seeds)?,
    };
    Ok(sweep(
        param,
        &unit_grid(),
        &cfg.effective_tracker(),
        &scenarios,
    )?)
}

fn ablate(args: &AblateArgs) -> Result<()> {
    if args.seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    let cfg = load_config(args.config.as_deref())?;
    let param = SweepParam::from(args.param);
    let rows = ablation_rows(param, args.suite, args.seeds, &cfg)?;
    emit(args.out.as_deref(), &ablation_table(param, &rows))
}

fn plotdata(args: &PlotArgs) -> Result<()> {
    let rows = parse_mot(&read(&args.results)?)
        .with_context(|| format!("results {}", args.results.display()))?;
    emit(args.out.as_deref(), &plot_rows(&rows))
}
