//! Command-line frontend: track, reinit, eval, simulate, fit-rig, plot-data.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use pitchtrack::config::RunConfig;
use pitchtrack::eval::{aggregate, format_summary, score_frame};
use pitchtrack::field::{build_template, SampledTemplate};
use pitchtrack::io::{
    read_jsonl, read_rig, truth_record, write_jsonl, write_rig, AnnotationRecord,
    DetectionRecord, FrameInputs, ReportRecord,
};
use pitchtrack::observe::condense_markings;
use pitchtrack::optimize::SolveToggles;
use pitchtrack::reinit::reinitialize;
use pitchtrack::sim::{generate, TrajectorySpec};
use pitchtrack::tracker::{confidence_score, TrackReport, Tracker};
use pitchtrack::tripod::fit_rig;

#[derive(Parser)]
#[command(name = "pitchtrack", version, about = "Broadcast soccer camera tracking toolkit")]
struct Cli {
    /// Run configuration file (TOML); built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Track camera parameters through detection sequences.
    Track(TrackArgs),
    /// Per-frame two-point reinitialization from keypoints (no warm start).
    Reinit(ReinitArgs),
    /// Score camera predictions against annotations.
    Eval(EvalArgs),
    /// Generate a synthetic scene (detections, annotations, truth, rig).
    Simulate(SimulateArgs),
    /// Fit the tripod rotation center and axis offset from camera reports.
    FitRig(FitRigArgs),
    /// Export per-parameter time series for external plotting.
    PlotData(PlotDataArgs),
}

#[derive(Args, Clone, Copy)]
struct ToggleArgs {
    /// Disable the tripod constraint term.
    #[arg(long)]
    no_tripod: bool,
    /// Disable the optical-flow term.
    #[arg(long)]
    no_flow: bool,
    /// Disable radial distortion (freeze k1 at zero).
    #[arg(long)]
    no_distortion: bool,
}

impl ToggleArgs {
    fn toggles(&self) -> SolveToggles {
        SolveToggles {
            use_flow: !self.no_flow,
            use_tripod: !self.no_tripod,
            use_k1: !self.no_distortion,
        }
    }
}

#[derive(Args)]
struct TrackArgs {
    /// Detection input files, one per sequence.
    #[arg(required = true)]
    detections: Vec<PathBuf>,
    /// Output report file (single input) or directory (multiple inputs).
    #[arg(long, short)]
    output: PathBuf,
    /// Fitted rig file; the configured role default applies when omitted.
    #[arg(long)]
    rig: Option<PathBuf>,
    /// Camera role providing the default focal-point position.
    #[arg(long)]
    role: Option<String>,
    /// Sequences processed in parallel (whole files, never frames).
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    toggles: ToggleArgs,
}

#[derive(Args)]
struct ReinitArgs {
    detections: PathBuf,
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long)]
    rig: Option<PathBuf>,
    #[arg(long)]
    role: Option<String>,
    #[command(flatten)]
    toggles: ToggleArgs,
}

#[derive(Args)]
struct EvalArgs {
    predictions: PathBuf,
    annotations: PathBuf,
    /// Correctness tolerances in pixels.
    #[arg(long, value_delimiter = ',', default_values_t = [5.0, 10.0])]
    tau: Vec<f64>,
    /// Optional per-frame scores output (JSONL).
    #[arg(long)]
    scores: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scene description (TOML); built-in defaults when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, short)]
    output: PathBuf,
    /// Override the spec seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct FitRigArgs {
    /// Camera reports (tracker output or simulator truth).
    reports: PathBuf,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct PlotDataArgs {
    reports: PathBuf,
    /// Output directory for the .dat series.
    #[arg(long, short)]
    output: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if cli.print_config {
        print!("{}", config.to_toml());
        return Ok(ExitCode::SUCCESS);
    }
    let Some(command) = cli.command else {
        bail!("no subcommand; see --help");
    };
    match command {
        Command::Track(args) => cmd_track(&config, args),
        Command::Reinit(args) => cmd_reinit(&config, args),
        Command::Eval(args) => cmd_eval(&config, args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::FitRig(args) => cmd_fit_rig(args),
        Command::PlotData(args) => cmd_plot_data(args),
    }
}

struct TrackSummary {
    frames: usize,
    tracked: usize,
    reinits: u64,
    lost: usize,
    mean_s: f64,
}

fn track_one(
    config: &RunConfig,
    detections: &Path,
    output: &Path,
    rig: Option<pitchtrack::TripodRig>,
    role: Option<&str>,
    toggles: SolveToggles,
) -> Result<TrackSummary> {
    let records: Vec<DetectionRecord> = read_jsonl(detections)?;
    if records.is_empty() {
        bail!("{}: no frames", detections.display());
    }
    let mut tracker = Tracker::new(config.clone(), rig, role, toggles)?;
    let mut reports: Vec<TrackReport> = Vec::with_capacity(records.len());
    for record in &records {
        let inputs = FrameInputs::from_record(record, config)?;
        reports.push(tracker.step(&inputs)?);
    }
    let out_records: Vec<ReportRecord> = reports.iter().map(ReportRecord::from_report).collect();
    write_jsonl(output, &out_records)?;

    let tracked = reports.iter().filter(|r| r.camera.is_some()).count();
    let scored: Vec<f64> = reports.iter().filter_map(|r| r.s).collect();
    Ok(TrackSummary {
        frames: reports.len(),
        tracked,
        reinits: tracker.reinit_count(),
        lost: reports.len() - tracked,
        mean_s: if scored.is_empty() {
            0.0
        } else {
            scored.iter().sum::<f64>() / scored.len() as f64
        },
    })
}

fn cmd_track(config: &RunConfig, args: TrackArgs) -> Result<ExitCode> {
    let rig = match &args.rig {
        Some(path) => Some(read_rig(path)?),
        None => None,
    };
    let toggles = args.toggles.toggles();
    let multi = args.detections.len() > 1;
    if multi {
        std::fs::create_dir_all(&args.output)
            .with_context(|| format!("creating {}", args.output.display()))?;
    }
    let jobs: Vec<(PathBuf, PathBuf)> = args
        .detections
        .iter()
        .map(|input| {
            let output = if multi {
                let stem = input.file_stem().unwrap_or_default().to_string_lossy().to_string();
                args.output.join(format!("{stem}.reports.jsonl"))
            } else {
                args.output.clone()
            };
            (input.clone(), output)
        })
        .collect();

    let workers = args.jobs.max(1).min(jobs.len());
    let mut results: Vec<Option<Result<TrackSummary>>> = (0..jobs.len()).map(|_| None).collect();
    if workers <= 1 {
        for (i, (input, output)) in jobs.iter().enumerate() {
            results[i] =
                Some(track_one(config, input, output, rig, args.role.as_deref(), toggles));
        }
    } else {
        // one file per task; sequences stay strictly sequential internally
        let chunks: Vec<Vec<usize>> =
            (0..workers).map(|w| (w..jobs.len()).step_by(workers).collect()).collect();
        let outcomes = std::thread::scope(|scope| {
            let handles: Vec<_> = chunks
                .into_iter()
                .map(|chunk| {
                    let jobs = &jobs;
                    let role = args.role.as_deref();
                    scope.spawn(move || {
                        chunk
                            .into_iter()
                            .map(|i| {
                                let (input, output) = &jobs[i];
                                (i, track_one(config, input, output, rig, role, toggles))
                            })
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles.into_iter().flat_map(|h| h.join().expect("worker")).collect::<Vec<_>>()
        });
        for (i, outcome) in outcomes {
            results[i] = Some(outcome);
        }
    }

    let mut any_tracked = false;
    for ((input, _), result) in jobs.iter().zip(results) {
        let summary = result.expect("all jobs ran")?;
        any_tracked |= summary.tracked > 0;
        println!(
            "{}: {} frames, CR {:.2}%, mean s {:.3}, {} reinits, {} lost",
            input.display(),
            summary.frames,
            100.0 * summary.tracked as f64 / summary.frames as f64,
            summary.mean_s,
            summary.reinits,
            summary.lost
        );
    }
    Ok(if any_tracked { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_reinit(config: &RunConfig, args: ReinitArgs) -> Result<ExitCode> {
    let records: Vec<DetectionRecord> = read_jsonl(&args.detections)?;
    if records.is_empty() {
        bail!("{}: no frames", args.detections.display());
    }
    let rig = match &args.rig {
        Some(path) => read_rig(path)?,
        None => config.default_rig(args.role.as_deref())?,
    };
    let toggles = SolveToggles { use_flow: false, ..args.toggles.toggles() };
    let dims = config.dimensions()?;
    let template = build_template(&dims)?;
    let sampled_loss = SampledTemplate::new(&template, config.field.loss_step_m);
    let sampled_mask = SampledTemplate::new(&template, config.field.mask_step_m);

    let mut out = Vec::with_capacity(records.len());
    let mut recovered = 0usize;
    for record in &records {
        let inputs = FrameInputs::from_record(record, config)?;
        let scale = inputs.height as f64 / 1080.0;
        let mut markings = condense_markings(
            &inputs.seg,
            config.tracker.bandwidth_px * scale,
            config.tracker.seed_decimation,
        );
        for (class, points) in &inputs.precondensed {
            markings.insert(*class, points.clone());
        }
        let result = reinitialize(
            &inputs.keypoints,
            &rig,
            &markings,
            &sampled_loss,
            &config.solver,
            &config.reinit,
            toggles,
            inputs.width,
            inputs.height,
        );
        let record = match result {
            Ok(res) => {
                recovered += 1;
                let s = confidence_score(
                    &res.camera,
                    &inputs.seg,
                    &sampled_mask,
                    config.tracker.stroke_px * scale,
                );
                ReportRecord {
                    frame: inputs.frame,
                    status: "tracking".into(),
                    reinit_used: true,
                    s: Some(s),
                    cost: None,
                    mre_px: None,
                    camera: Some(pitchtrack::io::CameraRecord::from_state(&res.camera)),
                }
            }
            Err(_) => ReportRecord {
                frame: inputs.frame,
                status: "lost".into(),
                reinit_used: false,
                s: None,
                cost: None,
                mre_px: None,
                camera: None,
            },
        };
        out.push(record);
    }
    write_jsonl(&args.output, &out)?;
    println!(
        "{}: {} frames, {} recovered ({:.2}%)",
        args.detections.display(),
        out.len(),
        recovered,
        100.0 * recovered as f64 / out.len() as f64
    );
    Ok(if recovered > 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_eval(config: &RunConfig, args: EvalArgs) -> Result<ExitCode> {
    let predictions: Vec<ReportRecord> = read_jsonl(&args.predictions)?;
    let annotations: Vec<AnnotationRecord> = read_jsonl(&args.annotations)?;
    if annotations.is_empty() {
        bail!("{}: no frames", args.annotations.display());
    }
    let template = build_template(&config.dimensions()?)?;
    let sampled = SampledTemplate::new(&template, config.field.mask_step_m);

    let mut taus = args.tau.clone();
    taus.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut scores = Vec::with_capacity(annotations.len());
    let mut score_records = Vec::new();
    for record in &annotations {
        let annotation = record.to_annotation(config)?;
        let camera = predictions
            .iter()
            .find(|p| p.frame == record.frame)
            .and_then(|p| p.camera.as_ref())
            .map(|c| c.to_state());
        let score = score_frame(camera.as_ref(), &annotation, &sampled, &taus);
        score_records.push(serde_json::json!({
            "frame": score.frame,
            "camera_present": score.camera_present,
            "tau": score.taus,
            "jaccard": score.jaccard,
            "tp": score.tp,
            "fp": score.fp,
            "fn": score.fn_,
            "mean_distance_px": if score.distances.is_empty() { None } else {
                Some(score.distances.iter().sum::<f64>() / score.distances.len() as f64)
            },
        }));
        scores.push(score);
    }
    let summary = aggregate(&scores, annotations.len());
    println!("{}", format_summary(&summary));
    if let Some(path) = &args.scores {
        write_jsonl(path, &score_records)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode> {
    let mut spec = match &args.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            TrajectorySpec::from_toml(&text)?
        }
        None => TrajectorySpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    std::fs::create_dir_all(&args.output)
        .with_context(|| format!("creating {}", args.output.display()))?;

    let frames = generate(&spec)?;
    let detections: Vec<_> = frames.iter().map(|f| f.to_detection_record()).collect();
    let annotations: Vec<_> = frames.iter().map(|f| f.to_annotation_record()).collect();
    let truth: Vec<_> = frames.iter().map(|f| truth_record(f.frame, &f.truth)).collect();
    write_jsonl(&args.output.join("detections.jsonl"), &detections)?;
    write_jsonl(&args.output.join("annotations.jsonl"), &annotations)?;
    write_jsonl(&args.output.join("truth.jsonl"), &truth)?;
    write_rig(&args.output.join("rig.json"), &spec.rig())?;
    std::fs::write(args.output.join("scene.toml"), spec.to_toml())?;
    println!("{} frames written to {}", frames.len(), args.output.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_fit_rig(args: FitRigArgs) -> Result<ExitCode> {
    let reports: Vec<ReportRecord> = read_jsonl(&args.reports)?;
    let cameras: Vec<_> = reports
        .iter()
        .filter_map(|r| r.camera.as_ref())
        .map(|c| c.to_state())
        .collect();
    if cameras.is_empty() {
        bail!("{}: no camera records", args.reports.display());
    }
    let rig = fit_rig(&cameras)?;
    write_rig(&args.output, &rig)?;
    println!(
        "rig: T = ({:.3}, {:.3}, {:.3}) m, delta = {:.4} m ({} cameras)",
        rig.t.x,
        rig.t.y,
        rig.t.z,
        rig.delta,
        cameras.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_plot_data(args: PlotDataArgs) -> Result<ExitCode> {
    let reports: Vec<ReportRecord> = read_jsonl(&args.reports)?;
    if reports.is_empty() {
        bail!("{}: no reports", args.reports.display());
    }
    std::fs::create_dir_all(&args.output)
        .with_context(|| format!("creating {}", args.output.display()))?;

    let series = |name: &str, value: &dyn Fn(&ReportRecord) -> Option<Vec<f64>>| -> Result<()> {
        let mut text = String::new();
        for report in &reports {
            text.push_str(&report.frame.to_string());
            match value(report) {
                Some(values) => {
                    for v in values {
                        text.push_str(&format!(" {v}"));
                    }
                }
                None => text.push_str(" nan"),
            }
            text.push('\n');
        }
        std::fs::write(args.output.join(name), text)?;
        Ok(())
    };

    let cam = |r: &ReportRecord| r.camera.clone();
    series("pan.dat", &|r| cam(r).map(|c| vec![c.pan_deg]))?;
    series("tilt.dat", &|r| cam(r).map(|c| vec![c.tilt_deg]))?;
    series("roll.dat", &|r| cam(r).map(|c| vec![c.roll_deg]))?;
    series("focal.dat", &|r| cam(r).map(|c| vec![c.f_px]))?;
    series("k1.dat", &|r| cam(r).map(|c| vec![c.k1]))?;
    series("position.dat", &|r| {
        cam(r).map(|c| vec![c.position_m[0], c.position_m[1], c.position_m[2]])
    })?;
    series("score.dat", &|r| r.s.map(|s| vec![s]))?;
    println!("{} rows per series in {}", reports.len(), args.output.display());
    Ok(ExitCode::SUCCESS)
}
