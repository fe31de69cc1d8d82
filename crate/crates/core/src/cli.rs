//! The `mocapval` command line.
//!
//! Exit codes: 0 success, 1 validation or parse failure, 2 empty result.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::anomaly::{canonicalize, detect_flips, AnomalyKind, FlipThresholds};
use crate::io::{self, AnalysisConfig, IoError, ReportFormat};
use crate::kinematics::{FlexionSeries, SeriesSource};
use crate::model::{Model, ModelDocument, ModelError, REFERENCE_TOPOLOGY};
use crate::pipeline::{self, AlignmentGranularity, PipelineError, RecordingPair};
use crate::rotation::RotationConvention;
use crate::skeleton::{map_sequence, Exercise, MotionSequence, RecordingMeta, SkeletonTopology};
use crate::sync::{ComparisonMode, GroupKey, PairingMethod, SyncError};
use crate::synth::{
    forward_skeleton, generate_trajectory, perturb, random_rigid_transform, LimbLengths,
    MotionProfile, Perturbation, ProfileShape,
};

#[derive(Debug, Parser)]
#[command(
    name = "mocapval",
    version,
    about = "Cross-validate joint angles from two motion capture systems"
)]
pub struct Cli {
    #[command(flatten)]
    pub shared: Shared,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Shared {
    /// Analysis config (JSON)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Euler convention, e.g. intrinsic-ZXY
    #[arg(long, global = true)]
    pub convention: Option<RotationConvention>,
    /// self-consistency or cross-system
    #[arg(long, global = true)]
    pub mode: Option<ComparisonMode>,
    /// Repair Euler branch flips in reference angles
    #[arg(long, global = true)]
    pub canonicalize: bool,
    /// Extra report grouping keys: perspective, clothing, subject
    #[arg(long, global = true, value_delimiter = ',')]
    pub group_by: Vec<GroupKey>,
    /// Output file or directory; stdout when omitted
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that files parse and validate
    Validate(ValidateArgs),
    /// Write synthetic reference/estimated skeletons and ground-truth angles
    Synth(SynthArgs),
    /// Compute flexion angles from a skeleton stream
    Angles(AnglesArgs),
    /// Compare angle streams and report deviations
    Compare(CompareArgs),
    /// Find Euler branch flips in an orientation stream
    Anomalies(AnomaliesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FileKind {
    Skeleton,
    Angles,
    Euler,
    Model,
    Config,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// Override detection by extension
    #[arg(long, value_enum)]
    pub kind: Option<FileKind>,
    /// Topology for skeleton streams without a header
    #[arg(long, default_value = REFERENCE_TOPOLOGY)]
    pub topology: String,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "sinusoidal")]
    pub shape: ShapeArg,
    #[arg(long, default_value_t = 90.0)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 2.0)]
    pub period: f64,
    #[arg(long, default_value_t = 10)]
    pub repetitions: u32,
    #[arg(long, default_value_t = 60.0)]
    pub rate: f64,
    #[arg(long, value_delimiter = ',', default_value = "knee_right,knee_left")]
    pub channels: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Position noise standard deviation, millimeters
    #[arg(long, default_value_t = 0.0)]
    pub noise_mm: f64,
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 0.0)]
    pub dropout: f64,
    /// Keep the estimated skeleton in the reference frame instead of a random camera pose
    #[arg(long)]
    pub no_transform: bool,
    #[arg(long, default_value = "squat")]
    pub exercise: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ShapeArg {
    Sinusoidal,
    Trapezoid,
}

#[derive(Debug, Args)]
pub struct AnglesArgs {
    pub skeleton: PathBuf,
    /// Topology when the stream has no header
    #[arg(long)]
    pub topology: Option<String>,
    /// Register onto this skeleton stream first
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub alignment: Option<AlignmentGranularity>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Reference angle stream (CSV)
    #[arg(required_unless_present = "manifest")]
    pub reference: Option<PathBuf>,
    /// Candidate angle stream (CSV)
    #[arg(required_unless_present = "manifest")]
    pub candidate: Option<PathBuf>,
    /// JSON list of {"reference", "candidate", "meta"} recordings
    #[arg(long, conflicts_with_all = ["reference", "candidate"])]
    pub manifest: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    pub format: ReportFormat,
    /// Also write the deviation time series as SVG
    #[arg(long)]
    pub plot: Option<PathBuf>,
    #[arg(long)]
    pub pairing: Option<PairingMethod>,
    #[arg(long)]
    pub max_gap: Option<f64>,
    #[arg(long, default_value = "unknown")]
    pub subject: String,
    #[arg(long, default_value = "unknown")]
    pub exercise: String,
    #[arg(long, default_value_t = 0.0)]
    pub perspective: f64,
    #[arg(long, default_value = "unknown")]
    pub clothing: String,
}

#[derive(Debug, Args)]
pub struct AnomaliesArgs {
    /// Euler stream (CSV: time_s,x_deg,y_deg,z_deg)
    pub euler: PathBuf,
    #[arg(long)]
    pub jump_threshold: Option<f64>,
    #[arg(long)]
    pub flip_tolerance: Option<f64>,
    /// Where to write the repaired stream (with --canonicalize)
    #[arg(long)]
    pub repaired: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Empty(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Empty(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(m) | CliError::Empty(m) => f.write_str(m),
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(e.to_string())
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::EmptyReport | IoError::EmptySeries => CliError::Empty(e.to_string()),
            other => invalid(other),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        invalid(e)
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::NoCommonChannel
            | PipelineError::Sync(
                SyncError::EmptyGroup(_) | SyncError::EmptyInput | SyncError::NoOverlap(..),
            ) => CliError::Empty(e.to_string()),
            other => invalid(other),
        }
    }
}

struct Context {
    cfg: AnalysisConfig,
    model: Model,
    out: Option<PathBuf>,
}

impl Context {
    fn new(shared: &Shared) -> Result<Self, CliError> {
        let mut cfg = match &shared.config {
            Some(p) => AnalysisConfig::load(p)?,
            None => AnalysisConfig::default(),
        };
        if let Some(c) = shared.convention {
            cfg.convention = c;
        }
        if let Some(m) = shared.mode {
            cfg.mode = m;
        }
        cfg.canonicalize_reference |= shared.canonicalize;
        if !shared.group_by.is_empty() {
            cfg.group_by = shared.group_by.clone();
        }
        let model = cfg.model()?;
        Ok(Self {
            cfg,
            model,
            out: shared.out.clone(),
        })
    }

    fn emit(&self, text: &str) -> Result<(), CliError> {
        match &self.out {
            Some(path) => write_file(path, text),
            None => std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(invalid),
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn topology_of(
    model: &Model,
    text: &str,
    flag: Option<&str>,
) -> Result<Arc<SkeletonTopology>, CliError> {
    let name = match (io::stream_header(text)?, flag) {
        (Some(h), _) => h.topology,
        (None, Some(f)) => f.to_string(),
        (None, None) => REFERENCE_TOPOLOGY.to_string(),
    };
    Ok(model.topology(&name)?)
}

/// Reads a skeleton stream and maps it onto the reference topology.
fn load_skeleton(
    model: &Model,
    path: &Path,
    topology: Option<&str>,
) -> Result<MotionSequence, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let topo = topology_of(model, &text, topology)?;
    let seq = io::parse_skeleton_stream(&text, topo.clone())
        .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    if topo.name() == REFERENCE_TOPOLOGY {
        return Ok(seq);
    }
    let map = model.map(topo.name(), REFERENCE_TOPOLOGY)?;
    map_sequence(&seq, map, model.topology(REFERENCE_TOPOLOGY)?).map_err(invalid)
}

fn validate(ctx: &Context, args: &ValidateArgs) -> Result<(), CliError> {
    let mut failures = Vec::new();
    for path in &args.files {
        let kind = args
            .kind
            .unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
                Some("jsonl") => FileKind::Skeleton,
                Some("csv") => FileKind::Angles,
                _ => FileKind::Model,
            });
        let result: Result<String, CliError> = (|| match kind {
            FileKind::Skeleton => {
                let seq = load_skeleton(&ctx.model, path, Some(&args.topology))?;
                Ok(format!("{} frames", seq.len()))
            }
            FileKind::Angles => {
                let s = io::read_angle_stream(path, SeriesSource::ReferenceNative)?;
                Ok(format!("{} channels", s.len()))
            }
            FileKind::Euler => {
                let s = io::read_euler_stream(path, ctx.cfg.convention)?;
                Ok(format!("{} samples", s.len()))
            }
            FileKind::Model => {
                let mut doc = ModelDocument::bundled();
                doc.merge(ModelDocument::load(path)?);
                doc.build()?;
                Ok("model ok".into())
            }
            FileKind::Config => {
                AnalysisConfig::load(path)?.model()?;
                Ok("config ok".into())
            }
        })();
        match result {
            Ok(summary) => println!("ok {}: {summary}", path.display()),
            Err(e) => {
                eprintln!("error {}: {e}", path.display());
                failures.push(path.display().to_string());
            }
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(invalid(format!(
            "{} file(s) failed validation",
            failures.len()
        )))
    }
}

fn synth(ctx: &Context, args: &SynthArgs) -> Result<(), CliError> {
    let dir = ctx.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(invalid)?;
    let profile = MotionProfile {
        shape: match args.shape {
            ShapeArg::Sinusoidal => ProfileShape::Sinusoidal,
            ShapeArg::Trapezoid => ProfileShape::Trapezoid,
        },
        amplitude_deg: args.amplitude,
        period_s: args.period,
        repetitions: args.repetitions,
        sample_rate_hz: args.rate,
        channels: args.channels.clone(),
    };
    let truth = generate_trajectory(&profile).map_err(invalid)?;
    let meta = RecordingMeta::new(
        "synthetic",
        Exercise::parse(&args.exercise),
        0.0,
        "none",
        args.repetitions,
    )
    .map_err(invalid)?;
    let reference = forward_skeleton(
        &truth,
        &LimbLengths::default(),
        ctx.model.topology(REFERENCE_TOPOLOGY)?,
        meta,
    )
    .map_err(invalid)?;
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(args.seed);
    let transform = if args.no_transform {
        crate::registration::RigidTransform::identity()
    } else {
        random_rigid_transform(&mut rng, 2.0)
    };
    let p = Perturbation {
        transform,
        scale: args.scale,
        noise_sigma: args.noise_mm / 1000.0,
        dropout: args.dropout,
    };
    let estimated = perturb(&reference, &p, args.seed.wrapping_add(1)).map_err(invalid)?;
    write_file(
        &dir.join("reference.jsonl"),
        &io::write_skeleton_stream(&reference),
    )?;
    write_file(
        &dir.join("estimated.jsonl"),
        &io::write_skeleton_stream(&estimated),
    )?;
    write_file(&dir.join("truth.csv"), &io::write_angle_csv(&truth))?;
    eprintln!(
        "wrote {} reference and {} estimated frames to {}",
        reference.len(),
        estimated.len(),
        dir.display()
    );
    Ok(())
}

fn angles(ctx: &Context, args: &AnglesArgs) -> Result<(), CliError> {
    let mut seq = load_skeleton(&ctx.model, &args.skeleton, args.topology.as_deref())?;
    let source = match &args.reference {
        Some(r) => {
            let reference = load_skeleton(&ctx.model, r, None)?;
            let granularity = args.alignment.unwrap_or(ctx.cfg.alignment);
            seq = pipeline::register_sequence(&seq, &reference, granularity, ctx.cfg.max_gap)?;
            SeriesSource::EstimatedSkeleton
        }
        None => SeriesSource::ReferenceSkeleton,
    };
    let series = pipeline::compute_angles(&seq, ctx.model.channels(), source)?;
    if series.iter().all(FlexionSeries::is_empty) {
        return Err(CliError::Empty(
            "every frame was degenerate; no angles".into(),
        ));
    }
    ctx.emit(&io::write_angle_csv(&series))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestEntry {
    reference: PathBuf,
    candidate: PathBuf,
    #[serde(default)]
    meta: RecordingMeta,
}

fn compare(ctx: &Context, args: &CompareArgs) -> Result<(), CliError> {
    let entries: Vec<ManifestEntry> = match &args.manifest {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            let base = path.parent().unwrap_or(Path::new("."));
            let mut entries: Vec<ManifestEntry> = serde_json::from_str(&text)
                .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            for e in &mut entries {
                e.reference = base.join(&e.reference);
                e.candidate = base.join(&e.candidate);
            }
            entries
        }
        None => vec![ManifestEntry {
            reference: args.reference.clone().expect("clap requires it"),
            candidate: args.candidate.clone().expect("clap requires it"),
            meta: RecordingMeta::new(
                args.subject.clone(),
                Exercise::parse(&args.exercise),
                args.perspective,
                args.clothing.clone(),
                1,
            )
            .map_err(invalid)?,
        }],
    };
    if entries.is_empty() {
        return Err(CliError::Empty("manifest lists no recordings".into()));
    }
    let read = |p: &Path, source| {
        io::read_angle_stream(p, source).map_err(|e| invalid(format!("{}: {e}", p.display())))
    };
    let pairs = entries
        .into_iter()
        .map(|e| {
            let candidate_source = match ctx.cfg.mode {
                ComparisonMode::SelfConsistency => SeriesSource::ReferenceSkeleton,
                ComparisonMode::CrossSystem => SeriesSource::EstimatedSkeleton,
            };
            Ok(RecordingPair {
                reference: read(&e.reference, SeriesSource::ReferenceNative)?,
                candidate: read(&e.candidate, candidate_source)?,
                meta: e.meta,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut opts = ctx.cfg.compare_options();
    if let Some(m) = args.pairing {
        opts.method = m;
    }
    if let Some(g) = args.max_gap {
        if g.is_nan() || g <= 0.0 {
            return Err(invalid("--max-gap must be positive"));
        }
        opts.max_gap = g;
    }
    let result = pipeline::compare(pairs, &opts)?;
    if opts.canonicalize_reference {
        eprintln!("repaired {} reference samples", result.repaired_samples);
    }
    ctx.emit(&io::emit_report(&result.report, args.format)?)?;
    if let Some(plot) = &args.plot {
        io::emit_plot(&result.deviations, plot)?;
    }
    Ok(())
}

fn anomalies(ctx: &Context, args: &AnomaliesArgs) -> Result<(), CliError> {
    let series = io::read_euler_stream(&args.euler, ctx.cfg.convention)?;
    let defaults = FlipThresholds::default();
    let thresholds = FlipThresholds {
        jump_threshold_deg: args.jump_threshold.unwrap_or(defaults.jump_threshold_deg),
        flip_tolerance_deg: args.flip_tolerance.unwrap_or(defaults.flip_tolerance_deg),
    };
    let events = detect_flips(&series, thresholds).map_err(invalid)?;
    let flips = events
        .iter()
        .filter(|e| e.kind == AnomalyKind::RepresentationFlip)
        .count();
    eprintln!(
        "{} events ({flips} representation flips, {} genuine)",
        events.len(),
        events.len() - flips
    );
    ctx.emit(&io::write_events_csv(&events))?;
    if ctx.cfg.canonicalize_reference {
        let path = args
            .repaired
            .as_ref()
            .ok_or_else(|| invalid("--canonicalize needs --repaired <file>"))?;
        let (fixed, n) = canonicalize(&series);
        write_file(path, &io::write_euler_csv(&fixed))?;
        eprintln!("repaired {n} samples");
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = Context::new(&cli.shared)?;
    match &cli.command {
        Command::Validate(a) => validate(&ctx, a),
        Command::Synth(a) => synth(&ctx, a),
        Command::Angles(a) => angles(&ctx, a),
        Command::Compare(a) => compare(&ctx, a),
        Command::Anomalies(a) => anomalies(&ctx, a),
    }
}

/// Parses `std::env::args`, runs, and maps the outcome to an exit code.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mocapval: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
