use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use motion_flow::editing::{build_mask, rewrite_sample, EditConfig, EditTask, MaskParams};
use motion_flow::error::ErrorCategory;
use motion_flow::manifest::{checkpoint_hash, RunManifest, MANIFEST_FILE};
use motion_flow::metrics::{EncoderConfig, FeatureExtractor};
use motion_flow::motion::{
    gen_synthetic_dataset, read_motion, read_motion_dir, write_motion, write_motion_dir, DatasetFamily,
    MotionSequence, SyntheticDatasetSpec,
};
use motion_flow::net::{Architecture, Checkpoint, Condition, ModelConfig};
use motion_flow::numerics::DenseArray;
use motion_flow::pipeline::{
    balanced_labels, evaluate, guidance_csv, guidance_sweep, nfe_csv, nfe_curve, EvalConfig, Generator, GUIDANCE_SWEEP,
};
use motion_flow::sampler::{sample, SamplerConfig, Solver, Trajectory};
use motion_flow::training::{train_with_progress, write_training_log, TrainConfig};

#[derive(Parser)]
#[command(name = "mfm", version, about = "Motion flow matching: data, training, sampling, editing, evaluation")]
struct Cli {
    /// Suppress progress output on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset as a directory of motion files.
    GenData(GenDataArgs),
    /// Train a vector-field model on a motion directory.
    Train(TrainArgs),
    /// Sample motions from a checkpoint.
    Sample(SampleArgs),
    /// Edit a motion by sampling-trajectory rewriting.
    Edit(EditArgs),
    /// Evaluate a checkpoint against ground-truth motions.
    Eval(EvalArgs),
    /// FID against held-out data for several step counts.
    NfeCurve(NfeArgs),
}

#[derive(Args)]
struct GenDataArgs {
    #[arg(long, default_value = "gaussian-shift")]
    family: DatasetFamily,
    #[arg(long, default_value_t = 2)]
    joints: usize,
    #[arg(long, default_value_t = 60)]
    frames: usize,
    #[arg(long, default_value_t = 2)]
    classes: usize,
    #[arg(long, default_value_t = 100)]
    samples_per_class: usize,
    #[arg(long)]
    shift: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    fps: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON dataset spec; flags given explicitly are ignored when this is set.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// JSON training config; command-line flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_arch, default_value = "transformer")]
    arch: Architecture,
    #[arg(long)]
    d_model: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    heads: Option<usize>,
    #[arg(long)]
    d_ff: Option<usize>,
    /// Number of condition labels; defaults to the largest label in the data plus one.
    #[arg(long)]
    classes: Option<usize>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Condition label for every sample; without it labels cycle through all classes.
    #[arg(long)]
    label: Option<usize>,
    /// Sample from the null condition only.
    #[arg(long, conflicts_with = "label")]
    unconditional: bool,
    #[arg(long, default_value_t = 10)]
    steps: usize,
    #[arg(long, default_value_t = 1.0)]
    guidance: f64,
    #[arg(long, default_value = "euler")]
    solver: Solver,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write per-step trajectory records and x̂₁ estimates.
    #[arg(long)]
    trajectory: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EditArgs {
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    task: EditTask,
    #[arg(long, default_value_t = 0)]
    prefix_frames: usize,
    #[arg(long, default_value_t = 0)]
    suffix_frames: usize,
    #[arg(long, default_value_t = 0)]
    stride: usize,
    /// Comma-separated joint indices to regenerate for `upper_body`.
    #[arg(long, value_delimiter = ',')]
    upper_joints: Option<Vec<usize>>,
    /// Rewriting threshold ς.
    #[arg(long, default_value_t = 0.2)]
    sigma: f64,
    #[arg(long, default_value_t = 30)]
    steps: usize,
    #[arg(long, default_value_t = 1.0)]
    guidance: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    trajectory: bool,
    /// Output motion file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    ckpt: PathBuf,
    /// Labelled ground-truth motion directory.
    #[arg(long)]
    data: PathBuf,
    /// JSON evaluation config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    guidance: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "random_projection")]
    extractor: String,
    #[arg(long)]
    feature_dim: Option<usize>,
    /// Report file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct NfeArgs {
    #[arg(long)]
    ckpt: PathBuf,
    /// Held-out motion directory.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,2,5,10,50,100")]
    steps: Vec<usize>,
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    guidance: f64,
    #[arg(long, default_value = "euler")]
    solver: Solver,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 16)]
    feature_dim: usize,
    /// Also write a guidance-strength sweep to this CSV.
    #[arg(long)]
    guidance_sweep: Option<PathBuf>,
    /// Output CSV.
    #[arg(long)]
    out: PathBuf,
}

fn parse_arch(s: &str) -> Result<Architecture, String> {
    match s {
        "transformer" => Ok(Architecture::Transformer),
        "mlp" => Ok(Architecture::Mlp),
        other => Err(format!("unknown architecture `{other}`")),
    }
}

struct Ctx {
    quiet: bool,
    argv: Vec<String>,
}

impl Ctx {
    fn progress(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn manifest(&self, command: &str, config: impl Serialize) -> anyhow::Result<RunManifest> {
        let mut m = RunManifest::new(command, self.argv.clone());
        m.config = serde_json::to_value(config)?;
        Ok(m)
    }
}

fn manifest_path_for(output: &Path) -> PathBuf {
    if output.is_dir() {
        output.join(MANIFEST_FILE)
    } else {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }
}

fn gen_data(ctx: &Ctx, a: GenDataArgs) -> anyhow::Result<()> {
    let start = Instant::now();
    let spec = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| motion_flow::Error::Io {
                path: path.clone(),
                source: e,
            })?;
            serde_json::from_str::<SyntheticDatasetSpec>(&text).map_err(|e| motion_flow::Error::Format {
                kind: "dataset spec",
                path: path.clone(),
                detail: e.to_string(),
            })?
        }
        None => {
            let mut spec =
                SyntheticDatasetSpec::new(a.family, a.joints, a.frames, a.classes, a.samples_per_class, a.seed);
            if let Some(v) = a.shift {
                spec.shift = v;
            }
            if let Some(v) = a.sigma {
                spec.sigma = v;
            }
            if let Some(v) = a.fps {
                spec.fps = v;
            }
            spec
        }
    };
    let motions = gen_synthetic_dataset(&spec)?;
    fs::create_dir_all(&a.out).map_err(|e| motion_flow::Error::Io {
        path: a.out.clone(),
        source: e,
    })?;
    let files = write_motion_dir(&a.out, &motions)?;
    ctx.progress(format!("wrote {} motions to {}", files.len(), a.out.display()));
    let mut m = ctx.manifest("gen-data", &spec)?;
    m.seeds.insert("dataset".into(), spec.seed);
    m.outputs = files;
    m.timings_seconds.insert("total".into(), start.elapsed().as_secs_f64());
    m.write(&a.out.join(MANIFEST_FILE))?;
    Ok(())
}

fn train_cmd(ctx: &Ctx, a: TrainArgs) -> anyhow::Result<()> {
    let start = Instant::now();
    let data = read_motion_dir(&a.data)?;
    let first = data
        .first()
        .ok_or_else(|| motion_flow::Error::InvalidArgument(format!("no motions in {}", a.data.display())))?;
    let mut cfg = match &a.config {
        Some(path) => TrainConfig::from_json_file(path)?,
        None => TrainConfig::default(),
    };
    if let Some(v) = a.steps {
        cfg.steps = v;
    }
    if let Some(v) = a.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = a.lr {
        cfg.lr = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    let classes = a
        .classes
        .unwrap_or_else(|| data.iter().filter_map(|m| m.condition()).max().map_or(1, |k| k + 1));
    let (d, t) = (first.dim(), first.frames());
    let mut model = match a.arch {
        Architecture::Transformer => ModelConfig::transformer(d, t, classes),
        Architecture::Mlp => ModelConfig::mlp(d, t, classes, 128, 2),
    };
    if let Some(v) = a.d_model {
        model.d_model = v;
        if a.arch == Architecture::Mlp {
            model.cond_dim = v;
            model.d_ff = v;
        }
    }
    if let Some(v) = a.layers {
        model.layers = v;
    }
    if let Some(v) = a.heads {
        model.heads = v;
    }
    if let Some(v) = a.d_ff {
        model.d_ff = v;
    }
    let every = (cfg.steps / 20).max(1);
    let outcome = train_with_progress(&data, model.clone(), &cfg, |row| {
        if row.step % every == 0 {
            ctx.progress(format!("step {} loss {:.5}", row.step, row.loss));
        }
    })?;
    outcome.checkpoint.save(&a.out)?;
    let log_path = a.out.join("train_log.csv");
    write_training_log(&log_path, &outcome.log)?;

    #[derive(Serialize)]
    struct Resolved<'a> {
        train: &'a TrainConfig,
        model: &'a ModelConfig,
    }
    let mut m = ctx.manifest("train", Resolved { train: &cfg, model: &model })?;
    m.seeds.insert("train".into(), cfg.seed);
    m.inputs.push(a.data.clone());
    m.outputs = vec![a.out.clone(), log_path];
    m.checkpoint_sha256 = Some(checkpoint_hash(&a.out)?);
    m.timings_seconds.insert("total".into(), start.elapsed().as_secs_f64());
    m.write(&a.out.join(MANIFEST_FILE))?;
    if let Some(e) = outcome.diverged {
        ctx.progress("training diverged; the last finite checkpoint was written");
        return Err(e.into());
    }
    Ok(())
}

#[derive(Serialize)]
struct TrajectoryRecord {
    step: usize,
    t: f64,
    state_norm: f64,
    x1hat_path: PathBuf,
}

/// One JSON line per step; the x̂₁ estimate of item 0 is written as a motion file.
fn write_trajectory(dir: &Path, traj: &Trajectory, ckpt: &Checkpoint, item: usize) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut lines = String::new();
    for (step, est) in traj.x1_estimates.iter().enumerate() {
        let path = dir.join(format!("x1hat_{step:04}.motion"));
        let values = ckpt.normalizer.denormalize(&est.outer(item));
        write_motion(&path, &MotionSequence::new(ckpt.layout, values, None)?)?;
        let rec = TrajectoryRecord {
            step,
            t: traj.times[step],
            state_norm: traj.states[step].outer(item).norm(),
            x1hat_path: path,
        };
        lines.push_str(&serde_json::to_string(&rec)?);
        lines.push('\n');
    }
    let path = dir.join("trajectory.jsonl");
    fs::write(&path, lines).map_err(|e| motion_flow::Error::Io {
        path: path.clone(),
        source: e,
    })?;
    Ok(path)
}

fn sample_cmd(ctx: &Ctx, a: SampleArgs) -> anyhow::Result<()> {
    let start = Instant::now();
    let ckpt = Checkpoint::load(&a.ckpt)?;
    let cfg = SamplerConfig {
        solver: a.solver,
        steps: a.steps,
        guidance: a.guidance,
        seed: a.seed,
    };
    let classes = ckpt.model.config().classes;
    let labels: Vec<Option<usize>> = if a.unconditional {
        vec![None; a.n]
    } else if let Some(k) = a.label {
        vec![Some(k); a.n]
    } else {
        balanced_labels(a.n, classes)
    };
    let conditions: Vec<Condition> = labels.iter().map(|&l| Condition::from_label(l)).collect();
    let shape = [ckpt.model.config().frames, ckpt.layout.dim()];
    let traj = sample(&ckpt.model, &conditions, shape, &cfg)?;
    let motions = (0..a.n)
        .map(|i| MotionSequence::new(ckpt.layout, ckpt.normalizer.denormalize(&traj.last().outer(i)), labels[i]))
        .collect::<motion_flow::Result<Vec<_>>>()?;
    fs::create_dir_all(&a.out).map_err(|e| motion_flow::Error::Io {
        path: a.out.clone(),
        source: e,
    })?;
    let mut outputs = write_motion_dir(&a.out, &motions)?;
    if a.trajectory {
        outputs.push(write_trajectory(&a.out.join("trajectory"), &traj, &ckpt, 0)?);
    }
    ctx.progress(format!("wrote {} samples to {}", a.n, a.out.display()));
    let mut m = ctx.manifest("sample", cfg)?;
    m.seeds.insert("noise".into(), a.seed);
    m.inputs.push(a.ckpt.clone());
    m.outputs = outputs;
    m.checkpoint_sha256 = Some(checkpoint_hash(&a.ckpt)?);
    m.timings_seconds.insert("total".into(), start.elapsed().as_secs_f64());
    m.write(&a.out.join(MANIFEST_FILE))?;
    Ok(())
}

fn edit_cmd(ctx: &Ctx, a: EditArgs) -> anyhow::Result<()> {
    let start = Instant::now();
    let ckpt = Checkpoint::load(&a.ckpt)?;
    let reference = read_motion(&a.input)?;
    if reference.layout() != ckpt.layout || reference.frames() != ckpt.model.config().frames {
        return Err(motion_flow::Error::shape(
            "edit",
            format!(
                "motion is {}x{}, checkpoint expects {}x{}",
                reference.frames(),
                reference.dim(),
                ckpt.model.config().frames,
                ckpt.layout.dim()
            ),
        )
        .into());
    }
    let params = MaskParams {
        frames: reference.frames(),
        prefix_frames: a.prefix_frames,
        suffix_frames: a.suffix_frames,
        stride: a.stride,
        upper_joints: a.upper_joints.clone(),
    };
    let mask = build_mask(a.task, ckpt.layout, &params)?;
    let cfg = EditConfig {
        steps: a.steps,
        threshold: a.sigma,
        guidance: a.guidance,
        seed: a.seed,
    };
    let x = ckpt.normalizer.normalize(reference.values());
    let traj = rewrite_sample(
        &ckpt.model,
        &x,
        &mask,
        &[Condition::from_label(reference.condition())],
        &cfg,
    )?;
    let values: DenseArray = ckpt.normalizer.denormalize(&traj.last().outer(0));
    let edited = MotionSequence::new(ckpt.layout, values, reference.condition())?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| motion_flow::Error::Io {
            path: parent.to_path_buf(),
            source: e,
        })?;
    }
    write_motion(&a.out, &edited)?;
    let mut outputs = vec![a.out.clone()];
    if a.trajectory {
        let mut dir = a.out.as_os_str().to_owned();
        dir.push(".trajectory");
        outputs.push(write_trajectory(Path::new(&dir), &traj, &ckpt, 0)?);
    }
    ctx.progress(format!("wrote {}", a.out.display()));

    #[derive(Serialize)]
    struct Resolved<'a> {
        task: EditTask,
        mask: &'a MaskParams,
        edit: EditConfig,
    }
    let mut m = ctx.manifest(
        "edit",
        Resolved {
            task: a.task,
            mask: &params,
            edit: cfg,
        },
    )?;
    m.seeds.insert("noise".into(), a.seed);
    m.inputs = vec![a.ckpt.clone(), a.input.clone()];
    m.outputs = outputs;
    m.checkpoint_sha256 = Some(checkpoint_hash(&a.ckpt)?);
    m.timings_seconds.insert("total".into(), start.elapsed().as_secs_f64());
    m.write(&manifest_path_for(&a.out))?;
    Ok(())
}

fn eval_cmd(ctx: &Ctx, a: EvalArgs) -> anyhow::Result<()> {
    let start = Instant::now();
    let ckpt = Checkpoint::load(&a.ckpt)?;
    let gt = read_motion_dir(&a.data)?;
    let mut cfg = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| motion_flow::Error::Io {
                path: path.clone(),
                source: e,
            })?;
            serde_json::from_str::<EvalConfig>(&text).map_err(|e| motion_flow::Error::Format {
                kind: "eval config",
                path: path.clone(),
                detail: e.to_string(),
            })?
        }
        None => EvalConfig::default(),
    };
    if let Some(v) = a.reps {
        cfg.repetitions = v;
    }
    if let Some(v) = a.samples {
        cfg.samples = v;
    }
    if let Some(v) = a.steps {
        cfg.sampler.steps = v;
    }
    if let Some(v) = a.guidance {
        cfg.sampler.guidance = v;
    }
    if let Some(v) = a.seed {
        cfg.sampler.seed = v;
        cfg.extractor_seed = v;
    }
    if let Some(v) = a.feature_dim {
        cfg.feature_dim = v;
    }
    let extractor = match a.extractor.as_str() {
        "random_projection" => FeatureExtractor::random_projection(ckpt.layout.dim(), cfg.feature_dim, cfg.extractor_seed)?,
        "trained_encoder" => FeatureExtractor::train_encoder(
            &gt,
            &EncoderConfig {
                dim: cfg.feature_dim,
                seed: cfg.extractor_seed,
                ..EncoderConfig::default()
            },
        )?,
        other => {
            return Err(motion_flow::Error::InvalidArgument(format!("unknown extractor `{other}`")).into());
        }
    };
    ctx.progress(format!("evaluating over {} repetitions", cfg.repetitions));
    let generator = Generator::from_checkpoint(&ckpt);
    let report = evaluate(&generator, &gt, ckpt.model.config().classes, &extractor, &cfg)?;
    report.write(&a.out)?;
    let mut m = ctx.manifest("eval", &cfg)?;
    m.seeds.insert("sampler".into(), cfg.sampler.seed);
    m.seeds.insert("extractor".into(), cfg.extractor_seed);
    m.inputs = vec![a.ckpt.clone(), a.data.clone()];
    m.outputs = vec![a.out.clone()];
    m.checkpoint_sha256 = Some(checkpoint_hash(&a.ckpt)?);
    m.timings_seconds.insert("total".into(), start.elapsed().as_secs_f64());
    m.write(&manifest_path_for(&a.out))?;
    Ok(())
}

fn nfe_cmd(ctx: &Ctx, a: NfeArgs) -> anyhow::Result<()> {
    let start = Instant::now();
    let ckpt = Checkpoint::load(&a.ckpt)?;
    let held_out = read_motion_dir(&a.data)?;
    let extractor = FeatureExtractor::random_projection(ckpt.layout.dim(), a.feature_dim, a.seed)?;
    let sampler = SamplerConfig {
        solver: a.solver,
        steps: 1,
        guidance: a.guidance,
        seed: a.seed,
    };
    let classes = ckpt.model.config().classes;
    let labels = balanced_labels(a.n, classes);
    let generator = Generator::from_checkpoint(&ckpt);
    let rows = nfe_curve(&generator, &held_out, &extractor, &a.steps, &labels, &sampler)?;
    write_text(&a.out, &nfe_csv(&rows))?;
    let mut outputs = vec![a.out.clone()];
    if let Some(path) = &a.guidance_sweep {
        let base = SamplerConfig { steps: 10, ..sampler };
        let rows = guidance_sweep(&generator, &held_out, classes, &extractor, &GUIDANCE_SWEEP, a.n, &base)?;
        write_text(path, &guidance_csv(&rows))?;
        outputs.push(path.clone());
    }
    ctx.progress(format!("wrote {}", a.out.display()));

    #[derive(Serialize)]
    struct Resolved<'a> {
        steps: &'a [usize],
        n: usize,
        sampler: SamplerConfig,
        feature_dim: usize,
        extractor: motion_flow::metrics::ExtractorInfo,
    }
    let mut m = ctx.manifest(
        "nfe-curve",
        Resolved {
            steps: &a.steps,
            n: a.n,
            sampler,
            feature_dim: a.feature_dim,
            extractor: extractor.info(),
        },
    )?;
    m.seeds.insert("sampler".into(), a.seed);
    m.inputs = vec![a.ckpt.clone(), a.data.clone()];
    m.outputs = outputs;
    m.checkpoint_sha256 = Some(checkpoint_hash(&a.ckpt)?);
    m.timings_seconds.insert("total".into(), start.elapsed().as_secs_f64());
    m.write(&manifest_path_for(&a.out))?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).map_err(|e| motion_flow::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

fn configure_threads() {
    if let Some(n) = std::env::var("MFM_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // Fails only if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn exit_code(err: &anyhow::Error) -> (u8, &'static str) {
    match err.downcast_ref::<motion_flow::Error>().map(|e| e.category()) {
        Some(ErrorCategory::Usage) => (2, "usage"),
        Some(ErrorCategory::Numeric) => (4, "numeric"),
        Some(ErrorCategory::Io) | None => (3, "io"),
    }
}

fn main() -> ExitCode {
    configure_threads();
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let ctx = Ctx { quiet: cli.quiet, argv };
    let result = match cli.command {
        Command::GenData(a) => gen_data(&ctx, a),
        Command::Train(a) => train_cmd(&ctx, a),
        Command::Sample(a) => sample_cmd(&ctx, a),
        Command::Edit(a) => edit_cmd(&ctx, a),
        Command::Eval(a) => eval_cmd(&ctx, a),
        Command::NfeCurve(a) => nfe_cmd(&ctx, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (code, category) = exit_code(&err);
            eprintln!("error[{category}]: {err:#}");
            ExitCode::from(code)
        }
    }
}
