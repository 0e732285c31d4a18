//! Command-line front end. Results go to stdout as `key=value` lines; prose
//! goes to stderr. Exit codes: 0 success, 1 domain error, 2 usage error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::dataset::{augment_manifest, auto_label, load_manifest, save_manifest, split_holdout, AugmentRanges, DatasetManifest};
use crate::error::{Error, Result};
use crate::eval::{bench_runtime, evaluate, render_report, Estimator, ReportFormat, REFERENCE_RUNTIME_RATIO};
use crate::raster::load_image;
use crate::regressor::{
    grad_check, load_model, pretrain_images, random_case, save_model, train, FeatureExtractor, Hyperparams,
    OptimizerKind, DEFAULT_EPS, DEFAULT_TOLERANCE, HEAD_WIDTHS, INPUT_SIDE,
};
use crate::synth::{auxiliary_set, generate_batch, standard_backgrounds, BatchSpec, BlurSpec};
use crate::vision::{run_baseline, PipelineConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Name of the manifest written into output directories.
pub const MANIFEST_FILE: &str = "manifest.csv";

#[derive(Parser, Debug)]
#[command(name = "markerlens", version, about = "Marker-based arm angle estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct Engine {
    /// Classical pipeline configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Trained model file.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render synthetic batches (sharp and motion-blurred) with exact labels.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        per_angle: usize,
        #[arg(long, default_value_t = 4)]
        batches: u32,
        /// Motion-blur sweep in degrees; 0 renders sharp frames only.
        #[arg(long, default_value_t = 20.0)]
        blur_sweep: f64,
        #[arg(long, default_value_t = 16)]
        k_sub: usize,
        #[arg(long, default_value_t = 256)]
        size: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also write train.csv and holdout.csv, holding out this batch
        /// together with its blurred twin.
        #[arg(long)]
        holdout: Option<u32>,
    },
    /// Label a directory of images with the classical pipeline.
    Label {
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        batch: u32,
    },
    /// Add a blurred, photometrically jittered twin of every sharp image.
    Augment {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        sigma_max: Option<f64>,
    },
    /// Pretrain (or randomly initialize) the extractor and fit the head.
    Train {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        val: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 30)]
        epochs: usize,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        batch_size: usize,
        #[arg(long, default_value = "adam")]
        optimizer: String,
        /// Skip pretraining and freeze a randomly initialized extractor.
        #[arg(long)]
        random_frozen: bool,
        /// Number of synthetic pretraining images.
        #[arg(long, default_value_t = 3000)]
        aux_count: usize,
        #[arg(long, default_value_t = 4)]
        pretrain_epochs: usize,
    },
    /// Estimate the angle of one image.
    Estimate {
        #[arg(long)]
        image: PathBuf,
        #[command(flatten)]
        engine: Engine,
    },
    /// Evaluate an estimator over a manifest and write a report.
    Eval {
        #[command(flatten)]
        engine: Engine,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value = "markdown")]
        format: String,
    },
    /// Compare per-image runtime of model and baseline.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
    },
    /// Check head gradients against central differences.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Runs with the process streams.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs with explicit output streams; `argv[0]` is the program name.
pub fn run_cli_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().ansi().to_string();
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{}", e.render());
                EXIT_OK
            } else {
                let _ = write!(err, "{}", strip_ansi(&rendered));
                EXIT_USAGE
            };
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(out, "error={}", e.tag());
            let _ = writeln!(err, "{e}");
            EXIT_DOMAIN
        }
    }
}

fn strip_ansi(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\u{1b}' {
            for d in chars.by_ref() {
                if d.is_ascii_alphabetic() {
                    break;
                }
            }
        } else {
            out.push(c);
        }
    }
    out
}

fn config_or_default(path: Option<&Path>) -> Result<PipelineConfig> {
    path.map_or_else(|| Ok(PipelineConfig::default()), PipelineConfig::load)
}

fn engine(e: &Engine) -> Result<Estimator> {
    match (&e.config, &e.model) {
        (Some(c), None) => Ok(Estimator::Baseline(PipelineConfig::load(c)?)),
        (None, Some(m)) => Estimator::model_from_path(m),
        _ => unreachable!("clap enforces exactly one engine"),
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Synth {
            out: dir,
            per_angle,
            batches,
            blur_sweep,
            k_sub,
            size,
            seed,
            holdout,
        } => {
            let m = synthesize(&dir, per_angle, batches, blur_sweep, k_sub, size, seed)?;
            let path = dir.join(MANIFEST_FILE);
            save_manifest(&m, &path)?;
            writeln!(out, "images={}", m.len())?;
            writeln!(out, "manifest={}", path.display())?;
            if let Some(b) = holdout {
                let (train, eval) = split_holdout(&m, b)?;
                save_manifest(&train, dir.join("train.csv"))?;
                save_manifest(&eval, dir.join("holdout.csv"))?;
                writeln!(out, "train={} holdout={}", train.len(), eval.len())?;
            }
        }
        Command::Label {
            images,
            config,
            out: path,
            batch,
        } => {
            let cfg = config_or_default(config.as_deref())?;
            let (m, summary) = auto_label(&images, &cfg, batch)?;
            save_manifest(&m, &path)?;
            writeln!(out, "labeled={}", summary.labeled)?;
            writeln!(out, "skipped={}", summary.skipped)?;
            writeln!(out, "manifest={}", path.display())?;
        }
        Command::Augment {
            manifest,
            out: dir,
            seed,
            sigma_max,
        } => {
            let m = load_manifest(&manifest)?;
            let mut ranges = AugmentRanges::default();
            if let Some(s) = sigma_max {
                ranges.sigma_max = s;
            }
            let aug = augment_manifest(&m, &dir, &ranges, seed)?;
            let path = dir.join(MANIFEST_FILE);
            save_manifest(&aug, &path)?;
            writeln!(out, "images={}", aug.len())?;
            writeln!(out, "manifest={}", path.display())?;
        }
        Command::Train {
            train: train_path,
            val,
            out: model_path,
            epochs,
            lr,
            seed,
            batch_size,
            optimizer,
            random_frozen,
            aux_count,
            pretrain_epochs,
        } => {
            let h = Hyperparams {
                learning_rate: lr,
                batch_size,
                epochs,
                optimizer: optimizer.parse::<OptimizerKind>()?,
                seed,
            };
            h.validate()?;
            let train_m = load_manifest(&train_path)?;
            let val_m = load_manifest(&val)?;
            let fe = if random_frozen {
                FeatureExtractor::random(seed).frozen()
            } else {
                writeln!(err, "pretraining extractor on {aux_count} synthetic images")?;
                let aux = auxiliary_set(aux_count, INPUT_SIDE, seed)?;
                let ph = Hyperparams {
                    epochs: pretrain_epochs,
                    ..h.clone()
                };
                let p = pretrain_images(&aux, 18, &ph)?;
                for (i, l) in p.epoch_losses.iter().enumerate() {
                    writeln!(out, "pretrain_epoch={i} loss={l:.6}")?;
                }
                p.extractor
            };
            let (model, report) = train(&fe, &train_m, &val_m, &h)?;
            for (i, (t, v)) in report.train_loss.iter().zip(&report.val_loss).enumerate() {
                writeln!(out, "epoch={i} train_loss={t:.8} val_loss={v:.8}")?;
            }
            save_model(&model, &model_path)?;
            writeln!(out, "head_widths={:?}", HEAD_WIDTHS)?;
            writeln!(out, "wall_time_s={:.3}", report.wall_time.as_secs_f64())?;
            writeln!(out, "model={}", model_path.display())?;
        }
        Command::Estimate { image, engine: e } => {
            let img = load_image(&image)?;
            let theta = match (&e.config, &e.model) {
                (Some(c), _) => run_baseline(&img, &PipelineConfig::load(c)?)?.theta_deg,
                (_, Some(m)) => crate::regressor::predict_angle(&load_model(m)?, &img).theta_deg,
                _ => unreachable!("clap enforces exactly one engine"),
            };
            writeln!(out, "theta_deg={theta:.4}")?;
        }
        Command::Eval {
            engine: e,
            manifest,
            report,
            format,
        } => {
            let fmt: ReportFormat = format.parse()?;
            let est = engine(&e)?;
            let m = load_manifest(&manifest)?;
            let r = evaluate(&est, &m)?;
            fs::write(&report, render_report(&r, fmt))?;
            for (name, s) in [("raw", &r.raw), ("blurry", &r.blurry), ("all", &r.all)] {
                writeln!(
                    out,
                    "{name}_n={} {name}_median={:.4} {name}_p90={:.4} {name}_fail_count={}",
                    s.n, s.median, s.p90, s.fail_count
                )?;
            }
            writeln!(out, "report={}", report.display())?;
        }
        Command::Bench {
            config,
            model,
            manifest,
            repeats,
        } => {
            let cfg = PipelineConfig::load(&config)?;
            let m = load_manifest(&manifest)?;
            let b = bench_runtime(&cfg, &model, &m, repeats)?;
            writeln!(out, "baseline_s_per_image={:.6}", b.first_per_image)?;
            writeln!(out, "model_s_per_image={:.6}", b.second_per_image)?;
            writeln!(out, "ratio={:.3} reference_ratio={REFERENCE_RUNTIME_RATIO}", b.ratio)?;
        }
        Command::Gradcheck { seed } => {
            let mut pass = true;
            for (name, widths) in [("toy", vec![4, 3, 3, 3]), ("full", HEAD_WIDTHS.to_vec())] {
                let (head, f, t) = random_case(&widths, seed)?;
                let r = grad_check(&head, &f, t, DEFAULT_EPS)?;
                pass &= r.passes(DEFAULT_TOLERANCE);
                writeln!(out, "{name}_max_rel_error={:.3e} {name}_max_abs_error={:.3e}", r.max_rel_error, r.max_abs_error)?;
            }
            writeln!(out, "pass={pass}")?;
        }
    }
    Ok(())
}

/// Renders `batches` capture conditions into `dir`, each sharp and (when
/// `blur_sweep > 0`) as a motion-blurred twin of the same scenes.
pub fn synthesize(
    dir: &Path,
    per_angle: usize,
    batches: u32,
    blur_sweep: f64,
    k_sub: usize,
    size: usize,
    seed: u64,
) -> Result<DatasetManifest> {
    if batches == 0 {
        return Err(Error::InvalidScene("need at least one batch".into()));
    }
    let mut entries = Vec::new();
    for b in 1..=batches {
        let mut spec = BatchSpec::new(b, standard_backgrounds(b), seed);
        spec.count_per_angle = per_angle;
        spec.img_size = size;
        entries.extend(generate_batch(&spec, dir)?.entries);
        if blur_sweep > 0.0 {
            spec.blur = Some(BlurSpec {
                sweep_deg: blur_sweep,
                k_sub,
            });
            entries.extend(generate_batch(&spec, dir)?.entries);
        }
    }
    Ok(DatasetManifest::new(dir, entries))
}
