use std::f64::consts::{FRAC_PI_2, TAU};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use halu_core::dataset::{read_scan_csv, Dataset};
use halu_core::model::{self, gradient_check_model, Autoencoder, AutoencoderConfig, TrainingMeta};
use halu_core::neuralcore::{gradient_check, GradCheckConfig, LayerKind};
use halu_core::optim::{AdamConfig, LossKind};
use halu_core::simulator::{generate_dataset, LaserSpec, SceneKind};
use halu_core::trainer::{
    emit_report, evaluate, run_ablation_with_progress, threads_from_env, train_with_log,
    AblationGrid, AblationSetup, ReportFormat, TrainConfig,
};

use crate::config::{announce, resolve};
use crate::error::{CliError, CliResult};
use crate::svg::PolarPlot;

#[derive(Parser, Debug)]
#[command(
    name = "halu",
    version,
    about = "Infer robot-to-obstacle distances from 2D laser scans"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate scenes and write paired laser / ground-truth scans.
    GenData(GenDataArgs),
    /// Train a model and write a checkpoint.
    Train(TrainArgs),
    /// Print the mean RMSLE of a checkpoint on a dataset.
    Eval(EvalArgs),
    /// Predict obstacle distances for every scan in a CSV file.
    Infer(InferArgs),
    /// Train every configuration of an ablation grid and report.
    Ablate(AblateArgs),
    /// Finite-difference check of every layer's backward pass.
    Gradcheck(GradcheckArgs),
    /// Draw a scan and an optional prediction as a polar SVG overlay.
    Plot(PlotArgs),
}

#[derive(Args, Debug)]
struct ConfigArg {
    /// JSON file whose keys override the flags (same schema as the printed config).
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Train(a) => train_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Infer(a) => infer(a),
        Command::Ablate(a) => ablate(a),
        Command::Gradcheck(a) => gradcheck(a),
        Command::Plot(a) => plot(a),
    }
}

fn parse_kind(s: &str) -> Result<SceneKind, String> {
    s.parse().map_err(|e: halu_core::Error| e.to_string())
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn load_dataset(path: &Path, max_range: f64) -> CliResult<Dataset> {
    if is_csv(path) {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::from(halu_core::Error::Io {
                path: path.into(),
                source: e,
            })
        })?;
        Ok(Dataset::from_csv(
            &text,
            max_range,
            &format!("imported from {}", path.display()),
            path,
        )?)
    } else {
        Ok(Dataset::load(path)?)
    }
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| {
        halu_core::Error::Io {
            path: path.into(),
            source: e,
        }
        .into()
    })
}

// gen-data

#[derive(Args, Debug)]
struct GenDataArgs {
    /// Number of pairs to generate.
    #[arg(long, default_value_t = 2000)]
    pairs: usize,
    /// Comma-separated scene kinds.
    #[arg(long, value_delimiter = ',', value_parser = parse_kind,
          default_value = "room,corridor,glass_room,table_room,mixed")]
    kinds: Vec<SceneKind>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 128)]
    n_rays: usize,
    /// Field of view in radians.
    #[arg(long, default_value_t = FRAC_PI_2)]
    fov: f64,
    #[arg(long, default_value_t = 30.0)]
    max_range: f64,
    /// Output file; a `.csv` extension writes CSV, anything else the binary format.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenDataConfig {
    command: String,
    pairs: usize,
    kinds: Vec<SceneKind>,
    seed: u64,
    n_rays: usize,
    fov: f64,
    max_range: f64,
    out: PathBuf,
}

fn gen_data(a: GenDataArgs) -> CliResult<()> {
    let cfg = resolve(
        GenDataConfig {
            command: "gen-data".into(),
            pairs: a.pairs,
            kinds: a.kinds,
            seed: a.seed,
            n_rays: a.n_rays,
            fov: a.fov,
            max_range: a.max_range,
            out: a.out,
        },
        a.config.config.as_deref(),
    )?;
    announce(&cfg);
    let spec = LaserSpec {
        n_rays: cfg.n_rays,
        fov: cfg.fov,
        max_range: cfg.max_range,
        ..LaserSpec::default()
    };
    let pairs = generate_dataset(cfg.pairs, &cfg.kinds, &spec, cfg.seed)?;
    let kinds: Vec<&str> = cfg.kinds.iter().map(|k| k.name()).collect();
    let note = format!(
        "simulated: {} pairs, kinds {}, seed {}, {} rays over {} rad",
        cfg.pairs,
        kinds.join("+"),
        cfg.seed,
        cfg.n_rays,
        cfg.fov
    );
    let mut ds = Dataset::new(cfg.n_rays, cfg.max_range, note);
    ds.pairs = pairs;
    if is_csv(&cfg.out) {
        write_text(&cfg.out, &ds.to_csv())?;
    } else {
        ds.save(&cfg.out)?;
    }
    println!(
        "{}",
        serde_json::json!({ "pairs": ds.len(), "out": cfg.out })
    );
    Ok(())
}

// train

#[derive(Args, Debug)]
struct TrainArgs {
    /// Training pairs (binary dataset or CSV).
    #[arg(long)]
    data: PathBuf,
    /// Optional held-out pairs evaluated after training.
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    out_checkpoint: PathBuf,
    /// Write the per-epoch JSON log here instead of stdout.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    /// Train for 2000 epochs.
    #[arg(long, conflicts_with = "epochs")]
    full_length: bool,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    /// Seeds shuffling and augmentation.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seeds weight initialization; defaults to --seed.
    #[arg(long)]
    model_seed: Option<u64>,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    /// Gaussian noise (meters) added to laser scans.
    #[arg(long, default_value_t = 0.02)]
    noise_sigma: f64,
    #[arg(long)]
    no_flip: bool,
    #[arg(long)]
    no_shuffle: bool,
    #[arg(long)]
    no_skip: bool,
    #[arg(long, default_value_t = 2.0)]
    gamma: f64,
    #[arg(long, default_value = "rmsle", value_parser = ["rmsle", "mse"])]
    loss: String,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainRunConfig {
    command: String,
    data: PathBuf,
    test: Option<PathBuf>,
    out_checkpoint: PathBuf,
    log: Option<PathBuf>,
    model_seed: u64,
    model: AutoencoderConfig,
    train: TrainConfig,
}

fn train_cmd(a: TrainArgs) -> CliResult<()> {
    let cfg = resolve(
        TrainRunConfig {
            command: "train".into(),
            data: a.data,
            test: a.test,
            out_checkpoint: a.out_checkpoint,
            log: a.log,
            model_seed: a.model_seed.unwrap_or(a.seed),
            model: AutoencoderConfig {
                skip_connections: !a.no_skip,
                gamma: a.gamma,
                ..AutoencoderConfig::default()
            },
            train: TrainConfig {
                epochs: if a.full_length {
                    TrainConfig::full_length().epochs
                } else {
                    a.epochs
                },
                batch_size: a.batch_size,
                seed: a.seed,
                adam: AdamConfig {
                    learning_rate: a.lr,
                    ..AdamConfig::default()
                },
                noise_sigma: a.noise_sigma,
                flip: !a.no_flip,
                shuffle: !a.no_shuffle,
                loss: if a.loss == "mse" {
                    LossKind::Mse
                } else {
                    LossKind::Rmsle
                },
            },
        },
        a.config.config.as_deref(),
    )?;
    announce(&cfg);
    cfg.model.validate()?;
    cfg.train.validate()?;
    let data = load_dataset(&cfg.data, cfg.model.max_range)?;
    let test = cfg
        .test
        .as_deref()
        .map(|p| load_dataset(p, cfg.model.max_range))
        .transpose()?;
    if let Some(t) = &test {
        t.check_compatible(cfg.model.n_points, cfg.model.max_range)?;
    }
    let mut model = Autoencoder::build(cfg.model.clone(), cfg.model_seed)?;
    let mut sink: Box<dyn Write> = match &cfg.log {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            CliError::from(halu_core::Error::Io {
                path: p.clone(),
                source: e,
            })
        })?)),
        None => Box::new(std::io::stdout()),
    };
    let history = train_with_log(&mut model, &data, &cfg.train, |log| {
        let _ = writeln!(
            sink,
            "{}",
            serde_json::to_string(log).expect("log serializes")
        );
    })?;
    sink.flush().ok();
    drop(sink);
    let meta = TrainingMeta::from_history(cfg.train.epochs as u64, cfg.train.seed, &history.losses);
    model::save(&model, &meta, &cfg.out_checkpoint)?;
    let test_rmsle = test.as_ref().map(|t| evaluate(&model, t)).transpose()?;
    println!(
        "{}",
        serde_json::json!({
            "final_train_loss": history.losses.last(),
            "steps": history.steps,
            "test_rmsle": test_rmsle,
            "checkpoint": cfg.out_checkpoint,
        })
    );
    Ok(())
}

// eval

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalConfig {
    command: String,
    checkpoint: PathBuf,
    data: PathBuf,
}

fn eval_cmd(a: EvalArgs) -> CliResult<()> {
    let cfg = resolve(
        EvalConfig {
            command: "eval".into(),
            checkpoint: a.checkpoint,
            data: a.data,
        },
        a.config.config.as_deref(),
    )?;
    announce(&cfg);
    let (model, _) = model::load(&cfg.checkpoint)?;
    let data = load_dataset(&cfg.data, model.config().max_range)?;
    data.check_compatible(model.config().n_points, model.config().max_range)?;
    let score = evaluate(&model, &data)?;
    println!(
        "{}",
        serde_json::json!({ "mean_rmsle": score, "pairs": data.len() })
    );
    Ok(())
}

// infer

#[derive(Args, Debug)]
struct InferArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// One scan per row, comma separated, in meters.
    #[arg(long)]
    scan_csv: PathBuf,
    /// Run scans of any length window by window.
    #[arg(long)]
    chunked: bool,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InferConfig {
    command: String,
    checkpoint: PathBuf,
    scan_csv: PathBuf,
    chunked: bool,
    out: Option<PathBuf>,
}

fn infer(a: InferArgs) -> CliResult<()> {
    let cfg = resolve(
        InferConfig {
            command: "infer".into(),
            checkpoint: a.checkpoint,
            scan_csv: a.scan_csv,
            chunked: a.chunked,
            out: a.out,
        },
        a.config.config.as_deref(),
    )?;
    announce(&cfg);
    let (model, _) = model::load(&cfg.checkpoint)?;
    let scans = read_scan_csv(&cfg.scan_csv)?;
    let n = model.config().n_points;
    let mut rows = Vec::with_capacity(scans.len());
    for (i, scan) in scans.iter().enumerate() {
        let pred = if cfg.chunked {
            model.infer_chunked(scan)
        } else if scan.len() != n {
            return Err(CliError::Data(format!(
                "{}: row {} has {} readings, the model expects {n} (use --chunked for other lengths)",
                cfg.scan_csv.display(),
                i + 1,
                scan.len()
            )));
        } else {
            model.predict_scan(scan)
        };
        rows.push(pred.map_err(|e| {
            CliError::Data(format!("{}: row {}: {e}", cfg.scan_csv.display(), i + 1))
        })?);
    }
    let text: String = rows
        .iter()
        .map(|r| r.iter().map(f64::to_string).collect::<Vec<_>>().join(",") + "\n")
        .collect();
    match &cfg.out {
        Some(p) => write_text(p, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

// ablate

#[derive(Args, Debug)]
struct AblateArgs {
    /// JSON grid file; the built-in seven-row grid when omitted.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Base seed; repeat r uses seed + r.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "markdown", value_parser = ["markdown", "md", "csv", "json"])]
    report_format: String,
    /// Training pairs; simulated when omitted.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Test pairs; simulated when omitted.
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    train_pairs: usize,
    #[arg(long, default_value_t = 500)]
    test_pairs: usize,
    /// Seed of the simulated datasets (test data uses seed + 1).
    #[arg(long, default_value_t = 1000)]
    data_seed: u64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    /// Worker threads; defaults to HALU_THREADS or the core count.
    #[arg(long)]
    threads: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AblateConfig {
    command: String,
    grid: AblationGrid,
    seed: u64,
    report_format: ReportFormat,
    data: Option<PathBuf>,
    test: Option<PathBuf>,
    train_pairs: usize,
    test_pairs: usize,
    data_seed: u64,
    threads: usize,
    out: Option<PathBuf>,
    model: AutoencoderConfig,
    train: TrainConfig,
}

fn ablate(a: AblateArgs) -> CliResult<()> {
    let mut grid = match &a.grid {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| {
                CliError::from(halu_core::Error::Io {
                    path: p.clone(),
                    source: e,
                })
            })?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Data(format!("{}: invalid grid: {e}", p.display())))?
        }
        None => AblationGrid::reference_grid(),
    };
    if let Some(r) = a.repeats {
        grid.repeats = r;
    }
    let cfg = resolve(
        AblateConfig {
            command: "ablate".into(),
            grid,
            seed: a.seed,
            report_format: a.report_format.parse()?,
            data: a.data,
            test: a.test,
            train_pairs: a.train_pairs,
            test_pairs: a.test_pairs,
            data_seed: a.data_seed,
            threads: a.threads.unwrap_or_else(threads_from_env),
            out: a.out,
            model: AutoencoderConfig::default(),
            train: TrainConfig {
                epochs: a.epochs,
                batch_size: a.batch_size,
                ..TrainConfig::default()
            },
        },
        a.config.config.as_deref(),
    )?;
    announce(&cfg);
    cfg.grid.validate()?;
    let spec = LaserSpec {
        n_rays: cfg.model.n_points,
        max_range: cfg.model.max_range,
        ..LaserSpec::default()
    };
    let dataset = |path: &Option<PathBuf>, n: usize, seed: u64| -> CliResult<Dataset> {
        match path {
            Some(p) => load_dataset(p, cfg.model.max_range),
            None => {
                let mut ds = Dataset::new(
                    spec.n_rays,
                    spec.max_range,
                    format!("simulated, seed {seed}"),
                );
                ds.pairs = generate_dataset(n, &SceneKind::ALL, &spec, seed)?;
                Ok(ds)
            }
        }
    };
    let train_set = dataset(&cfg.data, cfg.train_pairs, cfg.data_seed)?;
    let test_set = dataset(&cfg.test, cfg.test_pairs, cfg.data_seed + 1)?;
    let setup = AblationSetup {
        model: cfg.model.clone(),
        train: cfg.train.clone(),
        threads: cfg.threads,
    };
    let report =
        run_ablation_with_progress(&cfg.grid, &setup, &train_set, &test_set, cfg.seed, |r| {
            let res = r
                .result
                .as_ref()
                .map_or_else(|e| format!("failed: {e}"), |v| format!("{v:.6}"));
            eprintln!(
                "n. {} repeat {} seed {}: {res} ({:.1} s)",
                r.config, r.repeat, r.seed, r.seconds
            );
        })?;
    let text = emit_report(&report, cfg.report_format);
    match &cfg.out {
        Some(p) => write_text(p, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

// gradcheck

#[derive(Args, Debug)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    #[arg(long, default_value_t = 1e-5)]
    step: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GradcheckConfig {
    command: String,
    check: GradCheckConfig,
}

fn gradcheck(a: GradcheckArgs) -> CliResult<()> {
    let cfg = resolve(
        GradcheckConfig {
            command: "gradcheck".into(),
            check: GradCheckConfig {
                trials: a.trials,
                step: a.step,
                tolerance: a.tolerance,
                seed: a.seed,
            },
        },
        a.config.config.as_deref(),
    )?;
    announce(&cfg);
    let c = &cfg.check;
    if c.trials == 0 || !(c.step > 0.0) || !(c.tolerance > 0.0) {
        return Err(CliError::Usage(
            "trials, step and tolerance must be positive".into(),
        ));
    }
    let mut reports = LayerKind::ALL
        .into_iter()
        .map(|k| gradient_check(k, c))
        .collect::<Result<Vec<_>, _>>()?;
    reports.push(gradient_check_model(c)?);
    let mut failed = Vec::new();
    for r in &reports {
        let status = if r.passed() { "ok" } else { "FAILED" };
        println!(
            "{:<12} worst relative error {:.3e}  {status}",
            r.subject,
            r.worst()
        );
        if !r.passed() {
            failed.push(r.subject.clone());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "gradient check above tolerance {} for {}",
            c.tolerance,
            failed.join(", ")
        )))
    }
}

// plot

#[derive(Args, Debug)]
struct PlotArgs {
    #[arg(long)]
    scan_csv: PathBuf,
    #[arg(long)]
    pred_csv: Option<PathBuf>,
    #[arg(long)]
    out_svg: PathBuf,
    /// Which row of the CSV files to draw (0-based).
    #[arg(long, default_value_t = 0)]
    row: usize,
    /// Field of view in radians; use 6.283185307179586 for a full circle.
    #[arg(long, default_value_t = FRAC_PI_2)]
    fov: f64,
    #[arg(long, default_value_t = 30.0)]
    max_range: f64,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlotConfig {
    command: String,
    scan_csv: PathBuf,
    pred_csv: Option<PathBuf>,
    out_svg: PathBuf,
    row: usize,
    fov: f64,
    max_range: f64,
}

fn pick_row(path: &Path, row: usize) -> CliResult<Vec<f64>> {
    let mut rows = read_scan_csv(path)?;
    if row >= rows.len() {
        return Err(CliError::Data(format!(
            "{}: row {row} requested but the file has {} rows",
            path.display(),
            rows.len()
        )));
    }
    Ok(rows.swap_remove(row))
}

fn plot(a: PlotArgs) -> CliResult<()> {
    let cfg = resolve(
        PlotConfig {
            command: "plot".into(),
            scan_csv: a.scan_csv,
            pred_csv: a.pred_csv,
            out_svg: a.out_svg,
            row: a.row,
            fov: a.fov,
            max_range: a.max_range,
        },
        a.config.config.as_deref(),
    )?;
    announce(&cfg);
    if !(cfg.fov > 0.0 && cfg.fov <= TAU + 1e-12) || !(cfg.max_range > 0.0) {
        return Err(CliError::Usage(
            "fov must be in (0, 2π] and max range positive".into(),
        ));
    }
    let laser = pick_row(&cfg.scan_csv, cfg.row)?;
    let pred = cfg
        .pred_csv
        .as_deref()
        .map(|p| pick_row(p, cfg.row))
        .transpose()?;
    if let Some(p) = &pred {
        if p.len() != laser.len() {
            return Err(CliError::Data(format!(
                "scan has {} readings but prediction has {}",
                laser.len(),
                p.len()
            )));
        }
    }
    let svg = PolarPlot {
        laser: &laser,
        prediction: pred.as_deref(),
        fov: cfg.fov,
        max_range: cfg.max_range,
    }
    .render();
    write_text(&cfg.out_svg, &svg)
}
