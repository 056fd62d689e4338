//! Command-line front end. Reports go to stdout as JSON (or flattened to
//! text/CSV); experiments also write a directory under the output root.
//!
//! Exit codes: 0 success, 1 bad input or usage, 2 runtime or numerical
//! failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bounds::{bound_report, BoundConfig};
use crate::cover::{cover_report, empirical_separation_gap, h_curve, nn_distances, HCurve};
use crate::dataset::{
    gp_binary_split, load_csv_dataset, load_csv_pair, synth_1d, synth_2d, LabeledDataset,
};
use crate::error::{Error, Result};
use crate::harness::{
    create_dir, fit_cc_error_line, gp_two_class_split, reference_table_points, run_datasize,
    run_depth_width, run_random_label_cc, run_table_onedim, run_trace, run_trace_on,
    trace_datasets, CcPoint, DatasizeConfig, DepthWidthConfig, HighDimSource, RandomCcConfig,
    TableConfig, TraceConfig, TraceProblem,
};
use crate::harness::{write_csv, write_json};
use crate::mlp::{
    lipschitz_product, load_checkpoint, losses, save_checkpoint, train, Control, Mlp,
    TrainConfig,
};
use crate::smoothness::{delta_f_grid, delta_spectral, epsilon_from_loss, Grid, LossKind};

/// Environment variable naming the default output root.
pub const OUT_DIR_ENV: &str = "COVBOUND_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "covbound", version, about = "Cover-based accuracy bounds for classifiers")]
struct Cli {
    /// Report format on stdout.
    #[arg(long, value_enum, global = true, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Total cover, class covers and cover complexity of a train/test pair.
    Cover(CoverArgs),
    /// Empirical separation gap of a training set.
    Sepgap(SepgapArgs),
    /// Train a network and save a checkpoint with its loss log.
    Train(TrainArgs),
    /// Smoothness estimate of a checkpoint on its training data.
    Smoothness(SmoothnessArgs),
    /// Accuracy lower bound of a checkpoint with the measured accuracies.
    Bound(BoundArgs),
    /// Run a seeded experiment and write its output directory.
    Experiment(ExperimentArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Generator {
    /// Two separated intervals on [0,1] (`--n` train points, `--n-test` test points).
    Synth1d,
    /// Disk and outer region on a grid (`--n` points per axis, `--n-test` test points per axis).
    Synth2d,
    /// Two-class GP labels on [0,1].
    GpBinary,
}

/// Dataset source: CSV files or a generator, not both.
#[derive(Args, Debug)]
struct DataArgs {
    /// Training CSV (`x1,...,xd,label`).
    #[arg(long, conflicts_with = "generator")]
    train: Option<PathBuf>,
    /// Test CSV, normalized with the training statistics.
    #[arg(long, requires = "train")]
    test: Option<PathBuf>,
    /// Number of classes K for CSV input.
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long, value_enum)]
    generator: Option<Generator>,
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    n_test: usize,
    /// Separation gap of the synthetic problems.
    #[arg(long, default_value_t = 0.1)]
    gap: f64,
    /// GP kernel length scale.
    #[arg(long, default_value_t = 0.2)]
    length_scale: f64,
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
}

struct Loaded {
    train: LabeledDataset,
    test: Option<LabeledDataset>,
    /// Known separation gap of a generated problem.
    delta0: Option<f64>,
}

impl DataArgs {
    fn load(&self) -> Result<Loaded> {
        if let Some(train) = &self.train {
            let k = self
                .classes
                .ok_or_else(|| Error::validation("--classes is required with --train"))?;
            return Ok(match &self.test {
                Some(test) => {
                    let (tr, te) = load_csv_pair(train, test, k)?;
                    Loaded {
                        train: tr,
                        test: Some(te),
                        delta0: None,
                    }
                }
                None => Loaded {
                    train: load_csv_dataset(train, k)?,
                    test: None,
                    delta0: None,
                },
            });
        }
        let (train, test, delta0) = match self.generator {
            Some(Generator::Synth1d) => {
                let (a, b) = synth_1d(self.n, self.gap, self.n_test)?;
                (a, b, Some(self.gap))
            }
            Some(Generator::Synth2d) => {
                let (a, b) = synth_2d(self.n, self.gap, self.n_test)?;
                (a, b, Some(self.gap))
            }
            Some(Generator::GpBinary) => {
                let (a, b) = gp_binary_split(self.n, self.n_test, self.length_scale, self.data_seed)?;
                (a, b, None)
            }
            None => {
                return Err(Error::validation(
                    "a dataset is required: pass --train (and --test) or --generator",
                ))
            }
        };
        Ok(Loaded {
            train,
            test: Some(test),
            delta0,
        })
    }

    fn load_pair(&self) -> Result<(LabeledDataset, LabeledDataset, Option<f64>)> {
        let l = self.load()?;
        let test = l
            .test
            .ok_or_else(|| Error::validation("--test is required for this command"))?;
        Ok((l.train, test, l.delta0))
    }
}

#[derive(Args, Debug)]
struct CoverArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Also write the h-curve (`r,h`) at this many uniform radii to CSV.
    #[arg(long)]
    h_curve: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    h_points: usize,
}

#[derive(Args, Debug)]
struct SepgapArgs {
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "30,30")]
    hidden: Vec<usize>,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    /// Minibatch size; 0 trains on the full batch.
    #[arg(long, default_value_t = 0)]
    batch_size: usize,
    /// Loss log period in iterations.
    #[arg(long, default_value_t = 10)]
    eval_interval: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for `checkpoint.json` and `loss.csv`.
    #[arg(long, env = OUT_DIR_ENV, default_value = "covbound-out")]
    out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Estimator {
    /// Grid search in one or two dimensions, spectral surrogate otherwise.
    Auto,
    Grid,
    Spectral,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum LossArg {
    Max,
    Mean,
}

#[derive(Args, Debug)]
struct SmoothnessArgs {
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0.5)]
    c: f64,
    /// Training loss entering `e^{-L} - c`.
    #[arg(long, value_enum, default_value_t = LossArg::Max)]
    loss: LossArg,
    #[arg(long, value_enum, default_value_t = Estimator::Auto)]
    estimator: Estimator,
    /// Grid points per axis (default 10001 in 1D, 250 in 2D).
    #[arg(long)]
    resolution: Option<usize>,
}

#[derive(Args, Debug)]
struct BoundArgs {
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0.5)]
    c: f64,
    /// Known separation gap; generated problems supply their own.
    #[arg(long)]
    delta0: Option<f64>,
    /// Grid points per axis (default 10001 in 1D, 250 in 2D).
    #[arg(long)]
    resolution: Option<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ExperimentKind {
    #[value(name = "table-1d")]
    Table1d,
    Trace,
    DepthWidth,
    Datasize,
    RandomCc,
    CcFit,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ProblemArg {
    #[value(name = "1d")]
    OneD,
    #[value(name = "2d")]
    TwoD,
    Highdim,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(value_enum)]
    kind: ExperimentKind,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Repetitions (default 50 for depth-width, datasize and random-cc).
    #[arg(long)]
    reps: Option<usize>,
    /// Learning rate (default 3e-4 for table-1d; 1e-3 for traces; 1e-2 for sweeps).
    #[arg(long)]
    lr: Option<f64>,
    /// Training iterations (default 1000 for table-1d and 1d traces, 2000
    /// for 2d, 3000 for highdim, at most 10000 for sweeps).
    #[arg(long)]
    iterations: Option<usize>,
    /// Trace problem.
    #[arg(long, value_enum, default_value_t = ProblemArg::OneD)]
    problem: ProblemArg,
    /// Evaluation period in iterations.
    #[arg(long, default_value_t = 10)]
    eval_interval: usize,
    /// Grid points per axis for delta_f (default 10001 in 1D traces and the
    /// table, 250 in 2D, 2001 in sweeps).
    #[arg(long)]
    resolution: Option<usize>,
    /// Early-stop patience for traces (off by default).
    #[arg(long)]
    patience: Option<usize>,
    /// IDX files for the highdim trace: train images, train labels, test
    /// images, test labels. Without them a 16-dimensional GP problem is used.
    #[arg(long, num_args = 4, value_names = ["TRAIN_IMAGES", "TRAIN_LABELS", "TEST_IMAGES", "TEST_LABELS"])]
    idx: Option<Vec<PathBuf>>,
    /// Subsample size of each IDX set.
    #[arg(long, default_value_t = 1000)]
    idx_samples: usize,
    /// CSV of `cc,error,K` rows for cc-fit; defaults to the built-in table.
    #[arg(long)]
    points: Option<PathBuf>,
    /// Fit raw errors instead of errors divided by sqrt(K).
    #[arg(long)]
    no_normalize: bool,
    /// Train/test sizes and length scale of the random-cc GP problem.
    #[arg(long, default_value_t = 500)]
    cc_n: usize,
    #[arg(long, default_value_t = 0.2)]
    cc_length_scale: f64,
    /// Output root; the experiment writes `<out>/<experiment>`.
    #[arg(long, env = OUT_DIR_ENV, default_value = "covbound-out")]
    out: PathBuf,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let mut stdout = std::io::stdout().lock();
    match run(&cli, &mut stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() || is_missing_input(&e) {
                1
            } else {
                2
            }
        }
    }
}

fn is_missing_input(e: &Error) -> bool {
    use std::io::ErrorKind;
    matches!(e, Error::Io { source, .. }
        if matches!(source.kind(), ErrorKind::NotFound | ErrorKind::PermissionDenied))
}

fn emit<T: Serialize>(out: &mut dyn Write, format: Format, value: &T) -> Result<()> {
    let v = serde_json::to_value(value)?;
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&v)? + "\n",
        Format::Text => flatten(&v)
            .into_iter()
            .map(|(k, v)| format!("{k}: {v}\n"))
            .collect(),
        Format::Csv => std::iter::once("key,value\n".to_string())
            .chain(flatten(&v).into_iter().map(|(k, v)| format!("{k},{v}\n")))
            .collect(),
    };
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

/// Flattens JSON into `(dotted.path, scalar)` pairs, so text output carries
/// exactly the numbers of the JSON report.
fn flatten(v: &Value) -> Vec<(String, String)> {
    fn walk(prefix: String, v: &Value, out: &mut Vec<(String, String)>) {
        let join = |k: &str| {
            if prefix.is_empty() {
                k.to_string()
            } else {
                format!("{prefix}.{k}")
            }
        };
        match v {
            Value::Object(m) => m.iter().for_each(|(k, v)| walk(join(k), v, out)),
            Value::Array(a) => a
                .iter()
                .enumerate()
                .for_each(|(i, v)| walk(join(&i.to_string()), v, out)),
            Value::String(s) => out.push((prefix, s.clone())),
            other => out.push((prefix, other.to_string())),
        }
    }
    let mut out = Vec::new();
    walk(String::new(), v, &mut out);
    out
}

fn require<'a, T>(v: &'a Option<T>, flag: &str) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| Error::validation(format!("missing required flag {flag}")))
}

fn grid_for(dim: usize, resolution: Option<usize>) -> Result<Option<Grid>> {
    match (dim, resolution) {
        (1 | 2, Some(r)) => Ok(Some(Grid::new(dim, r)?)),
        (1, None) => Ok(Some(Grid::DEFAULT_1D)),
        (2, None) => Ok(Some(Grid::DEFAULT_2D)),
        (_, Some(_)) => Err(Error::validation("grid search needs one or two dimensions")),
        _ => Ok(None),
    }
}

fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Cover(a) => {
            let (train, test, _) = a.data.load_pair()?;
            let report = cover_report(&train, &test)?;
            if let Some(path) = &a.h_curve {
                let measure = test.single_label_part()?;
                let d = nn_distances(train.points(), measure.points(), train.dim())?;
                h_curve(&d, train.dim(), &HCurve::uniform_radii(train.dim(), a.h_points))?
                    .write_csv(path)?;
            }
            emit(out, cli.format, &report)
        }
        Command::Sepgap(a) => {
            let l = a.data.load()?;
            let gap = empirical_separation_gap(&l.train)?;
            emit(
                out,
                cli.format,
                &json!({
                    "schema_version": crate::SCHEMA_VERSION,
                    "delta_T": gap,
                    "n": l.train.len(),
                    "d": l.train.dim(),
                    "K": l.train.classes(),
                }),
            )
        }
        Command::Train(a) => cmd_train(a, cli.format, out),
        Command::Smoothness(a) => cmd_smoothness(a, cli.format, out),
        Command::Bound(a) => {
            let ckpt = require(&a.checkpoint, "--checkpoint")?;
            let net = load_checkpoint(ckpt)?;
            let (train, test, delta0) = a.data.load_pair()?;
            let cfg = BoundConfig {
                c: a.c,
                delta0: a.delta0.or(delta0),
                grid: grid_for(train.dim(), a.resolution)?,
            };
            emit(out, cli.format, &bound_report(&net, &train, &test, &cfg)?)
        }
        Command::Experiment(a) => cmd_experiment(a, cli.format, out),
    }
}

fn cmd_train(a: &TrainArgs, format: Format, out: &mut dyn Write) -> Result<()> {
    let l = a.data.load()?;
    let mut sizes = vec![l.train.dim()];
    sizes.extend(&a.hidden);
    sizes.push(l.train.classes());
    let mut net = Mlp::new(&sizes, a.seed)?;
    let cfg = TrainConfig {
        learning_rate: a.lr,
        iterations: a.iterations,
        batch_size: a.batch_size,
        eval_interval: a.eval_interval,
        seed: a.seed,
        ..TrainConfig::default()
    };
    let mut log = Vec::new();
    let train_set = &l.train;
    let outcome = train(&mut net, train_set, &cfg, |it, net| {
        let s = losses(net, train_set)?;
        log.push(vec![it.to_string(), s.mean.to_string(), s.max.to_string()]);
        Ok(Control::Continue)
    })?;
    let final_loss = losses(&net, train_set)?;
    create_dir(&a.out)?;
    let ckpt = a.out.join("checkpoint.json");
    save_checkpoint(&net, &ckpt)?;
    write_csv(&a.out, "loss.csv", &["iteration", "loss_mean", "loss_max"], &log)?;
    emit(
        out,
        format,
        &json!({
            "schema_version": crate::SCHEMA_VERSION,
            "checkpoint": ckpt,
            "sizes": sizes,
            "config": cfg,
            "iterations_run": outcome.iterations_run,
            "loss_mean": final_loss.mean,
            "loss_max": final_loss.max,
        }),
    )
}

fn cmd_smoothness(a: &SmoothnessArgs, format: Format, out: &mut dyn Write) -> Result<()> {
    let ckpt = require(&a.checkpoint, "--checkpoint")?;
    let net = load_checkpoint(ckpt)?;
    let l = a.data.load()?;
    let s = losses(&net, &l.train)?;
    let (kind, loss) = match a.loss {
        LossArg::Max => (LossKind::Max, s.max),
        LossArg::Mean => (LossKind::Mean, s.mean),
    };
    let eps = epsilon_from_loss(loss, a.c);
    let dim = l.train.dim();
    let use_grid = match a.estimator {
        Estimator::Grid => true,
        Estimator::Spectral => false,
        Estimator::Auto => dim <= 2,
    };
    let mut report = json!({
        "schema_version": crate::SCHEMA_VERSION,
        "c": a.c,
        "loss_kind": kind,
        "loss": loss,
        "epsilon": eps,
        "defined": eps > 0.0,
    });
    if use_grid {
        let grid = grid_for(dim, a.resolution)?.ok_or_else(|| {
            Error::validation("grid search needs one or two dimensions; use --estimator spectral")
        })?;
        report["estimator"] = json!("grid");
        report["grid_spacing"] = json!(grid.spacing());
        report["delta_f"] = if eps > 0.0 {
            json!(delta_f_grid(&net, &grid, eps)?)
        } else {
            Value::Null
        };
    } else {
        let lip = lipschitz_product(&net)?;
        report["estimator"] = json!("spectral");
        report["lipschitz_product"] = json!(lip);
        report["delta_f"] = if eps > 0.0 {
            json!(delta_spectral(lip, loss, a.c)?)
        } else {
            Value::Null
        };
    }
    emit(out, format, &report)
}

fn cc_points_from_csv(path: &Path) -> Result<Vec<CcPoint>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Format {
            path: path.into(),
            message: e.to_string(),
        })?;
    let mut points = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        let parsed = (
            rec.get(0).and_then(|s| s.parse::<f64>().ok()),
            rec.get(1).and_then(|s| s.parse::<f64>().ok()),
            rec.get(2).and_then(|s| s.parse::<usize>().ok()),
        );
        match parsed {
            (Some(cc), Some(error), Some(k)) if rec.len() == 3 => {
                points.push(CcPoint { cc, error, k })
            }
            // header
            _ if i == 0 => {}
            _ => {
                return Err(Error::Parse {
                    line: i + 1,
                    message: "expected cc,error,K".into(),
                })
            }
        }
    }
    Ok(points)
}

fn cmd_experiment(a: &ExperimentArgs, format: Format, out: &mut dyn Write) -> Result<()> {
    match a.kind {
        ExperimentKind::Table1d => {
            let mut cfg = TableConfig {
                seed: a.seed,
                ..TableConfig::default()
            };
            if let Some(lr) = a.lr {
                cfg.train.learning_rate = lr;
            }
            if let Some(it) = a.iterations {
                cfg.train.iterations = it;
            }
            if let Some(r) = a.resolution {
                cfg.grid = Grid::new(1, r)?;
            }
            let report = run_table_onedim(&cfg)?;
            report.write(&a.out.join("table-1d"))?;
            emit(out, format, &report)
        }
        ExperimentKind::Trace => {
            let problem = match a.problem {
                ProblemArg::OneD => TraceProblem::one_d(),
                ProblemArg::TwoD => TraceProblem::two_d(),
                ProblemArg::Highdim => match &a.idx {
                    Some(p) => TraceProblem::HighDim {
                        source: HighDimSource::Idx {
                            train_images: p[0].clone(),
                            train_labels: p[1].clone(),
                            test_images: p[2].clone(),
                            test_labels: p[3].clone(),
                            n_train: a.idx_samples,
                            n_test: a.idx_samples,
                        },
                    },
                    None => TraceProblem::high_dim(),
                },
            };
            let mut cfg = TraceConfig::for_problem(problem, a.seed);
            if let Some(lr) = a.lr {
                cfg.train.learning_rate = lr;
            }
            if let Some(it) = a.iterations {
                cfg.train.iterations = it;
            }
            cfg.train.eval_interval = a.eval_interval;
            cfg.patience = a.patience;
            if let Some(r) = a.resolution {
                let dim = match a.problem {
                    ProblemArg::OneD => 1,
                    ProblemArg::TwoD => 2,
                    ProblemArg::Highdim => {
                        return Err(Error::validation("--resolution applies to 1d and 2d traces"))
                    }
                };
                cfg.grid = Some(Grid::new(dim, r)?);
            }
            let trace = match a.problem {
                ProblemArg::Highdim => {
                    let (tr, te, d0) = trace_datasets(&cfg.problem, a.seed)?;
                    run_trace_on(&cfg, &tr, &te, d0)?
                }
                _ => run_trace(&cfg)?,
            };
            trace.write(&a.out.join("trace"))?;
            emit(out, format, &trace)
        }
        ExperimentKind::DepthWidth | ExperimentKind::Datasize => {
            let mut dw = DepthWidthConfig::default();
            let mut ds = DatasizeConfig::default();
            for s in [&mut dw.settings, &mut ds.settings] {
                s.seed = a.seed;
                if let Some(r) = a.reps {
                    s.reps = r;
                }
                if let Some(lr) = a.lr {
                    s.train.learning_rate = lr;
                }
                if let Some(it) = a.iterations {
                    s.train.iterations = it;
                }
                s.train.eval_interval = a.eval_interval;
                if let Some(r) = a.resolution {
                    s.grid = Grid::new(1, r)?;
                }
            }
            let (summary, name) = if a.kind == ExperimentKind::DepthWidth {
                (run_depth_width(&dw)?, "depth-width")
            } else {
                (run_datasize(&ds)?, "datasize")
            };
            summary.write(&a.out.join(name))?;
            emit(out, format, &summary)
        }
        ExperimentKind::RandomCc => {
            let (tr, te, redraws) = gp_two_class_split(a.cc_n, a.cc_n, a.cc_length_scale, a.seed)?;
            let cfg = RandomCcConfig {
                reps: a.reps.unwrap_or(50),
                seed: a.seed,
                ..RandomCcConfig::default()
            };
            let report = run_random_label_cc(&tr, &te, &cfg)?;
            let dir = a.out.join("random-cc");
            report.write(&dir)?;
            let params = json!({
                "config": cfg,
                "n_train": a.cc_n,
                "n_test": a.cc_n,
                "length_scale": a.cc_length_scale,
                "redraws": redraws,
            });
            write_json(&dir, "config.json", &params)?;
            emit(out, format, &report)
        }
        ExperimentKind::CcFit => {
            let points = match &a.points {
                Some(p) => cc_points_from_csv(p)?,
                None => reference_table_points(),
            };
            let fit = fit_cc_error_line(&points, !a.no_normalize)?;
            let dir = a.out.join("cc-fit");
            let summary = json!({
                "schema_version": crate::SCHEMA_VERSION,
                "fit": fit,
                "points": points,
            });
            create_dir(&dir)?;
            write_json(&dir, "config.json", &json!({
                "points": a.points,
                "normalize": !a.no_normalize,
            }))?;
            write_json(&dir, "summary.json", &summary)?;
            let rows: Vec<Vec<String>> = points
                .iter()
                .map(|p| {
                    let y = if a.no_normalize { p.error } else { p.error / (p.k as f64).sqrt() };
                    vec![p.cc.to_string(), y.to_string(), (fit.slope * p.cc).to_string()]
                })
                .collect();
            write_csv(&dir, "table.csv", &["cc", "error", "fitted"], &rows)?;
            emit(out, format, &summary)
        }
    }
}
