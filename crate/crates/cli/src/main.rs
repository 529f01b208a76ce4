//! `bellml`: generate datasets, train and evaluate entanglement classifiers,
//! and run the four experiments end to end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bellml_core::harness::{self, run, Experiment, ExperimentConfig, ExperimentData};
use bellml_core::metrics::{fmt_num, MetricsReport};
use bellml_core::{Error, FeatureScheme, MlpModel, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bellml",
    version,
    about = "Entanglement classification from local measurements"
)]
struct Cli {
    /// Root directory for generated artifacts.
    #[arg(long, global = true, env = "BELLML_OUT", default_value = "bellml-out")]
    out_root: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate train and test sets for an experiment.
    GenData {
        #[arg(long)]
        experiment: Experiment,
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Also store every density matrix in decimal text.
        #[arg(long)]
        dump_states: bool,
        /// Output directory (default: <out-root>/data-<experiment>-<hash>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a model on a generated dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// Must match the scheme the dataset was generated with.
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long)]
        hidden: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        init_scale: Option<f64>,
        /// Where to write model.txt and metrics (default: the data directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a saved model on a dataset's test set.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Where to write eval metrics (default: the data directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate, train, evaluate and write all artifacts in one go.
    Experiment {
        experiment: Experiment,
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Use the original large hidden layer (E2: 4000 neurons).
        #[arg(long)]
        paper_scale: bool,
    },
    /// Evaluate the fixed-CHSH and witness classifiers on a dataset.
    Baselines {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Experiment settings; a `--config` file overrides the flags.
#[derive(Args, Default)]
struct ConfigArgs {
    /// Plain-text `key = value` file applied after the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    gap: Option<f64>,
    #[arg(long)]
    p_min: Option<f64>,
    #[arg(long)]
    p_sd: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    phi_samples: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    init_scale: Option<f64>,
}

impl ConfigArgs {
    fn resolve(&self, experiment: Experiment, paper_scale: bool) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::defaults(experiment);
        if paper_scale {
            cfg = cfg.paper_scale();
        }
        let mut set = |key: &str, value: Option<String>| match value {
            Some(v) => cfg.set(key, &v),
            None => Ok(()),
        };
        let s = |v: Option<f64>| v.map(|x| x.to_string());
        set("seed", self.seed.map(|v| v.to_string()))?;
        set("n_train", self.n_train.map(|v| v.to_string()))?;
        set("n_test", self.n_test.map(|v| v.to_string()))?;
        set("train_fraction", s(self.train_fraction))?;
        set("scheme", self.scheme.clone())?;
        set("hidden", self.hidden.map(|v| v.to_string()))?;
        set("gap", s(self.gap))?;
        set("p_min", s(self.p_min))?;
        set("p_sd", s(self.p_sd))?;
        set("grid", self.grid.map(|v| v.to_string()))?;
        set("phi_samples", self.phi_samples.map(|v| v.to_string()))?;
        set("epochs", self.epochs.map(|v| v.to_string()))?;
        set("learning_rate", s(self.lr))?;
        set("batch_size", self.batch_size.map(|v| v.to_string()))?;
        set("init_scale", s(self.init_scale))?;
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            cfg.apply_text(&text).map_err(|e| Error::Parse {
                path: path.clone(),
                message: e.to_string(),
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_report(report: &MetricsReport) {
    println!(
        "{}: match_rate = {}",
        report.name,
        fmt_num(report.match_rate)
    );
    for g in &report.groups {
        println!(
            "{}: group {} detection = {} ({} samples)",
            report.name,
            g.group,
            fmt_num(g.rate()),
            g.total
        );
    }
    if let Some(v) = report.extras.get("mismatch_off_edge") {
        println!(
            "{}: mismatch |lambda_min| > 0.02 = {}",
            report.name,
            fmt_num(*v)
        );
    }
}

fn gen_data(
    out_root: &Path,
    cfg: ExperimentConfig,
    dump_states: bool,
    out: Option<PathBuf>,
) -> Result<()> {
    let data = harness::build_dataset(&cfg, dump_states)?;
    let dir = out.unwrap_or_else(|| out_root.join(format!("data-{}", cfg.dir_name())));
    harness::write_data_dir(&dir, &data)?;
    println!(
        "wrote {} train and {} test rows to {}",
        data.train.len(),
        data.test.len(),
        dir.display()
    );
    Ok(())
}

struct TrainArgs {
    data: PathBuf,
    scheme: Option<String>,
    hidden: Option<usize>,
    epochs: Option<usize>,
    lr: Option<f64>,
    batch_size: Option<usize>,
    seed: Option<u64>,
    init_scale: Option<f64>,
    out: Option<PathBuf>,
}

fn train(args: TrainArgs) -> Result<()> {
    let mut data: ExperimentData = harness::read_data_dir(&args.data)?;
    if let Some(name) = &args.scheme {
        let wanted = FeatureScheme::parse(name, data.config.experiment.n_qubits())?;
        if wanted != data.plan.scheme() {
            return Err(Error::InvalidArgument(format!(
                "dataset was generated with scheme {}, not {}",
                data.plan.scheme().name(),
                wanted.name()
            )));
        }
    }
    let cfg = &mut data.config;
    if let Some(v) = args.hidden {
        cfg.hidden = v;
    }
    if let Some(v) = args.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = args.lr {
        cfg.learning_rate = v;
    }
    if let Some(v) = args.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if args.init_scale.is_some() {
        cfg.init_scale = args.init_scale;
    }
    cfg.validate()?;
    let (model, history) = harness::train_model(&data.config, &data.train)?;
    let report = harness::evaluate_experiment(&data, &model, &history)?;
    let dir = args.out.unwrap_or_else(|| args.data.clone());
    model.save(&dir.join(run::MODEL_FILE))?;
    harness::io::write_atomic(
        &dir.join("train-config.txt"),
        data.config.canonical_text().as_bytes(),
    )?;
    let path = harness::emit_metrics(&report, &dir, run::METRICS_STEM)?;
    print_report(&report);
    println!(
        "wrote {} and {}",
        dir.join(run::MODEL_FILE).display(),
        path.display()
    );
    Ok(())
}

fn eval(model: &Path, data_dir: &Path, out: Option<PathBuf>) -> Result<()> {
    let model = MlpModel::load(model)?;
    let data = harness::read_data_dir(data_dir)?;
    let report = harness::evaluate_experiment(&data, &model, &[])?;
    let dir = out.unwrap_or_else(|| data_dir.to_path_buf());
    let path = harness::emit_metrics(&report, &dir, "eval-metrics")?;
    print_report(&report);
    println!("wrote {}", path.display());
    Ok(())
}

fn experiment(out_root: &Path, cfg: ExperimentConfig) -> Result<()> {
    let outcome = harness::run_experiment(&cfg, out_root)?;
    print_report(&outcome.report);
    for b in &outcome.baselines {
        print_report(b);
    }
    println!("artifacts in {}", outcome.dir.display());
    Ok(())
}

fn baselines(data_dir: &Path, out: Option<PathBuf>) -> Result<()> {
    let data = harness::read_data_dir(data_dir)?;
    let reports = harness::experiment_baselines(&data)?;
    let dir = out.unwrap_or_else(|| data_dir.to_path_buf());
    for r in &reports {
        harness::emit_metrics(r, &dir, &r.name)?;
        print_report(r);
    }
    println!("wrote baseline metrics to {}", dir.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData {
            experiment,
            cfg,
            dump_states,
            out,
        } => gen_data(
            &cli.out_root,
            cfg.resolve(experiment, false)?,
            dump_states,
            out,
        ),
        Command::Train {
            data,
            scheme,
            hidden,
            epochs,
            lr,
            batch_size,
            seed,
            init_scale,
            out,
        } => train(TrainArgs {
            data,
            scheme,
            hidden,
            epochs,
            lr,
            batch_size,
            seed,
            init_scale,
            out,
        }),
        Command::Eval { model, data, out } => eval(&model, &data, out),
        Command::Experiment {
            experiment: e,
            cfg,
            paper_scale,
        } => experiment(&cli.out_root, cfg.resolve(e, paper_scale)?),
        Command::Baselines { data, out } => baselines(&data, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_invalid_argument() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
