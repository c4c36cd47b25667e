use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use emgait::core::features::{extract_features, FeatureScaler};
use emgait::core::neural::DcnnConfig;
use emgait::core::pca::fit_pca;
use emgait::core::dataset::Recording;
use emgait::core::preprocess::{preprocess_dataset, PreparedDataset, PreprocessConfig};
use emgait::core::classical::SearchSpace;
use emgait::experiment::{run_experiment, ExperimentConfig, ExperimentData, InputKind, ModelKind};
use emgait::io::{read_features, read_json, read_prepared, write_bytes, write_features, write_json, write_prepared};
use emgait::report::{emit_csv, emit_json, read_report, summary_table};
use emgait::source::{load_recordings, DataSource, Exclusions};
use emgait::train::{train_classical, train_dcnn_single};
use emgait::{EmgaitError, Result};

#[derive(Debug, Parser)]
#[command(name = "emgait", version, about = "Stance/swing detection from lower-limb surface EMG")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 50)]
    trials: usize,
    #[arg(long, global = true, default_value_t = 0.1)]
    test_fraction: f64,
    #[arg(long, global = true, value_delimiter = ',', default_value = "nb,dt,rf,lda,dcnn")]
    models: Vec<String>,
    #[arg(long, global = true, value_delimiter = ',', default_value = "features,pca1,pca2,pca3,pca5")]
    inputs: Vec<String>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    /// Dataset directory holding manifest.json.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    #[arg(long, global = true, value_delimiter = ',')]
    exclude_subjects: Vec<String>,
    #[arg(long, global = true)]
    exclude_injured: bool,
    /// Generate recordings instead of reading --data-dir.
    #[arg(long, global = true)]
    synthetic: bool,
    #[arg(long, global = true)]
    synth_config: Option<PathBuf>,

    #[arg(long, global = true, default_value_t = 0.60)]
    stance_fraction: f64,
    #[arg(long, global = true, default_value_t = 0.20)]
    qc_cv_threshold: f64,
    /// Pass band as LOW:HIGH in Hz.
    #[arg(long, global = true, default_value = "20:300")]
    band: String,
    #[arg(long, global = true, default_value_t = 4)]
    order: usize,
    #[arg(long, global = true, default_value_t = 500.0)]
    target_rate: f64,
    #[arg(long, global = true)]
    anti_alias: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Filter, label and window recordings into tensor.bin.
    Preprocess,
    /// Extract window features from a tensor.
    Features {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit PCA on scaled features and print explained variance.
    Pca {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tune and fit one model on one subject-wise split.
    Train {
        #[arg(long)]
        model: String,
        #[arg(long, default_value = "features")]
        input: String,
        /// features.bin for classical models, tensor.bin for dcnn.
        #[arg(long = "in")]
        data: PathBuf,
        /// DcnnConfig or SearchSpace JSON, depending on the model.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the repeated-trial experiment and write report.json and report.csv.
    Evaluate {
        /// ExperimentConfig JSON; command-line flags override its trial settings.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Read a preprocessed tensor instead of loading recordings.
        #[arg(long)]
        tensor: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        no_latency: bool,
    },
    /// Print a summary table of a report and write its CSV.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn invalid(msg: impl Into<String>) -> EmgaitError {
    EmgaitError::Validation(msg.into())
}

impl Global {
    fn preprocess_config(&self) -> Result<PreprocessConfig> {
        let (lo, hi) = self.band.split_once(':').ok_or_else(|| invalid(format!("--band {:?} is not LOW:HIGH", self.band)))?;
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| invalid(format!("--band {:?}: bad number {s:?}", self.band)));
        let mut cfg = PreprocessConfig {
            band_low_hz: parse(lo)?,
            band_high_hz: parse(hi)?,
            filter_order: self.order,
            target_rate_hz: self.target_rate,
            anti_alias: self.anti_alias,
            stance_fraction: self.stance_fraction,
            ..Default::default()
        };
        cfg.qc.cv_threshold = self.qc_cv_threshold;
        cfg.validate()?;
        Ok(cfg)
    }

    fn source(&self) -> Result<DataSource> {
        match (&self.data_dir, self.synthetic) {
            (Some(_), true) => Err(invalid("--data-dir and --synthetic are exclusive")),
            (Some(d), false) => Ok(DataSource::Directory(d.clone())),
            (None, true) => Ok(DataSource::Synthetic { config: self.synth_config.clone(), seed: self.seed }),
            (None, false) => Err(invalid("pass --data-dir or --synthetic")),
        }
    }

    fn exclusions(&self) -> Exclusions {
        Exclusions {
            subjects: self.exclude_subjects.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
            injured: self.exclude_injured,
        }
    }

    fn models(&self) -> Result<Vec<ModelKind>> {
        self.models.iter().map(|m| m.parse()).collect()
    }

    fn inputs(&self) -> Result<Vec<InputKind>> {
        self.inputs.iter().map(|m| m.parse()).collect()
    }

    fn out(&self, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out_dir).map_err(|e| EmgaitError::Io { path: self.out_dir.clone(), source: e })?;
        Ok(self.out_dir.join(name))
    }

    fn prepare(&self) -> Result<PreparedDataset> {
        self.prepare_from(&load_recordings(&self.source()?, &self.exclusions())?)
    }

    fn prepare_from(&self, recs: &[Recording]) -> Result<PreparedDataset> {
        let prep = preprocess_dataset(recs, &self.preprocess_config()?)?;
        for r in &prep.rejected {
            log::warn!("subject {} ({}) rejected: {}", r.subject_id, r.leg.as_str(), r.reason);
        }
        Ok(prep)
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::Preprocess => {
            let recs = load_recordings(&g.source()?, &g.exclusions())?;
            let prep = g.prepare_from(&recs)?;
            let path = g.out("tensor.bin")?;
            write_prepared(&path, &prep)?;
            if let Some(rec) = recs.first() {
                write_json(&g.out("filter.json")?, &prep.config.bandpass(rec.sample_rate_hz)?)?;
            }
            println!(
                "{} windows from {} subjects ({} rejected) -> {}",
                prep.tensor.len(),
                prep.subjects().len(),
                prep.rejected.len(),
                path.display()
            );
        }
        Command::Features { input, out } => {
            let prep = read_prepared(&input)?;
            let feats = extract_features(&prep.tensor, &prep.thresholds, prep.config.zc_mode)?;
            write_features(&out, &feats)?;
            println!("{} x {} features -> {}", feats.len(), feats.x.cols(), out.display());
        }
        Command::Pca { input, out } => {
            let feats = read_features(&input)?;
            let scaled = FeatureScaler::fit(&feats.x).apply(&feats.x)?;
            let pca = fit_pca(&scaled)?;
            for (k, r) in pca.explained_variance_ratio.iter().enumerate().take(5) {
                println!("PC{}: {:.4} (cumulative {:.4})", k + 1, r, pca.cumulative_ratio(k + 1));
            }
            write_json(&out.unwrap_or(g.out("pca.json")?), &pca)?;
        }
        Command::Train { model, input, data, config, out } => {
            let model: ModelKind = model.parse()?;
            if model == ModelKind::Dcnn {
                let cfg: DcnnConfig = match &config {
                    Some(p) => read_json(p)?,
                    None => DcnnConfig::default(),
                };
                let prep = read_prepared(&data)?;
                let (net, run) = train_dcnn_single(&prep.tensor, &cfg, g.test_fraction, 0.1, g.seed)?;
                println!(
                    "dcnn: train {:.4} test {:.4}, best epoch {} of {}",
                    run.train_accuracy,
                    run.test_accuracy,
                    run.history.best_epoch,
                    run.history.epochs.len()
                );
                let path = out.unwrap_or(g.out("dcnn.bin")?);
                write_bytes(&path, &net.to_blob())?;
                write_json(&path.with_extension("json"), &run)?;
            } else {
                let input: InputKind = input.parse()?;
                let search: SearchSpace = match &config {
                    Some(p) => read_json(p)?,
                    None => SearchSpace::default(),
                };
                let feats = read_features(&data)?;
                let trained = train_classical(&feats, model, input, &search, g.test_fraction, g.seed)?;
                println!("{model} on {input}: train {:.4} test {:.4}", trained.train_accuracy, trained.test_accuracy);
                write_json(&out.unwrap_or(g.out(&format!("{model}_{input}.json"))?), &trained)?;
            }
        }
        Command::Evaluate { config, tensor, jobs, no_latency } => {
            let mut cfg: ExperimentConfig = match &config {
                Some(p) => read_json(p)?,
                None => ExperimentConfig::default(),
            };
            cfg.n_trials = g.trials;
            cfg.base_seed = g.seed;
            cfg.test_fraction = g.test_fraction;
            cfg.models = g.models()?;
            cfg.inputs = g.inputs()?;
            cfg.jobs = jobs;
            cfg.measure_latency &= !no_latency;
            cfg.validate()?;
            let prep = match &tensor {
                Some(p) => read_prepared(p)?,
                None => g.prepare()?,
            };
            let data = ExperimentData::new(prep)?;
            let report = run_experiment(&data, &cfg)?;
            emit_json(&report, &g.out("report.json")?)?;
            emit_csv(&report, &g.out("report.csv")?)?;
            print!("{}", summary_table(&report));
        }
        Command::Report { input, csv } => {
            let report = read_report(&input)?;
            print!("{}", summary_table(&report));
            if let Some(path) = csv {
                emit_csv(&report, &path)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
