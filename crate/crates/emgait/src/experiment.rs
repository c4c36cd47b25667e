//! Repeated subject-wise train/test evaluation of every model.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use emgait_core::classical::{accuracy, random_search, ClassicalKind, ClassicalModel, SearchSpace};
use emgait_core::features::{FeatureMatrix, FeatureScaler};
use emgait_core::linalg::Matrix;
use emgait_core::neural::{save_initial_weights, train_dcnn, BestModelSelection, DcnnConfig, DcnnData, DcnnModel, EpochRecord};
use emgait_core::pca::fit_pca;
use emgait_core::preprocess::{PreparedDataset, Rejection};
use emgait_core::rng::derive_seed;
use emgait_core::split::{subject_split, SubjectSplit};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{EmgaitError, Result};
use crate::latency::{measure_predict_latency, LatencyStats};

pub const SCHEMA_VERSION: u32 = 1;

/// Seed stream reserved for the shared network initialisation.
const INIT_STREAM: u64 = u64::MAX;
/// Per-trial streams: 0 split, 1 network validation split, 2 network
/// training, then two per classical (model, input) slot from here on.
const CLASSICAL_STREAM: u64 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Nb,
    Dt,
    Rf,
    Lda,
    Dcnn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [ModelKind::Nb, ModelKind::Dt, ModelKind::Rf, ModelKind::Lda, ModelKind::Dcnn];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Nb => "nb",
            ModelKind::Dt => "dt",
            ModelKind::Rf => "rf",
            ModelKind::Lda => "lda",
            ModelKind::Dcnn => "dcnn",
        }
    }

    pub fn classical(self) -> Option<ClassicalKind> {
        match self {
            ModelKind::Nb => Some(ClassicalKind::Nb),
            ModelKind::Dt => Some(ClassicalKind::Dt),
            ModelKind::Rf => Some(ClassicalKind::Rf),
            ModelKind::Lda => Some(ClassicalKind::Lda),
            ModelKind::Dcnn => None,
        }
    }

    fn code(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = EmgaitError;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| EmgaitError::Validation(format!("unknown model {s:?}; expected one of nb, dt, rf, lda, dcnn")))
    }
}

/// What a model is trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum InputKind {
    /// The 20 scaled window features.
    Features,
    /// The first `k` principal components of the scaled features.
    Pca(usize),
    /// Raw standardized windows.
    Raw,
}

impl InputKind {
    pub const DEFAULT_CLASSICAL: [InputKind; 5] =
        [InputKind::Features, InputKind::Pca(1), InputKind::Pca(2), InputKind::Pca(3), InputKind::Pca(5)];

    fn code(self) -> u64 {
        match self {
            InputKind::Features => 0,
            InputKind::Pca(k) => k as u64,
            InputKind::Raw => 1 << 20,
        }
    }
}

impl fmt::Display for InputKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputKind::Features => f.write_str("features"),
            InputKind::Pca(k) => write!(f, "pca{k}"),
            InputKind::Raw => f.write_str("raw"),
        }
    }
}

impl FromStr for InputKind {
    type Err = EmgaitError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "features" => Ok(InputKind::Features),
            "raw" => Ok(InputKind::Raw),
            _ => s
                .strip_prefix("pca")
                .map(|k| k.strip_prefix(':').unwrap_or(k))
                .and_then(|k| k.parse::<usize>().ok())
                .filter(|&k| k > 0)
                .map(InputKind::Pca)
                .ok_or_else(|| EmgaitError::Validation(format!("unknown input {s:?}; expected features, pcaK or raw"))),
        }
    }
}

impl TryFrom<String> for InputKind {
    type Error = EmgaitError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<InputKind> for String {
    fn from(k: InputKind) -> String {
        k.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub n_trials: usize,
    pub base_seed: u64,
    pub test_fraction: f64,
    pub models: Vec<ModelKind>,
    /// Inputs for the classical models. The network always sees raw windows.
    pub inputs: Vec<InputKind>,
    pub search: SearchSpace,
    pub dcnn: DcnnConfig,
    /// Share of training subjects held out for early stopping.
    pub dcnn_val_fraction: f64,
    pub pca_k_max: usize,
    /// Off makes the report a pure function of data, seed and config.
    pub measure_latency: bool,
    pub latency_repeats: usize,
    /// Trials run concurrently on this many threads.
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_trials: 50,
            base_seed: 0,
            test_fraction: 0.1,
            models: ModelKind::ALL.to_vec(),
            inputs: InputKind::DEFAULT_CLASSICAL.to_vec(),
            search: SearchSpace::default(),
            dcnn: DcnnConfig::default(),
            dcnn_val_fraction: 0.1,
            pca_k_max: 20,
            measure_latency: true,
            latency_repeats: 3,
            jobs: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(EmgaitError::Validation(m));
        if self.n_trials == 0 {
            return bad("at least one trial is required".into());
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad(format!("test fraction {} outside (0, 1)", self.test_fraction));
        }
        if !(self.dcnn_val_fraction > 0.0 && self.dcnn_val_fraction < 1.0) {
            return bad(format!("validation fraction {} outside (0, 1)", self.dcnn_val_fraction));
        }
        if self.models.is_empty() {
            return bad("no models selected".into());
        }
        if self.models.iter().any(|m| m.classical().is_some()) && self.inputs.is_empty() {
            return bad("classical models need at least one input".into());
        }
        for input in &self.inputs {
            match *input {
                InputKind::Raw => return bad("raw windows are only used by dcnn; pick features or pcaK".into()),
                InputKind::Pca(k) if k == 0 || k > self.pca_k_max => {
                    return bad(format!("pca{k} outside 1..={}", self.pca_k_max));
                }
                _ => {}
            }
        }
        if self.models.contains(&ModelKind::Dcnn) {
            self.dcnn.validate()?;
        }
        Ok(())
    }

    fn has_classical(&self) -> bool {
        self.models.iter().any(|m| m.classical().is_some())
    }
}

/// Preprocessed windows, their features and labels.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub prepared: PreparedDataset,
    pub features: FeatureMatrix,
    pub labels: Vec<usize>,
}

impl ExperimentData {
    pub fn new(prepared: PreparedDataset) -> Result<Self> {
        let features = prepared.features()?;
        let labels = prepared.tensor.meta.label_indices();
        Ok(Self { prepared, features, labels })
    }

    pub fn subjects(&self) -> &[String] {
        &self.prepared.tensor.meta.subjects
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcnnSummary {
    pub val_subjects: Vec<String>,
    pub selection: BestModelSelection,
    pub best_epoch: usize,
    pub best_val_epoch: usize,
    pub stopped_epoch: usize,
    pub early_stopped: bool,
    pub epochs: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResult {
    pub model: ModelKind,
    pub input: InputKind,
    pub test_accuracy: f64,
    /// Accuracy on the windows the final model was fitted on.
    pub train_accuracy: f64,
    pub test_train_ratio: Option<f64>,
    pub latency: Option<LatencyStats>,
    pub hyperparams: serde_json::Value,
    pub search_score: Option<f64>,
    pub n_train: usize,
    pub n_test: usize,
    /// SHA-256 of the training-side window indices this model drew from.
    pub train_index_digest: String,
    pub test_index_digest: String,
    pub dcnn: Option<DcnnSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial_index: usize,
    pub seed: u64,
    pub split: SubjectSplit<String>,
    pub train_index_digest: String,
    pub test_index_digest: String,
    pub dcnn_init_hash: Option<String>,
    pub results: Vec<ModelResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub model: ModelKind,
    pub input: InputKind,
    pub n_trials: usize,
    pub mean_acc: f64,
    /// Population standard deviation over trials.
    pub std_acc: f64,
    pub min_acc: f64,
    pub max_acc: f64,
    pub mean_train_acc: f64,
    pub mean_ratio: Option<f64>,
    pub mean_latency_ms: Option<f64>,
    pub mean_latency_per_window_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n_windows: usize,
    pub n_subjects: usize,
    pub n_recordings: usize,
    pub swing_fraction: f64,
    pub rejected: Vec<Rejection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub package_version: String,
    pub os: String,
    pub arch: String,
    pub latency_measured: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub n_trials: usize,
    pub base_seed: u64,
    pub config: ExperimentConfig,
    pub dataset: DatasetSummary,
    pub dcnn_init_hash: Option<String>,
    /// The network's returned weights were picked by test accuracy.
    pub dcnn_selected_on_test_set: bool,
    pub trials: Vec<TrialResult>,
    pub aggregates: Vec<Aggregate>,
    pub environment: Environment,
}

pub fn index_digest(rows: &[usize]) -> String {
    let mut h = Sha256::new();
    for &r in rows {
        h.update((r as u64).to_le_bytes());
    }
    hex::encode(h.finalize())
}

pub fn blob_hash(blob: &[u8]) -> String {
    hex::encode(Sha256::digest(blob))
}

fn select_labels(labels: &[usize], rows: &[usize]) -> Vec<usize> {
    rows.iter().map(|&r| labels[r]).collect()
}

fn rows_for_subjects(meta_subjects: &[String], subject_index: &[u32], members: &[String]) -> Vec<usize> {
    let wanted: BTreeSet<u32> =
        meta_subjects.iter().enumerate().filter(|(_, s)| members.binary_search(s).is_ok()).map(|(i, _)| i as u32).collect();
    subject_index.iter().enumerate().filter(|(_, s)| wanted.contains(s)).map(|(i, _)| i).collect()
}

/// One split, then every requested model trained and tested on it.
/// `init_blob` holds the network's starting weights; without it they are
/// drawn from the trial seed.
pub fn run_trial(
    data: &ExperimentData,
    config: &ExperimentConfig,
    trial_index: usize,
    trial_seed: u64,
    init_blob: Option<&[u8]>,
) -> Result<TrialResult> {
    let meta = &data.prepared.tensor.meta;
    let split = subject_split(&meta.subjects, config.test_fraction, derive_seed(trial_seed, 0))?;
    let train_rows = rows_for_subjects(&meta.subjects, &meta.subject_index, &split.train_subjects);
    let test_rows = rows_for_subjects(&meta.subjects, &meta.subject_index, &split.test_subjects);
    let train_digest = index_digest(&train_rows);
    let test_digest = index_digest(&test_rows);
    let y_train = select_labels(&data.labels, &train_rows);
    let y_test = select_labels(&data.labels, &test_rows);
    log::info!(
        "trial {trial_index}: {} train / {} test windows, test subjects {:?}",
        train_rows.len(),
        test_rows.len(),
        split.test_subjects
    );

    let mut results = Vec::new();
    if config.has_classical() {
        let groups: Vec<u32> = train_rows.iter().map(|&r| meta.subject_index[r]).collect();
        let scaler = FeatureScaler::fit(&data.features.x.select_rows(&train_rows));
        let x_train = scaler.apply(&data.features.x.select_rows(&train_rows))?;
        let x_test = scaler.apply(&data.features.x.select_rows(&test_rows))?;
        let pca = if config.inputs.iter().any(|i| matches!(i, InputKind::Pca(_))) { Some(fit_pca(&x_train)?) } else { None };
        for &model in &config.models {
            let Some(kind) = model.classical() else { continue };
            for &input in &config.inputs {
                let (xtr, xte): (Matrix, Matrix) = match (input, &pca) {
                    (InputKind::Pca(k), Some(p)) => (p.transform(&x_train, k)?, p.transform(&x_test, k)?),
                    _ => (x_train.clone(), x_test.clone()),
                };
                let slot = (model.code() << 32) | input.code();
                let search = random_search(kind, &config.search, &xtr, &y_train, &groups, 2, derive_seed(trial_seed, CLASSICAL_STREAM + 2 * slot))?;
                let fitted = ClassicalModel::train(&search.best, &xtr, &y_train, 2, derive_seed(trial_seed, CLASSICAL_STREAM + 2 * slot + 1))?;
                let test_accuracy = accuracy(&fitted.predict(&xte), &y_test);
                let train_accuracy = accuracy(&fitted.predict(&xtr), &y_train);
                let latency = config
                    .measure_latency
                    .then(|| measure_predict_latency(|| fitted.predict(&xte), xte.rows(), config.latency_repeats));
                log::info!("trial {trial_index}: {model} on {input}: test {test_accuracy:.4} train {train_accuracy:.4}");
                results.push(ModelResult {
                    model,
                    input,
                    test_accuracy,
                    train_accuracy,
                    test_train_ratio: (train_accuracy > 0.0).then(|| test_accuracy / train_accuracy),
                    latency,
                    hyperparams: serde_json::to_value(&search.best).unwrap_or_default(),
                    search_score: Some(search.best_score),
                    n_train: xtr.rows(),
                    n_test: xte.rows(),
                    train_index_digest: index_digest(&train_rows),
                    test_index_digest: index_digest(&test_rows),
                    dcnn: None,
                });
            }
        }
    }

    let mut dcnn_init_hash = None;
    if config.models.contains(&ModelKind::Dcnn) {
        let owned;
        let blob = match init_blob {
            Some(b) => b,
            None => {
                owned = save_initial_weights(config.dcnn.clone(), derive_seed(trial_seed, INIT_STREAM))?;
                &owned
            }
        };
        dcnn_init_hash = Some(blob_hash(blob));
        let initial = DcnnModel::from_blob(blob)?;
        let val_split = subject_split(&split.train_subjects, config.dcnn_val_fraction, derive_seed(trial_seed, 1))?;
        let fit_rows = rows_for_subjects(&meta.subjects, &meta.subject_index, &val_split.train_subjects);
        let val_rows = rows_for_subjects(&meta.subjects, &meta.subject_index, &val_split.test_subjects);
        let tensor = &data.prepared.tensor;
        let x_fit = tensor.select(&fit_rows).data;
        let x_val = tensor.select(&val_rows).data;
        let x_test = tensor.select(&test_rows).data;
        let y_fit = select_labels(&data.labels, &fit_rows);
        let y_val = select_labels(&data.labels, &val_rows);
        let (model, history) = train_dcnn(
            &initial,
            DcnnData { x: &x_fit, y: &y_fit },
            DcnnData { x: &x_val, y: &y_val },
            Some(DcnnData { x: &x_test, y: &y_test }),
            derive_seed(trial_seed, 2),
        )?;
        let test_accuracy = model.evaluate(&x_test, &y_test).accuracy();
        let train_accuracy = model.evaluate(&x_fit, &y_fit).accuracy();
        let latency =
            config.measure_latency.then(|| measure_predict_latency(|| model.predict_batch(&x_test), test_rows.len(), config.latency_repeats));
        log::info!(
            "trial {trial_index}: dcnn test {test_accuracy:.4} train {train_accuracy:.4} after {} epochs",
            history.epochs.len()
        );
        let mut seen: Vec<usize> = fit_rows.iter().chain(&val_rows).copied().collect();
        seen.sort_unstable();
        results.push(ModelResult {
            model: ModelKind::Dcnn,
            input: InputKind::Raw,
            test_accuracy,
            train_accuracy,
            test_train_ratio: (train_accuracy > 0.0).then(|| test_accuracy / train_accuracy),
            latency,
            hyperparams: serde_json::to_value(&config.dcnn).unwrap_or_default(),
            search_score: None,
            n_train: fit_rows.len(),
            n_test: test_rows.len(),
            train_index_digest: index_digest(&seen),
            test_index_digest: index_digest(&test_rows),
            dcnn: Some(DcnnSummary {
                val_subjects: val_split.test_subjects,
                selection: history.selection,
                best_epoch: history.best_epoch,
                best_val_epoch: history.best_val_epoch,
                stopped_epoch: history.stopped_epoch,
                early_stopped: history.early_stopped,
                epochs: history.epochs,
            }),
        });
    }

    Ok(TrialResult {
        trial_index,
        seed: trial_seed,
        split,
        train_index_digest: train_digest,
        test_index_digest: test_digest,
        dcnn_init_hash,
        results,
    })
}

pub fn trial_seed(base_seed: u64, trial_index: usize) -> u64 {
    derive_seed(base_seed, trial_index as u64)
}

/// Runs `n_trials` trials and aggregates them. The network's initial
/// weights are drawn once and shared by every trial.
pub fn run_experiment(data: &ExperimentData, config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let blob = if config.models.contains(&ModelKind::Dcnn) {
        Some(save_initial_weights(config.dcnn.clone(), derive_seed(config.base_seed, INIT_STREAM))?)
    } else {
        None
    };
    let run = |i: usize| run_trial(data, config, i, trial_seed(config.base_seed, i), blob.as_deref());
    let jobs = config.jobs.clamp(1, config.n_trials);
    let trials: Vec<TrialResult> = if jobs == 1 {
        (0..config.n_trials).map(run).collect::<Result<_>>()?
    } else {
        let mut slots: Vec<Option<Result<TrialResult>>> = (0..config.n_trials).map(|_| None).collect();
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..jobs)
                .map(|w| {
                    let run = &run;
                    s.spawn(move || (w..config.n_trials).step_by(jobs).map(|i| (i, run(i))).collect::<Vec<_>>())
                })
                .collect();
            for h in handles {
                for (i, r) in h.join().expect("trial worker panicked") {
                    slots[i] = Some(r);
                }
            }
        });
        slots.into_iter().map(|r| r.expect("every trial ran")).collect::<Result<_>>()?
    };

    let labels = &data.labels;
    let dataset = DatasetSummary {
        n_windows: labels.len(),
        n_subjects: data.subjects().len(),
        n_recordings: data.prepared.recordings.len(),
        swing_fraction: labels.iter().filter(|&&l| l == 1).count() as f64 / labels.len().max(1) as f64,
        rejected: data.prepared.rejected.clone(),
    };
    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        n_trials: config.n_trials,
        base_seed: config.base_seed,
        config: config.clone(),
        dataset,
        dcnn_init_hash: blob.as_deref().map(blob_hash),
        dcnn_selected_on_test_set: config.models.contains(&ModelKind::Dcnn)
            && config.dcnn.selection == BestModelSelection::TestAccuracy,
        aggregates: aggregate(&trials),
        trials,
        environment: Environment {
            package_version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            latency_measured: config.measure_latency,
        },
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Per (model, input) statistics over trials, in first-seen order.
pub fn aggregate(trials: &[TrialResult]) -> Vec<Aggregate> {
    let mut keys: Vec<(ModelKind, InputKind)> = Vec::new();
    for r in trials.iter().flat_map(|t| &t.results) {
        if !keys.contains(&(r.model, r.input)) {
            keys.push((r.model, r.input));
        }
    }
    keys.into_iter()
        .map(|(model, input)| {
            let rs: Vec<&ModelResult> =
                trials.iter().flat_map(|t| &t.results).filter(|r| r.model == model && r.input == input).collect();
            let acc: Vec<f64> = rs.iter().map(|r| r.test_accuracy).collect();
            let m = mean(&acc);
            let ratios: Vec<f64> = rs.iter().filter_map(|r| r.test_train_ratio).collect();
            let lat: Vec<&LatencyStats> = rs.iter().filter_map(|r| r.latency.as_ref()).collect();
            let lat_mean = |f: fn(&LatencyStats) -> f64| (!lat.is_empty()).then(|| lat.iter().map(|l| f(l)).sum::<f64>() / lat.len() as f64);
            Aggregate {
                model,
                input,
                n_trials: rs.len(),
                mean_acc: m,
                std_acc: (acc.iter().map(|a| (a - m).powi(2)).sum::<f64>() / acc.len() as f64).sqrt(),
                min_acc: acc.iter().copied().fold(f64::INFINITY, f64::min),
                max_acc: acc.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                mean_train_acc: mean(&rs.iter().map(|r| r.train_accuracy).collect::<Vec<_>>()),
                mean_ratio: (!ratios.is_empty()).then(|| mean(&ratios)),
                mean_latency_ms: lat_mean(|l| l.mean_ms),
                mean_latency_per_window_ms: lat_mean(|l| l.per_window_ms),
            }
        })
        .collect()
}
