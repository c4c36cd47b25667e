//! Training one model on one subject-wise split, outside the trial loop.

use emgait_core::classical::{accuracy, random_search, ClassicalModel, Hyperparams, SearchSpace};
use emgait_core::features::{FeatureMatrix, FeatureScaler};
use emgait_core::linalg::Matrix;
use emgait_core::neural::{train_dcnn, DcnnConfig, DcnnData, DcnnModel, TrainHistory};
use emgait_core::pca::{fit_pca, PcaModel};
use emgait_core::rng::derive_seed;
use emgait_core::split::{rows_in, subject_split, SubjectSplit};
use emgait_core::windowing::WindowTensor;
use serde::{Deserialize, Serialize};

use crate::error::{EmgaitError, Result};
use crate::experiment::{InputKind, ModelKind, SCHEMA_VERSION};

/// A fitted classical model with the transforms its input needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassical {
    pub schema_version: u32,
    pub input: InputKind,
    pub split: SubjectSplit<u32>,
    pub scaler: FeatureScaler,
    pub pca: Option<PcaModel>,
    pub hyperparams: Hyperparams,
    pub model: ClassicalModel,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

impl TrainedClassical {
    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        let scaled = self.scaler.apply(x)?;
        Ok(match (self.input, &self.pca) {
            (InputKind::Pca(k), Some(p)) => p.transform(&scaled, k)?,
            _ => scaled,
        })
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        Ok(self.model.predict(&self.transform(x)?))
    }
}

fn split_rows(groups: &[u32], test_fraction: f64, seed: u64) -> Result<(SubjectSplit<u32>, Vec<usize>, Vec<usize>)> {
    let mut subjects = groups.to_vec();
    subjects.sort_unstable();
    subjects.dedup();
    let split = subject_split(&subjects, test_fraction, seed)?;
    let train = rows_in(groups, &split.train_subjects);
    let test = rows_in(groups, &split.test_subjects);
    Ok((split, train, test))
}

pub fn train_classical(
    features: &FeatureMatrix,
    model: ModelKind,
    input: InputKind,
    search: &SearchSpace,
    test_fraction: f64,
    seed: u64,
) -> Result<TrainedClassical> {
    let kind = model.classical().ok_or_else(|| EmgaitError::Validation(format!("{model} is not a classical model")))?;
    if input == InputKind::Raw {
        return Err(EmgaitError::Validation("classical models take features or pcaK".into()));
    }
    let groups = &features.meta.subject_index;
    let labels = features.meta.label_indices();
    let (split, train_rows, test_rows) = split_rows(groups, test_fraction, derive_seed(seed, 0))?;
    let scaler = FeatureScaler::fit(&features.x.select_rows(&train_rows));
    let pca = match input {
        InputKind::Pca(_) => Some(fit_pca(&scaler.apply(&features.x.select_rows(&train_rows))?)?),
        _ => None,
    };
    let project = |x: Matrix| -> Result<Matrix> {
        let scaled = scaler.apply(&x)?;
        Ok(match (input, &pca) {
            (InputKind::Pca(k), Some(p)) => p.transform(&scaled, k)?,
            _ => scaled,
        })
    };
    let x_train = project(features.x.select_rows(&train_rows))?;
    let x_test = project(features.x.select_rows(&test_rows))?;
    let y_train: Vec<usize> = train_rows.iter().map(|&r| labels[r]).collect();
    let y_test: Vec<usize> = test_rows.iter().map(|&r| labels[r]).collect();
    let train_groups: Vec<u32> = train_rows.iter().map(|&r| groups[r]).collect();
    let outcome = random_search(kind, search, &x_train, &y_train, &train_groups, 2, derive_seed(seed, 1))?;
    let fitted = ClassicalModel::train(&outcome.best, &x_train, &y_train, 2, derive_seed(seed, 2))?;
    let trained = TrainedClassical {
        schema_version: SCHEMA_VERSION,
        input,
        train_accuracy: accuracy(&fitted.predict(&x_train), &y_train),
        test_accuracy: accuracy(&fitted.predict(&x_test), &y_test),
        split,
        scaler,
        pca,
        hyperparams: outcome.best,
        model: fitted,
    };
    Ok(trained)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcnnRun {
    pub split: SubjectSplit<u32>,
    pub val_subjects: Vec<u32>,
    pub history: TrainHistory,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

/// Splits subjects into train/validation/test and trains a fresh network.
pub fn train_dcnn_single(
    tensor: &WindowTensor,
    config: &DcnnConfig,
    test_fraction: f64,
    val_fraction: f64,
    seed: u64,
) -> Result<(DcnnModel, DcnnRun)> {
    let groups = &tensor.meta.subject_index;
    let labels = tensor.meta.label_indices();
    let (split, train_rows, test_rows) = split_rows(groups, test_fraction, derive_seed(seed, 0))?;
    let inner = subject_split(&split.train_subjects, val_fraction, derive_seed(seed, 1))?;
    let fit_rows = rows_in(groups, &inner.train_subjects);
    let val_rows = rows_in(groups, &inner.test_subjects);
    debug_assert_eq!(fit_rows.len() + val_rows.len(), train_rows.len());
    let pick = |rows: &[usize]| (tensor.select(rows).data, rows.iter().map(|&r| labels[r]).collect::<Vec<_>>());
    let (x_fit, y_fit) = pick(&fit_rows);
    let (x_val, y_val) = pick(&val_rows);
    let (x_test, y_test) = pick(&test_rows);
    let initial = DcnnModel::new(config.clone(), derive_seed(seed, 3))?;
    let test = (!y_test.is_empty()).then_some(DcnnData { x: &x_test, y: &y_test });
    let (model, history) = train_dcnn(
        &initial,
        DcnnData { x: &x_fit, y: &y_fit },
        DcnnData { x: &x_val, y: &y_val },
        test,
        derive_seed(seed, 2),
    )?;
    let run = DcnnRun {
        train_accuracy: model.evaluate(&x_fit, &y_fit).accuracy(),
        test_accuracy: model.evaluate(&x_test, &y_test).accuracy(),
        split,
        val_subjects: inner.test_subjects,
        history,
    };
    Ok((model, run))
}
