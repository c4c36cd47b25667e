//! Report output: canonical JSON plus one CSV row per trial, model and input.

use std::io::Write;
use std::path::Path;

use crate::error::{EmgaitError, Result};
use crate::experiment::ExperimentReport;
use crate::io::{read_json, write_json};

pub const CSV_HEADER: [&str; 12] = [
    "trial",
    "seed",
    "model",
    "input",
    "train_accuracy",
    "test_accuracy",
    "test_train_ratio",
    "latency_ms",
    "latency_per_window_ms",
    "n_train",
    "n_test",
    "test_subjects",
];

pub fn emit_json(report: &ExperimentReport, path: &Path) -> Result<()> {
    write_json(path, report)
}

pub fn read_report(path: &Path) -> Result<ExperimentReport> {
    let report: ExperimentReport = read_json(path)?;
    if report.schema_version != crate::experiment::SCHEMA_VERSION {
        return Err(EmgaitError::malformed(path, format!("unsupported schema_version {}", report.schema_version)));
    }
    Ok(report)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_csv<W: Write>(report: &ExperimentReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for t in &report.trials {
        let subjects = t.split.test_subjects.join(";");
        for r in &t.results {
            w.write_record([
                t.trial_index.to_string(),
                t.seed.to_string(),
                r.model.to_string(),
                r.input.to_string(),
                r.train_accuracy.to_string(),
                r.test_accuracy.to_string(),
                opt(r.test_train_ratio),
                opt(r.latency.map(|l| l.mean_ms)),
                opt(r.latency.map(|l| l.per_window_ms)),
                r.n_train.to_string(),
                r.n_test.to_string(),
                subjects.clone(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(report: &ExperimentReport, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| EmgaitError::io(path, e))?;
    write_csv(report, std::io::BufWriter::new(f)).map_err(|e| EmgaitError::io(path, std::io::Error::other(e.to_string())))
}

/// Plain-text table of the aggregates.
pub fn summary_table(report: &ExperimentReport) -> String {
    let mut s = format!(
        "{} trials, {} windows from {} subjects\n{:<6} {:<9} {:>8} {:>8} {:>8} {:>8} {:>8} {:>12}\n",
        report.n_trials,
        report.dataset.n_windows,
        report.dataset.n_subjects,
        "model",
        "input",
        "mean",
        "std",
        "min",
        "max",
        "ratio",
        "latency_ms"
    );
    for a in &report.aggregates {
        s.push_str(&format!(
            "{:<6} {:<9} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8} {:>12}\n",
            a.model.to_string(),
            a.input.to_string(),
            a.mean_acc,
            a.std_acc,
            a.min_acc,
            a.max_acc,
            a.mean_ratio.map_or("-".into(), |r| format!("{r:.4}")),
            a.mean_latency_ms.map_or("-".into(), |l| format!("{l:.3}")),
        ));
    }
    if report.dcnn_selected_on_test_set {
        s.push_str("note: dcnn weights were selected by test-set accuracy\n");
    }
    s
}
