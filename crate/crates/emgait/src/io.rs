//! On-disk formats: recording CSVs with a JSON manifest, binary array
//! containers with JSON sidecars, and JSON helpers.
//!
//! A dataset directory looks like
//!
//! ```text
//! manifest.json
//! S001_dominant/emg.csv      t_s,VL,BF,MH,GL,GM
//! S001_dominant/events.csv   t_s,leg          (leg is "self" or "opposite")
//! ```

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use emgait_core::dataset::{Leg, Recording};
use emgait_core::features::{FeatureMatrix, ZcThresholds};
use emgait_core::linalg::Matrix;
use emgait_core::preprocess::{PreparedDataset, PreprocessConfig, RecordingSummary, Rejection};
use emgait_core::windowing::{WindowMeta, WindowTensor};
use emgait_core::{CHANNEL_NAMES, N_CHANNELS};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{EmgaitError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const EMG_FILE: &str = "emg.csv";
pub const EVENTS_FILE: &str = "events.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub subject_id: String,
    pub leg: Leg,
    /// EMG CSV path relative to the manifest; `events.csv` sits next to it.
    pub file_path: PathBuf,
    pub injury_history: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub sample_rate_hz: f64,
    pub channel_names: Vec<String>,
}

impl DatasetManifest {
    pub fn validate(&self, path: &Path) -> Result<()> {
        if self.channel_names.len() != N_CHANNELS {
            return Err(EmgaitError::malformed(path, format!("{} channel names, expected {N_CHANNELS}", self.channel_names.len())));
        }
        if !(self.sample_rate_hz > 0.0) {
            return Err(EmgaitError::malformed(path, "sample_rate_hz must be positive"));
        }
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if !seen.insert((e.subject_id.as_str(), e.leg)) {
                return Err(EmgaitError::malformed(path, format!("duplicate entry {} {}", e.subject_id, e.leg.as_str())));
            }
        }
        Ok(())
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| EmgaitError::io(path, e))
}

fn create(path: &Path) -> Result<File> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| EmgaitError::io(parent, e))?;
    }
    File::create(path).map_err(|e| EmgaitError::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> EmgaitError {
    match e.kind() {
        csv::ErrorKind::Io(_) => EmgaitError::io(path, std::io::Error::other(e.to_string())),
        _ => EmgaitError::malformed(path, e.to_string()),
    }
}

fn parse_f64(path: &Path, row: usize, s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| EmgaitError::malformed(path, format!("row {row}: cannot parse {s:?} as a number")))
}

fn reader(path: &Path) -> Result<csv::Reader<BufReader<File>>> {
    // flexible so that column-count errors are reported by us with the row number
    Ok(csv::ReaderBuilder::new().flexible(true).from_reader(BufReader::new(open(path)?)))
}

fn check_header(path: &Path, rdr: &mut csv::Reader<BufReader<File>>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers().map_err(|e| csv_err(path, e))?;
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != expected {
        return Err(EmgaitError::malformed(path, format!("header {got:?}, expected {expected:?}")));
    }
    Ok(())
}

/// Reads one recording described by a manifest entry. `root` is the
/// manifest's directory.
pub fn load_recording(entry: &ManifestEntry, root: &Path, sample_rate_hz: f64) -> Result<Recording> {
    let emg_path = root.join(&entry.file_path);
    let events_path = emg_path.with_file_name(EVENTS_FILE);

    let mut header = vec!["t_s"];
    header.extend(CHANNEL_NAMES);
    let mut rdr = reader(&emg_path)?;
    check_header(&emg_path, &mut rdr, &header)?;
    let mut channels: [Vec<f64>; N_CHANNELS] = Default::default();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(&emg_path, e))?;
        if rec.len() != header.len() {
            return Err(EmgaitError::malformed(&emg_path, format!("row {}: {} columns, expected {}", i + 1, rec.len(), header.len())));
        }
        for (c, ch) in channels.iter_mut().enumerate() {
            ch.push(parse_f64(&emg_path, i + 1, &rec[c + 1])?);
        }
    }

    let mut heel_strikes_s = Vec::new();
    let mut opposite_heel_strikes_s = Vec::new();
    let mut rdr = reader(&events_path)?;
    check_header(&events_path, &mut rdr, &["t_s", "leg"])?;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(&events_path, e))?;
        if rec.len() != 2 {
            return Err(EmgaitError::malformed(&events_path, format!("row {}: {} columns, expected 2", i + 1, rec.len())));
        }
        let t = parse_f64(&events_path, i + 1, &rec[0])?;
        match rec[1].trim() {
            "self" => heel_strikes_s.push(t),
            "opposite" => opposite_heel_strikes_s.push(t),
            other => return Err(EmgaitError::malformed(&events_path, format!("row {}: unknown leg {other:?}", i + 1))),
        }
    }

    let recording = Recording {
        subject_id: entry.subject_id.clone(),
        leg: entry.leg,
        sample_rate_hz,
        channels,
        heel_strikes_s,
        opposite_heel_strikes_s,
        injury_history: entry.injury_history,
    };
    recording.validate()?;
    Ok(recording)
}

/// Writes `emg.csv` and `events.csv` into `dir`. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_recording(dir: &Path, rec: &Recording) -> Result<()> {
    let emg_path = dir.join(EMG_FILE);
    let mut w = csv::Writer::from_writer(BufWriter::new(create(&emg_path)?));
    let mut header = vec!["t_s"];
    header.extend(CHANNEL_NAMES);
    w.write_record(&header).map_err(|e| csv_err(&emg_path, e))?;
    let mut row: Vec<String> = Vec::with_capacity(N_CHANNELS + 1);
    for i in 0..rec.len() {
        row.clear();
        row.push((i as f64 / rec.sample_rate_hz).to_string());
        row.extend(rec.channels.iter().map(|c| c[i].to_string()));
        w.write_record(&row).map_err(|e| csv_err(&emg_path, e))?;
    }
    w.flush().map_err(|e| EmgaitError::io(&emg_path, e))?;

    let events_path = dir.join(EVENTS_FILE);
    let mut events: Vec<(f64, &str)> = rec.heel_strikes_s.iter().map(|&t| (t, "self")).collect();
    events.extend(rec.opposite_heel_strikes_s.iter().map(|&t| (t, "opposite")));
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut w = csv::Writer::from_writer(BufWriter::new(create(&events_path)?));
    w.write_record(["t_s", "leg"]).map_err(|e| csv_err(&events_path, e))?;
    for (t, leg) in events {
        w.write_record([t.to_string().as_str(), leg]).map_err(|e| csv_err(&events_path, e))?;
    }
    w.flush().map_err(|e| EmgaitError::io(&events_path, e))
}

pub fn recording_dir_name(rec: &Recording) -> String {
    format!("{}_{}", rec.subject_id, rec.leg.as_str())
}

/// Writes every recording plus `manifest.json`. All recordings must share
/// one sample rate.
pub fn write_dataset(dir: &Path, recordings: &[Recording]) -> Result<DatasetManifest> {
    let sample_rate_hz = recordings.first().map_or(emgait_core::dataset::SOURCE_RATE_HZ, |r| r.sample_rate_hz);
    if recordings.iter().any(|r| r.sample_rate_hz != sample_rate_hz) {
        return Err(EmgaitError::Validation("recordings have different sample rates".into()));
    }
    let mut entries = Vec::with_capacity(recordings.len());
    for rec in recordings {
        let sub = recording_dir_name(rec);
        write_recording(&dir.join(&sub), rec)?;
        entries.push(ManifestEntry {
            subject_id: rec.subject_id.clone(),
            leg: rec.leg,
            file_path: PathBuf::from(sub).join(EMG_FILE),
            injury_history: rec.injury_history,
        });
    }
    let manifest = DatasetManifest { entries, sample_rate_hz, channel_names: CHANNEL_NAMES.iter().map(|s| s.to_string()).collect() };
    let path = dir.join(MANIFEST_FILE);
    manifest.validate(&path)?;
    write_json(&path, &manifest)?;
    Ok(manifest)
}

pub fn load_manifest(dir: &Path) -> Result<DatasetManifest> {
    let path = dir.join(MANIFEST_FILE);
    let manifest: DatasetManifest = read_json(&path)?;
    manifest.validate(&path)?;
    if manifest.channel_names.iter().zip(CHANNEL_NAMES).any(|(a, b)| a != b) {
        log::warn!("manifest channel names {:?} differ from {:?}; columns are read by position", manifest.channel_names, CHANNEL_NAMES);
    }
    Ok(manifest)
}

pub fn load_dataset(dir: &Path) -> Result<Vec<Recording>> {
    let manifest = load_manifest(dir)?;
    manifest.entries.iter().map(|e| load_recording(e, dir, manifest.sample_rate_hz)).collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| EmgaitError::Json { path: path.into(), source: e })?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| EmgaitError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let r = BufReader::new(open(path)?);
    serde_json::from_reader(r).map_err(|e| EmgaitError::Json { path: path.into(), source: e })
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = create(path)?;
    f.write_all(bytes).map_err(|e| EmgaitError::io(path, e))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let mut v = Vec::new();
    open(path)?.read_to_end(&mut v).map_err(|e| EmgaitError::io(path, e))?;
    Ok(v)
}

// ---- array container ----

pub const ARRAY_MAGIC: &[u8; 8] = b"EMGARR\0\0";
pub const ARRAY_VERSION: u32 = 1;
const DTYPE_F64: u32 = 1;

/// Little-endian `f64` array: magic, `u32` version, `u32` dtype (1 = f64),
/// `u32` rank, `u64` per dimension, then the row-major values.
pub fn write_array(path: &Path, dims: &[usize], data: &[f64]) -> Result<()> {
    if dims.iter().product::<usize>() != data.len() {
        return Err(EmgaitError::Validation(format!("dims {dims:?} do not match {} values", data.len())));
    }
    let mut w = BufWriter::new(create(path)?);
    let mut put = |b: &[u8]| w.write_all(b).map_err(|e| EmgaitError::io(path, e));
    put(ARRAY_MAGIC)?;
    put(&ARRAY_VERSION.to_le_bytes())?;
    put(&DTYPE_F64.to_le_bytes())?;
    put(&(dims.len() as u32).to_le_bytes())?;
    for &d in dims {
        put(&(d as u64).to_le_bytes())?;
    }
    for v in data {
        put(&v.to_le_bytes())?;
    }
    w.flush().map_err(|e| EmgaitError::io(path, e))
}

pub fn read_array(path: &Path) -> Result<(Vec<usize>, Vec<f64>)> {
    let bytes = read_bytes(path)?;
    let bad = |m: &str| EmgaitError::malformed(path, m);
    let mut pos = 0;
    let mut take = |n: usize| -> Result<&[u8]> {
        let s = bytes.get(pos..pos + n).ok_or_else(|| bad("truncated"))?;
        pos += n;
        Ok(s)
    };
    if take(8)? != ARRAY_MAGIC {
        return Err(bad("not an array container"));
    }
    let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap_or_default());
    if u32_at(take(4)?) != ARRAY_VERSION {
        return Err(bad("unsupported container version"));
    }
    if u32_at(take(4)?) != DTYPE_F64 {
        return Err(bad("unsupported dtype"));
    }
    let ndim = u32_at(take(4)?) as usize;
    let mut dims = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        dims.push(u64::from_le_bytes(take(8)?.try_into().unwrap_or_default()) as usize);
    }
    let n = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).ok_or_else(|| bad("dimension overflow"))?;
    let raw = take(n.checked_mul(8).ok_or_else(|| bad("dimension overflow"))?)?;
    let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap_or_default())).collect();
    if pos != bytes.len() {
        return Err(bad("trailing bytes"));
    }
    Ok((dims, data))
}

/// Path of the JSON sidecar that accompanies an array file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

// ---- prepared tensors and feature matrices ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorSidecar {
    pub schema_version: u32,
    pub window_len: usize,
    pub stride: usize,
    pub meta: WindowMeta,
    pub thresholds: Vec<ZcThresholds>,
    pub recordings: Vec<RecordingSummary>,
    pub rejected: Vec<Rejection>,
    pub preprocess: PreprocessConfig,
}

/// Writes the `N × len × 5` window array to `path` and its metadata to the
/// sidecar.
pub fn write_prepared(path: &Path, prep: &PreparedDataset) -> Result<()> {
    let t = &prep.tensor;
    write_array(path, &[t.len(), t.window_len, N_CHANNELS], &t.data)?;
    let sidecar = TensorSidecar {
        schema_version: 1,
        window_len: t.window_len,
        stride: t.stride,
        meta: t.meta.clone(),
        thresholds: prep.thresholds.clone(),
        recordings: prep.recordings.clone(),
        rejected: prep.rejected.clone(),
        preprocess: prep.config.clone(),
    };
    write_json(&sidecar_path(path), &sidecar)
}

pub fn read_prepared(path: &Path) -> Result<PreparedDataset> {
    let (dims, data) = read_array(path)?;
    let side: TensorSidecar = read_json(&sidecar_path(path))?;
    if dims.len() != 3 || dims[1] != side.window_len || dims[2] != N_CHANNELS || dims[0] != side.meta.len() {
        return Err(EmgaitError::malformed(path, format!("dims {dims:?} do not match the sidecar")));
    }
    let tensor = WindowTensor { data, meta: side.meta, window_len: side.window_len, stride: side.stride };
    Ok(PreparedDataset {
        tensor,
        thresholds: side.thresholds,
        recordings: side.recordings,
        rejected: side.rejected,
        config: side.preprocess,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSidecar {
    pub schema_version: u32,
    pub feature_names: Vec<String>,
    pub meta: WindowMeta,
}

pub fn write_features(path: &Path, f: &FeatureMatrix) -> Result<()> {
    write_array(path, &[f.x.rows(), f.x.cols()], f.x.as_slice())?;
    write_json(&sidecar_path(path), &FeatureSidecar { schema_version: 1, feature_names: f.feature_names.clone(), meta: f.meta.clone() })
}

pub fn read_features(path: &Path) -> Result<FeatureMatrix> {
    let (dims, data) = read_array(path)?;
    let side: FeatureSidecar = read_json(&sidecar_path(path))?;
    if dims.len() != 2 || dims[1] != side.feature_names.len() || dims[0] != side.meta.len() {
        return Err(EmgaitError::malformed(path, format!("dims {dims:?} do not match the sidecar")));
    }
    Ok(FeatureMatrix { x: Matrix::from_vec(dims[0], dims[1], data), feature_names: side.feature_names, meta: side.meta })
}
