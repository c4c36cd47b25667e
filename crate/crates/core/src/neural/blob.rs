//! Binary container for network weights.
//!
//! Layout, little-endian: 8-byte magic, `u32` format version, `u32` length
//! of the JSON config followed by its bytes, `u32` tensor count, then per
//! tensor a `u64` element count and that many `f64` values.

use alloc::format;
use alloc::vec::Vec;

use super::model::{tensor_sizes, DcnnConfig, DcnnModel, Params, N_TENSORS};
use crate::{Error, Result};

pub const BLOB_MAGIC: &[u8; 8] = b"EMGDCNN\0";
pub const BLOB_VERSION: u32 = 1;

impl DcnnModel {
    pub fn to_blob(&self) -> Vec<u8> {
        let config = serde_json::to_vec(&self.config).unwrap_or_default();
        let mut out = Vec::with_capacity(32 + config.len() + 8 * self.params.n_params() + 8 * N_TENSORS);
        out.extend_from_slice(BLOB_MAGIC);
        out.extend_from_slice(&BLOB_VERSION.to_le_bytes());
        out.extend_from_slice(&(config.len() as u32).to_le_bytes());
        out.extend_from_slice(&config);
        out.extend_from_slice(&(N_TENSORS as u32).to_le_bytes());
        for t in self.params.tensors() {
            out.extend_from_slice(&(t.len() as u64).to_le_bytes());
            for v in t.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_blob(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != BLOB_MAGIC {
            return Err(Error::CorruptBlob("bad magic".into()));
        }
        let version = r.u32()?;
        if version != BLOB_VERSION {
            return Err(Error::CorruptBlob(format!("unsupported version {version}")));
        }
        let cfg_len = r.u32()? as usize;
        let config: DcnnConfig =
            serde_json::from_slice(r.take(cfg_len)?).map_err(|e| Error::CorruptBlob(format!("config: {e}")))?;
        let dims = config.validate().map_err(|e| Error::CorruptBlob(format!("{e}")))?;
        let n = r.u32()? as usize;
        if n != N_TENSORS {
            return Err(Error::CorruptBlob(format!("{n} tensors, expected {N_TENSORS}")));
        }
        let mut params = Params::zeros(&config, &dims);
        for (t, expected) in params.tensors_mut().into_iter().zip(tensor_sizes(&config, &dims)) {
            let len = r.u64()?;
            if len != expected as u64 {
                return Err(Error::CorruptBlob(format!("tensor of {len} values, expected {expected}")));
            }
            for v in t.iter_mut() {
                *v = f64::from_le_bytes(r.take(8)?.try_into().map_err(|_| Error::CorruptBlob("truncated".into()))?);
            }
        }
        if r.pos != bytes.len() {
            return Err(Error::CorruptBlob(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Self { config, dims, params })
    }
}

/// Serialized freshly initialised weights, shared by every model trained in
/// one trial.
pub fn save_initial_weights(config: DcnnConfig, seed: u64) -> Result<Vec<u8>> {
    Ok(DcnnModel::new(config, seed)?.to_blob())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| Error::CorruptBlob("truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap_or_default()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap_or_default()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let m = DcnnModel::new(DcnnConfig { learning_rate: 0.1 + 0.2, ..Default::default() }, 11).unwrap();
        let blob = m.to_blob();
        assert_eq!(DcnnModel::from_blob(&blob).unwrap(), m);
    }

    #[test]
    fn corruption_is_detected() {
        let blob = save_initial_weights(DcnnConfig::default(), 1).unwrap();
        let mut bad = blob.clone();
        bad[0] = b'X';
        assert!(matches!(DcnnModel::from_blob(&bad), Err(Error::CorruptBlob(_))));
        assert!(matches!(DcnnModel::from_blob(&blob[..blob.len() - 3]), Err(Error::CorruptBlob(_))));
        let mut extra = blob.clone();
        extra.push(0);
        assert!(matches!(DcnnModel::from_blob(&extra), Err(Error::CorruptBlob(_))));
        let mut ver = blob;
        ver[8] = 9;
        assert!(matches!(DcnnModel::from_blob(&ver), Err(Error::CorruptBlob(_))));
    }
}
