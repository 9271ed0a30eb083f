//! Resumable solver snapshots stored as self-describing JSON.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dmrg::SweepRecord;
use crate::mps::Mps;
use crate::ordering::SiteOrdering;
use crate::scalar::Scalar;

pub const FORMAT: &str = "rydlink-checkpoint/1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint encoding: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported checkpoint format {0:?}")]
    Format(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Checkpoint<T: Scalar> {
    pub format: String,
    pub ordering: SiteOrdering,
    pub chi_max: usize,
    pub sweep_log: Vec<SweepRecord>,
    /// Evolution time reached, zero for ground-state runs.
    pub time: f64,
    /// Free-form run metadata.
    pub meta: serde_json::Value,
    pub state: Mps<T>,
}

impl<T: Scalar> Checkpoint<T> {
    pub fn new(state: Mps<T>, ordering: SiteOrdering, chi_max: usize) -> Self {
        Self {
            format: FORMAT.to_string(),
            ordering,
            chi_max,
            sweep_log: Vec::new(),
            time: 0.0,
            meta: serde_json::Value::Null,
            state,
        }
    }

    /// Write atomically through a temporary sibling file.
    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, serde_json::to_vec(self)?)?;
        fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let c: Self = serde_json::from_slice(&fs::read(path)?)?;
        if c.format != FORMAT {
            return Err(CheckpointError::Format(c.format));
        }
        Ok(c)
    }
}
