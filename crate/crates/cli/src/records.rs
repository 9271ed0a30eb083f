//! Run output directory: an append-only `records.jsonl` stream plus CSV tables.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use rydlink::observables::{PotentialRow, WidthRow};

use crate::config::RunConfig;
use crate::error::RunError;

pub const RECORDS: &str = "records.jsonl";
pub const CONFIG: &str = "config.json";
pub const WIDTHS: &str = "widths.csv";
pub const POTENTIAL: &str = "potential.csv";

pub struct Output {
    dir: PathBuf,
    hash: String,
    records: BufWriter<File>,
}

impl Output {
    /// Prepare `dir`. A fresh run truncates the record stream; a resumed run
    /// appends to it.
    pub fn create(dir: &Path, cfg: &RunConfig, resume: bool) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
        let hash = cfg.hash();
        let cfg_path = dir.join(CONFIG);
        let text = serde_json::to_string_pretty(&serde_json::json!({ "config_hash": hash, "config": cfg }))
            .expect("config serialises");
        fs::write(&cfg_path, text).map_err(|e| RunError::io(&cfg_path, e))?;
        let path = dir.join(RECORDS);
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .append(resume)
            .truncate(!resume)
            .open(&path)
            .map_err(|e| RunError::io(&path, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            hash,
            records: BufWriter::new(file),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// Append one JSON object tagged with `kind` and the config hash.
    pub fn record(&mut self, kind: &str, body: impl Serialize) -> Result<(), RunError> {
        let mut obj = Map::new();
        obj.insert("kind".into(), Value::from(kind));
        obj.insert("config_hash".into(), Value::from(self.hash.clone()));
        match serde_json::to_value(body).expect("record serialises") {
            Value::Object(fields) => obj.extend(fields),
            Value::Null => {}
            other => {
                obj.insert("value".into(), other);
            }
        }
        let path = self.dir.join(RECORDS);
        let line = serde_json::to_string(&Value::Object(obj)).expect("record serialises");
        writeln!(self.records, "{line}").map_err(|e| RunError::io(&path, e))?;
        self.records.flush().map_err(|e| RunError::io(&path, e))
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.join(rel)
    }

    pub fn write_text(&self, rel: &str, contents: &str) -> Result<PathBuf, RunError> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| RunError::io(parent, e))?;
        }
        fs::write(&path, contents).map_err(|e| RunError::io(&path, e))?;
        Ok(path)
    }

    pub fn write_table<R: Serialize>(&self, rel: &str, rows: &[R]) -> Result<PathBuf, RunError> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| RunError::io(parent, e))?;
        }
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
        for r in rows {
            w.serialize(r).map_err(|e| csv_err(&path, e))?;
        }
        w.flush().map_err(|e| RunError::io(&path, e))?;
        Ok(path)
    }
}

fn csv_err(path: &Path, e: csv::Error) -> RunError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => RunError::io(path, io),
        other => RunError::Usage(format!("{}: {other:?}", path.display())),
    }
}

pub fn read_table<R: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<R>, RunError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_err(path, e))).collect()
}

/// Width table row with its provenance hash.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthTableRow {
    pub config_hash: String,
    pub delta: f64,
    pub omega: f64,
    pub n_rows: usize,
    pub chi: usize,
    pub d: usize,
    pub r: f64,
    pub k: usize,
    pub w2: f64,
    pub o_broken: f64,
}

impl WidthTableRow {
    pub fn new(hash: &str, row: WidthRow) -> Self {
        Self {
            config_hash: hash.to_string(),
            delta: row.delta,
            omega: row.omega,
            n_rows: row.n_rows,
            chi: row.chi,
            d: row.d,
            r: row.r,
            k: row.k,
            w2: row.w2,
            o_broken: row.o_broken,
        }
    }
}

/// Potential table row with its provenance hash.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialTableRow {
    pub config_hash: String,
    pub delta: f64,
    pub omega: f64,
    pub n_rows: usize,
    pub chi: usize,
    pub d: usize,
    pub r: f64,
    pub v: f64,
    pub charge_weight: f64,
}

impl PotentialTableRow {
    pub fn new(hash: &str, row: PotentialRow) -> Self {
        Self {
            config_hash: hash.to_string(),
            delta: row.delta,
            omega: row.omega,
            n_rows: row.n_rows,
            chi: row.chi,
            d: row.d,
            r: row.r,
            v: row.v,
            charge_weight: row.charge_weight,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_carry_hash_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig::from_toml("experiment = \"ground\"\n").unwrap();
        let mut out = Output::create(dir.path(), &cfg, false).unwrap();
        out.record("energy", serde_json::json!({ "e": 0.1 + 0.2 })).unwrap();
        drop(out);
        let text = fs::read_to_string(dir.path().join(RECORDS)).unwrap();
        let v: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(v["config_hash"], cfg.hash());
        assert_eq!(v["e"].as_f64().unwrap(), 0.1 + 0.2);
    }

    #[test]
    fn width_table_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig::from_toml("experiment = \"ground\"\n").unwrap();
        let out = Output::create(dir.path(), &cfg, false).unwrap();
        let row = WidthTableRow {
            config_hash: out.hash().into(),
            delta: 3.3,
            omega: 0.18,
            n_rows: 3,
            chi: 64,
            d: 4,
            r: 3.4641016151377544,
            k: 1,
            w2: 0.7233099999999999,
            o_broken: 1e-17,
        };
        let p = out.write_table(WIDTHS, std::slice::from_ref(&row)).unwrap();
        assert_eq!(read_table::<WidthTableRow>(&p).unwrap(), vec![row]);
    }
}
