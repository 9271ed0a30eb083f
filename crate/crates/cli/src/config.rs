//! Run configuration: one experiment per TOML file, with lists allowed on the
//! sweep axes (`delta`, `d`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rydlink::{TransversePosition, Truncation};

use crate::error::RunError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Ed,
    Mps,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Ed => "ed",
            Backend::Mps => "mps",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Ground,
    /// Same as `ground`; kept for configs that scan a list of detunings.
    Sweep,
    Quench,
    MapCheck,
    Analyze,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// Classical product state of the sector (vacuum or rigid string).
    Classical,
    /// Ground state of the evolution Hamiltonian itself.
    Ground,
}

fn d_backend() -> Backend {
    Backend::Mps
}
fn d_truncation() -> Truncation {
    Truncation::Three
}
fn d_position() -> TransversePosition {
    TransversePosition::Boundary
}
fn d_chi() -> usize {
    128
}
fn d_energy_tol() -> f64 {
    1e-9
}
fn d_svd_cutoff() -> f64 {
    1e-10
}
fn d_max_sweeps() -> usize {
    200
}
fn d_omega_t_final() -> f64 {
    5.0
}
fn d_stride() -> usize {
    10
}
fn d_checkpoint_every() -> usize {
    10
}
fn d_samples() -> usize {
    10_000
}
fn d_exhaustive_max() -> usize {
    16
}
fn d_initial() -> InitialState {
    InitialState::Classical
}
fn d_n_min() -> usize {
    rydlink::fit::N_MIN
}
fn d_charge_weight_max() -> f64 {
    f64::INFINITY
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub n_cols: Option<usize>,
    pub n_rows: Option<usize>,
    /// `Ω/U`.
    pub omega: Option<f64>,
    /// `Δ/U`, one value or a list.
    pub delta: Option<OneOrMany<f64>>,
    /// Charge separations; omitted for vacuum-only runs.
    pub d: Option<OneOrMany<usize>>,
    #[serde(default = "d_position")]
    pub position: TransversePosition,
    #[serde(default = "d_truncation")]
    pub truncation: Truncation,
    #[serde(default = "d_backend")]
    pub backend: Backend,
    #[serde(default = "d_chi")]
    pub chi: usize,
    #[serde(default = "d_energy_tol")]
    pub energy_tol: f64,
    #[serde(default = "d_svd_cutoff")]
    pub svd_cutoff: f64,
    #[serde(default = "d_max_sweeps")]
    pub max_sweeps: usize,
    /// Amplitude of random noise added to the classical DMRG start.
    #[serde(default)]
    pub init_noise: f64,
    /// Time step in units of `1/U`; defaults to `0.025/Ω`.
    pub dt: Option<f64>,
    #[serde(default = "d_omega_t_final")]
    pub omega_t_final: f64,
    #[serde(default = "d_stride")]
    pub stride: usize,
    #[serde(default = "d_initial")]
    pub initial_state: InitialState,
    #[serde(default = "d_checkpoint_every")]
    pub checkpoint_every: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_samples")]
    pub samples: usize,
    /// Enumerate every configuration up to this many atoms.
    #[serde(default = "d_exhaustive_max")]
    pub exhaustive_max_atoms: usize,
    /// Fault injection: dual links whose stagger is flipped before auditing.
    #[serde(default)]
    pub corrupt_links: Vec<usize>,
    /// Result directories or table files read by `analyze`.
    #[serde(default)]
    pub inputs: Vec<PathBuf>,
    #[serde(default = "d_n_min")]
    pub n_min: usize,
    /// Potential points with a larger dynamical-charge weight are dropped.
    #[serde(default = "d_charge_weight_max")]
    pub charge_weight_max: f64,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Usage(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Usage(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        // Relative inputs are resolved against the config file.
        let base = path.parent().unwrap_or(Path::new("."));
        for p in &mut cfg.inputs {
            if p.is_relative() {
                *p = base.join(&p);
            }
        }
        Ok(cfg)
    }

    /// SHA-256 over the canonical JSON encoding of the effective config.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serialises");
        Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn lattice_dims(&self) -> Result<(usize, usize), RunError> {
        match (self.n_cols, self.n_rows) {
            (Some(c), Some(r)) => Ok((c, r)),
            _ => Err(RunError::Usage("n_cols and n_rows are required".into())),
        }
    }

    pub fn omega(&self) -> Result<f64, RunError> {
        self.omega.ok_or_else(|| RunError::Usage("omega is required".into()))
    }

    pub fn deltas(&self) -> Result<Vec<f64>, RunError> {
        let v = self.delta.as_ref().map(OneOrMany::to_vec).unwrap_or_default();
        if v.is_empty() {
            return Err(RunError::Usage("delta is required".into()));
        }
        Ok(v)
    }

    pub fn separations(&self) -> Vec<usize> {
        self.d.as_ref().map(OneOrMany::to_vec).unwrap_or_default()
    }

    /// Time step, defaulting to `0.025/Ω`.
    pub fn time_step(&self) -> Result<f64, RunError> {
        match self.dt {
            Some(dt) if dt > 0.0 => Ok(dt),
            Some(dt) => Err(RunError::Usage(format!("dt must be positive, got {dt}"))),
            None => {
                let omega = self.omega()?;
                if omega == 0.0 {
                    return Err(RunError::Usage("dt is required when omega = 0".into()));
                }
                Ok(0.025 / omega.abs())
            }
        }
    }

    /// Check that this file describes the experiment a subcommand runs.
    pub fn expect(&self, allowed: &[Experiment]) -> Result<(), RunError> {
        if allowed.contains(&self.experiment) {
            Ok(())
        } else {
            Err(RunError::Usage(format!(
                "config describes experiment {:?}, expected one of {allowed:?}",
                self.experiment
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_scalars_parse() {
        let c = RunConfig::from_toml(
            "experiment = \"ground\"\nn_cols = 9\nn_rows = 3\nomega = 0.18\ndelta = [3.3, 3.2]\nd = 4\n",
        )
        .unwrap();
        assert_eq!(c.deltas().unwrap(), vec![3.3, 3.2]);
        assert_eq!(c.separations(), vec![4]);
        assert_eq!(c.backend, Backend::Mps);
        assert!((c.time_step().unwrap() - 0.025 / 0.18).abs() < 1e-15);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            RunConfig::from_toml("experiment = \"ground\"\nbogus = 1\n"),
            Err(RunError::Usage(_))
        ));
    }

    #[test]
    fn hash_tracks_every_field() {
        let a = RunConfig::from_toml("experiment = \"quench\"\nseed = 1\n").unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 2;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
