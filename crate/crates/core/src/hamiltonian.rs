//! Rydberg Hamiltonian as an explicit term list over the active atoms:
//!
//! ```text
//! H = Σ_i (Ω/2) σˣ_i  -  Δ Σ_i n_i  +  Σ_{i<j} U_ij n_i n_j
//! ```
//!
//! with `U_ij = U / r_ij⁶` truncated to the first three or five shells.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gauge::SpinConfiguration;
use crate::lattice::{CouplingClass, Truncation};
use crate::sector::Sector;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("interaction strength must be positive, got {0}")]
    NonPositiveU(f64),
    #[error("parameter {0} is not finite")]
    NotFinite(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega: f64,
    pub delta: f64,
    #[serde(default = "unit")]
    pub u: f64,
    pub truncation: Truncation,
}

fn unit() -> f64 {
    1.0
}

impl ModelParams {
    pub fn new(omega: f64, delta: f64, u: f64, truncation: Truncation) -> Result<Self, ModelError> {
        for (name, v) in [("omega", omega), ("delta", delta), ("u", u)] {
            if !v.is_finite() {
                return Err(ModelError::NotFinite(name));
            }
        }
        if u <= 0.0 {
            return Err(ModelError::NonPositiveU(u));
        }
        Ok(Self {
            omega,
            delta,
            u,
            truncation,
        })
    }

    /// `U = 1`, parameters given as `Ω/U` and `Δ/U`.
    pub fn ratios(omega_over_u: f64, delta_over_u: f64, truncation: Truncation) -> Self {
        Self {
            omega: omega_over_u,
            delta: delta_over_u,
            u: 1.0,
            truncation,
        }
    }

    pub fn classical(delta_over_u: f64, truncation: Truncation) -> Self {
        Self::ratios(0.0, delta_over_u, truncation)
    }

    pub fn coupling(&self, class: CouplingClass) -> f64 {
        self.u / class.distance_pow6()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairTerm {
    /// Active-atom indices, `i < j`.
    pub i: usize,
    pub j: usize,
    pub class: CouplingClass,
    pub value: f64,
}

/// Term list in active-atom indices. `atoms[k]` is the lattice atom behind
/// active index `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingList {
    pub atoms: Vec<usize>,
    /// Coefficient of `σˣ_k`.
    pub field: Vec<f64>,
    /// Coefficient of `n_k` (that is `-Δ`).
    pub detuning: Vec<f64>,
    pub pairs: Vec<PairTerm>,
}

pub fn build_couplings(sector: &Sector, params: &ModelParams) -> CouplingList {
    let atoms = sector.active_atoms().to_vec();
    let n = atoms.len();
    let pairs = sector
        .lattice()
        .neighbor_pairs(params.truncation)
        .into_iter()
        .filter_map(|p| {
            let i = sector.active_index(p.i)?;
            let j = sector.active_index(p.j)?;
            Some(PairTerm {
                i: i.min(j),
                j: i.max(j),
                class: p.class,
                value: params.coupling(p.class),
            })
        })
        .collect();
    CouplingList {
        atoms,
        field: vec![params.omega / 2.0; n],
        detuning: vec![-params.delta; n],
        pairs,
    }
}

impl CouplingList {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Diagonal energy of active-atom occupations.
    pub fn diagonal_energy(&self, bits: &[bool]) -> f64 {
        let mut e = 0.0;
        for (k, &b) in bits.iter().enumerate() {
            if b {
                e += self.detuning[k];
            }
        }
        for p in &self.pairs {
            if bits[p.i] && bits[p.j] {
                e += p.value;
            }
        }
        e
    }

    /// Diagonal energy of basis state `index` (active atom `k` is bit `k`).
    pub fn diagonal_energy_of_index(&self, index: usize) -> f64 {
        let bits: Vec<bool> = (0..self.len()).map(|k| index >> k & 1 == 1).collect();
        self.diagonal_energy(&bits)
    }

    /// Golden-file record: one-body coefficients followed by sorted pair
    /// triples, all values to 15 significant digits.
    pub fn to_record(&self) -> String {
        let mut out = String::new();
        for k in 0..self.len() {
            let _ = writeln!(
                out,
                "site {k} atom {} field {:.14e} detuning {:.14e}",
                self.atoms[k], self.field[k], self.detuning[k]
            );
        }
        let mut pairs: Vec<_> = self.pairs.iter().map(|p| (p.i, p.j, p.value)).collect();
        pairs.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for (i, j, v) in pairs {
            let _ = writeln!(out, "pair {i} {j} {v:.14e}");
        }
        out
    }
}

/// `-Δ Σ n_i + Σ U_ij n_i n_j` on a full-lattice configuration. Removed atoms
/// carry no terms.
pub fn classical_energy(config: &SpinConfiguration, couplings: &CouplingList) -> f64 {
    let bits: Vec<bool> = couplings.atoms.iter().map(|&a| config.is_rydberg(a)).collect();
    couplings.diagonal_energy(&bits)
}

fn diagonal_terms(
    h: &CouplingList,
    config: &SpinConfiguration,
) -> HashMap<(usize, usize), f64> {
    let mut terms = HashMap::new();
    for (k, &a) in h.atoms.iter().enumerate() {
        if config.is_rydberg(a) {
            *terms.entry((a, a)).or_insert(0.0) += h.detuning[k];
        }
    }
    for p in &h.pairs {
        let (a, b) = (h.atoms[p.i], h.atoms[p.j]);
        if config.is_rydberg(a) && config.is_rydberg(b) {
            *terms.entry((a.min(b), a.max(b))).or_insert(0.0) += p.value;
        }
    }
    terms
}

/// `E_a(c_a) - E_b(c_b)` summed term by term, matching terms by lattice atoms.
/// Avoids cancellation between two large totals.
pub fn energy_difference(
    h_a: &CouplingList,
    config_a: &SpinConfiguration,
    h_b: &CouplingList,
    config_b: &SpinConfiguration,
) -> f64 {
    let ta = diagonal_terms(h_a, config_a);
    let tb = diagonal_terms(h_b, config_b);
    let mut keys: Vec<_> = ta.keys().chain(tb.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    let mut diffs: Vec<f64> = keys
        .into_iter()
        .map(|k| ta.get(&k).unwrap_or(&0.0) - tb.get(&k).unwrap_or(&0.0))
        .filter(|d| *d != 0.0)
        .collect();
    diffs.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    diffs.iter().sum()
}
