//! Backend dispatch shared by the experiment runners.

use std::path::PathBuf;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use rydlink::{CouplingList, Sector, SpinConfiguration, StateExpectations};
use rydlink_tn::checkpoint::Checkpoint;
use rydlink_tn::dmrg::{dmrg_ground_state, DmrgConfig, SweepRecord};
use rydlink_tn::ed::{self, to_sparse, SparseHamiltonian, DEFAULT_ED_CAP};
use rydlink_tn::mpo::{to_mpo, Mpo};
use rydlink_tn::mps::Mps;
use rydlink_tn::ordering::SiteOrdering;

use crate::config::{Backend, RunConfig};
use crate::error::RunError;

/// Where and when a solver snapshots itself.
#[derive(Clone, Debug)]
pub struct CheckpointPlan {
    pub path: PathBuf,
    pub every: usize,
    pub resume: bool,
    pub config_hash: String,
}

impl CheckpointPlan {
    fn matches(&self, meta: &serde_json::Value) -> bool {
        meta.get("config_hash").and_then(|h| h.as_str()) == Some(self.config_hash.as_str())
    }
}

pub enum GroundVector {
    Dense(DMatrix<f64>),
    Mps(Mps<f64>),
}

pub struct GroundState {
    pub energy: f64,
    pub expect: StateExpectations,
    pub sweeps: Vec<SweepRecord>,
    pub vector: GroundVector,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SolverSummary {
    pub energy: f64,
    pub sweeps: usize,
    pub max_bond: Option<usize>,
}

impl GroundState {
    pub fn summary(&self) -> SolverSummary {
        SolverSummary {
            energy: self.energy,
            sweeps: self.sweeps.len(),
            max_bond: self.sweeps.last().map(|s| s.max_bond),
        }
    }
}

/// One Hamiltonian in the representation its backend needs.
pub struct Problem<'a> {
    pub sector: &'a Sector,
    pub couplings: CouplingList,
    pub ordering: SiteOrdering,
    pub backend: Backend,
    sparse: Option<SparseHamiltonian>,
    mpo: Option<Mpo>,
}

impl<'a> Problem<'a> {
    pub fn new(sector: &'a Sector, couplings: CouplingList, backend: Backend) -> Result<Self, RunError> {
        let ordering = SiteOrdering::snake(sector);
        let (sparse, mpo) = match backend {
            Backend::Ed => (
                Some(to_sparse(&couplings, DEFAULT_ED_CAP).map_err(|e| RunError::Usage(e.to_string()))?),
                None,
            ),
            Backend::Mps => (None, Some(to_mpo(&couplings, &ordering))),
        };
        Ok(Self {
            sector,
            couplings,
            ordering,
            backend,
            sparse,
            mpo,
        })
    }

    pub fn sparse(&self) -> Option<&SparseHamiltonian> {
        self.sparse.as_ref()
    }

    pub fn mpo(&self) -> Option<&Mpo> {
        self.mpo.as_ref()
    }

    /// Product state of `config` along the chain.
    pub fn product_mps(&self, config: &SpinConfiguration) -> Mps<f64> {
        let active = self.sector.active_bits(config);
        Mps::product(&self.ordering.chain.iter().map(|&k| active[k]).collect::<Vec<_>>())
    }

    pub fn ground_state(
        &self,
        cfg: &RunConfig,
        label: &str,
        plan: Option<&CheckpointPlan>,
        mut on_sweep: impl FnMut(&SweepRecord),
    ) -> Result<GroundState, RunError> {
        let context = label.to_string();
        if let Some(sp) = &self.sparse {
            let (psi, energy) = sp.ground_state(cfg.seed).map_err(|e| RunError::solver(&context, e))?;
            return Ok(GroundState {
                energy,
                expect: ed::expectations(self.sector, &psi),
                sweeps: Vec::new(),
                vector: GroundVector::Dense(psi),
            });
        }
        let mpo = self.mpo.as_ref().expect("mps backend has an MPO");
        let resumed = plan
            .filter(|p| p.resume && p.path.exists())
            .map(|p| Checkpoint::<f64>::load(&p.path).map(|c| (p, c)))
            .transpose()
            .map_err(|e| RunError::solver(&context, e))?
            .filter(|(p, c)| p.matches(&c.meta) && c.ordering == self.ordering);
        let (init, mut log) = match resumed {
            Some((_, c)) => (c.state, c.sweep_log),
            None => {
                let mut init = self.product_mps(self.sector.reference());
                if cfg.init_noise > 0.0 {
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                    init.perturb(cfg.init_noise, &mut rng);
                }
                (init, Vec::new())
            }
        };
        let offset = log.len();
        let dmrg = DmrgConfig {
            chi_max: cfg.chi,
            energy_tol: cfg.energy_tol,
            svd_cutoff: cfg.svd_cutoff,
            max_sweeps: cfg.max_sweeps,
            ..Default::default()
        };
        let mut save_err = None;
        let res = dmrg_ground_state(mpo, init, &dmrg, |state, rec| {
            let rec = SweepRecord {
                sweep: rec.sweep + offset,
                ..*rec
            };
            log.push(rec);
            on_sweep(&rec);
            if let Some(p) = plan {
                if p.every > 0 && rec.sweep % p.every == 0 && save_err.is_none() {
                    let mut c = Checkpoint::new(state.clone(), self.ordering.clone(), cfg.chi);
                    c.sweep_log = log.clone();
                    c.meta = serde_json::json!({ "config_hash": p.config_hash, "label": label });
                    save_err = c.save(&p.path).err();
                }
            }
        });
        if let Some(e) = save_err {
            return Err(RunError::solver(&context, e));
        }
        let res = res.map_err(|e| RunError::solver(&context, e))?;
        let expect = res
            .state
            .expectations(self.sector, &self.ordering)
            .map_err(|e| RunError::solver(&context, e))?;
        Ok(GroundState {
            energy: res.energy,
            expect,
            sweeps: log,
            vector: GroundVector::Mps(res.state),
        })
    }
}

/// Complex basis or product state for time evolution.
pub fn dense_product(sector: &Sector, config: &SpinConfiguration) -> DMatrix<Complex64> {
    ed::basis_state(sector, &sector.active_bits(config))
}
