//! Two-site DMRG ground-state search.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{apply_one, apply_two, grow_left, grow_right, left_edge, right_edge, Env};
use crate::krylov::{lowest_eigenpair, KrylovError, LanczosOptions};
use crate::mpo::Mpo;
use crate::mps::{Absorb, Mps};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DmrgConfig {
    pub chi_max: usize,
    /// Convergence threshold on `|E_sweep − E_prev|`.
    pub energy_tol: f64,
    pub svd_cutoff: f64,
    pub max_sweeps: usize,
    pub krylov_dim: usize,
    pub krylov_restarts: usize,
}

impl Default for DmrgConfig {
    fn default() -> Self {
        Self {
            chi_max: 900,
            energy_tol: 1e-9,
            svd_cutoff: 1e-10,
            max_sweeps: 200,
            krylov_dim: 24,
            krylov_restarts: 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub sweep: usize,
    pub energy: f64,
    /// Change from the previous sweep, or from the starting state for the first.
    pub delta: f64,
    pub max_bond: usize,
    pub max_discarded: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum DmrgError {
    #[error("MPO has {mpo} sites, state has {mps}")]
    LengthMismatch { mpo: usize, mps: usize },
    #[error("DMRG did not converge in {sweeps} sweeps (last |ΔE| = {last_delta:.3e})")]
    NotConverged {
        sweeps: usize,
        last_delta: f64,
        energy: f64,
    },
    #[error(transparent)]
    Krylov(#[from] KrylovError),
}

#[derive(Clone, Debug)]
pub struct DmrgResult {
    pub state: Mps<f64>,
    pub energy: f64,
    pub sweeps: Vec<SweepRecord>,
}

/// Sweep until the energy change drops below `energy_tol`. `on_sweep` sees
/// the state after every full sweep, e.g. for checkpointing.
pub fn dmrg_ground_state(
    mpo: &Mpo,
    init: Mps<f64>,
    cfg: &DmrgConfig,
    mut on_sweep: impl FnMut(&Mps<f64>, &SweepRecord),
) -> Result<DmrgResult, DmrgError> {
    let n = init.len();
    if mpo.len() != n {
        return Err(DmrgError::LengthMismatch { mpo: mpo.len(), mps: n });
    }
    let lanczos = LanczosOptions {
        krylov_dim: cfg.krylov_dim,
        max_restarts: cfg.krylov_restarts,
        tol: 1e-12,
    };
    let mut psi = init;
    psi.canonicalize();
    if n == 1 {
        let (l, r) = (left_edge(mpo.sites[0].wl), right_edge(mpo.sites[0].wr));
        let e = lowest_eigenpair(|v| apply_one(&l, &mpo.sites[0], &r, v), &psi.stacked(0), &lanczos)?;
        psi.set_stacked(0, &e.vector);
        let rec = SweepRecord { sweep: 1, energy: e.value, delta: 0.0, max_bond: 1, max_discarded: 0.0 };
        on_sweep(&psi, &rec);
        return Ok(DmrgResult { state: psi, energy: e.value, sweeps: vec![rec] });
    }
    let mut left: Vec<Env<f64>> = vec![Vec::new(); n + 1];
    let mut right: Vec<Env<f64>> = vec![Vec::new(); n + 1];
    left[0] = left_edge(mpo.sites[0].wl);
    right[n] = right_edge(mpo.sites[n - 1].wr);
    for c in (1..n).rev() {
        right[c] = grow_right(&right[c + 1], psi.site(c), &mpo.sites[c]);
    }
    let mut log = Vec::new();
    // The first sweep is measured against the starting state's energy.
    let mut prev = psi.expect_mpo(mpo).expect("lengths checked");
    let mut energy = f64::INFINITY;
    for sweep in 1..=cfg.max_sweeps {
        let mut max_discarded: f64 = 0.0;
        for c in 0..n - 1 {
            let (e, tr) = optimise_pair(&mut psi, mpo, &left[c], &right[c + 2], c, cfg, &lanczos, Absorb::Right)?;
            energy = e;
            max_discarded = max_discarded.max(tr);
            left[c + 1] = grow_left(&left[c], psi.site(c), &mpo.sites[c]);
        }
        for c in (0..n - 1).rev() {
            let (e, tr) = optimise_pair(&mut psi, mpo, &left[c], &right[c + 2], c, cfg, &lanczos, Absorb::Left)?;
            energy = e;
            max_discarded = max_discarded.max(tr);
            right[c + 1] = grow_right(&right[c + 2], psi.site(c + 1), &mpo.sites[c + 1]);
        }
        let delta = (energy - prev).abs();
        let rec = SweepRecord {
            sweep,
            energy,
            delta,
            max_bond: psi.max_bond(),
            max_discarded,
        };
        log.push(rec);
        on_sweep(&psi, &rec);
        if delta < cfg.energy_tol {
            return Ok(DmrgResult { state: psi, energy, sweeps: log });
        }
        prev = energy;
    }
    Err(DmrgError::NotConverged {
        sweeps: cfg.max_sweeps,
        last_delta: log.last().map_or(f64::INFINITY, |r| r.delta),
        energy,
    })
}

#[allow(clippy::too_many_arguments)]
fn optimise_pair(
    psi: &mut Mps<f64>,
    mpo: &Mpo,
    l: &Env<f64>,
    r: &Env<f64>,
    c: usize,
    cfg: &DmrgConfig,
    lanczos: &LanczosOptions,
    absorb: Absorb,
) -> Result<(f64, f64), KrylovError> {
    let (w1, w2) = (&mpo.sites[c], &mpo.sites[c + 1]);
    let start = psi.theta(c);
    let e = lowest_eigenpair(|v| apply_two(l, w1, w2, r, v), &start, lanczos)?;
    let tr = psi.split_theta(c, e.vector, cfg.chi_max, cfg.svd_cutoff, absorb);
    Ok((e.value, tr.discarded))
}
