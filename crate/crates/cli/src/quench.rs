//! Real-time evolution from the classical rigid string (or a prepared ground
//! state), tracking string breaking and the transverse width.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use rydlink::gauge::{snapshot_of_config, snapshot_of_state, GaugeSnapshot};
use rydlink::observables::{epsilon_profile, o_broken, width_profile};
use rydlink::{build_couplings, vacuum_configuration, ModelParams, Sector, StateExpectations};
use rydlink_tn::checkpoint::Checkpoint;
use rydlink_tn::ed;
use rydlink_tn::mps::Mps;
use rydlink_tn::tdvp::{Tdvp, TdvpConfig};

use crate::config::{Experiment, InitialState, RunConfig};
use crate::error::RunError;
use crate::ground::{lattice, tag, write_snapshot};
use crate::records::Output;
use crate::solve::{dense_product, GroundVector, Problem};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuenchRow {
    pub delta: f64,
    pub d: Option<usize>,
    pub step: usize,
    pub t: f64,
    pub omega_t: f64,
    pub o_broken: Option<f64>,
    pub w2_k0: Option<f64>,
    pub w2_k1: Option<f64>,
    pub w2_k2: Option<f64>,
    pub energy: f64,
    pub norm: f64,
    pub max_bond: Option<usize>,
    pub discarded: f64,
}

/// Densities of every lattice atom, for direct comparison between runs.
#[derive(Clone, Debug, Default)]
pub struct QuenchSeries {
    pub rows: Vec<QuenchRow>,
    pub densities: Vec<Vec<Option<f64>>>,
    pub e_field: Vec<Vec<f64>>,
}

enum Engine<'a> {
    Dense {
        h: &'a ed::SparseHamiltonian,
        v: DMatrix<Complex64>,
        time: f64,
        dt: f64,
    },
    Mps(Box<Tdvp<'a>>),
}

impl Engine<'_> {
    fn step(&mut self) -> Result<(f64, usize), String> {
        match self {
            Engine::Dense { h, v, time, dt } => {
                *v = h.evolve(v, *dt).map_err(|e| e.to_string())?.0;
                *time += *dt;
                Ok((0.0, 0))
            }
            Engine::Mps(t) => {
                let info = t.step().map_err(|e| e.to_string())?;
                Ok((info.discarded, info.max_bond))
            }
        }
    }

    fn time(&self) -> f64 {
        match self {
            Engine::Dense { time, .. } => *time,
            Engine::Mps(t) => t.time(),
        }
    }

    fn measure(&self, problem: &Problem) -> Result<(StateExpectations, f64, f64), String> {
        match self {
            Engine::Dense { h, v, .. } => Ok((ed::expectations(problem.sector, v), h.expectation(v), v.norm())),
            Engine::Mps(t) => {
                let s = t.state();
                let mpo = problem.mpo().expect("mps backend has an MPO");
                let e = s.expect_mpo(mpo).map_err(|e| e.to_string())?;
                let x = s.expectations(problem.sector, &problem.ordering).map_err(|e| e.to_string())?;
                Ok((x, e, s.norm()))
            }
        }
    }
}

pub fn run_quench(cfg: &RunConfig, out: &mut Output, resume: bool) -> Result<Vec<QuenchSeries>, RunError> {
    cfg.expect(&[Experiment::Quench])?;
    let lat = lattice(cfg)?;
    let omega = cfg.omega()?;
    if omega <= 0.0 {
        return Err(RunError::Usage("quench needs omega > 0".into()));
    }
    let dt = cfg.time_step()?;
    let n_steps = (cfg.omega_t_final / (omega * dt)).round() as usize;
    let stride = cfg.stride.max(1);
    let vac_sector = Sector::vacuum(lat.clone());
    let vac_ref = snapshot_of_config(&vac_sector, &vacuum_configuration(&lat));
    let ds: Vec<Option<usize>> = match cfg.separations() {
        v if v.is_empty() => vec![None],
        v => v.into_iter().map(Some).collect(),
    };
    let mut all = Vec::new();
    for delta in cfg.deltas()? {
        let params = ModelParams::ratios(omega, delta, cfg.truncation);
        for &d in &ds {
            let sector = match d {
                Some(d) => Sector::charged(lat.clone(), d, cfg.position).map_err(|e| RunError::Usage(e.to_string()))?,
                None => vac_sector.clone(),
            };
            let label = match d {
                Some(d) => format!("quench_delta{}_d{d}", tag(delta)),
                None => format!("quench_delta{}_vacuum", tag(delta)),
            };
            let problem = Problem::new(&sector, build_couplings(&sector, &params), cfg.backend)?;
            let series = evolve(cfg, out, &problem, &vac_ref, &label, delta, d, dt, n_steps, stride, resume)?;
            all.push(series);
        }
    }
    Ok(all)
}

#[allow(clippy::too_many_arguments)]
fn evolve(
    cfg: &RunConfig,
    out: &mut Output,
    problem: &Problem,
    vac_ref: &GaugeSnapshot,
    label: &str,
    delta: f64,
    d: Option<usize>,
    dt: f64,
    n_steps: usize,
    stride: usize,
    resume: bool,
) -> Result<QuenchSeries, RunError> {
    let omega = cfg.omega()?;
    let sector = problem.sector;
    let fail = |e: String| RunError::solver(label, e);
    let ckpt_path = out.path(&format!("checkpoints/{label}.json"));
    let tdvp_cfg = TdvpConfig {
        chi_max: cfg.chi,
        dt,
        svd_cutoff: cfg.svd_cutoff,
        krylov_tol: 1e-12,
    };

    let mut start_step = 0;
    let mut engine = match problem.sparse() {
        Some(h) => {
            let v = match cfg.initial_state {
                InitialState::Classical => dense_product(sector, sector.reference()),
                InitialState::Ground => match problem.ground_state(cfg, label, None, |_| {})?.vector {
                    GroundVector::Dense(v) => v.map(Complex64::from),
                    GroundVector::Mps(_) => unreachable!("dense backend"),
                },
            };
            Engine::Dense { h, v, time: 0.0, dt }
        }
        None => {
            let mpo = problem.mpo().expect("mps backend has an MPO");
            let resumed = if resume && ckpt_path.exists() {
                let c = Checkpoint::<Complex64>::load(&ckpt_path).map_err(|e| fail(e.to_string()))?;
                let ok = c.meta.get("config_hash").and_then(|h| h.as_str()) == Some(out.hash())
                    && c.ordering == problem.ordering;
                ok.then_some(c)
            } else {
                None
            };
            let (state, time) = match resumed {
                Some(c) => {
                    start_step = c.meta.get("step").and_then(|s| s.as_u64()).unwrap_or(0) as usize;
                    (c.state, c.time)
                }
                None => {
                    let init: Mps<Complex64> = match cfg.initial_state {
                        InitialState::Classical => problem.product_mps(sector.reference()).to_complex(),
                        InitialState::Ground => match problem.ground_state(cfg, label, None, |_| {})?.vector {
                            GroundVector::Mps(m) => m.to_complex(),
                            GroundVector::Dense(_) => unreachable!("mps backend"),
                        },
                    };
                    (init, 0.0)
                }
            };
            let mut t = Tdvp::new(mpo, state, tdvp_cfg).map_err(|e| fail(e.to_string()))?;
            t.set_time(time);
            Engine::Mps(Box::new(t))
        }
    };
    if let Some(parent) = ckpt_path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| RunError::io(parent, e))?;
    }

    let mut series = QuenchSeries::default();
    let mut discarded = 0.0;
    let mut max_bond = None;
    for step in start_step..=n_steps {
        if step > start_step {
            let (disc, bond) = engine.step().map_err(fail)?;
            discarded += disc;
            if matches!(engine, Engine::Mps(_)) {
                max_bond = Some(bond);
            }
        }
        if let (Engine::Mps(t), true) = (&engine, step > start_step && cfg.checkpoint_every > 0) {
            if step % cfg.checkpoint_every == 0 {
                let mut c = Checkpoint::new(t.state().clone(), problem.ordering.clone(), cfg.chi);
                c.time = t.time();
                c.meta = serde_json::json!({ "config_hash": out.hash(), "label": label, "step": step });
                c.save(&ckpt_path).map_err(|e| fail(e.to_string()))?;
            }
        }
        if step % stride != 0 && step != n_steps {
            continue;
        }
        let (expect, energy, norm) = engine.measure(problem).map_err(fail)?;
        let snap = snapshot_of_state(sector, &expect).map_err(|e| fail(e.to_string()))?;
        let broken = match sector.placement() {
            Some(p) => Some(o_broken(&expect, &p.s_up).map_err(|e| fail(e.to_string()))?),
            None => None,
        };
        let mut w2: BTreeMap<usize, f64> = BTreeMap::new();
        if sector.placement().is_some() {
            let eps = epsilon_profile(&snap, vac_ref).map_err(|e| RunError::Invariant(e.to_string()))?;
            if let Ok(profile) = width_profile(sector, &eps) {
                for s in &profile.sublattices {
                    w2.insert(s.k, s.w2_mid());
                }
            }
        }
        let t = engine.time();
        let row = QuenchRow {
            delta,
            d,
            step,
            t,
            omega_t: omega * t,
            o_broken: broken,
            w2_k0: w2.get(&0).copied(),
            w2_k1: w2.get(&1).copied(),
            w2_k2: w2.get(&2).copied(),
            energy,
            norm,
            max_bond,
            discarded,
        };
        out.record("quench_step", &row)?;
        write_snapshot(out, sector, &snap, &format!("{label}_step{step:06}"))?;
        series.densities.push(expect.density.clone());
        series.e_field.push(snap.e_field.clone());
        series.rows.push(row);
    }
    out.write_table(&format!("{label}.csv"), &series.rows)?;
    Ok(series)
}
