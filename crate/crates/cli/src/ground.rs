//! Ground-state sweeps: vacuum and charged sectors, flux profiles, widths and
//! the static potential.

use std::collections::BTreeMap;

use serde::Serialize;

use rydlink::gauge::{snapshot_of_state, GaugeSnapshot};
use rydlink::observables::{
    dynamical_charge_weight, epsilon_profile, o_broken, potential_point, width_profile, PotentialRow,
    RunMeta, WidthProfile, WidthRow,
};
use rydlink::{build_couplings, Lattice, ModelParams, Sector};

use crate::config::{Backend, Experiment, RunConfig};
use crate::error::RunError;
use crate::records::{Output, PotentialTableRow, WidthTableRow, POTENTIAL, WIDTHS};
use crate::solve::{CheckpointPlan, GroundState, Problem};

/// Everything a ground run produced, for callers that want it in memory.
#[derive(Clone, Debug, Default)]
pub struct GroundOutcome {
    pub vacuum_energy: BTreeMap<String, f64>,
    pub widths: Vec<WidthTableRow>,
    pub potential: Vec<PotentialTableRow>,
    pub profiles: Vec<(f64, usize, WidthProfile)>,
}

#[derive(Serialize)]
struct SectorRecord<'a> {
    sector: &'a str,
    delta: f64,
    omega: f64,
    d: Option<usize>,
    energy: f64,
    sweeps: usize,
    max_bond: Option<usize>,
}

pub fn tag(x: f64) -> String {
    format!("{x}")
}

pub(crate) fn lattice(cfg: &RunConfig) -> Result<Lattice, RunError> {
    let (c, r) = cfg.lattice_dims()?;
    Lattice::new(c, r).map_err(|e| RunError::Usage(e.to_string()))
}

pub(crate) fn run_meta(cfg: &RunConfig, delta: f64) -> Result<RunMeta, RunError> {
    let (n_cols, n_rows) = cfg.lattice_dims()?;
    let mps = cfg.backend == Backend::Mps;
    Ok(RunMeta {
        omega: cfg.omega()?,
        delta,
        truncation: cfg.truncation,
        n_cols,
        n_rows,
        backend: cfg.backend.name().into(),
        chi: mps.then_some(cfg.chi),
        energy_tol: mps.then_some(cfg.energy_tol),
    })
}

/// Bond dimension written to tables; zero marks exact diagonalisation.
pub(crate) fn table_chi(cfg: &RunConfig) -> usize {
    match cfg.backend {
        Backend::Mps => cfg.chi,
        Backend::Ed => 0,
    }
}

pub(crate) fn write_snapshot(
    out: &mut Output,
    sector: &Sector,
    snap: &GaugeSnapshot,
    stem: &str,
) -> Result<(), RunError> {
    let links = format!("snapshots/{stem}_links.csv");
    let sites = format!("snapshots/{stem}_sites.csv");
    out.write_text(&links, &snap.link_table(sector))?;
    out.write_text(&sites, &snap.site_table(sector))?;
    out.record("snapshot", serde_json::json!({ "label": stem, "links": links, "sites": sites }))
}

fn solve(
    problem: &Problem,
    cfg: &RunConfig,
    out: &mut Output,
    label: &str,
    resume: bool,
) -> Result<GroundState, RunError> {
    let plan = CheckpointPlan {
        path: out.path(&format!("checkpoints/{label}.json")),
        every: cfg.checkpoint_every,
        resume,
        config_hash: out.hash().to_string(),
    };
    if let Some(parent) = plan.path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| RunError::io(parent, e))?;
    }
    let mut io_err = None;
    let gs = problem.ground_state(cfg, label, Some(&plan), |rec| {
        if io_err.is_none() {
            io_err = out.record("sweep", serde_json::json!({ "label": label, "record": rec })).err();
        }
    })?;
    match io_err {
        Some(e) => Err(e),
        None => Ok(gs),
    }
}

fn snapshot(sector: &Sector, gs: &GroundState, label: &str) -> Result<GaugeSnapshot, RunError> {
    snapshot_of_state(sector, &gs.expect).map_err(|e| RunError::solver(label, e))
}

pub fn run_ground(cfg: &RunConfig, out: &mut Output, resume: bool) -> Result<GroundOutcome, RunError> {
    cfg.expect(&[Experiment::Ground, Experiment::Sweep])?;
    let lat = lattice(cfg)?;
    let omega = cfg.omega()?;
    let mut outcome = GroundOutcome::default();
    for delta in cfg.deltas()? {
        let params = ModelParams::ratios(omega, delta, cfg.truncation);
        let meta = run_meta(cfg, delta)?;
        let vac_sector = Sector::vacuum(lat.clone());
        let vac_label = format!("delta{}_vacuum", tag(delta));
        let problem = Problem::new(&vac_sector, build_couplings(&vac_sector, &params), cfg.backend)?;
        let vac = solve(&problem, cfg, out, &vac_label, resume)?;
        let s = vac.summary();
        out.record(
            "ground",
            SectorRecord {
                sector: "vacuum",
                delta,
                omega,
                d: None,
                energy: s.energy,
                sweeps: s.sweeps,
                max_bond: s.max_bond,
            },
        )?;
        let vac_snap = snapshot(&vac_sector, &vac, &vac_label)?;
        write_snapshot(out, &vac_sector, &vac_snap, &vac_label)?;
        outcome.vacuum_energy.insert(tag(delta), vac.energy);

        for d in cfg.separations() {
            let sector = Sector::charged(lat.clone(), d, cfg.position).map_err(|e| RunError::Usage(e.to_string()))?;
            let placement = sector.placement().expect("charged sector").clone();
            let label = format!("delta{}_d{d}", tag(delta));
            let problem = Problem::new(&sector, build_couplings(&sector, &params), cfg.backend)?;
            let ch = solve(&problem, cfg, out, &label, resume)?;
            let s = ch.summary();
            out.record(
                "ground",
                SectorRecord {
                    sector: "charged",
                    delta,
                    omega,
                    d: Some(d),
                    energy: s.energy,
                    sweeps: s.sweeps,
                    max_bond: s.max_bond,
                },
            )?;
            let ch_snap = snapshot(&sector, &ch, &label)?;
            write_snapshot(out, &sector, &ch_snap, &label)?;

            let broken = o_broken(&ch.expect, &placement.s_up).map_err(|e| RunError::solver(&label, e))?;
            let eps = epsilon_profile(&ch_snap, &vac_snap).map_err(|e| RunError::Invariant(e.to_string()))?;
            match width_profile(&sector, &eps) {
                Ok(profile) => {
                    out.record(
                        "width",
                        serde_json::json!({
                            "delta": delta, "d": d, "r": placement.separation,
                            "o_broken": broken, "profile": profile,
                        }),
                    )?;
                    for sub in &profile.sublattices {
                        outcome.widths.push(WidthTableRow::new(
                            out.hash(),
                            WidthRow {
                                delta,
                                omega,
                                n_rows: lat.n_rows(),
                                chi: table_chi(cfg),
                                d,
                                r: placement.separation,
                                k: sub.k,
                                w2: sub.w2_mid(),
                                o_broken: broken,
                            },
                        ));
                    }
                    outcome.profiles.push((delta, d, profile));
                }
                Err(e) => out.record(
                    "width_unavailable",
                    serde_json::json!({ "delta": delta, "d": d, "reason": e.to_string() }),
                )?,
            }

            let point = potential_point(ch.energy, &meta, vac.energy, &meta, &sector)
                .map_err(|e| RunError::Invariant(e.to_string()))?;
            let weight = dynamical_charge_weight(&sector, &ch_snap, &vac_snap)
                .map_err(|e| RunError::Invariant(e.to_string()))?;
            out.record("potential", serde_json::json!({ "point": point, "charge_weight": weight, "o_broken": broken }))?;
            outcome.potential.push(PotentialTableRow::new(
                out.hash(),
                PotentialRow {
                    delta,
                    omega,
                    n_rows: lat.n_rows(),
                    chi: table_chi(cfg),
                    d,
                    r: point.r,
                    v: point.v,
                    charge_weight: weight,
                },
            ));
        }
        out.write_table(WIDTHS, &outcome.widths)?;
        out.write_table(POTENTIAL, &outcome.potential)?;
    }
    Ok(outcome)
}
