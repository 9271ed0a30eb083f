//! Audit of the spin → gauge-field map over enumerated or sampled configurations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use rydlink::gauge::{audit_configurations, AuditReport};
use rydlink::{DualLattice, Lattice, Sector, SpinConfiguration};

use crate::config::{Experiment, RunConfig};
use crate::error::RunError;
use crate::records::Output;

pub const DEFAULT_DIMS: (usize, usize) = (6, 4);

#[derive(Clone, Debug, Serialize)]
pub struct MapCheckReport {
    pub sector: String,
    pub mode: &'static str,
    pub configurations: usize,
    pub gauss_violations: usize,
    pub two_to_one_violations: usize,
    pub vacuum_violations: usize,
    pub affected_sites: Vec<usize>,
    pub corrupted_links: Vec<usize>,
}

#[derive(Serialize)]
struct AuditRow {
    sector: String,
    mode: &'static str,
    configurations: usize,
    gauss_violations: usize,
    two_to_one_violations: usize,
    vacuum_violations: usize,
}

impl MapCheckReport {
    pub fn violations(&self) -> usize {
        self.gauss_violations + self.two_to_one_violations + self.vacuum_violations
    }
}

fn configs(sector: &Sector, cfg: &RunConfig) -> (&'static str, Box<dyn Iterator<Item = SpinConfiguration>>) {
    let n = sector.n_active();
    if n <= cfg.exhaustive_max_atoms {
        let s = sector.clone();
        return ("exhaustive", Box::new((0..1usize << n).map(move |i| s.config_from_basis_index(i))));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let s = sector.clone();
    let it = (0..cfg.samples).map(move |_| {
        let bits: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        s.config_from_active(&bits)
    });
    ("random", Box::new(it))
}

fn audit(label: String, sector: &Sector, cfg: &RunConfig) -> MapCheckReport {
    let (mode, it) = configs(sector, cfg);
    let report: AuditReport = audit_configurations(sector, it);
    MapCheckReport {
        sector: label,
        mode,
        configurations: report.configurations,
        gauss_violations: report.gauss_violations.len(),
        two_to_one_violations: report.two_to_one_violations.len(),
        vacuum_violations: report.vacuum_violations.len(),
        affected_sites: report.affected_sites(sector),
        corrupted_links: cfg.corrupt_links.clone(),
    }
}

/// Audits the vacuum sector and every configured charged sector; violations
/// are reported and turned into an invariant error at the end.
pub fn run_map_check(cfg: &RunConfig, out: &mut Output) -> Result<Vec<MapCheckReport>, RunError> {
    cfg.expect(&[Experiment::MapCheck])?;
    let (c, r) = match (cfg.n_cols, cfg.n_rows) {
        (None, None) => DEFAULT_DIMS,
        _ => cfg.lattice_dims()?,
    };
    let lat = Lattice::new(c, r).map_err(|e| RunError::Usage(e.to_string()))?;
    let mut dual = DualLattice::new(&lat);
    for &l in &cfg.corrupt_links {
        if l >= dual.links.len() {
            return Err(RunError::Usage(format!("corrupt link {l} out of range ({} links)", dual.links.len())));
        }
        dual.corrupt_stagger(l);
    }
    let mut reports = vec![audit("vacuum".into(), &Sector::from_parts(lat.clone(), dual.clone(), None), cfg)];
    for d in cfg.separations() {
        let charged = Sector::charged(lat.clone(), d, cfg.position).map_err(|e| RunError::Usage(e.to_string()))?;
        let placement = charged.placement().cloned();
        let sector = Sector::from_parts(lat.clone(), dual.clone(), placement);
        reports.push(audit(format!("d{d}"), &sector, cfg));
    }
    for rep in &reports {
        out.record("audit", rep)?;
    }
    let rows: Vec<AuditRow> = reports
        .iter()
        .map(|r| AuditRow {
            sector: r.sector.clone(),
            mode: r.mode,
            configurations: r.configurations,
            gauss_violations: r.gauss_violations,
            two_to_one_violations: r.two_to_one_violations,
            vacuum_violations: r.vacuum_violations,
        })
        .collect();
    out.write_table("audit.csv", &rows)?;
    let bad: usize = reports.iter().map(MapCheckReport::violations).sum();
    if bad > 0 {
        let sites: Vec<String> = reports
            .iter()
            .filter(|r| r.violations() > 0)
            .map(|r| format!("{}: sites {:?}", r.sector, r.affected_sites))
            .collect();
        return Err(RunError::Invariant(format!("{bad} mapping violations ({})", sites.join("; "))));
    }
    Ok(reports)
}
