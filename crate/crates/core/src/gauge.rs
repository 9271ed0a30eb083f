//! Spin → dimer → U(1) gauge-field mapping and Gauss-law bookkeeping.
//!
//! For a bond `l = (i, j)` the dimer occupation is `D = (1 + σᶻᵢσᶻⱼ)/2` and the
//! electric field is `Sᶻ = (-1)^{s_l} (D - 1/2)`. A triangle carries the charge
//! `Q/2 = (-1)^{s_x + 1}` when its three atoms are aligned (`rrr` or `ggg`).
//! The Gauss operator `G = ∇·Sᶻ - Q` with
//! `∇·Sᶻ = (-1)^{s_x + 1} Σ_l (-1)^{s_l} Sᶻ_l` has eigenvalue
//! `q + (-1)^{s_x}/2` on every basis configuration.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sector::Sector;

#[derive(Debug, Error, PartialEq)]
pub enum GaugeError {
    #[error("missing correlator {0}")]
    MissingCorrelator(String),
    #[error("snapshot table is malformed: {0}")]
    Malformed(String),
}

/// Occupations of every lattice atom (`true` = `|r⟩`). Entries of removed
/// atoms are carried along but never enter the Hamiltonian.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinConfiguration {
    rydberg: Vec<bool>,
}

impl SpinConfiguration {
    pub fn new(rydberg: Vec<bool>) -> Self {
        Self { rydberg }
    }

    pub fn all_ground(n: usize) -> Self {
        Self {
            rydberg: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.rydberg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rydberg.is_empty()
    }

    pub fn is_rydberg(&self, atom: usize) -> bool {
        self.rydberg[atom]
    }

    /// `σᶻ = 2n - 1`.
    pub fn sigma_z(&self, atom: usize) -> i8 {
        if self.rydberg[atom] {
            1
        } else {
            -1
        }
    }

    pub fn set(&mut self, atom: usize, rydberg: bool) {
        self.rydberg[atom] = rydberg;
    }

    pub fn flip(&mut self, atom: usize) {
        self.rydberg[atom] ^= true;
    }

    pub fn globally_flipped(&self) -> Self {
        Self {
            rydberg: self.rydberg.iter().map(|&r| !r).collect(),
        }
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.rydberg
    }

    pub fn rydberg_count(&self) -> usize {
        self.rydberg.iter().filter(|&&r| r).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkValue<T> {
    pub value: T,
    pub frozen: bool,
}

fn parity_sign(bit: u8) -> f64 {
    if bit & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Dimer occupation of a link. Links touching a removed atom are frozen and
/// read from the sector's reference configuration.
pub fn dimer_of(sector: &Sector, config: &SpinConfiguration, link: usize) -> LinkValue<u8> {
    let (i, j) = sector.dual().links[link].atoms;
    let frozen = sector.is_frozen(link);
    let source = if frozen { sector.reference() } else { config };
    LinkValue {
        value: u8::from(source.sigma_z(i) == source.sigma_z(j)),
        frozen,
    }
}

pub fn efield_of(sector: &Sector, config: &SpinConfiguration, link: usize) -> LinkValue<f64> {
    let dimer = dimer_of(sector, config, link);
    LinkValue {
        value: parity_sign(sector.dual().links[link].stagger) * (dimer.value as f64 - 0.5),
        frozen: dimer.frozen,
    }
}

/// Dynamical charge of a dual site: `±2` on aligned triangles, `0` otherwise.
/// Defect sites carry no dynamical charge.
pub fn charge_of(sector: &Sector, config: &SpinConfiguration, site: usize) -> f64 {
    if sector.is_defect(site) {
        return 0.0;
    }
    let s = &sector.dual().sites[site];
    let [a, b, c] = s.atoms;
    let aligned = config.is_rydberg(a) == config.is_rydberg(b)
        && config.is_rydberg(b) == config.is_rydberg(c);
    if aligned {
        2.0 * -parity_sign(s.stagger)
    } else {
        0.0
    }
}

/// Electric fields on links and charges on dual sites for one state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeSnapshot {
    pub e_field: Vec<f64>,
    pub frozen: Vec<bool>,
    pub charge: Vec<f64>,
    /// `∇·Sᶻ - Q` per dual site.
    pub gauss: Vec<f64>,
}

impl GaugeSnapshot {
    fn assemble(sector: &Sector, e_field: Vec<f64>, charge: Vec<f64>) -> Self {
        let dual = sector.dual();
        let frozen = (0..dual.links.len()).map(|l| sector.is_frozen(l)).collect();
        let gauss = dual
            .sites
            .iter()
            .zip(&charge)
            .map(|(s, &q)| divergence(sector, &e_field, s.stagger, &s.links) - q)
            .collect();
        Self {
            e_field,
            frozen,
            charge,
            gauss,
        }
    }

    /// `(link, x, y, s_l, value)` rows.
    pub fn link_table(&self, sector: &Sector) -> String {
        let mut out = String::from("link,x,y,s_l,frozen,value\n");
        for (id, (l, v)) in sector.dual().links.iter().zip(&self.e_field).enumerate() {
            let _ = writeln!(
                out,
                "{id},{:.12},{:.12},{},{},{:.15e}",
                l.x,
                l.y,
                l.stagger,
                u8::from(self.frozen[id]),
                v
            );
        }
        out
    }

    /// `(site, x, y, s_x, value)` rows for the charge.
    pub fn site_table(&self, sector: &Sector) -> String {
        let mut out = String::from("site,x,y,s_x,value\n");
        for (id, (s, q)) in sector.dual().sites.iter().zip(&self.charge).enumerate() {
            let _ = writeln!(out, "{id},{:.12},{:.12},{},{:.15e}", s.x, s.y, s.stagger, q);
        }
        out
    }

    /// Rebuild a snapshot from the two flat tables.
    pub fn from_tables(sector: &Sector, links: &str, sites: &str) -> Result<Self, GaugeError> {
        let column = |line: &str, idx: usize| -> Result<String, GaugeError> {
            line.split(',')
                .nth(idx)
                .map(str::to_owned)
                .ok_or_else(|| GaugeError::Malformed(line.to_owned()))
        };
        let parse = |s: String| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| GaugeError::Malformed(format!("{s}: {e}")))
        };
        let mut e_field = Vec::new();
        for line in links.lines().skip(1).filter(|l| !l.is_empty()) {
            e_field.push(parse(column(line, 5)?)?);
        }
        let mut charge = Vec::new();
        for line in sites.lines().skip(1).filter(|l| !l.is_empty()) {
            charge.push(parse(column(line, 4)?)?);
        }
        if e_field.len() != sector.dual().links.len() || charge.len() != sector.dual().sites.len() {
            return Err(GaugeError::Malformed("row count does not match lattice".into()));
        }
        Ok(Self::assemble(sector, e_field, charge))
    }
}

fn divergence(sector: &Sector, e_field: &[f64], site_stagger: u8, links: &[usize]) -> f64 {
    let sum: f64 = links
        .iter()
        .map(|&l| parity_sign(sector.dual().links[l].stagger) * e_field[l])
        .sum();
    -parity_sign(site_stagger) * sum
}

pub fn snapshot_of_config(sector: &Sector, config: &SpinConfiguration) -> GaugeSnapshot {
    let n_links = sector.dual().links.len();
    let e_field = (0..n_links).map(|l| efield_of(sector, config, l).value).collect();
    let charge = (0..sector.dual().sites.len())
        .map(|s| charge_of(sector, config, s))
        .collect();
    GaugeSnapshot::assemble(sector, e_field, charge)
}

/// Expected Gauss eigenvalue `q_x + (-1)^{s_x}/2`.
pub fn gauss_target(sector: &Sector, site: usize) -> f64 {
    sector.static_charge(site) as f64 + parity_sign(sector.dual().sites[site].stagger) / 2.0
}

/// `G_x - [q_x + (-1)^{s_x}/2]` at every dual site.
pub fn gauss_residual(sector: &Sector, snapshot: &GaugeSnapshot) -> Vec<f64> {
    snapshot
        .gauss
        .iter()
        .enumerate()
        .map(|(s, g)| g - gauss_target(sector, s))
        .collect()
}

/// One-, two- and three-site expectation values of a quantum state, keyed by
/// lattice atom indices.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StateExpectations {
    pub density: Vec<Option<f64>>,
    pub pair: HashMap<(usize, usize), f64>,
    /// `(⟨rrr⟩, ⟨ggg⟩)` per triangle.
    pub triple: HashMap<[usize; 3], (f64, f64)>,
}

impl StateExpectations {
    /// Exact expectations of a computational-basis state.
    pub fn from_config(sector: &Sector, config: &SpinConfiguration) -> Self {
        let n = |a: usize| f64::from(u8::from(config.is_rydberg(a)));
        let density = (0..sector.lattice().len())
            .map(|a| (!sector.is_removed(a)).then(|| n(a)))
            .collect();
        let pair = sector
            .required_pairs()
            .into_iter()
            .map(|(i, j)| ((i, j), n(i) * n(j)))
            .collect();
        let triple = sector
            .required_triples()
            .into_iter()
            .map(|t @ [a, b, c]| {
                (
                    t,
                    (n(a) * n(b) * n(c), (1.0 - n(a)) * (1.0 - n(b)) * (1.0 - n(c))),
                )
            })
            .collect();
        Self {
            density,
            pair,
            triple,
        }
    }

    pub fn n(&self, atom: usize) -> Result<f64, GaugeError> {
        self.density
            .get(atom)
            .copied()
            .flatten()
            .ok_or_else(|| GaugeError::MissingCorrelator(format!("<n_{atom}>")))
    }

    pub fn nn(&self, i: usize, j: usize) -> Result<f64, GaugeError> {
        self.pair
            .get(&(i.min(j), i.max(j)))
            .copied()
            .ok_or_else(|| GaugeError::MissingCorrelator(format!("<n_{i} n_{j}>")))
    }
}

/// Gauge snapshot from expectation values: `⟨D⟩ = 1 + 2⟨nn⟩ - ⟨n⟩ - ⟨n⟩`.
pub fn snapshot_of_state(
    sector: &Sector,
    expect: &StateExpectations,
) -> Result<GaugeSnapshot, GaugeError> {
    let dual = sector.dual();
    let mut e_field = Vec::with_capacity(dual.links.len());
    for (id, link) in dual.links.iter().enumerate() {
        if sector.is_frozen(id) {
            e_field.push(efield_of(sector, sector.reference(), id).value);
            continue;
        }
        let (i, j) = link.atoms;
        let dimer = 1.0 + 2.0 * expect.nn(i, j)? - expect.n(i)? - expect.n(j)?;
        e_field.push(parity_sign(link.stagger) * (dimer - 0.5));
    }
    let mut charge = Vec::with_capacity(dual.sites.len());
    for (id, site) in dual.sites.iter().enumerate() {
        if sector.is_defect(id) {
            charge.push(0.0);
            continue;
        }
        let (rrr, ggg) = expect.triple.get(&site.atoms).copied().ok_or_else(|| {
            GaugeError::MissingCorrelator(format!("projectors on {:?}", site.atoms))
        })?;
        charge.push(2.0 * -parity_sign(site.stagger) * (rrr + ggg));
    }
    Ok(GaugeSnapshot::assemble(sector, e_field, charge))
}

/// Outcome of a mapping audit over a set of configurations.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub configurations: usize,
    /// `(configuration, dual site)` pairs with a nonzero Gauss residual.
    pub gauss_violations: Vec<(usize, usize)>,
    /// Configurations whose global flip maps to a different gauge state.
    pub two_to_one_violations: Vec<usize>,
    /// Links whose reference-configuration field differs from the vacuum value.
    pub vacuum_violations: Vec<usize>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.gauss_violations.is_empty()
            && self.two_to_one_violations.is_empty()
            && self.vacuum_violations.is_empty()
    }

    /// Dual sites touched by any violation.
    pub fn affected_sites(&self, sector: &Sector) -> Vec<usize> {
        let mut out: Vec<usize> = self.gauss_violations.iter().map(|&(_, s)| s).collect();
        for &l in &self.vacuum_violations {
            let (a, b) = sector.dual().links[l].sites;
            out.push(a);
            out.extend(b);
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn violation_count(&self) -> usize {
        self.gauss_violations.len() + self.two_to_one_violations.len() + self.vacuum_violations.len()
    }
}

/// Sites whose Gauss law is checked: every non-defect site plus the two
/// static-charge sites.
fn audited_sites(sector: &Sector) -> Vec<usize> {
    (0..sector.dual().sites.len())
        .filter(|&s| !sector.is_defect(s) || sector.static_charge(s) != 0)
        .collect()
}

pub fn audit_configurations<I>(sector: &Sector, configs: I) -> AuditReport
where
    I: IntoIterator<Item = SpinConfiguration>,
{
    let sites = audited_sites(sector);
    let mut report = AuditReport {
        vacuum_violations: audit_vacuum(sector),
        ..AuditReport::default()
    };
    for (k, config) in configs.into_iter().enumerate() {
        report.configurations += 1;
        let snap = snapshot_of_config(sector, &config);
        let residual = gauss_residual(sector, &snap);
        for &s in &sites {
            if residual[s].abs() > 1e-12 {
                report.gauss_violations.push((k, s));
            }
        }
        let flipped = snapshot_of_config(sector, &config.globally_flipped());
        let same_dimers = (0..sector.dual().links.len()).all(|l| {
            dimer_of(sector, &config, l).value
                == dimer_of(sector, &config.globally_flipped(), l).value
                || sector.is_frozen(l)
        });
        if flipped.e_field != snap.e_field || flipped.charge != snap.charge || !same_dimers {
            report.two_to_one_violations.push(k);
        }
    }
    report
}

/// The vacuum configuration maps to `Sᶻ = -1/2` on every link.
pub fn audit_vacuum(sector: &Sector) -> Vec<usize> {
    let vac = crate::classical::vacuum_configuration(sector.lattice());
    (0..sector.dual().links.len())
        .filter(|&l| !sector.is_frozen(l))
        .filter(|&l| (efield_of(sector, &vac, l).value + 0.5).abs() > 1e-12)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{rigid_string_configuration, vacuum_configuration};
    use crate::lattice::{Lattice, TransversePosition};

    fn vacuum_sector(n: usize, m: usize) -> Sector {
        Sector::vacuum(Lattice::new(n, m).unwrap())
    }

    #[test]
    fn dimer_truth_table() {
        let sector = vacuum_sector(3, 3);
        let link = 0;
        let (i, j) = sector.dual().links[link].atoms;
        let mut c = SpinConfiguration::all_ground(9);
        assert_eq!(dimer_of(&sector, &c, link).value, 1);
        c.set(i, true);
        assert_eq!(dimer_of(&sector, &c, link).value, 0);
        c.set(j, true);
        assert_eq!(dimer_of(&sector, &c, link).value, 1);
    }

    #[test]
    fn vacuum_and_its_flip_have_minus_half_everywhere() {
        let sector = vacuum_sector(7, 6);
        let vac = vacuum_configuration(sector.lattice());
        for config in [vac.clone(), vac.globally_flipped()] {
            let snap = snapshot_of_config(&sector, &config);
            assert!(snap.e_field.iter().all(|&e| e == -0.5));
            assert!(snap.charge.iter().all(|&q| q == 0.0));
        }
        assert!(audit_vacuum(&sector).is_empty());
    }

    #[test]
    fn single_flip_draws_minimal_loop() {
        let lat = Lattice::new(7, 6).unwrap();
        let sector = Sector::vacuum(lat.clone());
        let vac = vacuum_configuration(&lat);
        // An interior excited atom: flipping it creates a string loop.
        let atom = (0..lat.len())
            .find(|&a| {
                let s = lat.site(a);
                (2..5).contains(&s.col) && (2..4).contains(&s.row) && vac.is_rydberg(a)
            })
            .unwrap();
        let mut c = vac.clone();
        c.flip(atom);
        let snap = snapshot_of_config(&sector, &c);
        // Loop links: those crossing the six bonds incident on the atom.
        let expected: Vec<usize> = sector
            .dual()
            .links
            .iter()
            .enumerate()
            .filter(|(_, l)| l.atoms.0 == atom || l.atoms.1 == atom)
            .map(|(id, _)| id)
            .collect();
        assert_eq!(expected.len(), 6);
        for (id, &e) in snap.e_field.iter().enumerate() {
            let want = if expected.contains(&id) { 0.5 } else { -0.5 };
            assert_eq!(e, want, "link {id}");
        }
        assert!(snap.charge.iter().all(|&q| q == 0.0));
        assert!(gauss_residual(&sector, &snap).iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn charge_sign_follows_stagger() {
        let sector = vacuum_sector(4, 4);
        let c = SpinConfiguration::new(vec![true; 16]);
        for (id, s) in sector.dual().sites.iter().enumerate() {
            let q = charge_of(&sector, &c, id);
            assert_eq!(q, if s.stagger == 0 { -2.0 } else { 2.0 });
        }
        // Two aligned, one anti-aligned: no charge.
        let mut c = SpinConfiguration::all_ground(16);
        let [a, _, _] = sector.dual().sites[0].atoms;
        c.set(a, true);
        assert_eq!(charge_of(&sector, &c, 0), 0.0);
    }

    #[test]
    fn rigid_string_carries_two_strings_and_static_charges() {
        let lat = Lattice::new(13, 6).unwrap();
        let sector = Sector::charged(lat.clone(), 3, TransversePosition::Line(4)).unwrap();
        let p = sector.placement().unwrap();
        let config = rigid_string_configuration(&lat, p);
        let snap = snapshot_of_config(&sector, &config);
        let residual = gauss_residual(&sector, &snap);
        for (s, r) in residual.iter().enumerate() {
            assert!(r.abs() < 1e-12, "site {s}: {r}");
        }
        // Every +1/2 link lies on the boundary of the flipped strip.
        let strip: std::collections::BTreeSet<_> = p.strip.iter().copied().collect();
        for (id, l) in sector.dual().links.iter().enumerate() {
            let crosses = strip.contains(&l.atoms.0) != strip.contains(&l.atoms.1);
            assert_eq!(snap.e_field[id] == 0.5, crosses, "link {id}");
        }
        // Upper and lower strings each carry 4 links per √3 of length.
        let y_ch = p.charge_y();
        let upper = snap.e_field.iter().zip(&sector.dual().links)
            .filter(|(&e, l)| e == 0.5 && l.y > y_ch).count();
        let lower = snap.e_field.iter().zip(&sector.dual().links)
            .filter(|(&e, l)| e == 0.5 && l.y < y_ch).count();
        assert_eq!(upper, lower);
        assert!(snap.charge.iter().all(|&q| q == 0.0));
    }

    #[test]
    fn tables_round_trip() {
        let lat = Lattice::new(9, 4).unwrap();
        let sector = Sector::charged(lat.clone(), 2, TransversePosition::Boundary).unwrap();
        let snap = snapshot_of_config(&sector, sector.reference());
        let back = GaugeSnapshot::from_tables(
            &sector,
            &snap.link_table(&sector),
            &snap.site_table(&sector),
        )
        .unwrap();
        assert_eq!(back, snap);
    }

    #[test]
    fn state_snapshot_matches_basis_snapshot() {
        let lat = Lattice::new(9, 4).unwrap();
        let sector = Sector::charged(lat, 2, TransversePosition::Boundary).unwrap();
        let config = sector.reference().clone();
        let direct = snapshot_of_config(&sector, &config);
        let expect = StateExpectations::from_config(&sector, &config);
        let via = snapshot_of_state(&sector, &expect).unwrap();
        assert_eq!(direct, via);
    }

    #[test]
    fn missing_correlator_is_reported() {
        let sector = vacuum_sector(3, 3);
        let mut expect =
            StateExpectations::from_config(&sector, &vacuum_configuration(sector.lattice()));
        let key = *expect.pair.keys().next().unwrap();
        expect.pair.remove(&key);
        assert!(matches!(
            snapshot_of_state(&sector, &expect),
            Err(GaugeError::MissingCorrelator(_))
        ));
    }

    #[test]
    fn equal_superposition_halves_loop_fields() {
        // ⟨·⟩ over (vacuum + one flip)/√2: densities and correlators average.
        let lat = Lattice::new(7, 6).unwrap();
        let sector = Sector::vacuum(lat.clone());
        let vac = vacuum_configuration(&lat);
        let atom = lat.index(3, 1).unwrap();
        assert!(vac.is_rydberg(atom));
        let mut flipped = vac.clone();
        flipped.flip(atom);
        let a = StateExpectations::from_config(&sector, &vac);
        let b = StateExpectations::from_config(&sector, &flipped);
        let mix = StateExpectations {
            density: a.density.iter().zip(&b.density)
                .map(|(x, y)| Some((x.unwrap() + y.unwrap()) / 2.0)).collect(),
            pair: a.pair.iter().map(|(k, v)| (*k, (v + b.pair[k]) / 2.0)).collect(),
            triple: a.triple.iter()
                .map(|(k, v)| (*k, ((v.0 + b.triple[k].0) / 2.0, (v.1 + b.triple[k].1) / 2.0)))
                .collect(),
        };
        let snap = snapshot_of_state(&sector, &mix).unwrap();
        for (l, e) in sector.dual().links.iter().zip(&snap.e_field) {
            let on_loop = l.atoms.0 == atom || l.atoms.1 == atom;
            assert!((e - if on_loop { 0.0 } else { -0.5 }).abs() < 1e-15);
        }
    }
}
