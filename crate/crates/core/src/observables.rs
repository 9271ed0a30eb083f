//! String diagnostics built on gauge snapshots: flux profile `ε_l`, transverse
//! width `w²(x)`, static potential `V(R)` and the breaking observable.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gauge::{snapshot_of_config, GaugeSnapshot, StateExpectations};
use crate::classical::vacuum_configuration;
use crate::lattice::{Truncation, SQRT3};
use crate::sector::Sector;

#[derive(Debug, Error, PartialEq)]
pub enum ObservableError {
    #[error("snapshots belong to different lattices ({0} vs {1} links)")]
    LatticeMismatch(usize, usize),
    #[error("sector has no static charges")]
    NoCharges,
    #[error("rigid string resolves {0} width sublattices, expected 3")]
    SublatticeAssignment(usize),
    #[error("no usable cuts between the charges")]
    NoCuts,
    #[error("run settings differ: {0}")]
    SettingsMismatch(String),
    #[error("S_up is empty")]
    EmptySup,
    #[error("missing density for atom {0}")]
    MissingDensity(usize),
}

/// Offset of the width reference line above the charges.
pub const Y0_OFFSET: f64 = 0.25;

/// Threshold on `O_broken` above which a snapshot is excluded from width fits.
pub const BROKEN_THRESHOLD: f64 = 0.5;

/// `ε_l = ⟨Sᶻ_l⟩_ch - ⟨Sᶻ_l⟩_vac`; `None` on links frozen in either snapshot.
pub fn epsilon_profile(
    ch: &GaugeSnapshot,
    vac: &GaugeSnapshot,
) -> Result<Vec<Option<f64>>, ObservableError> {
    if ch.e_field.len() != vac.e_field.len() {
        return Err(ObservableError::LatticeMismatch(ch.e_field.len(), vac.e_field.len()));
    }
    Ok(ch
        .e_field
        .iter()
        .zip(&vac.e_field)
        .enumerate()
        .map(|(l, (a, b))| (!(ch.frozen[l] || vac.frozen[l])).then_some(a - b))
        .collect())
}

/// Cut key: link midpoints share an x-cut when `round(4x/√3)` agrees.
fn cut_key(x: f64) -> i64 {
    (x * 4.0 / SQRT3).round() as i64
}

fn key_x(key: i64) -> f64 {
    key as f64 * SQRT3 / 4.0
}

/// `(Σ (y-y0)² ε, Σ ε)` over links above `y0` at each cut between the charges.
fn cut_sums(
    sector: &Sector,
    epsilon: &[Option<f64>],
    y0: f64,
) -> Result<BTreeMap<i64, (f64, f64)>, ObservableError> {
    let p = sector.placement().ok_or(ObservableError::NoCharges)?;
    let dual = sector.dual();
    let (xa, xb) = {
        let a = dual.sites[p.charges[0].site].x;
        let b = dual.sites[p.charges[1].site].x;
        (cut_key(a.min(b)), cut_key(a.max(b)))
    };
    let mut sums: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
    for (link, eps) in dual.links.iter().zip(epsilon) {
        let Some(eps) = eps else { continue };
        let key = cut_key(link.x);
        if key <= xa || key >= xb || link.y <= y0 {
            continue;
        }
        let entry = sums.entry(key).or_default();
        entry.0 += (link.y - y0).powi(2) * eps;
        entry.1 += eps;
    }
    Ok(sums)
}

/// Maps cut-key residues (mod 4) to width sublattices `k`, `k = 0` having the
/// largest rigid-string displacement. Only cuts crossed by the unfrozen part
/// of the rigid string's upper flux line are used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SublatticeMap {
    pub k_of_residue: [Option<usize>; 4],
    pub cuts: Vec<i64>,
}

impl SublatticeMap {
    pub fn from_rigid_string(sector: &Sector) -> Result<Self, ObservableError> {
        let p = sector.placement().ok_or(ObservableError::NoCharges)?;
        let vac_sector = Sector::vacuum(sector.lattice().clone());
        let ch = snapshot_of_config(sector, sector.reference());
        let vac = snapshot_of_config(&vac_sector, &vacuum_configuration(sector.lattice()));
        let eps = epsilon_profile(&ch, &vac)?;
        let sums = cut_sums(sector, &eps, p.charge_y() + Y0_OFFSET)?;
        let mut by_residue: [Option<f64>; 4] = [None; 4];
        let mut cuts = Vec::new();
        for (key, (num, den)) in sums {
            if den > 0.0 {
                by_residue[key.rem_euclid(4) as usize] = Some(num / den);
                cuts.push(key);
            }
        }
        let mut levels: Vec<f64> = by_residue.iter().flatten().copied().collect();
        levels.sort_by(|a, b| b.total_cmp(a));
        levels.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        if levels.len() != 3 {
            return Err(ObservableError::SublatticeAssignment(levels.len()));
        }
        let k_of_residue = by_residue.map(|w| {
            w.map(|w| levels.iter().position(|l| (l - w).abs() < 1e-9).expect("level present"))
        });
        Ok(Self { k_of_residue, cuts })
    }

    pub fn k_of_x(&self, x: f64) -> Option<usize> {
        self.k_of_residue[cut_key(x).rem_euclid(4) as usize]
    }
}

/// `w²(x) ≈ c (x - x_m)² + s (x - x_m) + b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Parabola {
    pub x_mid: f64,
    pub c: f64,
    pub s: f64,
    pub b: f64,
}

impl Parabola {
    pub fn eval(&self, x: f64) -> f64 {
        let u = x - self.x_mid;
        self.c * u * u + self.s * u + self.b
    }

    pub fn apex(&self) -> Option<f64> {
        (self.c != 0.0).then(|| self.x_mid - self.s / (2.0 * self.c))
    }
}

/// Least-squares quadratic in `x - x_mid`; degrades to a line or a constant
/// when fewer than three points are available.
pub fn fit_parabola(points: &[(f64, f64)], x_mid: f64) -> Option<Parabola> {
    let n_par = points.len().min(3);
    if n_par == 0 {
        return None;
    }
    let a = DMatrix::from_fn(points.len(), n_par, |r, c| (points[r].0 - x_mid).powi(c as i32));
    let y = DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
    let coef = a.svd(true, true).solve(&y, 1e-14).ok()?;
    let get = |i: usize| if i < n_par { coef[i] } else { 0.0 };
    Some(Parabola {
        x_mid,
        c: get(2),
        s: get(1),
        b: get(0),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SublatticeWidth {
    pub k: usize,
    pub points: Vec<(f64, f64)>,
    pub fit: Parabola,
}

impl SublatticeWidth {
    /// Fitted `w²` at the midpoint between the charges.
    pub fn w2_mid(&self) -> f64 {
        self.fit.b
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthProfile {
    pub y0: f64,
    pub x_mid: f64,
    pub sublattices: Vec<SublatticeWidth>,
    /// Cuts dropped because `Σ ε ≤ 0`.
    pub excluded_cuts: Vec<f64>,
}

impl WidthProfile {
    pub fn w2_mid(&self, k: usize) -> Option<f64> {
        self.sublattices.iter().find(|s| s.k == k).map(SublatticeWidth::w2_mid)
    }
}

pub fn width_profile(
    sector: &Sector,
    epsilon: &[Option<f64>],
) -> Result<WidthProfile, ObservableError> {
    let p = sector.placement().ok_or(ObservableError::NoCharges)?;
    let map = SublatticeMap::from_rigid_string(sector)?;
    let y0 = p.charge_y() + Y0_OFFSET;
    let dual = sector.dual();
    let x_mid = 0.5 * (dual.sites[p.charges[0].site].x + dual.sites[p.charges[1].site].x);
    let mut points: [Vec<(f64, f64)>; 3] = Default::default();
    let mut excluded_cuts = Vec::new();
    for (key, (num, den)) in cut_sums(sector, epsilon, y0)? {
        if !map.cuts.contains(&key) {
            continue;
        }
        let x = key_x(key);
        if den <= 0.0 {
            excluded_cuts.push(x);
            continue;
        }
        if let Some(k) = map.k_of_x(x) {
            points[k].push((x, num / den));
        }
    }
    let sublattices: Vec<_> = points
        .into_iter()
        .enumerate()
        .filter_map(|(k, pts)| {
            let fit = fit_parabola(&pts, x_mid)?;
            Some(SublatticeWidth { k, points: pts, fit })
        })
        .collect();
    if sublattices.is_empty() {
        return Err(ObservableError::NoCuts);
    }
    Ok(WidthProfile {
        y0,
        x_mid,
        sublattices,
        excluded_cuts,
    })
}

/// Settings that must agree between a charged run and its vacuum reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub omega: f64,
    pub delta: f64,
    pub truncation: Truncation,
    pub n_cols: usize,
    pub n_rows: usize,
    pub backend: String,
    pub chi: Option<usize>,
    pub energy_tol: Option<f64>,
}

impl RunMeta {
    fn mismatch(&self, other: &Self) -> Option<String> {
        let mut diffs = Vec::new();
        if self.omega != other.omega {
            diffs.push("omega");
        }
        if self.delta != other.delta {
            diffs.push("delta");
        }
        if self.truncation != other.truncation {
            diffs.push("truncation");
        }
        if (self.n_cols, self.n_rows) != (other.n_cols, other.n_rows) {
            diffs.push("lattice");
        }
        if self.backend != other.backend || self.chi != other.chi || self.energy_tol != other.energy_tol {
            diffs.push("solver");
        }
        (!diffs.is_empty()).then(|| diffs.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialPoint {
    pub d: usize,
    pub r: f64,
    pub v: f64,
    pub meta: RunMeta,
}

impl PotentialPoint {
    /// Points may share a fit when `(Ω, Δ, χ, truncation, n_rows)` agree.
    pub fn comparable(&self, other: &Self) -> bool {
        let (a, b) = (&self.meta, &other.meta);
        a.omega == b.omega
            && a.delta == b.delta
            && a.chi == b.chi
            && a.truncation == b.truncation
            && a.n_rows == b.n_rows
    }
}

/// `V(R) = E_ch(R) - E_vac`.
pub fn potential_point(
    energy_ch: f64,
    meta_ch: &RunMeta,
    energy_vac: f64,
    meta_vac: &RunMeta,
    sector: &Sector,
) -> Result<PotentialPoint, ObservableError> {
    if let Some(diff) = meta_ch.mismatch(meta_vac) {
        return Err(ObservableError::SettingsMismatch(diff));
    }
    let p = sector.placement().ok_or(ObservableError::NoCharges)?;
    Ok(PotentialPoint {
        d: p.d,
        r: p.separation,
        v: energy_ch - energy_vac,
        meta: meta_ch.clone(),
    })
}

/// `1 - Π_{i ∈ S_up} ⟨n_i⟩`.
pub fn o_broken(expect: &StateExpectations, s_up: &[usize]) -> Result<f64, ObservableError> {
    if s_up.is_empty() {
        return Err(ObservableError::EmptySup);
    }
    let mut prod = 1.0;
    for &a in s_up {
        prod *= expect.n(a).map_err(|_| ObservableError::MissingDensity(a))?;
    }
    Ok(1.0 - prod)
}

/// `Σ_x |⟨Q_x⟩_ch - ⟨Q_x⟩_vac|` over dual sites away from the defects; large
/// values signal dynamical charges screening the static pair.
pub fn dynamical_charge_weight(
    sector: &Sector,
    ch: &GaugeSnapshot,
    vac: &GaugeSnapshot,
) -> Result<f64, ObservableError> {
    if ch.charge.len() != vac.charge.len() {
        return Err(ObservableError::LatticeMismatch(ch.charge.len(), vac.charge.len()));
    }
    Ok((0..ch.charge.len())
        .filter(|&s| !sector.is_defect(s))
        .map(|s| (ch.charge[s] - vac.charge[s]).abs())
        .sum())
}

/// Row of the width table consumed by the fit pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthRow {
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

/// Row of the potential table consumed by the fit pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialRow {
    pub delta: f64,
    pub omega: f64,
    pub n_rows: usize,
    pub chi: usize,
    pub d: usize,
    pub r: f64,
    pub v: f64,
    pub charge_weight: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Lattice, TransversePosition};

    fn rigid(d: usize) -> (Sector, Vec<Option<f64>>) {
        let lat = Lattice::new(2 * d + 9, 6).unwrap();
        let sector = Sector::charged(lat.clone(), d, TransversePosition::Line(4)).unwrap();
        let vac = Sector::vacuum(lat.clone());
        let ch = snapshot_of_config(&sector, sector.reference());
        let v = snapshot_of_config(&vac, vac.reference());
        let eps = epsilon_profile(&ch, &v).unwrap();
        (sector, eps)
    }

    #[test]
    fn rigid_epsilon_is_unit_on_strings() {
        let (sector, eps) = rigid(3);
        let strip: std::collections::BTreeSet<_> =
            sector.placement().unwrap().strip.iter().copied().collect();
        for (l, e) in sector.dual().links.iter().zip(&eps) {
            let Some(e) = e else { continue };
            let crosses = strip.contains(&l.atoms.0) != strip.contains(&l.atoms.1);
            assert_eq!(*e, if crosses { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn equal_snapshots_give_zero_epsilon() {
        let (sector, _) = rigid(2);
        let s = snapshot_of_config(&sector, sector.reference());
        assert!(epsilon_profile(&s, &s).unwrap().iter().flatten().all(|&e| e == 0.0));
    }

    #[test]
    fn rigid_width_is_flat_per_sublattice() {
        for d in 2..=5 {
            let (sector, eps) = rigid(d);
            let w = width_profile(&sector, &eps).unwrap();
            assert_eq!(w.sublattices.len(), 3, "d={d}");
            assert!(w.excluded_cuts.is_empty());
            for s in &w.sublattices {
                assert!(s.fit.c.abs() < 1e-10, "d={d} k={} c={}", s.k, s.fit.c);
                for &(_, w2) in &s.points {
                    assert!((w2 - s.w2_mid()).abs() < 1e-12);
                }
            }
            let w0 = w.w2_mid(0).unwrap();
            let w1 = w.w2_mid(1).unwrap();
            let w2 = w.w2_mid(2).unwrap();
            assert!(w0 > w1 && w1 > w2);
            assert!((w0 - 0.5625).abs() < 1e-12);
            assert!((w1 - 0.25).abs() < 1e-12);
            assert!((w2 - 0.0625).abs() < 1e-12);
        }
    }

    #[test]
    fn parabola_fit_identity() {
        let pts: Vec<_> = (0..7).map(|i| {
            let x = i as f64 * 0.8;
            (x, 0.3 * (x - 2.0).powi(2) + 1.25)
        }).collect();
        let p = fit_parabola(&pts, 2.0).unwrap();
        assert!((p.c - 0.3).abs() < 1e-12);
        assert!(p.s.abs() < 1e-12);
        assert!((p.b - 1.25).abs() < 1e-12);
        assert!((p.apex().unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn few_points_fall_back() {
        let p = fit_parabola(&[(1.0, 2.0)], 0.0).unwrap();
        assert_eq!((p.c, p.s, p.b), (0.0, 0.0, 2.0));
        let p = fit_parabola(&[(1.0, 2.0), (3.0, 4.0)], 2.0).unwrap();
        assert!((p.b - 3.0).abs() < 1e-12 && (p.s - 1.0).abs() < 1e-12);
        assert!(fit_parabola(&[], 0.0).is_none());
    }

    #[test]
    fn o_broken_basis_states() {
        let (sector, _) = rigid(3);
        let p = sector.placement().unwrap();
        let mut c = sector.reference().clone();
        let e = StateExpectations::from_config(&sector, &c);
        assert_eq!(o_broken(&e, &p.s_up).unwrap(), 0.0);
        c.set(p.s_up[1], false);
        let e = StateExpectations::from_config(&sector, &c);
        assert_eq!(o_broken(&e, &p.s_up).unwrap(), 1.0);
        assert_eq!(o_broken(&e, &[]), Err(ObservableError::EmptySup));
    }

    #[test]
    fn potential_point_guards_settings() {
        let (sector, _) = rigid(3);
        let meta = RunMeta {
            omega: 0.18,
            delta: 3.3,
            truncation: Truncation::Three,
            n_cols: 15,
            n_rows: 6,
            backend: "ed".into(),
            chi: None,
            energy_tol: None,
        };
        let p = potential_point(-2.0, &meta, -2.0, &meta, &sector).unwrap();
        assert_eq!(p.v, 0.0);
        assert_eq!(p.r, sector.placement().unwrap().separation);
        let mut other = meta.clone();
        other.delta = 3.2;
        assert!(matches!(
            potential_point(-2.0, &meta, -2.0, &other, &sector),
            Err(ObservableError::SettingsMismatch(_))
        ));
    }
}
