//! Brute-force diagonal energies from raw coordinates, compared with the
//! closed-form string potential and the resonance finder.

use std::collections::BTreeMap;

use rydlink::classical::{classical_potential, resonance_points, rigid_string_energy};
use rydlink::lattice::{Lattice, TransversePosition, Truncation};
use rydlink::{vacuum_configuration, ClassicalStringModel, Sector, SpinConfiguration};

/// Per-term diagonal energy keyed by atom pair (`(i, i)` for the detuning).
fn terms(
    lat: &Lattice,
    removed: &[usize],
    c: &SpinConfiguration,
    delta: f64,
) -> BTreeMap<(usize, usize), f64> {
    let live = |a: usize| !removed.contains(&a) && c.is_rydberg(a);
    let mut t = BTreeMap::new();
    for i in 0..lat.len() {
        if !live(i) {
            continue;
        }
        t.insert((i, i), -delta);
        for j in i + 1..lat.len() {
            if !live(j) {
                continue;
            }
            let (si, sj) = (lat.site(i), lat.site(j));
            let r2 = (si.x - sj.x).powi(2) + (si.y - sj.y).powi(2);
            let u = if (r2 - 1.0).abs() < 1e-9 {
                1.0
            } else if (r2 - 3.0).abs() < 1e-9 {
                1.0 / 27.0
            } else if (r2 - 4.0).abs() < 1e-9 {
                1.0 / 64.0
            } else {
                continue;
            };
            t.insert((i, j), u);
        }
    }
    t
}

fn difference(a: &BTreeMap<(usize, usize), f64>, b: &BTreeMap<(usize, usize), f64>) -> f64 {
    let mut keys: Vec<_> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    let mut d: Vec<f64> = keys
        .into_iter()
        .map(|k| a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0))
        .collect();
    d.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    d.iter().sum()
}

fn brute_force_string(d: usize, delta: f64) -> (f64, f64) {
    let lat = Lattice::new(2 * d + 9, 6).unwrap();
    let sector = Sector::charged(lat.clone(), d, TransversePosition::Line(4)).unwrap();
    let p = sector.placement().unwrap();
    let removed: Vec<usize> = p.removed.iter().copied().collect();
    let vac = vacuum_configuration(&lat);
    let mut string = vac.clone();
    for &a in &p.strip {
        string.flip(a);
    }
    (
        difference(&terms(&lat, &removed, &string, delta), &terms(&lat, &[], &vac, delta)),
        p.separation,
    )
}

#[test]
fn closed_form_matches_brute_force_for_interior_strings() {
    for d in 2..=6 {
        for i in 0..10 {
            let delta = 3.2 + 0.8 * i as f64 / 9.0;
            let (oracle, r) = brute_force_string(d, delta);
            let v = classical_potential(delta, r);
            assert!((v - oracle).abs() <= 1e-12 * oracle.abs(), "d={d} Δ={delta}: {v} vs {oracle}");
        }
    }
}

#[test]
fn library_energy_difference_matches_brute_force() {
    for d in [2, 5] {
        let lat = Lattice::new(2 * d + 9, 6).unwrap();
        let sector = Sector::charged(lat, d, TransversePosition::Line(4)).unwrap();
        for delta in [3.25, 3.5] {
            let lib = rigid_string_energy(&sector, delta, Truncation::Three);
            let (oracle, _) = brute_force_string(d, delta);
            assert!((lib - oracle).abs() <= 1e-12 * oracle.abs());
        }
    }
}

#[test]
fn separation_formula() {
    let lat = Lattice::new(21, 6).unwrap();
    for d in 1..=6 {
        let sector = Sector::charged(lat.clone(), d, TransversePosition::Line(4)).unwrap();
        let p = sector.placement().unwrap();
        let dual = sector.dual();
        let (a, b) = (&dual.sites[p.charges[0].site], &dual.sites[p.charges[1].site]);
        let r = ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt();
        assert!((r - 3f64.sqrt() * (d as f64 + 1.0 / 3.0)).abs() < 1e-12);
        assert!((p.separation - r).abs() < 1e-12);
    }
}

#[test]
fn potential_is_affine() {
    let f = |delta: f64, r: f64| classical_potential(delta, r);
    let (d0, r0) = (3.4, 5.0);
    let dr = f(d0, r0 + 1.0) - f(d0, r0);
    assert!((f(d0, r0 + 3.0) - f(d0, r0) - 3.0 * dr).abs() < 1e-12);
    let dd = f(d0 + 0.1, r0) - f(d0, r0);
    assert!((f(d0 + 0.4, r0) - f(d0, r0) - 4.0 * dd).abs() < 1e-12);
}

#[test]
fn breaking_distance_decreases_above_tension_root() {
    let root = ClassicalStringModel::tension_root();
    let mut last = f64::INFINITY;
    for i in 1..50 {
        let d = ClassicalStringModel::new(root + 0.05 * i as f64).breaking_distance().unwrap();
        assert!(d < last);
        last = d;
    }
}

#[test]
fn resonances_match_neighbour_counting() {
    // A flipped excited atom loses 3 NN, 6 second and 3 third excited partners;
    // a flipped ground atom gains 6 NN, 0 second and 6 third.
    let r = resonance_points(Truncation::Three);
    let string_loop = 3.0 + 6.0 / 27.0 + 3.0 / 64.0;
    let charged_loop = 6.0 + 6.0 / 64.0;
    assert!((r.string_loop - string_loop).abs() < 1e-12, "{}", r.string_loop);
    assert!((r.charged_loop - charged_loop).abs() < 1e-12, "{}", r.charged_loop);
}
