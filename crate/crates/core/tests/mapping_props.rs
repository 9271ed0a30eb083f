use proptest::prelude::*;

use rydlink::gauge::{
    audit_configurations, audit_vacuum, charge_of, dimer_of, gauss_residual, snapshot_of_config,
};
use rydlink::lattice::{CouplingClass, Lattice, TransversePosition, Truncation};
use rydlink::{Sector, SpinConfiguration};

fn config_from_bits(n: usize, bits: u64) -> SpinConfiguration {
    SpinConfiguration::new((0..n).map(|k| bits >> k & 1 == 1).collect())
}

#[test]
fn exhaustive_three_by_three() {
    let sector = Sector::vacuum(Lattice::new(3, 3).unwrap());
    let report = audit_configurations(&sector, (0..512u64).map(|b| config_from_bits(9, b)));
    assert_eq!(report.configurations, 512);
    assert!(report.is_clean(), "{report:?}");
    assert!(audit_vacuum(&sector).is_empty());
}

#[test]
fn corrupted_stagger_is_detected_at_its_sites() {
    let lat = Lattice::new(3, 3).unwrap();
    let mut dual = rydlink::DualLattice::new(&lat);
    let link = dual.links.iter().position(|l| !l.is_dangling()).unwrap();
    let (a, b) = dual.links[link].sites;
    dual.corrupt_stagger(link);
    let sector = Sector::from_parts(lat, dual, None);
    let report = audit_configurations(&sector, (0..512u64).map(|b| config_from_bits(9, b)));
    // The Gauss law only sees (-1)^s_l S_l = D_l - 1/2, so the corruption
    // surfaces in the vacuum audit of that link.
    assert!(report.gauss_violations.is_empty());
    assert_eq!(report.vacuum_violations, vec![link]);
    let mut want: Vec<usize> = std::iter::once(a).chain(b).collect();
    want.sort_unstable();
    assert_eq!(report.affected_sites(&sector), want);
}

#[test]
fn bond_bijection_and_degree() {
    for (n, m) in [(2, 2), (3, 3), (6, 4), (9, 7)] {
        let lat = Lattice::new(n, m).unwrap();
        let dual = rydlink::DualLattice::new(&lat);
        let bonds = lat.bonds();
        assert_eq!(dual.links.len(), bonds.len());
        for (id, l) in dual.links.iter().enumerate() {
            assert_eq!(dual.link_of_bond(l.atoms.0, l.atoms.1), Some(id));
            assert_eq!(dual.link_of_bond(l.atoms.1, l.atoms.0), Some(id));
        }
        for s in &dual.sites {
            assert_eq!(s.links.len(), 3);
        }
    }
}

#[test]
fn shells_partition_pairs() {
    let lat = Lattice::new(8, 7).unwrap();
    let pairs = lat.neighbor_pairs(Truncation::Five);
    let mut seen = std::collections::HashSet::new();
    for p in &pairs {
        assert!(seen.insert((p.i, p.j)));
        assert!((lat.distance(p.i, p.j) - p.class.distance()).abs() < 1e-9);
    }
    let expected = [1.0, 3f64.sqrt(), 2.0, 7f64.sqrt(), 3.0];
    for (c, d) in CouplingClass::ALL.iter().zip(expected) {
        assert!((c.distance() - d).abs() < 1e-15);
    }
    let three = lat.neighbor_pairs(Truncation::Three);
    assert!(three.iter().all(|p| p.class.order() <= 3));
    assert_eq!(
        three.len(),
        pairs.iter().filter(|p| p.class.order() <= 3).count()
    );
}

#[test]
fn defects_leave_other_gauss_sectors_unchanged() {
    let lat = Lattice::new(13, 4).unwrap();
    let sector = Sector::charged(lat.clone(), 3, TransversePosition::Boundary).unwrap();
    let vac = Sector::vacuum(lat);
    let with = gauss_residual(&sector, &snapshot_of_config(&sector, sector.reference()));
    let without = gauss_residual(&vac, &snapshot_of_config(&vac, vac.reference()));
    for s in 0..with.len() {
        if !sector.is_defect(s) {
            assert_eq!(with[s], without[s]);
            assert_eq!(with[s], 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn random_configs_obey_gauss_and_two_to_one(bits in any::<u64>()) {
        let sector = Sector::vacuum(Lattice::new(6, 4).unwrap());
        let c = config_from_bits(24, bits);
        let report = audit_configurations(&sector, [c.clone()]);
        prop_assert!(report.is_clean());
        let flipped = c.globally_flipped();
        for l in 0..sector.dual().links.len() {
            prop_assert_eq!(dimer_of(&sector, &c, l), dimer_of(&sector, &flipped, l));
        }
        for s in 0..sector.dual().sites.len() {
            prop_assert_eq!(charge_of(&sector, &c, s), charge_of(&sector, &flipped, s));
        }
    }

    #[test]
    fn charged_sector_random_configs(seed in any::<u64>()) {
        let lat = Lattice::new(11, 4).unwrap();
        let sector = Sector::charged(lat, 2, TransversePosition::Boundary).unwrap();
        let bits: Vec<bool> = (0..sector.n_active()).map(|k| (seed.rotate_left(k as u32 * 7) ^ (k as u64 * 0x9e37)) & 1 == 1).collect();
        let c = sector.config_from_active(&bits);
        let snap = snapshot_of_config(&sector, &c);
        let residual = gauss_residual(&sector, &snap);
        for s in 0..residual.len() {
            if !sector.is_defect(s) || sector.static_charge(s) != 0 {
                prop_assert!(residual[s].abs() < 1e-12);
            }
        }
        for (&e, _) in snap.e_field.iter().zip(0..) {
            prop_assert!(e == 0.5 || e == -0.5);
        }
        let total: f64 = snap.charge.iter().sum::<f64>()
            + (0..residual.len()).map(|s| sector.static_charge(s) as f64).sum::<f64>();
        prop_assert_eq!(total.rem_euclid(2.0), 0.0);
    }
}
