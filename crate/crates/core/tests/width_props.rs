use proptest::prelude::*;

use rydlink::gauge::{snapshot_of_config, StateExpectations};
use rydlink::lattice::{Lattice, TransversePosition};
use rydlink::observables::{epsilon_profile, o_broken, width_profile};
use rydlink::Sector;

fn charged(d: usize) -> Sector {
    Sector::charged(Lattice::new(2 * d + 9, 6).unwrap(), d, TransversePosition::Line(4)).unwrap()
}

#[test]
fn symmetric_epsilon_puts_apex_at_midpoint() {
    for d in 3..=6 {
        let sector = charged(d);
        let p = sector.placement().unwrap();
        let dual = sector.dual();
        let xm = 0.5 * (dual.sites[p.charges[0].site].x + dual.sites[p.charges[1].site].x);
        let yc = p.charge_y();
        // A smooth bump symmetric about x_m whose spread grows towards the middle.
        let eps: Vec<Option<f64>> = dual
            .links
            .iter()
            .enumerate()
            .map(|(l, link)| {
                (!sector.is_frozen(l)).then(|| {
                    let u = (link.x - xm) / (p.separation / 2.0);
                    let s = 0.6 + 0.4 * (1.0 - u * u);
                    (-(link.y - yc).powi(2) / (2.0 * s * s)).exp()
                })
            })
            .collect();
        let w = width_profile(&sector, &eps).unwrap();
        for s in &w.sublattices {
            if s.points.len() >= 3 {
                let apex = s.fit.apex().unwrap();
                assert!((apex - xm).abs() < 1e-8, "d={d} k={} apex={apex} xm={xm}", s.k);
            }
        }
    }
}

#[test]
fn cut_flux_is_positive_between_charges() {
    // Gauss law forces a net +1 flux per string through any cut between the
    // charges; with the vacuum subtracted the cut sum of ε counts both strings.
    let sector = charged(4);
    let vac = Sector::vacuum(sector.lattice().clone());
    let eps = epsilon_profile(
        &snapshot_of_config(&sector, sector.reference()),
        &snapshot_of_config(&vac, vac.reference()),
    )
    .unwrap();
    let p = sector.placement().unwrap();
    let dual = sector.dual();
    let xm = 0.5 * (dual.sites[p.charges[0].site].x + dual.sites[p.charges[1].site].x);
    let total: f64 = dual
        .links
        .iter()
        .zip(&eps)
        .filter(|(l, _)| (l.x - xm).abs() < 1e-9)
        .filter_map(|(_, e)| *e)
        .sum();
    assert!(total > 0.0);
}

proptest! {
    #[test]
    fn o_broken_monotone_and_bounded(ps in prop::collection::vec(0.0f64..=1.0, 3), which in 0usize..3, drop in 0.0f64..1.0) {
        let sector = charged(3);
        let s_up = sector.placement().unwrap().s_up.clone();
        let mut e = StateExpectations::from_config(&sector, sector.reference());
        for (a, p) in s_up.iter().zip(&ps) {
            e.density[*a] = Some(*p);
        }
        let before = o_broken(&e, &s_up).unwrap();
        let want = 1.0 - ps.iter().product::<f64>();
        prop_assert!((before - want).abs() < 1e-15);
        prop_assert!((0.0..=1.0).contains(&before));
        let a = s_up[which];
        e.density[a] = Some(ps[which] * drop);
        prop_assert!(o_broken(&e, &s_up).unwrap() >= before);
    }

    #[test]
    fn basis_epsilon_is_ternary(bits in prop::collection::vec(any::<bool>(), 64)) {
        let sector = charged(2);
        let vac = Sector::vacuum(sector.lattice().clone());
        let c = sector.config_from_active(&bits[..sector.n_active().min(64)]);
        let eps = epsilon_profile(
            &snapshot_of_config(&sector, &c),
            &snapshot_of_config(&vac, vac.reference()),
        ).unwrap();
        for e in eps.into_iter().flatten() {
            prop_assert!(e == -1.0 || e == 0.0 || e == 1.0);
        }
    }
}
