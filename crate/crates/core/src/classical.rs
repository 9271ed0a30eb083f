//! The `Ω = 0` limit. Tension, pair mass and breaking distance are closed
//! form at third-neighbour truncation; loop resonances come from diagonal
//! energies of single flips.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gauge::SpinConfiguration;
use crate::hamiltonian::{build_couplings, energy_difference, ModelParams};
use crate::lattice::{
    ChargePlacement, Lattice, Truncation, SQRT3, VACUUM_GROUND_SUBLATTICE,
};
use crate::sector::Sector;

#[derive(Debug, Error, PartialEq)]
pub enum ClassicalError {
    #[error("string tension is not positive at Δ/U = {delta}; strings never break")]
    NoBreaking { delta: f64 },
}

/// 2/3 pattern: every atom off the ground sublattice is excited.
pub fn vacuum_configuration(lattice: &Lattice) -> SpinConfiguration {
    SpinConfiguration::new(
        (0..lattice.len())
            .map(|a| lattice.sublattice(a) != VACUUM_GROUND_SUBLATTICE)
            .collect(),
    )
}

/// Vacuum with the strip between the defects flipped.
pub fn rigid_string_configuration(
    lattice: &Lattice,
    placement: &ChargePlacement,
) -> SpinConfiguration {
    let mut c = vacuum_configuration(lattice);
    for &a in &placement.strip {
        c.flip(a);
    }
    c
}

/// `V(R) = σR + 2m` at `Ω = 0`, third-neighbour couplings, `U = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalStringModel {
    pub delta: f64,
    pub sigma: f64,
    pub mass2: f64,
}

const U2: f64 = 1.0 / 27.0;
const U3: f64 = 1.0 / 64.0;

impl ClassicalStringModel {
    pub fn new(delta_over_u: f64) -> Self {
        Self {
            delta: delta_over_u,
            sigma: (delta_over_u - (3.0 + 9.0 * U2 - 2.0 * U3)) / SQRT3,
            mass2: 5.0 * delta_over_u / 3.0 - (4.0 + 10.0 * U2 + 20.0 * U3 / 3.0),
        }
    }

    /// `Δ/U` where the tension vanishes.
    pub fn tension_root() -> f64 {
        3.0 + 9.0 * U2 - 2.0 * U3
    }

    /// `Δ/U` where the pair mass vanishes.
    pub fn mass_root() -> f64 {
        0.6 * (4.0 + 10.0 * U2 + 20.0 * U3 / 3.0)
    }

    pub fn potential(&self, separation: f64) -> f64 {
        self.sigma * separation + self.mass2
    }

    /// `d* = 2m/σ` in units of `a` (same units as `R`).
    pub fn breaking_distance(&self) -> Result<f64, ClassicalError> {
        if self.sigma > 0.0 {
            Ok(self.mass2 / self.sigma)
        } else {
            Err(ClassicalError::NoBreaking { delta: self.delta })
        }
    }
}

pub fn classical_potential(delta_over_u: f64, separation: f64) -> f64 {
    ClassicalStringModel::new(delta_over_u).potential(separation)
}

pub fn breaking_distance(delta_over_u: f64) -> Result<f64, ClassicalError> {
    ClassicalStringModel::new(delta_over_u).breaking_distance()
}

/// Diagonal energy of the rigid string minus that of the vacuum, summed term
/// by term over both Hamiltonians.
pub fn rigid_string_energy(sector: &Sector, delta_over_u: f64, truncation: Truncation) -> f64 {
    let params = ModelParams::classical(delta_over_u, truncation);
    let vacuum = Sector::vacuum(sector.lattice().clone());
    let h_ch = build_couplings(sector, &params);
    let h_vac = build_couplings(&vacuum, &params);
    energy_difference(&h_ch, sector.reference(), &h_vac, vacuum.reference())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resonances {
    /// `Δ/U` where one flipped excited atom (a string loop) costs nothing.
    pub string_loop: f64,
    /// `Δ/U` where one flipped ground atom (a charged loop) costs nothing.
    pub charged_loop: f64,
}

/// Locate both loop resonances on a defect-free lattice. The energy cost of a
/// single flip is affine in `Δ`, so two evaluations fix the root.
pub fn resonance_points(truncation: Truncation) -> Resonances {
    let lattice = Lattice::new(9, 8).expect("fixed size is valid");
    let sector = Sector::vacuum(lattice.clone());
    let vac = sector.reference().clone();
    let centre = |excited: bool| {
        (0..lattice.len())
            .filter(|&a| vac.is_rydberg(a) == excited)
            .min_by(|&a, &b| {
                let (sa, sb) = (lattice.site(a), lattice.site(b));
                let da = (sa.x - 3.5).powi(2) + (sa.y - 3.75).powi(2);
                let db = (sb.x - 3.5).powi(2) + (sb.y - 3.75).powi(2);
                da.total_cmp(&db)
            })
            .expect("lattice has both kinds of atoms")
    };
    let root = |atom: usize| {
        let mut flipped = vac.clone();
        flipped.flip(atom);
        let cost = |delta: f64| {
            let h = build_couplings(&sector, &ModelParams::classical(delta, truncation));
            energy_difference(&h, &flipped, &h, &vac)
        };
        let (c0, c1) = (cost(0.0), cost(1.0));
        -c0 / (c1 - c0)
    };
    Resonances {
        string_loop: root(centre(true)),
        charged_loop: root(centre(false)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::TransversePosition;

    #[test]
    fn tension_root_value() {
        let root = ClassicalStringModel::tension_root();
        assert!((root - 3.302_083_333_333_333).abs() < 1e-14);
        assert!(ClassicalStringModel::new(root).sigma.abs() < 1e-15);
    }

    #[test]
    fn mass_root_value() {
        let root = ClassicalStringModel::mass_root();
        assert!(ClassicalStringModel::new(root).mass2.abs() < 1e-14);
        assert!((root - 2.684_722_222_222_222).abs() < 1e-14, "{root}");
    }

    #[test]
    fn breaking_distance_diverges_at_tension_root() {
        let root = ClassicalStringModel::tension_root();
        assert!(breaking_distance(root).is_err());
        let near = breaking_distance(root + 1e-6).unwrap();
        assert!(near > 1e5);
        let at_six = breaking_distance(6.0).unwrap();
        assert!(at_six > 0.0 && at_six < 10.0);
    }

    #[test]
    fn interior_rigid_string_matches_closed_form() {
        let lat = Lattice::new(17, 6).unwrap();
        for d in 2..=4 {
            let sector = Sector::charged(lat.clone(), d, TransversePosition::Line(4)).unwrap();
            let p = sector.placement().unwrap();
            for delta in [3.2, 3.32, 4.0] {
                let got = rigid_string_energy(&sector, delta, Truncation::Three);
                let want = classical_potential(delta, p.separation);
                assert!((got - want).abs() <= 1e-12 * want.abs(), "d={d} Δ={delta}");
            }
        }
    }

    #[test]
    fn resonances_near_quoted_values() {
        let r = resonance_points(Truncation::Three);
        assert!((r.string_loop - 3.27).abs() < 0.01);
        assert!((r.charged_loop - 6.0).abs() < 0.1);
    }

    #[test]
    fn fifth_shell_shifts_resonances() {
        let r3 = resonance_points(Truncation::Three);
        let r5 = resonance_points(Truncation::Five);
        assert!(r5.string_loop > r3.string_loop);
        assert!(r5.charged_loop > r3.charged_loop);
    }
}
