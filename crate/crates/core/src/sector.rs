//! A lattice together with its static-charge sector.
//!
//! Removed atoms are excluded from the Hilbert space: `active_atoms()` lists
//! the lattice atoms that carry a qubit, in lattice order. Links crossing a
//! removed atom are frozen to the value they take in the reference
//! configuration (the vacuum, or the rigid string when charges are present).

use serde::{Deserialize, Serialize};

use crate::classical::{rigid_string_configuration, vacuum_configuration};
use crate::gauge::SpinConfiguration;
use crate::lattice::{ChargePlacement, DualLattice, Lattice, LatticeError, TransversePosition};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Sector {
    lattice: Lattice,
    dual: DualLattice,
    placement: Option<ChargePlacement>,
    active: Vec<usize>,
    active_of: Vec<Option<usize>>,
    reference: SpinConfiguration,
    frozen: Vec<bool>,
    defect: Vec<bool>,
    static_charge: Vec<i8>,
}

impl Sector {
    pub fn vacuum(lattice: Lattice) -> Self {
        let dual = DualLattice::new(&lattice);
        Self::assemble(lattice, dual, None)
    }

    pub fn charged(
        lattice: Lattice,
        d: usize,
        position: TransversePosition,
    ) -> Result<Self, LatticeError> {
        let dual = DualLattice::new(&lattice);
        let placement = ChargePlacement::new(&lattice, &dual, d, position)?;
        Ok(Self::assemble(lattice, dual, Some(placement)))
    }

    /// Build from an explicit (possibly modified) dual lattice.
    pub fn from_parts(
        lattice: Lattice,
        dual: DualLattice,
        placement: Option<ChargePlacement>,
    ) -> Self {
        Self::assemble(lattice, dual, placement)
    }

    fn assemble(lattice: Lattice, dual: DualLattice, placement: Option<ChargePlacement>) -> Self {
        let removed = |a: usize| placement.as_ref().is_some_and(|p| p.removed.contains(&a));
        let mut active = Vec::with_capacity(lattice.len());
        let mut active_of = vec![None; lattice.len()];
        for a in 0..lattice.len() {
            if !removed(a) {
                active_of[a] = Some(active.len());
                active.push(a);
            }
        }
        let reference = match &placement {
            Some(p) => rigid_string_configuration(&lattice, p),
            None => vacuum_configuration(&lattice),
        };
        let frozen = dual
            .links
            .iter()
            .map(|l| removed(l.atoms.0) || removed(l.atoms.1))
            .collect();
        let defect = dual
            .sites
            .iter()
            .map(|s| s.atoms.iter().any(|&a| removed(a)))
            .collect();
        let mut static_charge = vec![0i8; dual.sites.len()];
        if let Some(p) = &placement {
            for c in &p.charges {
                static_charge[c.site] = c.q;
            }
        }
        Self {
            lattice,
            dual,
            placement,
            active,
            active_of,
            reference,
            frozen,
            defect,
            static_charge,
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn dual(&self) -> &DualLattice {
        &self.dual
    }

    pub fn placement(&self) -> Option<&ChargePlacement> {
        self.placement.as_ref()
    }

    pub fn reference(&self) -> &SpinConfiguration {
        &self.reference
    }

    pub fn active_atoms(&self) -> &[usize] {
        &self.active
    }

    pub fn n_active(&self) -> usize {
        self.active.len()
    }

    pub fn active_index(&self, atom: usize) -> Option<usize> {
        self.active_of[atom]
    }

    pub fn is_removed(&self, atom: usize) -> bool {
        self.active_of[atom].is_none()
    }

    pub fn is_frozen(&self, link: usize) -> bool {
        self.frozen[link]
    }

    pub fn is_defect(&self, site: usize) -> bool {
        self.defect[site]
    }

    pub fn static_charge(&self, site: usize) -> i8 {
        self.static_charge[site]
    }

    /// Restrict a full-lattice configuration to the active atoms.
    pub fn active_bits(&self, config: &SpinConfiguration) -> Vec<bool> {
        self.active.iter().map(|&a| config.is_rydberg(a)).collect()
    }

    /// Lift active-atom occupations to a full configuration; removed atoms
    /// take their reference value.
    pub fn config_from_active(&self, bits: &[bool]) -> SpinConfiguration {
        let mut config = self.reference.clone();
        for (&a, &b) in self.active.iter().zip(bits) {
            config.set(a, b);
        }
        config
    }

    /// Computational-basis index of a configuration (active atom `k` is bit `k`).
    pub fn basis_index(&self, config: &SpinConfiguration) -> usize {
        self.active
            .iter()
            .enumerate()
            .filter(|(_, &a)| config.is_rydberg(a))
            .fold(0, |acc, (k, _)| acc | 1 << k)
    }

    pub fn config_from_basis_index(&self, index: usize) -> SpinConfiguration {
        let bits: Vec<bool> = (0..self.active.len()).map(|k| index >> k & 1 == 1).collect();
        self.config_from_active(&bits)
    }

    /// Atom pairs whose `⟨n_i n_j⟩` the gauge map needs (non-frozen bonds).
    pub fn required_pairs(&self) -> Vec<(usize, usize)> {
        self.dual
            .links
            .iter()
            .enumerate()
            .filter(|(id, _)| !self.frozen[*id])
            .map(|(_, l)| l.atoms)
            .collect()
    }

    /// Triangles whose projector expectations the gauge map needs.
    pub fn required_triples(&self) -> Vec<[usize; 3]> {
        self.dual
            .sites
            .iter()
            .enumerate()
            .filter(|(id, _)| !self.defect[*id])
            .map(|(_, s)| s.atoms)
            .collect()
    }
}
