//! Exact matrix product operator for the Rydberg term list, built as a finite
//! state machine over the chain.
//!
//! Bond states are `INIT` (nothing placed yet), `DONE` (a complete term has
//! been placed) and one channel per chain site whose `n` is waiting for a
//! partner further right.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use rydlink::CouplingList;

use crate::ordering::SiteOrdering;

/// Single-site operator `⟨s|O|s'⟩`, `s = 0` ground, `s = 1` excited.
pub type Op2 = [[f64; 2]; 2];

pub const IDENTITY: Op2 = [[1.0, 0.0], [0.0, 1.0]];
pub const NUMBER: Op2 = [[0.0, 0.0], [0.0, 1.0]];
pub const GROUND: Op2 = [[1.0, 0.0], [0.0, 0.0]];
pub const SIGMA_X: Op2 = [[0.0, 1.0], [1.0, 0.0]];

pub const INIT: usize = 0;
pub const DONE: usize = 1;

pub fn scaled(op: Op2, c: f64) -> Op2 {
    [[op[0][0] * c, op[0][1] * c], [op[1][0] * c, op[1][1] * c]]
}

/// Nonzero blocks `W[a, b]` of one site tensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MpoSite {
    pub wl: usize,
    pub wr: usize,
    pub terms: Vec<(usize, usize, Op2)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mpo {
    pub sites: Vec<MpoSite>,
}

impl Mpo {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn max_bond_dim(&self) -> usize {
        self.sites.iter().map(|s| s.wr.max(s.wl)).max().unwrap_or(0)
    }

    /// `H = 0` on `n` sites.
    pub fn zero(n: usize) -> Self {
        let site = MpoSite {
            wl: 2,
            wr: 2,
            terms: vec![(INIT, INIT, IDENTITY), (DONE, DONE, IDENTITY)],
        };
        Self {
            sites: vec![site; n],
        }
    }
}

/// Lower a coupling list to an MPO along `ordering`.
pub fn to_mpo(couplings: &CouplingList, ordering: &SiteOrdering) -> Mpo {
    let n = ordering.len();
    // partners[c] = (d, V) for every pair with chain positions c < d.
    let mut partners: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for p in &couplings.pairs {
        let (a, b) = (ordering.position[p.i], ordering.position[p.j]);
        let (lo, hi) = (a.min(b), a.max(b));
        *partners[lo].entry(hi).or_insert(0.0) += p.value;
    }
    let last_partner: Vec<Option<usize>> =
        partners.iter().map(|m| m.keys().next_back().copied()).collect();
    // Open channels on the bond to the right of chain site c.
    let open_after = |c: usize| -> Vec<usize> {
        (0..=c)
            .filter(|&src| last_partner[src].is_some_and(|q| q > c))
            .collect()
    };
    let mut left_channels: Vec<usize> = Vec::new();
    let mut sites = Vec::with_capacity(n);
    for c in 0..n {
        let right_channels = open_after(c);
        let lidx = |src: usize| 2 + left_channels.iter().position(|&x| x == src).unwrap();
        let ridx = |src: usize| 2 + right_channels.iter().position(|&x| x == src).unwrap();
        let k = ordering.chain[c];
        let onsite = {
            let f = couplings.field[k];
            let d = couplings.detuning[k];
            [[0.0, f], [f, d]]
        };
        let mut terms = vec![(INIT, INIT, IDENTITY), (DONE, DONE, IDENTITY), (INIT, DONE, onsite)];
        if right_channels.contains(&c) {
            terms.push((INIT, ridx(c), NUMBER));
        }
        for &src in &left_channels {
            if let Some(&v) = partners[src].get(&c) {
                terms.push((lidx(src), DONE, scaled(NUMBER, v)));
            }
            if right_channels.contains(&src) {
                terms.push((lidx(src), ridx(src), IDENTITY));
            }
        }
        sites.push(MpoSite {
            wl: 2 + left_channels.len(),
            wr: 2 + right_channels.len(),
            terms,
        });
        left_channels = right_channels;
    }
    Mpo { sites }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rydlink::lattice::{Lattice, Truncation};
    use rydlink::{build_couplings, classical_energy, ModelParams, Sector};

    /// Contract the MPO between two product basis states.
    fn matrix_element(mpo: &Mpo, bra: &[usize], ket: &[usize]) -> f64 {
        let mut v = vec![0.0; 2];
        v[INIT] = 1.0;
        for (c, site) in mpo.sites.iter().enumerate() {
            let mut next = vec![0.0; site.wr];
            for &(a, b, op) in &site.terms {
                next[b] += v[a] * op[bra[c]][ket[c]];
            }
            v = next;
        }
        v[DONE]
    }

    #[test]
    fn diagonal_matches_classical_energy() {
        let sector = Sector::vacuum(Lattice::new(4, 3).unwrap());
        let h = build_couplings(&sector, &ModelParams::ratios(0.4, 3.2, Truncation::Three));
        let o = SiteOrdering::snake(&sector);
        let mpo = to_mpo(&h, &o);
        for s in [0usize, 1, 0b1010_1100_0111, 4095, 1234] {
            let c = sector.config_from_basis_index(s);
            let bits: Vec<usize> = o.chain.iter().map(|&k| s >> k & 1).collect();
            let e = matrix_element(&mpo, &bits, &bits);
            assert!((e - classical_energy(&c, &h)).abs() < 1e-12);
        }
    }

    #[test]
    fn single_flip_elements_are_half_omega() {
        let sector = Sector::vacuum(Lattice::new(3, 3).unwrap());
        let h = build_couplings(&sector, &ModelParams::ratios(0.4, 3.2, Truncation::Three));
        let o = SiteOrdering::snake(&sector);
        let mpo = to_mpo(&h, &o);
        let ket = vec![0, 1, 1, 0, 1, 0, 1, 1, 0];
        for c in 0..9 {
            let mut bra = ket.clone();
            bra[c] ^= 1;
            assert!((matrix_element(&mpo, &bra, &ket) - 0.2).abs() < 1e-15);
        }
        let mut two = ket.clone();
        two[0] ^= 1;
        two[4] ^= 1;
        assert_eq!(matrix_element(&mpo, &two, &ket), 0.0);
    }

    #[test]
    fn bond_dimension_is_bounded_by_range() {
        let sector = Sector::vacuum(Lattice::new(10, 4).unwrap());
        let h = build_couplings(&sector, &ModelParams::ratios(0.1, 3.0, Truncation::Three));
        let mpo = to_mpo(&h, &SiteOrdering::snake(&sector));
        assert!(mpo.max_bond_dim() <= 2 + 2 * 4 + 4, "{}", mpo.max_bond_dim());
        let h5 = build_couplings(&sector, &ModelParams::ratios(0.1, 3.0, Truncation::Five));
        let mpo5 = to_mpo(&h5, &SiteOrdering::snake(&sector));
        assert!(mpo5.max_bond_dim() > mpo.max_bond_dim());
    }
}
