//! One-dimensional orderings of the active atoms.

use serde::{Deserialize, Serialize};

use rydlink::Sector;

/// `chain[c]` is the active atom at chain position `c`; `position` inverts it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteOrdering {
    pub chain: Vec<usize>,
    pub position: Vec<usize>,
}

impl SiteOrdering {
    pub fn from_chain(chain: Vec<usize>) -> Self {
        let mut position = vec![usize::MAX; chain.len()];
        for (c, &k) in chain.iter().enumerate() {
            assert_eq!(position[k], usize::MAX, "active index {k} repeated");
            position[k] = c;
        }
        Self { chain, position }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_chain((0..n).collect())
    }

    /// Column by column along the transverse direction, reversing every other
    /// column; removed atoms are skipped.
    pub fn snake(sector: &Sector) -> Self {
        let lat = sector.lattice();
        let mut chain = Vec::with_capacity(sector.n_active());
        for col in 0..lat.n_cols() {
            let rows: Vec<usize> = if col % 2 == 0 {
                (0..lat.n_rows()).collect()
            } else {
                (0..lat.n_rows()).rev().collect()
            };
            for row in rows {
                let atom = lat.index(col, row).expect("in range");
                if let Some(k) = sector.active_index(atom) {
                    chain.push(k);
                }
            }
        }
        Self::from_chain(chain)
    }

    pub fn len(&self) -> usize {
        self.chain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chain.is_empty()
    }
}
