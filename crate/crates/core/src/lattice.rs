//! Finite triangular atom arrays and their dual hexagonal gauge lattice.
//!
//! Atoms sit in vertical columns spaced `√3 a / 2` apart; odd columns are
//! shifted up by `a / 2`. The charge-separation axis `x` is therefore the
//! `√3 a` direction and `y` is the transverse direction. With `a = 1`:
//!
//! ```text
//! x = col · √3/2,    y = row + (col mod 2)/2
//! ```
//!
//! Horizontal *lines* of constant `y` (line index `ℓ = 2y`) each contain atoms
//! of a single three-colouring sublattice, `ℓ mod 3`. The 2/3 vacuum leaves the
//! lines with `ℓ ≡ 2 (mod 3)` in the ground state.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Absolute tolerance used when binning pair distances into shells.
pub const DISTANCE_TOL: f64 = 1e-9;

/// Sublattice (three-colouring index) left in `|g⟩` by the reference vacuum.
pub const VACUUM_GROUND_SUBLATTICE: u8 = 2;

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("lattice must be at least 2x2, got {n_cols}x{n_rows}")]
    TooSmall { n_cols: usize, n_rows: usize },
    #[error("unsupported interaction truncation {0}; expected 3 or 5 shells")]
    UnsupportedTruncation(u8),
    #[error("charge separation d must be at least 1")]
    SeparationTooSmall,
    #[error("defect pair with d = {d} needs {needed} columns, lattice has {available}")]
    DefectDoesNotFit {
        d: usize,
        needed: usize,
        available: usize,
    },
    #[error("strip base line {line} is invalid: {reason}")]
    InvalidLine { line: usize, reason: &'static str },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub col: usize,
    pub row: usize,
    pub x: f64,
    pub y: f64,
}

/// Open-boundary triangular lattice with row-major atom indexing
/// (`index = row · n_cols + col`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    n_cols: usize,
    n_rows: usize,
    sites: Vec<Site>,
}

impl Lattice {
    pub fn new(n_cols: usize, n_rows: usize) -> Result<Self, LatticeError> {
        if n_cols < 2 || n_rows < 2 {
            return Err(LatticeError::TooSmall { n_cols, n_rows });
        }
        let mut sites = Vec::with_capacity(n_cols * n_rows);
        for row in 0..n_rows {
            for col in 0..n_cols {
                sites.push(Site {
                    col,
                    row,
                    x: col as f64 * SQRT3 / 2.0,
                    y: row as f64 + (col % 2) as f64 / 2.0,
                });
            }
        }
        Ok(Self {
            n_cols,
            n_rows,
            sites,
        })
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, index: usize) -> &Site {
        &self.sites[index]
    }

    pub fn index(&self, col: usize, row: usize) -> Option<usize> {
        (col < self.n_cols && row < self.n_rows).then(|| row * self.n_cols + col)
    }

    /// Number of horizontal lines, `2 · n_rows`.
    pub fn n_lines(&self) -> usize {
        2 * self.n_rows
    }

    pub fn line(&self, index: usize) -> usize {
        let s = &self.sites[index];
        2 * s.row + s.col % 2
    }

    /// Atom in column `col` on horizontal line `line`, if the column has
    /// the parity of the line and the row exists.
    pub fn atom_on_line(&self, col: usize, line: usize) -> Option<usize> {
        if col >= self.n_cols || line % 2 != col % 2 {
            return None;
        }
        self.index(col, (line - col % 2) / 2)
    }

    /// Three-colouring sublattice: nearest neighbours always differ.
    pub fn sublattice(&self, index: usize) -> u8 {
        (self.line(index) % 3) as u8
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.sites[i], &self.sites[j]);
        (a.x - b.x).hypot(a.y - b.y)
    }

    /// All unordered pairs `i < j` inside the truncation, tagged by shell.
    pub fn neighbor_pairs(&self, truncation: Truncation) -> Vec<NeighborPair> {
        let shells = truncation.shells();
        let mut pairs = Vec::new();
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                let r = self.distance(i, j);
                if let Some(class) = shells
                    .iter()
                    .copied()
                    .find(|c| (r - c.distance()).abs() < DISTANCE_TOL)
                {
                    pairs.push(NeighborPair { i, j, class });
                }
            }
        }
        pairs
    }

    /// Nearest-neighbour pairs (the bonds crossed by dual links).
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        self.neighbor_pairs(Truncation::Three)
            .into_iter()
            .filter(|p| p.class == CouplingClass::First)
            .map(|p| (p.i, p.j))
            .collect()
    }
}

/// Interaction shells of the triangular lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CouplingClass {
    First,
    Second,
    Third,
    Fourth,
    Fifth,
}

impl CouplingClass {
    pub const ALL: [CouplingClass; 5] = [
        CouplingClass::First,
        CouplingClass::Second,
        CouplingClass::Third,
        CouplingClass::Fourth,
        CouplingClass::Fifth,
    ];

    /// Shell radius in units of `a`: 1, √3, 2, √7, 3.
    pub fn distance(self) -> f64 {
        match self {
            CouplingClass::First => 1.0,
            CouplingClass::Second => SQRT3,
            CouplingClass::Third => 2.0,
            CouplingClass::Fourth => 7f64.sqrt(),
            CouplingClass::Fifth => 3.0,
        }
    }

    /// Exact `r⁶` of the shell: 1, 27, 64, 343, 729.
    pub fn distance_pow6(self) -> f64 {
        match self {
            CouplingClass::First => 1.0,
            CouplingClass::Second => 27.0,
            CouplingClass::Third => 64.0,
            CouplingClass::Fourth => 343.0,
            CouplingClass::Fifth => 729.0,
        }
    }

    pub fn order(self) -> u8 {
        self as u8 + 1
    }
}

/// Number of interaction shells kept in the Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Truncation {
    Three,
    Five,
}

impl Truncation {
    pub fn shells(self) -> &'static [CouplingClass] {
        match self {
            Truncation::Three => &CouplingClass::ALL[..3],
            Truncation::Five => &CouplingClass::ALL[..],
        }
    }
}

impl TryFrom<u8> for Truncation {
    type Error = LatticeError;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        match value {
            3 => Ok(Truncation::Three),
            5 => Ok(Truncation::Five),
            other => Err(LatticeError::UnsupportedTruncation(other)),
        }
    }
}

impl From<Truncation> for u8 {
    fn from(t: Truncation) -> u8 {
        match t {
            Truncation::Three => 3,
            Truncation::Five => 5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborPair {
    pub i: usize,
    pub j: usize,
    pub class: CouplingClass,
}

/// A triangle of the atom lattice, i.e. a vertex of the hexagonal lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualSite {
    /// Sorted atom indices of the triangle.
    pub atoms: [usize; 3],
    pub x: f64,
    pub y: f64,
    /// `s_x`: 0 for triangles whose vertical edge is on the left, 1 otherwise.
    pub stagger: u8,
    /// Six-site unit cell, labelled by the ground-sublattice atom at its centre.
    pub cell: usize,
    pub links: Vec<usize>,
}

/// A hexagonal-lattice link, crossing exactly one nearest-neighbour bond.
///
/// Bonds on the lattice edge belong to a single triangle; their links dangle
/// (`sites.1 == None`) but still carry an electric field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualLink {
    pub atoms: (usize, usize),
    pub sites: (usize, Option<usize>),
    pub x: f64,
    pub y: f64,
    /// `s_l`: 0 when both ends lie in the same unit cell, else 1.
    pub stagger: u8,
}

impl DualLink {
    pub fn is_dangling(&self) -> bool {
        self.sites.1.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualLattice {
    pub sites: Vec<DualSite>,
    pub links: Vec<DualLink>,
    link_of_bond: HashMap<(usize, usize), usize>,
}

impl DualLattice {
    pub fn new(lattice: &Lattice) -> Self {
        let mut sites = Vec::new();
        for col in 0..lattice.n_cols().saturating_sub(1) {
            for (edge_col, apex_col, stagger) in [(col, col + 1, 0u8), (col + 1, col, 1u8)] {
                for row in 0..lattice.n_rows().saturating_sub(1) {
                    let lo = lattice.index(edge_col, row).expect("in range");
                    let hi = lattice.index(edge_col, row + 1).expect("in range");
                    let Some(apex) = lattice.atom_on_line(apex_col, lattice.line(lo) + 1) else {
                        continue;
                    };
                    let mut atoms = [lo, hi, apex];
                    atoms.sort_unstable();
                    let (x, y) = atoms.iter().fold((0.0, 0.0), |(x, y), &a| {
                        let s = lattice.site(a);
                        (x + s.x / 3.0, y + s.y / 3.0)
                    });
                    let cell = *atoms
                        .iter()
                        .find(|&&a| lattice.sublattice(a) == VACUUM_GROUND_SUBLATTICE)
                        .expect("every triangle holds one atom of each sublattice");
                    sites.push(DualSite {
                        atoms,
                        x,
                        y,
                        stagger,
                        cell,
                        links: Vec::with_capacity(3),
                    });
                }
            }
        }
        sites.sort_by(|a, b| a.atoms.cmp(&b.atoms));

        let mut owners: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (s, site) in sites.iter().enumerate() {
            let [a, b, c] = site.atoms;
            for bond in [(a, b), (a, c), (b, c)] {
                owners.entry(bond).or_default().push(s);
            }
        }
        let mut bonds: Vec<_> = owners.into_iter().collect();
        bonds.sort_by_key(|(bond, _)| *bond);

        let mut links = Vec::with_capacity(bonds.len());
        let mut link_of_bond = HashMap::with_capacity(bonds.len());
        for ((i, j), owner) in bonds {
            let (si, sj) = (lattice.site(i), lattice.site(j));
            let touches_centre = lattice.sublattice(i) == VACUUM_GROUND_SUBLATTICE
                || lattice.sublattice(j) == VACUUM_GROUND_SUBLATTICE;
            let id = links.len();
            for &s in &owner {
                sites[s].links.push(id);
            }
            link_of_bond.insert((i, j), id);
            links.push(DualLink {
                atoms: (i, j),
                sites: (owner[0], owner.get(1).copied()),
                x: (si.x + sj.x) / 2.0,
                y: (si.y + sj.y) / 2.0,
                stagger: u8::from(!touches_centre),
            });
        }
        Self {
            sites,
            links,
            link_of_bond,
        }
    }

    pub fn link_of_bond(&self, i: usize, j: usize) -> Option<usize> {
        self.link_of_bond.get(&(i.min(j), i.max(j))).copied()
    }

    /// Flip `s_l` on one link. Only meant for fault-injection audits.
    pub fn corrupt_stagger(&mut self, link: usize) {
        self.links[link].stagger ^= 1;
    }
}

/// Where the defect pair sits across the transverse direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransversePosition {
    /// Lowest admissible strip, one line above the bottom edge.
    Boundary,
    /// Strip starting on the given horizontal line (`≡ 1 mod 3`).
    Line(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticCharge {
    pub site: usize,
    pub q: i8,
}

/// Two static charges realised by removing the atoms of two frustrated
/// triangles at the ends of a flipped three-line strip.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChargePlacement {
    pub d: usize,
    /// Lowest line of the strip; the strip covers `base_line..=base_line + 2`.
    pub base_line: usize,
    /// Column of the left end of the outer strip lines.
    pub start_col: usize,
    pub removed: BTreeSet<usize>,
    pub charges: [StaticCharge; 2],
    /// Separation `R / a = √3 (d + 1/3)`.
    pub separation: f64,
    /// Atoms flipped relative to the vacuum to form the rigid string.
    pub strip: Vec<usize>,
    /// Strip atoms that are excited in the rigid string.
    pub s_up: Vec<usize>,
}

impl ChargePlacement {
    pub fn new(
        lattice: &Lattice,
        dual: &DualLattice,
        d: usize,
        position: TransversePosition,
    ) -> Result<Self, LatticeError> {
        if d == 0 {
            return Err(LatticeError::SeparationTooSmall);
        }
        let base_line = match position {
            TransversePosition::Boundary => 1,
            TransversePosition::Line(l) => l,
        };
        if base_line % 3 != 1 {
            return Err(LatticeError::InvalidLine {
                line: base_line,
                reason: "the middle strip line must be a vacuum ground-state line (base ≡ 1 mod 3)",
            });
        }
        if base_line + 2 >= lattice.n_lines() {
            return Err(LatticeError::InvalidLine {
                line: base_line,
                reason: "strip does not fit below the top edge",
            });
        }

        // Footprint spans columns start_col - 1 ..= start_col + 2d + 1.
        let parity = base_line % 2;
        let min_start = if parity == 1 { 1 } else { 2 };
        let span = 2 * d + 3;
        let needed = min_start + 2 * d + 2;
        if lattice.n_cols() < needed {
            return Err(LatticeError::DefectDoesNotFit {
                d,
                needed,
                available: lattice.n_cols(),
            });
        }
        let max_start = lattice.n_cols() - 2 * d - 2;
        let mut start_col = ((lattice.n_cols() - span) / 2 + 1).clamp(min_start, max_start);
        if start_col % 2 != parity {
            start_col = if start_col < max_start {
                start_col + 1
            } else {
                start_col - 1
            };
        }

        let on_line = |col: usize, line: usize| {
            lattice
                .atom_on_line(col, line)
                .expect("strip footprint was bounds-checked")
        };
        let mut strip = Vec::with_capacity(3 * d + 2);
        let mut s_up = Vec::with_capacity(d);
        for k in 0..=d {
            strip.push(on_line(start_col + 2 * k, base_line));
            strip.push(on_line(start_col + 2 * k, base_line + 2));
        }
        for k in 0..d {
            let a = on_line(start_col + 1 + 2 * k, base_line + 1);
            strip.push(a);
            s_up.push(a);
        }
        strip.sort_unstable();

        let left = [
            on_line(start_col, base_line),
            on_line(start_col - 1, base_line + 1),
            on_line(start_col, base_line + 2),
        ];
        let right_col = start_col + 2 * d;
        let right = [
            on_line(right_col, base_line),
            on_line(right_col + 1, base_line + 1),
            on_line(right_col, base_line + 2),
        ];
        let removed: BTreeSet<usize> = left.iter().chain(right.iter()).copied().collect();

        let find = |mut atoms: [usize; 3]| {
            atoms.sort_unstable();
            dual.sites
                .iter()
                .position(|s| s.atoms == atoms)
                .expect("defect triangle is a lattice triangle")
        };
        // Both defect triangles are `ggg` in the rigid string: Q = 2 (-1)^(s_x + 1).
        let charge = |site: usize| StaticCharge {
            site,
            q: if dual.sites[site].stagger == 0 { -2 } else { 2 },
        };
        let charges = [charge(find(left)), charge(find(right))];

        Ok(Self {
            d,
            base_line,
            start_col,
            removed,
            charges,
            separation: SQRT3 * (d as f64 + 1.0 / 3.0),
            strip,
            s_up,
        })
    }

    /// Transverse coordinate of the static charges.
    pub fn charge_y(&self) -> f64 {
        (self.base_line + 1) as f64 / 2.0
    }
}
