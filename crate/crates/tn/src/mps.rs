//! Open-boundary matrix product states with physical dimension 2.
//!
//! Site `c` stores `A[s]` of shape `(d_c, d_{c+1})` for `s ∈ {0, 1}`, with
//! `s = 1` the Rydberg state. The state keeps track of its orthogonality
//! centre; every site left of it is left-orthonormal and every site right of
//! it is right-orthonormal.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use rydlink::{Sector, StateExpectations};

use crate::env::{grow_left, left_edge};
use crate::mpo::{Mpo, DONE};
use crate::ordering::SiteOrdering;
use crate::scalar::{gemm, matmul, qr, svd, Op, Scalar};

#[derive(Debug, Error, PartialEq)]
pub enum MpsError {
    #[error("chain position {index} out of range for {len} sites")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("MPO has {mpo} sites, state has {mps}")]
    LengthMismatch { mpo: usize, mps: usize },
}

/// Which side of a two-site split receives the singular values.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Absorb {
    Left,
    Right,
}

/// Outcome of one truncated SVD.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub kept: usize,
    /// Discarded weight `Σ_discarded s² / Σ s²`.
    pub discarded: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Mps<T: Scalar> {
    sites: Vec<[DMatrix<T>; 2]>,
    center: usize,
    /// Discarded weight of every truncating split, in order.
    pub trunc_log: Vec<f64>,
}

fn stack_rows<T: Scalar>(a: &[DMatrix<T>; 2]) -> DMatrix<T> {
    let (dl, dr) = a[0].shape();
    let mut m = DMatrix::zeros(2 * dl, dr);
    m.rows_mut(0, dl).copy_from(&a[0]);
    m.rows_mut(dl, dl).copy_from(&a[1]);
    m
}

fn stack_cols<T: Scalar>(a: &[DMatrix<T>; 2]) -> DMatrix<T> {
    let (dl, dr) = a[0].shape();
    let mut m = DMatrix::zeros(dl, 2 * dr);
    m.columns_mut(0, dr).copy_from(&a[0]);
    m.columns_mut(dr, dr).copy_from(&a[1]);
    m
}

fn split_rows<T: Scalar>(m: &DMatrix<T>) -> [DMatrix<T>; 2] {
    let dl = m.nrows() / 2;
    [m.rows(0, dl).clone_owned(), m.rows(dl, dl).clone_owned()]
}

fn split_cols<T: Scalar>(m: &DMatrix<T>) -> [DMatrix<T>; 2] {
    let dr = m.ncols() / 2;
    [m.columns(0, dr).clone_owned(), m.columns(dr, dr).clone_owned()]
}

/// Truncated SVD `m ≈ U S V†` keeping at most `chi_max` values above
/// `cutoff · s_max`; the kept spectrum is renormalised to the original norm.
pub fn truncated_svd<T: Scalar>(
    m: DMatrix<T>,
    chi_max: usize,
    cutoff: f64,
) -> (DMatrix<T>, Vec<f64>, DMatrix<T>, Truncation) {
    let (u, sv, vt) = svd(&m);
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let s: Vec<f64> = order.iter().map(|&k| sv[k]).collect();
    let total: f64 = s.iter().map(|x| x * x).sum();
    let smax = s.first().copied().unwrap_or(0.0);
    let keep = s
        .iter()
        .take(chi_max.max(1))
        .take_while(|&&x| x > cutoff * smax)
        .count()
        .max(1);
    let kept_w: f64 = s[..keep].iter().map(|x| x * x).sum();
    let discarded = if total > 0.0 { 1.0 - kept_w / total } else { 0.0 };
    let scale = if kept_w > 0.0 { (total / kept_w).sqrt() } else { 1.0 };
    let mut uk = DMatrix::zeros(u.nrows(), keep);
    let mut vk = DMatrix::zeros(keep, vt.ncols());
    for (j, &k) in order[..keep].iter().enumerate() {
        uk.set_column(j, &u.column(k));
        vk.set_row(j, &vt.row(k));
    }
    let sk = s[..keep].iter().map(|x| x * scale).collect();
    (
        uk,
        sk,
        vk,
        Truncation {
            kept: keep,
            discarded: discarded.max(0.0),
        },
    )
}

impl<T: Scalar> Mps<T> {
    /// Product state from chain-ordered occupations.
    pub fn product(bits: &[bool]) -> Self {
        let sites = bits
            .iter()
            .map(|&b| {
                let one = DMatrix::from_element(1, 1, T::one());
                let zero = DMatrix::zeros(1, 1);
                if b {
                    [zero, one]
                } else {
                    [one, zero]
                }
            })
            .collect();
        Self {
            sites,
            center: 0,
            trunc_log: Vec::new(),
        }
    }

    /// Random normalised state with bond dimensions up to `chi`.
    pub fn random<R: Rng + ?Sized>(n: usize, chi: usize, rng: &mut R) -> Self {
        let dims = full_rank_dims(n, chi);
        let sites = (0..n)
            .map(|c| {
                let (dl, dr) = (dims[c], dims[c + 1]);
                [
                    DMatrix::from_fn(dl, dr, |_, _| T::random(rng)),
                    DMatrix::from_fn(dl, dr, |_, _| T::random(rng)),
                ]
            })
            .collect();
        let mut m = Self {
            sites,
            center: 0,
            trunc_log: Vec::new(),
        };
        m.canonicalize();
        m
    }

    /// Add `eps`-scaled random noise to every tensor entry and renormalise.
    pub fn perturb<R: Rng + ?Sized>(&mut self, eps: f64, rng: &mut R) {
        for a in &mut self.sites {
            for m in a.iter_mut() {
                m.iter_mut().for_each(|x| *x += T::random(rng) * T::from_re(eps));
            }
        }
        self.canonicalize();
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn site(&self, c: usize) -> &[DMatrix<T>; 2] {
        &self.sites[c]
    }

    pub(crate) fn set_site(&mut self, c: usize, a: [DMatrix<T>; 2]) {
        self.sites[c] = a;
    }

    pub(crate) fn set_center(&mut self, c: usize) {
        self.center = c;
    }

    /// `d_0, …, d_n`.
    pub fn bond_dims(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.sites.iter().map(|a| a[0].nrows()).collect();
        d.push(self.sites.last().map_or(1, |a| a[0].ncols()));
        d
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Left-orthonormalise site `c` and push the remainder into `c + 1`.
    fn left_orth(&mut self, c: usize) {
        let (q, r) = qr(&stack_rows(&self.sites[c]));
        self.sites[c] = split_rows(&q);
        for s in 0..2 {
            self.sites[c + 1][s] = matmul(&r, Op::N, &self.sites[c + 1][s], Op::N);
        }
    }

    /// Right-orthonormalise site `c` and push the remainder into `c - 1`.
    fn right_orth(&mut self, c: usize) {
        let (q, r) = qr(&stack_cols(&self.sites[c]).adjoint());
        self.sites[c] = split_cols(&q.adjoint());
        for s in 0..2 {
            self.sites[c - 1][s] = matmul(&self.sites[c - 1][s], Op::N, &r, Op::H);
        }
    }

    pub fn move_center(&mut self, to: usize) {
        assert!(to < self.len());
        while self.center < to {
            self.left_orth(self.center);
            self.center += 1;
        }
        while self.center > to {
            self.right_orth(self.center);
            self.center -= 1;
        }
    }

    /// Bring the state into right-canonical form with centre 0 and unit norm.
    pub fn canonicalize(&mut self) {
        let n = self.len();
        for c in 0..n.saturating_sub(1) {
            self.left_orth(c);
        }
        for c in (1..n).rev() {
            self.right_orth(c);
        }
        self.center = 0;
        self.normalize_center();
    }

    /// Norm carried by the centre tensor (valid in canonical form).
    pub fn center_norm(&self) -> f64 {
        let a = &self.sites[self.center];
        (a[0].norm_squared() + a[1].norm_squared()).sqrt()
    }

    pub fn normalize_center(&mut self) {
        let n = self.center_norm();
        if n > 0.0 {
            let inv = T::from_re(1.0 / n);
            for s in 0..2 {
                self.sites[self.center][s] *= inv;
            }
        }
    }

    /// `⟨self|other⟩` by full contraction.
    pub fn overlap(&self, other: &Self) -> T {
        assert_eq!(self.len(), other.len());
        let mut e = DMatrix::from_element(1, 1, T::one());
        for (a, b) in self.sites.iter().zip(&other.sites) {
            let mut next = DMatrix::zeros(a[0].ncols(), b[0].ncols());
            for s in 0..2 {
                let eb = matmul(&e, Op::N, &b[s], Op::N);
                gemm(T::one(), &a[s], Op::H, &eb, Op::N, T::one(), &mut next);
            }
            e = next;
        }
        e[(0, 0)]
    }

    pub fn norm(&self) -> f64 {
        self.overlap(self).real().max(0.0).sqrt()
    }

    /// Two-site tensor on `(c, c+1)` with rows `(s1, α)` and columns `(s2, β)`.
    pub fn theta(&self, c: usize) -> DMatrix<T> {
        let (a, b) = (&self.sites[c], &self.sites[c + 1]);
        let (dl, dr) = (a[0].nrows(), b[0].ncols());
        let mut th = DMatrix::zeros(2 * dl, 2 * dr);
        for s1 in 0..2 {
            for s2 in 0..2 {
                let mut block = th.view_mut((s1 * dl, s2 * dr), (dl, dr));
                gemm(T::one(), &a[s1], Op::N, &b[s2], Op::N, T::zero(), &mut block);
            }
        }
        th
    }

    /// Replace sites `(c, c+1)` by the truncated factorisation of `theta`.
    pub fn split_theta(
        &mut self,
        c: usize,
        theta: DMatrix<T>,
        chi_max: usize,
        cutoff: f64,
        absorb: Absorb,
    ) -> Truncation {
        let dl = theta.nrows() / 2;
        let dr = theta.ncols() / 2;
        let (mut u, s, mut vt, tr) = truncated_svd(theta, chi_max, cutoff);
        match absorb {
            Absorb::Right => {
                for (k, sv) in s.iter().enumerate() {
                    vt.row_mut(k).scale_mut(*sv);
                }
                self.center = c + 1;
            }
            Absorb::Left => {
                for (k, sv) in s.iter().enumerate() {
                    u.column_mut(k).scale_mut(*sv);
                }
                self.center = c;
            }
        }
        debug_assert_eq!(u.nrows(), 2 * dl);
        debug_assert_eq!(vt.ncols(), 2 * dr);
        self.sites[c] = split_rows(&u);
        self.sites[c + 1] = split_cols(&vt);
        if tr.discarded > 0.0 {
            self.trunc_log.push(tr.discarded);
        }
        tr
    }

    /// One-site tensor at `c` stacked as `(2 d_c) × d_{c+1}`.
    pub fn stacked(&self, c: usize) -> DMatrix<T> {
        stack_rows(&self.sites[c])
    }

    pub fn set_stacked(&mut self, c: usize, m: &DMatrix<T>) {
        self.sites[c] = split_rows(m);
    }

    /// Dense amplitudes indexed by active-atom bits.
    pub fn to_statevector(&self, ordering: &SiteOrdering) -> DMatrix<T> {
        assert_eq!(ordering.len(), self.len());
        // rows: chain-bit strings over the sites absorbed so far
        let mut v = DMatrix::from_element(1, 1, T::one());
        for (c, a) in self.sites.iter().enumerate() {
            let rows = v.nrows();
            let mut next = DMatrix::zeros(2 * rows, a[0].ncols());
            for s in 0..2 {
                let mut block = next.rows_mut(s * rows, rows);
                gemm(T::one(), &v, Op::N, &a[s], Op::N, T::zero(), &mut block);
            }
            v = next;
            let _ = c;
        }
        let n = self.len();
        let mut out = DMatrix::zeros(1 << n, 1);
        for chain_bits in 0..(1usize << n) {
            let mut idx = 0;
            for c in 0..n {
                if chain_bits >> c & 1 == 1 {
                    idx |= 1 << ordering.chain[c];
                }
            }
            out[idx] = v[(chain_bits, 0)];
        }
        out
    }

    /// `⟨ψ|H|ψ⟩ / ⟨ψ|ψ⟩` by contracting the MPO.
    pub fn expect_mpo(&self, mpo: &Mpo) -> Result<f64, MpsError> {
        if mpo.len() != self.len() {
            return Err(MpsError::LengthMismatch {
                mpo: mpo.len(),
                mps: self.len(),
            });
        }
        let mut env = left_edge::<T>(mpo.sites.first().map_or(2, |w| w.wl));
        for (a, w) in self.sites.iter().zip(&mpo.sites) {
            env = grow_left(&env, a, w);
        }
        let e = env[DONE].as_ref().map_or(0.0, |m| m[(0, 0)].real());
        Ok(e / self.overlap(self).real())
    }

    /// Transfer `E ↦ Σ_s w_s A[s]† E A[s]` for a diagonal operator.
    fn transfer(e: &DMatrix<T>, a: &[DMatrix<T>; 2], w: [f64; 2]) -> DMatrix<T> {
        let mut next = DMatrix::zeros(a[0].ncols(), a[0].ncols());
        for s in 0..2 {
            if w[s] != 0.0 {
                let ea = matmul(e, Op::N, &a[s], Op::N);
                gemm(T::from_re(w[s]), &a[s], Op::H, &ea, Op::N, T::one(), &mut next);
            }
        }
        next
    }

    fn right_transfer(r: &DMatrix<T>, a: &[DMatrix<T>; 2]) -> DMatrix<T> {
        let mut next = DMatrix::zeros(a[0].nrows(), a[0].nrows());
        for s in 0..2 {
            let ar = matmul(&a[s], Op::N, r, Op::N);
            gemm(T::one(), &ar, Op::N, &a[s], Op::H, T::one(), &mut next);
        }
        next
    }

    /// Reusable identity environments for diagonal correlators.
    pub fn correlator_context(&self) -> Correlators<'_, T> {
        let n = self.len();
        let mut left = Vec::with_capacity(n + 1);
        left.push(DMatrix::from_element(1, 1, T::one()));
        for c in 0..n {
            let next = Self::transfer(&left[c], &self.sites[c], [1.0, 1.0]);
            left.push(next);
        }
        let mut right = vec![DMatrix::from_element(1, 1, T::one()); n + 1];
        for c in (0..n).rev() {
            right[c] = Self::right_transfer(&right[c + 1], &self.sites[c]);
        }
        let norm = left[n][(0, 0)].real();
        Correlators {
            mps: self,
            left,
            right,
            norm,
        }
    }

    pub fn expect_local(&self, c: usize) -> Result<f64, MpsError> {
        self.correlator_context().diagonal(&[(c, [0.0, 1.0])])
    }

    pub fn expect_pair(&self, c1: usize, c2: usize) -> Result<f64, MpsError> {
        self.correlator_context()
            .diagonal(&[(c1, [0.0, 1.0]), (c2, [0.0, 1.0])])
    }

    /// `(⟨n n n⟩, ⟨(1-n)(1-n)(1-n)⟩)` on three chain sites.
    pub fn expect_triple(&self, cs: [usize; 3]) -> Result<(f64, f64), MpsError> {
        let ctx = self.correlator_context();
        let rrr = ctx.diagonal(&cs.map(|c| (c, [0.0, 1.0])))?;
        let ggg = ctx.diagonal(&cs.map(|c| (c, [1.0, 0.0])))?;
        Ok((rrr, ggg))
    }

    /// Densities, bond correlators and triangle projectors keyed by lattice
    /// atoms, in the layout used by the gauge snapshots.
    pub fn expectations(
        &self,
        sector: &Sector,
        ordering: &SiteOrdering,
    ) -> Result<StateExpectations, MpsError> {
        let ctx = self.correlator_context();
        let chain = |atom: usize| ordering.position[sector.active_index(atom).expect("active")];
        let mut density = vec![None; sector.lattice().len()];
        for (k, &a) in sector.active_atoms().iter().enumerate() {
            density[a] = Some(ctx.diagonal(&[(ordering.position[k], [0.0, 1.0])])?);
        }
        let mut pair = std::collections::HashMap::new();
        for (i, j) in sector.required_pairs() {
            let v = ctx.diagonal(&[(chain(i), [0.0, 1.0]), (chain(j), [0.0, 1.0])])?;
            pair.insert((i.min(j), i.max(j)), v);
        }
        let mut triple = std::collections::HashMap::new();
        for t in sector.required_triples() {
            let rrr = ctx.diagonal(&t.map(|a| (chain(a), [0.0, 1.0])))?;
            let ggg = ctx.diagonal(&t.map(|a| (chain(a), [1.0, 0.0])))?;
            triple.insert(t, (rrr, ggg));
        }
        Ok(StateExpectations {
            density,
            pair,
            triple,
        })
    }
}

/// Identity environments from both ends, shared across many correlators.
pub struct Correlators<'a, T: Scalar> {
    mps: &'a Mps<T>,
    left: Vec<DMatrix<T>>,
    right: Vec<DMatrix<T>>,
    norm: f64,
}

impl<T: Scalar> Correlators<'_, T> {
    /// Expectation of a product of diagonal one-site operators `diag(w)`.
    pub fn diagonal(&self, ops: &[(usize, [f64; 2])]) -> Result<f64, MpsError> {
        let n = self.mps.len();
        let mut ops = ops.to_vec();
        ops.sort_by_key(|o| o.0);
        if let Some(&(c, _)) = ops.iter().find(|o| o.0 >= n) {
            return Err(MpsError::IndexOutOfRange { index: c, len: n });
        }
        let Some(&(first, _)) = ops.first() else {
            return Ok(1.0);
        };
        let last = ops.last().expect("nonempty").0;
        let mut e = self.left[first].clone();
        for c in first..=last {
            let w = ops
                .iter()
                .filter(|o| o.0 == c)
                .fold([1.0, 1.0], |acc, o| [acc[0] * o.1[0], acc[1] * o.1[1]]);
            e = Mps::transfer(&e, &self.mps.sites[c], w);
        }
        let r = &self.right[last + 1];
        let mut tr = T::zero();
        for i in 0..e.nrows() {
            for j in 0..e.ncols() {
                tr += e[(i, j)] * r[(j, i)];
            }
        }
        Ok(tr.real() / self.norm)
    }
}

/// Largest useful bond dimensions `min(chi, 2^c, 2^(n-c))`.
pub fn full_rank_dims(n: usize, chi: usize) -> Vec<usize> {
    (0..=n)
        .map(|c| {
            let cap = |k: usize| if k >= 40 { usize::MAX } else { 1usize << k };
            chi.min(cap(c)).min(cap(n - c)).max(1)
        })
        .collect()
}

impl Mps<f64> {
    pub fn to_complex(&self) -> Mps<Complex64> {
        Mps {
            sites: self
                .sites
                .iter()
                .map(|a| [a[0].map(Complex64::from), a[1].map(Complex64::from)])
                .collect(),
            center: self.center,
            trunc_log: self.trunc_log.clone(),
        }
    }
}
