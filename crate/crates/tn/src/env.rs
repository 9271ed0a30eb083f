//! MPO environments and effective Hamiltonians.
//!
//! A left environment block `L_a` has (bra, ket) indices; a right block `R_a`
//! has (ket, bra) indices, so that the effective Hamiltonian acts as
//! `θ[s] ↦ Σ W_ab[s][s'] L_a θ[s'] R_b`.

use nalgebra::DMatrix;

use crate::mpo::{MpoSite, DONE, INIT};
use crate::scalar::{axpy, gemm, Op, Scalar};

/// One block per MPO bond state; `None` marks an identically zero block.
pub type Env<T> = Vec<Option<DMatrix<T>>>;

pub fn left_edge<T: Scalar>(w: usize) -> Env<T> {
    let mut e = vec![None; w];
    e[INIT] = Some(DMatrix::from_element(1, 1, T::one()));
    e
}

pub fn right_edge<T: Scalar>(w: usize) -> Env<T> {
    let mut e = vec![None; w];
    e[DONE] = Some(DMatrix::from_element(1, 1, T::one()));
    e
}

fn entries(op: &[[f64; 2]; 2]) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
    (0..2).flat_map(move |s| (0..2).map(move |t| (s, t, op[s][t]))).filter(|e| e.2 != 0.0)
}

/// Absorb site `a` into a left environment.
pub fn grow_left<T: Scalar>(l: &Env<T>, a: &[DMatrix<T>; 2], w: &MpoSite) -> Env<T> {
    let dr = a[0].ncols();
    let mut cache: Vec<[Option<DMatrix<T>>; 2]> = vec![[None, None]; l.len()];
    let mut out: Env<T> = vec![None; w.wr];
    for (ia, ib, op) in &w.terms {
        let Some(la) = &l[*ia] else { continue };
        for (s, t, c) in entries(op) {
            let x = cache[*ia][t].get_or_insert_with(|| {
                let mut m = DMatrix::zeros(la.nrows(), dr);
                gemm(T::one(), la, Op::N, &a[t], Op::N, T::zero(), &mut m);
                m
            });
            let target = out[*ib].get_or_insert_with(|| DMatrix::zeros(dr, dr));
            gemm(T::from_re(c), &a[s], Op::H, x, Op::N, T::one(), target);
        }
    }
    out
}

/// Absorb site `b` into a right environment.
pub fn grow_right<T: Scalar>(r: &Env<T>, b: &[DMatrix<T>; 2], w: &MpoSite) -> Env<T> {
    let dl = b[0].nrows();
    let mut cache: Vec<[Option<DMatrix<T>>; 2]> = vec![[None, None]; r.len()];
    let mut out: Env<T> = vec![None; w.wl];
    for (ia, ib, op) in &w.terms {
        let Some(rb) = &r[*ib] else { continue };
        for (s, t, c) in entries(op) {
            let x = cache[*ib][t].get_or_insert_with(|| {
                let mut m = DMatrix::zeros(dl, rb.ncols());
                gemm(T::one(), &b[t], Op::N, rb, Op::N, T::zero(), &mut m);
                m
            });
            let target = out[*ia].get_or_insert_with(|| DMatrix::zeros(dl, dl));
            gemm(T::from_re(c), x, Op::N, &b[s], Op::H, T::one(), target);
        }
    }
    out
}

/// Two-site effective Hamiltonian on `θ` with rows `(s1, α)` and columns
/// `(s2, β)`.
pub fn apply_two<T: Scalar>(
    l: &Env<T>,
    w1: &MpoSite,
    w2: &MpoSite,
    r: &Env<T>,
    theta: &DMatrix<T>,
) -> DMatrix<T> {
    let dl = theta.nrows() / 2;
    let dr = theta.ncols() / 2;
    // X[a][s1'] = L_a θ[s1', :]
    let mut x: Vec<[Option<DMatrix<T>>; 2]> = vec![[None, None]; l.len()];
    // Y[b][s1] = Σ W1[a,b][s1][s1'] X[a][s1']
    let mut y: Vec<[Option<DMatrix<T>>; 2]> = vec![[None, None]; w1.wr];
    for (ia, ib, op) in &w1.terms {
        let Some(la) = &l[*ia] else { continue };
        for (s, t, c) in entries(op) {
            let xa = x[*ia][t].get_or_insert_with(|| {
                let mut m = DMatrix::zeros(dl, 2 * dr);
                gemm(T::one(), la, Op::N, &theta.rows(t * dl, dl), Op::N, T::zero(), &mut m);
                m
            });
            let yb = y[*ib][s].get_or_insert_with(|| DMatrix::zeros(dl, 2 * dr));
            axpy(yb, T::from_re(c), xa);
        }
    }
    // Z[c][s1][s2] = Σ W2[b,c][s2][s2'] Y[b][s1][:, s2']
    let mut z: Vec<[[Option<DMatrix<T>>; 2]; 2]> = vec![Default::default(); w2.wr];
    for (ib, ic, op) in &w2.terms {
        if r[*ic].is_none() {
            continue;
        }
        for s1 in 0..2 {
            let Some(yb) = &y[*ib][s1] else { continue };
            for (s2, t2, c) in entries(op) {
                let zc = z[*ic][s1][s2].get_or_insert_with(|| DMatrix::zeros(dl, dr));
                axpy(zc, T::from_re(c), &yb.columns(t2 * dr, dr));
            }
        }
    }
    let mut out = DMatrix::zeros(2 * dl, 2 * dr);
    for (ic, zc) in z.iter().enumerate() {
        let Some(rc) = &r[ic] else { continue };
        for s1 in 0..2 {
            for s2 in 0..2 {
                if let Some(m) = &zc[s1][s2] {
                    let mut block = out.view_mut((s1 * dl, s2 * dr), (dl, dr));
                    gemm(T::one(), m, Op::N, rc, Op::N, T::one(), &mut block);
                }
            }
        }
    }
    out
}

/// One-site effective Hamiltonian on `θ` with rows `(s, α)`.
pub fn apply_one<T: Scalar>(l: &Env<T>, w: &MpoSite, r: &Env<T>, theta: &DMatrix<T>) -> DMatrix<T> {
    let dl = theta.nrows() / 2;
    let dr = theta.ncols();
    let mut x: Vec<[Option<DMatrix<T>>; 2]> = vec![[None, None]; l.len()];
    let mut y: Vec<[Option<DMatrix<T>>; 2]> = vec![[None, None]; w.wr];
    for (ia, ib, op) in &w.terms {
        let Some(la) = &l[*ia] else { continue };
        if r[*ib].is_none() {
            continue;
        }
        for (s, t, c) in entries(op) {
            let xa = x[*ia][t].get_or_insert_with(|| {
                let mut m = DMatrix::zeros(dl, dr);
                gemm(T::one(), la, Op::N, &theta.rows(t * dl, dl), Op::N, T::zero(), &mut m);
                m
            });
            let yb = y[*ib][s].get_or_insert_with(|| DMatrix::zeros(dl, dr));
            axpy(yb, T::from_re(c), xa);
        }
    }
    let mut out = DMatrix::zeros(2 * dl, dr);
    for (ib, yb) in y.iter().enumerate() {
        let Some(rb) = &r[ib] else { continue };
        for s in 0..2 {
            if let Some(m) = &yb[s] {
                let mut block = out.rows_mut(s * dl, dl);
                gemm(T::one(), m, Op::N, rb, Op::N, T::one(), &mut block);
            }
        }
    }
    out
}

/// Bond (zero-site) effective Hamiltonian on the centre matrix `C`.
pub fn apply_zero<T: Scalar>(l: &Env<T>, r: &Env<T>, c: &DMatrix<T>) -> DMatrix<T> {
    let mut out = DMatrix::zeros(c.nrows(), c.ncols());
    for (la, ra) in l.iter().zip(r) {
        if let (Some(la), Some(ra)) = (la, ra) {
            let mut tmp = DMatrix::zeros(c.nrows(), c.ncols());
            gemm(T::one(), la, Op::N, c, Op::N, T::zero(), &mut tmp);
            gemm(T::one(), &tmp, Op::N, ra, Op::N, T::one(), &mut out);
        }
    }
    out
}
