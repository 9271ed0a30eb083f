//! Element types and a strided GEMM on top of `matrixmultiply`.

use nalgebra::storage::{RawStorage, RawStorageMut};
use nalgebra::{ComplexField, DMatrix, Dyn, Matrix};
use num_complex::Complex64;
use rand::Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;

pub trait Scalar:
    ComplexField<RealField = f64> + faer::traits::ComplexField + Copy + Default + Serialize + DeserializeOwned + Send + Sync
{
    const IS_COMPLEX: bool;

    fn from_re(x: f64) -> Self;

    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// `C = α A B + β C` on raw strided buffers.
    ///
    /// # Safety
    /// Pointers and strides must describe valid `m×k`, `k×n` and `m×n`
    /// matrices; `c` must not alias `a` or `b`.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;

    fn from_re(x: f64) -> Self {
        x
    }

    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random_range(-1.0..1.0)
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: f64,
        a: *const f64,
        rsa: isize,
        csa: isize,
        b: *const f64,
        rsb: isize,
        csb: isize,
        beta: f64,
        c: *mut f64,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc);
    }
}

impl Scalar for Complex64 {
    const IS_COMPLEX: bool = true;

    fn from_re(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }

    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Complex64,
        a: *const Complex64,
        rsa: isize,
        csa: isize,
        b: *const Complex64,
        rsb: isize,
        csb: isize,
        beta: Complex64,
        c: *mut Complex64,
        rsc: isize,
        csc: isize,
    ) {
        use matrixmultiply::CGemmOption::Standard;
        matrixmultiply::zgemm(
            Standard,
            Standard,
            m,
            k,
            n,
            [alpha.re, alpha.im],
            a.cast(),
            rsa,
            csa,
            b.cast(),
            rsb,
            csb,
            [beta.re, beta.im],
            c.cast(),
            rsc,
            csc,
        );
    }
}

/// Thin SVD `m = U diag(s) V†`, returning `(U, s, V†)`. Backed by faer,
/// whose complex SVD is reliable on rank-deficient inputs.
pub fn svd<T: Scalar>(m: &DMatrix<T>) -> (DMatrix<T>, Vec<f64>, DMatrix<T>) {
    let fm = faer::Mat::<T>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let f = fm.thin_svd().expect("SVD converged");
    let (u, s, v) = (f.U(), f.S().column_vector(), f.V());
    let k = s.nrows();
    let u = DMatrix::from_fn(m.nrows(), k, |i, j| u[(i, j)]);
    let vt = DMatrix::from_fn(k, m.ncols(), |i, j| <T as ComplexField>::conjugate(v[(j, i)]));
    let s = (0..k).map(|i| <T as ComplexField>::real(s[i])).collect();
    (u, s, vt)
}

/// Thin QR `m = Q R`.
pub fn qr<T: Scalar>(m: &DMatrix<T>) -> (DMatrix<T>, DMatrix<T>) {
    let fm = faer::Mat::<T>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let f = fm.qr();
    let (q, r) = (f.compute_thin_Q(), f.thin_R());
    (
        DMatrix::from_fn(q.nrows(), q.ncols(), |i, j| q[(i, j)]),
        DMatrix::from_fn(r.nrows(), r.ncols(), |i, j| r[(i, j)]),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    N,
    T,
    /// Conjugate transpose.
    H,
}

/// `C = α op(A) op(B) + β C` for dense matrices or views.
pub fn gemm<T, SA, SB, SC>(
    alpha: T,
    a: &Matrix<T, Dyn, Dyn, SA>,
    opa: Op,
    b: &Matrix<T, Dyn, Dyn, SB>,
    opb: Op,
    beta: T,
    c: &mut Matrix<T, Dyn, Dyn, SC>,
) where
    T: Scalar,
    SA: RawStorage<T, Dyn, Dyn>,
    SB: RawStorage<T, Dyn, Dyn>,
    SC: RawStorageMut<T, Dyn, Dyn>,
{
    // matrixmultiply has no conjugation, so conjugate operands up front.
    let conj_a;
    let conj_b;
    let (pa, (ra, ca), (rsa, csa)) = if T::IS_COMPLEX && opa == Op::H {
        conj_a = a.map(|x| x.conjugate());
        (conj_a.as_ptr(), conj_a.shape(), conj_a.strides())
    } else {
        (a.as_ptr(), a.shape(), a.strides())
    };
    let (pb, (rb, cb), (rsb, csb)) = if T::IS_COMPLEX && opb == Op::H {
        conj_b = b.map(|x| x.conjugate());
        (conj_b.as_ptr(), conj_b.shape(), conj_b.strides())
    } else {
        (b.as_ptr(), b.shape(), b.strides())
    };
    let (m, k, rsa, csa) = match opa {
        Op::N => (ra, ca, rsa, csa),
        Op::T | Op::H => (ca, ra, csa, rsa),
    };
    let (kb, n, rsb, csb) = match opb {
        Op::N => (rb, cb, rsb, csb),
        Op::T | Op::H => (cb, rb, csb, rsb),
    };
    assert_eq!(k, kb, "gemm inner dimensions differ");
    assert_eq!(c.shape(), (m, n), "gemm output shape mismatch");
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.iter_mut().for_each(|x| *x *= beta);
        return;
    }
    let (rsc, csc) = c.strides();
    // SAFETY: shapes checked above; strides come from nalgebra storages, and
    // `c` is a distinct mutable borrow.
    unsafe {
        T::gemm_raw(
            m,
            k,
            n,
            alpha,
            pa,
            rsa as isize,
            csa as isize,
            pb,
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            rsc as isize,
            csc as isize,
        );
    }
}

/// `y += a x`.
pub fn axpy<T, SY, SX>(y: &mut Matrix<T, Dyn, Dyn, SY>, a: T, x: &Matrix<T, Dyn, Dyn, SX>)
where
    T: Scalar,
    SY: RawStorageMut<T, Dyn, Dyn>,
    SX: RawStorage<T, Dyn, Dyn>,
{
    y.zip_apply(x, |yi, xi| *yi += a * xi);
}

/// `op(A) op(B)` into a fresh matrix.
pub fn matmul<T, SA, SB>(
    a: &Matrix<T, Dyn, Dyn, SA>,
    opa: Op,
    b: &Matrix<T, Dyn, Dyn, SB>,
    opb: Op,
) -> DMatrix<T>
where
    T: Scalar,
    SA: RawStorage<T, Dyn, Dyn>,
    SB: RawStorage<T, Dyn, Dyn>,
{
    let m = if opa == Op::N { a.nrows() } else { a.ncols() };
    let n = if opb == Op::N { b.ncols() } else { b.nrows() };
    let mut c = DMatrix::zeros(m, n);
    gemm(T::one(), a, opa, b, opb, T::zero(), &mut c);
    c
}
