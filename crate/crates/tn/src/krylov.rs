//! Lanczos eigensolver and Krylov propagator for Hermitian operators given as
//! matrix-vector products. Vectors are dense matrices of any shape.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

use crate::scalar::{axpy, Scalar};

#[derive(Debug, Error, PartialEq)]
pub enum KrylovError {
    #[error("start vector has zero norm")]
    ZeroStart,
    #[error("Lanczos stagnated: residual {residual:.3e} after {matvecs} products")]
    Stagnation { residual: f64, matvecs: usize },
    #[error("Krylov propagation failed to reach tolerance {0:.1e}")]
    ExpmTolerance(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LanczosOptions {
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Target on `‖H x - θ x‖`.
    pub tol: f64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            krylov_dim: 40,
            max_restarts: 50,
            tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Eigenpair<T> {
    pub value: f64,
    pub vector: DMatrix<T>,
    pub residual: f64,
    pub matvecs: usize,
    pub converged: bool,
}

fn dot<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> T {
    a.dotc(b)
}

/// Orthogonalise `w` against `basis` twice (classical Gram-Schmidt).
fn reorthogonalise<T: Scalar>(w: &mut DMatrix<T>, basis: &[DMatrix<T>]) {
    for _ in 0..2 {
        for v in basis {
            let c = dot(v, w);
            axpy(w, -c, v);
        }
    }
}

fn tridiagonal(alpha: &[f64], beta: &[f64]) -> DMatrix<f64> {
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    t
}

fn lowest(t: DMatrix<f64>) -> (f64, Vec<f64>) {
    let eig = SymmetricEigen::new(t);
    let (idx, &val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty tridiagonal");
    (val, eig.eigenvectors.column(idx).iter().copied().collect())
}

/// Lowest eigenpair of a Hermitian operator by restarted Lanczos with full
/// reorthogonalisation.
pub fn lowest_eigenpair<T, F>(
    mut apply: F,
    start: &DMatrix<T>,
    opts: &LanczosOptions,
) -> Result<Eigenpair<T>, KrylovError>
where
    T: Scalar,
    F: FnMut(&DMatrix<T>) -> DMatrix<T>,
{
    let norm = start.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(KrylovError::ZeroStart);
    }
    let mut x = start / T::from_re(norm);
    let mut matvecs = 0;
    let mut best = Eigenpair {
        value: f64::INFINITY,
        vector: x.clone(),
        residual: f64::INFINITY,
        matvecs: 0,
        converged: false,
    };
    let dim_cap = start.len();
    for _ in 0..=opts.max_restarts {
        let mut basis: Vec<DMatrix<T>> = vec![x.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut ritz = (0.0, vec![1.0]);
        let mut residual = f64::INFINITY;
        for j in 0..opts.krylov_dim.min(dim_cap) {
            let mut w = apply(&basis[j]);
            matvecs += 1;
            let a = dot(&basis[j], &w).real();
            alpha.push(a);
            reorthogonalise(&mut w, &basis);
            let b = w.norm();
            ritz = lowest(tridiagonal(&alpha, &beta));
            residual = b * ritz.1[j].abs();
            if residual < opts.tol || b < 1e-14 || j + 1 == dim_cap {
                break;
            }
            beta.push(b);
            basis.push(w / T::from_re(b));
        }
        let mut v = DMatrix::zeros(x.nrows(), x.ncols());
        for (c, b) in ritz.1.iter().zip(&basis) {
            axpy(&mut v, T::from_re(*c), b);
        }
        let n = v.norm();
        x = v / T::from_re(n);
        best = Eigenpair {
            value: ritz.0,
            vector: x.clone(),
            residual,
            matvecs,
            converged: residual < opts.tol,
        };
        if best.converged || basis.len() >= dim_cap {
            best.converged = true;
            return Ok(best);
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpmOptions {
    pub max_dim: usize,
    /// Target on the a-posteriori error `‖v‖ β_m |c_m|`.
    pub tol: f64,
    pub max_splits: usize,
}

impl Default for ExpmOptions {
    fn default() -> Self {
        Self {
            max_dim: 40,
            tol: 1e-12,
            max_splits: 12,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ExpmInfo {
    pub matvecs: usize,
    pub substeps: usize,
    pub error_estimate: f64,
}

/// `exp(τ H) v` for Hermitian `H` and complex `τ`; the step is split when the
/// Krylov space cannot reach the tolerance.
pub fn expm_apply<F>(
    mut apply: F,
    v: &DMatrix<Complex64>,
    tau: Complex64,
    opts: &ExpmOptions,
) -> Result<(DMatrix<Complex64>, ExpmInfo), KrylovError>
where
    F: FnMut(&DMatrix<Complex64>) -> DMatrix<Complex64>,
{
    let mut info = ExpmInfo::default();
    let mut pieces = 1usize;
    for _ in 0..=opts.max_splits {
        let mut out = v.clone();
        let mut ok = true;
        let mut worst: f64 = 0.0;
        let mut mv = 0;
        for _ in 0..pieces {
            match expm_single(&mut apply, &out, tau / pieces as f64, opts) {
                Some((next, err, m)) => {
                    out = next;
                    worst = worst.max(err);
                    mv += m;
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        info.matvecs += mv;
        if ok {
            info.substeps = pieces;
            info.error_estimate = worst;
            return Ok((out, info));
        }
        pieces *= 2;
    }
    Err(KrylovError::ExpmTolerance(opts.tol))
}

fn expm_single<F>(
    apply: &mut F,
    v: &DMatrix<Complex64>,
    tau: Complex64,
    opts: &ExpmOptions,
) -> Option<(DMatrix<Complex64>, f64, usize)>
where
    F: FnMut(&DMatrix<Complex64>) -> DMatrix<Complex64>,
{
    let norm = v.norm();
    if norm == 0.0 {
        return Some((v.clone(), 0.0, 0));
    }
    let dim_cap = v.len();
    let mut basis = vec![v / Complex64::from_re(norm)];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut matvecs = 0;
    loop {
        let j = basis.len() - 1;
        let mut w = apply(&basis[j]);
        matvecs += 1;
        alpha.push(basis[j].dotc(&w).re);
        reorthogonalise(&mut w, &basis);
        let b = w.norm();
        let coeffs = small_expm(&alpha, &beta, tau);
        let err = norm * b * coeffs[j].norm();
        let exhausted = b < 1e-14 || basis.len() == dim_cap;
        if err < opts.tol || exhausted {
            let mut out = DMatrix::zeros(v.nrows(), v.ncols());
            for (c, q) in coeffs.iter().zip(&basis) {
                axpy(&mut out, *c * norm, q);
            }
            return Some((out, if exhausted { 0.0 } else { err }, matvecs));
        }
        if basis.len() >= opts.max_dim {
            return None;
        }
        beta.push(b);
        basis.push(w / Complex64::from_re(b));
    }
}

/// `exp(τ T) e₁` for the real symmetric tridiagonal `T`.
fn small_expm(alpha: &[f64], beta: &[f64], tau: Complex64) -> Vec<Complex64> {
    let eig = SymmetricEigen::new(tridiagonal(alpha, beta));
    let m = alpha.len();
    (0..m)
        .map(|i| {
            (0..m)
                .map(|k| {
                    let q = eig.eigenvectors[(i, k)] * eig.eigenvectors[(0, k)];
                    (tau * eig.eigenvalues[k]).exp() * q
                })
                .sum()
        })
        .collect()
}
