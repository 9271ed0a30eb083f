//! Exact diagonalisation in the computational basis of the active atoms.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use rydlink::{CouplingList, Sector, StateExpectations};

use crate::krylov::{
    expm_apply, lowest_eigenpair, ExpmInfo, ExpmOptions, KrylovError, LanczosOptions,
};
use crate::scalar::Scalar;

pub const DEFAULT_ED_CAP: usize = 22;

#[derive(Debug, Error, PartialEq)]
pub enum EdError {
    #[error("{atoms} atoms exceed the exact-diagonalisation cap of {cap}")]
    TooLarge { atoms: usize, cap: usize },
    #[error(transparent)]
    Krylov(#[from] KrylovError),
}

/// `H = diag(E_cl) + Σ_k f_k σˣ_k` stored implicitly. Hermitian by
/// construction: the off-diagonal part is a sum of real symmetric flips.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseHamiltonian {
    n: usize,
    diag: Vec<f64>,
    field: Vec<f64>,
}

pub fn to_sparse(couplings: &CouplingList, cap: usize) -> Result<SparseHamiltonian, EdError> {
    let n = couplings.len();
    if n > cap {
        return Err(EdError::TooLarge { atoms: n, cap });
    }
    let dim = 1usize << n;
    let pairs: Vec<(usize, f64)> = couplings
        .pairs
        .iter()
        .map(|p| ((1usize << p.i) | (1usize << p.j), p.value))
        .collect();
    let diag = (0..dim)
        .map(|s| {
            let mut e = 0.0;
            for (k, d) in couplings.detuning.iter().enumerate() {
                if s >> k & 1 == 1 {
                    e += d;
                }
            }
            for &(mask, v) in &pairs {
                if s & mask == mask {
                    e += v;
                }
            }
            e
        })
        .collect();
    Ok(SparseHamiltonian {
        n,
        diag,
        field: couplings.field.clone(),
    })
}

impl SparseHamiltonian {
    pub fn n_atoms(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        if row == col {
            return self.diag[row];
        }
        let x = row ^ col;
        if x.is_power_of_two() {
            self.field[x.trailing_zeros() as usize]
        } else {
            0.0
        }
    }

    pub fn matvec<T: Scalar>(&self, v: &DMatrix<T>) -> DMatrix<T> {
        let mut out = DMatrix::zeros(v.nrows(), 1);
        let src = v.as_slice();
        let dst = out.as_mut_slice();
        for (s, o) in dst.iter_mut().enumerate() {
            let mut acc = src[s] * T::from_re(self.diag[s]);
            for (k, f) in self.field.iter().enumerate() {
                if *f != 0.0 {
                    acc += src[s ^ (1 << k)] * T::from_re(*f);
                }
            }
            *o = acc;
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim(), self.dim(), |r, c| self.entry(r, c))
    }

    pub fn expectation<T: Scalar>(&self, v: &DMatrix<T>) -> f64 {
        v.dotc(&self.matvec(v)).real() / v.norm_squared()
    }

    pub fn ground_state(&self, seed: u64) -> Result<(DMatrix<f64>, f64), EdError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = DMatrix::from_fn(self.dim(), 1, |_, _| f64::random(&mut rng));
        let opts = LanczosOptions {
            krylov_dim: 60,
            max_restarts: 100,
            tol: 1e-10,
        };
        let e = lowest_eigenpair(|v| self.matvec(v), &start, &opts)?;
        if !e.converged {
            return Err(KrylovError::Stagnation {
                residual: e.residual,
                matvecs: e.matvecs,
            }
            .into());
        }
        Ok((e.vector, e.value))
    }

    /// `exp(-i H dt) v`.
    pub fn evolve(
        &self,
        v: &DMatrix<Complex64>,
        dt: f64,
    ) -> Result<(DMatrix<Complex64>, ExpmInfo), EdError> {
        let opts = ExpmOptions {
            tol: 1e-10,
            ..Default::default()
        };
        Ok(expm_apply(
            |x| self.matvec(x),
            v,
            Complex64::new(0.0, -dt),
            &opts,
        )?)
    }
}

/// Basis vector of a configuration over the active atoms.
pub fn basis_state<T: Scalar>(sector: &Sector, bits: &[bool]) -> DMatrix<T> {
    let index = bits
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .fold(0usize, |acc, (k, _)| acc | 1 << k);
    let mut v = DMatrix::zeros(1 << sector.n_active(), 1);
    v[index] = T::one();
    v
}

/// Densities, bond correlators and triangle projectors of a state vector,
/// keyed by lattice atoms.
pub fn expectations<T: Scalar>(sector: &Sector, psi: &DMatrix<T>) -> StateExpectations {
    let norm = psi.norm_squared();
    let bit = |atom: usize| sector.active_index(atom).expect("required atoms are active");
    let pairs: Vec<((usize, usize), usize)> = sector
        .required_pairs()
        .into_iter()
        .map(|(i, j)| ((i.min(j), i.max(j)), (1 << bit(i)) | (1 << bit(j))))
        .collect();
    let triples: Vec<([usize; 3], usize)> = sector
        .required_triples()
        .into_iter()
        .map(|t| (t, t.iter().fold(0, |m, &a| m | 1 << bit(a))))
        .collect();
    let n = sector.n_active();
    let mut dens = vec![0.0; n];
    let mut pair_v = vec![0.0; pairs.len()];
    let mut rrr = vec![0.0; triples.len()];
    let mut ggg = vec![0.0; triples.len()];
    for (s, amp) in psi.iter().enumerate() {
        let p = amp.modulus_squared() / norm;
        if p == 0.0 {
            continue;
        }
        for (k, d) in dens.iter_mut().enumerate() {
            if s >> k & 1 == 1 {
                *d += p;
            }
        }
        for (v, (_, mask)) in pair_v.iter_mut().zip(&pairs) {
            if s & mask == *mask {
                *v += p;
            }
        }
        for (t, (_, mask)) in triples.iter().enumerate() {
            let m = s & mask;
            if m == *mask {
                rrr[t] += p;
            } else if m == 0 {
                ggg[t] += p;
            }
        }
    }
    let mut density = vec![None; sector.lattice().len()];
    for (k, &a) in sector.active_atoms().iter().enumerate() {
        density[a] = Some(dens[k]);
    }
    StateExpectations {
        density,
        pair: pairs.iter().map(|(k, _)| *k).zip(pair_v).collect(),
        triple: triples
            .iter()
            .enumerate()
            .map(|(t, (k, _))| (*k, (rrr[t], ggg[t])))
            .collect(),
    }
}
