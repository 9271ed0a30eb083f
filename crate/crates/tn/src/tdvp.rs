//! Real-time evolution by the symmetric (second-order) time-dependent
//! variational principle.
//!
//! Steps use the two-site integrator while some bond is still below
//! `min(chi_max, full rank)`, and the one-site integrator afterwards.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{apply_one, apply_two, apply_zero, grow_left, grow_right, left_edge, right_edge, Env};
use crate::krylov::{expm_apply, ExpmOptions, KrylovError};
use crate::mpo::Mpo;
use crate::mps::{full_rank_dims, Absorb, Mps};
use crate::scalar::{matmul, qr, Op};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TdvpConfig {
    pub chi_max: usize,
    pub dt: f64,
    pub svd_cutoff: f64,
    /// Error target of each local Krylov exponential.
    pub krylov_tol: f64,
}

impl TdvpConfig {
    /// Default step `0.025/Ω` at bond dimension 300.
    pub fn for_omega(omega: f64) -> Self {
        Self {
            chi_max: 300,
            dt: 0.025 / omega,
            svd_cutoff: 1e-10,
            krylov_tol: 1e-12,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TdvpError {
    #[error("MPO has {mpo} sites, state has {mps}")]
    LengthMismatch { mpo: usize, mps: usize },
    #[error(transparent)]
    Krylov(#[from] KrylovError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub two_site: bool,
    pub max_bond: usize,
    /// Largest discarded weight of any split in the step.
    pub max_discarded: f64,
    /// Summed discarded weight of the step.
    pub discarded: f64,
}

/// Evolution engine holding the state and its MPO environments. Between
/// steps the orthogonality centre sits at site 0.
pub struct Tdvp<'a> {
    mpo: &'a Mpo,
    cfg: TdvpConfig,
    state: Mps<Complex64>,
    left: Vec<Env<Complex64>>,
    right: Vec<Env<Complex64>>,
    time: f64,
}

impl<'a> Tdvp<'a> {
    pub fn new(mpo: &'a Mpo, mut state: Mps<Complex64>, cfg: TdvpConfig) -> Result<Self, TdvpError> {
        let n = state.len();
        if mpo.len() != n {
            return Err(TdvpError::LengthMismatch { mpo: mpo.len(), mps: n });
        }
        state.canonicalize();
        let mut left = vec![Vec::new(); n + 1];
        let mut right = vec![Vec::new(); n + 1];
        left[0] = left_edge(mpo.sites[0].wl);
        right[n] = right_edge(mpo.sites[n - 1].wr);
        for c in (1..n).rev() {
            right[c] = grow_right(&right[c + 1], state.site(c), &mpo.sites[c]);
        }
        Ok(Self {
            mpo,
            cfg,
            state,
            left,
            right,
            time: 0.0,
        })
    }

    pub fn state(&self) -> &Mps<Complex64> {
        &self.state
    }

    pub fn into_state(self) -> Mps<Complex64> {
        self.state
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Resume the clock from a checkpoint.
    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn config(&self) -> &TdvpConfig {
        &self.cfg
    }

    fn saturated(&self) -> bool {
        let n = self.state.len();
        let full = full_rank_dims(n, self.cfg.chi_max);
        self.state.bond_dims().iter().zip(&full).all(|(d, f)| d >= f)
    }

    fn expm_opts(&self) -> ExpmOptions {
        ExpmOptions {
            tol: self.cfg.krylov_tol,
            ..Default::default()
        }
    }

    /// Advance by `dt`.
    pub fn step(&mut self) -> Result<StepInfo, TdvpError> {
        let n = self.state.len();
        let info = if n == 1 || self.saturated() {
            self.one_site_step()?
        } else {
            self.two_site_step()?
        };
        self.time += self.cfg.dt;
        Ok(StepInfo {
            max_bond: self.state.max_bond(),
            ..info
        })
    }

    fn two_site_step(&mut self) -> Result<StepInfo, TdvpError> {
        let n = self.state.len();
        let half = self.cfg.dt / 2.0;
        let fwd = Complex64::new(0.0, -half);
        let back = Complex64::new(0.0, half);
        let opts = self.expm_opts();
        let mut info = StepInfo {
            two_site: true,
            ..Default::default()
        };
        let record = |info: &mut StepInfo, d: f64| {
            info.max_discarded = info.max_discarded.max(d);
            info.discarded += d;
        };
        for c in 0..n - 1 {
            let (l, r) = (&self.left[c], &self.right[c + 2]);
            let (w1, w2) = (&self.mpo.sites[c], &self.mpo.sites[c + 1]);
            let (th, _) = expm_apply(|v| apply_two(l, w1, w2, r, v), &self.state.theta(c), fwd, &opts)?;
            let tr = self.state.split_theta(c, th, self.cfg.chi_max, self.cfg.svd_cutoff, Absorb::Right);
            record(&mut info, tr.discarded);
            self.left[c + 1] = grow_left(&self.left[c], self.state.site(c), &self.mpo.sites[c]);
            if c + 1 < n - 1 {
                let (l, r) = (&self.left[c + 1], &self.right[c + 2]);
                let w = &self.mpo.sites[c + 1];
                let (m, _) = expm_apply(|v| apply_one(l, w, r, v), &self.state.stacked(c + 1), back, &opts)?;
                self.state.set_stacked(c + 1, &m);
            }
        }
        for c in (0..n - 1).rev() {
            let (l, r) = (&self.left[c], &self.right[c + 2]);
            let (w1, w2) = (&self.mpo.sites[c], &self.mpo.sites[c + 1]);
            let (th, _) = expm_apply(|v| apply_two(l, w1, w2, r, v), &self.state.theta(c), fwd, &opts)?;
            let tr = self.state.split_theta(c, th, self.cfg.chi_max, self.cfg.svd_cutoff, Absorb::Left);
            record(&mut info, tr.discarded);
            self.right[c + 1] = grow_right(&self.right[c + 2], self.state.site(c + 1), &self.mpo.sites[c + 1]);
            if c > 0 {
                let (l, r) = (&self.left[c], &self.right[c + 1]);
                let w = &self.mpo.sites[c];
                let (m, _) = expm_apply(|v| apply_one(l, w, r, v), &self.state.stacked(c), back, &opts)?;
                self.state.set_stacked(c, &m);
            }
        }
        Ok(info)
    }

    fn one_site_step(&mut self) -> Result<StepInfo, TdvpError> {
        let n = self.state.len();
        let half = self.cfg.dt / 2.0;
        let fwd = Complex64::new(0.0, -half);
        let back = Complex64::new(0.0, half);
        let opts = self.expm_opts();
        for c in 0..n {
            let (l, r) = (&self.left[c], &self.right[c + 1]);
            let w = &self.mpo.sites[c];
            let (m, _) = expm_apply(|v| apply_one(l, w, r, v), &self.state.stacked(c), fwd, &opts)?;
            if c + 1 == n {
                self.state.set_stacked(c, &m);
                break;
            }
            let (q, rmat) = qr(&m);
            self.state.set_stacked(c, &q);
            self.left[c + 1] = grow_left(&self.left[c], self.state.site(c), &self.mpo.sites[c]);
            let (l, r) = (&self.left[c + 1], &self.right[c + 1]);
            let (cmat, _) = expm_apply(|v| apply_zero(l, r, v), &rmat, back, &opts)?;
            let next = self.state.site(c + 1);
            let merged = [matmul(&cmat, Op::N, &next[0], Op::N), matmul(&cmat, Op::N, &next[1], Op::N)];
            self.state.set_site(c + 1, merged);
            self.state.set_center(c + 1);
        }
        for c in (0..n).rev() {
            let (l, r) = (&self.left[c], &self.right[c + 1]);
            let w = &self.mpo.sites[c];
            let m = self.state.stacked(c);
            let (m, _) = expm_apply(|v| apply_one(l, w, r, v), &m, fwd, &opts)?;
            if c == 0 {
                self.state.set_stacked(0, &m);
                break;
            }
            self.state.set_stacked(c, &m);
            let (cmat, b) = lq(&self.state, c);
            self.state.set_site(c, b);
            self.right[c] = grow_right(&self.right[c + 1], self.state.site(c), &self.mpo.sites[c]);
            let (l, r) = (&self.left[c], &self.right[c]);
            let (cmat, _) = expm_apply(|v| apply_zero(l, r, v), &cmat, back, &opts)?;
            let prev = self.state.site(c - 1);
            let merged = [matmul(&prev[0], Op::N, &cmat, Op::N), matmul(&prev[1], Op::N, &cmat, Op::N)];
            self.state.set_site(c - 1, merged);
            self.state.set_center(c - 1);
        }
        self.state.set_center(0);
        Ok(StepInfo {
            two_site: false,
            ..Default::default()
        })
    }
}

/// `A_c = C · B` with `B` right-orthonormal.
fn lq(state: &Mps<Complex64>, c: usize) -> (DMatrix<Complex64>, [DMatrix<Complex64>; 2]) {
    let a = state.site(c);
    let (dl, dr) = a[0].shape();
    let mut m = DMatrix::zeros(dl, 2 * dr);
    m.columns_mut(0, dr).copy_from(&a[0]);
    m.columns_mut(dr, dr).copy_from(&a[1]);
    let (q, r) = qr(&m.adjoint());
    let (q, r) = (q.adjoint(), r.adjoint());
    let k = q.nrows();
    let b = [q.columns(0, dr).clone_owned(), q.columns(dr, dr).clone_owned()];
    debug_assert_eq!(b[0].nrows(), k);
    (r, b)
}

/// One step of `dt` from a canonical state.
pub fn tdvp_step(state: Mps<Complex64>, mpo: &Mpo, cfg: &TdvpConfig) -> Result<(Mps<Complex64>, StepInfo), TdvpError> {
    let mut engine = Tdvp::new(mpo, state, *cfg)?;
    let info = engine.step()?;
    Ok((engine.into_state(), info))
}
