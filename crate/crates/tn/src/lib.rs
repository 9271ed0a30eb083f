//! Tensor-network and exact-diagonalisation backends for the Rydberg
//! Hamiltonian. DMRG and TDVP run on a finite-state-machine MPO; the sparse
//! ED path serves as the oracle on small lattices.

pub mod checkpoint;
pub mod dmrg;
pub mod ed;
pub mod env;
pub mod krylov;
pub mod mpo;
pub mod mps;
pub mod ordering;
pub mod scalar;
pub mod tdvp;
