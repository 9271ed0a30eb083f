//! Triangular Rydberg arrays viewed as a U(1) quantum link model on the dual
//! hexagonal lattice.
//!
//! The crate covers lattice construction, the spin → dimer → gauge-field map,
//! the Rydberg Hamiltonian as a term list, the `Ω = 0` string analytics, the
//! flux-string observables, and the window-ensemble fit pipeline. Solvers live
//! in `rydlink-tn`.

pub mod classical;
pub mod fit;
pub mod gauge;
pub mod hamiltonian;
pub mod lattice;
pub mod observables;
pub mod sector;

pub use classical::{
    breaking_distance, classical_potential, resonance_points, rigid_string_configuration,
    vacuum_configuration, ClassicalStringModel, Resonances,
};
pub use gauge::{GaugeSnapshot, SpinConfiguration, StateExpectations};
pub use hamiltonian::{build_couplings, classical_energy, CouplingList, ModelParams};
pub use lattice::{
    ChargePlacement, DualLattice, Lattice, LatticeError, Truncation, TransversePosition,
};
pub use sector::Sector;
