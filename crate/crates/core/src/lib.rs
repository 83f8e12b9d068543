//! Tight-binding rings with a single non-Hermitian defect: Hamiltonian
//! builders, a dense eigensolver, an exact secular-equation solver, and
//! tools for classifying eigenstates as extended, bound or scale-free.

pub mod eig;
pub mod model;
pub mod phase;
mod poly;
pub mod secular;
pub mod states;
pub mod verify;

pub use eig::{eig, match_spectra, EigError, SolverMethod, Spectrum};
pub use model::{
    build_hamiltonian, hermiticity_defect, similarity_conjugate, symmetry_deviation, AaImaginaryParams,
    AaNonreciprocalParams, BasisTag, HamiltonianMatrix, ImpurityParams, ModelError, ModelSpec,
    SymmetryKind, SymmetryOperator, TwoBandParams, C64,
};
