//! Spectrum of the quantum Rabi model via Hill's determinant method.
//!
//! The Hamiltonian `H = a'a + g sigma_z (a + a') + delta sigma_x` (units of
//! the mode frequency) leads, in Bargmann representation, to an infinite
//! tridiagonal system for the expansion coefficients. This crate evaluates
//! the normalized limiting determinant of that system, locates regular
//! eigenvalues as its zeros, classifies exceptional eigenvalues
//! `E_n = n - g^2` into the adiabatic / Judd-degenerate / tail-nondegenerate
//! cases, extracts the corresponding zero curves in the (g, delta) plane,
//! and cross-validates everything against a truncated Fock-basis
//! diagonalization.

pub mod atlas;
pub mod oracle;
pub mod recurrence;
pub mod spectrum;

pub use atlas::{
    axis_intercepts, sample_field, trace_curves, AtlasError, CurvePointSet, FieldGrid, FieldKind,
    GridRegion, Polyline,
};
pub use oracle::{
    build_matrix, eigenvalues, jacobi_eigen, oracle_gap, OracleError, OracleSpectrum,
    SymmetricEigen, TruncatedHamiltonian,
};
pub use recurrence::{
    coefficients, finite_determinant, hill_determinant, minimal_solution, tail_limit,
    tail_limit_scaled, CoefficientTriple, HillEvaluation, MinimalSolution, ModelParams,
    RecurrenceError, SolverOptions, SpectralVariable,
};
pub use spectrum::{
    classify_exceptional, exceptional_eigenvectors, scan_regular, CaseLabel, ExceptionalReport,
    RootFlags, RootRecord, SpectrumError,
};
