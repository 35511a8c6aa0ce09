//! Iterative qubit coupled cluster (iQCC) on qubit Hamiltonians.
//!
//! Pauli words are stored in symplectic form (`x`/`z` bit masks, up to 64
//! qubits). Molecular Hamiltonians come from FCIDUMP integrals through the
//! Jordan–Wigner map, and small systems can be checked against the dense
//! eigensolvers in [`oracle`].

pub mod driver;
pub mod error;
pub mod fermion;
pub mod hamiltonian;
pub mod optimize;
pub mod oracle;
pub mod pauli;
pub mod qcc;

pub use driver::{
    gap_from_hamiltonians, pt_correction, resource_estimate, run_iqcc, singlet_triplet_gap, GapResult,
    IqccConfig, IqccRun, IterationRecord, ResourceEstimate, StateRun, Termination, HARTREE_TO_EV,
};
pub use error::{Error, Result};
pub use fermion::{
    jordan_wigner, parse_fcidump, penalize, reference_state, reference_state_with_spin, select_cas,
    spin_operators, CasWindow, MolecularIntegrals, SpinPenalty,
};
pub use hamiltonian::{
    diagonal_expectation, dress, dress_sequence, ising_decompose, prune, IsingBlock, IsingDecomposition,
    PauliSum, ReferenceState,
};
pub use optimize::{minimize, OptimizationConfig, OptimizationResult};
pub use pauli::{commutes, multiply, Phase, PauliWord, MAX_QUBITS};
pub use qcc::{
    compute_d, compute_omega, derive_canonical_generator, estimate_amplitude, qcc_energy,
    qcc_energy_and_gradient, qcc_gradient, rank_generators, rank_generators_by, Ansatz,
    ImportanceMeasure, RankedGenerator, MAX_ANSATZ_LEN,
};
