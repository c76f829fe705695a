//! Dense numerical simulator for coherent free-electron/photon
//! interactions acting on GKP-encoded photonic qubits.
//!
//! The crate is organized bottom-up:
//!
//! - [`linalg`]: dense complex tensors, matrix exponential, partial trace,
//!   fidelities.
//! - [`fock`]: single-mode truncated Fock space (ladder and displacement
//!   operators, coherent states, Wigner function, quadrature
//!   wavefunctions).
//! - [`electron`]: the free-electron ancilla, as a finite energy comb on a
//!   ring and as an idealized qubit, with gates and projective
//!   measurement.
//! - [`interaction`]: the electron-photon scattering unitary and its
//!   qubit-level conditional-displacement form.
//! - [`gkp`]: the square GKP code — lattice constants, finite-energy code
//!   states, logical displacements, decoding, logical fidelity.
//! - [`protocols`]: compilation of gate/readout/entanglement protocols
//!   into schedules of physical steps, and their execution by branch
//!   enumeration or sampling with feedforward.
//! - [`qec`]: noise channels and electron-mediated stabilizer correction
//!   rounds.

pub mod electron;
pub mod error;
pub mod fock;
pub mod gkp;
pub mod interaction;
pub mod linalg;
pub mod protocols;
pub mod qec;

pub use error::{Result, SimError};
pub use linalg::{fidelity, kron, matexp, partial_trace, Operator, QState, StateVector};

pub use num_complex::Complex64;
