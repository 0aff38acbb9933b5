//! Two-layer deep-water wave model: physical coefficients, Hamiltonian and
//! normal-mode identities, the gauge transformation, and a pseudospectral
//! solver for the coupled Benjamin-Ono-Schrödinger system.

pub mod coeffs;
pub mod exec;
pub mod spectral;
pub mod hamiltonian;
pub mod gauge;
pub mod solver;
pub mod verify;
pub mod config;
pub mod cli;
