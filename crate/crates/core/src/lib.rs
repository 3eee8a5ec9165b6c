//! Holonomic evolution of dark subspaces.
//!
//! Three independent routes compute the unitary a dark subspace picks up
//! while the bright states of a driven system move:
//!
//! * [`effective`]: propagate the effective Hamiltonian
//!   `H_eff = sum_i i(|dB_i><B_i| - |B_i><dB_i|)` built from bright-state
//!   trajectories alone;
//! * [`berry`]: path-ordered exponential of the non-Abelian Berry connection
//!   of an explicitly parametrized dark basis;
//! * [`propagate::evolve_full_adiabatic`]: brute-force Schrödinger integration
//!   of the full Lambda Hamiltonian in the adiabatic regime.
//!
//! [`gates`] builds the three-stage holonomic gate on top of these, and
//! [`morris_shore`] reduces degenerate two-manifold couplings to the bright
//! pair form the effective Hamiltonian expects.

pub mod acceptance;
pub mod berry;
pub mod effective;
pub mod error;
pub mod gates;
pub mod lambda;
pub mod linalg;
pub mod morris_shore;
pub mod propagate;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, HermitianOperator, PhaseMode, UnitaryOperator};
pub use num_complex::Complex64;
