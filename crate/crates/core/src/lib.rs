//! Time-dependent scattering-matrix engine.
//!
//! Scattering matrix elements are obtained from the time correlation
//! function between reactant and product Møller wavepackets,
//!
//! ```text
//! C(t) = <Ψ₋| exp(-iHt) |Ψ₊>,
//! ```
//!
//! evaluated either directly (classical backend) or by a modified
//! Hadamard test on an embedded statevector emulator. The Fourier
//! transform of `C(t)` divided by the packets' momentum expansion
//! coefficients yields `S(E)` and reaction probabilities `|S|²`.
//!
//! Module map:
//! - [`grid`]: uniform grids, wavefunctions and continuum-normalised transforms.
//! - [`wavepacket`]: Gaussian packets, Morse vibrational bases, channel product states.
//! - [`hamiltonian`]: potentials, grid Hamiltonians, coordinate maps, Pauli decomposition.
//! - [`propagation`]: exact-eigen, split-operator and Trotter–Suzuki propagators.
//! - [`moller`]: Møller states and asymptotic-time convergence.
//! - [`qcircuit`]: statevector emulator, state preparation, Hadamard test, shot sampling.
//! - [`smatrix`]: correlation series, energy transform, S-matrix extraction.

pub mod error;
pub mod grid;
pub mod hamiltonian;
pub mod moller;
pub mod par;
pub mod propagation;
pub mod qcircuit;
pub mod smatrix;
pub mod units;
pub mod wavepacket;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use num_complex::Complex64 as C64;
