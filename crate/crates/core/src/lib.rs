//! Finite-dimensional laboratory for the bosonic mean-field limit.
//!
//! The crate evolves `n`-boson states exactly on the symmetric sector
//! `∨^n ℂ^d`, propagates Wigner measures along the Hartree flow, implements
//! the Wick symbol calculus behind the mean-field expansion, and measures
//! trace-norm convergence rates of reduced density matrices.
//!
//! Module map:
//!
//! * [`symspace`]: occupation bases, symmetric embeddings, partial traces.
//! * [`wickcalc`]: polynomial symbols, contractions, Wick quantization.
//! * [`hartree`]: the nonlinear field flow and Wigner-measure quadrature.
//! * [`quantum`]: models, Hamiltonians, exact propagation, prepared states.
//! * [`expansion`]: iterated brackets and the small-time series.
//! * [`bench`]: rate sweeps, slope fits and closed-form bound checks.
//! * [`oracle`]: brute-force full-tensor reference computations.
//! * [`selftest`]: randomized consistency suites used by the CLI.

pub mod bench;
pub mod error;
pub mod expansion;
pub mod hartree;
pub mod linalg;
pub mod oracle;
pub mod quantum;
pub mod random;
pub mod selftest;
pub mod symspace;
pub mod wickcalc;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

pub use linalg::{CMatrix, CVector};
pub use symspace::{DensityMatrix, OccupationBasis, SectorOperator};
pub use wickcalc::{PolySymbol, WickParameters};
