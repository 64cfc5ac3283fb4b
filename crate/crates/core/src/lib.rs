//! Gate-model linear algorithms lifted to paraunitary Laurent-polynomial
//! matrices.
//!
//! The crate builds in-place rotation/constant programs (Walsh-Hadamard and
//! the real form of the DFT), replaces constant gates by monomials in an
//! indeterminate `z`, and measures the resulting algebraic condition number
//! against the ordinary spectral one. It also evaluates preconditioned
//! quasi-entropy potentials along a program and checks the per-gate change
//! bounds that turn a potential gap into a gate-count lower bound.
//!
//! Coordinates are 0-based everywhere. Logarithms in potentials are base 2.

pub mod condition;
pub mod error;
pub mod gate;
pub mod io;
pub mod laurent;
pub mod lifting;
pub mod oracle;
pub mod polymatrix;
pub mod potential;
pub mod suites;
pub mod transform;

pub use error::{Error, Result};
pub use gate::{Gate, GateProgram, MachineState};
pub use laurent::LaurentPoly;
pub use lifting::{IntegralityCertificate, LiftedProgram, RoundingSchedule};
pub use polymatrix::PolyMatrix;
pub use potential::{PotentialTrace, PreconditionerPair};
pub use transform::{TransformKind, TransformSpec};

/// `base^k` for any integer exponent.
pub fn pow_int(base: f64, k: i64) -> f64 {
    match i32::try_from(k) {
        Ok(k32) => base.powi(k32),
        Err(_) => base.powf(k as f64),
    }
}
