//! Weak values of qubit observables and the meters that read them out.
//!
//! * [`qops`]: dense complex linear algebra for registers of up to three qubits.
//! * [`weakvalue`]: analytic weak values (direct formula, Bloch closed forms,
//!   mixed and two-qubit results, bounds).
//! * [`meter_sim`]: exact qubit-meter coupling, post-selection and readout.
//! * [`particle_meter`]: free-particle meter on a position grid.
//! * [`shots`]: finite-shot sampling of the qubit-meter experiment.

pub mod error;
pub mod qops;
pub mod shots;
pub mod meter_sim;
pub mod particle_meter;
pub mod weakvalue;

pub use error::{Error, Result};

/// Numerical tolerances shared across the crate.
pub mod tol {
    /// Structural predicates (unit axes, Hermiticity, density checks).
    pub const STRUCTURAL: f64 = 1e-9;
    /// Equality of quantities that agree analytically.
    pub const EQUALITY: f64 = 1e-12;
    /// Overlaps or denominators below this count as orthogonal selections.
    pub const DIVERGENCE: f64 = 1e-10;
}
