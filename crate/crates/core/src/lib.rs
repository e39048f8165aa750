//! Ground states of nonsmooth variational problems on bounded-variation grid
//! functions.
//!
//! The crate works with two energies on a uniform rectangular grid:
//!
//! ```text
//! 1-Laplacian:      Φ(u) = TV(u) + ∫∂Ω |u|            − ∫ F(u)
//! mean curvature:   Φ(u) = ∫ √(1 + |∇u|²) + ∫∂Ω |u|   − λ ∫ F(u)
//! ```
//!
//! Both are minimized over the Nehari set, the nonzero fields `u` whose
//! one-sided ray derivative `t ↦ Φ(tu)` vanishes at `t = 1`. Every ray meets
//! that set exactly once (for admissible nonlinearities), so the search runs
//! over directions `w` with the amplitude fixed by a bracketed root solve.
//!
//! * [`domain`]: grids, per-cell fields, forward-difference gradients.
//! * [`bv`]: total variation, boundary trace, BV norm and the two principal
//!   functionals with their ray derivatives.
//! * [`nonlinearity`]: the reaction term `f`, its primitive `F`, and numerical
//!   audits of the growth and monotonicity hypotheses.
//! * [`fibering`]: the problem description, the fibering map `t ↦ Φ(tw)` and
//!   the Nehari projection.
//! * [`ground_state`]: multi-start smoothed descent on the reduced objective.
//! * [`verification`]: subdifferential slacks, dual vector-field certificates
//!   and the nondegeneracy diagnostic.
//!
//! The crate is `no_std` (it needs `alloc`); file formats, the command line
//! front end and parallel restarts live in the `nehari-bv` crate.

#![no_std]
#![warn(missing_docs)]

extern crate alloc;

pub mod bv;
pub mod domain;
mod error;
pub mod fibering;
pub mod ground_state;
mod math;
pub mod nonlinearity;
pub mod verification;

pub use bv::TvFlavor;
pub use domain::{DiscreteDomain, GradientField, ScalarField, VectorField};
pub use error::Error;
pub use fibering::{FiberingMap, Functional, NehariRoot, ProblemSpec};
pub use ground_state::{GroundStateResult, SolverConfig};
pub use nonlinearity::{AuditReport, Nonlinearity, NonlinearityKind};
pub use verification::{CriticalityReport, VectorFieldCertificate};

/// Critical exponent `1* = N/(N-1)` of the BV embedding for the planar grids
/// used throughout the crate.
pub const CRITICAL_EXPONENT: f64 = 2.0;
