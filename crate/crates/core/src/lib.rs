//! Gauge-invariant nonstabilizerness of the U(1) quantum link model.
//!
//! The gauge theory is handled in its dual form: a spin-1/2 chain with a
//! nearest-neighbour blockade and periodic boundaries. The crate covers
//!
//! * the constrained Hilbert space and its momentum sectors ([`basis`]),
//! * the dual Hamiltonian and its Lanczos ground states ([`hamiltonian`],
//!   [`eigensolver`]),
//! * a small-size harness for the full gauge theory ([`gauge`]),
//! * exact and sampled stabilizer Renyi entropy of order 2 ([`sre`],
//!   [`sampling`]),
//! * closed forms on the frustration-free line ([`rk`]),
//! * parameter sweeps and critical-point detection ([`sweep`]),
//! * configuration parsing and result files ([`io`]).
//!
//! Logarithms are natural throughout, so entropies are in nats.
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod eigensolver;
mod error;
pub mod exec;
pub mod gauge;
pub mod hamiltonian;
pub mod io;
pub mod lanczos;
pub mod rk;
pub mod sampling;
pub mod sre;
pub mod sweep;

pub use basis::{dim, is_valid, translate, ConstrainedBasis, SectorBasis, SpinConfig};
pub use eigensolver::{full_spectrum, ground_state, GroundState, SolverOptions};
pub use error::{ConfigIssue, Error, Result};
pub use hamiltonian::{CouplingParams, QlmMass};
pub use rk::RkState;
pub use sampling::{SamplingPlan, SreEstimate};
pub use sre::{PauliString, RealState, SreValue};

/// Golden-ratio point on the integrable line where the Z3 transition is
/// of Potts type: `((sqrt 5 + 1)/2)^(5/2)`.
pub fn v_potts() -> f64 {
    ((5f64.sqrt() + 1.0) / 2.0).powf(2.5)
}
