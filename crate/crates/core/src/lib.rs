//! Hybrid discrete–continuous optical channels and their quantum
//! correlations.
//!
//! The crate models two bipartite states built by adding or subtracting a
//! single photon across two coherent beams — the photon-added pair (PAC)
//! and the photon-subtracted/depleted pair (DPC) — then degrades one arm
//! with beamsplitter scattering against vacuum and Gaussian phase noise,
//! and quantifies the surviving correlations:
//!
//! * joint homodyne quadrature statistics ([`homodyne`]),
//! * measurement-induced disturbance and its phase-optimized variant,
//! * quantum discord over displaced-qubit measurements ([`discord`]),
//! * closed forms tying discord to a single quadrature variance.
//!
//! Everything is computed in truncated Fock spaces ([`fock`]) with
//! explicitly policed truncation, convergence, and positivity tolerances.
//! All entropies and correlation measures are in bits.

pub mod channels;
pub mod discord;
pub mod error;
pub mod fock;
pub mod homodyne;
pub mod optim;
pub mod quadrature;
pub mod states;

pub use error::{CoreError, Result};
