//! Random-choice solver for the hyperbolic chemotaxis balance law
//!
//! ```text
//! v_t + u_x = 0,
//! u_t + (u v)_x = u (1 - u),
//! ```
//!
//! around the equilibrium `(v, u) = (0, 1)`, together with the diagnostics
//! needed to measure its time-asymptotic behaviour.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] – fluxes, sources, eigenstructure, entropy pair and the
//!   heat-kernel profile in the primitive, shifted and hatted frames.
//! * [`riemann`] – exact Riemann solver with wave curves `P`, `Q`, `Ω`, `H`.
//! * [`glimm`] – random-choice scheme with operator splitting and the
//!   nonlocal potential redistribution of the damping.
//! * [`oracle`] – first-order local Lax–Friedrichs reference solver.
//! * [`diagnostics`] – total variation, interaction potential, Glimm
//!   functional, weighted energies, entropy budget and decay fits.
//! * [`data`] and [`config`] – initial-data families and run configuration.

pub mod config;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod glimm;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod riemann;
pub mod run;

pub use error::{Error, Result};
pub use linalg::{Mat2, Vec2};

/// Version string embedded in every output file header.
pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
