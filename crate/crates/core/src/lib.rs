//! Simulation and analysis of two quadrotors carrying a slack catenary cable.
//!
//! - [`geom3`]: SO(3) helpers, attitude errors and projection.
//! - [`catenary`]: static cable shape and endpoint tensions.
//! - [`plant`]: rigid-body dynamics, cable coupling, disturbances and the
//!   reduced relative-error model.
//! - [`controller`]: geometric tracking controller with cable feedforward.
//! - [`analysis`]: Lyapunov function, dissipation checks and ISS fits.
//! - [`simkit`]: RK4 runner, configuration, sweeps and CSV output.

// `!(x > 0.0)` style checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod catenary;
pub mod controller;
pub mod geom3;
pub mod plant;
pub mod simkit;
