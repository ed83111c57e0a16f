//! Time-optimal control of a two-cylinder system actuated by a Peltier element.
//!
//! The crate is organized bottom-up:
//!
//! - [`model`]: physical parameters, the dead-zone input map and the total voltage
//!   reconstruction.
//! - [`spectral`]: radial Bessel roots, the control-dependent axial eigenproblem,
//!   weighted projections and re-expansion between bases.
//! - [`dynamics`]: analytic steady states, the modal ODE in closed form and
//!   piecewise-constant simulation.
//! - [`objective`]: the weighted terminal/penalty cost.
//! - [`optimizer`]: finite-difference gradient descent and the decreasing-horizon sweep.
//! - [`oracle`]: an independent axisymmetric finite-volume solver.
//!
//! With the `parallel` feature (default) independent evaluations run on the rayon
//! thread pool; without it every code path runs sequentially with identical results.

pub mod dynamics;
pub mod exec;
pub mod model;
pub mod objective;
pub mod optimizer;
pub mod oracle;
pub mod spectral;

mod error;

pub use error::{Error, Result};
pub use model::{PiecewiseControl, SystemParams};
