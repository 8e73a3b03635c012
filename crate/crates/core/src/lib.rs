//! Symplectic partitioned Runge-Kutta (SPRK) methods and the neural networks
//! built on them.
//!
//! The crate is organised bottom-up:
//!
//! * [`tableau`]: partitioned Butcher tableaux in exact rational arithmetic,
//!   the built-in explicit schemes and their symplecticity / order checks.
//! * [`hamiltonian`]: separable, possibly time-dependent Hamiltonian systems
//!   given as a pair of vector fields.
//! * [`integrator`]: explicit SPRK stepping, analytic step Jacobians,
//!   symplecticity residuals and empirical order estimation.
//! * [`network`]: the SPRK network (forward pass, reverse-mode backward pass,
//!   gradient-norm audit and the restricted-parameter closed form).
//! * [`training`]: losses, regulariser, SGD/Adam and the training loop.
//! * [`experiments`]: datasets and the end-to-end experiments driven by the
//!   `sprk` command line tool.

pub mod error;
pub mod experiments;
pub mod hamiltonian;
pub mod integrator;
pub mod linalg;
pub mod network;
pub mod tableau;
pub mod training;

pub use error::{Error, Result};
pub use hamiltonian::{Activation, SeparableHamiltonian};
pub use integrator::{PhaseState, Trajectory};
pub use linalg::Mat;
pub use network::NetParams;
pub use tableau::{ExplicitSprk, PrkTableau, Sweep, TableauKind};
