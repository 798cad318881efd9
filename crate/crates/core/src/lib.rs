//! Multi-layer MCTDH for mixtures of bosonic species in one-dimensional traps.
//!
//! The wavefunction is a three-layer tensor: a top tensor over species
//! states, species states expanded in number states, and orbitals on a DVR
//! grid. See the `examples/` directory for end-to-end runs.

pub mod checkpoint;
pub mod densities;
pub mod eom;
pub mod error;
pub mod fock;
pub mod grid;
pub mod integrator;
pub mod linalg;
pub mod meanfield;
pub mod observables;
pub mod oracle;
pub mod propagate;
pub mod state;

pub mod cli;

pub use error::{Error, Result};
pub use grid::{Grid, GridSpec, TrapSpec};
pub use state::{MLState, Mixture, MixtureSpec};
