//! Channel-resolved geometric phases for small driven quantum systems.
//!
//! A state is expanded in the fixed eigenbasis of a reference Hamiltonian,
//! each channel's phase is split into a sub-geometric and a dynamical part,
//! and Berry and Aharonov–Anandan phases are recovered from those pieces.

pub mod cli;
pub mod density;
pub mod error;
pub mod model;
pub mod numerics;
pub mod phases;
pub mod propagation;
pub mod twolevel;

pub use error::{Error, Result};
