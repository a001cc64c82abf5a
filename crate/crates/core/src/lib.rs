//! Critical Galton–Watson processes with heavy-tailed immigration.
//!
//! The crate builds concrete offspring/immigration laws ([`models`]),
//! computes exact laws of derived quantities from their generating functions
//! ([`series`]), simulates paths and family totals ([`simulate`]), evaluates
//! tail asymptotics ([`predict`]) and compares the three ([`estimate`]).

pub mod error;
pub mod estimate;
pub mod models;
pub mod numeric;
pub mod predict;
pub mod rng;
pub mod series;
pub mod simulate;

pub use error::{Error, Result};
pub use models::{Model, ModelSpec};
