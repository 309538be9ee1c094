//! Structured H-infinity co-design for position-dependent flexible motion systems.

pub mod error;
pub mod linalg;
pub mod statespace;

pub use error::{Error, Result};
pub use statespace::StateSpaceModel;
pub mod analysis;
pub mod benchplant;
pub mod cli;
pub mod config;
pub mod decoupling;
pub mod filter;
pub mod mechanics;
pub mod observer;
pub mod shaping;
pub mod synthesis;
