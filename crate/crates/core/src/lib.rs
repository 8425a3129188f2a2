//! Mellin-transform solution of the Laplace equation in the plane cut along
//! the negative x₁-axis, with a Venttsel-type coupling between the field p
//! and the crack pressure q, plus the machinery that verifies it.

pub mod app;
pub mod bounds;
pub mod config;
pub mod error;
pub mod mellin;
pub mod quad;
pub mod solver;
pub mod source;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
