//! Flatness-based analysis of finite-horizon linear-quadratic optimal control.

pub mod boundary;
pub mod cli;
pub mod error;
pub mod euler_lagrange;
pub mod flatness;
pub mod numeric;
pub mod oracle;
pub mod polymat;
pub mod problem;
pub mod qmat;
pub mod realization;
pub mod solver;
pub mod turnpike;

pub use error::{Error, Result};
