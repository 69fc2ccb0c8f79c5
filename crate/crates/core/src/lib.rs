//! Curvature of Hermitian metrics computed from exact jets.

pub mod error;
pub mod jets;
pub mod metric;
pub mod sampling;
pub mod connection;
pub mod curvature;
pub mod hopf;
pub mod structure;
pub mod normal_form;
pub mod normal_point;
pub mod forms;
pub mod positivity;
pub mod flow;

pub use error::{Error, Result};
