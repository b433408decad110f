//! Command-line pipeline and HTTP session service for the symptom network.

pub mod assessment;
pub mod cli;
pub mod manifest;
pub mod service;
pub mod session;
