//! Symptom-level Bayesian network for depression and anxiety assessment.

pub mod dataset;
pub mod estimation;
pub mod exec;
pub mod graph;
pub mod inference;
pub mod metrics;
pub mod pipeline;
pub mod synthgen;
pub mod workflow;
