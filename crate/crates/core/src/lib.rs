//! Kinematic and single-track models of a tractor-semitrailer, a closed-loop
//! simulation harness and the error metrics used to validate both models
//! against measured driving logs.

pub mod controller;
pub mod dynamics;
pub mod harness;
pub mod ingest;
pub mod kinematics;
pub mod metrics;
pub mod params;
pub mod plot;
pub mod report;
pub mod validation;
