//! Command-line driver for the anisotropic Rabi spectral solver: sweeps,
//! exceptional-point scans, phase diagrams and ED validation runs.

pub mod commands;
pub mod config;
pub mod output;
pub mod schema;
