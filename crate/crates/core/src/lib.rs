//! Spectral solver for the anisotropic quantum Rabi model.
//!
//! The regular spectrum comes from the zeros of the parity G-functions
//! ([`gfunction`]), the eigenvalues on the pole lines from [`exceptional`],
//! and everything is checked against exact diagonalization ([`ed`]).

pub mod ed;
pub mod error;
pub mod exceptional;
pub mod gfunction;
pub mod model;
pub mod recurrence;
pub mod roots;

pub use ed::{diagonalize, diagonalize_with, jc_spectrum, EdOptions, EdResult, StateExpansion};
pub use error::{Error, Result};
pub use exceptional::{
    build_quasi_exact_pair, closed_form_g0, degenerate_points, eval_f, eval_special_g, find_degenerate_points,
    find_judd_points, find_nondegenerate_points, gs_boundary, relative_condition, isotropic_judd_condition, solve_pole1_cubic, ExceptionalKind,
    ExceptionalPoint,
};
pub use gfunction::{eval_g, lowest_levels, scan_regular_spectrum, Branch, GValue, ScanOptions};
pub use model::{derive_params, Classification, DerivedParams, ModelParams, Parity, SpectralPoint};
pub use recurrence::{CoeffSeq, SeedKind};
