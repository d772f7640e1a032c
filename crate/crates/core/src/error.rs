use thiserror::Error;

/// Errors raised by the spectral solvers and the diagonalization oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("spectral parameter x = {x} lies within {tolerance:e} of pole line n = {pole}")]
    PoleProximity { x: f64, pole: u64, tolerance: f64 },

    #[error("singular recurrence: {0}")]
    Singular(String),

    /// r is below the smallest anisotropy the G-function path accepts; the
    /// Jaynes-Cummings closed form covers this region.
    #[error("anisotropy r = {r} is below {r_min}; use the Jaynes-Cummings solver")]
    JaynesCummingsLimit { r: f64, r_min: f64 },

    /// The Γ-coefficient form of the degeneracy condition divides by
    /// λ+ − β², which vanishes at r = 1.
    #[error("degeneracy condition is singular at r = 1 (pole gap {pole_gap:e}); use the isotropic Judd condition")]
    IsotropicSingular { pole_gap: f64 },

    #[error("parameters are not at a degenerate exceptional point: {0}")]
    NotDegenerate(String),

    #[error("Fock truncation {n_trunc} drops a tail of norm {lost:e}")]
    TruncationLoss { n_trunc: usize, lost: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
