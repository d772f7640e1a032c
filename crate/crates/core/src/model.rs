//! Model parameters of the anisotropic Rabi Hamiltonian
//!
//! ```text
//! H = ½Δσz + a†a + g1 (a†σ− + aσ+) + g2 (a†σ+ + aσ−)
//! ```
//!
//! with the oscillator frequency fixed to 1, `g = g1` and `r = g2 / g1`.
//! Every other module consumes the derived quantities
//! `β = g√r`, `λ± = g²(1 ± r²)/2` and the spectral parameter `x = E + λ+`.

use std::fmt;

use crate::error::{Error, Result};

/// Couplings `(Δ, g, r)` in units of the oscillator frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    delta: f64,
    g: f64,
    r: f64,
}

impl ModelParams {
    /// Validates `Δ > 0`, `g ≥ 0`, `r ≥ 0` (all finite). `r > 1` is accepted
    /// as given.
    pub fn new(delta: f64, g: f64, r: f64) -> Result<Self> {
        if !(delta.is_finite() && g.is_finite() && r.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "non-finite input (delta={delta}, g={g}, r={r})"
            )));
        }
        if delta <= 0.0 {
            return Err(Error::InvalidParams(format!("delta must be > 0, got {delta}")));
        }
        if g < 0.0 {
            return Err(Error::InvalidParams(format!("g must be >= 0, got {g}")));
        }
        if r < 0.0 {
            return Err(Error::InvalidParams(format!("r must be >= 0, got {r}")));
        }
        Ok(Self { delta, g, r })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Rotating-wave coupling `g1`.
    pub fn g(&self) -> f64 {
        self.g
    }

    /// Anisotropy `g2 / g1`.
    pub fn r(&self) -> f64 {
        self.r
    }

    /// Counter-rotating coupling `g2 = r·g`.
    pub fn g2(&self) -> f64 {
        self.r * self.g
    }

    /// Same `Δ` and `r` at a different coupling.
    pub fn with_g(&self, g: f64) -> Result<Self> {
        Self::new(self.delta, g, self.r)
    }

    pub fn derived(&self) -> DerivedParams {
        derive_params(self)
    }
}

/// Quantities derived from `(g, r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    /// Displacement `β = g√r`.
    pub beta: f64,
    /// `λ+ = g²(1 + r²)/2`.
    pub lambda_plus: f64,
    /// `λ− = g²(1 − r²)/2`.
    pub lambda_minus: f64,
    /// `λ+ − β² = g²(1 − r)²/2`, zero exactly at `r = 1`.
    pub pole_gap: f64,
}

impl DerivedParams {
    pub fn beta_sq(&self) -> f64 {
        self.beta * self.beta
    }
}

pub fn derive_params(p: &ModelParams) -> DerivedParams {
    let g2 = p.g * p.g;
    let r = p.r;
    let one_minus_r = 1.0 - r;
    DerivedParams {
        beta: p.g * r.sqrt(),
        lambda_plus: 0.5 * g2 * (1.0 + r * r),
        lambda_minus: 0.5 * g2 * (1.0 - r) * (1.0 + r),
        pole_gap: 0.5 * g2 * one_minus_r * one_minus_r,
    }
}

/// Direction of [`energy_x_map`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapDirection {
    /// `E ↦ x = E + λ+`
    ToX,
    /// `x ↦ E = x − λ+`
    ToEnergy,
}

pub fn energy_x_map(dp: &DerivedParams, value: f64, direction: MapDirection) -> f64 {
    match direction {
        MapDirection::ToX => value + dp.lambda_plus,
        MapDirection::ToEnergy => value - dp.lambda_plus,
    }
}

/// Eigenvalue of `Π = exp(iπN̂)`, `N̂ = a†a + σ+σ−`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn value(self) -> i8 {
        match self {
            Parity::Even => 1,
            Parity::Odd => -1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    /// Parity of the total excitation number `n`.
    pub fn of_excitations(n: usize) -> Self {
        if n.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parity::Even => f.write_str("+1"),
            Parity::Odd => f.write_str("-1"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    Regular,
    DegenerateExceptional,
    NondegenerateExceptional,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Regular => "regular",
            Classification::DegenerateExceptional => "degenerate-exceptional",
            Classification::NondegenerateExceptional => "nondegenerate-exceptional",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One eigenvalue at one coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    pub g: f64,
    pub x: f64,
    pub energy: f64,
    /// `None` for a doubly degenerate level, which has no fixed parity.
    pub parity: Option<Parity>,
    pub level_index: usize,
    pub classification: Classification,
    /// False when the underlying series hit its truncation cap.
    pub converged: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn isotropic_identity_case() {
        let dp = ModelParams::new(1.0, 1.0, 1.0).unwrap().derived();
        assert_eq!(dp.beta, 1.0);
        assert_eq!(dp.lambda_plus, 1.0);
        assert_eq!(dp.lambda_minus, 0.0);
        assert_eq!(dp.pole_gap, 0.0);
    }

    #[test]
    fn zero_coupling() {
        let dp = ModelParams::new(0.5, 0.0, 0.2).unwrap().derived();
        assert_eq!(dp.beta, 0.0);
        assert_eq!(dp.lambda_plus, 0.0);
        assert_eq!(dp.lambda_minus, 0.0);
        assert_eq!(dp.pole_gap, 0.0);
    }

    #[test]
    fn hand_arithmetic_case() {
        let dp = ModelParams::new(0.5, 0.5, 0.2).unwrap().derived();
        assert!(close(dp.beta, 0.223607, 1e-6));
        assert!(close(dp.lambda_plus, 0.13, 1e-15));
        assert!(close(dp.lambda_minus, 0.12, 1e-15));
        assert!(close(dp.pole_gap, 0.08, 1e-15));
    }

    #[test]
    fn rejects_invalid() {
        assert!(ModelParams::new(0.0, 1.0, 0.5).is_err());
        assert!(ModelParams::new(-1.0, 1.0, 0.5).is_err());
        assert!(ModelParams::new(1.0, -0.1, 0.5).is_err());
        assert!(ModelParams::new(1.0, 0.1, -0.5).is_err());
        assert!(ModelParams::new(f64::NAN, 0.1, 0.5).is_err());
        // r > 1 is admitted unchanged
        let p = ModelParams::new(1.0, 0.3, 2.0).unwrap();
        assert_eq!(p.r(), 2.0);
        assert_eq!(p.g(), 0.3);
    }

    #[test]
    fn energy_map_examples() {
        let p = ModelParams::new(1.0, 1.0, 1.0).unwrap().derived();
        assert_eq!(energy_x_map(&p, -1.0, MapDirection::ToX), 0.0);
        let q = ModelParams::new(0.5, 0.5, 0.2).unwrap().derived();
        assert!(close(energy_x_map(&q, 2.0, MapDirection::ToEnergy), 1.87, 1e-15));
    }

    #[test]
    fn parity_display_and_flip() {
        assert_eq!(Parity::Even.to_string(), "+1");
        assert_eq!(Parity::Odd.to_string(), "-1");
        assert_eq!(Parity::Even.flipped(), Parity::Odd);
        assert_eq!(Parity::of_excitations(3), Parity::Odd);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn lambda_identities(g in 0.0f64..3.0, r in 0.0f64..4.0) {
                let dp = ModelParams::new(1.0, g, r).unwrap().derived();
                let scale = 1.0 + g * g * (1.0 + r * r);
                prop_assert!((dp.lambda_plus - dp.lambda_minus - g * g * r * r).abs() <= 1e-14 * scale);
                prop_assert!((dp.lambda_plus + dp.lambda_minus - g * g).abs() <= 1e-14 * scale);
                prop_assert!(dp.beta >= 0.0);
                prop_assert!(dp.lambda_plus >= dp.lambda_minus);
                prop_assert!(dp.lambda_plus + 1e-14 * scale >= dp.beta_sq());
                prop_assert!(dp.pole_gap >= 0.0);
            }

            #[test]
            fn energy_round_trip(e in -1.0e3f64..1.0e3, g in 0.0f64..2.0, r in 0.0f64..3.0) {
                let dp = ModelParams::new(0.7, g, r).unwrap().derived();
                let x = energy_x_map(&dp, e, MapDirection::ToX);
                let back = energy_x_map(&dp, x, MapDirection::ToEnergy);
                prop_assert!((back - e).abs() < 1e-14 * e.abs().max(1.0));
            }
        }

        #[test]
        fn pole_gap_zero_iff_isotropic() {
            for gi in 1..=20 {
                let g = 0.1 * gi as f64;
                for ri in 0..=40 {
                    let r = 0.075 * ri as f64;
                    let dp = ModelParams::new(1.0, g, r).unwrap().derived();
                    if (r - 1.0).abs() < 1e-12 {
                        assert_eq!(dp.pole_gap, 0.0);
                    } else {
                        assert!(dp.pole_gap > 0.0, "g={g} r={r}");
                    }
                }
            }
            let dp = ModelParams::new(1.0, 0.8, 1.0).unwrap().derived();
            assert_eq!(dp.pole_gap, 0.0);
        }

        #[test]
        fn round_trip_random() {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
            let dp = ModelParams::new(0.5, 0.6, 0.3).unwrap().derived();
            for _ in 0..100 {
                let e: f64 = rng.gen_range(-5.0..5.0);
                let back = energy_x_map(
                    &dp,
                    energy_x_map(&dp, e, MapDirection::ToX),
                    MapDirection::ToEnergy,
                );
                assert!((back - e).abs() < 1e-14);
            }
        }
    }
}
