//! Coefficients `e_n`, `f_n` of the eigenstate expansion in displaced
//! (extended coherent) oscillator states.
//!
//! The coefficients are kept pre-multiplied by `β^n`, i.e. `ẽ_n = e_n β^n` and
//! `f̃_n = f_n β^n`. In that form the two-term recurrences lose every division
//! by `β`:
//!
//! ```text
//! (n − x) ẽ_n = −(λ+ − β²) ẽ_{n−1} + (Δ/2 − λ−) f̃_n + λ− f̃_{n−1}
//! 2n f̃_n      = −(Δ/2 + λ−) ẽ_{n−1} + λ− ẽ_{n−2}
//!               + (n − 1 + 2β² + 2λ+ − x) f̃_{n−1} − (β² + λ+) f̃_{n−2}
//! ```
//!
//! and the G-functions become plain sums. Both sequences share one positive
//! scale factor `exp(log_scale)`; stored values are rescaled together when
//! they grow past a threshold, which leaves every sign and every ratio intact.

use crate::error::{Error, Result};
use crate::model::DerivedParams;

/// Magnitude above which stored coefficients are rescaled.
pub const DEFAULT_RESCALE_THRESHOLD: f64 = 1e100;
/// Distance from an integer below which the regular seed is refused.
pub const POLE_TOLERANCE: f64 = 1e-9;
/// Smallest displacement for which the expansion basis is usable.
pub const MIN_BETA: f64 = 1e-12;
/// Relative size the quasi-exact tail must stay below.
pub const QUASI_EXACT_TAIL_TOLERANCE: f64 = 1e-10;

/// How a coefficient sequence was started.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedKind {
    /// `f_0 = 1`, negative indices zero.
    Regular,
    /// `e_m = 1`, `f_m = 0`, everything below `m` zero; built at `x = m`.
    Exceptional(usize),
    /// Regular seed at `x = m` with `e_m` fixed so the expansion terminates.
    QuasiExact(usize),
}

/// Scaled coefficient sequences `ẽ_n`, `f̃_n` sharing one scale factor.
///
/// The true scaled coefficient is `stored · exp(log_scale)`; the unscaled
/// `e_n` additionally divides by `β^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffSeq {
    pub e: Vec<f64>,
    pub f: Vec<f64>,
    pub log_scale: f64,
    pub seed_kind: SeedKind,
    pub x: f64,
    pub beta: f64,
}

impl CoeffSeq {
    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    /// Unscaled `(e_k, f_k)` as they appear in the expansion.
    pub fn unscaled(&self, k: usize) -> (f64, f64) {
        let factor = (self.log_scale - k as f64 * self.beta.ln()).exp();
        (self.e[k] * factor, self.f[k] * factor)
    }

    pub fn max_magnitude(&self) -> f64 {
        self.e
            .iter()
            .chain(self.f.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// The constant coefficients of the scaled recurrences at fixed `x`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Recurrence {
    half_delta: f64,
    lambda_minus: f64,
    lambda_plus: f64,
    beta_sq: f64,
    pole_gap: f64,
    x: f64,
}

impl Recurrence {
    pub(crate) fn new(dp: &DerivedParams, delta: f64, x: f64) -> Self {
        Self {
            half_delta: 0.5 * delta,
            lambda_minus: dp.lambda_minus,
            lambda_plus: dp.lambda_plus,
            beta_sq: dp.beta_sq(),
            pole_gap: dp.pole_gap,
            x,
        }
    }

    /// `f̃_k` from the two previous pairs.
    #[inline]
    pub(crate) fn f_next(&self, k: usize, e1: f64, e2: f64, f1: f64, f2: f64) -> f64 {
        let kf = k as f64;
        ((-self.half_delta - self.lambda_minus) * e1
            + self.lambda_minus * e2
            + (kf - 1.0 + 2.0 * self.beta_sq + 2.0 * self.lambda_plus - self.x) * f1
            - (self.beta_sq + self.lambda_plus) * f2)
            / (2.0 * kf)
    }

    /// Numerator of `ẽ_k`; the denominator is `k − x`.
    #[inline]
    pub(crate) fn e_numerator(&self, e1: f64, fk: f64, f1: f64) -> f64 {
        -self.pole_gap * e1 + (self.half_delta - self.lambda_minus) * fk + self.lambda_minus * f1
    }

    #[inline]
    pub(crate) fn e_next(&self, k: usize, e1: f64, fk: f64, f1: f64) -> f64 {
        self.e_numerator(e1, fk, f1) / (k as f64 - self.x)
    }

    /// Quasi-exact choice of `ẽ_m` that terminates the expansion after `m`.
    pub(crate) fn e_quasi_exact(&self, e1: f64, fm: f64, f1: f64) -> f64 {
        (self.lambda_minus * e1 + 2.0 * (self.beta_sq + self.lambda_plus) * fm
            - (self.beta_sq + self.lambda_plus) * f1)
            / (self.half_delta + self.lambda_minus)
    }
}

/// Streaming evaluation of a scaled sequence, one index at a time, with a
/// shared rescale. Consumers that keep partial results must apply the factor
/// returned by [`Stepper::step`] to them.
#[derive(Debug, Clone)]
pub(crate) struct Stepper {
    rec: Recurrence,
    /// Index of the next pair to produce.
    k: usize,
    e1: f64,
    e2: f64,
    f1: f64,
    f2: f64,
    /// Pole index at which `ẽ` is seeded instead of computed.
    seed_at: Option<usize>,
    threshold: f64,
    pub(crate) log_scale: f64,
}

pub(crate) struct Step {
    pub k: usize,
    pub e: f64,
    pub f: f64,
    /// When set, everything produced so far must be divided by this factor.
    pub rescaled_by: Option<f64>,
}

impl Stepper {
    pub(crate) fn regular(rec: Recurrence, threshold: f64) -> Self {
        Self { rec, k: 0, e1: 0.0, e2: 0.0, f1: 0.0, f2: 0.0, seed_at: None, threshold, log_scale: 0.0 }
    }

    /// Sequence with `ẽ_m = 1, f̃_m = 0` and zeros below; starts producing at `m`.
    pub(crate) fn exceptional(rec: Recurrence, m: usize, threshold: f64) -> Self {
        Self { rec, k: m, e1: 0.0, e2: 0.0, f1: 0.0, f2: 0.0, seed_at: Some(m), threshold, log_scale: 0.0 }
    }

    pub(crate) fn step(&mut self) -> Step {
        let k = self.k;
        let (e, f) = match self.seed_at {
            Some(m) if k == m => (1.0, 0.0),
            _ => {
                let f = if k == 0 { 1.0 } else { self.rec.f_next(k, self.e1, self.e2, self.f1, self.f2) };
                let e = self.rec.e_next(k, self.e1, f, self.f1);
                (e, f)
            }
        };
        let (e, f, rescaled_by) = self.push(e, f);
        Step { k, e, f, rescaled_by }
    }

    fn push(&mut self, e: f64, f: f64) -> (f64, f64, Option<f64>) {
        self.e2 = self.e1;
        self.f2 = self.f1;
        self.e1 = e;
        self.f1 = f;
        self.k += 1;
        let mag = e.abs().max(f.abs());
        if mag > self.threshold && mag.is_finite() {
            self.e1 /= mag;
            self.e2 /= mag;
            self.f1 /= mag;
            self.f2 /= mag;
            self.log_scale += mag.ln();
            (self.e1, self.f1, Some(mag))
        } else {
            (e, f, None)
        }
    }
}

fn check_beta(dp: &DerivedParams) -> Result<()> {
    if dp.beta < MIN_BETA {
        return Err(Error::Singular(format!("beta = {:e} is below {MIN_BETA:e}", dp.beta)));
    }
    Ok(())
}

/// Nearest pole line `n ≥ 0` if `x` lies within `tol` of it.
pub(crate) fn nearby_pole(x: f64, tol: f64) -> Option<u64> {
    let n = x.round();
    if n >= 0.0 && (x - n).abs() < tol {
        Some(n as u64)
    } else {
        None
    }
}

fn collect(mut stepper: Stepper, upto: usize, seed_kind: SeedKind, x: f64, beta: f64, start: usize) -> CoeffSeq {
    let mut e = vec![0.0; upto + 1];
    let mut f = vec![0.0; upto + 1];
    for _ in start..=upto {
        let s = stepper.step();
        if let Some(factor) = s.rescaled_by {
            for v in e[..s.k].iter_mut().chain(f[..s.k].iter_mut()) {
                *v /= factor;
            }
        }
        e[s.k] = s.e;
        f[s.k] = s.f;
    }
    CoeffSeq { e, f, log_scale: stepper.log_scale, seed_kind, x, beta }
}

/// Regular-seed coefficients `ẽ_0..ẽ_{n_max}`, `f̃_0..f̃_{n_max}` at `x`.
pub fn regular_coeffs(dp: &DerivedParams, delta: f64, x: f64, n_max: usize) -> Result<CoeffSeq> {
    regular_coeffs_with_threshold(dp, delta, x, n_max, DEFAULT_RESCALE_THRESHOLD)
}

pub fn regular_coeffs_with_threshold(
    dp: &DerivedParams,
    delta: f64,
    x: f64,
    n_max: usize,
    rescale_threshold: f64,
) -> Result<CoeffSeq> {
    check_beta(dp)?;
    if let Some(pole) = nearby_pole(x, POLE_TOLERANCE) {
        if pole as usize <= n_max {
            return Err(Error::PoleProximity { x, pole, tolerance: POLE_TOLERANCE });
        }
    }
    let stepper = Stepper::regular(Recurrence::new(dp, delta, x), rescale_threshold);
    Ok(collect(stepper, n_max, SeedKind::Regular, x, dp.beta, 0))
}

/// Coefficients started at pole line `m`: `ẽ_m = 1`, `f̃_m = 0`, zeros below,
/// and the recurrence at `x = m` above.
pub fn exceptional_seed_coeffs(dp: &DerivedParams, delta: f64, m: usize, n_max: usize) -> Result<CoeffSeq> {
    exceptional_seed_coeffs_with_threshold(dp, delta, m, n_max, DEFAULT_RESCALE_THRESHOLD)
}

pub fn exceptional_seed_coeffs_with_threshold(
    dp: &DerivedParams,
    delta: f64,
    m: usize,
    n_max: usize,
    rescale_threshold: f64,
) -> Result<CoeffSeq> {
    check_beta(dp)?;
    if n_max <= m {
        return Err(Error::InvalidParams(format!("n_max = {n_max} must exceed the pole index {m}")));
    }
    let x = m as f64;
    let stepper = Stepper::exceptional(Recurrence::new(dp, delta, x), m, rescale_threshold);
    Ok(collect(stepper, n_max, SeedKind::Exceptional(m), x, dp.beta, m))
}

/// Regular-seed `f̃_0..=f̃_n` and `ẽ_0..ẽ_{n−1}` exactly on pole line `x = n`.
/// `ẽ_n` is never formed (its denominator vanishes).
pub(crate) fn regular_prefix_at_pole(dp: &DerivedParams, delta: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let rec = Recurrence::new(dp, delta, n as f64);
    let mut e = Vec::with_capacity(n);
    let mut f = Vec::with_capacity(n + 1);
    let at = |v: &Vec<f64>, k: isize| if k < 0 { 0.0 } else { v[k as usize] };
    for k in 0..=n {
        let ki = k as isize;
        let fk = if k == 0 { 1.0 } else { rec.f_next(k, at(&e, ki - 1), at(&e, ki - 2), at(&f, ki - 1), at(&f, ki - 2)) };
        f.push(fk);
        if k < n {
            e.push(rec.e_next(k, at(&e, ki - 1), fk, at(&f, ki - 1)));
        }
    }
    (e, f)
}

/// Result of [`quasi_exact_coeffs`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiExact {
    /// Terminating coefficients `0..=m`.
    pub coeffs: CoeffSeq,
    /// Scaled `f̃_{m+1}, ẽ_{m+1}, f̃_{m+2}, ẽ_{m+2}` produced by the recurrence
    /// after the closure, relative to the largest retained coefficient.
    pub tail: [f64; 4],
}

impl QuasiExact {
    pub fn tail_max(&self) -> f64 {
        self.tail.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Terminating (Juddian) coefficients at a degenerate point on pole line `m`.
pub fn quasi_exact_coeffs(dp: &DerivedParams, delta: f64, m: usize) -> Result<QuasiExact> {
    check_beta(dp)?;
    let rec = Recurrence::new(dp, delta, m as f64);
    if (0.5 * delta + dp.lambda_minus).abs() < 1e-12 {
        return Err(Error::Singular(format!(
            "Δ/2 + λ− = {:e} leaves e_m undetermined",
            0.5 * delta + dp.lambda_minus
        )));
    }
    let (mut e, f) = regular_prefix_at_pole(dp, delta, m);
    let last = |v: &Vec<f64>, back: usize| if v.len() >= back { v[v.len() - back] } else { 0.0 };
    // e has m entries, f has m+1: close with the quasi-exact e_m.
    let em = rec.e_quasi_exact(last(&e, 1), f[m], if m > 0 { f[m - 1] } else { 0.0 });
    e.push(em);

    let mut te = e.clone();
    let mut tf = f.clone();
    let mut tail = [0.0; 4];
    for (slot, k) in [(0usize, m + 1), (2, m + 2)] {
        let fk = rec.f_next(k, last(&te, 1), last(&te, 2), last(&tf, 1), last(&tf, 2));
        tf.push(fk);
        let ek = rec.e_next(k, last(&te, 1), fk, last(&tf, 2));
        te.push(ek);
        tail[slot] = fk;
        tail[slot + 1] = ek;
    }
    let coeffs = CoeffSeq { e, f, log_scale: 0.0, seed_kind: SeedKind::QuasiExact(m), x: m as f64, beta: dp.beta };
    let scale = coeffs.max_magnitude();
    for t in tail.iter_mut() {
        *t /= scale;
    }
    let out = QuasiExact { coeffs, tail };
    if out.tail_max() > QUASI_EXACT_TAIL_TOLERANCE {
        return Err(Error::NotDegenerate(format!(
            "quasi-exact tail {:e} exceeds {QUASI_EXACT_TAIL_TOLERANCE:e} on pole line {m}",
            out.tail_max()
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;

    fn dp(delta: f64, g: f64, r: f64) -> DerivedParams {
        ModelParams::new(delta, g, r).unwrap().derived()
    }

    #[test]
    fn regular_seed_values() {
        let d = dp(1.0, 1.0, 1.0);
        let s = regular_coeffs(&d, 1.0, 0.5, 4).unwrap();
        let (e0, f0) = s.unscaled(0);
        assert_eq!(f0, 1.0);
        assert!((e0 - (-1.0)).abs() < 1e-15);
        let (_, f1) = s.unscaled(1);
        assert!((f1 - 2.0).abs() < 1e-14, "f1 = {f1}");
    }

    #[test]
    fn exceptional_seed_values() {
        let d = dp(1.0, 1.0, 2.0);
        let s = exceptional_seed_coeffs(&d, 1.0, 0, 6).unwrap();
        assert_eq!(s.e[0], 1.0);
        assert_eq!(s.f[0], 0.0);
        // f_1 = (−Δ/2 − λ−) e_0 / (2β) unscaled, with λ− = −1.5 here
        let (_, f1) = s.unscaled(1);
        let expect = (-0.5 - (-1.5)) / (2.0 * 2f64.sqrt());
        assert!((f1 - expect).abs() < 1e-15, "{f1} vs {expect}");

        let s3 = exceptional_seed_coeffs(&d, 1.0, 3, 8).unwrap();
        for k in 0..3 {
            assert_eq!((s3.e[k], s3.f[k]), (0.0, 0.0));
        }
        assert_eq!((s3.e[3], s3.f[3]), (1.0, 0.0));
    }

    #[test]
    fn pole_proximity_rejected() {
        let d = dp(0.5, 0.72169, 0.2);
        assert!(matches!(regular_coeffs(&d, 0.5, 0.0, 10), Err(Error::PoleProximity { pole: 0, .. })));
        assert!(matches!(regular_coeffs(&d, 0.5, 3.0 + 1e-10, 10), Err(Error::PoleProximity { pole: 3, .. })));
        // a pole beyond n_max is irrelevant
        assert!(regular_coeffs(&d, 0.5, 12.0, 10).is_ok());
        assert!(regular_coeffs(&d, 0.5, 3.0 + 1e-8, 10).is_ok());
    }

    #[test]
    fn singular_beta_rejected() {
        let d = dp(0.5, 0.5, 0.0);
        assert!(matches!(regular_coeffs(&d, 0.5, 0.3, 10), Err(Error::Singular(_))));
        assert!(matches!(exceptional_seed_coeffs(&d, 0.5, 1, 10), Err(Error::Singular(_))));
    }

    #[test]
    fn isotropic_reduction() {
        // r = 1: λ− = 0 and λ+ = β², so (m − x) e_m = (Δ/2) f_m
        let d = dp(1.3, 0.7, 1.0);
        let s = regular_coeffs(&d, 1.3, 0.37, 12).unwrap();
        for m in 0..=12 {
            let lhs = (m as f64 - 0.37) * s.e[m];
            assert!((lhs - 0.65 * s.f[m]).abs() <= 1e-14 * s.f[m].abs().max(1e-300), "m={m}");
        }
    }

    #[test]
    fn quasi_exact_at_closed_form_crossing() {
        // g1^(0) = sqrt(Δ/(1 − r²)) for Δ = 0.5, r = 0.2
        let g = (0.5f64 / 0.96).sqrt();
        let d = dp(0.5, g, 0.2);
        let q = quasi_exact_coeffs(&d, 0.5, 0).unwrap();
        assert!(q.tail_max() < 1e-10, "tail {:?}", q.tail);
        assert_eq!(q.coeffs.len(), 1);
    }

    #[test]
    fn quasi_exact_refuses_generic_point() {
        let d = dp(0.5, 0.5, 0.2);
        assert!(matches!(quasi_exact_coeffs(&d, 0.5, 0), Err(Error::NotDegenerate(_))));
    }

    #[test]
    fn quasi_exact_singular_denominator() {
        // Δ/2 + λ− = 0 needs r > 1 with g²(r² − 1)/2 = Δ/2
        let r: f64 = 2.0;
        let g = (1.0f64 / (r * r - 1.0)).sqrt();
        let d = dp(1.0, g, r);
        assert!(matches!(quasi_exact_coeffs(&d, 1.0, 1), Err(Error::Singular(_))));
    }

    #[test]
    fn rescale_triggers_and_keeps_ratios() {
        let d = dp(1.0, 5.0, 2.0);
        let big = regular_coeffs_with_threshold(&d, 1.0, 0.4, 400, 1e100).unwrap();
        let small = regular_coeffs_with_threshold(&d, 1.0, 0.4, 400, 1e10).unwrap();
        assert!(small.log_scale > big.log_scale);
        let shift = (big.log_scale - small.log_scale).exp();
        for k in (0..=400).step_by(7) {
            let a = big.f[k] * shift;
            let b = small.f[k];
            if b != 0.0 && a.is_normal() {
                assert!(((a - b) / b).abs() < 1e-12, "k={k} {a} {b}");
            }
        }
    }
}
