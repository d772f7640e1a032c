//! The exceptional spectrum: eigenvalues sitting exactly on the pole lines
//! `x = n`, where the regular G-functions cannot see them.
//!
//! Degenerate points solve `F_n(g) = Σ_i Γ_i(n) f_i = 0` with the regular
//! coefficients taken at `x = n`. Non-degenerate points are zeros of the
//! special G-functions built from the exceptional seed `e_m = 1, f_m = 0`.
//! At `r = 1` the `Γ` formula is singular and the Judd condition `f_m = 0`
//! takes over.
//!
//! Every point is cross-checked against exact diagonalization and carries the
//! outcome; nothing here assumes a point is a ground-state crossing.

use nalgebra::Matrix3;

use crate::ed::{self, Displacement, EdOptions, StateExpansion};
use crate::error::{Error, Result};
use crate::gfunction::{sum_series, Branch, GValue, R_MIN};
use crate::model::{Classification, DerivedParams, ModelParams, Parity, SpectralPoint};
use crate::recurrence::{self, regular_prefix_at_pole, Recurrence, Stepper, DEFAULT_RESCALE_THRESHOLD};
use crate::roots::scan_roots;

/// `pole_gap` below which the model counts as isotropic.
pub const ISOTROPIC_POLE_GAP: f64 = 1e-14;
/// `|r − 1|` below which results are flagged low-confidence.
pub const NEAR_ISOTROPIC: f64 = 1e-4;
/// Scan density: the window `(0, g_hi]` is sampled with step `g_hi / 400`.
pub const G_SCAN_STEPS: usize = 400;
/// Bisection tolerance in `g`. Zero runs the bisection down to adjacent
/// floating-point numbers, which the quasi-exact tail check needs.
pub const G_TOL: f64 = 0.0;
/// ED energy gap accepted as a degeneracy.
pub const DEGENERACY_GAP: f64 = 1e-6;
/// Both special G-functions below this (relative) at one `g` means the
/// point is degenerate after all.
pub const BOTH_VANISH: f64 = 1e-8;

/// `Γ_i(n)` together with its indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaCoeff {
    pub n: usize,
    pub i: usize,
    pub value: f64,
}

fn require_anisotropic(dp: &DerivedParams) -> Result<()> {
    if dp.pole_gap < ISOTROPIC_POLE_GAP {
        return Err(Error::IsotropicSingular { pole_gap: dp.pole_gap });
    }
    Ok(())
}

/// `Γ_i(n) = (pole_gap/β)^k / k! · [(k/pole_gap − 1)λ− + Δ/2]` with `k = n − i`.
pub fn gamma_coeff(n: usize, i: usize, dp: &DerivedParams, delta: f64) -> Result<GammaCoeff> {
    if i > n {
        return Err(Error::InvalidParams(format!("summand index {i} exceeds pole index {n}")));
    }
    require_anisotropic(dp)?;
    let k = n - i;
    let value = if k == 0 {
        0.5 * delta - dp.lambda_minus
    } else {
        let ratio = dp.pole_gap / dp.beta;
        let power = (1..=k).fold(1.0, |acc, j| acc * ratio / j as f64);
        power * ((k as f64 / dp.pole_gap - 1.0) * dp.lambda_minus + 0.5 * delta)
    };
    Ok(GammaCoeff { n, i, value })
}

/// `β^n F_n`, written without any division by `β` or by `pole_gap`:
/// the `k/pole_gap` factor cancels one power of `pole_gap`. The second value
/// is the same sum with every piece taken in magnitude.
fn scaled_f(n: usize, dp: &DerivedParams, delta: f64) -> (f64, f64) {
    let (_, f) = regular_prefix_at_pole(dp, delta, n);
    let half = 0.5 * delta;
    let mut sum = 0.0;
    let mut magnitude = 0.0;
    // pole_gap^k / k! and pole_gap^(k−1) / (k−1)!
    let mut pk = 1.0;
    let mut pk1 = 0.0;
    for k in 0..=n {
        if k > 0 {
            pk1 = pk;
            pk *= dp.pole_gap / k as f64;
        }
        let weight = pk1 * dp.lambda_minus + pk * (half - dp.lambda_minus);
        sum += weight * f[n - k];
        magnitude += (pk1 * dp.lambda_minus.abs() + pk * (half + dp.lambda_minus.abs())) * f[n - k].abs();
    }
    (sum, magnitude)
}

/// `F_n(g)`: its zeros in `g` are the degenerate exceptional couplings.
pub fn eval_f(n: usize, p: &ModelParams) -> Result<f64> {
    let dp = p.derived();
    require_anisotropic(&dp)?;
    let (scaled, _) = scaled_f(n, &dp, p.delta());
    if n == 0 {
        return Ok(scaled);
    }
    if dp.beta < recurrence::MIN_BETA {
        return Err(Error::Singular(format!("beta = {:e} too small", dp.beta)));
    }
    Ok(scaled / dp.beta.powi(n as i32))
}

/// `F_n` divided by the sum of the magnitudes of its pieces, a scale-free
/// measure of how well a located coupling solves the condition.
pub fn relative_f(n: usize, p: &ModelParams) -> Result<f64> {
    let dp = p.derived();
    require_anisotropic(&dp)?;
    let (s, m) = scaled_f(n, &dp, p.delta());
    Ok(if m > 0.0 { s / m } else { s })
}

/// `g^(0) = √(Δ / (1 − r²))`, the only degenerate point on the lowest pole
/// line; absent for `r ≥ 1`.
pub fn closed_form_g0(delta: f64, r: f64) -> Option<f64> {
    if delta > 0.0 && (0.0..1.0).contains(&r) {
        Some((delta / (1.0 - r * r)).sqrt())
    } else {
        None
    }
}

/// Degenerate condition on the second pole line before clearing the
/// denominator, as a function of `y = g²`.
pub fn pole1_condition(delta: f64, r: f64, y: f64) -> f64 {
    let a = 1.0 - r * r;
    2.0 * y * (1.0 + r * r) - 1.0 + (delta * delta - y * y * a * a) / 4.0 + 2.0 / (delta / (y * a) - 1.0)
}

fn pole1_cubic(delta: f64, r: f64) -> [f64; 4] {
    let a = 1.0 - r * r;
    let s = 1.0 + r * r;
    let d2 = delta * delta - 4.0;
    [
        d2 * delta,
        8.0 * s * delta - d2 * a + 8.0 * a,
        -a * a * delta - 8.0 * a * s,
        a * a * a,
    ]
}

fn horner(c: &[f64], y: f64) -> (f64, f64) {
    let mut v = 0.0;
    let mut d = 0.0;
    for &ck in c.iter().rev() {
        d = d * y + v;
        v = v * y + ck;
    }
    (v, d)
}

/// Real roots of `c[0] + c[1]y + c[2]y² + c[3]y³`, Newton-polished.
fn real_cubic_roots(c: [f64; 4]) -> Vec<f64> {
    let big = c.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if big == 0.0 {
        return Vec::new();
    }
    let degree = (0..4).rev().find(|&k| c[k].abs() > 1e-14 * big).unwrap_or(0);
    let mut roots = match degree {
        0 => Vec::new(),
        1 => vec![-c[0] / c[1]],
        2 => {
            let disc = c[1] * c[1] - 4.0 * c[2] * c[0];
            if disc < 0.0 {
                Vec::new()
            } else {
                let sign = if c[1] >= 0.0 { 1.0 } else { -1.0 };
                let q = -0.5 * (c[1] + sign * disc.sqrt());
                let mut v = vec![q / c[2]];
                if q != 0.0 {
                    v.push(c[0] / q);
                }
                v
            }
        }
        _ => {
            let companion = Matrix3::new(
                0.0, 0.0, -c[0] / c[3],
                1.0, 0.0, -c[1] / c[3],
                0.0, 1.0, -c[2] / c[3],
            );
            companion
                .complex_eigenvalues()
                .iter()
                .filter(|z| z.im.abs() <= 1e-7 * (1.0 + z.re.abs()))
                .map(|z| z.re)
                .collect()
        }
    };
    let coeffs = &c[..=degree];
    for y in roots.iter_mut() {
        for _ in 0..8 {
            let (v, d) = horner(coeffs, *y);
            if d == 0.0 {
                break;
            }
            let step = v / d;
            *y -= step;
            if step.abs() <= 1e-16 * y.abs().max(1.0) {
                break;
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));
    roots
}

/// Couplings of the degenerate points on the second pole line, from the
/// cubic in `y = g²` obtained by clearing the denominator. Roots where the
/// cleared factor `Δ − y(1 − r²)` vanishes are spurious and dropped.
pub fn solve_pole1_cubic(delta: f64, r: f64) -> Vec<f64> {
    if (r - 1.0).abs() < 1e-12 {
        return Vec::new();
    }
    let a = 1.0 - r * r;
    let mut g: Vec<f64> = real_cubic_roots(pole1_cubic(delta, r))
        .into_iter()
        .filter(|&y| y > 0.0)
        .filter(|&y| (delta - y * a).abs() > 1e-9 * delta.max(1.0))
        .map(f64::sqrt)
        .collect();
    g.sort_by(f64::total_cmp);
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExceptionalKind {
    Degenerate,
    Nondegenerate,
}

impl ExceptionalKind {
    pub fn classification(self) -> Classification {
        match self {
            ExceptionalKind::Degenerate => Classification::DegenerateExceptional,
            ExceptionalKind::Nondegenerate => Classification::NondegenerateExceptional,
        }
    }
}

/// A located exceptional eigenvalue and what ED says about it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExceptionalPoint {
    /// Pole index; the energy parameter is `x = n`.
    pub n: usize,
    pub g: f64,
    pub delta: f64,
    pub r: f64,
    pub kind: ExceptionalKind,
    /// `None` for a degenerate pair.
    pub parity: Option<Parity>,
    /// `n − λ+`.
    pub energy: f64,
    /// Largest degenerate zero in the window with the ED ground pair
    /// degenerate there.
    pub is_gs_crossing: bool,
    /// Defining function at the located `g`, relative to its scale.
    pub residual: f64,
    /// Distance of the nearest ED level from `energy`.
    pub ed_offset: f64,
    /// Gap of the two ED levels closest to `energy`.
    pub ed_gap: f64,
    /// `E1 − E0` from ED at this coupling.
    pub ed_ground_gap: f64,
    pub ed_converged: bool,
    /// ED agrees: a degenerate pair (or, for non-degenerate points, a level
    /// of the right parity) sits at `energy`.
    pub confirmed: bool,
    /// Evaluated within `1e−4` of the isotropic point.
    pub low_confidence: bool,
}

impl ExceptionalPoint {
    pub fn x(&self) -> f64 {
        self.n as f64
    }

    pub fn params(&self) -> ModelParams {
        ModelParams::new(self.delta, self.g, self.r).expect("validated on construction")
    }

    pub fn to_spectral_point(&self, level_index: usize) -> SpectralPoint {
        SpectralPoint {
            g: self.g,
            x: self.x(),
            energy: self.energy,
            parity: self.parity,
            level_index,
            classification: self.kind.classification(),
            converged: self.ed_converged,
        }
    }
}

fn ed_levels_for(n: usize) -> usize {
    2 * n + 8
}

struct EdCheck {
    offset: f64,
    gap: f64,
    ground_gap: f64,
    ground_offset: f64,
    converged: bool,
    parity_match: Option<Parity>,
}

fn ed_check(p: &ModelParams, energy: f64, n: usize) -> EdCheck {
    let res = ed::diagonalize_with(p, &EdOptions::new(p, ed_levels_for(n)));
    let nearest = res.nearest(energy);
    let (gap, ground_gap) = match res.pair_near(energy) {
        Some((_, _, gap)) => (gap, res.energies[1] - res.energies[0]),
        None => (f64::INFINITY, f64::INFINITY),
    };
    EdCheck {
        offset: (res.energies[nearest] - energy).abs(),
        gap,
        ground_gap,
        ground_offset: (res.energies[0] - energy).abs(),
        converged: res.converged,
        parity_match: Some(res.parities[nearest]),
    }
}

fn g_nodes_segments(lo: f64, hi: f64) -> usize {
    let step = hi / G_SCAN_STEPS as f64;
    (((hi - lo) / step).ceil() as usize).max(1)
}

fn check_window(window: (f64, f64)) -> Result<(f64, f64)> {
    let (lo, hi) = window;
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidParams(format!("bad coupling window ({lo}, {hi}]")));
    }
    // the open end at 0 is sampled from its first interior node
    let lo = if lo == 0.0 { hi / G_SCAN_STEPS as f64 } else { lo };
    Ok((lo, hi))
}

fn degenerate_point(n: usize, p: &ModelParams, residual: f64, largest: bool) -> ExceptionalPoint {
    let energy = n as f64 - p.derived().lambda_plus;
    let check = ed_check(p, energy, n);
    let confirmed = check.gap < DEGENERACY_GAP && check.offset < DEGENERACY_GAP;
    let is_gs_crossing = largest && check.ground_gap < DEGENERACY_GAP && check.ground_offset < DEGENERACY_GAP;
    ExceptionalPoint {
        n,
        g: p.g(),
        delta: p.delta(),
        r: p.r(),
        kind: ExceptionalKind::Degenerate,
        parity: None,
        energy,
        is_gs_crossing,
        residual,
        ed_offset: check.offset,
        ed_gap: check.gap,
        ed_ground_gap: check.ground_gap,
        ed_converged: check.converged,
        confirmed,
        low_confidence: (p.r() - 1.0).abs() < NEAR_ISOTROPIC,
    }
}

/// Zeros of `F_n` in `g_window` from a dense scan plus bisection, without
/// any ED check.
pub fn degenerate_zeros(n: usize, p_base: &ModelParams, g_window: (f64, f64)) -> Result<Vec<f64>> {
    let (lo, hi) = check_window(g_window)?;
    let delta = p_base.delta();
    let r = p_base.r();
    if (r - 1.0).abs() < 1e-12 {
        return Ok(scan_roots(lo, hi, g_nodes_segments(lo, hi), |g| isotropic_judd_scaled(n, delta, g), G_TOL));
    }
    require_anisotropic(&ModelParams::new(delta, 1.0, r)?.derived())?;
    let f = |g: f64| match ModelParams::new(delta, g, r) {
        Ok(p) => scaled_f(n, &p.derived(), delta).0,
        Err(_) => f64::NAN,
    };
    Ok(scan_roots(lo, hi, g_nodes_segments(lo, hi), f, G_TOL))
}

/// All zeros of `F_n` in `g_window` (a dense scan plus bisection), each
/// checked against ED.
pub fn find_degenerate_points(n: usize, p_base: &ModelParams, g_window: (f64, f64)) -> Result<Vec<ExceptionalPoint>> {
    require_anisotropic(&ModelParams::new(p_base.delta(), 1.0, p_base.r())?.derived())?;
    let zeros = degenerate_zeros(n, p_base, g_window)?;
    finish_degenerate(n, p_base, zeros, |p| relative_f(n, p).unwrap_or(f64::NAN))
}

/// The largest degenerate point on pole line `n` in `g_window`, the
/// candidate ground-state crossing; `is_gs_crossing` reports what ED says.
pub fn gs_boundary(n: usize, p_base: &ModelParams, g_window: (f64, f64)) -> Result<Option<ExceptionalPoint>> {
    let Some(&g) = degenerate_zeros(n, p_base, g_window)?.last() else {
        return Ok(None);
    };
    let p = p_base.with_g(g)?;
    let residual = relative_condition(n, &p)?;
    Ok(Some(degenerate_point(n, &p, residual, true)))
}

fn finish_degenerate<R>(n: usize, p_base: &ModelParams, zeros: Vec<f64>, residual: R) -> Result<Vec<ExceptionalPoint>>
where
    R: Fn(&ModelParams) -> f64,
{
    let count = zeros.len();
    zeros
        .into_iter()
        .enumerate()
        .map(|(k, g)| {
            let p = p_base.with_g(g)?;
            Ok(degenerate_point(n, &p, residual(&p), k + 1 == count))
        })
        .collect()
}

/// `f_m` at `x = m` in the isotropic model (`r = 1`, `β = g`); its zeros in
/// `g` are the Judd points.
pub fn isotropic_judd_condition(m: usize, delta: f64, g: f64) -> f64 {
    let scaled = isotropic_judd_scaled(m, delta, g);
    if m == 0 || g == 0.0 {
        scaled
    } else {
        scaled / g.powi(m as i32)
    }
}

fn isotropic_judd_scaled(m: usize, delta: f64, g: f64) -> f64 {
    let dp = DerivedParams { beta: g, lambda_plus: g * g, lambda_minus: 0.0, pole_gap: 0.0 };
    regular_prefix_at_pole(&dp, delta, m).1[m]
}

fn judd_relative(m: usize, p: &ModelParams) -> f64 {
    let f = regular_prefix_at_pole(&p.derived(), p.delta(), m).1;
    let scale = f.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    f[m] / scale
}

/// Judd points on pole line `m` for `r = 1`.
pub fn find_judd_points(m: usize, delta: f64, g_window: (f64, f64)) -> Result<Vec<ExceptionalPoint>> {
    let p_base = ModelParams::new(delta, 1.0, 1.0)?;
    let zeros = degenerate_zeros(m, &p_base, g_window)?;
    finish_degenerate(m, &p_base, zeros, |p| judd_relative(m, p))
}

/// The degeneracy condition on pole line `n` relative to its own scale:
/// `F_n` in general, the Judd condition at `r = 1`.
pub fn relative_condition(n: usize, p: &ModelParams) -> Result<f64> {
    if (p.r() - 1.0).abs() < 1e-12 {
        Ok(judd_relative(n, p))
    } else {
        relative_f(n, p)
    }
}

/// Degenerate points on pole line `n`, dispatching to the Judd condition at `r = 1`.
pub fn degenerate_points(n: usize, p_base: &ModelParams, g_window: (f64, f64)) -> Result<Vec<ExceptionalPoint>> {
    match find_degenerate_points(n, p_base, g_window) {
        Err(Error::IsotropicSingular { .. }) => find_judd_points(n, p_base.delta(), g_window),
        other => other,
    }
}

/// `(G_m^+, G_m^−)` from the exceptional seed, normalized so that the seed
/// contributes `±1` (up to the shared factor `exp(log_scale)`).
pub fn eval_special_g(m: usize, p: &ModelParams) -> Result<GValue> {
    if p.r() < R_MIN {
        return Err(Error::JaynesCummingsLimit { r: p.r(), r_min: R_MIN });
    }
    let dp = p.derived();
    if dp.beta < recurrence::MIN_BETA {
        return Err(Error::Singular(format!("beta = {:e} too small", dp.beta)));
    }
    let stepper = Stepper::exceptional(Recurrence::new(&dp, p.delta(), m as f64), m, DEFAULT_RESCALE_THRESHOLD);
    Ok(sum_series(stepper, m))
}

/// Zeros of `G_m^+` and `G_m^−` in `g_window`, each tagged with the parity
/// of the branch that vanished. A point where both vanish is reported as
/// degenerate.
pub fn find_nondegenerate_points(m: usize, p_base: &ModelParams, g_window: (f64, f64)) -> Result<Vec<ExceptionalPoint>> {
    if p_base.r() < R_MIN {
        return Err(Error::JaynesCummingsLimit { r: p_base.r(), r_min: R_MIN });
    }
    let (lo, hi) = check_window(g_window)?;
    let delta = p_base.delta();
    let r = p_base.r();
    let special = |g: f64| ModelParams::new(delta, g, r).ok().and_then(|p| eval_special_g(m, &p).ok());
    let segments = g_nodes_segments(lo, hi);
    let samples: Vec<Option<GValue>> = crate::roots::linspace(lo, hi, segments).iter().map(|&g| special(g)).collect();
    let nodes = crate::roots::linspace(lo, hi, segments);

    let mut points = Vec::new();
    for branch in Branch::BOTH {
        for i in 0..segments {
            let (Some(a), Some(b)) = (samples[i], samples[i + 1]) else { continue };
            let (va, vb) = (a.get(branch), b.get(branch));
            if va == 0.0 || va.signum() == vb.signum() {
                continue;
            }
            let g = crate::roots::bisect(
                nodes[i],
                nodes[i + 1],
                |g| special(g).map_or(f64::NAN, |v| v.get(branch)),
                G_TOL,
            );
            let p = p_base.with_g(g)?;
            let value = eval_special_g(m, &p)?;
            let energy = m as f64 - p.derived().lambda_plus;
            let other = value.relative(branch.other()).abs();
            if other < BOTH_VANISH {
                log::warn!("both special G-functions vanish on pole line {m} at g = {g}; reporting a degenerate point");
                points.push(degenerate_point(m, &p, value.relative(branch), false));
                continue;
            }
            let parity = branch.parity();
            let check = ed_check(&p, energy, m);
            points.push(ExceptionalPoint {
                n: m,
                g,
                delta,
                r,
                kind: ExceptionalKind::Nondegenerate,
                parity: Some(parity),
                energy,
                is_gs_crossing: false,
                residual: value.relative(branch),
                ed_offset: check.offset,
                ed_gap: check.gap,
                ed_ground_gap: check.ground_gap,
                ed_converged: check.converged && value.converged,
                confirmed: check.offset < DEGENERACY_GAP && check.parity_match == Some(parity),
                low_confidence: (r - 1.0).abs() < NEAR_ISOTROPIC,
            });
        }
    }
    points.sort_by(|a, b| a.g.total_cmp(&b.g));
    Ok(points)
}

/// The degenerate eigenstate pair at a degenerate point on pole line `m`:
/// the terminating expansion `|A+⟩_m` and its parity image `|A−⟩_m`.
pub fn build_quasi_exact_pair(m: usize, p: &ModelParams) -> Result<(StateExpansion, StateExpansion)> {
    let dp = p.derived();
    let qe = recurrence::quasi_exact_coeffs(&dp, p.delta(), m)?;
    let mut upper = Vec::with_capacity(m + 1);
    let mut lower = Vec::with_capacity(m + 1);
    let mut factorial = 1.0_f64;
    for k in 0..=m {
        if k > 0 {
            factorial *= k as f64;
        }
        let (e, f) = qe.coeffs.unscaled(k);
        upper.push(factorial.sqrt() * e);
        lower.push(factorial.sqrt() * f);
    }
    let sign = |k: usize| if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let plus = StateExpansion { displacement: Displacement::Plus, upper: upper.clone(), lower: lower.clone(), params: *p };
    let minus = StateExpansion {
        displacement: Displacement::Minus,
        upper: lower.iter().enumerate().map(|(k, v)| sign(k) * v).collect(),
        lower: upper.iter().enumerate().map(|(k, v)| sign(k) * v).collect(),
        params: *p,
    };

    let n_trunc = ed::suggested_trunc(p).max(m + 60);
    let a = ed::ecs_to_fock(&plus, n_trunc)?;
    let b = ed::ecs_to_fock(&minus, n_trunc)?;
    let smin = ed::gram_min_singular(&[a, b]);
    if smin <= 1e-8 {
        return Err(Error::Singular(format!("quasi-exact pair is linearly dependent (σ_min = {smin:e})")));
    }
    Ok((plus, minus))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_diagonal_term() {
        let dp = ModelParams::new(0.8, 0.6, 0.3).unwrap().derived();
        let g = gamma_coeff(3, 3, &dp, 0.8).unwrap();
        assert_eq!(g.value, 0.4 - dp.lambda_minus);
        assert!(gamma_coeff(1, 2, &dp, 0.8).is_err());
        let iso = ModelParams::new(0.8, 0.6, 1.0).unwrap().derived();
        assert!(matches!(gamma_coeff(1, 0, &iso, 0.8), Err(Error::IsotropicSingular { .. })));
    }

    #[test]
    fn gamma_matches_defining_formula() {
        let p = ModelParams::new(1.3, 0.9, 0.45).unwrap();
        let dp = p.derived();
        let direct = (dp.lambda_plus / dp.beta - dp.beta) * ((1.0 / (dp.lambda_plus - dp.beta_sq()) - 1.0) * dp.lambda_minus + 0.65);
        let v = gamma_coeff(1, 0, &dp, 1.3).unwrap().value;
        assert!((v - direct).abs() < 1e-12 * direct.abs().max(1.0), "{v} vs {direct}");
    }

    #[test]
    fn f0_identity() {
        for &(d, g, r) in &[(0.5, 0.3, 0.2), (2.0, 1.1, 2.0), (1.0, 0.7, 0.9)] {
            let p = ModelParams::new(d, g, r).unwrap();
            assert_eq!(eval_f(0, &p).unwrap(), 0.5 * d - p.derived().lambda_minus);
        }
    }

    #[test]
    fn f_agrees_with_gamma_sum() {
        let p = ModelParams::new(1.7, 0.8, 0.35).unwrap();
        let dp = p.derived();
        let (_, f) = regular_prefix_at_pole(&dp, 1.7, 2);
        let direct: f64 = (0..=2)
            .map(|i| gamma_coeff(2, i, &dp, 1.7).unwrap().value * f[i] / dp.beta.powi(i as i32))
            .sum();
        let v = eval_f(2, &p).unwrap();
        assert!((v - direct).abs() < 1e-12 * direct.abs().max(1.0), "{v} vs {direct}");
    }

    #[test]
    fn closed_form_cases() {
        assert!((closed_form_g0(0.5, 0.2).unwrap() - 0.72169).abs() < 1e-5);
        assert!((closed_form_g0(2.0, 0.2).unwrap() - 1.44338).abs() < 1e-5);
        assert_eq!(closed_form_g0(1.0, 2.0), None);
        assert_eq!(closed_form_g0(1.0, 1.0), None);
        assert_eq!(closed_form_g0(1.0, 0.0), Some(1.0));
    }

    #[test]
    fn cubic_solver_basics() {
        // (y − 1)(y − 2)(y − 3)
        let r = real_cubic_roots([-6.0, 11.0, -6.0, 1.0]);
        assert_eq!(r.len(), 3);
        for (a, b) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        // y³ + y: one real root
        assert_eq!(real_cubic_roots([0.0, 1.0, 0.0, 1.0]).len(), 1);
        // leading coefficient vanishes: 2y − 4
        assert_eq!(real_cubic_roots([-4.0, 2.0, 0.0, 0.0]), vec![2.0]);
    }

    #[test]
    fn cubic_roots_solve_uncleared_condition() {
        for &(d, r) in &[(2.0, 0.2), (2.0, 2.0), (1.3, 0.7), (0.4, 1.6)] {
            for g in solve_pole1_cubic(d, r) {
                let y = g * g;
                let res = pole1_condition(d, r, y);
                let scale = 1.0 + y * y * (1.0 - r * r).powi(2);
                assert!(res.abs() < 1e-9 * scale, "Δ={d} r={r} g={g} res={res}");
            }
        }
        assert!(!solve_pole1_cubic(2.0, 2.0).is_empty());
    }

    #[test]
    fn lowest_line_crossing() {
        let p = ModelParams::new(0.5, 1.0, 0.2).unwrap();
        let pts = find_degenerate_points(0, &p, (0.0, 3.0)).unwrap();
        assert_eq!(pts.len(), 1);
        assert!((pts[0].g - closed_form_g0(0.5, 0.2).unwrap()).abs() < 1e-10);
        assert!(pts[0].confirmed);
        assert!(pts[0].is_gs_crossing);
        let none = find_degenerate_points(0, &ModelParams::new(1.0, 1.0, 2.0).unwrap(), (0.0, 3.0)).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn isotropic_routing() {
        let p = ModelParams::new(1.0, 1.0, 1.0).unwrap();
        assert!(matches!(eval_f(1, &p), Err(Error::IsotropicSingular { .. })));
        assert!(matches!(find_degenerate_points(1, &p, (0.0, 2.0)), Err(Error::IsotropicSingular { .. })));
        assert!(degenerate_points(1, &p, (0.0, 2.0)).is_ok());
    }

    #[test]
    fn judd_lowest_line_never_vanishes() {
        for g in [0.1, 0.5, 1.0, 2.0] {
            assert_eq!(isotropic_judd_condition(0, 1.0, g), 1.0);
        }
        assert!(find_judd_points(0, 1.0, (0.0, 3.0)).unwrap().is_empty());
    }

    #[test]
    fn special_g_small_coupling_limit() {
        // the f̃ terms keep a finite limit as β → 0 (f̃_1 → −Δ/4), so the
        // values settle near, not at, the seed's ±1 while keeping its signs
        let at = |g: f64| eval_special_g(0, &ModelParams::new(1.0, g, 2.0).unwrap()).unwrap();
        let (a, b) = (at(1e-5), at(1e-3));
        assert!(a.g_plus > 0.0 && a.g_minus < 0.0);
        assert!((a.g_plus - b.g_plus).abs() < 1e-5 && (a.g_minus - b.g_minus).abs() < 1e-5);
        assert!((a.g_plus - 0.5393526).abs() < 1e-6, "{}", a.g_plus);
        assert!((a.g_minus + 1.1803406).abs() < 1e-6, "{}", a.g_minus);
    }
}
