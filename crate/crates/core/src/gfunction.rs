//! Parity G-functions and the regular spectrum.
//!
//! `G±(x) = Σ (f̃_n ± ẽ_n)` over the scaled regular-seed coefficients. A zero
//! of one of them away from the pole lines `x = n` is a non-degenerate
//! eigenvalue `E = x − λ+`. Evaluated against exact diagonalization, a zero
//! of `G−` is an even (`Π = +1`) state and a zero of `G+` an odd one; see
//! [`Branch::parity`].

use crate::error::{Error, Result};
use crate::model::{Classification, ModelParams, Parity, SpectralPoint};
use crate::recurrence::{self, nearby_pole, Recurrence, Stepper, DEFAULT_RESCALE_THRESHOLD};
use crate::roots::{bisect, linspace};

/// Smallest anisotropy handled by the G-function path.
pub const R_MIN: f64 = 1e-3;
/// Couplings below this use the decoupled spectrum `n ± Δ/2`.
pub const G_DECOUPLED: f64 = 1e-6;
/// First truncation tried by the series evaluation.
pub const N_START: usize = 64;
/// Hard cap on the truncation order.
pub const N_CAP: usize = 2048;
/// Relative size below which a term counts as negligible.
pub const TERM_TOLERANCE: f64 = 1e-12;
/// Number of trailing terms that must all be negligible.
const TRAILING_TERMS: usize = 5;

/// Which of the two G-functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::Plus, Branch::Minus];

    /// Parity of the eigenstate whose energy is a zero of this branch.
    ///
    /// `G−` vanishes when `Σ ẽ_n = Σ f̃_n`, i.e. when the state equals its own
    /// parity image with proportionality constant `+1`.
    pub fn parity(self) -> Parity {
        match self {
            Branch::Plus => Parity::Odd,
            Branch::Minus => Parity::Even,
        }
    }

    pub fn for_parity(parity: Parity) -> Self {
        match parity {
            Parity::Even => Branch::Minus,
            Parity::Odd => Branch::Plus,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Branch::Plus => Branch::Minus,
            Branch::Minus => Branch::Plus,
        }
    }
}

/// `(G+, G−)` at one point, up to the positive factor `exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GValue {
    pub g_plus: f64,
    pub g_minus: f64,
    pub log_scale: f64,
    /// Largest partial-sum magnitude seen while summing; the natural unit
    /// for "small" values of either branch.
    pub scale: f64,
    pub n_used: usize,
    pub converged: bool,
    /// `Σ f̃_n` and `Σ ẽ_n`.
    pub sum_f: f64,
    pub sum_e: f64,
}

impl GValue {
    pub fn get(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Plus => self.g_plus,
            Branch::Minus => self.g_minus,
        }
    }

    /// Branch value divided by [`GValue::scale`].
    pub fn relative(&self, branch: Branch) -> f64 {
        if self.scale > 0.0 {
            self.get(branch) / self.scale
        } else {
            self.get(branch)
        }
    }
}

/// Sums a coefficient stream until the trailing terms are negligible.
pub(crate) fn sum_series(mut stepper: Stepper, first_index: usize) -> GValue {
    let mut sum_f = 0.0_f64;
    let mut sum_e = 0.0_f64;
    let mut scale = 0.0_f64;
    let mut trailing = [f64::INFINITY; TRAILING_TERMS];
    let mut checkpoint = N_START.max(first_index + TRAILING_TERMS + 1);
    loop {
        let s = stepper.step();
        if let Some(factor) = s.rescaled_by {
            sum_f /= factor;
            sum_e /= factor;
            scale /= factor;
            for t in trailing.iter_mut() {
                *t /= factor;
            }
        }
        sum_f += s.f;
        sum_e += s.e;
        scale = scale.max((sum_f + sum_e).abs()).max((sum_f - sum_e).abs());
        trailing[s.k % TRAILING_TERMS] = s.f.abs() + s.e.abs();
        let produced = s.k + 1;

        if produced >= checkpoint {
            let negligible = trailing.iter().all(|&t| t < TERM_TOLERANCE * scale);
            if negligible || produced >= N_CAP || !scale.is_finite() {
                let converged = negligible && scale.is_finite();
                return GValue {
                    g_plus: sum_f + sum_e,
                    g_minus: sum_f - sum_e,
                    log_scale: stepper.log_scale,
                    scale,
                    n_used: produced,
                    converged,
                    sum_f,
                    sum_e,
                };
            }
            checkpoint = (checkpoint * 2).min(N_CAP);
        }
    }
}

fn check_domain(p: &ModelParams) -> Result<()> {
    if p.r() < R_MIN {
        return Err(Error::JaynesCummingsLimit { r: p.r(), r_min: R_MIN });
    }
    if p.derived().beta < recurrence::MIN_BETA {
        return Err(Error::Singular(format!("beta = {:e} too small", p.derived().beta)));
    }
    Ok(())
}

/// `G±(x)` from the regular seed.
pub fn eval_g(p: &ModelParams, x: f64) -> Result<GValue> {
    check_domain(p)?;
    if let Some(pole) = nearby_pole(x, recurrence::POLE_TOLERANCE) {
        return Err(Error::PoleProximity { x, pole, tolerance: recurrence::POLE_TOLERANCE });
    }
    let dp = p.derived();
    let stepper = Stepper::regular(Recurrence::new(&dp, p.delta(), x), DEFAULT_RESCALE_THRESHOLD);
    Ok(sum_series(stepper, 0))
}

/// A sign change of one branch between two sample points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootBracket {
    pub x_lo: f64,
    pub x_hi: f64,
    pub parity: Parity,
    pub sign_lo: f64,
    pub sign_hi: f64,
}

/// Knobs of [`scan_regular_spectrum`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Uniform segments per unit interval of `x`; at least 64.
    pub min_segments_per_unit: usize,
    /// A sampled local minimum of `|G|` whose parabolic extrapolation falls
    /// below this fraction of the smallest sample is refined.
    pub dip_factor: f64,
    /// Half-width of the excluded neighbourhood of each pole line.
    pub pole_guard: f64,
    /// Bisection tolerance in `x`.
    pub x_tol: f64,
    /// How many times a dip may be subdivided (4× each time).
    pub max_dip_depth: u32,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { min_segments_per_unit: 64, dip_factor: 0.25, pole_guard: 1e-6, x_tol: 1e-12, max_dip_depth: 4 }
    }
}

/// Default scan window `[−max(1, Δ), levels + 1]`.
pub fn default_window(delta: f64, levels: usize) -> (f64, f64) {
    (-(delta.max(1.0)), levels as f64 + 1.0)
}

fn decoupled_spectrum(p: &ModelParams, x_lo: f64, x_hi: f64) -> Vec<SpectralPoint> {
    let dp = p.derived();
    let half = 0.5 * p.delta();
    let mut pts = Vec::new();
    let n_hi = (x_hi - dp.lambda_plus + half).ceil().max(0.0) as usize + 1;
    for n in 0..=n_hi {
        // (n, down) has N̂ = n, (n, up) has N̂ = n + 1
        for (energy, parity) in [
            (n as f64 - half, Parity::of_excitations(n)),
            (n as f64 + half, Parity::of_excitations(n + 1)),
        ] {
            let x = energy + dp.lambda_plus;
            if x >= x_lo && x <= x_hi {
                pts.push(SpectralPoint {
                    g: p.g(),
                    x,
                    energy,
                    parity: Some(parity),
                    level_index: 0,
                    classification: Classification::Regular,
                    converged: true,
                });
            }
        }
    }
    finish(pts)
}

fn finish(mut pts: Vec<SpectralPoint>) -> Vec<SpectralPoint> {
    pts.sort_by(|a, b| a.x.total_cmp(&b.x));
    for (i, p) in pts.iter_mut().enumerate() {
        p.level_index = i;
    }
    pts
}

/// Pieces of `[x_lo, x_hi]` between consecutive pole lines, shrunk by the guard.
fn pole_free_pieces(x_lo: f64, x_hi: f64, guard: f64) -> Vec<(f64, f64)> {
    let mut cuts = vec![x_lo];
    let first = x_lo.ceil().max(0.0) as i64;
    let mut n = first;
    while (n as f64) < x_hi {
        if (n as f64) > x_lo {
            cuts.push(n as f64);
        }
        n += 1;
    }
    cuts.push(x_hi);
    let is_pole = |v: f64| v >= 0.0 && v.fract() == 0.0;
    cuts.windows(2)
        .filter_map(|w| {
            let a = if is_pole(w[0]) { w[0] + guard } else { w[0] };
            let b = if is_pole(w[1]) { w[1] - guard } else { w[1] };
            (b > a).then_some((a, b))
        })
        .collect()
}

struct Sampler<'a> {
    p: &'a ModelParams,
    opts: &'a ScanOptions,
}

impl Sampler<'_> {
    fn value(&self, x: f64) -> Option<GValue> {
        eval_g(self.p, x).ok().filter(|v| v.g_plus.is_finite() && v.g_minus.is_finite())
    }

    /// Brackets of sign changes of both branches over the nodes, refining
    /// suspicious dips recursively.
    fn brackets(&self, nodes: &[f64], values: &[Option<GValue>], depth: u32, out: &mut Vec<RootBracket>) {
        for branch in Branch::BOTH {
            let v: Vec<Option<f64>> = values.iter().map(|g| g.map(|g| g.get(branch))).collect();
            for i in 0..nodes.len() - 1 {
                if let (Some(a), Some(b)) = (v[i], v[i + 1]) {
                    if a != 0.0 && b != 0.0 && a.signum() != b.signum() {
                        out.push(RootBracket {
                            x_lo: nodes[i],
                            x_hi: nodes[i + 1],
                            parity: branch.parity(),
                            sign_lo: a.signum(),
                            sign_hi: b.signum(),
                        });
                    } else if a == 0.0 {
                        out.push(RootBracket {
                            x_lo: nodes[i],
                            x_hi: nodes[i],
                            parity: branch.parity(),
                            sign_lo: 0.0,
                            sign_hi: 0.0,
                        });
                    }
                }
            }
            if depth >= self.opts.max_dip_depth {
                continue;
            }
            for i in 1..nodes.len().saturating_sub(1) {
                let (Some(l), Some(c), Some(r)) = (v[i - 1], v[i], v[i + 1]) else { continue };
                if l == 0.0 || c == 0.0 || r == 0.0 || l.signum() != c.signum() || c.signum() != r.signum() {
                    continue;
                }
                if self.is_dip(nodes[i - 1], nodes[i], nodes[i + 1], l.abs(), c.abs(), r.abs()) {
                    let sub = linspace(nodes[i - 1], nodes[i + 1], 8);
                    let sub_values: Vec<Option<GValue>> = sub.iter().map(|&x| self.value(x)).collect();
                    let mut found = Vec::new();
                    self.brackets(&sub, &sub_values, depth + 1, &mut found);
                    out.extend(found.into_iter().filter(|b| b.parity == branch.parity()));
                }
            }
        }
    }

    fn is_dip(&self, x0: f64, x1: f64, x2: f64, l: f64, c: f64, r: f64) -> bool {
        // parabola through the three magnitudes
        let h1 = x1 - x0;
        let h2 = x2 - x1;
        let d1 = (c - l) / h1;
        let d2 = (r - c) / h2;
        let curv = (d2 - d1) / (x2 - x0);
        if curv <= 0.0 {
            return false;
        }
        let slope_at_mid = d1 + curv * h1;
        let t = -slope_at_mid / (2.0 * curv);
        if t < -h1 || t > h2 {
            return false;
        }
        let vmin = c + slope_at_mid * t + curv * t * t;
        vmin < self.opts.dip_factor * l.min(c).min(r)
    }
}

/// Regular eigenvalues with `x` in `[x_lo, x_hi]`, sorted, both parities.
pub fn scan_regular_spectrum(p: &ModelParams, x_lo: f64, x_hi: f64, opts: &ScanOptions) -> Result<Vec<SpectralPoint>> {
    if x_lo.is_nan() || x_hi.is_nan() || x_lo >= x_hi {
        return Err(Error::InvalidParams(format!("empty scan window [{x_lo}, {x_hi}]")));
    }
    if opts.min_segments_per_unit < 64 {
        return Err(Error::InvalidParams(format!(
            "min_segments_per_unit = {} is below 64",
            opts.min_segments_per_unit
        )));
    }
    if p.g() < G_DECOUPLED {
        return Ok(decoupled_spectrum(p, x_lo, x_hi));
    }
    check_domain(p)?;
    let dp = p.derived();
    let sampler = Sampler { p, opts };

    let mut points = Vec::new();
    for (a, b) in pole_free_pieces(x_lo, x_hi, opts.pole_guard) {
        let segments = (((b - a) * opts.min_segments_per_unit as f64).ceil() as usize).max(4);
        let nodes = linspace(a, b, segments);
        let values: Vec<Option<GValue>> = nodes.iter().map(|&x| sampler.value(x)).collect();
        let mut brackets = Vec::new();
        sampler.brackets(&nodes, &values, 0, &mut brackets);
        for br in brackets {
            let branch = Branch::for_parity(br.parity);
            let x = if br.x_lo == br.x_hi {
                br.x_lo
            } else {
                bisect(
                    br.x_lo,
                    br.x_hi,
                    |x| sampler.value(x).map_or(f64::NAN, |v| v.get(branch)),
                    opts.x_tol,
                )
            };
            let converged = sampler.value(x).is_some_and(|v| v.converged);
            points.push(SpectralPoint {
                g: p.g(),
                x,
                energy: x - dp.lambda_plus,
                parity: Some(br.parity),
                level_index: 0,
                classification: Classification::Regular,
                converged,
            });
        }
    }
    points.sort_by(|a, b| a.x.total_cmp(&b.x));
    // a root sitting on a node can be reported from both adjoining segments
    points.dedup_by(|a, b| a.parity == b.parity && (a.x - b.x).abs() < 10.0 * opts.x_tol);
    Ok(finish(points))
}

/// The lowest `count` regular levels, widening the window until enough are found.
pub fn lowest_levels(p: &ModelParams, count: usize, opts: &ScanOptions) -> Result<Vec<SpectralPoint>> {
    let (x_lo, mut x_hi) = default_window(p.delta(), count);
    let mut found = Vec::new();
    for _ in 0..4 {
        found = scan_regular_spectrum(p, x_lo, x_hi, opts)?;
        if found.len() >= count {
            break;
        }
        x_hi += count as f64 + 1.0;
    }
    found.truncate(count);
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pole_is_rejected() {
        let p = ModelParams::new(0.5, 0.72169, 0.2).unwrap();
        assert!(matches!(eval_g(&p, 0.0), Err(Error::PoleProximity { pole: 0, .. })));
        assert!(matches!(eval_g(&p, 2.0 + 5e-10), Err(Error::PoleProximity { pole: 2, .. })));
    }

    #[test]
    fn small_r_routes_to_jaynes_cummings() {
        let p = ModelParams::new(0.5, 0.3, 5e-4).unwrap();
        assert!(matches!(eval_g(&p, 0.3), Err(Error::JaynesCummingsLimit { .. })));
    }

    #[test]
    fn definitional_consistency() {
        let p = ModelParams::new(1.1, 0.8, 0.6).unwrap();
        let v = eval_g(&p, 0.37).unwrap();
        assert!(v.converged);
        assert!((v.g_plus + v.g_minus - 2.0 * v.sum_f).abs() < 1e-14 * v.scale);
        assert!((v.g_plus - v.g_minus - 2.0 * v.sum_e).abs() < 1e-14 * v.scale);
        assert!(v.n_used >= N_START);
    }

    #[test]
    fn decoupled_branch() {
        let p = ModelParams::new(0.5, 0.0, 0.2).unwrap();
        let pts = scan_regular_spectrum(&p, -1.0, 2.6, &ScanOptions::default()).unwrap();
        let e: Vec<f64> = pts.iter().map(|s| s.energy).collect();
        assert_eq!(e, vec![-0.25, 0.25, 0.75, 1.25, 1.75, 2.25]);
        assert_eq!(pts[0].parity, Some(Parity::Even));
        assert_eq!(pts[1].parity, Some(Parity::Odd));
    }

    #[test]
    fn window_pieces_avoid_poles() {
        let pieces = pole_free_pieces(-0.5, 2.5, 1e-6);
        assert_eq!(pieces.len(), 4);
        assert_eq!(pieces[0], (-0.5, -1e-6));
        assert!((pieces[1].0 - 1e-6).abs() < 1e-18);
        assert_eq!(pieces[3].1, 2.5);
    }

    #[test]
    fn rejects_bad_options() {
        let p = ModelParams::new(0.5, 0.3, 0.2).unwrap();
        let opts = ScanOptions { min_segments_per_unit: 16, ..Default::default() };
        assert!(scan_regular_spectrum(&p, 0.0, 1.0, &opts).is_err());
        assert!(scan_regular_spectrum(&p, 1.0, 1.0, &ScanOptions::default()).is_err());
    }
}
