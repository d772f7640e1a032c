//! Sign-change scanning and bisection.

/// Bisection on the sign of `f` over `[lo, hi]`, where `f(lo)` and `f(hi)`
/// have opposite signs. Stops once the bracket is narrower than `tol` or the
/// midpoint evaluates to exactly zero.
pub fn bisect<F>(mut lo: f64, mut hi: f64, mut f: F, tol: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    let mut sign_lo = f(lo).signum();
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if v.signum() == sign_lo {
            lo = mid;
            sign_lo = v.signum();
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Evenly spaced nodes `lo, …, hi` (inclusive) with `segments` intervals.
pub fn linspace(lo: f64, hi: f64, segments: usize) -> Vec<f64> {
    let step = (hi - lo) / segments as f64;
    let mut v: Vec<f64> = (0..=segments).map(|i| lo + step * i as f64).collect();
    v[segments] = hi;
    v
}

/// All roots of `f` on `[lo, hi]` found by a uniform scan with `segments`
/// intervals and bisection of every sign change. Non-finite samples break the
/// bracket on either side.
pub fn scan_roots<F>(lo: f64, hi: f64, segments: usize, mut f: F, tol: f64) -> Vec<f64>
where
    F: FnMut(f64) -> f64,
{
    let nodes = linspace(lo, hi, segments);
    let values: Vec<f64> = nodes.iter().map(|&t| f(t)).collect();
    let mut roots = Vec::new();
    for i in 0..segments {
        let (a, b) = (values[i], values[i + 1]);
        if !a.is_finite() || !b.is_finite() {
            continue;
        }
        if a == 0.0 {
            roots.push(nodes[i]);
            continue;
        }
        if i + 1 == segments && b == 0.0 {
            roots.push(nodes[i + 1]);
            continue;
        }
        if a.signum() != b.signum() && b != 0.0 {
            roots.push(bisect(nodes[i], nodes[i + 1], &mut f, tol));
        }
    }
    roots
}
