//! Exact diagonalization in a truncated Fock space.
//!
//! This is the independent check on everything the G-function machinery
//! produces. The Hamiltonian is assembled directly in the two parity sectors
//! of `Π = exp(iπN̂)`, `N̂ = a†a + σ+σ−`, so degenerate doublets at level
//! crossings keep unambiguous parity labels.
//!
//! Full-space vectors use the layout `index = 2n + s` with `s = 0` for spin
//! down and `s = 1` for spin up.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::model::{ModelParams, Parity};

/// Cutoff used when nothing else is known.
pub const DEFAULT_TRUNC: usize = 120;
/// Largest cutoff the convergence contract escalates to.
pub const MAX_TRUNC: usize = 400;
/// Escalation step of the convergence contract.
pub const TRUNC_STEP: usize = 40;
/// Energy change tolerated between consecutive cutoffs.
pub const CONVERGENCE_TOL: f64 = 1e-10;
/// Largest tail norm [`ecs_to_fock`] silently drops.
pub const MAX_TAIL_NORM: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Down,
    Up,
}

impl Spin {
    fn offset(self) -> usize {
        match self {
            Spin::Down => 0,
            Spin::Up => 1,
        }
    }
}

/// Position of `(n, spin)` in a full-space vector.
pub fn full_index(n: usize, spin: Spin) -> usize {
    2 * n + spin.offset()
}

/// Parity sector of the product state `|n⟩ ⊗ |spin⟩`.
pub fn sector_of(n: usize, spin: Spin) -> Parity {
    Parity::of_excitations(n + spin.offset())
}

/// `H` restricted to `n ≤ n_trunc`, stored as its two parity blocks.
#[derive(Debug, Clone)]
pub struct TruncatedHamiltonian {
    pub n_trunc: usize,
    pub even: DMatrix<f64>,
    pub odd: DMatrix<f64>,
    /// Sector index → `(n, spin)` for the even block.
    pub even_basis: Vec<(usize, Spin)>,
    pub odd_basis: Vec<(usize, Spin)>,
}

impl TruncatedHamiltonian {
    /// Raw couplings, without the `Δ > 0` validation of [`ModelParams`];
    /// used for the `(Δ, g1, g2) ↔ (−Δ, g2, g1)` duality check.
    pub fn from_couplings(delta: f64, g1: f64, g2: f64, n_trunc: usize) -> Self {
        let mut even_basis = Vec::with_capacity(n_trunc + 1);
        let mut odd_basis = Vec::with_capacity(n_trunc + 1);
        for n in 0..=n_trunc {
            for spin in [Spin::Down, Spin::Up] {
                match sector_of(n, spin) {
                    Parity::Even => even_basis.push((n, spin)),
                    Parity::Odd => odd_basis.push((n, spin)),
                }
            }
        }
        let block = |basis: &[(usize, Spin)]| {
            let pos = |n: usize, s: Spin| basis.iter().position(|&b| b == (n, s));
            let dim = basis.len();
            let mut h = DMatrix::<f64>::zeros(dim, dim);
            for (i, &(n, spin)) in basis.iter().enumerate() {
                h[(i, i)] = match spin {
                    Spin::Down => n as f64 - 0.5 * delta,
                    Spin::Up => n as f64 + 0.5 * delta,
                };
                if n < n_trunc {
                    let amp = ((n + 1) as f64).sqrt();
                    // rotating term: (n+1, down) ↔ (n, up); counter-rotating: (n, down) ↔ (n+1, up)
                    let (partner, coupling) = match spin {
                        Spin::Up => ((n + 1, Spin::Down), g1),
                        Spin::Down => ((n + 1, Spin::Up), g2),
                    };
                    if let Some(j) = pos(partner.0, partner.1) {
                        h[(i, j)] = coupling * amp;
                        h[(j, i)] = coupling * amp;
                    }
                }
            }
            h
        };
        let even = block(&even_basis);
        let odd = block(&odd_basis);
        Self { n_trunc, even, odd, even_basis, odd_basis }
    }

    pub fn dim(&self) -> usize {
        2 * (self.n_trunc + 1)
    }

    pub fn block(&self, parity: Parity) -> (&DMatrix<f64>, &[(usize, Spin)]) {
        match parity {
            Parity::Even => (&self.even, &self.even_basis),
            Parity::Odd => (&self.odd, &self.odd_basis),
        }
    }

    /// `H v` for a full-space vector.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        for parity in [Parity::Even, Parity::Odd] {
            let (h, basis) = self.block(parity);
            let sub = DVector::from_iterator(basis.len(), basis.iter().map(|&(n, s)| v[full_index(n, s)]));
            let hv = h * sub;
            for (i, &(n, s)) in basis.iter().enumerate() {
                out[full_index(n, s)] = hv[i];
            }
        }
        out
    }

    /// Embeds a sector eigenvector into the full space.
    pub fn embed(&self, parity: Parity, sector_vec: &DVector<f64>) -> DVector<f64> {
        let (_, basis) = self.block(parity);
        let mut out = DVector::zeros(self.dim());
        for (i, &(n, s)) in basis.iter().enumerate() {
            out[full_index(n, s)] = sector_vec[i];
        }
        out
    }
}

pub fn build_hamiltonian(p: &ModelParams, n_trunc: usize) -> TruncatedHamiltonian {
    TruncatedHamiltonian::from_couplings(p.delta(), p.g(), p.g2(), n_trunc)
}

/// `Π v` for a full-space vector: `(−1)^{n + [spin up]}` on each component.
pub fn apply_parity(v: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(v.len(), v.iter().enumerate().map(|(i, &c)| if i % 2 == 0 && (i / 2) % 2 == 0 || i % 2 == 1 && (i / 2) % 2 == 1 { c } else { -c }))
}

/// `⟨v|N̂|v⟩ / ⟨v|v⟩`.
pub fn excitation_expectation(v: &DVector<f64>) -> f64 {
    let num: f64 = v.iter().enumerate().map(|(i, c)| (i / 2 + i % 2) as f64 * c * c).sum();
    num / v.norm_squared()
}

#[derive(Debug, Clone)]
pub struct EdResult {
    /// Ascending.
    pub energies: Vec<f64>,
    pub parities: Vec<Parity>,
    /// Normalized full-space eigenvectors, when requested.
    pub vectors: Option<Vec<DVector<f64>>>,
    pub n_trunc: usize,
    /// Whether the lowest levels were stable under one more escalation step.
    pub converged: bool,
}

impl EdResult {
    pub fn ground_parity(&self) -> Parity {
        self.parities[0]
    }

    /// Index of the level closest to `energy`.
    pub fn nearest(&self, energy: f64) -> usize {
        (0..self.energies.len())
            .min_by(|&a, &b| (self.energies[a] - energy).abs().total_cmp(&(self.energies[b] - energy).abs()))
            .unwrap_or(0)
    }

    /// The two levels closest to `energy`, in ascending index order, and their gap.
    pub fn pair_near(&self, energy: f64) -> Option<(usize, usize, f64)> {
        if self.energies.len() < 2 {
            return None;
        }
        let mut idx: Vec<usize> = (0..self.energies.len()).collect();
        idx.sort_by(|&a, &b| (self.energies[a] - energy).abs().total_cmp(&(self.energies[b] - energy).abs()));
        let (a, b) = (idx[0].min(idx[1]), idx[0].max(idx[1]));
        Some((a, b, self.energies[b] - self.energies[a]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdOptions {
    pub start_trunc: usize,
    pub max_trunc: usize,
    /// Number of lowest levels returned and checked for convergence.
    pub levels: usize,
    pub vectors: bool,
}

impl EdOptions {
    pub fn new(p: &ModelParams, levels: usize) -> Self {
        Self { start_trunc: suggested_trunc(p), max_trunc: MAX_TRUNC, levels, vectors: false }
    }

    pub fn with_vectors(mut self) -> Self {
        self.vectors = true;
        self
    }
}

/// Starting cutoff: 120 at moderate coupling, more when the mean photon
/// number `~(g(1 + r)/2)²` of the low-lying states gets large.
pub fn suggested_trunc(p: &ModelParams) -> usize {
    let photons = (0.5 * p.g() * (1.0 + p.r())).powi(2);
    let need = (photons + 10.0 * photons.sqrt() + 60.0).ceil() as usize;
    if need <= DEFAULT_TRUNC {
        DEFAULT_TRUNC
    } else {
        need.div_ceil(TRUNC_STEP) * TRUNC_STEP
    }
}

struct Spectrum {
    energies: Vec<f64>,
    parities: Vec<Parity>,
    vectors: Option<Vec<DVector<f64>>>,
}

fn solve(h: &TruncatedHamiltonian, levels: usize, vectors: bool) -> Spectrum {
    let mut all: Vec<(f64, Parity, Option<DVector<f64>>)> = Vec::with_capacity(h.dim());
    for parity in [Parity::Even, Parity::Odd] {
        let (block, _) = h.block(parity);
        if vectors {
            let eig = SymmetricEigen::new(block.clone());
            for (i, &e) in eig.eigenvalues.iter().enumerate() {
                let v = h.embed(parity, &eig.eigenvectors.column(i).into_owned());
                all.push((e, parity, Some(v)));
            }
        } else {
            for &e in block.symmetric_eigenvalues().iter() {
                all.push((e, parity, None));
            }
        }
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    all.truncate(levels);
    let energies = all.iter().map(|t| t.0).collect();
    let parities = all.iter().map(|t| t.1).collect();
    let vectors = vectors.then(|| all.into_iter().filter_map(|t| t.2).collect());
    Spectrum { energies, parities, vectors }
}

/// Lowest `k` eigenpairs with the default escalation policy.
pub fn diagonalize(p: &ModelParams, n_trunc: usize, k: usize) -> EdResult {
    diagonalize_with(p, &EdOptions { start_trunc: n_trunc, max_trunc: MAX_TRUNC.max(n_trunc), levels: k, vectors: false })
}

/// Diagonalizes at increasing cutoffs until the lowest `levels` energies move
/// by less than [`CONVERGENCE_TOL`] between consecutive cutoffs; if the cap
/// is reached first, the result is flagged as not converged.
pub fn diagonalize_with(p: &ModelParams, opts: &EdOptions) -> EdResult {
    let cap = opts.max_trunc.max(8);
    let mut n = opts.start_trunc.clamp(8, cap);
    let levels = opts.levels.min(2 * (n + 1));
    let mut current = solve(&build_hamiltonian(p, n), levels, false);
    let mut converged = false;
    while n + TRUNC_STEP <= cap {
        let next_n = n + TRUNC_STEP;
        let next = solve(&build_hamiltonian(p, next_n), levels, false);
        let shift = current
            .energies
            .iter()
            .zip(&next.energies)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        n = next_n;
        current = next;
        if shift < CONVERGENCE_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        log::debug!("ED not converged at cutoff {n} (g = {}, r = {})", p.g(), p.r());
    }
    if opts.vectors {
        current = solve(&build_hamiltonian(p, n), levels, true);
    }
    EdResult {
        energies: current.energies,
        parities: current.parities,
        vectors: current.vectors,
        n_trunc: n,
        converged,
    }
}

/// Which displaced basis a [`StateExpansion`] is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Displacement {
    /// `|n⟩_{A+} = (a† + β)^n / √n! · D(−β)|0⟩`
    Plus,
    /// `|n⟩_{A−} = (a† − β)^n / √n! · D(β)|0⟩`
    Minus,
}

/// A two-component state expanded over displaced oscillator states, in the
/// rotated spin frame in which the recurrences are written.
#[derive(Debug, Clone, PartialEq)]
pub struct StateExpansion {
    pub displacement: Displacement,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
    pub params: ModelParams,
}

/// Full-space Fock representation of an expansion, mapped back from the
/// rotated spin frame (`ψ = P⁻¹ψ'`, with `up = (u − l)/√(2r)`,
/// `down = (u + l)/√2`).
pub fn ecs_to_fock(s: &StateExpansion, n_trunc: usize) -> Result<DVector<f64>> {
    let len = s.upper.len().max(s.lower.len());
    if len == 0 || s.upper.iter().chain(&s.lower).all(|&c| c == 0.0) {
        return Err(Error::InvalidParams("empty state expansion".into()));
    }
    let r = s.params.r();
    if r <= 0.0 {
        return Err(Error::Singular("the displaced basis needs r > 0".into()));
    }
    let beta = s.params.derived().beta;
    let sign = match s.displacement {
        Displacement::Plus => 1.0,
        Displacement::Minus => -1.0,
    };
    let work = n_trunc + 40 + (10.0 * beta).ceil() as usize + len;

    // displaced vacuum with amplitude −sign·β
    let mut vac = DVector::<f64>::zeros(work + 1);
    vac[0] = (-0.5 * beta * beta).exp();
    for n in 1..=work {
        vac[n] = vac[n - 1] * (-sign * beta) / (n as f64).sqrt();
    }
    let mut basis = vec![vac];
    for k in 1..len {
        let prev = &basis[k - 1];
        let mut next = DVector::<f64>::zeros(work + 1);
        for n in 0..=work {
            let raised = if n > 0 { (n as f64).sqrt() * prev[n - 1] } else { 0.0 };
            next[n] = (raised + sign * beta * prev[n]) / (k as f64).sqrt();
        }
        basis.push(next);
    }

    let combine = |coeffs: &[f64]| {
        coeffs.iter().zip(&basis).fold(DVector::<f64>::zeros(work + 1), |acc, (&c, b)| acc + b * c)
    };
    let u = combine(&s.upper);
    let l = combine(&s.lower);
    let up = (&u - &l) / (2.0 * r).sqrt();
    let down = (&u + &l) / 2f64.sqrt();

    let total = (up.norm_squared() + down.norm_squared()).sqrt();
    let tail = (up.rows(n_trunc + 1, work - n_trunc).norm_squared()
        + down.rows(n_trunc + 1, work - n_trunc).norm_squared())
    .sqrt();
    if tail > MAX_TAIL_NORM * total {
        return Err(Error::TruncationLoss { n_trunc, lost: tail / total });
    }
    let mut out = DVector::<f64>::zeros(2 * (n_trunc + 1));
    for n in 0..=n_trunc {
        out[full_index(n, Spin::Down)] = down[n];
        out[full_index(n, Spin::Up)] = up[n];
    }
    Ok(out)
}

/// `‖Hv − Ev‖ / ‖v‖`.
pub fn residual_norm(h: &TruncatedHamiltonian, v: &DVector<f64>, energy: f64) -> f64 {
    let hv = h.apply(v);
    (hv - v * energy).norm() / v.norm()
}

/// Largest sine of the principal angles between the spans of `a` and `b`.
pub fn principal_angle_sin(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    let qa = orthonormal(a);
    let qb = orthonormal(b);
    let proj = &qb * (qb.transpose() * &qa);
    let resid = &qa - proj;
    let gram = resid.transpose() * &resid;
    gram.symmetric_eigenvalues().iter().fold(0.0_f64, |m, &v| m.max(v)).max(0.0).sqrt()
}

fn orthonormal(vs: &[DVector<f64>]) -> DMatrix<f64> {
    let cols: Vec<DVector<f64>> = vs.to_vec();
    let m = DMatrix::from_columns(&cols);
    m.qr().q()
}

/// Smallest singular value of the Gram matrix of the normalized vectors.
pub fn gram_min_singular(vs: &[DVector<f64>]) -> f64 {
    let normed: Vec<DVector<f64>> = vs.iter().map(|v| v / v.norm()).collect();
    let m = DMatrix::from_columns(&normed);
    let gram = m.transpose() * &m;
    gram.symmetric_eigenvalues().iter().fold(f64::INFINITY, |a, &b| a.min(b.abs()))
}

/// Rotating-wave (`r = 0`) spectrum: `(energy, excitation number)` pairs,
/// lowest `k` in ascending order.
pub fn jc_spectrum(delta: f64, g: f64, k: usize) -> Vec<(f64, usize)> {
    let detuning = 0.5 * (delta - 1.0);
    let mut out = vec![(-0.5 * delta, 0usize)];
    let mut n = 1usize;
    loop {
        let split = (detuning * detuning + g * g * n as f64).sqrt();
        let lower = n as f64 - 0.5 - split;
        out.push((lower, n));
        out.push((n as f64 - 0.5 + split, n));
        // the lower branch is increasing once n exceeds g²/4 (plus slack)
        if out.len() >= k && (n as f64) > 0.25 * g * g + 2.0 {
            let mut sorted: Vec<f64> = out.iter().map(|t| t.0).collect();
            sorted.sort_by(f64::total_cmp);
            if lower > sorted[k - 1] {
                break;
            }
        }
        n += 1;
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    out.truncate(k);
    out
}
