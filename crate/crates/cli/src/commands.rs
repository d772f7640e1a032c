//! The computations behind each subcommand. Everything here is pure apart
//! from the final write; parameter points run on a worker pool and are
//! merged back in grid order, so output never depends on the worker count.

use std::path::Path;

use anyhow::{Context, Result};
use aqrm_core::ed::{self, EdOptions};
use aqrm_core::exceptional::{self, ExceptionalKind, ExceptionalPoint};
use aqrm_core::gfunction::{self, ScanOptions, G_DECOUPLED, R_MIN};
use aqrm_core::{Classification, ModelParams, Parity, SpectralPoint};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{PhaseConfig, SweepConfig, ISOTROPIC_GUARD};
use crate::output::{write_metadata, Cell, Table};
use crate::schema;

/// Largest deviation from ED that `validate` accepts.
pub const VALIDATION_TOL: f64 = 1e-7;
/// Grid points this close to an exceptional coupling are reported but not judged.
pub const EXCEPTIONAL_EXCLUSION: f64 = 1e-3;
/// Energy below which a level counts as lying under an exceptional one.
const LEVEL_EPS: f64 = 1e-9;

/// Worker count from `WORKERS`, else the available parallelism.
pub fn workers() -> usize {
    std::env::var("WORKERS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// `f` over `items` on a pool of [`workers`] threads; results keep item order.
pub fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers()).build().expect("thread pool");
    pool.install(|| items.par_iter().map(&f).collect())
}

fn parity_text(p: Option<Parity>) -> Cell {
    match p {
        Some(p) => Cell::text(p.to_string()),
        None => Cell::from("undefined"),
    }
}

fn status_text(flags: &[&str]) -> Cell {
    if flags.is_empty() {
        Cell::from("ok")
    } else {
        Cell::text(flags.join("|"))
    }
}

/// Lowest `levels` regular eigenvalues; below the smallest anisotropy the
/// G-function path handles, the rotating-wave closed form stands in.
pub fn regular_levels(p: &ModelParams, levels: usize) -> Result<Vec<SpectralPoint>> {
    if p.r() < R_MIN && p.g() >= G_DECOUPLED {
        let lambda = p.derived().lambda_plus;
        return Ok(ed::jc_spectrum(p.delta(), p.g(), levels)
            .into_iter()
            .enumerate()
            .map(|(k, (energy, n))| SpectralPoint {
                g: p.g(),
                x: energy + lambda,
                energy,
                parity: Some(Parity::of_excitations(n)),
                level_index: k,
                classification: Classification::Regular,
                converged: true,
            })
            .collect());
    }
    Ok(gfunction::lowest_levels(p, levels, &ScanOptions::default())?)
}

/// Degenerate and non-degenerate points on pole lines `0..=cap` with `g` in
/// `(window.0, window.1]`, sorted by `(g, n)`.
pub fn exceptional_points(delta: f64, r: f64, window: (f64, f64), cap: usize) -> Result<Vec<ExceptionalPoint>> {
    let p = ModelParams::new(delta, 1.0, r)?;
    let lines: Vec<usize> = (0..=cap).collect();
    let per_line = par_map(&lines, |&n| -> Result<Vec<ExceptionalPoint>> {
        let mut pts = exceptional::degenerate_points(n, &p, window)?;
        if r >= R_MIN {
            pts.extend(exceptional::find_nondegenerate_points(n, &p, window)?);
        }
        Ok(pts)
    });
    let mut all = Vec::new();
    for pts in per_line {
        all.extend(pts?);
    }
    all.sort_by(|a, b| a.g.total_cmp(&b.g).then(a.n.cmp(&b.n)));
    Ok(all)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRow {
    pub point: SpectralPoint,
    pub flags: Vec<&'static str>,
}

/// Flags grid rows whose energy moves by more than ten times the grid
/// spacing times the local slope (floored at 1) between neighbours.
fn level_jumps(per_g: &[Vec<SpectralPoint>], dg: f64) -> Vec<Vec<bool>> {
    let mut flags: Vec<Vec<bool>> = per_g.iter().map(|v| vec![false; v.len()]).collect();
    for i in 2..per_g.len() {
        for k in 0..per_g[i].len() {
            let (Some(a), Some(b)) = (per_g[i - 2].get(k), per_g[i - 1].get(k)) else { continue };
            let slope = (b.energy - a.energy).abs() / dg;
            let step = (per_g[i][k].energy - b.energy).abs();
            if step > 10.0 * dg * slope.max(1.0) {
                flags[i][k] = true;
            }
        }
    }
    flags
}

/// Level index an exceptional energy takes among the regular levels at its coupling.
fn level_below(regular: &[SpectralPoint], energy: f64) -> usize {
    regular.iter().filter(|s| s.energy < energy - LEVEL_EPS).count()
}

pub fn run_spectrum_sweep(cfg: &SweepConfig) -> Result<Vec<SpectrumRow>> {
    let grid = cfg.g_grid();
    let per_g: Vec<Vec<SpectralPoint>> = par_map(&grid, |&g| regular_levels(&ModelParams::new(cfg.delta, g, cfg.r)?, cfg.levels))
        .into_iter()
        .collect::<Result<_>>()?;
    let jumps = level_jumps(&per_g, grid[1] - grid[0]);

    let mut rows: Vec<SpectrumRow> = Vec::new();
    for (pts, jump) in per_g.iter().zip(&jumps) {
        for (pt, &j) in pts.iter().zip(jump) {
            let mut flags = Vec::new();
            if !pt.converged {
                flags.push("not-converged");
            }
            if cfg.r < R_MIN && cfg.r > 0.0 && pt.g >= G_DECOUPLED {
                flags.push("jc-limit");
            }
            if j {
                flags.push("jump");
            }
            rows.push(SpectrumRow { point: *pt, flags });
        }
    }

    if cfg.r >= R_MIN {
        let exc = exceptional_points(cfg.delta, cfg.r, (cfg.g_min, cfg.g_max), cfg.n_pole_cap)?;
        let placed = par_map(&exc, |q| -> Result<Option<SpectrumRow>> {
            let regular = regular_levels(&q.params(), cfg.levels)?;
            let level = level_below(&regular, q.energy);
            if level >= cfg.levels {
                return Ok(None);
            }
            let mut flags = Vec::new();
            if !q.confirmed {
                flags.push("unconfirmed");
            }
            if q.low_confidence {
                flags.push("low-confidence");
            }
            Ok(Some(SpectrumRow { point: q.to_spectral_point(level), flags }))
        });
        for row in placed {
            if let Some(row) = row? {
                rows.push(row);
            }
        }
    }
    rows.sort_by(|a, b| a.point.g.total_cmp(&b.point.g).then(a.point.level_index.cmp(&b.point.level_index)));
    Ok(rows)
}

pub fn spectrum_table(cfg: &SweepConfig, rows: &[SpectrumRow]) -> Table {
    let mut t = Table::new(schema::SPECTRUM);
    for row in rows {
        let p = &row.point;
        t.push(vec![
            cfg.delta.into(),
            cfg.r.into(),
            p.g.into(),
            p.x.into(),
            p.energy.into(),
            p.x.into(),
            parity_text(p.parity),
            p.level_index.into(),
            Cell::from(p.classification.as_str()),
            status_text(&row.flags),
        ]);
    }
    t
}

fn exceptional_flags(q: &ExceptionalPoint) -> Vec<&'static str> {
    let mut flags = Vec::new();
    if !q.confirmed {
        flags.push("unconfirmed");
    }
    if q.low_confidence {
        flags.push("low-confidence");
    }
    if !q.ed_converged {
        flags.push("not-converged");
    }
    flags
}

pub fn run_exceptional_scan(cfg: &SweepConfig) -> Result<Vec<ExceptionalPoint>> {
    exceptional_points(cfg.delta, cfg.r, (cfg.g_min, cfg.g_max), cfg.n_pole_cap)
}

pub fn exceptional_table(points: &[ExceptionalPoint]) -> Table {
    let mut t = Table::new(schema::EXCEPTIONAL);
    for q in points {
        t.push(vec![
            q.delta.into(),
            q.r.into(),
            q.n.into(),
            q.g.into(),
            q.x().into(),
            q.energy.into(),
            q.x().into(),
            Cell::from(match q.kind {
                ExceptionalKind::Degenerate => "degenerate",
                ExceptionalKind::Nondegenerate => "nondegenerate",
            }),
            parity_text(q.parity),
            q.is_gs_crossing.into(),
            q.residual.into(),
            q.ed_gap.into(),
            q.ed_offset.into(),
            q.confirmed.into(),
            status_text(&exceptional_flags(q)),
        ]);
    }
    t
}

/// The degeneracy condition of every scanned pole line sampled on the grid.
pub fn f_curve_table(cfg: &SweepConfig) -> Table {
    let grid = cfg.g_grid();
    let lines: Vec<usize> = (0..=cfg.n_pole_cap).collect();
    let curves = par_map(&lines, |&n| {
        grid.iter()
            .map(|&g| {
                ModelParams::new(cfg.delta, g, cfg.r)
                    .ok()
                    .and_then(|p| exceptional::relative_condition(n, &p).ok())
                    .filter(|v| v.is_finite())
            })
            .collect::<Vec<_>>()
    });
    let mut t = Table::new(schema::F_CURVES);
    for (n, values) in lines.iter().zip(curves) {
        for (&g, v) in grid.iter().zip(values) {
            t.push(vec![cfg.delta.into(), cfg.r.into(), (*n).into(), g.into(), v.map_or(Cell::Empty, Cell::Float)]);
        }
    }
    t
}

/// One ground-state parity boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseRecord {
    pub delta: f64,
    pub r: f64,
    pub n: usize,
    pub g_c: f64,
    pub gs_parity_below: Parity,
    pub gs_parity_above: Parity,
    /// ED shows the ground pair degenerate at `g_c`.
    pub confirmed: bool,
    pub ed_gap: f64,
}

/// Boundaries at one anisotropy: the largest degenerate zero on each pole
/// line, ordered in `g`, with the ground-state parity walked from `+1` at
/// `g = 0` and flipped at every confirmed boundary.
pub fn phase_boundaries(delta: f64, r: f64, g_hi: f64, cap: usize) -> Result<Vec<PhaseRecord>> {
    let p = ModelParams::new(delta, 1.0, r)?;
    let mut found = Vec::new();
    for n in 0..=cap {
        if let Some(q) = exceptional::gs_boundary(n, &p, (0.0, g_hi))? {
            found.push(q);
        }
    }
    found.sort_by(|a, b| a.g.total_cmp(&b.g));
    let mut parity = Parity::Even;
    let mut records = Vec::with_capacity(found.len());
    for q in found {
        let below = parity;
        if q.is_gs_crossing {
            parity = parity.flipped();
        } else {
            log::warn!("boundary candidate n = {} at g = {} (r = {r}) is not an ED ground-state crossing", q.n, q.g);
        }
        records.push(PhaseRecord {
            delta,
            r,
            n: q.n,
            g_c: q.g,
            gs_parity_below: below,
            gs_parity_above: parity,
            confirmed: q.is_gs_crossing,
            ed_gap: q.ed_ground_gap,
        });
    }
    Ok(records)
}

pub fn run_phase_diagram(cfg: &PhaseConfig) -> Result<Vec<PhaseRecord>> {
    let rs = cfg.r_grid();
    let per_r = par_map(&rs, |&r| phase_boundaries(cfg.sweep.delta, r, cfg.g_hi, cfg.sweep.n_pole_cap));
    let mut out = Vec::new();
    for recs in per_r {
        out.extend(recs?);
    }
    Ok(out)
}

pub fn phase_table(records: &[PhaseRecord]) -> Table {
    let mut t = Table::new(schema::PHASE);
    for rec in records {
        t.push(vec![
            rec.delta.into(),
            rec.r.into(),
            rec.n.into(),
            rec.g_c.into(),
            Cell::text(rec.gs_parity_below.to_string()),
            Cell::text(rec.gs_parity_above.to_string()),
            rec.confirmed.into(),
            rec.ed_gap.into(),
            status_text(if rec.confirmed { &[] } else { &["unconfirmed"] }),
        ]);
    }
    t
}

fn ed_options(p: &ModelParams, levels: usize, cap: usize) -> EdOptions {
    let base = EdOptions::new(p, levels);
    EdOptions { start_trunc: base.start_trunc.min(cap), max_trunc: cap, ..base }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationRow {
    pub g: f64,
    pub levels: usize,
    pub max_deviation: f64,
    pub parity_match: bool,
    pub ed_trunc: usize,
    pub ed_converged: bool,
    pub near_exceptional: bool,
    pub flags: Vec<&'static str>,
}

impl ValidationRow {
    pub fn failed(&self) -> bool {
        self.flags.contains(&"fail")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub rows: Vec<ValidationRow>,
    pub worst_deviation: f64,
    pub passed: bool,
}

/// Exceptional couplings relevant to the lowest `levels` levels on the grid.
fn exceptional_couplings(cfg: &SweepConfig) -> Result<Vec<f64>> {
    if cfg.r < R_MIN {
        return Ok(Vec::new());
    }
    let cap = cfg.n_pole_cap.max(cfg.levels + 2).min(crate::config::MAX_POLE_CAP);
    let lo = (cfg.g_min - EXCEPTIONAL_EXCLUSION).max(0.0);
    let pts = exceptional_points(cfg.delta, cfg.r, (lo, cfg.g_max + EXCEPTIONAL_EXCLUSION), cap)?;
    Ok(pts.iter().map(|q| q.g).collect())
}

pub fn run_validate(cfg: &SweepConfig) -> Result<ValidationReport> {
    let grid = cfg.g_grid();
    let exc = exceptional_couplings(cfg)?;
    let rows = par_map(&grid, |&g| -> Result<ValidationRow> {
        let p = ModelParams::new(cfg.delta, g, cfg.r)?;
        let mine = regular_levels(&p, cfg.levels)?;
        let reference = ed::diagonalize_with(&p, &ed_options(&p, cfg.levels, cfg.trunc));
        let compared = mine.len().min(reference.energies.len());
        let max_deviation = if mine.len() < cfg.levels {
            f64::INFINITY
        } else {
            (0..compared).fold(0.0_f64, |m, k| m.max((mine[k].energy - reference.energies[k]).abs()))
        };
        let parity_match = (0..compared).all(|k| mine[k].parity == Some(reference.parities[k]));
        let near_exceptional = exc.iter().any(|&ge| (ge - g).abs() < EXCEPTIONAL_EXCLUSION);
        let jc_approx = cfg.r < R_MIN && cfg.r > 0.0 && g >= G_DECOUPLED;

        let mut flags = Vec::new();
        if !reference.converged {
            flags.push("not-converged");
        }
        if near_exceptional {
            flags.push("near-exceptional");
        }
        if jc_approx {
            flags.push("jc-limit");
        }
        if !near_exceptional && !jc_approx && (max_deviation.is_nan() || max_deviation > VALIDATION_TOL || !parity_match) {
            flags.push("fail");
        }
        Ok(ValidationRow {
            g,
            levels: compared,
            max_deviation,
            parity_match,
            ed_trunc: reference.n_trunc,
            ed_converged: reference.converged,
            near_exceptional,
            flags,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let worst_deviation = rows
        .iter()
        .filter(|r| !r.near_exceptional)
        .fold(0.0_f64, |m, r| m.max(r.max_deviation));
    let passed = !rows.iter().any(ValidationRow::failed);
    Ok(ValidationReport { rows, worst_deviation, passed })
}

pub fn validation_table(cfg: &SweepConfig, report: &ValidationReport) -> Table {
    let mut t = Table::new(schema::VALIDATE);
    for row in &report.rows {
        t.push(vec![
            cfg.delta.into(),
            cfg.r.into(),
            row.g.into(),
            row.levels.into(),
            row.max_deviation.into(),
            row.parity_match.into(),
            row.ed_trunc.into(),
            row.ed_converged.into(),
            row.near_exceptional.into(),
            status_text(&row.flags),
        ]);
    }
    t
}

pub fn run_ed(cfg: &SweepConfig) -> Result<Table> {
    let grid = cfg.g_grid();
    let results = par_map(&grid, |&g| -> Result<(ModelParams, aqrm_core::EdResult)> {
        let p = ModelParams::new(cfg.delta, g, cfg.r)?;
        let res = ed::diagonalize_with(&p, &ed_options(&p, cfg.levels, cfg.trunc));
        Ok((p, res))
    });
    let mut t = Table::new(schema::ED);
    for item in results {
        let (p, res) = item?;
        let lambda = p.derived().lambda_plus;
        for (k, (&e, &parity)) in res.energies.iter().zip(&res.parities).enumerate() {
            t.push(vec![
                cfg.delta.into(),
                cfg.r.into(),
                p.g().into(),
                k.into(),
                e.into(),
                (e + lambda).into(),
                Cell::text(parity.to_string()),
                res.n_trunc.into(),
                res.converged.into(),
            ]);
        }
    }
    Ok(t)
}

pub fn sweep_metadata(command: &str, cfg: &SweepConfig, files: &[&str]) -> Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": {
            "delta": cfg.delta,
            "r": cfg.r,
            "g_min": cfg.g_min,
            "g_max": cfg.g_max,
            "g_steps": cfg.g_steps,
            "levels": cfg.levels,
            "n_pole_cap": cfg.n_pole_cap,
            "trunc": cfg.trunc,
            "format": cfg.format.extension(),
        },
        "files": files,
        "schema": files.iter().map(|f| (f.to_string(), json!(schema::layout(f)))).collect::<serde_json::Map<_, _>>(),
    })
}

pub fn phase_metadata(cfg: &PhaseConfig) -> Value {
    let mut meta = sweep_metadata("phase-diagram", &cfg.sweep, &["phase"]);
    meta["phase"] = json!({
        "r_min": cfg.r_min,
        "r_max": cfg.r_max,
        "r_steps": cfg.r_steps,
        "r_grid": cfg.r_grid(),
        "g_hi": cfg.g_hi,
        "isotropic_guard": ISOTROPIC_GUARD,
    });
    meta
}

pub fn write_outputs(dir: &Path, cfg: &SweepConfig, tables: &[(&str, &Table)], meta: &Value) -> Result<()> {
    for (stem, table) in tables {
        table.write(&cfg.output_path(stem), cfg.format).with_context(|| format!("writing {stem}"))?;
    }
    write_metadata(dir, meta)
}
