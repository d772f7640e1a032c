//! Column layouts of every table the CLI writes. The plotting layer reads
//! these files and nothing else, so the layouts are part of the interface.

/// Spectrum sweep rows: one per level per coupling, plus exceptional rows.
pub const SPECTRUM: &[&str] =
    &["delta", "r", "g", "x", "energy", "energy_plus_lambda", "parity", "level", "class", "status"];

pub const EXCEPTIONAL: &[&str] = &[
    "delta", "r", "n", "g", "x", "energy", "energy_plus_lambda", "kind", "parity", "is_gs_crossing", "residual",
    "ed_gap", "ed_offset", "confirmed", "status",
];

/// Sampled degeneracy condition, normalized to its own scale.
pub const F_CURVES: &[&str] = &["delta", "r", "n", "g", "f_value"];

pub const PHASE: &[&str] =
    &["delta", "r", "n", "g_c", "gs_parity_below", "gs_parity_above", "confirmed", "ed_gap", "status"];

pub const VALIDATE: &[&str] = &[
    "delta", "r", "g", "levels", "max_deviation", "parity_match", "ed_trunc", "ed_converged", "near_exceptional",
    "status",
];

pub const ED: &[&str] = &["delta", "r", "g", "level", "energy", "energy_plus_lambda", "parity", "n_trunc", "converged"];

/// Figure families drawn by the plotting layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureKind {
    Spectrum,
    FZeros,
    ShiftedSpectrum,
    Phase,
}

impl FigureKind {
    pub const ALL: [FigureKind; 4] = [FigureKind::Spectrum, FigureKind::FZeros, FigureKind::ShiftedSpectrum, FigureKind::Phase];

    /// Columns the figure needs, keyed by the file they live in.
    pub fn required(self) -> &'static [(&'static str, &'static [&'static str])] {
        match self {
            FigureKind::Spectrum => &[("spectrum", &["g", "energy", "parity", "level", "class"])],
            FigureKind::ShiftedSpectrum => &[("spectrum", &["g", "energy_plus_lambda", "parity", "level", "class"])],
            FigureKind::FZeros => &[("f_curves", &["n", "g", "f_value"]), ("exceptional", &["n", "g", "kind"])],
            FigureKind::Phase => &[("phase", &["r", "g_c", "gs_parity_below", "gs_parity_above"])],
        }
    }
}

/// Checks a header against the columns `kind` needs from `file`, naming the
/// first missing one.
pub fn check_header(kind: FigureKind, file: &str, header: &[&str]) -> Result<(), String> {
    for (stem, cols) in kind.required() {
        if *stem != file {
            continue;
        }
        if let Some(missing) = cols.iter().find(|c| !header.contains(c)) {
            return Err(format!("{file}: missing column {missing:?} needed for {kind:?}"));
        }
    }
    Ok(())
}

/// The full layout written for a file stem.
pub fn layout(file: &str) -> Option<&'static [&'static str]> {
    match file {
        "spectrum" => Some(SPECTRUM),
        "exceptional" => Some(EXCEPTIONAL),
        "f_curves" => Some(F_CURVES),
        "phase" => Some(PHASE),
        "validate" => Some(VALIDATE),
        "ed" => Some(ED),
        _ => None,
    }
}
