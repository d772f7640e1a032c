//! Sweep configuration: built-in defaults, then an optional `key = value`
//! file, then command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};

/// Largest pole index any scan accepts.
pub const MAX_POLE_CAP: usize = 12;
pub const DEFAULT_POLE_CAP: usize = 4;
/// Phase diagrams look further out by default.
pub const DEFAULT_PHASE_POLE_CAP: usize = 12;
pub const DEFAULT_G_HI: f64 = 6.0;
/// Half-width of the band around `r = 1` left out of phase diagrams.
pub const ISOTROPIC_GUARD: f64 = 1e-3;

/// A configuration problem; maps to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to the defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct SweepArgs {
    /// `key = value` file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub r: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub g_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub g_max: Option<f64>,
    /// Number of grid points, endpoints included.
    #[arg(long)]
    pub g_steps: Option<usize>,
    #[arg(long)]
    pub levels: Option<usize>,
    /// Highest pole line scanned for exceptional points.
    #[arg(long)]
    pub n_pole_cap: Option<usize>,
    /// Largest ED cutoff the convergence contract may escalate to.
    #[arg(long)]
    pub trunc: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct PhaseArgs {
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub r_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub r_max: Option<f64>,
    #[arg(long)]
    pub r_steps: Option<usize>,
    /// Upper end of the coupling window searched for boundaries.
    #[arg(long, allow_negative_numbers = true)]
    pub g_hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub delta: f64,
    pub r: f64,
    pub g_min: f64,
    pub g_max: f64,
    pub g_steps: usize,
    pub levels: usize,
    pub n_pole_cap: usize,
    pub trunc: usize,
    pub out_dir: PathBuf,
    pub format: Format,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            delta: 1.0,
            r: 0.5,
            g_min: 0.0,
            g_max: 1.5,
            g_steps: 151,
            levels: 6,
            n_pole_cap: DEFAULT_POLE_CAP,
            trunc: aqrm_core::ed::MAX_TRUNC,
            out_dir: PathBuf::from("."),
            format: Format::Csv,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let finite = [self.delta, self.r, self.g_min, self.g_max].iter().all(|v| v.is_finite());
        if !finite {
            return Err(bad("non-finite parameter"));
        }
        if self.delta <= 0.0 {
            return Err(bad(format!("delta must be > 0, got {}", self.delta)));
        }
        if self.r < 0.0 {
            return Err(bad(format!("r must be >= 0, got {}", self.r)));
        }
        if self.g_min < 0.0 || self.g_min >= self.g_max {
            return Err(bad(format!("need 0 <= g_min < g_max, got [{}, {}]", self.g_min, self.g_max)));
        }
        if self.g_steps < 2 {
            return Err(bad(format!("g_steps must be >= 2, got {}", self.g_steps)));
        }
        if self.levels == 0 {
            return Err(bad("levels must be >= 1"));
        }
        if self.n_pole_cap > MAX_POLE_CAP {
            return Err(bad(format!("n_pole_cap must be <= {MAX_POLE_CAP}, got {}", self.n_pole_cap)));
        }
        if self.trunc < 8 {
            return Err(bad(format!("trunc must be >= 8, got {}", self.trunc)));
        }
        Ok(())
    }

    /// The coupling grid, endpoints included.
    pub fn g_grid(&self) -> Vec<f64> {
        grid(self.g_min, self.g_max, self.g_steps)
    }

    pub fn output_path(&self, stem: &str) -> PathBuf {
        self.out_dir.join(format!("{stem}.{}", self.format.extension()))
    }
}

/// `steps` evenly spaced points on `[lo, hi]`, computed as `lo + i·h` so
/// that every run produces identical values.
pub fn grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    let h = (hi - lo) / (steps - 1) as f64;
    (0..steps).map(|i| if i + 1 == steps { hi } else { lo + h * i as f64 }).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConfig {
    pub sweep: SweepConfig,
    pub r_min: f64,
    pub r_max: f64,
    pub r_steps: usize,
    pub g_hi: f64,
}

impl PhaseConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.sweep.validate()?;
        if !(self.r_min >= 0.0 && self.r_min < self.r_max && self.r_max.is_finite()) {
            return Err(bad(format!("need 0 <= r_min < r_max, got [{}, {}]", self.r_min, self.r_max)));
        }
        if self.r_steps < 2 {
            return Err(bad(format!("r_steps must be >= 2, got {}", self.r_steps)));
        }
        if !(self.g_hi > 0.0 && self.g_hi.is_finite()) {
            return Err(bad(format!("g_hi must be > 0, got {}", self.g_hi)));
        }
        Ok(())
    }

    /// The anisotropy grid with the isotropic guard band removed.
    pub fn r_grid(&self) -> Vec<f64> {
        grid(self.r_min, self.r_max, self.r_steps)
            .into_iter()
            .filter(|r| (r - 1.0).abs() >= ISOTROPIC_GUARD)
            .collect()
    }
}

/// Parses `key = value` lines; `#` starts a comment. Keys may use `-` or `_`.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("line {}: expected key = value", lineno + 1)))?;
        map.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(map)
}

fn load_file(path: &Path) -> Result<BTreeMap<String, String>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
    parse_config_text(&text)
}

struct FileValues(BTreeMap<String, String>);

impl FileValues {
    fn take<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.0.remove(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| bad(format!("bad value for {key}: {v:?}"))),
        }
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.0.keys().next() {
            Some(k) => Err(bad(format!("unknown config key {k:?}"))),
            None => Ok(()),
        }
    }
}

fn parse_format(v: &str) -> Result<Format, ConfigError> {
    Format::from_str(v, true).map_err(|_| bad(format!("bad format {v:?}")))
}

fn sweep_from(args: &SweepArgs, file: &mut FileValues, default_cap: usize) -> Result<SweepConfig, ConfigError> {
    let d = SweepConfig::default();
    let format = match (args.format, file.0.remove("format")) {
        (Some(f), _) => f,
        (None, Some(v)) => parse_format(&v)?,
        (None, None) => d.format,
    };
    let out_file: Option<String> = file.take("out")?;
    Ok(SweepConfig {
        delta: args.delta.or(file.take("delta")?).unwrap_or(d.delta),
        r: args.r.or(file.take("r")?).unwrap_or(d.r),
        g_min: args.g_min.or(file.take("g_min")?).unwrap_or(d.g_min),
        g_max: args.g_max.or(file.take("g_max")?).unwrap_or(d.g_max),
        g_steps: args.g_steps.or(file.take("g_steps")?).unwrap_or(d.g_steps),
        levels: args.levels.or(file.take("levels")?).unwrap_or(d.levels),
        n_pole_cap: args.n_pole_cap.or(file.take("n_pole_cap")?).unwrap_or(default_cap),
        trunc: args.trunc.or(file.take("trunc")?).unwrap_or(d.trunc),
        out_dir: args.out.clone().or(out_file.map(PathBuf::from)).unwrap_or(d.out_dir),
        format,
    })
}

fn file_values(path: Option<&Path>) -> Result<FileValues, ConfigError> {
    Ok(FileValues(match path {
        Some(p) => load_file(p)?,
        None => BTreeMap::new(),
    }))
}

pub fn resolve_sweep(args: &SweepArgs) -> Result<SweepConfig, ConfigError> {
    let mut file = file_values(args.config.as_deref())?;
    let cfg = sweep_from(args, &mut file, DEFAULT_POLE_CAP)?;
    file.finish()?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn resolve_phase(args: &PhaseArgs) -> Result<PhaseConfig, ConfigError> {
    let mut file = file_values(args.sweep.config.as_deref())?;
    let sweep = sweep_from(&args.sweep, &mut file, DEFAULT_PHASE_POLE_CAP)?;
    let cfg = PhaseConfig {
        sweep,
        r_min: args.r_min.or(file.take("r_min")?).unwrap_or(0.05),
        r_max: args.r_max.or(file.take("r_max")?).unwrap_or(3.0),
        r_steps: args.r_steps.or(file.take("r_steps")?).unwrap_or(60),
        g_hi: args.g_hi.or(file.take("g_hi")?).unwrap_or(DEFAULT_G_HI),
    };
    file.finish()?;
    cfg.validate()?;
    Ok(cfg)
}
