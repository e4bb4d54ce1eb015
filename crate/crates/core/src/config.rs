//! Run configuration: flat `key = value` lines, `#` starts a comment.
//!
//! ```text
//! problem = soliton
//! nx = 1001
//! h = 0.1
//! t_end = 5
//! frames = 10
//! scheme = 2shoc
//! bc = msd
//! ```
//!
//! Every error names the key it came from.

use std::path::PathBuf;
use std::str::FromStr;

use crate::boundary::BoundaryKind;
use crate::error::{Error, Result};
use crate::field::{GridSpec, Precision};
use crate::problems::{SolitonParams, VortexParams, VortexRingParams};
use crate::stability::{stability_bounds, StabilityReport};
use crate::stencil::SchemeKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Soliton,
    Vortex2d,
    VortexRing,
}

impl ProblemKind {
    pub fn dim(self) -> usize {
        match self {
            ProblemKind::Soliton => 1,
            ProblemKind::Vortex2d => 2,
            ProblemKind::VortexRing => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Soliton => "soliton",
            ProblemKind::Vortex2d => "vortex2d",
            ProblemKind::VortexRing => "vortex_ring",
        }
    }
}

impl FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "soliton" => Ok(ProblemKind::Soliton),
            "vortex2d" | "vortex" => Ok(ProblemKind::Vortex2d),
            "vortex_ring" | "ring" => Ok(ProblemKind::VortexRing),
            other => Err(format!("unknown problem `{other}` (expected soliton, vortex2d or vortex_ring)")),
        }
    }
}

/// Everything a run needs, as written by the user. Unset optional values are
/// filled in by [`RunConfig::resolve`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub counts: Option<Vec<usize>>,
    pub h: Option<f64>,
    /// Lower corner of the grid; centred on the origin when unset.
    pub origin: Option<Vec<f64>>,
    pub a: f64,
    pub s: f64,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub chunk_size: Option<u64>,
    pub frames: u64,
    pub scheme: SchemeKind,
    pub bc: BoundaryKind,
    pub precision: Precision,
    pub tile: Option<Vec<usize>>,
    pub workers: usize,
    pub out: PathBuf,
    pub force_dt: bool,
    pub csv: bool,
    pub eps_div: Option<f64>,
    pub soliton: SolitonParams,
    pub vortex: VortexParams,
    pub ring_radius: f64,
    pub ring_c: Option<f64>,
    pub ring_omega: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: ProblemKind::Soliton,
            counts: None,
            h: None,
            origin: None,
            a: 1.0,
            s: -1.0,
            dt: None,
            t_end: None,
            chunk_size: None,
            frames: 10,
            scheme: SchemeKind::Shoc2,
            bc: BoundaryKind::Msd,
            precision: Precision::Double,
            tile: None,
            workers: 1,
            out: PathBuf::from("out"),
            force_dt: false,
            csv: false,
            eps_div: None,
            soliton: SolitonParams::standard(),
            vortex: VortexParams { m: 1, omega: -1.0, center: None },
            ring_radius: 5.0,
            ring_c: None,
            ring_omega: -1.0,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse::<T>().map_err(|e| Error::config(key, format!("cannot parse `{value}`: {e}")))
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    let x: f64 = parse(key, value)?;
    if !x.is_finite() {
        return Err(Error::config(key, format!("`{value}` is not a finite number")));
    }
    Ok(x)
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(Error::config(key, format!("expected true or false, got `{other}`"))),
    }
}

/// Parses `AxBxC` into extents.
pub fn parse_extents(key: &str, value: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = value.trim().split(['x', 'X', ',']).collect();
    if parts.is_empty() || parts.len() > 3 {
        return Err(Error::config(key, format!("expected one to three extents like 16x16, got `{value}`")));
    }
    parts.iter().map(|p| parse::<usize>(key, p)).collect()
}

impl RunConfig {
    /// Parses a whole configuration file, starting from defaults.
    pub fn from_str_lines(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        // `problem` decides which defaults other keys adjust, so it is applied first.
        let mut entries = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(format!("line {}", n + 1), format!("expected key = value, got `{line}`")));
            };
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::config(format!("line {}", n + 1), "empty key"));
            }
            entries.push((key.to_string(), value.trim().to_string()));
        }
        for (key, value) in entries.iter().filter(|(k, _)| k == "problem") {
            cfg.set(key, value)?;
        }
        for (key, value) in entries.iter().filter(|(k, _)| k != "problem") {
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_str_lines(&text)
    }

    /// Sets one key. Used by the file parser and by command-line overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "problem" => self.problem = parse(key, value)?,
            "nx" | "ny" | "nz" => {
                let axis = match key {
                    "nx" => 0,
                    "ny" => 1,
                    _ => 2,
                };
                let n: usize = parse(key, value)?;
                let counts = self.counts.get_or_insert_with(Vec::new);
                if counts.len() <= axis {
                    counts.resize(axis + 1, 0);
                }
                counts[axis] = n;
            }
            "grid" => self.counts = Some(parse_extents(key, value)?),
            "h" => self.h = Some(parse_f64(key, value)?),
            "x0" | "y0" | "z0" => {
                let axis = match key {
                    "x0" => 0,
                    "y0" => 1,
                    _ => 2,
                };
                let x = parse_f64(key, value)?;
                let origin = self.origin.get_or_insert_with(Vec::new);
                if origin.len() <= axis {
                    origin.resize(axis + 1, f64::NAN);
                }
                origin[axis] = x;
            }
            "a" => self.a = parse_f64(key, value)?,
            "s" => self.s = parse_f64(key, value)?,
            "dt" | "k" => self.dt = Some(parse_f64(key, value)?),
            "t_end" => self.t_end = Some(parse_f64(key, value)?),
            "chunk_size" => self.chunk_size = Some(parse(key, value)?),
            "frames" => self.frames = parse(key, value)?,
            "scheme" => self.scheme = parse(key, value)?,
            "bc" => self.bc = parse(key, value)?,
            "precision" => self.precision = parse(key, value)?,
            "tile" => self.tile = Some(parse_extents(key, value)?),
            "workers" => self.workers = parse(key, value)?,
            "out" => self.out = PathBuf::from(value.trim()),
            "force_dt" => self.force_dt = parse_bool(key, value)?,
            "csv" => self.csv = parse_bool(key, value)?,
            "eps_div" => self.eps_div = Some(parse_f64(key, value)?),
            "soliton.c" => self.soliton.c = parse_f64(key, value)?,
            "soliton.omega" => self.soliton.omega = parse_f64(key, value)?,
            "vortex.m" => self.vortex.m = parse(key, value)?,
            "vortex.omega" => self.vortex.omega = parse_f64(key, value)?,
            "vortex.cx" | "vortex.cy" => {
                let x = parse_f64(key, value)?;
                let c = self.vortex.center.get_or_insert([f64::NAN; 2]);
                c[(key == "vortex.cy") as usize] = x;
            }
            "ring.radius" => self.ring_radius = parse_f64(key, value)?,
            "ring.c" => self.ring_c = Some(parse_f64(key, value)?),
            "ring.omega" => self.ring_omega = parse_f64(key, value)?,
            other => return Err(Error::config(other, "unknown key")),
        }
        Ok(())
    }

    /// Default point counts and spacing for each problem.
    fn default_grid(&self) -> (Vec<usize>, f64) {
        match self.problem {
            ProblemKind::Soliton => (vec![1001], 0.1),
            ProblemKind::Vortex2d => (vec![70, 70], 0.25),
            ProblemKind::VortexRing => (vec![29, 29, 29], 1.5),
        }
    }

    pub fn ring_params(&self) -> Result<VortexRingParams> {
        let c = self.ring_c.ok_or_else(|| Error::config("ring.c", "vortex ring needs its back-flow velocity"))?;
        Ok(VortexRingParams { radius: self.ring_radius, c_backflow: c, omega: self.ring_omega, center: None })
    }

    /// Builds the grid alone, checking only the keys that describe it.
    pub fn resolve_grid(&self) -> Result<GridSpec> {
        let dim = self.problem.dim();
        let (default_counts, default_h) = self.default_grid();
        let counts = self.counts.clone().unwrap_or(default_counts);
        if counts.len() != dim {
            return Err(Error::config("nx", format!("{} needs {dim} point counts, got {}", self.problem.name(), counts.len())));
        }
        for (axis, &n) in counts.iter().enumerate() {
            if n < 3 {
                return Err(Error::config(["nx", "ny", "nz"][axis], format!("need at least 3 points, got {n}")));
            }
        }
        let h = self.h.unwrap_or(default_h);
        if h <= 0.0 {
            return Err(Error::config("h", format!("must be positive, got {h}")));
        }
        match &self.origin {
            None => GridSpec::centered(&counts, h),
            Some(origin) => {
                if origin.len() != dim || origin.iter().any(|x| x.is_nan()) {
                    return Err(Error::config("x0", format!("{} needs all {dim} origin coordinates", self.problem.name())));
                }
                GridSpec::new(&counts, h, origin)
            }
        }
        .map_err(|e| Error::config("nx", e.to_string()))
    }

    /// Validates the configuration and derives grid, time step and chunking.
    pub fn resolve(&self) -> Result<ResolvedRun> {
        let dim = self.problem.dim();
        let grid = self.resolve_grid()?;
        let h = grid.h();
        if self.a <= 0.0 {
            return Err(Error::config("a", format!("must be positive, got {}", self.a)));
        }
        match self.problem {
            ProblemKind::Soliton => self.soliton.validate(self.a, self.s).map_err(|e| Error::config("soliton.omega", e.to_string()))?,
            ProblemKind::Vortex2d => {
                if self.vortex.center.is_some_and(|c| c.iter().any(|x| x.is_nan())) {
                    return Err(Error::config("vortex.cx", "set both vortex.cx and vortex.cy"));
                }
            }
            ProblemKind::VortexRing => {
                self.ring_params()?;
            }
        }
        if let Some(eps) = self.eps_div {
            if eps < 0.0 {
                return Err(Error::config("eps_div", format!("must be non-negative, got {eps}")));
            }
        }
        if self.workers == 0 {
            return Err(Error::config("workers", "must be at least 1"));
        }
        if let Some(tile) = &self.tile {
            if tile.len() != dim {
                return Err(Error::config("tile", format!("{dim}D grid needs {dim} tile extents, got {}", tile.len())));
            }
            if tile.iter().any(|&t| t < 2) {
                return Err(Error::config("tile", "every tile extent must be at least 2"));
            }
        }
        let stability = stability_bounds(dim, self.a, h, self.scheme).map_err(|e| Error::config("h", e.to_string()))?;
        let (dt, chunk_size) = self.time_stepping(&stability)?;
        if dt > stability.k_recommended && !self.force_dt {
            return Err(Error::config(
                "dt",
                format!(
                    "time step {dt} exceeds the recommended bound k_recommended = {:.7} (linear limit {:.7}); set force_dt to run anyway",
                    stability.k_recommended, stability.k_max_linear
                ),
            ));
        }
        Ok(ResolvedRun { grid, dt, chunk_size, frames: self.frames, stability })
    }

    fn time_stepping(&self, stability: &StabilityReport) -> Result<(f64, u64)> {
        if let Some(dt) = self.dt {
            if dt <= 0.0 {
                return Err(Error::config("dt", format!("must be positive, got {dt}")));
            }
        }
        if let Some(t) = self.t_end {
            if t < 0.0 {
                return Err(Error::config("t_end", format!("must be non-negative, got {t}")));
            }
        }
        let frames = self.frames;
        if frames == 0 {
            if self.chunk_size.is_some_and(|c| c != 0) {
                return Err(Error::config("chunk_size", "must be 0 when frames = 0"));
            }
            return Ok((self.dt.unwrap_or(stability.k_recommended), 0));
        }
        match (self.chunk_size, self.dt, self.t_end) {
            (Some(chunk), Some(dt), t_end) => {
                if let Some(t) = t_end {
                    let implied = dt * (chunk * frames) as f64;
                    if (implied - t).abs() > 1e-9 * t.max(1.0) {
                        return Err(Error::config(
                            "t_end",
                            format!("dt·chunk_size·frames = {implied} disagrees with t_end = {t}; drop one of them"),
                        ));
                    }
                }
                Ok((dt, chunk))
            }
            (Some(chunk), None, Some(t)) => {
                if chunk == 0 {
                    return Err(Error::config("chunk_size", "must be positive when frames > 0"));
                }
                Ok((t / (chunk * frames) as f64, chunk))
            }
            (Some(chunk), None, None) => Ok((stability.k_recommended, chunk)),
            (None, dt, Some(t)) => {
                let step = dt.unwrap_or(stability.k_recommended);
                let chunk = ((t / step) / frames as f64).ceil().max(1.0) as u64;
                Ok((dt.unwrap_or(t / (chunk * frames) as f64), chunk))
            }
            (None, _, None) => Err(Error::config("t_end", "set t_end or chunk_size")),
        }
    }
}

/// Derived quantities of a validated configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedRun {
    pub grid: GridSpec,
    pub dt: f64,
    /// Steps between frames.
    pub chunk_size: u64,
    pub frames: u64,
    pub stability: StabilityReport,
}

impl ResolvedRun {
    pub fn total_steps(&self) -> u64 {
        self.chunk_size * self.frames
    }

    pub fn t_end(&self) -> f64 {
        self.total_steps() as f64 * self.dt
    }
}
