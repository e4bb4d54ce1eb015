//! Initial conditions and reference solutions.
//!
//! * 1D co-moving dark soliton (an exact solution for `V = 0`, `s < 0`).
//! * 2D dark vortex `f(r) e^{imθ}`, with the radial profile approximated by the
//!   stationary soliton profile `√|Ω/s| tanh(√(|Ω|/2a) r)`.
//! * 3D dark vortex ring: the same approximate vortex placed at cylindrical
//!   radius `d` in the `r-z` half-plane, times a back-flow phase `e^{i c z / 2a}`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ComplexField, GridSpec, Real};

/// Co-moving dark soliton parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolitonParams {
    /// Velocity.
    pub c: f64,
    /// Frequency `Ω`; must share the sign of `s`.
    pub omega: f64,
}

impl SolitonParams {
    /// `c = 0.5`, `Ω = -1`, to be used with `a = 1`, `s = -1`.
    pub fn standard() -> Self {
        SolitonParams { c: 0.5, omega: -1.0 }
    }

    pub fn validate(&self, a: f64, s: f64) -> Result<()> {
        validate_dark(self.omega, a, s)?;
        if !self.c.is_finite() {
            return Err(Error::param("c", "must be finite"));
        }
        Ok(())
    }
}

fn validate_dark(omega: f64, a: f64, s: f64) -> Result<()> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::param("a", format!("must be positive, got {a}")));
    }
    if !(s < 0.0) {
        return Err(Error::param("s", format!("dark solutions need s < 0, got {s}")));
    }
    if !(omega.is_finite() && omega / s > 0.0) {
        return Err(Error::param("omega", format!("Ω/s must be positive, got Ω = {omega}, s = {s}")));
    }
    Ok(())
}

/// Exact dark soliton value at `(x, t)`.
pub fn dark_soliton(x: f64, t: f64, sp: &SolitonParams, a: f64, s: f64) -> Complex64 {
    let amp = (sp.omega / s).abs().sqrt();
    let width = (sp.omega.abs() / (2.0 * a)).sqrt();
    let phase = sp.c / (2.0 * a) * x + (sp.omega - sp.c * sp.c / (4.0 * a)) * t;
    Complex64::from_polar(amp * (width * (x - sp.c * t)).tanh(), phase)
}

/// Samples the soliton at time `t` on a 1D grid.
pub fn soliton_field<T: Real>(grid: GridSpec, t: f64, sp: &SolitonParams, a: f64, s: f64) -> Result<ComplexField<T>> {
    if grid.dim() != 1 {
        return Err(Error::InvalidGrid(format!("soliton needs a 1D grid, got {}D", grid.dim())));
    }
    sp.validate(a, s)?;
    Ok(ComplexField::from_fn(grid, |x, _, _| {
        let z = dark_soliton(x, t, sp, a, s);
        (z.re, z.im)
    }))
}

/// Approximate radial vortex profile.
pub fn vortex_profile(r: f64, omega: f64, a: f64, s: f64) -> f64 {
    (omega / s).abs().sqrt() * ((omega.abs() / (2.0 * a)).sqrt() * r).tanh()
}

/// Length over which the profile heals to its background value.
pub fn healing_length(omega: f64, a: f64) -> f64 {
    (2.0 * a / omega.abs()).sqrt()
}

/// Default centre along one axis: the grid midpoint, moved half a cell when it
/// would land on a grid point.
pub fn default_center(grid: &GridSpec, axis: usize) -> f64 {
    let mid = grid.center(axis);
    if grid.counts()[axis] % 2 == 1 {
        mid + 0.5 * grid.h()
    } else {
        mid
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VortexParams {
    /// Topological charge.
    pub m: i32,
    pub omega: f64,
    /// Core position; `None` uses [`default_center`].
    pub center: Option<[f64; 2]>,
}

impl VortexParams {
    pub fn resolve_center(&self, grid: &GridSpec) -> [f64; 2] {
        self.center.unwrap_or([default_center(grid, 0), default_center(grid, 1)])
    }
}

/// 2D dark vortex initial condition `f(r) e^{imθ}` about the core.
pub fn vortex2d_init<T: Real>(grid: GridSpec, vp: &VortexParams, a: f64, s: f64) -> Result<ComplexField<T>> {
    if grid.dim() != 2 {
        return Err(Error::InvalidGrid(format!("vortex needs a 2D grid, got {}D", grid.dim())));
    }
    if vp.m == 0 {
        return Err(Error::param("m", "topological charge must be non-zero"));
    }
    validate_dark(vp.omega, a, s)?;
    let [xc, yc] = vp.resolve_center(&grid);
    for (axis, c) in [(0, xc), (1, yc)] {
        let lo = grid.origin()[axis];
        let hi = lo + grid.extent(axis);
        if !(c > lo && c < hi) {
            return Err(Error::param("center", format!("core coordinate {c} outside ({lo}, {hi})")));
        }
    }
    let m = vp.m as f64;
    Ok(ComplexField::from_fn(grid, |x, y, _| {
        let (dx, dy) = (x - xc, y - yc);
        let f = vortex_profile(dx.hypot(dy), vp.omega, a, s);
        let theta = dy.atan2(dx);
        let z = Complex64::from_polar(f, m * theta);
        (z.re, z.im)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VortexRingParams {
    /// Ring radius `d`.
    pub radius: f64,
    /// Back-flow velocity `c` (no default).
    pub c_backflow: f64,
    /// Frequency of the core profile.
    pub omega: f64,
    /// Ring centre; `None` uses [`default_center`].
    pub center: Option<[f64; 3]>,
}

impl VortexRingParams {
    pub fn resolve_center(&self, grid: &GridSpec) -> [f64; 3] {
        self.center.unwrap_or([
            default_center(grid, 0),
            default_center(grid, 1),
            default_center(grid, 2),
        ])
    }

    /// Clearance kept between the core and any face: three healing lengths.
    pub fn margin(&self, a: f64) -> f64 {
        3.0 * healing_length(self.omega, a)
    }
}

/// 3D dark vortex ring about an axis parallel to `z`.
pub fn vortex_ring_init<T: Real>(
    grid: GridSpec,
    vr: &VortexRingParams,
    a: f64,
    s: f64,
) -> Result<ComplexField<T>> {
    if grid.dim() != 3 {
        return Err(Error::InvalidGrid(format!("vortex ring needs a 3D grid, got {}D", grid.dim())));
    }
    if !(vr.radius.is_finite() && vr.radius > 0.0) {
        return Err(Error::param("radius", format!("must be positive, got {}", vr.radius)));
    }
    if !vr.c_backflow.is_finite() {
        return Err(Error::param("c_backflow", "must be finite"));
    }
    validate_dark(vr.omega, a, s)?;
    let center = vr.resolve_center(&grid);
    let margin = vr.margin(a);
    for axis in 0..3 {
        let need = if axis < 2 { vr.radius + margin } else { margin };
        let lo = grid.origin()[axis];
        let hi = lo + grid.extent(axis);
        let room = (center[axis] - lo).min(hi - center[axis]);
        if room < need {
            let min_extent = 2.0 * need;
            return Err(Error::DomainTooSmall {
                what: format!(
                    "vortex ring (radius {}, core margin {margin:.3}) overlaps the grid boundary along axis {axis}",
                    vr.radius
                ),
                min_extent,
                min_points: (min_extent / grid.h()).ceil() as usize + 1,
                h: grid.h(),
            });
        }
    }
    let q = vr.c_backflow / (2.0 * a);
    Ok(ComplexField::from_fn(grid, |x, y, z| {
        let rho = (x - center[0]).hypot(y - center[1]);
        let (u, w) = (rho - vr.radius, z - center[2]);
        let f = vortex_profile(u.hypot(w), vr.omega, a, s);
        let value = Complex64::from_polar(f, w.atan2(u) + q * z);
        (value.re, value.im)
    }))
}

/// Pointwise error norms of a field against a reference.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct ErrorNorms {
    pub max_abs: f64,
    pub rms: f64,
}

/// Error of a 1D field against the exact soliton at time `t`.
pub fn soliton_error<T: Real>(
    field: &ComplexField<T>,
    t: f64,
    sp: &SolitonParams,
    a: f64,
    s: f64,
) -> Result<ErrorNorms> {
    let grid = field.grid();
    if grid.dim() != 1 {
        return Err(Error::InvalidGrid("soliton error needs a 1D field".into()));
    }
    let mut max_abs = 0.0f64;
    let mut sum_sq = 0.0f64;
    for i in 0..grid.nx() {
        let exact = dark_soliton(grid.coord(0, i), t, sp, a, s);
        let (re, im) = field.get(i);
        let err = Complex64::new(re.as_f64(), im.as_f64()) - exact;
        max_abs = max_abs.max(err.norm());
        sum_sq += err.norm_sqr();
    }
    Ok(ErrorNorms { max_abs, rms: (sum_sq / grid.nx() as f64).sqrt() })
}

/// Phase of `Ψ` at a point, in `(-π, π]`.
pub fn phase_at<T: Real>(field: &ComplexField<T>, index: usize) -> f64 {
    let (re, im) = field.get(index);
    im.as_f64().atan2(re.as_f64())
}
