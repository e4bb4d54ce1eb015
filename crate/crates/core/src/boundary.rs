//! Boundary conditions in the two forms the schemes need.
//!
//! The time-derivative form supplies `∂Ψ/∂t` at boundary points for every RK4
//! stage. The Laplacian form supplies boundary values of the intermediate field
//! `D` for the first 2SHOC step. MSD reads the already computed value at the
//! inward neighbour, so it must run after the interior pass has finished.

use serde::{Deserialize, Serialize};

use crate::field::{ComplexField, GridSpec, Real, RealField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    /// Boundary values frozen at their initial values.
    Dirichlet,
    /// Modulus-squared Dirichlet: `|Ψ|²` fixed, phase follows the interior.
    Msd,
    /// Laplacian of `Ψ` set to zero on the boundary.
    #[serde(rename = "l0")]
    LaplacianZero,
}

impl BoundaryKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryKind::Dirichlet => "dirichlet",
            BoundaryKind::Msd => "msd",
            BoundaryKind::LaplacianZero => "l0",
        }
    }

    pub fn needs_inward_neighbor(self) -> bool {
        self == BoundaryKind::Msd
    }
}

impl std::fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BoundaryKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dirichlet" | "d" => Ok(BoundaryKind::Dirichlet),
            "msd" => Ok(BoundaryKind::Msd),
            "l0" | "laplacian-zero" | "laplacianzero" => Ok(BoundaryKind::LaplacianZero),
            other => Err(format!("unknown boundary condition `{other}` (expected dirichlet, msd or l0)")),
        }
    }
}

/// Equation coefficients in working precision.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryCoeffs<T> {
    pub a: T,
    pub inv_a: T,
    pub s: T,
    /// Square of the floor on `|Ψ_{b-1}|` for MSD.
    pub eps_div_sq: T,
}

impl<T: Real> BoundaryCoeffs<T> {
    pub fn new(a: f64, s: f64, eps_div: f64) -> Self {
        BoundaryCoeffs {
            a: T::of(a),
            inv_a: T::of(1.0 / a),
            s: T::of(s),
            eps_div_sq: T::of(eps_div * eps_div),
        }
    }
}

/// Values at the inward neighbour `b-1` that MSD needs.
#[derive(Debug, Clone, Copy)]
pub struct InwardValues<T> {
    pub psi: (T, T),
    /// `∂Ψ/∂t` for the time-derivative form, `∇²Ψ` for the Laplacian form.
    pub value: (T, T),
    pub v: T,
}

/// Result of one boundary evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcValue<T> {
    pub value: (T, T),
    /// MSD found `|Ψ_{b-1}|` below the division floor and substituted zero.
    pub floor_hit: bool,
}

impl<T: Real> BcValue<T> {
    fn ok(value: (T, T)) -> Self {
        BcValue { value, floor_hit: false }
    }
    fn floor() -> Self {
        BcValue { value: (T::zero(), T::zero()), floor_hit: true }
    }
}

/// `s|Ψ|² - V`.
#[inline(always)]
pub fn nonlinear_factor<T: Real>(psi: (T, T), v: T, s: T) -> T {
    s * (psi.0 * psi.0 + psi.1 * psi.1) - v
}

/// Time derivative at a boundary point.
///
/// `inward` is only read for MSD and must then hold the interior `∂Ψ/∂t`.
#[inline]
pub fn bc_time_derivative<T: Real>(
    kind: BoundaryKind,
    c: &BoundaryCoeffs<T>,
    psi_b: (T, T),
    v_b: T,
    inward: Option<InwardValues<T>>,
) -> BcValue<T> {
    match kind {
        BoundaryKind::Dirichlet => BcValue::ok((T::zero(), T::zero())),
        BoundaryKind::LaplacianZero => {
            let n = nonlinear_factor(psi_b, v_b, c.s);
            BcValue::ok((-n * psi_b.1, n * psi_b.0))
        }
        BoundaryKind::Msd => {
            let inner = inward.expect("MSD needs the inward neighbour");
            let (pr, pi) = inner.psi;
            let mod_sq = pr * pr + pi * pi;
            if !(mod_sq >= c.eps_div_sq) {
                return BcValue::floor();
            }
            let (fr, fi) = inner.value;
            // Im[F / Ψ] at the interior neighbour.
            let w = (fi * pr - fr * pi) / mod_sq;
            BcValue::ok((-w * psi_b.1, w * psi_b.0))
        }
    }
}

/// Laplacian of `Ψ` at a boundary point, used as the boundary value of `D`.
///
/// `inward` is only read for MSD and must then hold the interior `∇²Ψ`.
#[inline]
pub fn bc_laplacian<T: Real>(
    kind: BoundaryKind,
    c: &BoundaryCoeffs<T>,
    psi_b: (T, T),
    v_b: T,
    inward: Option<InwardValues<T>>,
) -> BcValue<T> {
    match kind {
        BoundaryKind::LaplacianZero => BcValue::ok((T::zero(), T::zero())),
        BoundaryKind::Dirichlet => {
            let factor = -c.inv_a * nonlinear_factor(psi_b, v_b, c.s);
            BcValue::ok((factor * psi_b.0, factor * psi_b.1))
        }
        BoundaryKind::Msd => {
            let inner = inward.expect("MSD needs the inward neighbour");
            let (pr, pi) = inner.psi;
            let mod_sq = pr * pr + pi * pi;
            if !(mod_sq >= c.eps_div_sq) {
                return BcValue::floor();
            }
            let (lr, li) = inner.value;
            // Im[i ∇²Ψ / Ψ] = Re[∇²Ψ / Ψ] at the interior neighbour.
            let q = (lr * pr + li * pi) / mod_sq;
            let n_inner = nonlinear_factor(inner.psi, inner.v, c.s);
            let n_b = nonlinear_factor(psi_b, v_b, c.s);
            let factor = q + c.inv_a * (n_inner - n_b);
            BcValue::ok((factor * psi_b.0, factor * psi_b.1))
        }
    }
}

/// Boundary points of a grid (or of a sub-box of it) paired with their
/// inward neighbours.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BoundaryPoints {
    pub points: Vec<(usize, usize)>,
}

impl BoundaryPoints {
    pub fn new(grid: &GridSpec) -> Self {
        Self::within(grid, [0; 3], grid.counts())
    }

    /// Boundary points whose coordinates lie in `lo..hi` on every axis.
    pub fn within(grid: &GridSpec, lo: [usize; 3], hi: [usize; 3]) -> Self {
        let mut points = Vec::new();
        for k in lo[2]..hi[2] {
            for j in lo[1]..hi[1] {
                let row_boundary = grid.is_boundary(1.min(grid.nx() - 1), j, k) && grid.dim() > 1;
                for i in lo[0]..hi[0] {
                    // Rows on a y/z face are boundary throughout; otherwise only the x ends.
                    if (row_boundary || i == 0 || i == grid.nx() - 1) && grid.is_boundary(i, j, k) {
                        let (ii, jj, kk) = grid.inward_neighbor(i, j, k);
                        points.push((grid.linear_index(i, j, k), grid.linear_index(ii, jj, kk)));
                    }
                }
            }
        }
        BoundaryPoints { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Fills boundary entries of `d` with the Laplacian form; returns MSD floor hits.
pub fn apply_laplacian_bc<T: Real>(
    kind: BoundaryKind,
    c: &BoundaryCoeffs<T>,
    points: &BoundaryPoints,
    psi: &ComplexField<T>,
    potential: &RealField<T>,
    d: &mut ComplexField<T>,
) -> u64 {
    let mut hits = 0;
    for &(b, inner) in &points.points {
        let inward = kind.needs_inward_neighbor().then(|| InwardValues {
            psi: psi.get(inner),
            value: d.get(inner),
            v: potential.values[inner],
        });
        let out = bc_laplacian(kind, c, psi.get(b), potential.values[b], inward);
        hits += out.floor_hit as u64;
        d.set(b, out.value);
    }
    hits
}

/// Fills boundary entries of `f` with the time-derivative form; returns MSD floor hits.
pub fn apply_time_derivative_bc<T: Real>(
    kind: BoundaryKind,
    c: &BoundaryCoeffs<T>,
    points: &BoundaryPoints,
    psi: &ComplexField<T>,
    potential: &RealField<T>,
    f: &mut ComplexField<T>,
) -> u64 {
    let mut hits = 0;
    for &(b, inner) in &points.points {
        let inward = kind.needs_inward_neighbor().then(|| InwardValues {
            psi: psi.get(inner),
            value: f.get(inner),
            v: potential.values[inner],
        });
        let out = bc_time_derivative(kind, c, psi.get(b), potential.values[b], inward);
        hits += out.floor_hit as u64;
        f.set(b, out.value);
    }
    hits
}
