//! NLSE right-hand side and the RK4 time stepper.
//!
//! The equation is `i Ψ_t + a ∇²Ψ - V Ψ + s |Ψ|² Ψ = 0`, so
//! `F(Ψ) = i [a ∇²Ψ + (s|Ψ|² - V) Ψ]`, evaluated on split real and imaginary
//! arrays.
//!
//! Two orderings of the same RK4 arithmetic are provided. [`Rk4Schedule::Classic`]
//! keeps a full `K_tmp` array and runs the ten textbook steps.
//! [`Rk4Schedule::LowStorage`] fuses them into four passes, each computing `F`
//! into pass-local storage and immediately applying the update. An extra
//! `Ψ_out` buffer ensures no pass overwrites a value its own stencil still
//! reads. Both produce bit-identical results; the parallel engine uses the
//! low-storage form.

use crate::boundary::{
    apply_laplacian_bc, apply_time_derivative_bc, BoundaryCoeffs, BoundaryKind, BoundaryPoints,
};
use crate::error::{Error, Result};
use crate::field::{ComplexField, GridSpec, Real, RealField};
use crate::stability::{stability_bounds, StabilityReport};
use crate::stencil::{
    cd_laplacian_into, cd_point, for_each_interior_row, shoc2_point, SchemeKind, StencilCoeffs,
    StencilScratch, Strided,
};

/// Coefficients and configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams<T> {
    /// Dispersion coefficient, `a > 0`.
    pub a: f64,
    /// Nonlinearity coefficient.
    pub s: f64,
    /// Time step `k`.
    pub dt: f64,
    pub potential: RealField<T>,
    pub scheme: SchemeKind,
    pub bc: BoundaryKind,
    /// Floor on `|Ψ_{b-1}|` for the MSD division.
    pub eps_div: f64,
}

impl<T: Real> SimParams<T> {
    /// Parameters with zero potential and the precision's default MSD floor.
    pub fn new(
        grid: GridSpec,
        a: f64,
        s: f64,
        dt: f64,
        scheme: SchemeKind,
        bc: BoundaryKind,
    ) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::param("a", format!("must be positive, got {a}")));
        }
        if !s.is_finite() {
            return Err(Error::param("s", "must be finite"));
        }
        if !(dt.is_finite() && dt >= 0.0) {
            return Err(Error::param("dt", format!("must be non-negative, got {dt}")));
        }
        Ok(SimParams {
            a,
            s,
            dt,
            potential: RealField::zeros(grid),
            scheme,
            bc,
            eps_div: T::EPS_DIV,
        })
    }

    pub fn with_potential(mut self, potential: RealField<T>) -> Result<Self> {
        if potential.grid() != self.potential.grid() {
            return Err(Error::InvalidGrid("potential lives on a different grid".into()));
        }
        self.potential = potential;
        Ok(self)
    }

    pub fn with_eps_div(mut self, eps_div: f64) -> Result<Self> {
        if !(eps_div.is_finite() && eps_div >= 0.0) {
            return Err(Error::param("eps_div", format!("must be non-negative, got {eps_div}")));
        }
        self.eps_div = eps_div;
        Ok(self)
    }

    pub fn grid(&self) -> &GridSpec {
        self.potential.grid()
    }

    pub fn stability(&self) -> Result<StabilityReport> {
        let g = self.grid();
        stability_bounds(g.dim(), self.a, g.h(), self.scheme)
    }

    /// Refuses a step above the recommended bound unless `force` is set.
    pub fn check_time_step(&self, force: bool) -> Result<StabilityReport> {
        let report = self.stability()?;
        if !force && self.dt > report.k_recommended {
            return Err(Error::StepAboveBound {
                dt: self.dt,
                k_recommended: report.k_recommended,
                k_max: report.k_max_linear,
            });
        }
        Ok(report)
    }
}

/// All per-run constants in working precision.
#[derive(Debug, Clone, Copy)]
pub struct StepCoeffs<T> {
    pub stencil: StencilCoeffs<T>,
    pub bc: BoundaryCoeffs<T>,
    pub a: T,
    pub s: T,
    pub k: T,
    pub half_k: T,
    pub sixth_k: T,
    pub two: T,
}

impl<T: Real> StepCoeffs<T> {
    pub fn new(params: &SimParams<T>) -> Self {
        StepCoeffs {
            stencil: StencilCoeffs::new(params.grid()),
            bc: BoundaryCoeffs::new(params.a, params.s, params.eps_div),
            a: T::of(params.a),
            s: T::of(params.s),
            k: T::of(params.dt),
            half_k: T::of(params.dt / 2.0),
            sixth_k: T::of(params.dt / 6.0),
            two: T::of(2.0),
        }
    }
}

/// `F(Ψ)` at one point from its Laplacian, value and potential.
#[inline(always)]
pub fn rhs_point<T: Real>(lap: (T, T), psi: (T, T), v: T, a: T, s: T) -> (T, T) {
    let (re, im) = psi;
    let m = re * re + im * im;
    let f_re = -a * lap.1 - s * m * im + v * im;
    let f_im = a * lap.0 + s * m * re - v * re;
    (f_re, f_im)
}

/// Which pass of the low-storage schedule is running, and where it writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// `F(Ψ)`: `K_tot = k_tmp`, `Ψ_tmp = Ψ + k/2 k_tmp`.
    First,
    /// `F(Ψ_tmp)`: `K_tot += 2 k_tmp`, `Ψ_out = Ψ + k/2 k_tmp`.
    Second,
    /// `F(Ψ_out)`: `K_tot += 2 k_tmp`, `Ψ_tmp = Ψ + k k_tmp`.
    Third,
    /// `F(Ψ_tmp)`: `Ψ = Ψ + k/6 (K_tot + k_tmp)`.
    Fourth,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::First, Stage::Second, Stage::Third, Stage::Fourth];
}

/// Low-storage update at one point. Returns the new `(K_tot, output)` where the
/// output is `Ψ_tmp`, `Ψ_out` or `Ψ` depending on the stage.
#[inline(always)]
pub fn stage_update<T: Real>(
    stage: Stage,
    c: &StepCoeffs<T>,
    psi_n: T,
    k_tot: T,
    k_tmp: T,
) -> (T, T) {
    match stage {
        Stage::First => (k_tmp, psi_n + c.half_k * k_tmp),
        Stage::Second => {
            let kt = k_tot + c.two * k_tmp;
            (kt, psi_n + c.half_k * k_tmp)
        }
        Stage::Third => {
            let kt = k_tot + c.two * k_tmp;
            (kt, psi_n + c.k * k_tmp)
        }
        Stage::Fourth => (k_tot, psi_n + c.sixth_k * (k_tot + k_tmp)),
    }
}

/// Per-run counters surfaced in the summary.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Diagnostics {
    /// Boundary evaluations where MSD hit the division floor, summed over the run.
    pub msd_floor_hits: u64,
    /// Same count for the most recent step alone.
    pub last_step_floor_hits: u64,
}

/// Solution plus the RK4 work arrays.
#[derive(Debug, Clone)]
pub struct IntegratorState<T> {
    pub psi: ComplexField<T>,
    pub k_tot: ComplexField<T>,
    pub psi_tmp: ComplexField<T>,
    pub psi_out: ComplexField<T>,
    /// Stage derivative; a full array for the classic schedule, the published
    /// copy of the pass-local values otherwise.
    pub k_tmp: ComplexField<T>,
    pub d_scratch: Option<StencilScratch<T>>,
    pub step_count: u64,
    pub time: f64,
    pub diagnostics: Diagnostics,
    pub(crate) boundary: BoundaryPoints,
}

impl<T: Real> IntegratorState<T> {
    pub fn new(psi: ComplexField<T>, scheme: SchemeKind) -> Self {
        let grid = *psi.grid();
        IntegratorState {
            k_tot: ComplexField::zeros(grid),
            psi_tmp: ComplexField::zeros(grid),
            psi_out: ComplexField::zeros(grid),
            k_tmp: ComplexField::zeros(grid),
            d_scratch: (scheme == SchemeKind::Shoc2).then(|| StencilScratch::new(grid)),
            step_count: 0,
            time: 0.0,
            diagnostics: Diagnostics::default(),
            boundary: BoundaryPoints::new(&grid),
            psi,
        }
    }

    /// Restarts the clock from a known step count.
    pub fn at_step(mut self, step_count: u64, dt: f64) -> Self {
        self.step_count = step_count;
        self.time = step_count as f64 * dt;
        self
    }

    pub fn grid(&self) -> &GridSpec {
        self.psi.grid()
    }

    pub fn boundary_points(&self) -> &BoundaryPoints {
        &self.boundary
    }

    pub(crate) fn ensure_scratch(&mut self, scheme: SchemeKind) {
        if scheme == SchemeKind::Shoc2 && self.d_scratch.is_none() {
            self.d_scratch = Some(StencilScratch::new(*self.psi.grid()));
        }
    }

    pub(crate) fn finish_step(&mut self, dt: f64, hits: u64) -> Result<()> {
        self.step_count += 1;
        self.time = self.step_count as f64 * dt;
        self.diagnostics.last_step_floor_hits = hits;
        self.diagnostics.msd_floor_hits += hits;
        Ok(())
    }
}

/// Fills `d` with the CD Laplacian of `psi` and its boundary values.
fn compute_d<T: Real>(
    params: &SimParams<T>,
    c: &StepCoeffs<T>,
    boundary: &BoundaryPoints,
    psi: &ComplexField<T>,
    d: &mut StencilScratch<T>,
) -> u64 {
    cd_laplacian_into(psi, &mut d.d);
    apply_laplacian_bc(params.bc, &c.bc, boundary, psi, &params.potential, &mut d.d)
}

/// Writes `F(psi)` into `out`, interior first and boundary second.
fn compute_f<T: Real>(
    params: &SimParams<T>,
    c: &StepCoeffs<T>,
    boundary: &BoundaryPoints,
    psi: &ComplexField<T>,
    d: Option<&mut StencilScratch<T>>,
    out: &mut ComplexField<T>,
) -> u64 {
    let grid = *psi.grid();
    let v = &params.potential.values;
    let mut hits = 0;
    match (params.scheme, d) {
        (SchemeKind::Shoc2, Some(d)) => {
            hits += compute_d(params, c, boundary, psi, d);
            let d = &*d;
            for_each_interior_row(&grid, |start, len| {
                for idx in start..start + len {
                    let lap = (
                        shoc2_point(
                            &c.stencil,
                            &Strided::on_grid(&psi.re, &grid, idx),
                            &Strided::on_grid(&d.d.re, &grid, idx),
                        ),
                        shoc2_point(
                            &c.stencil,
                            &Strided::on_grid(&psi.im, &grid, idx),
                            &Strided::on_grid(&d.d.im, &grid, idx),
                        ),
                    );
                    out.set(idx, rhs_point(lap, psi.get(idx), v[idx], c.a, c.s));
                }
            });
        }
        (SchemeKind::Shoc2, None) => panic!("2SHOC needs D scratch"),
        (SchemeKind::Cd, _) => {
            for_each_interior_row(&grid, |start, len| {
                for idx in start..start + len {
                    let lap = (
                        cd_point(&c.stencil, &Strided::on_grid(&psi.re, &grid, idx)),
                        cd_point(&c.stencil, &Strided::on_grid(&psi.im, &grid, idx)),
                    );
                    out.set(idx, rhs_point(lap, psi.get(idx), v[idx], c.a, c.s));
                }
            });
        }
    }
    hits + apply_time_derivative_bc(params.bc, &c.bc, boundary, psi, &params.potential, out)
}

/// `F(Ψ)` over the whole grid: interior from the scheme, boundary from the
/// boundary condition. Returns the number of MSD floor hits.
pub fn f_rhs<T: Real>(psi: &ComplexField<T>, params: &SimParams<T>, output: &mut ComplexField<T>) -> u64 {
    let c = StepCoeffs::new(params);
    let boundary = BoundaryPoints::new(psi.grid());
    let mut d = (params.scheme == SchemeKind::Shoc2).then(|| StencilScratch::new(*psi.grid()));
    compute_f(params, &c, &boundary, psi, d.as_mut(), output)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rk4Schedule {
    /// Ten-step form with a stored `K_tmp` array.
    Classic,
    /// Four fused passes with `Ψ_out` double buffering.
    #[default]
    LowStorage,
}

fn set_combination<T: Real>(out: &mut [T], base: &[T], scale: T, dir: &[T]) {
    for ((o, b), d) in out.iter_mut().zip(base).zip(dir) {
        *o = *b + scale * *d;
    }
}

fn accumulate_twice<T: Real>(acc: &mut [T], two: T, x: &[T]) {
    for (a, v) in acc.iter_mut().zip(x) {
        *a = *a + two * *v;
    }
}

fn classic_step<T: Real>(state: &mut IntegratorState<T>, params: &SimParams<T>, c: &StepCoeffs<T>) -> u64 {
    let IntegratorState { psi, k_tot, psi_tmp, k_tmp, d_scratch, boundary, .. } = state;
    let mut hits = 0;
    // 1) K_tot = F(Ψ)
    hits += compute_f(params, c, boundary, psi, d_scratch.as_mut(), k_tot);
    // 2) Ψ_tmp = Ψ + k/2 K_tot
    set_combination(&mut psi_tmp.re, &psi.re, c.half_k, &k_tot.re);
    set_combination(&mut psi_tmp.im, &psi.im, c.half_k, &k_tot.im);
    // 3) K_tmp = F(Ψ_tmp)
    hits += compute_f(params, c, boundary, psi_tmp, d_scratch.as_mut(), k_tmp);
    // 4) K_tot = K_tot + 2 K_tmp
    accumulate_twice(&mut k_tot.re, c.two, &k_tmp.re);
    accumulate_twice(&mut k_tot.im, c.two, &k_tmp.im);
    // 5) Ψ_tmp = Ψ + k/2 K_tmp
    set_combination(&mut psi_tmp.re, &psi.re, c.half_k, &k_tmp.re);
    set_combination(&mut psi_tmp.im, &psi.im, c.half_k, &k_tmp.im);
    // 6) K_tmp = F(Ψ_tmp)
    hits += compute_f(params, c, boundary, psi_tmp, d_scratch.as_mut(), k_tmp);
    // 7) K_tot = K_tot + 2 K_tmp
    accumulate_twice(&mut k_tot.re, c.two, &k_tmp.re);
    accumulate_twice(&mut k_tot.im, c.two, &k_tmp.im);
    // 8) Ψ_tmp = Ψ + k K_tmp
    set_combination(&mut psi_tmp.re, &psi.re, c.k, &k_tmp.re);
    set_combination(&mut psi_tmp.im, &psi.im, c.k, &k_tmp.im);
    // 9) K_tmp = F(Ψ_tmp)
    hits += compute_f(params, c, boundary, psi_tmp, d_scratch.as_mut(), k_tmp);
    // 10) Ψ = Ψ + k/6 (K_tot + K_tmp)
    for (p, (kt, kk)) in psi.re.iter_mut().zip(k_tot.re.iter().zip(&k_tmp.re)) {
        *p = *p + c.sixth_k * (*kt + *kk);
    }
    for (p, (kt, kk)) in psi.im.iter_mut().zip(k_tot.im.iter().zip(&k_tmp.im)) {
        *p = *p + c.sixth_k * (*kt + *kk);
    }
    hits
}

fn apply_stage<T: Real>(
    stage: Stage,
    c: &StepCoeffs<T>,
    psi: &mut ComplexField<T>,
    k_tot: &mut ComplexField<T>,
    k_tmp: &ComplexField<T>,
    out: Option<&mut ComplexField<T>>,
) {
    match out {
        Some(out) => {
            for idx in 0..psi.len() {
                let (kr, or) = stage_update(stage, c, psi.re[idx], k_tot.re[idx], k_tmp.re[idx]);
                let (ki, oi) = stage_update(stage, c, psi.im[idx], k_tot.im[idx], k_tmp.im[idx]);
                k_tot.set(idx, (kr, ki));
                out.set(idx, (or, oi));
            }
        }
        None => {
            for idx in 0..psi.len() {
                let (_, or) = stage_update(stage, c, psi.re[idx], k_tot.re[idx], k_tmp.re[idx]);
                let (_, oi) = stage_update(stage, c, psi.im[idx], k_tot.im[idx], k_tmp.im[idx]);
                psi.set(idx, (or, oi));
            }
        }
    }
}

fn low_storage_step<T: Real>(state: &mut IntegratorState<T>, params: &SimParams<T>, c: &StepCoeffs<T>) -> u64 {
    let IntegratorState { psi, k_tot, psi_tmp, psi_out, k_tmp, d_scratch, boundary, .. } = state;
    let mut hits = 0;
    hits += compute_f(params, c, boundary, psi, d_scratch.as_mut(), k_tmp);
    apply_stage(Stage::First, c, psi, k_tot, k_tmp, Some(psi_tmp));
    hits += compute_f(params, c, boundary, psi_tmp, d_scratch.as_mut(), k_tmp);
    apply_stage(Stage::Second, c, psi, k_tot, k_tmp, Some(psi_out));
    hits += compute_f(params, c, boundary, psi_out, d_scratch.as_mut(), k_tmp);
    apply_stage(Stage::Third, c, psi, k_tot, k_tmp, Some(psi_tmp));
    hits += compute_f(params, c, boundary, psi_tmp, d_scratch.as_mut(), k_tmp);
    apply_stage(Stage::Fourth, c, psi, k_tot, k_tmp, None);
    hits
}

fn check_grid<T: Real>(state: &IntegratorState<T>, params: &SimParams<T>) -> Result<()> {
    if state.grid() != params.grid() {
        return Err(Error::InvalidGrid("state and parameters live on different grids".into()));
    }
    Ok(())
}

/// Advances the state by one time step using the given schedule.
pub fn rk4_step_with<T: Real>(
    state: &mut IntegratorState<T>,
    params: &SimParams<T>,
    schedule: Rk4Schedule,
) -> Result<()> {
    check_grid(state, params)?;
    state.ensure_scratch(params.scheme);
    let c = StepCoeffs::new(params);
    let hits = match schedule {
        Rk4Schedule::Classic => classic_step(state, params, &c),
        Rk4Schedule::LowStorage => low_storage_step(state, params, &c),
    };
    state.finish_step(params.dt, hits)?;
    if !state.psi.is_finite() {
        return Err(Error::Diverged { step: state.step_count });
    }
    Ok(())
}

/// Advances the state by one time step.
pub fn rk4_step<T: Real>(state: &mut IntegratorState<T>, params: &SimParams<T>) -> Result<()> {
    rk4_step_with(state, params, Rk4Schedule::LowStorage)
}

/// Runs `n_steps` serial RK4 steps.
pub fn integrate_chunk_with<T: Real>(
    state: &mut IntegratorState<T>,
    params: &SimParams<T>,
    n_steps: u64,
    schedule: Rk4Schedule,
) -> Result<()> {
    for _ in 0..n_steps {
        rk4_step_with(state, params, schedule)?;
    }
    Ok(())
}

pub fn integrate_chunk<T: Real>(state: &mut IntegratorState<T>, params: &SimParams<T>, n_steps: u64) -> Result<()> {
    integrate_chunk_with(state, params, n_steps, Rk4Schedule::LowStorage)
}
