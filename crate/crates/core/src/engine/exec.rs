//! Barrier-synchronised tiled execution of the low-storage RK4 step.
//!
//! Every worker owns a fixed set of tiles for the whole chunk. Each compute
//! phase runs as two sub-phases, interior points then boundary points, with a
//! barrier after each. Workers write only points of their own tiles; the
//! schedule in [`super::schedule`] lists what each sub-phase may read across
//! tiles, and no sub-phase writes anything another tile reads in it.
//!
//! Shared arrays are reached through raw pointers. Soundness rests on the
//! disjoint-write discipline above and on the barriers ordering every write
//! before any cross-tile read of it.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Barrier;

use crate::boundary::{bc_laplacian, bc_time_derivative, BoundaryKind, BoundaryPoints, InwardValues};
use crate::error::{Error, Result};
use crate::field::{ComplexField, GridSpec, Real};
use crate::integrator::{rhs_point, stage_update, IntegratorState, SimParams, Stage, StepCoeffs};
use crate::stencil::{cd_point, shoc2_point, Neighborhood, SchemeKind, Strided};

use super::plan::{Tile, TilePlan};
use super::schedule::{stage_input, stage_output, FieldId};

/// How interior stencils reach neighbouring values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HaloMode {
    /// Copy each tile plus its halo into worker-local buffers first.
    #[default]
    Scratch,
    /// Read the shared arrays in place.
    Direct,
}

/// Order of the two sub-phases inside a compute phase.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SubPhaseOrder {
    #[default]
    InteriorFirst,
    /// Wrong on purpose: boundary values read stale interior results.
    BoundaryFirst,
}

/// Worker-local buffer needs of the scratch halo mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScratchUsage {
    /// Arrays live during a compute-D sub-phase.
    pub compute_d_arrays: usize,
    /// Arrays live during a compute-F sub-phase.
    pub compute_f_arrays: usize,
    /// Length of each array: the largest tile-plus-halo volume.
    pub points_per_array: usize,
}

impl ScratchUsage {
    pub fn bytes_per_worker(&self, bytes_per_value: usize) -> usize {
        self.compute_d_arrays.max(self.compute_f_arrays) * self.points_per_array * bytes_per_value
    }
}

/// Counters gathered while running a chunk.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ChunkStats {
    pub steps: u64,
    pub floor_hits: u64,
    /// Most scratch arrays any worker had live in one compute-D sub-phase.
    pub scratch_d_arrays: usize,
    /// Same for compute-F sub-phases.
    pub scratch_f_arrays: usize,
    /// Barrier waits per worker per step.
    pub barriers_per_step: usize,
}

#[derive(Debug, Clone)]
pub struct Engine {
    plan: TilePlan,
    halo: HaloMode,
    order: SubPhaseOrder,
}

impl Engine {
    pub fn new(plan: TilePlan) -> Self {
        Engine { plan, halo: HaloMode::default(), order: SubPhaseOrder::default() }
    }

    pub fn with_halo_mode(mut self, halo: HaloMode) -> Self {
        self.halo = halo;
        self
    }

    #[doc(hidden)]
    pub fn with_sub_phase_order(mut self, order: SubPhaseOrder) -> Self {
        self.order = order;
        self
    }

    pub fn plan(&self) -> &TilePlan {
        &self.plan
    }

    pub fn halo_mode(&self) -> HaloMode {
        self.halo
    }

    pub fn scratch_usage(&self, scheme: SchemeKind) -> ScratchUsage {
        match self.halo {
            HaloMode::Direct => ScratchUsage { compute_d_arrays: 0, compute_f_arrays: 0, points_per_array: 0 },
            HaloMode::Scratch => ScratchUsage {
                compute_d_arrays: if scheme == SchemeKind::Shoc2 { 2 } else { 0 },
                compute_f_arrays: if scheme == SchemeKind::Shoc2 { 7 } else { 5 },
                points_per_array: self.plan.max_halo_volume(),
            },
        }
    }

    /// Advances `state` by `n_steps` steps. Results are bit-identical to the
    /// serial low-storage integrator for every tiling and worker count.
    pub fn integrate_chunk<T: Real>(
        &self,
        state: &mut IntegratorState<T>,
        params: &SimParams<T>,
        n_steps: u64,
    ) -> Result<ChunkStats> {
        if state.grid() != params.grid() || state.grid() != self.plan.grid() {
            return Err(Error::InvalidGrid("state, parameters and tile plan live on different grids".into()));
        }
        state.ensure_scratch(params.scheme);
        let grid = *state.grid();
        let coeffs = StepCoeffs::new(params);
        let works: Vec<TileWork> = self.plan.tiles().iter().map(|t| TileWork::new(&grid, *t)).collect();
        let bufs = Buffers::new(state);
        let ctx = Ctx {
            grid,
            coeffs,
            bc: params.bc,
            scheme: params.scheme,
            v: &params.potential.values,
            bufs,
            halo: self.halo,
            order: self.order,
            works: &works,
            halo_volume: self.plan.max_halo_volume(),
        };
        let workers = self.plan.worker_count();
        let barrier = Barrier::new(workers);
        let diverged = AtomicBool::new(false);
        let outcomes: Vec<WorkerOutcome> = if workers == 1 {
            vec![ctx.run_worker(&self.plan, 0, n_steps, &barrier, &diverged)]
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = (1..workers)
                    .map(|w| {
                        let (ctx, plan, barrier, diverged) = (&ctx, &self.plan, &barrier, &diverged);
                        scope.spawn(move || ctx.run_worker(plan, w, n_steps, barrier, diverged))
                    })
                    .collect();
                let mut out = vec![ctx.run_worker(&self.plan, 0, n_steps, &barrier, &diverged)];
                out.extend(handles.into_iter().map(|h| h.join().expect("worker panicked")));
                out
            })
        };

        let steps = outcomes[0].steps;
        debug_assert!(outcomes.iter().all(|o| o.steps == steps));
        let total: u64 = outcomes.iter().map(|o| o.floor_hits).sum();
        let last: u64 = outcomes.iter().map(|o| o.last_step_hits).sum();
        state.step_count += steps;
        state.time = state.step_count as f64 * params.dt;
        state.diagnostics.msd_floor_hits += total;
        if steps > 0 {
            state.diagnostics.last_step_floor_hits = last;
        }
        let stats = ChunkStats {
            steps,
            floor_hits: total,
            scratch_d_arrays: outcomes.iter().map(|o| o.scratch_d).max().unwrap_or(0),
            scratch_f_arrays: outcomes.iter().map(|o| o.scratch_f).max().unwrap_or(0),
            barriers_per_step: if params.scheme == SchemeKind::Shoc2 { 16 } else { 8 },
        };
        if outcomes[0].diverged {
            return Err(Error::Diverged { step: state.step_count });
        }
        Ok(stats)
    }
}

/// Runs `n_steps` steps on `plan`'s tiles and workers with default settings.
pub fn integrate_chunk_parallel<T: Real>(
    state: &mut IntegratorState<T>,
    params: &SimParams<T>,
    n_steps: u64,
    plan: &TilePlan,
) -> Result<()> {
    Engine::new(plan.clone()).integrate_chunk(state, params, n_steps).map(|_| ())
}

#[derive(Debug, Clone, Copy)]
struct Shared<T> {
    ptr: *mut T,
    len: usize,
}

// Access is coordinated by the phase barriers; see the module docs.
unsafe impl<T: Send> Send for Shared<T> {}
unsafe impl<T: Sync> Sync for Shared<T> {}

impl<T: Copy> Shared<T> {
    fn new(v: &mut [T]) -> Self {
        Shared { ptr: v.as_mut_ptr(), len: v.len() }
    }

    #[inline(always)]
    fn read(self, i: usize) -> T {
        debug_assert!(i < self.len);
        unsafe { *self.ptr.add(i) }
    }

    #[inline(always)]
    fn write(self, i: usize, value: T) {
        debug_assert!(i < self.len);
        unsafe { *self.ptr.add(i) = value }
    }
}

#[derive(Debug, Clone, Copy)]
struct SharedComplex<T> {
    re: Shared<T>,
    im: Shared<T>,
}

impl<T: Real> SharedComplex<T> {
    fn new(f: &mut ComplexField<T>) -> Self {
        SharedComplex { re: Shared::new(&mut f.re), im: Shared::new(&mut f.im) }
    }

    #[inline(always)]
    fn get(self, i: usize) -> (T, T) {
        (self.re.read(i), self.im.read(i))
    }

    #[inline(always)]
    fn set(self, i: usize, v: (T, T)) {
        self.re.write(i, v.0);
        self.im.write(i, v.1);
    }
}

struct RawStrided<T> {
    data: Shared<T>,
    center: usize,
    sy: isize,
    sz: isize,
}

impl<T: Copy> Neighborhood<T> for RawStrided<T> {
    #[inline(always)]
    fn at(&self, di: isize, dj: isize, dk: isize) -> T {
        self.data.read((self.center as isize + di + dj * self.sy + dk * self.sz) as usize)
    }
}

#[derive(Clone, Copy)]
struct Buffers<T> {
    psi: SharedComplex<T>,
    k_tot: SharedComplex<T>,
    psi_tmp: SharedComplex<T>,
    psi_out: SharedComplex<T>,
    k_tmp: SharedComplex<T>,
    d: Option<SharedComplex<T>>,
}

impl<T: Real> Buffers<T> {
    fn new(state: &mut IntegratorState<T>) -> Self {
        Buffers {
            psi: SharedComplex::new(&mut state.psi),
            k_tot: SharedComplex::new(&mut state.k_tot),
            psi_tmp: SharedComplex::new(&mut state.psi_tmp),
            psi_out: SharedComplex::new(&mut state.psi_out),
            k_tmp: SharedComplex::new(&mut state.k_tmp),
            d: state.d_scratch.as_mut().map(|s| SharedComplex::new(&mut s.d)),
        }
    }

    fn field(&self, id: FieldId) -> SharedComplex<T> {
        match id {
            FieldId::Psi => self.psi,
            FieldId::KTot => self.k_tot,
            FieldId::PsiTmp => self.psi_tmp,
            FieldId::PsiOut => self.psi_out,
            FieldId::KTmp => self.k_tmp,
            FieldId::D => self.d.expect("D buffer"),
            FieldId::Potential => unreachable!("potential is read-only"),
        }
    }
}

/// Precomputed point lists of one tile.
struct TileWork {
    tile: Tile,
    /// Owned interior runs along `x` as `(start, len)`.
    rows: Vec<(usize, usize)>,
    boundary: BoundaryPoints,
}

impl TileWork {
    fn new(grid: &GridSpec, tile: Tile) -> Self {
        let n = grid.counts();
        let end = tile.end();
        let range = |a: usize| {
            if a < grid.dim() {
                tile.origin[a].max(1)..end[a].min(n[a] - 1)
            } else {
                0..1
            }
        };
        let (ri, rj, rk) = (range(0), range(1), range(2));
        let mut rows = Vec::new();
        if !ri.is_empty() {
            for k in rk {
                for j in rj.clone() {
                    rows.push((grid.linear_index(ri.start, j, k), ri.len()));
                }
            }
        }
        TileWork { tile, rows, boundary: BoundaryPoints::within(grid, tile.origin, end) }
    }
}

/// Worker-local halo copies.
struct TileScratch<T> {
    slots: Vec<Vec<T>>,
}

impl<T: Real> TileScratch<T> {
    fn new(count: usize, len: usize) -> Self {
        TileScratch { slots: (0..count).map(|_| vec![T::zero(); len]).collect() }
    }
}

/// Tile-plus-halo box and the map from grid indices into it.
struct LocalBox {
    lo: [usize; 3],
    hi: [usize; 3],
    lx: usize,
    ly: usize,
}

impl LocalBox {
    fn new(grid: &GridSpec, tile: &Tile) -> Self {
        let (lo, hi) = tile.halo_box(grid);
        LocalBox { lo, hi, lx: hi[0] - lo[0], ly: hi[1] - lo[1] }
    }

    #[inline(always)]
    fn local(&self, grid: &GridSpec, idx: usize) -> usize {
        let (i, j, k) = grid.coords(idx);
        ((k - self.lo[2]) * self.ly + (j - self.lo[1])) * self.lx + (i - self.lo[0])
    }

    fn copy_in<T: Real>(&self, grid: &GridSpec, src: Shared<T>, dst: &mut [T]) {
        let mut n = 0;
        for k in self.lo[2]..self.hi[2] {
            for j in self.lo[1]..self.hi[1] {
                let start = grid.linear_index(self.lo[0], j, k);
                for off in 0..self.lx {
                    dst[n] = src.read(start + off);
                    n += 1;
                }
            }
        }
    }

    fn copy_in_slice<T: Real>(&self, grid: &GridSpec, src: &[T], dst: &mut [T]) {
        let mut n = 0;
        for k in self.lo[2]..self.hi[2] {
            for j in self.lo[1]..self.hi[1] {
                let start = grid.linear_index(self.lo[0], j, k);
                dst[n..n + self.lx].copy_from_slice(&src[start..start + self.lx]);
                n += self.lx;
            }
        }
    }
}

struct WorkerOutcome {
    steps: u64,
    floor_hits: u64,
    last_step_hits: u64,
    diverged: bool,
    scratch_d: usize,
    scratch_f: usize,
}

struct Ctx<'a, T> {
    grid: GridSpec,
    coeffs: StepCoeffs<T>,
    bc: BoundaryKind,
    scheme: SchemeKind,
    v: &'a [T],
    bufs: Buffers<T>,
    halo: HaloMode,
    order: SubPhaseOrder,
    works: &'a [TileWork],
    halo_volume: usize,
}

// The raw buffers are only touched under the barrier discipline.
unsafe impl<T: Sync> Sync for Ctx<'_, T> {}

impl<T: Real> Ctx<'_, T> {
    fn run_worker(
        &self,
        plan: &TilePlan,
        worker: usize,
        n_steps: u64,
        barrier: &Barrier,
        diverged: &AtomicBool,
    ) -> WorkerOutcome {
        let mine: Vec<&TileWork> = plan.worker_tiles(worker).map(|t| &self.works[t]).collect();
        let mut scratch = match self.halo {
            HaloMode::Scratch => Some(TileScratch::new(if self.scheme == SchemeKind::Shoc2 { 7 } else { 5 }, self.halo_volume)),
            HaloMode::Direct => None,
        };
        let mut out = WorkerOutcome {
            steps: 0,
            floor_hits: 0,
            last_step_hits: 0,
            diverged: false,
            scratch_d: 0,
            scratch_f: 0,
        };
        for _ in 0..n_steps {
            let mut hits = 0;
            for stage in Stage::ALL {
                if self.scheme == SchemeKind::Shoc2 {
                    let mut interior = |scratch: &mut Option<TileScratch<T>>| {
                        for w in &mine {
                            out.scratch_d = out.scratch_d.max(self.d_interior(stage, w, scratch.as_mut()));
                        }
                    };
                    let boundary = || mine.iter().map(|w| self.d_boundary(stage, w)).sum::<u64>();
                    match self.order {
                        SubPhaseOrder::InteriorFirst => {
                            interior(&mut scratch);
                            barrier.wait();
                            hits += boundary();
                        }
                        SubPhaseOrder::BoundaryFirst => {
                            hits += boundary();
                            barrier.wait();
                            interior(&mut scratch);
                        }
                    }
                    barrier.wait();
                }
                let mut interior = |scratch: &mut Option<TileScratch<T>>| {
                    for w in &mine {
                        out.scratch_f = out.scratch_f.max(self.f_interior(stage, w, scratch.as_mut()));
                    }
                };
                let boundary = || mine.iter().map(|w| self.f_boundary(stage, w)).sum::<u64>();
                match self.order {
                    SubPhaseOrder::InteriorFirst => {
                        interior(&mut scratch);
                        barrier.wait();
                        hits += boundary();
                    }
                    SubPhaseOrder::BoundaryFirst => {
                        hits += boundary();
                        barrier.wait();
                        interior(&mut scratch);
                    }
                }
                if stage == Stage::Fourth && !mine.iter().all(|w| self.tile_finite(w)) {
                    diverged.store(true, Ordering::Relaxed);
                }
                barrier.wait();
            }
            out.steps += 1;
            out.floor_hits += hits;
            out.last_step_hits = hits;
            if diverged.load(Ordering::Relaxed) {
                out.diverged = true;
                break;
            }
        }
        out
    }

    fn tile_finite(&self, w: &TileWork) -> bool {
        let psi = self.bufs.psi;
        let t = &w.tile;
        let end = t.end();
        for k in t.origin[2]..end[2] {
            for j in t.origin[1]..end[1] {
                let start = self.grid.linear_index(t.origin[0], j, k);
                for idx in start..start + t.extent[0] {
                    let (r, i) = psi.get(idx);
                    if !(r.is_finite() && i.is_finite()) {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn raw(&self, data: Shared<T>, idx: usize) -> RawStrided<T> {
        let s = self.grid.strides();
        RawStrided { data, center: idx, sy: s[1] as isize, sz: s[2] as isize }
    }

    /// CD Laplacian of the stage input at owned interior points. Returns the
    /// number of scratch arrays used.
    fn d_interior(&self, stage: Stage, w: &TileWork, scratch: Option<&mut TileScratch<T>>) -> usize {
        let input = self.bufs.field(stage_input(stage));
        let d = self.bufs.field(FieldId::D);
        let c = &self.coeffs.stencil;
        match scratch {
            None => {
                for &(start, len) in &w.rows {
                    for idx in start..start + len {
                        let lap = (cd_point(c, &self.raw(input.re, idx)), cd_point(c, &self.raw(input.im, idx)));
                        d.set(idx, lap);
                    }
                }
                0
            }
            Some(scratch) => {
                let b = LocalBox::new(&self.grid, &w.tile);
                let [pr, pi, ..] = &mut scratch.slots[..] else { unreachable!() };
                b.copy_in(&self.grid, input.re, pr);
                b.copy_in(&self.grid, input.im, pi);
                let (sy, sz) = (b.lx, b.lx * b.ly);
                for &(start, len) in &w.rows {
                    let l0 = b.local(&self.grid, start);
                    for (l, idx) in (l0..l0 + len).zip(start..start + len) {
                        let lap = (
                            cd_point(c, &Strided::new(pr, l, sy, sz)),
                            cd_point(c, &Strided::new(pi, l, sy, sz)),
                        );
                        d.set(idx, lap);
                    }
                }
                2
            }
        }
    }

    fn d_boundary(&self, stage: Stage, w: &TileWork) -> u64 {
        let input = self.bufs.field(stage_input(stage));
        let d = self.bufs.field(FieldId::D);
        let mut hits = 0;
        for &(b, inner) in &w.boundary.points {
            let inward = self.bc.needs_inward_neighbor().then(|| InwardValues {
                psi: input.get(inner),
                value: d.get(inner),
                v: self.v[inner],
            });
            let out = bc_laplacian(self.bc, &self.coeffs.bc, input.get(b), self.v[b], inward);
            hits += out.floor_hit as u64;
            d.set(b, out.value);
        }
        hits
    }

    #[inline(always)]
    fn update_point(&self, stage: Stage, output: SharedComplex<T>, idx: usize, f: (T, T)) {
        let b = &self.bufs;
        b.k_tmp.set(idx, f);
        let (pr, pi) = b.psi.get(idx);
        let (kr, ki) = b.k_tot.get(idx);
        let (nkr, or) = stage_update(stage, &self.coeffs, pr, kr, f.0);
        let (nki, oi) = stage_update(stage, &self.coeffs, pi, ki, f.1);
        if stage != Stage::Fourth {
            b.k_tot.set(idx, (nkr, nki));
        }
        output.set(idx, (or, oi));
    }

    fn f_interior(&self, stage: Stage, w: &TileWork, scratch: Option<&mut TileScratch<T>>) -> usize {
        let input = self.bufs.field(stage_input(stage));
        let out = self.bufs.field(stage_output(stage));
        let c = &self.coeffs;
        let shoc = self.scheme == SchemeKind::Shoc2;
        match scratch {
            None => {
                let d = if shoc { Some(self.bufs.field(FieldId::D)) } else { None };
                for &(start, len) in &w.rows {
                    for idx in start..start + len {
                        let lap = match d {
                            Some(d) => (
                                shoc2_point(&c.stencil, &self.raw(input.re, idx), &self.raw(d.re, idx)),
                                shoc2_point(&c.stencil, &self.raw(input.im, idx), &self.raw(d.im, idx)),
                            ),
                            None => (
                                cd_point(&c.stencil, &self.raw(input.re, idx)),
                                cd_point(&c.stencil, &self.raw(input.im, idx)),
                            ),
                        };
                        let f = rhs_point(lap, input.get(idx), self.v[idx], c.a, c.s);
                        self.update_point(stage, out, idx, f);
                    }
                }
                0
            }
            Some(scratch) => {
                let b = LocalBox::new(&self.grid, &w.tile);
                let [pr, pi, vv, fr, fi, rest @ ..] = &mut scratch.slots[..] else { unreachable!() };
                b.copy_in(&self.grid, input.re, pr);
                b.copy_in(&self.grid, input.im, pi);
                b.copy_in_slice(&self.grid, self.v, vv);
                let mut used = 5;
                let d_local = if shoc {
                    let [dr, di, ..] = rest else { unreachable!() };
                    let d = self.bufs.field(FieldId::D);
                    b.copy_in(&self.grid, d.re, dr);
                    b.copy_in(&self.grid, d.im, di);
                    used = 7;
                    Some((&*dr, &*di))
                } else {
                    None
                };
                let (sy, sz) = (b.lx, b.lx * b.ly);
                for &(start, len) in &w.rows {
                    let l0 = b.local(&self.grid, start);
                    for l in l0..l0 + len {
                        let lap = match d_local {
                            Some((dr, di)) => (
                                shoc2_point(&c.stencil, &Strided::new(pr, l, sy, sz), &Strided::new(dr, l, sy, sz)),
                                shoc2_point(&c.stencil, &Strided::new(pi, l, sy, sz), &Strided::new(di, l, sy, sz)),
                            ),
                            None => (
                                cd_point(&c.stencil, &Strided::new(pr, l, sy, sz)),
                                cd_point(&c.stencil, &Strided::new(pi, l, sy, sz)),
                            ),
                        };
                        let f = rhs_point(lap, (pr[l], pi[l]), vv[l], c.a, c.s);
                        fr[l] = f.0;
                        fi[l] = f.1;
                    }
                }
                for &(start, len) in &w.rows {
                    let l0 = b.local(&self.grid, start);
                    for (l, idx) in (l0..l0 + len).zip(start..start + len) {
                        self.update_point(stage, out, idx, (fr[l], fi[l]));
                    }
                }
                used
            }
        }
    }

    fn f_boundary(&self, stage: Stage, w: &TileWork) -> u64 {
        let input = self.bufs.field(stage_input(stage));
        let output = self.bufs.field(stage_output(stage));
        let k_tmp = self.bufs.k_tmp;
        let mut hits = 0;
        for &(b, inner) in &w.boundary.points {
            let inward = self.bc.needs_inward_neighbor().then(|| InwardValues {
                psi: input.get(inner),
                value: k_tmp.get(inner),
                v: self.v[inner],
            });
            let out = bc_time_derivative(self.bc, &self.coeffs.bc, input.get(b), self.v[b], inward);
            hits += out.floor_hit as u64;
            self.update_point(stage, output, b, out.value);
        }
        hits
    }
}
