//! Convergence and timing studies behind the `converge` and `bench` commands.

use std::time::Instant;

use serde::Serialize;

use crate::boundary::BoundaryKind;
use crate::engine::{plan_tiles, Engine, HaloMode, TilePlan};
use crate::error::{Error, Result};
use crate::field::{ComplexField, GridSpec, Real};
use crate::integrator::{integrate_chunk, IntegratorState, SimParams};
use crate::problems::{soliton_error, soliton_field, SolitonParams};
use crate::stability::stability_bounds;
use crate::stencil::SchemeKind;

/// Soliton setup shared by the studies: `a = 1`, `s = -1`, `c = 0.5`, `Ω = -1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolitonStudy {
    pub scheme: SchemeKind,
    pub bc: BoundaryKind,
    pub t_end: f64,
    /// Grid covers `[-half_width, half_width]`.
    pub half_width: f64,
}

impl SolitonStudy {
    pub fn new(scheme: SchemeKind) -> Self {
        SolitonStudy { scheme, bc: BoundaryKind::Msd, t_end: 5.0, half_width: 30.0 }
    }

    pub fn grid(&self, h: f64) -> Result<GridSpec> {
        let cells = 2.0 * self.half_width / h;
        if (cells - cells.round()).abs() > 1e-9 * cells {
            return Err(Error::param("h", format!("must divide the domain width {} evenly, got {h}", 2.0 * self.half_width)));
        }
        GridSpec::one_d(cells.round() as usize + 1, h, -self.half_width)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub h: f64,
    pub dt: f64,
    pub steps: u64,
    /// Max-norm error against the exact soliton at `t_end`.
    pub error: f64,
    /// `log(e_prev / e) / log(h_prev / h)`; absent on the first row.
    pub order: Option<f64>,
}

/// Runs the soliton to `t_end` at each spacing with the recommended step.
pub fn convergence_study(study: &SolitonStudy, h_list: &[f64]) -> Result<Vec<ConvergenceRow>> {
    if h_list.len() < 2 {
        return Err(Error::param("h", "a convergence study needs at least two spacings"));
    }
    let sp = SolitonParams::standard();
    let (a, s) = (1.0, -1.0);
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let grid = study.grid(h)?;
        let (steps, dt) = stability_bounds(1, a, h, study.scheme)?.steps_for(study.t_end);
        let params = SimParams::<f64>::new(grid, a, s, dt, study.scheme, study.bc)?;
        let mut state = IntegratorState::new(soliton_field(grid, 0.0, &sp, a, s)?, study.scheme);
        integrate_chunk(&mut state, &params, steps)?;
        let error = soliton_error(&state.psi, study.t_end, &sp, a, s)?.max_abs;
        let order = rows.last().map(|prev| (prev.error / error).ln() / (prev.h / h).ln());
        rows.push(ConvergenceRow { h, dt, steps, error, order });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChunkTiming {
    pub chunk_size: u64,
    pub seconds: f64,
    /// Time relative to running every step as one chunk.
    pub slowdown: f64,
    /// Disagreement between the best of the even and of the odd rounds,
    /// relative to the overall best; zero with a single round.
    pub spread: f64,
}

/// Settings for a chunk-size sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkSweep {
    pub points: usize,
    pub total_steps: u64,
    pub chunk_sizes: Vec<u64>,
    pub scheme: SchemeKind,
    pub workers: usize,
    pub tile: Option<Vec<usize>>,
    pub repetitions: usize,
}

impl ChunkSweep {
    /// Chunk sizes 1, 2, 5, 10, ... up to and including `total_steps`.
    pub fn default_chunk_sizes(total_steps: u64) -> Vec<u64> {
        let mut sizes = Vec::new();
        let mut decade = 1;
        'outer: loop {
            for m in [1, 2, 5] {
                let c = m * decade;
                if c >= total_steps {
                    break 'outer;
                }
                if total_steps.is_multiple_of(c) {
                    sizes.push(c);
                }
            }
            decade *= 10;
        }
        sizes.push(total_steps);
        sizes
    }
}

fn soliton_state<T: Real>(points: usize, scheme: SchemeKind) -> Result<(SimParams<T>, ComplexField<T>)> {
    let h = 0.1;
    let grid = GridSpec::centered(&[points], h)?;
    let dt = stability_bounds(1, 1.0, h, scheme)?.k_recommended;
    let params = SimParams::new(grid, 1.0, -1.0, dt, scheme, BoundaryKind::Msd)?;
    let psi = soliton_field(grid, 0.0, &SolitonParams::standard(), 1.0, -1.0)?;
    Ok((params, psi))
}

fn make_plan(grid: &GridSpec, tile: Option<&[usize]>, workers: usize) -> Result<TilePlan> {
    match tile {
        Some(t) => plan_tiles(grid, t, workers),
        None => TilePlan::with_defaults(grid, workers),
    }
}

/// Runs `total_steps` steps in chunks of `chunk`, handing the solution back
/// to the caller between chunks: the field is copied out and the integrator
/// work arrays are rebuilt from it, as a driver that inspects every frame would.
pub fn run_chunked<T: Real>(
    engine: &Engine,
    params: &SimParams<T>,
    psi0: &ComplexField<T>,
    total_steps: u64,
    chunk: u64,
) -> Result<ComplexField<T>> {
    let mut host = psi0.clone();
    let mut done = 0;
    while done < total_steps {
        let n = chunk.min(total_steps - done);
        let mut state = IntegratorState::new(host, params.scheme).at_step(done, params.dt);
        engine.integrate_chunk(&mut state, params, n)?;
        host = state.psi.clone();
        done += n;
    }
    Ok(host)
}

/// Times each chunk size, keeping the best of `repetitions` rounds. Rounds
/// visit every chunk size in turn so slow drifts in machine load spread evenly.
pub fn chunk_sweep(sweep: &ChunkSweep) -> Result<Vec<ChunkTiming>> {
    if sweep.chunk_sizes.contains(&0) {
        return Err(Error::param("chunk_size", "must be positive"));
    }
    let (params, psi0) = soliton_state::<f64>(sweep.points, sweep.scheme)?;
    let plan = make_plan(params.grid(), sweep.tile.as_deref(), sweep.workers)?;
    let engine = Engine::new(plan);
    let mut times = vec![Vec::new(); sweep.chunk_sizes.len()];
    for _ in 0..sweep.repetitions.max(1) {
        for (&chunk, t) in sweep.chunk_sizes.iter().zip(&mut times) {
            let start = Instant::now();
            let out = run_chunked(&engine, &params, &psi0, sweep.total_steps, chunk)?;
            t.push(start.elapsed().as_secs_f64());
            std::hint::black_box(&out);
        }
    }
    let mut rows: Vec<ChunkTiming> = sweep
        .chunk_sizes
        .iter()
        .zip(&mut times)
        .map(|(&chunk_size, t)| {
            let best_of = |parity: usize| t.iter().skip(parity).step_by(2).copied().fold(f64::INFINITY, f64::min);
            let (even, odd) = (best_of(0), best_of(1));
            let best = even.min(odd);
            let spread = if odd.is_finite() { (even - odd).abs() / best } else { 0.0 };
            ChunkTiming { chunk_size, seconds: best, slowdown: 0.0, spread }
        })
        .collect();
    let reference = match rows.iter().find(|r| r.chunk_size >= sweep.total_steps) {
        Some(r) => r.seconds,
        None => {
            let start = Instant::now();
            std::hint::black_box(run_chunked(&engine, &params, &psi0, sweep.total_steps, sweep.total_steps)?);
            start.elapsed().as_secs_f64()
        }
    };
    for r in &mut rows {
        r.slowdown = r.seconds / reference;
    }
    Ok(rows)
}

/// True when `slowdown` does not increase with chunk size, allowing each
/// step up to `tolerance` relative noise.
pub fn slowdown_non_increasing(rows: &[ChunkTiming], tolerance: f64) -> bool {
    rows.windows(2).all(|w| w[1].slowdown <= w[0].slowdown * (1.0 + tolerance))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingTiming {
    pub points: usize,
    pub steps: u64,
    pub workers: usize,
    pub serial_seconds: f64,
    pub parallel_seconds: f64,
    pub speedup: f64,
    /// Parallel result equal bit for bit to the serial one.
    pub identical: bool,
}

/// Times the serial integrator against the engine on a 1D soliton.
pub fn serial_vs_parallel(
    points: usize,
    steps: u64,
    scheme: SchemeKind,
    workers: usize,
    tile: Option<&[usize]>,
    halo: HaloMode,
) -> Result<ScalingTiming> {
    let (params, psi0) = soliton_state::<f64>(points, scheme)?;
    let mut serial = IntegratorState::new(psi0.clone(), scheme);
    let start = Instant::now();
    integrate_chunk(&mut serial, &params, steps)?;
    let serial_seconds = start.elapsed().as_secs_f64();

    let engine = Engine::new(make_plan(params.grid(), tile, workers)?).with_halo_mode(halo);
    let mut parallel = IntegratorState::new(psi0, scheme);
    let start = Instant::now();
    engine.integrate_chunk(&mut parallel, &params, steps)?;
    let parallel_seconds = start.elapsed().as_secs_f64();
    Ok(ScalingTiming {
        points,
        steps,
        workers,
        serial_seconds,
        parallel_seconds,
        speedup: serial_seconds / parallel_seconds,
        identical: serial.psi.bit_eq(&parallel.psi),
    })
}
