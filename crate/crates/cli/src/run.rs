use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use nlse_core::config::{ProblemKind, ResolvedRun, RunConfig};
use nlse_core::frame::{frame_file_name, Frame, FrameMeta, IntoFrameData};
use nlse_core::problems::{soliton_error, soliton_field, vortex2d_init, vortex_ring_init};
use nlse_core::{plan_tiles, ComplexField, Engine, Error, IntegratorState, Precision, Real, SimParams, TilePlan};
use serde_json::{json, Value};

use crate::{Format, RunArgs};

pub fn run(args: &RunArgs) -> Result<()> {
    let cfg = args.options.build()?;
    let resolved = cfg.resolve()?;
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let (summary, outcome) = match cfg.precision {
        Precision::Single => simulate::<f32>(&cfg, &resolved)?,
        Precision::Double => simulate::<f64>(&cfg, &resolved)?,
    };
    let path = cfg.out.join("summary.json");
    fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    match args.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&summary)?),
        _ => print_summary(&summary),
    }
    outcome.map_err(Into::into)
}

fn initial_field<T: Real>(cfg: &RunConfig, r: &ResolvedRun) -> nlse_core::Result<ComplexField<T>> {
    match cfg.problem {
        ProblemKind::Soliton => soliton_field(r.grid, 0.0, &cfg.soliton, cfg.a, cfg.s),
        ProblemKind::Vortex2d => vortex2d_init(r.grid, &cfg.vortex, cfg.a, cfg.s),
        ProblemKind::VortexRing => vortex_ring_init(r.grid, &cfg.ring_params()?, cfg.a, cfg.s),
    }
}

/// Runs the configured problem, writing frames as it goes. The summary is
/// returned even when the run diverges.
fn simulate<T: Real + IntoFrameData>(
    cfg: &RunConfig,
    r: &ResolvedRun,
) -> Result<(Value, nlse_core::Result<()>)> {
    let mut params = SimParams::<T>::new(r.grid, cfg.a, cfg.s, r.dt, cfg.scheme, cfg.bc)?;
    if let Some(eps) = cfg.eps_div {
        params = params.with_eps_div(eps)?;
    }
    let plan = match &cfg.tile {
        Some(tile) => plan_tiles(&r.grid, tile, cfg.workers)?,
        None => TilePlan::with_defaults(&r.grid, cfg.workers)?,
    };
    let engine = Engine::new(plan);
    let mut state = IntegratorState::new(initial_field::<T>(cfg, r)?, cfg.scheme);

    let mut frames = vec![write_frame(cfg, &state, r, 0, 0.0)?];
    let started = Instant::now();
    let mut outcome = Ok(());
    for index in 1..=r.frames {
        let t0 = Instant::now();
        if let Err(e) = engine.integrate_chunk(&mut state, &params, r.chunk_size) {
            outcome = Err(e);
            break;
        }
        frames.push(write_frame(cfg, &state, r, index as usize, t0.elapsed().as_secs_f64())?);
    }
    let diverged_at = match &outcome {
        Err(Error::Diverged { step }) => Some(*step),
        _ => None,
    };
    let summary = json!({
        "problem": cfg.problem.name(),
        "grid": r.grid.counts()[..r.grid.dim()],
        "h": r.grid.h(),
        "dt": r.dt,
        "k_recommended": r.stability.k_recommended,
        "k_max_linear": r.stability.k_max_linear,
        "scheme": cfg.scheme.name(),
        "bc": cfg.bc.name(),
        "precision": if T::PRECISION == Precision::Single { "single" } else { "double" },
        "workers": cfg.workers,
        "tile": engine.plan().tile_shape()[..r.grid.dim()],
        "chunk_size": r.chunk_size,
        "frames": r.frames,
        "total_steps": r.total_steps(),
        "t_end": r.t_end(),
        "wall_seconds": started.elapsed().as_secs_f64(),
        "diverged": diverged_at.is_some(),
        "diverged_at_step": diverged_at,
        "msd_floor_hits": state.diagnostics.msd_floor_hits,
        "frame_records": frames,
    });
    Ok((summary, outcome))
}

fn write_frame<T: Real + IntoFrameData>(
    cfg: &RunConfig,
    state: &IntegratorState<T>,
    r: &ResolvedRun,
    index: usize,
    chunk_seconds: f64,
) -> Result<Value> {
    let psi = &state.psi;
    let meta = FrameMeta { k_dt: r.dt, a: cfg.a, s: cfg.s, time: state.time, step_count: state.step_count };
    let path = cfg.out.join(frame_file_name(index));
    Frame::new(psi, meta).write_to(&path).with_context(|| format!("writing {}", path.display()))?;
    if cfg.csv && r.grid.dim() == 1 {
        write_csv(&path.with_extension("csv"), psi)?;
    }

    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..psi.len() {
        let m = psi.modulus_sq(i).as_f64();
        lo = lo.min(m);
        hi = hi.max(m);
    }
    let g = r.grid;
    let n = g.counts();
    let centre = psi.get(g.linear_index(n[0] / 2, n[1] / 2, n[2] / 2));
    let mut record = json!({
        "index": index,
        "step": state.step_count,
        "time": state.time,
        "chunk_seconds": chunk_seconds,
        "min_abs2": lo,
        "max_abs2": hi,
        "center": [centre.0.as_f64(), centre.1.as_f64()],
    });
    if cfg.problem == ProblemKind::Soliton {
        let err = soliton_error(psi, state.time, &cfg.soliton, cfg.a, cfg.s)?;
        record["error_max"] = json!(err.max_abs);
        record["error_rms"] = json!(err.rms);
    }
    Ok(record)
}

fn write_csv<T: Real>(path: &Path, psi: &ComplexField<T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["x", "re", "im", "abs2"])?;
    for i in 0..psi.len() {
        let (re, im) = psi.get(i);
        let x = psi.grid().coord(0, i);
        w.serialize((x, re.as_f64(), im.as_f64(), psi.modulus_sq(i).as_f64()))?;
    }
    w.flush()?;
    Ok(())
}

fn print_summary(s: &Value) {
    println!(
        "{} on {} grid, h = {}, dt = {:.6e} (recommended {:.6e}), {} + {}, {} precision",
        s["problem"].as_str().unwrap_or(""),
        s["grid"],
        s["h"],
        s["dt"].as_f64().unwrap_or(f64::NAN),
        s["k_recommended"].as_f64().unwrap_or(f64::NAN),
        s["scheme"].as_str().unwrap_or(""),
        s["bc"].as_str().unwrap_or(""),
        s["precision"].as_str().unwrap_or(""),
    );
    println!("{:>6} {:>10} {:>10} {:>10} {:>12} {:>12} {:>12}", "frame", "step", "time", "chunk s", "min|psi|^2", "max|psi|^2", "error max");
    for f in s["frame_records"].as_array().into_iter().flatten() {
        let err = f["error_max"].as_f64().map(|e| format!("{e:.3e}")).unwrap_or_else(|| "-".into());
        println!(
            "{:>6} {:>10} {:>10.4} {:>10.4} {:>12.6} {:>12.6} {:>12}",
            f["index"].as_u64().unwrap_or(0),
            f["step"].as_u64().unwrap_or(0),
            f["time"].as_f64().unwrap_or(f64::NAN),
            f["chunk_seconds"].as_f64().unwrap_or(f64::NAN),
            f["min_abs2"].as_f64().unwrap_or(f64::NAN),
            f["max_abs2"].as_f64().unwrap_or(f64::NAN),
            err,
        );
    }
    match s["diverged_at_step"].as_u64() {
        Some(step) => println!("diverged at step {step}"),
        None => println!("finished in {:.3} s", s["wall_seconds"].as_f64().unwrap_or(f64::NAN)),
    }
}
