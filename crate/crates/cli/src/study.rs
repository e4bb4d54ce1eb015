use std::io;

use anyhow::Result;
use nlse_core::config::RunConfig;
use nlse_core::harness::{chunk_sweep, convergence_study, serial_vs_parallel, ChunkSweep, SolitonStudy};
use nlse_core::{stability_bounds, BoundaryKind, Error, HaloMode, SchemeKind};

use crate::{BenchArgs, ConvergeArgs, Format, StabilityArgs};

fn parse_scheme(value: &str) -> nlse_core::Result<SchemeKind> {
    value.parse().map_err(|e: String| Error::config("scheme", e))
}

pub fn stability(args: &StabilityArgs) -> Result<()> {
    let (dim, a, h) = match &args.config {
        Some(path) => {
            let cfg = RunConfig::from_file(path)?;
            let grid = cfg.resolve_grid()?;
            (grid.dim(), cfg.a, grid.h())
        }
        None => (args.dim, args.a, args.h),
    };
    let reports = [SchemeKind::Cd, SchemeKind::Shoc2]
        .map(|scheme| stability_bounds(dim, a, h, scheme).map_err(|e| Error::config("h", e.to_string())))
        .into_iter()
        .collect::<nlse_core::Result<Vec<_>>>()?;
    match args.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&reports)?),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(io::stdout());
            for r in &reports {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Table => {
            println!("{dim}D, a = {a}, h = {h}");
            println!("{:>7} {:>14} {:>14}", "scheme", "k_max", "k_recommended");
            for r in &reports {
                let verdict = match args.dt {
                    Some(dt) if dt > r.k_max_linear => "  dt above linear bound",
                    Some(dt) if dt > r.k_recommended => "  dt above recommended",
                    Some(_) => "  dt ok",
                    None => "",
                };
                println!("{:>7} {:>14.7} {:>14.7}{verdict}", r.scheme.name(), r.k_max_linear, r.k_recommended);
            }
        }
    }
    Ok(())
}

pub fn converge(args: &ConvergeArgs) -> Result<()> {
    if args.h.len() < 2 {
        return Err(Error::config("h", "a convergence study needs at least two spacings").into());
    }
    let mut study = SolitonStudy::new(parse_scheme(&args.scheme)?);
    study.bc = args.bc.parse::<BoundaryKind>().map_err(|e| Error::config("bc", e))?;
    study.t_end = args.t_end;
    let rows = convergence_study(&study, &args.h).map_err(|e| match e {
        Error::InvalidParameter { name, reason } => Error::config(name, reason),
        other => other,
    })?;
    match args.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&rows)?),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(io::stdout());
            for r in &rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Table => {
            println!("soliton, {} + {}, t = {}", study.scheme.name(), study.bc.name(), study.t_end);
            println!("{:>8} {:>12} {:>8} {:>12} {:>7}", "h", "dt", "steps", "error", "order");
            for r in &rows {
                let order = r.order.map(|p| format!("{p:.3}")).unwrap_or_else(|| "-".into());
                println!("{:>8} {:>12.4e} {:>8} {:>12.4e} {:>7}", r.h, r.dt, r.steps, r.error, order);
            }
        }
    }
    Ok(())
}

pub fn bench(args: &BenchArgs) -> Result<()> {
    let scheme = parse_scheme(&args.scheme)?;
    let halo = match args.halo.as_str() {
        "scratch" => HaloMode::Scratch,
        "direct" => HaloMode::Direct,
        other => return Err(Error::config("halo", format!("expected scratch or direct, got `{other}`")).into()),
    };
    let chunk_sizes = if args.chunk_sizes.is_empty() {
        ChunkSweep::default_chunk_sizes(args.steps)
    } else {
        args.chunk_sizes.clone()
    };
    let tile = args.tile.map(|t| vec![t]);
    let sweep = ChunkSweep {
        points: args.points,
        total_steps: args.steps,
        chunk_sizes,
        scheme,
        workers: args.workers,
        tile: tile.clone(),
        repetitions: args.repetitions,
    };
    let rows = chunk_sweep(&sweep).map_err(|e| match e {
        Error::InvalidParameter { name, reason } => Error::config(name, reason),
        other => other,
    })?;
    let mut w = csv::Writer::from_writer(io::stdout());
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    drop(w);

    if args.parallel_steps > 0 {
        println!();
        let t = serial_vs_parallel(args.points, args.parallel_steps, scheme, args.parallel_workers, tile.as_deref(), halo)?;
        let mut w = csv::Writer::from_writer(io::stdout());
        w.serialize(t)?;
        w.flush()?;
        let cpus = std::thread::available_parallelism().map_or(1, |n| n.get());
        if t.workers >= 4 && t.speedup < 1.5 {
            eprintln!(
                "WARN: parallel speedup {:.2}x with {} workers on {cpus} available cpus",
                t.speedup, t.workers
            );
        }
    }
    Ok(())
}
