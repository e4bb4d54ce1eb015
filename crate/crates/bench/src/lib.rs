//! Fixtures shared by the benchmarks in `benches/`.

use nlse_core::problems::{soliton_field, SolitonParams};
use nlse_core::{BoundaryKind, ComplexField, GridSpec, SchemeKind, SimParams};

/// Cubic grid of `n` points per axis at spacing 0.2.
pub fn cube(dim: usize, n: usize) -> GridSpec {
    GridSpec::centered(&vec![n; dim], 0.2).expect("valid grid")
}

/// Unit background with a smooth ripple, and MSD parameters at the recommended step.
pub fn rippled(grid: GridSpec, scheme: SchemeKind) -> (SimParams<f64>, ComplexField<f64>) {
    let psi = ComplexField::from_fn(grid, |x, y, z| {
        let r = 0.1 * (x + 0.7 * y - 0.3 * z).sin();
        (1.0 + r, 0.5 * r)
    });
    (recommended(grid, scheme), psi)
}

/// 1D dark soliton on `points` points.
pub fn soliton(points: usize, scheme: SchemeKind) -> (SimParams<f64>, ComplexField<f64>) {
    let grid = GridSpec::centered(&[points], 0.1).expect("valid grid");
    let psi = soliton_field(grid, 0.0, &SolitonParams::standard(), 1.0, -1.0).expect("soliton");
    (recommended(grid, scheme), psi)
}

fn recommended(grid: GridSpec, scheme: SchemeKind) -> SimParams<f64> {
    let probe = SimParams::<f64>::new(grid, 1.0, -1.0, 0.0, scheme, BoundaryKind::Msd).expect("params");
    let dt = probe.stability().expect("bounds").k_recommended;
    SimParams::new(grid, 1.0, -1.0, dt, scheme, BoundaryKind::Msd).expect("params")
}
