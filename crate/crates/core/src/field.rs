//! Structured-grid storage for complex fields held as split real/imaginary arrays.
//!
//! Every field uses one layout: row-major with `x` fastest, so the point
//! `(i, j, k)` lives at `(k * ny + j) * nx + i`. Frame files use the same order.

use std::fmt::Debug;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floating-point width of a run. Every field in one run shares it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Single,
    Double,
}

impl Precision {
    pub fn byte_width(self) -> usize {
        match self {
            Precision::Single => 4,
            Precision::Double => 8,
        }
    }
}

impl std::str::FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "single" | "f32" => Ok(Precision::Single),
            "double" | "f64" => Ok(Precision::Double),
            other => Err(format!("unknown precision `{other}` (expected single or double)")),
        }
    }
}

/// Scalar type a field can be stored in.
pub trait Real: Float + Debug + Default + Send + Sync + 'static {
    const PRECISION: Precision;

    /// Default floor on `|Ψ|` below which the MSD boundary refuses to divide.
    const EPS_DIV: f64;

    fn of(x: f64) -> Self;
    fn as_f64(self) -> f64;
    fn write_le(self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;
    fn bits(self) -> u64;
}

impl Real for f64 {
    const PRECISION: Precision = Precision::Double;
    const EPS_DIV: f64 = 1e-12;

    #[inline(always)]
    fn of(x: f64) -> Self {
        x
    }
    #[inline(always)]
    fn as_f64(self) -> f64 {
        self
    }
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes.try_into().expect("8 bytes"))
    }
    fn bits(self) -> u64 {
        self.to_bits()
    }
}

impl Real for f32 {
    const PRECISION: Precision = Precision::Single;
    const EPS_DIV: f64 = 1e-6;

    #[inline(always)]
    fn of(x: f64) -> Self {
        x as f32
    }
    #[inline(always)]
    fn as_f64(self) -> f64 {
        self as f64
    }
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes.try_into().expect("4 bytes"))
    }
    fn bits(self) -> u64 {
        self.to_bits() as u64
    }
}

/// Uniform structured grid in one to three dimensions.
///
/// Unused directions have a point count of one. The spacing `h` is shared by
/// every direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    n: [usize; 3],
    h: f64,
    origin: [f64; 3],
}

impl GridSpec {
    /// Builds a grid from the point counts of the active directions.
    pub fn new(counts: &[usize], h: f64, origin: &[f64]) -> Result<Self> {
        let dim = counts.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        if origin.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "origin has {} components for a {dim}D grid",
                origin.len()
            )));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing h must be positive, got {h}")));
        }
        let mut n = [1usize; 3];
        let mut o = [0.0f64; 3];
        for axis in 0..dim {
            if counts[axis] < 3 {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis} has {} points; at least 3 are needed so interior points exist",
                    counts[axis]
                )));
            }
            if !origin[axis].is_finite() {
                return Err(Error::InvalidGrid(format!("origin component {axis} is not finite")));
            }
            n[axis] = counts[axis];
            o[axis] = origin[axis];
        }
        Ok(GridSpec { dim, n, h, origin: o })
    }

    pub fn one_d(nx: usize, h: f64, x0: f64) -> Result<Self> {
        Self::new(&[nx], h, &[x0])
    }

    pub fn two_d(nx: usize, ny: usize, h: f64, origin: [f64; 2]) -> Result<Self> {
        Self::new(&[nx, ny], h, &origin)
    }

    pub fn three_d(nx: usize, ny: usize, nz: usize, h: f64, origin: [f64; 3]) -> Result<Self> {
        Self::new(&[nx, ny, nz], h, &origin)
    }

    /// Grid of `counts` points centred on the coordinate origin.
    pub fn centered(counts: &[usize], h: f64) -> Result<Self> {
        let origin: Vec<f64> = counts.iter().map(|&c| -0.5 * (c.saturating_sub(1)) as f64 * h).collect();
        Self::new(counts, h, &origin)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn nx(&self) -> usize {
        self.n[0]
    }
    pub fn ny(&self) -> usize {
        self.n[1]
    }
    pub fn nz(&self) -> usize {
        self.n[2]
    }
    pub fn counts(&self) -> [usize; 3] {
        self.n
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Offset of `(i, j, k)` in every field on this grid.
    #[inline(always)]
    pub fn linear_index(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(
            i < self.n[0] && j < self.n[1] && k < self.n[2],
            "({i},{j},{k}) outside {:?}",
            self.n
        );
        (k * self.n[1] + j) * self.n[0] + i
    }

    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize, usize) {
        let i = index % self.n[0];
        let rest = index / self.n[0];
        (i, rest % self.n[1], rest / self.n[1])
    }

    /// Linear stride of each axis.
    pub fn strides(&self) -> [usize; 3] {
        [1, self.n[0], self.n[0] * self.n[1]]
    }

    /// Physical position of a grid point along `axis`.
    #[inline]
    pub fn coord(&self, axis: usize, index: usize) -> f64 {
        self.origin[axis] + index as f64 * self.h
    }

    /// Physical position of the midpoint of the grid along `axis`.
    pub fn center(&self, axis: usize) -> f64 {
        self.origin[axis] + 0.5 * (self.n[axis] - 1) as f64 * self.h
    }

    /// Physical length covered along `axis`.
    pub fn extent(&self, axis: usize) -> f64 {
        (self.n[axis] - 1) as f64 * self.h
    }

    /// True when the point lies on any face of the grid.
    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize, k: usize) -> bool {
        let on = |c: usize, axis: usize| self.dim > axis && (c == 0 || c == self.n[axis] - 1);
        on(i, 0) || on(j, 1) || on(k, 2)
    }

    /// Interior point one step inward from a boundary point in every direction
    /// in which it touches a face (the diagonal neighbour at edges and corners).
    pub fn inward_neighbor(&self, i: usize, j: usize, k: usize) -> (usize, usize, usize) {
        let step = |c: usize, axis: usize| {
            if self.dim <= axis {
                c
            } else if c == 0 {
                1
            } else if c == self.n[axis] - 1 {
                c - 1
            } else {
                c
            }
        };
        (step(i, 0), step(j, 1), step(k, 2))
    }

    pub fn boundary_len(&self) -> usize {
        let interior: usize = (0..self.dim).map(|a| self.n[a] - 2).product();
        self.len() - interior
    }
}

/// Complex field stored as two real arrays of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField<T> {
    grid: GridSpec,
    pub re: Vec<T>,
    pub im: Vec<T>,
}

impl<T: Real> ComplexField<T> {
    pub fn zeros(grid: GridSpec) -> Self {
        Self::uniform(grid, 0.0, 0.0)
    }

    /// Field holding the same value at every point.
    pub fn uniform(grid: GridSpec, value_re: f64, value_im: f64) -> Self {
        let n = grid.len();
        ComplexField {
            grid,
            re: vec![T::of(value_re); n],
            im: vec![T::of(value_im); n],
        }
    }

    pub fn from_parts(grid: GridSpec, re: Vec<T>, im: Vec<T>) -> Result<Self> {
        if re.len() != grid.len() || im.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "field arrays have {}/{} entries, grid has {}",
                re.len(),
                im.len(),
                grid.len()
            )));
        }
        Ok(ComplexField { grid, re, im })
    }

    /// Samples `f(x, y, z)` at every grid point; unused coordinates are zero.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64, f64, f64) -> (f64, f64)) -> Self {
        let mut field = Self::zeros(grid);
        for k in 0..grid.nz() {
            let z = if grid.dim() > 2 { grid.coord(2, k) } else { 0.0 };
            for j in 0..grid.ny() {
                let y = if grid.dim() > 1 { grid.coord(1, j) } else { 0.0 };
                for i in 0..grid.nx() {
                    let idx = grid.linear_index(i, j, k);
                    let (re, im) = f(grid.coord(0, i), y, z);
                    field.re[idx] = T::of(re);
                    field.im[idx] = T::of(im);
                }
            }
        }
        field
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    #[inline]
    pub fn get(&self, index: usize) -> (T, T) {
        (self.re[index], self.im[index])
    }

    #[inline]
    pub fn set(&mut self, index: usize, value: (T, T)) {
        self.re[index] = value.0;
        self.im[index] = value.1;
    }

    #[inline]
    pub fn modulus_sq(&self, index: usize) -> T {
        let (r, i) = self.get(index);
        r * r + i * i
    }

    /// `self <- self + alpha * other`, elementwise.
    pub fn axpy(&mut self, alpha: T, other: &ComplexField<T>) {
        assert_eq!(self.grid, other.grid, "axpy across different grids");
        for (y, x) in self.re.iter_mut().zip(&other.re) {
            *y = *y + alpha * *x;
        }
        for (y, x) in self.im.iter_mut().zip(&other.im) {
            *y = *y + alpha * *x;
        }
    }

    pub fn copy_from(&mut self, other: &ComplexField<T>) {
        assert_eq!(self.grid, other.grid, "copy across different grids");
        self.re.copy_from_slice(&other.re);
        self.im.copy_from_slice(&other.im);
    }

    pub fn is_finite(&self) -> bool {
        self.re.iter().chain(&self.im).all(|v| v.is_finite())
    }

    /// Discrete L2 norm `sqrt(h^d * sum |Ψ|²)`, accumulated in f64.
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self
            .re
            .iter()
            .zip(&self.im)
            .map(|(r, i)| {
                let (r, i) = (r.as_f64(), i.as_f64());
                r * r + i * i
            })
            .sum();
        (sum * self.grid.h.powi(self.grid.dim as i32)).sqrt()
    }

    /// True when both arrays match bit for bit.
    pub fn bit_eq(&self, other: &ComplexField<T>) -> bool {
        self.grid == other.grid
            && self.re.len() == other.re.len()
            && self.re.iter().zip(&other.re).all(|(a, b)| a.bits() == b.bits())
            && self.im.iter().zip(&other.im).all(|(a, b)| a.bits() == b.bits())
    }

    /// Converts to another precision through f64.
    pub fn cast<U: Real>(&self) -> ComplexField<U> {
        ComplexField {
            grid: self.grid,
            re: self.re.iter().map(|v| U::of(v.as_f64())).collect(),
            im: self.im.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }
}

/// Real-valued field, used for the external potential.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField<T> {
    grid: GridSpec,
    pub values: Vec<T>,
}

impl<T: Real> RealField<T> {
    pub fn uniform(grid: GridSpec, value: f64) -> Self {
        RealField { grid, values: vec![T::of(value); grid.len()] }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::uniform(grid, 0.0)
    }

    pub fn from_values(grid: GridSpec, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "potential has {} entries, grid has {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(RealField { grid, values })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
}
