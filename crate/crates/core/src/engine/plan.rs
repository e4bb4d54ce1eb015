use crate::error::{Error, Result};
use crate::field::GridSpec;

/// Halo width copied around each tile. Each 2SHOC step reads only adjacent
/// points, so one cell suffices for both schemes.
pub const HALO_WIDTH: usize = 1;

/// Tile shape used when none is configured.
pub fn default_tile_shape(dim: usize) -> Vec<usize> {
    match dim {
        1 => vec![512],
        2 => vec![16, 16],
        _ => vec![8, 8, 8],
    }
}

/// An owned box of grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tile {
    pub origin: [usize; 3],
    pub extent: [usize; 3],
}

impl Tile {
    pub fn end(&self) -> [usize; 3] {
        [
            self.origin[0] + self.extent[0],
            self.origin[1] + self.extent[1],
            self.origin[2] + self.extent[2],
        ]
    }

    pub fn len(&self) -> usize {
        self.extent.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, i: usize, j: usize, k: usize) -> bool {
        let end = self.end();
        (self.origin[0]..end[0]).contains(&i)
            && (self.origin[1]..end[1]).contains(&j)
            && (self.origin[2]..end[2]).contains(&k)
    }

    /// Owned box widened by the halo and clipped to the grid, as `(lo, hi)`.
    pub fn halo_box(&self, grid: &GridSpec) -> ([usize; 3], [usize; 3]) {
        let n = grid.counts();
        let end = self.end();
        let mut lo = [0; 3];
        let mut hi = [1; 3];
        for axis in 0..3 {
            if axis < grid.dim() {
                lo[axis] = self.origin[axis].saturating_sub(HALO_WIDTH);
                hi[axis] = (end[axis] + HALO_WIDTH).min(n[axis]);
            }
        }
        (lo, hi)
    }
}

/// Decomposition of a grid into tiles, with tiles dealt round-robin to workers.
#[derive(Debug, Clone, PartialEq)]
pub struct TilePlan {
    grid: GridSpec,
    tile_shape: [usize; 3],
    tiles_per_axis: [usize; 3],
    tiles: Vec<Tile>,
    worker_count: usize,
}

/// Covers `grid` with tiles of `tile_shape`, truncating tiles at the far faces.
pub fn plan_tiles(grid: &GridSpec, tile_shape: &[usize], worker_count: usize) -> Result<TilePlan> {
    if tile_shape.len() != grid.dim() {
        return Err(Error::InvalidTiling(format!(
            "tile shape has {} extents for a {}D grid",
            tile_shape.len(),
            grid.dim()
        )));
    }
    if let Some(axis) = tile_shape.iter().position(|&t| t < 2) {
        return Err(Error::InvalidTiling(format!(
            "tile extent along axis {axis} is {}; every active extent must be at least 2",
            tile_shape[axis]
        )));
    }
    if worker_count == 0 {
        return Err(Error::InvalidTiling("worker count must be at least 1".into()));
    }
    let n = grid.counts();
    let mut shape = [1usize; 3];
    shape[..grid.dim()].copy_from_slice(tile_shape);
    let per_axis = [0, 1, 2].map(|a| n[a].div_ceil(shape[a]));
    let mut tiles = Vec::with_capacity(per_axis.iter().product());
    for tz in 0..per_axis[2] {
        for ty in 0..per_axis[1] {
            for tx in 0..per_axis[0] {
                let origin = [tx * shape[0], ty * shape[1], tz * shape[2]];
                let extent = [0, 1, 2].map(|a| shape[a].min(n[a] - origin[a]));
                tiles.push(Tile { origin, extent });
            }
        }
    }
    Ok(TilePlan { grid: *grid, tile_shape: shape, tiles_per_axis: per_axis, tiles, worker_count })
}

impl TilePlan {
    /// Plan with the default tile shape for the grid's dimension.
    pub fn with_defaults(grid: &GridSpec, worker_count: usize) -> Result<Self> {
        plan_tiles(grid, &default_tile_shape(grid.dim()), worker_count)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn tile_shape(&self) -> [usize; 3] {
        self.tile_shape
    }

    pub fn tiles_per_axis(&self) -> [usize; 3] {
        self.tiles_per_axis
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    pub fn worker_count(&self) -> usize {
        self.worker_count
    }

    /// Indices of the tiles assigned to `worker`.
    pub fn worker_tiles(&self, worker: usize) -> impl Iterator<Item = usize> + '_ {
        (worker..self.tiles.len()).step_by(self.worker_count)
    }

    /// Largest halo box volume over all tiles.
    pub fn max_halo_volume(&self) -> usize {
        self.tiles
            .iter()
            .map(|t| {
                let (lo, hi) = t.halo_box(&self.grid);
                (0..3).map(|a| hi[a] - lo[a]).product::<usize>()
            })
            .max()
            .unwrap_or(0)
    }

    /// Index of the tile owning a point.
    pub fn owner(&self, i: usize, j: usize, k: usize) -> usize {
        let t = [i / self.tile_shape[0], j / self.tile_shape[1], k / self.tile_shape[2]];
        (t[2] * self.tiles_per_axis[1] + t[1]) * self.tiles_per_axis[0] + t[0]
    }
}
