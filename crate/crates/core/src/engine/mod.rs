//! Parallel tiled execution of the RK4 step.

mod exec;
mod plan;
pub mod schedule;

pub use exec::{integrate_chunk_parallel, ChunkStats, Engine, HaloMode, ScratchUsage, SubPhaseOrder};
pub use plan::{default_tile_shape, plan_tiles, Tile, TilePlan, HALO_WIDTH};
pub use schedule::PhaseSchedule;
