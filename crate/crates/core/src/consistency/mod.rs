//! Cross-view consistency: depth warping, the masked L1 energy and its
//! guidance step, repair oracles and the refinement loop.

mod energy;
mod oracle;
mod refine;
mod warp;

pub use energy::{consistency_energy, energy_gradient, guidance_step};
pub use oracle::{
    make_oracle, CommandOracle, GroundTruthOracle, IdentityOracle, OracleKind, RepairOracle,
};
pub use refine::{
    mean_energy, neighbor_warps, refine, RefineConfig, RefineReport, RoundDiagnostics, ViewSet,
};
pub use warp::{point_render, unproject, warp_view, ColoredPoint, WarpResult};
