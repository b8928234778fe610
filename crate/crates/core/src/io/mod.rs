//! File formats: PLY clouds, Gaussians and coverage exports, camera and
//! trajectory JSON, PNG, PFM and raw float images.

mod cameras;
mod images;
mod ply;

pub use cameras::{
    read_cameras, read_trajectory, write_cameras, write_trajectory, CameraRecord, TrajectoryRecord,
};
pub use images::{read_pfm, read_png, read_raw, write_pfm, write_png, write_raw, RawHeader};
pub use ply::{
    coverage_points, read_gaussians, read_point_cloud, write_coverage_ply, write_gaussians,
    write_point_cloud, CoverageClass, CoveragePoint, PlyEncoding, PointCloud, GRAY, GREEN, RED,
};

use std::path::Path;

use crate::error::{Error, Result};

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Error::parse(path, e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| {
        Error::parse(
            path,
            format!("line {} column {}: {e}", e.line(), e.column()),
        )
    })
}
