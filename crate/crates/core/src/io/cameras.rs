use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_json, write_json};
use crate::error::{Error, Result};
use crate::geometry::{Camera, Intrinsics, Pose, Vec3};
use crate::planner::{Origin, Trajectory};

/// On-disk camera: camera-to-world rotation `[w, x, y, z]`, camera center
/// and pinhole intrinsics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraRecord {
    pub id: u32,
    pub quaternion: [f64; 4],
    pub translation: [f64; 3],
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    pub near: f64,
    pub far: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<Origin>,
}

impl CameraRecord {
    pub fn from_camera(c: &Camera, origin: Option<Origin>) -> Self {
        let k = &c.intrinsics;
        let t = c.pose.translation;
        Self {
            id: c.id,
            quaternion: c.pose.wxyz(),
            translation: [t.x, t.y, t.z],
            fx: k.fx,
            fy: k.fy,
            cx: k.cx,
            cy: k.cy,
            width: k.width,
            height: k.height,
            near: k.near,
            far: k.far,
            origin,
        }
    }

    pub fn to_camera(&self) -> Result<Camera> {
        let k = Intrinsics::new(
            self.fx,
            self.fy,
            self.cx,
            self.cy,
            self.width,
            self.height,
            self.near,
            self.far,
        )?;
        let pose = Pose::from_wxyz(self.quaternion, Vec3::from(self.translation))?;
        Ok(Camera::new(self.id, pose, k))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub cameras: Vec<CameraRecord>,
}

fn context(path: &Path, i: usize, e: Error) -> Error {
    Error::parse(path, format!("camera {i}: {e}"))
}

pub fn write_cameras(path: &Path, cameras: &[Camera]) -> Result<()> {
    let records: Vec<CameraRecord> = cameras
        .iter()
        .map(|c| CameraRecord::from_camera(c, None))
        .collect();
    write_json(path, &records)
}

pub fn read_cameras(path: &Path) -> Result<Vec<Camera>> {
    let records: Vec<CameraRecord> = read_json(path)?;
    records
        .iter()
        .enumerate()
        .map(|(i, r)| r.to_camera().map_err(|e| context(path, i, e)))
        .collect()
}

pub fn write_trajectory(path: &Path, t: &Trajectory) -> Result<()> {
    let cameras = t
        .cameras
        .iter()
        .zip(&t.origins)
        .map(|(c, o)| CameraRecord::from_camera(c, Some(*o)))
        .collect();
    write_json(path, &TrajectoryRecord { cameras })
}

/// Reads a trajectory file; a bare camera array is accepted as an
/// all-input trajectory.
pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let records: Vec<CameraRecord> = match serde_json::from_str::<TrajectoryRecord>(&text) {
        Ok(t) => t.cameras,
        Err(_) => read_json(path)?,
    };
    let mut cameras = Vec::with_capacity(records.len());
    let mut origins = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        cameras.push(r.to_camera().map_err(|e| context(path, i, e))?);
        origins.push(r.origin.unwrap_or(Origin::Input));
    }
    Ok(Trajectory { cameras, origins })
}
