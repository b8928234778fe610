//! Browser demo: look around a synthetic room, plan a trajectory and warp
//! one view into another.
//!
//! The [`Demo`] methods are exported to JavaScript; the same logic is plain
//! Rust so it can be tested natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use s2c_core::consistency::{consistency_energy, warp_view};
use s2c_core::geometry::{
    compute_obb, Camera, CoverageField, Intrinsics, OrientedBoundingBox, Pose, Vec3,
};
use s2c_core::planner::{plan_trajectory, Origin, PlannerConfig, WORLD_UP};
use s2c_core::scene::{generate_synthetic_scene, SceneKind, SceneParams, SyntheticScene};
use s2c_core::splat::{render, Image};

pub const VIEW_WIDTH: u32 = 96;
pub const VIEW_HEIGHT: u32 = 72;

/// Interleaved 8-bit RGBA with opaque alpha.
pub fn to_rgba(img: &Image) -> Vec<u8> {
    let mut out = Vec::with_capacity(img.pixel_count() * 4);
    for px in img.data().chunks(img.channels()) {
        for c in 0..3 {
            let v = px[c.min(img.channels() - 1)];
            out.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
        }
        out.push(255);
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct PlannedCamera {
    pub id: u32,
    pub position: [f64; 3],
    pub forward: [f64; 3],
    pub planned: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanSummary {
    pub input_coverage: f64,
    pub final_coverage: f64,
    pub rejections: usize,
    pub cameras: Vec<PlannedCamera>,
    /// Floor-plan bounds `[min_x, min_y, max_x, max_y]` of the scene points.
    pub bounds: [f64; 4],
}

#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct WarpPreview {
    rgba: Vec<u8>,
    energy: f64,
    valid_fraction: f64,
}

#[wasm_bindgen]
impl WarpPreview {
    /// Warped source view; pixels without a source point are black.
    pub fn rgba(&self) -> Vec<u8> {
        self.rgba.clone()
    }

    /// Consistency energy of the destination rendering against the warp.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn valid_fraction(&self) -> f64 {
        self.valid_fraction
    }
}

#[wasm_bindgen]
pub struct Demo {
    scene: SyntheticScene,
    obb: OrientedBoundingBox,
    field: CoverageField,
    intrinsics: Intrinsics,
}

impl Demo {
    pub fn build(kind: SceneKind, seed: u64) -> s2c_core::Result<Self> {
        let params = SceneParams {
            width: VIEW_WIDTH,
            height: VIEW_HEIGHT,
            heldout_cameras: 0,
            ..SceneParams::default()
        };
        let scene = generate_synthetic_scene(kind, seed, &params)?;
        let obb = compute_obb(&scene.points.positions)?;
        // A lighter field than the command-line default keeps planning
        // interactive in the browser.
        let field = CoverageField::build(&scene.points.positions, &obb, 96, 32, None, 32, seed)?;
        let intrinsics = Intrinsics::with_fov(
            params.width,
            params.height,
            params.hfov_deg,
            params.near,
            params.far,
        )?;
        Ok(Self {
            scene,
            obb,
            field,
            intrinsics,
        })
    }

    /// Camera at the room center looking along yaw (about +z, from +x) and
    /// pitch (up from the horizon), both in degrees.
    pub fn look_camera(&self, yaw_deg: f64, pitch_deg: f64) -> Camera {
        let (yaw, pitch) = (
            yaw_deg.to_radians(),
            pitch_deg.clamp(-80.0, 80.0).to_radians(),
        );
        let dir = Vec3::new(
            yaw.cos() * pitch.cos(),
            yaw.sin() * pitch.cos(),
            pitch.sin(),
        );
        let eye = self.obb.center;
        Camera::new(0, Pose::look_at(eye, eye + dir, WORLD_UP), self.intrinsics)
    }

    pub fn view(&self, yaw_deg: f64, pitch_deg: f64) -> Image {
        render(&self.scene.gaussians, &self.look_camera(yaw_deg, pitch_deg)).color
    }

    pub fn plan_summary(&self, gain_threshold: f64) -> s2c_core::Result<PlanSummary> {
        let cfg = PlannerConfig {
            gain_threshold,
            ..PlannerConfig::default()
        };
        let out = plan_trajectory(&self.scene.input_cameras, &self.field, &self.obb, &cfg)?;
        let cameras = out
            .trajectory
            .cameras
            .iter()
            .zip(&out.trajectory.origins)
            .map(|(c, o)| PlannedCamera {
                id: c.id,
                position: c.center().into(),
                forward: c.pose.forward().into(),
                planned: *o == Origin::Planned,
            })
            .collect();
        let pts = &self.scene.points.positions;
        let fold = |f: fn(f64, f64) -> f64, init: f64, axis: usize| {
            pts.iter().map(|p| p[axis]).fold(init, f)
        };
        Ok(PlanSummary {
            input_coverage: out.stats.input_coverage,
            final_coverage: out.stats.final_coverage,
            rejections: out.stats.rejections,
            cameras,
            bounds: [
                fold(f64::min, f64::INFINITY, 0),
                fold(f64::min, f64::INFINITY, 1),
                fold(f64::max, f64::NEG_INFINITY, 0),
                fold(f64::max, f64::NEG_INFINITY, 1),
            ],
        })
    }

    /// Renders the source view with depth, warps it into the destination
    /// view and scores the destination rendering against it.
    pub fn warp_preview(
        &self,
        yaw_src: f64,
        yaw_dst: f64,
        pitch: f64,
    ) -> s2c_core::Result<WarpPreview> {
        let src = self.look_camera(yaw_src, pitch);
        let dst = Camera {
            id: 1,
            ..self.look_camera(yaw_dst, pitch)
        };
        let s = render(&self.scene.gaussians, &src);
        let target = render(&self.scene.gaussians, &dst).color;
        let warp = warp_view(&s.color, &s.depth, &src, &dst, 0, 1)?;
        let energy = consistency_energy(&target, Some(&warp), None)?;
        Ok(WarpPreview {
            rgba: to_rgba(&warp.image),
            energy,
            valid_fraction: warp.valid_pixels() as f64 / warp.mask.pixel_count() as f64,
        })
    }
}

fn js_err(e: s2c_core::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(kind: &str, seed: u64) -> Result<Demo, JsValue> {
        let kind: SceneKind = kind.parse().map_err(js_err)?;
        Self::build(kind, seed).map_err(js_err)
    }

    pub fn width(&self) -> u32 {
        VIEW_WIDTH
    }

    pub fn height(&self) -> u32 {
        VIEW_HEIGHT
    }

    pub fn gaussian_count(&self) -> usize {
        self.scene.gaussians.len()
    }

    /// RGBA view from the room center.
    pub fn render_rgba(&self, yaw_deg: f64, pitch_deg: f64) -> Vec<u8> {
        to_rgba(&self.view(yaw_deg, pitch_deg))
    }

    /// Trajectory and coverage for a gain threshold, as JSON.
    pub fn plan(&self, gain_threshold: f64) -> Result<String, JsValue> {
        let s = self.plan_summary(gain_threshold).map_err(js_err)?;
        Ok(serde_json::to_string(&s).expect("summary serializes"))
    }

    pub fn warp(&self, yaw_src: f64, yaw_dst: f64, pitch: f64) -> Result<WarpPreview, JsValue> {
        self.warp_preview(yaw_src, yaw_dst, pitch).map_err(js_err)
    }
}
