//! Greedy coverage-driven camera trajectory planning.
//!
//! Candidate cameras are drawn inside the scene box, connected to their two
//! nearest accepted cameras by interpolated pose paths, and the whole path is
//! kept when it reveals more than a threshold fraction of unseen coverage
//! samples. Planning stops after a fixed number of consecutive rejections.

use nalgebra::{Quaternion, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    visible_samples, Bitmask, Camera, CoverageField, Intrinsics, OrientedBoundingBox, Pose, Vec3,
};

/// Scenes are z-up.
pub const WORLD_UP: Vec3 = Vec3::new(0.0, 0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    /// Minimum fraction of all coverage samples a path must newly reveal.
    pub gain_threshold: f64,
    /// Consecutive rejections after which planning stops.
    pub max_stall_steps: usize,
    /// Pose-distance step between interpolated cameras.
    pub interp_threshold: f64,
    pub weight_translation: f64,
    pub weight_rotation: f64,
    pub rng_seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            gain_threshold: 0.1,
            max_stall_steps: 30,
            interp_threshold: 0.2,
            weight_translation: 1.0,
            weight_rotation: 1.0,
            rng_seed: 0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gain_threshold > 0.0 && self.gain_threshold <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "gain threshold {} outside (0, 1]",
                self.gain_threshold
            )));
        }
        if self.max_stall_steps == 0 {
            return Err(Error::InvalidArgument(
                "max stall steps must be positive".into(),
            ));
        }
        if !(self.interp_threshold > 0.0) {
            return Err(Error::InvalidArgument(
                "interpolation threshold must be positive".into(),
            ));
        }
        if !(self.weight_translation >= 0.0 && self.weight_rotation >= 0.0) {
            return Err(Error::InvalidArgument(
                "pose distance weights must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Input,
    Planned,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub cameras: Vec<Camera>,
    pub origins: Vec<Origin>,
}

impl Trajectory {
    pub fn from_inputs(cameras: Vec<Camera>) -> Self {
        let origins = vec![Origin::Input; cameras.len()];
        Self { cameras, origins }
    }

    pub fn len(&self) -> usize {
        self.cameras.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cameras.is_empty()
    }

    pub fn planned_count(&self) -> usize {
        self.origins
            .iter()
            .filter(|o| **o == Origin::Planned)
            .count()
    }
}

fn quat_dot(a: &UnitQuaternion<f64>, b: &UnitQuaternion<f64>) -> f64 {
    let (a, b) = (a.quaternion(), b.quaternion());
    a.w * b.w + a.i * b.i + a.j * b.j + a.k * b.k
}

/// Weighted translation distance plus geodesic rotation angle.
///
/// The angle `acos(2 <q, q'>^2 - 1)` is evaluated as
/// `4 atan2(|q - s q'|, |q + s q'|)` with `s = sign <q, q'>`, which is the
/// same quantity but exactly zero for equal rotations and well conditioned
/// near zero.
pub fn pose_distance(a: &Pose, b: &Pose, w_t: f64, w_r: f64) -> f64 {
    let (qa, qb) = (a.rotation.quaternion(), b.rotation.quaternion());
    let qb = if quat_dot(&a.rotation, &b.rotation) < 0.0 {
        -qb
    } else {
        *qb
    };
    let angle = 4.0 * (qa - qb).norm().atan2((qa + qb).norm());
    w_t * (a.translation - b.translation).norm() + w_r * angle
}

fn slerp_shortest(a: &UnitQuaternion<f64>, b: &UnitQuaternion<f64>, s: f64) -> UnitQuaternion<f64> {
    let qa = *a.quaternion();
    let mut qb = *b.quaternion();
    let mut dot = quat_dot(a, b);
    if dot < 0.0 {
        qb = -qb;
        dot = -dot;
    }
    let q: Quaternion<f64> = if dot > 1.0 - 1e-12 {
        qa * (1.0 - s) + qb * s
    } else {
        let theta = dot.min(1.0).acos();
        let sin = theta.sin();
        qa * (((1.0 - s) * theta).sin() / sin) + qb * ((s * theta).sin() / sin)
    };
    UnitQuaternion::from_quaternion(q)
}

/// `m + 1` poses from `a` to `b` inclusive: linear translation and
/// shortest-arc spherical rotation interpolation.
pub fn interpolate_pair(a: &Pose, b: &Pose, m: usize) -> Result<Vec<Pose>> {
    if m == 0 {
        return Err(Error::InvalidArgument("interpolation needs m >= 1".into()));
    }
    let mut out = Vec::with_capacity(m + 1);
    out.push(*a);
    for i in 1..m {
        let s = i as f64 / m as f64;
        out.push(Pose::new(
            slerp_shortest(&a.rotation, &b.rotation, s),
            a.translation * (1.0 - s) + b.translation * s,
        ));
    }
    out.push(*b);
    Ok(out)
}

fn steps_for(d: f64, d_phi: f64) -> usize {
    ((d / d_phi).floor() as usize).max(1)
}

/// Path `neighbor0 -> new_cam -> neighbor1` with `m1 + m2 + 1` cameras.
///
/// Endpoints keep the neighbor ids; interior cameras carry `new_cam.id`.
/// All cameras use `new_cam`'s intrinsics.
pub fn build_candidate_path(
    new_cam: &Camera,
    neighbors: (&Camera, &Camera),
    d_phi: f64,
    w_t: f64,
    w_r: f64,
) -> Result<Vec<Camera>> {
    if !(d_phi > 0.0) {
        return Err(Error::InvalidArgument(
            "interpolation threshold must be positive".into(),
        ));
    }
    let (n1, n2) = neighbors;
    let m1 = steps_for(pose_distance(&n1.pose, &new_cam.pose, w_t, w_r), d_phi);
    let m2 = steps_for(pose_distance(&new_cam.pose, &n2.pose, w_t, w_r), d_phi);
    let first = interpolate_pair(&n1.pose, &new_cam.pose, m1)?;
    let second = interpolate_pair(&new_cam.pose, &n2.pose, m2)?;
    let k = new_cam.intrinsics;
    let mut path = Vec::with_capacity(m1 + m2 + 1);
    for (i, p) in first
        .into_iter()
        .chain(second.into_iter().skip(1))
        .enumerate()
    {
        let id = if i == 0 {
            n1.id
        } else if i == m1 + m2 {
            n2.id
        } else {
            new_cam.id
        };
        path.push(Camera::new(id, p, k));
    }
    Ok(path)
}

/// Number of coverage samples seen by some camera of `path` but not yet in
/// `field.seen`. Equals the sum of the sequential per-camera gains.
pub fn information_gain_count(path: &[Camera], field: &CoverageField) -> usize {
    if path.is_empty() {
        return 0;
    }
    field
        .spheres()
        .par_iter()
        .zip(field.seen().par_iter())
        .map(|(sphere, seen)| {
            let mut acc = seen.clone();
            let mut new = 0;
            for cam in path {
                let vis = visible_samples(cam, sphere);
                new += vis.count_without(&acc);
                acc.union_with(&vis);
            }
            new
        })
        .sum()
}

/// [`information_gain_count`] as a fraction of the field's `N * N'` samples.
pub fn information_gain(path: &[Camera], field: &CoverageField) -> f64 {
    information_gain_count(path, field) as f64 / field.total_samples() as f64
}

/// Sets every sample seen by `path`.
pub fn mark_seen(path: &[Camera], field: &CoverageField) -> CoverageField {
    let mut out = field.clone();
    mark_seen_in_place(path, &mut out);
    out
}

pub fn mark_seen_in_place(path: &[Camera], field: &mut CoverageField) {
    if path.is_empty() {
        return;
    }
    let vis: Vec<Bitmask> = field.union_visibility(path);
    for (seen, v) in field.seen_mut().iter_mut().zip(&vis) {
        seen.union_with(v);
    }
}

/// Fraction of coverage samples visible from at least one of `cameras`,
/// ignoring whatever `field` has already marked.
pub fn coverage_of(cameras: &[Camera], field: &CoverageField) -> f64 {
    let vis = field.union_visibility(cameras);
    vis.iter().map(Bitmask::count_ones).sum::<usize>() as f64 / field.total_samples() as f64
}

/// Random camera inside `obb` aimed at the centroid of unseen samples (or the
/// box center once everything is seen).
pub fn sample_camera_in_obb<R: Rng>(
    obb: &OrientedBoundingBox,
    field: &CoverageField,
    intrinsics: Intrinsics,
    id: u32,
    rng: &mut R,
) -> Camera {
    let local = Vec3::new(
        rng.gen_range(-1.0..=1.0) * obb.half_extents.x,
        rng.gen_range(-1.0..=1.0) * obb.half_extents.y,
        rng.gen_range(-1.0..=1.0) * obb.half_extents.z,
    );
    let eye = obb.from_local(&local);
    let target = field.unseen_centroid().unwrap_or(obb.center);
    Camera::new(id, Pose::look_at(eye, target, WORLD_UP), intrinsics)
}

fn two_nearest<'a>(
    cams: &'a [Camera],
    probe: &Camera,
    w_t: f64,
    w_r: f64,
) -> (&'a Camera, &'a Camera) {
    let mut ranked: Vec<(f64, u32, usize)> = cams
        .iter()
        .enumerate()
        .map(|(i, c)| (pose_distance(&c.pose, &probe.pose, w_t, w_r), c.id, i))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    (&cams[ranked[0].2], &cams[ranked[1].2])
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanStats {
    /// Candidates drawn in total.
    pub iterations: usize,
    pub rejections: usize,
    /// Consecutive rejections that ended the search.
    pub trailing_rejections: usize,
    pub accepted_paths: usize,
    /// Gain fraction of every accepted path, in acceptance order.
    pub accepted_gains: Vec<f64>,
    pub input_coverage: f64,
    pub final_coverage: f64,
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub trajectory: Trajectory,
    /// Field with every sample seen by the trajectory marked.
    pub field: CoverageField,
    pub stats: PlanStats,
}

/// Greedy trajectory planning over a coverage field.
///
/// `field` is taken as the pre-existing observation state; input cameras are
/// marked on top of it before the search starts.
pub fn plan_trajectory(
    input_cams: &[Camera],
    field: &CoverageField,
    obb: &OrientedBoundingBox,
    cfg: &PlannerConfig,
) -> Result<PlanOutcome> {
    cfg.validate()?;
    if input_cams.len() < 2 {
        return Err(Error::InsufficientInputCameras {
            got: input_cams.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut field = mark_seen(input_cams, field);
    let mut traj = Trajectory::from_inputs(input_cams.to_vec());
    let mut stats = PlanStats {
        input_coverage: field.coverage_fraction(),
        ..Default::default()
    };
    let intrinsics = input_cams[0].intrinsics;
    let mut next_id = input_cams.iter().map(|c| c.id).max().unwrap_or(0) + 1;
    let (w_t, w_r) = (cfg.weight_translation, cfg.weight_rotation);

    let mut stall = 0;
    while stall < cfg.max_stall_steps {
        stats.iterations += 1;
        let candidate = sample_camera_in_obb(obb, &field, intrinsics, next_id, &mut rng);
        let neighbors = two_nearest(&traj.cameras, &candidate, w_t, w_r);
        let path = build_candidate_path(&candidate, neighbors, cfg.interp_threshold, w_t, w_r)?;
        let gain = information_gain(&path, &field);
        if gain > cfg.gain_threshold {
            mark_seen_in_place(&path, &mut field);
            // endpoints are the neighbors, already part of the trajectory
            for cam in &path[1..path.len() - 1] {
                traj.cameras
                    .push(Camera::new(next_id, cam.pose, cam.intrinsics));
                traj.origins.push(Origin::Planned);
                next_id += 1;
            }
            log::debug!(
                "accepted path of {} cameras with gain {gain:.4} (coverage {:.4})",
                path.len(),
                field.coverage_fraction()
            );
            stats.accepted_paths += 1;
            stats.accepted_gains.push(gain);
            stall = 0;
        } else {
            stats.rejections += 1;
            stall += 1;
        }
    }
    stats.trailing_rejections = stall;
    stats.final_coverage = field.coverage_fraction();
    Ok(PlanOutcome {
        trajectory: traj,
        field,
        stats,
    })
}

/// Baseline trajectory: inputs plus evenly interpolated cameras between
/// consecutive inputs, `total` cameras overall.
pub fn consecutive_interpolation(inputs: &[Camera], total: usize) -> Result<Vec<Camera>> {
    if inputs.len() < 2 {
        return Err(Error::InsufficientInputCameras { got: inputs.len() });
    }
    let segments = inputs.len() - 1;
    let extra = total.saturating_sub(inputs.len());
    let mut out = Vec::with_capacity(inputs.len() + extra);
    let mut next_id = inputs.iter().map(|c| c.id).max().unwrap_or(0) + 1;
    for (s, pair) in inputs.windows(2).enumerate() {
        let interior = extra / segments + usize::from(s < extra % segments);
        let poses = interpolate_pair(&pair[0].pose, &pair[1].pose, interior + 1)?;
        out.push(pair[0]);
        for p in &poses[1..poses.len() - 1] {
            out.push(Camera::new(next_id, *p, pair[0].intrinsics));
            next_id += 1;
        }
    }
    out.push(*inputs.last().expect("at least two inputs"));
    Ok(out)
}
