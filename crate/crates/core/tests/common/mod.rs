//! Shared fixtures and brute-force reference implementations.
#![allow(dead_code)]

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use s2c_core::consistency::WarpResult;
use s2c_core::geometry::{Camera, CoverageField, Intrinsics, Pose, Vec3};
use s2c_core::splat::{
    photometric_loss_with_grad, pixel_support, render_backward, render_frame, Gaussian3D,
    GaussianSet, Image, PARAMS_PER_GAUSSIAN,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_unit_quaternion(rng: &mut impl Rng) -> UnitQuaternion<f64> {
    loop {
        let q = Quaternion::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = q.norm();
        if n > 0.1 && n <= 1.0 {
            return UnitQuaternion::from_quaternion(q);
        }
    }
}

/// Camera at the origin looking down +z with a centred principal point.
pub fn axis_camera(w: u32, h: u32, f: f64) -> Camera {
    let k = Intrinsics::new(f, f, w as f64 / 2.0, h as f64 / 2.0, w, h, 0.1, 100.0).unwrap();
    Camera::new(0, Pose::identity(), k)
}

/// Small anisotropic Gaussians scattered in front of [`axis_camera`].
pub fn random_gaussians(rng: &mut impl Rng, n: usize) -> GaussianSet {
    GaussianSet::new(
        (0..n)
            .map(|_| {
                let mean = Vec3::new(
                    rng.gen_range(-0.6..0.6),
                    rng.gen_range(-0.6..0.6),
                    rng.gen_range(2.5..4.0),
                );
                let scale = Vec3::new(
                    rng.gen_range(0.1..0.35),
                    rng.gen_range(0.1..0.35),
                    rng.gen_range(0.1..0.35),
                );
                let q = random_unit_quaternion(rng);
                let color = Vector3::new(
                    rng.gen_range(0.05..0.95),
                    rng.gen_range(0.05..0.95),
                    rng.gen_range(0.05..0.95),
                );
                Gaussian3D::new(mean, scale, *q.quaternion(), rng.gen_range(0.3..0.9), color)
            })
            .collect(),
    )
}

pub fn random_image(rng: &mut impl Rng, w: u32, h: u32) -> Image {
    let data = (0..w * h * 3)
        .map(|_| rng.gen_range(0.05f32..0.95))
        .collect();
    Image::from_data(w, h, 3, data).unwrap()
}

fn loss_at(params: &[f64], cam: &Camera, target: &[f64], w: usize, h: usize) -> f64 {
    let set = GaussianSet::from_params(params);
    let frame = render_frame(&set, cam);
    photometric_loss_with_grad(&frame.color, target, w, h, false).0
}

pub struct GradCheck {
    pub checked: usize,
    pub passed: usize,
    pub excluded: usize,
    /// Per parameter, whether it was compared rather than excluded.
    pub checked_mask: Vec<bool>,
    /// `(parameter index, analytic, numeric)` of the failures.
    pub failures: Vec<(usize, f64, f64)>,
}

/// Compares the analytic loss gradient with central differences of step `h`.
///
/// A parameter is excluded when its perturbation changes which splats
/// contribute to some pixel (a truncation, culling or early-stop boundary
/// lies within `h`).
pub fn check_gradients(
    set: &GaussianSet,
    cam: &Camera,
    target: &Image,
    h: f64,
    rel_tol: f64,
) -> GradCheck {
    let (w, hh) = (target.width() as usize, target.height() as usize);
    let tgt = target.to_f64();
    let frame = render_frame(set, cam);
    let (_, d_color) = photometric_loss_with_grad(&frame.color, &tgt, w, hh, true);
    let analytic = render_backward(set, cam, &d_color.unwrap());
    let base = set.to_params();
    let support = pixel_support(set, cam);
    let mut out = GradCheck {
        checked: 0,
        passed: 0,
        excluded: 0,
        checked_mask: vec![false; base.len()],
        failures: Vec::new(),
    };
    for i in 0..base.len() {
        let mut plus = base.clone();
        plus[i] += h;
        let mut minus = base.clone();
        minus[i] -= h;
        let (sp, sm) = (
            GaussianSet::from_params(&plus),
            GaussianSet::from_params(&minus),
        );
        if pixel_support(&sp, cam) != support || pixel_support(&sm, cam) != support {
            out.excluded += 1;
            continue;
        }
        let numeric =
            (loss_at(&plus, cam, &tgt, w, hh) - loss_at(&minus, cam, &tgt, w, hh)) / (2.0 * h);
        let a = analytic[i];
        let scale = a.abs().max(numeric.abs());
        let ok = scale < 1e-7 || (a - numeric).abs() / scale < rel_tol;
        out.checked += 1;
        out.checked_mask[i] = true;
        if ok {
            out.passed += 1;
        } else {
            out.failures.push((i, a, numeric));
        }
    }
    debug_assert_eq!(base.len() % PARAMS_PER_GAUSSIAN, 0);
    out
}

/// Frustum membership from the six bounding planes in world coordinates.
pub fn inside_frustum_planes(cam: &Camera, p: &Vec3) -> bool {
    let k = &cam.intrinsics;
    let rot = cam.pose.rotation;
    let d = p - cam.center();
    let (w, h) = (k.width as f64, k.height as f64);
    let dot = |n: Vector3<f64>| (rot * n).dot(&d);
    let depth = dot(Vector3::z());
    depth >= k.near
        && depth <= k.far
        && dot(Vector3::new(k.fx, 0.0, k.cx)) >= 0.0
        && dot(Vector3::new(-k.fx, 0.0, w - k.cx)) > 0.0
        && dot(Vector3::new(0.0, k.fy, k.cy)) >= 0.0
        && dot(Vector3::new(0.0, -k.fy, h - k.cy)) > 0.0
}

/// Samples unseen by `field` that some camera of `path` sees, by direct
/// enumeration of every (sphere, sample, camera) triple.
pub fn exhaustive_gain_count(path: &[Camera], field: &CoverageField) -> usize {
    let mut count = 0;
    for (sphere, seen) in field.spheres().iter().zip(field.seen()) {
        for (k, s) in sphere.samples.iter().enumerate() {
            if seen.get(k) {
                continue;
            }
            if path.iter().any(|c| inside_frustum_planes(c, s)) {
                count += 1;
            }
        }
    }
    count
}

/// Reference masked L1 energy, one neighbor at a time.
pub fn naive_energy(x0: &Image, warps: &[&WarpResult]) -> f64 {
    let mut e = 0.0;
    for w in warps {
        let mut sum = 0.0;
        let mut valid = 0usize;
        for p in 0..x0.pixel_count() {
            if w.mask.data()[p] <= 0.5 {
                continue;
            }
            valid += 1;
            for c in 0..3 {
                sum += (x0.data()[3 * p + c] as f64 - w.image.data()[3 * p + c] as f64).abs();
            }
        }
        if valid > 0 {
            e += sum / (3 * valid) as f64;
        }
    }
    e
}

/// Camera at `eye` looking at `target` with an `f`-pixel focal length.
pub fn look_camera(id: u32, eye: Vec3, target: Vec3, w: u32, h: u32, f: f64, far: f64) -> Camera {
    let k = Intrinsics::new(f, f, w as f64 / 2.0, h as f64 / 2.0, w, h, 0.1, far).unwrap();
    Camera::new(id, Pose::look_at(eye, target, Vec3::z()), k)
}
