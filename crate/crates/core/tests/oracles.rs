//! Library results against brute-force references and hand-derived values.

mod common;

use common::*;
use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use rand::Rng;
use s2c_core::geometry::{
    compute_obb, farthest_point_sampling, packing_radius, point_in_frustum, Pose, Vec3,
};
use s2c_core::planner::pose_distance;
use s2c_core::splat::{gaussian_window, psnr, ssim, Image, SSIM_C1, SSIM_C2};

#[test]
fn frustum_test_agrees_with_plane_clipping() {
    let mut r = rng(11);
    let mut inside = 0;
    for trial in 0..10 {
        let eye = Vec3::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), 0.0);
        let target = Vec3::new(r.gen_range(2.0..3.0), r.gen_range(-1.0..1.0), 0.5);
        let cam = look_camera(trial, eye, target, 64, 48, 45.0, 5.0);
        for _ in 0..1000 {
            let p = Vec3::new(
                r.gen_range(-2.0..6.0),
                r.gen_range(-4.0..4.0),
                r.gen_range(-3.0..3.0),
            );
            let expected = inside_frustum_planes(&cam, &p);
            assert_eq!(point_in_frustum(&cam, &p), expected, "{p:?}");
            inside += usize::from(expected);
        }
    }
    assert!(inside > 200, "too few interior points: {inside}");
}

fn reference_fps(points: &[Vec3], count: usize) -> Vec<usize> {
    let mut chosen = vec![0];
    while chosen.len() < count {
        let mut best = (0, -1.0);
        for (i, p) in points.iter().enumerate() {
            let d = chosen
                .iter()
                .map(|&c| (p - points[c]).norm())
                .fold(f64::INFINITY, f64::min);
            if d > best.1 {
                best = (i, d);
            }
        }
        chosen.push(best.0);
    }
    chosen
}

#[test]
fn farthest_point_sampling_matches_quadratic_reference() {
    let mut r = rng(12);
    for _ in 0..5 {
        let pts: Vec<Vec3> = (0..300)
            .map(|_| Vec3::new(r.gen(), r.gen(), r.gen()))
            .collect();
        let (idx, gap) = farthest_point_sampling(&pts, 25);
        assert_eq!(idx, reference_fps(&pts, 25));
        let min_pair = idx
            .iter()
            .enumerate()
            .flat_map(|(a, &i)| idx[a + 1..].iter().map(move |&j| (i, j)))
            .map(|(i, j)| (pts[i] - pts[j]).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(gap <= min_pair + 1e-12);
    }
}

#[test]
fn packing_radius_is_half_the_closest_pair() {
    let centers = [
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(3.0, 0.0, 0.0),
        Vec3::new(0.0, 0.0, 1.2),
    ];
    assert_eq!(packing_radius(&centers), 0.6);
}

#[test]
fn obb_axes_diagonalize_the_point_covariance() {
    let mut r = rng(13);
    let rot = UnitQuaternion::from_euler_angles(0.3, -0.2, 0.8);
    let pts: Vec<Vec3> = (0..2000)
        .map(|_| {
            let l = Vec3::new(
                r.gen_range(-2.0..2.0),
                r.gen_range(-1.0..1.0),
                r.gen_range(-0.4..0.4),
            );
            rot * l + Vec3::new(1.0, 2.0, 3.0)
        })
        .collect();
    let obb = compute_obb(&pts).unwrap();
    assert!((obb.axes.transpose() * obb.axes - Matrix3::identity()).norm() < 1e-9);
    let mean = pts.iter().sum::<Vec3>() / pts.len() as f64;
    let mut cov = Matrix3::zeros();
    for p in &pts {
        let l = obb.axes.transpose() * (p - mean);
        cov += l * l.transpose();
    }
    cov /= pts.len() as f64;
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                assert!(cov[(i, j)].abs() < 1e-9 * cov.norm(), "{cov}");
            }
        }
    }
    // Columns are ordered by decreasing spread.
    assert!(cov[(0, 0)] > cov[(1, 1)] && cov[(1, 1)] > cov[(2, 2)]);
    assert!((obb.axis(0).dot(&(rot * Vector3::x())).abs() - 1.0).abs() < 1e-2);
    assert!(pts.iter().all(|p| obb.contains(p)));
}

/// Direct 2D windowed SSIM with zero padding, one pixel at a time.
fn reference_ssim(a: &Image, b: &Image) -> f64 {
    let g = gaussian_window();
    let (w, h, ch) = (a.width() as i64, a.height() as i64, a.channels());
    let mut total = 0.0;
    for c in 0..ch {
        for y in 0..h {
            for x in 0..w {
                let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for dy in -5..=5i64 {
                    for dx in -5..=5i64 {
                        let (xx, yy) = (x + dx, y + dy);
                        if xx < 0 || yy < 0 || xx >= w || yy >= h {
                            continue;
                        }
                        let k = g[(dy + 5) as usize] * g[(dx + 5) as usize];
                        let i = (yy * w + xx) as usize * ch + c;
                        let (va, vb) = (a.data()[i] as f64, b.data()[i] as f64);
                        ma += k * va;
                        mb += k * vb;
                        saa += k * va * va;
                        sbb += k * vb * vb;
                        sab += k * va * vb;
                    }
                }
                let (va, vb, cab) = (saa - ma * ma, sbb - mb * mb, sab - ma * mb);
                total += ((2.0 * ma * mb + SSIM_C1) * (2.0 * cab + SSIM_C2))
                    / ((ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2));
            }
        }
    }
    total / (w * h) as f64 / ch as f64
}

#[test]
fn ssim_matches_direct_window_reference() {
    let mut r = rng(14);
    for (w, h) in [(16, 12), (7, 5), (23, 19)] {
        let a = random_image(&mut r, w, h);
        let mut b = a.clone();
        for v in b.data_mut() {
            *v = (*v + r.gen_range(-0.2f32..0.2)).clamp(0.0, 1.0);
        }
        let got = ssim(&a, &b).unwrap();
        let want = reference_ssim(&a, &b);
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }
    let a = random_image(&mut r, 9, 9);
    assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn psnr_of_a_uniform_offset() {
    // MSE = 2^-6, so PSNR = 60 log10(2).
    let a = Image::filled(8, 8, 3, 0.25);
    let b = Image::filled(8, 8, 3, 0.375);
    let p = psnr(&a, &b).unwrap();
    assert!((p - 18.061_799_739_838_87).abs() < 1e-9, "{p}");
    // MSE = 0.1^2 up to f32 rounding.
    let c = Image::from_data(1, 1, 3, vec![0.5; 3]).unwrap();
    let d = Image::from_data(1, 1, 3, vec![0.6; 3]).unwrap();
    assert!((psnr(&c, &d).unwrap() - 20.0).abs() < 1e-5);
}

#[test]
fn pose_distance_on_hand_derived_cases() {
    let a = Pose::identity();
    let b = Pose::new(
        UnitQuaternion::from_axis_angle(&Vector3::x_axis(), 1.0),
        Vec3::new(1.0, 2.0, 2.0),
    );
    // 3 + one radian weighted by 0.5.
    assert!((pose_distance(&a, &b, 1.0, 0.5) - 3.5).abs() < 1e-12);
    let c = Pose::new(
        UnitQuaternion::from_axis_angle(&Vector3::y_axis(), std::f64::consts::PI),
        Vec3::zeros(),
    );
    assert!((pose_distance(&a, &c, 1.0, 1.0) - std::f64::consts::PI).abs() < 1e-7);
}
