mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use s2c_core::config::RunConfig;
use s2c_core::geometry::Vec3;
use s2c_core::io::{
    read_cameras, read_gaussians, read_json, read_pfm, read_png, read_point_cloud, read_raw,
    read_trajectory, write_cameras, write_gaussians, write_json, write_pfm, write_png,
    write_point_cloud, write_raw, write_trajectory, PlyEncoding, PointCloud,
};
use s2c_core::planner::{Origin, Trajectory};
use s2c_core::splat::Image;

fn cameras(seed: u64, n: usize) -> Vec<s2c_core::geometry::Camera> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| {
            let eye = Vec3::new(r.gen(), r.gen(), r.gen());
            let target = eye + Vec3::new(r.gen_range(0.5..1.0), r.gen(), r.gen());
            look_camera(
                i as u32 * 3,
                eye,
                target,
                40,
                30,
                r.gen_range(20.0..60.0),
                9.0,
            )
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gaussians_round_trip(seed in any::<u64>(), n in 1usize..40) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.ply");
        let set = random_gaussians(&mut rng(seed), n);
        write_gaussians(&path, &set).unwrap();
        prop_assert_eq!(read_gaussians(&path).unwrap(), set);
    }

    #[test]
    fn cameras_and_trajectories_round_trip(seed in any::<u64>(), n in 2usize..8, planned in 0usize..4) {
        let dir = tempfile::tempdir().unwrap();
        let cams = cameras(seed, n + planned);
        let p = dir.path().join("cameras.json");
        write_cameras(&p, &cams[..n]).unwrap();
        prop_assert_eq!(read_cameras(&p).unwrap(), cams[..n].to_vec());

        let mut t = Trajectory::from_inputs(cams[..n].to_vec());
        for c in &cams[n..] {
            t.cameras.push(*c);
            t.origins.push(Origin::Planned);
        }
        let p = dir.path().join("trajectory.json");
        write_trajectory(&p, &t).unwrap();
        prop_assert_eq!(read_trajectory(&p).unwrap(), t);
    }

    #[test]
    fn images_round_trip(seed in any::<u64>(), w in 1u32..20, h in 1u32..20) {
        let dir = tempfile::tempdir().unwrap();
        let img = random_image(&mut rng(seed), w, h);
        let depth = Image::from_data(w, h, 1, (0..w * h).map(|i| i as f32 * 0.37).collect()).unwrap();
        for (name, im) in [("c", &img), ("d", &depth)] {
            let pfm = dir.path().join(format!("{name}.pfm"));
            write_pfm(&pfm, im).unwrap();
            prop_assert_eq!(&read_pfm(&pfm).unwrap(), im);
            let raw = dir.path().join(format!("{name}.raw"));
            write_raw(&raw, im).unwrap();
            prop_assert_eq!(&read_raw(&raw).unwrap(), im);
        }
        // PNG stores 8 bits, so a second round trip is lossless.
        let png = dir.path().join("c.png");
        write_png(&png, &img).unwrap();
        let once = read_png(&png).unwrap();
        for (a, b) in img.data().iter().zip(once.data()) {
            prop_assert!((a - b).abs() <= 0.5 / 255.0 + 1e-6);
        }
        write_png(&png, &once).unwrap();
        prop_assert_eq!(read_png(&png).unwrap(), once);
    }

    #[test]
    fn point_clouds_round_trip(seed in any::<u64>(), n in 1usize..50, binary in any::<bool>()) {
        let dir = tempfile::tempdir().unwrap();
        let mut r = rng(seed);
        // Values representable in f32 and 8-bit colors survive exactly.
        let mut v = || r.gen_range(-1000i32..1000) as f64 / 64.0;
        let positions: Vec<Vec3> = (0..n).map(|_| Vec3::new(v(), v(), v())).collect();
        let normals = Some((0..n).map(|_| Vec3::new(v(), v(), v())).collect());
        let colors = Some((0..n).map(|i| Vec3::repeat((i % 256) as f64 / 255.0)).collect());
        let cloud = PointCloud { positions, colors, normals };
        let enc = if binary { PlyEncoding::BinaryLittleEndian } else { PlyEncoding::Ascii };
        let path = dir.path().join("p.ply");
        write_point_cloud(&path, &cloud, enc).unwrap();
        let back = read_point_cloud(&path).unwrap();
        prop_assert_eq!(&back.positions, &cloud.positions);
        prop_assert_eq!(&back.normals, &cloud.normals);
        let (a, b) = (back.colors.unwrap(), cloud.colors.unwrap());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }
}

#[test]
fn run_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    let mut cfg = RunConfig {
        rng_seed: 42,
        ..RunConfig::default()
    };
    cfg.refine.rho = 0.25;
    cfg.planner.gain_threshold = 0.05;
    write_json(&path, &cfg).unwrap();
    let back: RunConfig = read_json(&path).unwrap();
    assert_eq!(back, cfg);
}
