use s2c_core::scene::SceneKind;
use s2c_web::{to_rgba, Demo, VIEW_HEIGHT, VIEW_WIDTH};

fn demo() -> Demo {
    Demo::build(SceneKind::BoxRoom, 7).unwrap()
}

#[test]
fn views_are_opaque_rgba_of_the_demo_size() {
    let d = demo();
    let rgba = d.render_rgba(30.0, -10.0);
    assert_eq!(rgba.len(), (VIEW_WIDTH * VIEW_HEIGHT * 4) as usize);
    assert!(rgba.chunks(4).all(|p| p[3] == 255));
    // the room surrounds the center, so no view is empty
    for yaw in [0.0, 90.0, 180.0, 270.0] {
        let img = d.view(yaw, 0.0);
        let lit = img
            .data()
            .chunks(3)
            .filter(|p| p.iter().any(|&v| v > 0.05))
            .count();
        assert!(
            lit > img.pixel_count() * 9 / 10,
            "yaw {yaw}: {lit} lit pixels"
        );
    }
    assert_eq!(rgba, d.render_rgba(30.0, -10.0));
}

#[test]
fn rgba_conversion_clamps_and_rounds() {
    let img =
        s2c_core::splat::Image::from_data(2, 1, 3, vec![-1.0, 0.5, 2.0, 0.0, 1.0, 0.25]).unwrap();
    assert_eq!(to_rgba(&img), vec![0, 128, 255, 255, 0, 255, 64, 255]);
}

#[test]
fn planning_raises_coverage_and_unit_threshold_keeps_inputs() {
    let d = demo();
    let s = d.plan_summary(0.1).unwrap();
    assert!(s.final_coverage > s.input_coverage);
    assert!(s.cameras.iter().any(|c| c.planned));
    let s1 = d.plan_summary(1.0).unwrap();
    assert!(s1.cameras.iter().all(|c| !c.planned));
    assert_eq!(s1.final_coverage, s1.input_coverage);
    assert!(d.plan_summary(0.0).is_err());
    assert!(serde_json::to_string(&s).unwrap().contains("\"bounds\""));
}

#[test]
fn self_warp_is_consistent_and_energy_grows_with_baseline() {
    let d = demo();
    let same = d.warp_preview(20.0, 20.0, 0.0).unwrap();
    assert!(same.valid_fraction() > 0.9);
    assert!(same.energy() < 1e-6, "{}", same.energy());
    let near = d.warp_preview(20.0, 30.0, 0.0).unwrap();
    let far = d.warp_preview(20.0, 60.0, 0.0).unwrap();
    assert!(near.valid_fraction() > far.valid_fraction());
    assert_eq!(near.rgba().len(), (VIEW_WIDTH * VIEW_HEIGHT * 4) as usize);
}

#[test]
fn unknown_scene_kind_is_rejected() {
    assert!("attic".parse::<SceneKind>().is_err());
}
