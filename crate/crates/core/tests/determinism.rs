//! Seeded operations give identical results on every call.

use s2c_core::consistency::{refine, GroundTruthOracle, RefineConfig};
use s2c_core::geometry::{compute_obb, CoverageField};
use s2c_core::planner::{plan_trajectory, PlannerConfig};
use s2c_core::scene::{generate_synthetic_scene, SceneKind, SceneParams};
use s2c_core::splat::{
    degrade_mask, degrade_noise, optimize, seed_from_points, NoiseSigmas, OptimizeConfig, View,
};

fn small() -> SceneParams {
    SceneParams {
        width: 24,
        height: 18,
        heldout_cameras: 1,
        ..SceneParams::default()
    }
}

#[test]
fn scenes_and_degradations_repeat() {
    for kind in [SceneKind::BoxRoom, SceneKind::LRoom, SceneKind::Shelf] {
        let a = generate_synthetic_scene(kind, 3, &small()).unwrap();
        let b = generate_synthetic_scene(kind, 3, &small()).unwrap();
        assert_eq!(a.gaussians, b.gaussians);
        assert_eq!(a.points.positions, b.points.positions);
        assert_eq!(a.input_images, b.input_images);
        let s = NoiseSigmas::for_scene(2.0);
        assert_eq!(
            degrade_noise(&a.gaussians, &s, 9).unwrap(),
            degrade_noise(&b.gaussians, &s, 9).unwrap()
        );
        assert_eq!(
            degrade_mask(&a.gaussians, 0.3, 9).unwrap(),
            degrade_mask(&b.gaussians, 0.3, 9).unwrap()
        );
    }
    let a = generate_synthetic_scene(SceneKind::BoxRoom, 3, &small()).unwrap();
    let c = generate_synthetic_scene(SceneKind::BoxRoom, 4, &small()).unwrap();
    assert_ne!(a.gaussians, c.gaussians);
}

#[test]
fn fitting_planning_and_refinement_repeat() {
    let s = generate_synthetic_scene(SceneKind::BoxRoom, 5, &small()).unwrap();
    let obb = compute_obb(&s.points.positions).unwrap();
    let field = CoverageField::build(&s.points.positions, &obb, 24, 8, None, 16, 1).unwrap();
    let cfg = PlannerConfig {
        max_stall_steps: 5,
        ..PlannerConfig::default()
    };
    let p1 = plan_trajectory(&s.input_cameras, &field, &obb, &cfg).unwrap();
    let p2 = plan_trajectory(&s.input_cameras, &field, &obb, &cfg).unwrap();
    assert_eq!(p1.trajectory, p2.trajectory);
    assert_eq!(p1.stats, p2.stats);

    let views: Vec<View> = s
        .input_cameras
        .iter()
        .zip(&s.input_images)
        .map(|(c, i)| View::new(*c, i.clone()))
        .collect();
    let g0 = seed_from_points(&s.points.positions, s.points.colors.as_deref(), 0.7).unwrap();
    let ocfg = OptimizeConfig {
        steps: 3,
        ..OptimizeConfig::default()
    };
    let o1 = optimize(&g0, &views, &ocfg).unwrap();
    let o2 = optimize(&g0, &views, &ocfg).unwrap();
    assert_eq!(o1.set, o2.set);

    let traj = &p1.trajectory;
    let gt: Vec<_> = traj
        .cameras
        .iter()
        .map(|c| s2c_core::splat::render(&s.gaussians, c).color)
        .collect();
    let rcfg = RefineConfig {
        refine_steps: 2,
        opt_steps_per_round: 2,
        ..RefineConfig::default()
    };
    let oracle = GroundTruthOracle::noisy(gt, 0.05, 2).unwrap();
    let r1 = refine(&o1.set, traj, &oracle, &rcfg, None).unwrap();
    let r2 = refine(&o1.set, traj, &oracle, &rcfg, None).unwrap();
    assert_eq!(r1.set, r2.set);
    assert_eq!(r1.rounds, r2.rounds);
}
