//! One function per subcommand. Each returns a JSON summary for stdout.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use s2c_core::config::RunConfig;
use s2c_core::consistency::{make_oracle, refine as run_refine, OracleKind};
use s2c_core::geometry::{compute_obb, Camera, CoverageField};
use s2c_core::io::{
    coverage_points, read_cameras, read_gaussians, read_pfm, read_png, read_point_cloud,
    read_trajectory, write_coverage_ply, write_gaussians, write_json, write_pfm, write_png,
    write_trajectory, CoverageClass, PlyEncoding,
};
use s2c_core::planner::{mark_seen, plan_trajectory, Origin};
use s2c_core::scene::{generate_synthetic_scene, load_views, SceneBundle, SceneKind};
use s2c_core::splat::{
    degrade_mask, degrade_noise, optimize, psnr, render, seed_from_points, ssim, GaussianSet,
    Image, NoiseSigmas, View,
};
use s2c_core::{Error, Result};

use crate::CliError;

type CmdResult = std::result::Result<Value, CliError>;

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn out_path(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.output_dir.join(name)
}

/// Creates the output directory and echoes the effective configuration.
pub fn prepare_out(cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| io_err(&cfg.output_dir, e))?;
    write_json(&out_path(cfg, "effective_config.json"), cfg)
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn mean_psnr(set: &GaussianSet, views: &[View]) -> Result<f64> {
    let values: Vec<f64> = views
        .par_iter()
        .map(|v| psnr(&render(set, &v.camera).color, &v.image))
        .collect::<Result<_>>()?;
    Ok(mean(values))
}

fn to_views(cams: Vec<Camera>, images: Vec<Image>) -> Vec<View> {
    cams.into_iter()
        .zip(images)
        .map(|(c, i)| View::new(c, i))
        .collect()
}

pub fn gen_scene(cfg: &RunConfig, kind: SceneKind) -> CmdResult {
    let scene = generate_synthetic_scene(kind, cfg.rng_seed, &cfg.scene)?;
    SceneBundle::write(&scene, &cfg.scene, &cfg.output_dir)?;
    Ok(json!({
        "command": "gen-scene",
        "kind": kind,
        "seed": cfg.rng_seed,
        "gaussians": scene.gaussians.len(),
        "points": scene.points.len(),
        "input_cameras": scene.input_cameras.len(),
        "heldout_cameras": scene.heldout_cameras.len(),
    }))
}

#[derive(Serialize)]
struct InitReport {
    gaussians: usize,
    initial_loss: f64,
    final_loss: f64,
    input_psnr: f64,
}

pub fn init(cfg: &RunConfig, scene: &Path) -> CmdResult {
    let bundle = SceneBundle::in_dir(scene);
    let (cams, images) = bundle.input_views()?;
    let cloud = read_point_cloud(&bundle.point_cloud)?;
    let seeded = seed_from_points(&cloud.positions, cloud.colors.as_deref(), cfg.init.opacity)?;
    let views = to_views(cams, images);
    let rep = optimize(&seeded, &views, &cfg.init.optimize)?;
    let path = out_path(cfg, "g0.ply");
    write_gaussians(&path, &rep.set)?;
    let report = InitReport {
        gaussians: rep.set.len(),
        initial_loss: rep.initial_loss,
        final_loss: rep.final_loss,
        input_psnr: mean_psnr(&rep.set, &views)?,
    };
    write_json(&out_path(cfg, "init_report.json"), &report)?;
    Ok(json!({"command": "init", "output": path, "report": report}))
}

/// Coverage field of a bundle, rebuilt identically by `plan` and
/// `export-coverage` from the same configuration.
fn scene_field(
    cfg: &RunConfig,
    bundle: &SceneBundle,
) -> Result<(CoverageField, s2c_core::geometry::OrientedBoundingBox)> {
    bundle.validate()?;
    let cloud = read_point_cloud(&bundle.point_cloud)?;
    let obb = compute_obb(&cloud.positions)?;
    // Mesh vertices, when a mesh is provided, stand in for the surface.
    let surface = match &bundle.mesh {
        Some(mesh) => read_point_cloud(mesh)?.positions,
        None => cloud.positions,
    };
    let c = &cfg.coverage;
    let field = CoverageField::build(
        &surface,
        &obb,
        c.surface_spheres,
        c.obb_spheres,
        c.radius,
        c.samples_per_sphere,
        cfg.rng_seed,
    )?;
    Ok((field, obb))
}

pub fn plan(cfg: &RunConfig, scene: &Path) -> CmdResult {
    let bundle = SceneBundle::in_dir(scene);
    let (field, obb) = scene_field(cfg, &bundle)?;
    let inputs = read_cameras(&bundle.cameras)?;
    let outcome = plan_trajectory(&inputs, &field, &obb, &cfg.planner)?;
    let path = out_path(cfg, "trajectory.json");
    write_trajectory(&path, &outcome.trajectory)?;
    write_json(&out_path(cfg, "plan_stats.json"), &outcome.stats)?;
    Ok(json!({
        "command": "plan",
        "output": path,
        "cameras": outcome.trajectory.len(),
        "planned": outcome.trajectory.planned_count(),
        "input_coverage": outcome.stats.input_coverage,
        "final_coverage": outcome.stats.final_coverage,
        "rejections": outcome.stats.rejections,
    }))
}

pub fn degrade(cfg: &RunConfig, gaussians: &Path) -> CmdResult {
    let set = read_gaussians(gaussians)?;
    let sigmas = match cfg.degrade.sigmas {
        Some(s) => s,
        // Position noise scales with the scene; tiny or flat sets keep the
        // absolute default.
        None => compute_obb(&set.centers())
            .map(|obb| NoiseSigmas::for_scene(obb.diagonal()))
            .unwrap_or_default(),
    };
    let noisy = degrade_noise(&set, &sigmas, cfg.rng_seed)?;
    let out = degrade_mask(
        &noisy,
        cfg.degrade.remove_fraction,
        cfg.rng_seed.wrapping_add(1),
    )?;
    let path = out_path(cfg, "degraded.ply");
    write_gaussians(&path, &out)?;
    Ok(json!({
        "command": "degrade",
        "output": path,
        "input_gaussians": set.len(),
        "output_gaussians": out.len(),
        "sigmas": sigmas,
    }))
}

fn needs_ground_truth(kind: &OracleKind) -> bool {
    matches!(kind, OracleKind::GroundTruth | OracleKind::NoisyGroundTruth)
}

pub fn refine(
    cfg: &RunConfig,
    gaussians: &Path,
    trajectory: &Path,
    scene: Option<&Path>,
) -> CmdResult {
    let g0 = read_gaussians(gaussians)?;
    let traj = read_trajectory(trajectory)?;
    let bundle = scene.map(SceneBundle::in_dir);
    let oracle_kind = &cfg.refine.oracle;
    let gt_images = if needs_ground_truth(oracle_kind) {
        let dir = scene.ok_or(Error::MissingGroundTruth)?;
        let gt = read_gaussians(&dir.join("gt_gaussians.ply"))?;
        Some(
            traj.cameras
                .par_iter()
                .map(|c| render(&gt, c).color)
                .collect(),
        )
    } else {
        None
    };
    let oracle = make_oracle(
        oracle_kind,
        gt_images,
        cfg.refine.oracle_noise_sigma,
        cfg.rng_seed,
    )?;
    let eval_views = match &bundle {
        Some(b) => b.ground_truth_views()?.map(|(c, i)| to_views(c, i)),
        None => None,
    };
    let initial_psnr = eval_views
        .as_deref()
        .map(|v| mean_psnr(&g0, v))
        .transpose()?;
    let report = run_refine(
        &g0,
        &traj,
        oracle.as_ref(),
        &cfg.refine,
        eval_views.as_deref(),
    )?;

    let path = out_path(cfg, "refined.ply");
    write_gaussians(&path, &report.set)?;
    let diag_path = out_path(cfg, "diagnostics.jsonl");
    let file = File::create(&diag_path).map_err(|e| io_err(&diag_path, e))?;
    let mut w = BufWriter::new(file);
    for r in &report.rounds {
        let line = serde_json::to_string(r).expect("diagnostics serialize");
        writeln!(w, "{line}").map_err(|e| io_err(&diag_path, e))?;
    }
    w.flush().map_err(|e| io_err(&diag_path, e))?;

    if let Some(views) = &eval_views {
        let dir = out_path(cfg, "renders");
        std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        for v in views {
            let img = render(&report.set, &v.camera).color;
            write_pfm(&dir.join(format!("{}.pfm", v.camera.id)), &img)?;
            write_png(&dir.join(format!("{}.png", v.camera.id)), &img)?;
        }
    }
    Ok(json!({
        "command": "refine",
        "output": path,
        "rounds": report.rounds.len(),
        "guidance_blocks": report.guidance_blocks,
        "initial_psnr_vs_gt": initial_psnr,
        "final_psnr_vs_gt": report.rounds.last().and_then(|r| r.psnr_vs_gt),
    }))
}

fn read_image(path: &Path) -> Result<Image> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("pfm") => read_pfm(path),
        _ => read_png(path),
    }
}

/// Image files of a directory keyed by stem, preferring `.pfm` to `.png`.
fn image_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out: BTreeMap<String, PathBuf> = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| io_err(dir, e))? {
        let path = entry.map_err(|e| io_err(dir, e))?.path();
        let (Some(stem), Some(ext)) = (
            path.file_stem().and_then(|s| s.to_str()),
            path.extension().and_then(|s| s.to_str()),
        ) else {
            continue;
        };
        if ext != "pfm" && ext != "png" {
            continue;
        }
        let replace = out
            .get(stem)
            .is_none_or(|p| ext == "pfm" && p.extension().is_some_and(|e| e == "png"));
        if replace {
            out.insert(stem.to_string(), path);
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct ImageMetrics {
    name: String,
    psnr: f64,
    ssim: f64,
}

pub fn eval(
    cfg: &RunConfig,
    pred: Option<&Path>,
    gaussians: Option<&Path>,
    gt: &Path,
) -> CmdResult {
    let pairs: Vec<(String, Image, Image)> = match (pred, gaussians) {
        (Some(pred), _) => {
            let p = image_files(pred)?;
            let g = image_files(gt)?;
            if p.is_empty() {
                return Err(
                    Error::InvalidArgument(format!("no images in {}", pred.display())).into(),
                );
            }
            p.iter()
                .map(|(name, path)| {
                    let gt_path = g.get(name).ok_or_else(|| {
                        Error::InvalidArgument(format!("no reference image for {name}"))
                    })?;
                    Ok((name.clone(), read_image(path)?, read_image(gt_path)?))
                })
                .collect::<Result<_>>()?
        }
        (None, Some(gaussians)) => {
            let set = read_gaussians(gaussians)?;
            let (cams, images) = load_views(&gt.join("cameras.json"), gt)?;
            cams.par_iter()
                .zip(images)
                .map(|(c, img)| (c.id.to_string(), render(&set, c).color, img))
                .collect()
        }
        (None, None) => {
            return Err(Error::InvalidArgument("eval needs --pred or --gaussians".into()).into())
        }
    };
    let per_image: Vec<ImageMetrics> = pairs
        .par_iter()
        .map(|(name, a, b)| {
            Ok(ImageMetrics {
                name: name.clone(),
                psnr: psnr(a, b)?,
                ssim: ssim(a, b)?,
            })
        })
        .collect::<Result<_>>()?;
    let metrics = json!({
        "images": per_image.len(),
        "mean_psnr": mean(per_image.iter().map(|m| m.psnr)),
        "mean_ssim": mean(per_image.iter().map(|m| m.ssim)),
        "per_image": per_image,
    });
    write_json(&out_path(cfg, "metrics.json"), &metrics)?;
    Ok(json!({"command": "eval", "metrics": metrics}))
}

pub fn export_coverage(cfg: &RunConfig, scene: &Path, trajectory: &Path) -> CmdResult {
    let bundle = SceneBundle::in_dir(scene);
    let (field, _) = scene_field(cfg, &bundle)?;
    let traj = read_trajectory(trajectory)?;
    let inputs: Vec<Camera> = traj
        .cameras
        .iter()
        .zip(&traj.origins)
        .filter(|(_, o)| **o == Origin::Input)
        .map(|(c, _)| *c)
        .collect();
    let input_field = mark_seen(&inputs, &field);
    let full_field = mark_seen(&traj.cameras, &field);
    let points = coverage_points(&input_field, &full_field)?;
    let path = out_path(cfg, "coverage.ply");
    write_coverage_ply(&path, &points, PlyEncoding::BinaryLittleEndian)?;
    let count = |c: CoverageClass| points.iter().filter(|p| p.class == c).count();
    let counts = json!({
        "red": count(CoverageClass::Input),
        "green": count(CoverageClass::Planned),
        "gray": count(CoverageClass::Unseen),
        "total": points.len(),
        "spheres": field.spheres().len(),
        "samples_per_sphere": field.samples_per_sphere(),
    });
    write_json(&out_path(cfg, "coverage_counts.json"), &counts)?;
    Ok(json!({"command": "export-coverage", "output": path, "counts": counts}))
}
