//! Render, repair, optimize, guide, optimize: the consistency-guided
//! refinement loop.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::energy::{consistency_energy, energy_gradient, guidance_step};
use super::oracle::{OracleKind, RepairOracle};
use super::warp::{warp_view, WarpResult};
use crate::error::{Error, Result};
use crate::geometry::Camera;
use crate::planner::Trajectory;
use crate::splat::{
    optimize_with_state, psnr, render, AdamState, GaussianSet, Image, LearningRates,
    OptimizeConfig, View,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineConfig {
    /// Number of refinement rounds; guidance runs in all but the last.
    pub refine_steps: usize,
    /// Guidance scale shared by every view.
    pub rho: f64,
    /// Optimizer steps for each of the two optimize phases of a round.
    pub opt_steps_per_round: usize,
    pub lr: LearningRates,
    pub oracle: OracleKind,
    /// Noise level of the noisy ground-truth oracle.
    pub oracle_noise_sigma: f64,
    /// Fixed-order gradient reduction; see [`OptimizeConfig::deterministic`].
    pub deterministic: bool,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            refine_steps: 4,
            rho: 1.0,
            opt_steps_per_round: 60,
            lr: LearningRates::default(),
            oracle: OracleKind::Identity,
            oracle_noise_sigma: 0.05,
            deterministic: true,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.refine_steps == 0 {
            return Err(Error::InvalidArgument(
                "refine_steps must be at least 1".into(),
            ));
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "rho must be non-negative, got {}",
                self.rho
            )));
        }
        if self.opt_steps_per_round == 0 {
            return Err(Error::InvalidArgument(
                "opt_steps_per_round must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn optimizer(&self) -> OptimizeConfig {
        OptimizeConfig {
            steps: self.opt_steps_per_round,
            lr: self.lr,
            deterministic: self.deterministic,
            ..OptimizeConfig::default()
        }
    }
}

/// Per-view images of one refinement round, indexed by trajectory order.
#[derive(Debug, Clone, Default)]
pub struct ViewSet {
    /// Renderings fed to the oracle.
    pub rendered: Vec<Image>,
    /// Oracle outputs, after guidance once it has run.
    pub repaired: Vec<Image>,
    /// Renderings after the first optimize phase.
    pub rerendered: Vec<Image>,
    pub depth: Vec<Image>,
    /// For each view, the warps of its trajectory neighbors into it.
    pub warps: Vec<(Option<WarpResult>, Option<WarpResult>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundDiagnostics {
    /// 1 for the first round executed.
    pub round: usize,
    pub mean_energy_before_guidance: Option<f64>,
    pub mean_energy_after_guidance: Option<f64>,
    /// Photometric loss against the final targets of the round.
    pub train_loss: f64,
    pub psnr_vs_gt: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RefineReport {
    pub set: GaussianSet,
    pub rounds: Vec<RoundDiagnostics>,
    pub guidance_blocks: usize,
    /// Images of the last round.
    pub last_views: ViewSet,
}

fn render_all(set: &GaussianSet, cams: &[Camera]) -> (Vec<Image>, Vec<Image>) {
    cams.par_iter()
        .map(|c| {
            let out = render(set, c);
            (out.color, out.depth)
        })
        .unzip()
}

fn repair_all(oracle: &dyn RepairOracle, rendered: &[Image]) -> Result<Vec<Image>> {
    if oracle.concurrent() {
        rendered
            .par_iter()
            .enumerate()
            .map(|(j, img)| oracle.repair(img, j))
            .collect()
    } else {
        rendered
            .iter()
            .enumerate()
            .map(|(j, img)| oracle.repair(img, j))
            .collect()
    }
}

fn views_of(cams: &[Camera], images: &[Image]) -> Vec<View> {
    cams.iter()
        .zip(images)
        .map(|(c, i)| View::new(*c, i.clone()))
        .collect()
}

/// Warps of views `j - 1` and `j + 1` into view `j`; endpoints get one.
pub fn neighbor_warps(
    colors: &[Image],
    depths: &[Image],
    cams: &[Camera],
) -> Result<Vec<(Option<WarpResult>, Option<WarpResult>)>> {
    let n = cams.len();
    (0..n)
        .into_par_iter()
        .map(|j| {
            let warp = |s: usize| warp_view(&colors[s], &depths[s], &cams[s], &cams[j], s, j);
            let prev = if j > 0 { Some(warp(j - 1)?) } else { None };
            let next = if j + 1 < n { Some(warp(j + 1)?) } else { None };
            Ok((prev, next))
        })
        .collect()
}

pub fn mean_energy(
    images: &[Image],
    warps: &[(Option<WarpResult>, Option<WarpResult>)],
) -> Result<f64> {
    let energies: Vec<f64> = images
        .par_iter()
        .zip(warps)
        .map(|(x, (p, n))| consistency_energy(x, p.as_ref(), n.as_ref()))
        .collect::<Result<_>>()?;
    Ok(energies.iter().sum::<f64>() / energies.len().max(1) as f64)
}

fn mean_psnr(set: &GaussianSet, views: &[View]) -> Result<f64> {
    let values: Vec<f64> = views
        .par_iter()
        .map(|v| psnr(&render(set, &v.camera).color, &v.image))
        .collect::<Result<_>>()?;
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Runs `cfg.refine_steps` rounds over the trajectory cameras.
///
/// Each round renders every view, repairs it with `oracle` and optimizes on
/// the repairs. Except in the last round, the optimized set is re-rendered
/// with depth, neighbor views are warped into each view, every repair takes
/// one guidance step toward its warped neighbors, and the set is optimized
/// again on the guided repairs. `eval_views` only feeds the diagnostics.
pub fn refine(
    g0: &GaussianSet,
    trajectory: &Trajectory,
    oracle: &dyn RepairOracle,
    cfg: &RefineConfig,
    eval_views: Option<&[View]>,
) -> Result<RefineReport> {
    cfg.validate()?;
    if trajectory.is_empty() {
        return Err(Error::InvalidArgument(
            "refinement needs a non-empty trajectory".into(),
        ));
    }
    if g0.is_empty() {
        return Err(Error::InvalidArgument(
            "refinement needs a non-empty Gaussian set".into(),
        ));
    }
    let cams = &trajectory.cameras;
    let opt = cfg.optimizer();
    let mut set = g0.clone();
    let mut rounds = Vec::with_capacity(cfg.refine_steps);
    let mut guidance_blocks = 0;
    let mut last = ViewSet::default();
    // Moments carry over between phases; restarting Adam on every phase
    // spends each short phase recovering from its first bias-corrected step.
    let mut adam = AdamState::default();

    for round in 1..=cfg.refine_steps {
        let (rendered, _) = render_all(&set, cams);
        let mut repaired = repair_all(oracle, &rendered)?;
        let report = optimize_with_state(&set, &views_of(cams, &repaired), &opt, &mut adam)?;
        set = report.set;
        let mut train_loss = report.final_loss;
        let mut diag = RoundDiagnostics {
            round,
            mean_energy_before_guidance: None,
            mean_energy_after_guidance: None,
            train_loss,
            psnr_vs_gt: None,
        };
        let mut views = ViewSet {
            rendered,
            ..ViewSet::default()
        };
        if round < cfg.refine_steps {
            guidance_blocks += 1;
            let (rerendered, depth) = render_all(&set, cams);
            let warps = neighbor_warps(&rerendered, &depth, cams)?;
            let before = mean_energy(&repaired, &warps)?;
            repaired = repaired
                .par_iter()
                .zip(&warps)
                .map(|(x, (p, n))| {
                    guidance_step(x, &energy_gradient(x, p.as_ref(), n.as_ref())?, cfg.rho)
                })
                .collect::<Result<_>>()?;
            let after = mean_energy(&repaired, &warps)?;
            let report = optimize_with_state(&set, &views_of(cams, &repaired), &opt, &mut adam)?;
            set = report.set;
            train_loss = report.final_loss;
            diag.mean_energy_before_guidance = Some(before);
            diag.mean_energy_after_guidance = Some(after);
            diag.train_loss = train_loss;
            views.rerendered = rerendered;
            views.depth = depth;
            views.warps = warps;
        }
        if let Some(ev) = eval_views.filter(|v| !v.is_empty()) {
            diag.psnr_vs_gt = Some(mean_psnr(&set, ev)?);
        }
        log::info!(
            "refine round {round}/{}: train loss {:.5}, energy {:?} -> {:?}, psnr {:?}",
            cfg.refine_steps,
            train_loss,
            diag.mean_energy_before_guidance,
            diag.mean_energy_after_guidance,
            diag.psnr_vs_gt
        );
        views.repaired = repaired;
        last = views;
        rounds.push(diag);
    }
    Ok(RefineReport {
        set,
        rounds,
        guidance_blocks,
        last_views: last,
    })
}
