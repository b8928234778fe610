//! Full-batch Adam on the photometric loss over a set of posed views.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gaussian::{GaussianSet, PARAMS_PER_GAUSSIAN};
use super::image::Image;
use super::metrics::photometric_loss_with_grad;
use super::render::{render_backward, render_frame};
use crate::error::{Error, Result};
use crate::geometry::Camera;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearningRates {
    pub mean: f64,
    pub log_scale: f64,
    pub rotation: f64,
    pub opacity: f64,
    pub color: f64,
}

impl Default for LearningRates {
    fn default() -> Self {
        Self {
            mean: 2e-3,
            log_scale: 1e-2,
            rotation: 5e-3,
            opacity: 5e-2,
            color: 1e-2,
        }
    }
}

impl LearningRates {
    fn for_slot(&self, slot: usize) -> f64 {
        match slot {
            0..=2 => self.mean,
            3..=5 => self.log_scale,
            6..=9 => self.rotation,
            10 => self.opacity,
            _ => self.color,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizeConfig {
    pub steps: usize,
    pub lr: LearningRates,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Sum per-view gradients in view order. Otherwise rayon reduces them
    /// in whatever grouping work stealing produces, which can change the
    /// last bits between runs.
    pub deterministic: bool,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            steps: 100,
            lr: LearningRates::default(),
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            deterministic: true,
        }
    }
}

/// A target image with the camera it was taken from.
#[derive(Debug, Clone, PartialEq)]
pub struct View {
    pub camera: Camera,
    pub image: Image,
}

impl View {
    pub fn new(camera: Camera, image: Image) -> Self {
        Self { camera, image }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizeReport {
    pub set: GaussianSet,
    pub initial_loss: f64,
    pub final_loss: f64,
    /// Loss before every step, followed by the loss of the returned set.
    pub history: Vec<f64>,
}

fn check_views(views: &[View]) -> Result<()> {
    if views.is_empty() {
        return Err(Error::InvalidArgument(
            "optimization needs at least one view".into(),
        ));
    }
    for v in views {
        v.image.ensure_channels(3)?;
        let k = &v.camera.intrinsics;
        if v.image.width() != k.width || v.image.height() != k.height {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{} (camera {})", k.width, k.height, v.camera.id),
                found: v.image.shape_string(),
            });
        }
    }
    Ok(())
}

fn view_loss(set: &GaussianSet, v: &View, want_grad: bool) -> (f64, Option<Vec<f64>>) {
    let frame = render_frame(set, &v.camera);
    let (w, h) = (frame.width as usize, frame.height as usize);
    let (loss, d_color) =
        photometric_loss_with_grad(&frame.color, &v.image.to_f64(), w, h, want_grad);
    (loss, d_color.map(|d| render_backward(set, &v.camera, &d)))
}

/// Mean photometric loss over `views` and, optionally, its parameter gradient.
pub fn loss_and_gradient(
    set: &GaussianSet,
    views: &[View],
    want_grad: bool,
) -> Result<(f64, Option<Vec<f64>>)> {
    reduce_views(set, views, want_grad, true)
}

fn reduce_views(
    set: &GaussianSet,
    views: &[View],
    want_grad: bool,
    ordered: bool,
) -> Result<(f64, Option<Vec<f64>>)> {
    check_views(views)?;
    let n = views.len() as f64;
    if !ordered && want_grad {
        let size = set.len() * PARAMS_PER_GAUSSIAN;
        let (loss, grad) = views
            .par_iter()
            .map(|v| view_loss(set, v, true))
            .fold(
                || (0.0, vec![0.0; size]),
                |(la, mut ga), (l, g)| {
                    ga.iter_mut()
                        .zip(g.expect("gradient requested"))
                        .for_each(|(a, b)| *a += b);
                    (la + l, ga)
                },
            )
            .reduce(
                || (0.0, vec![0.0; size]),
                |(la, mut ga), (lb, gb)| {
                    ga.iter_mut().zip(gb).for_each(|(a, b)| *a += b);
                    (la + lb, ga)
                },
            );
        return Ok((loss / n, Some(grad.into_iter().map(|g| g / n).collect())));
    }
    let per_view: Vec<(f64, Option<Vec<f64>>)> = views
        .par_iter()
        .map(|v| view_loss(set, v, want_grad))
        .collect();
    let loss = per_view.iter().map(|(l, _)| l).sum::<f64>() / n;
    let grad = want_grad.then(|| {
        let mut total = vec![0.0; set.len() * PARAMS_PER_GAUSSIAN];
        for (_, g) in &per_view {
            for (t, v) in total
                .iter_mut()
                .zip(g.as_ref().expect("gradient requested"))
            {
                *t += v / n;
            }
        }
        total
    });
    Ok((loss, grad))
}

pub fn evaluate_loss(set: &GaussianSet, views: &[View]) -> Result<f64> {
    Ok(loss_and_gradient(set, views, false)?.0)
}

/// Adam moments and step count, kept between calls so that a sequence of
/// short optimize phases behaves like one long run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: usize,
}

impl AdamState {
    pub fn steps_taken(&self) -> usize {
        self.step
    }
}

/// Adam on all Gaussian attributes for `cfg.steps` full-batch steps.
///
/// Quaternions are renormalized and attributes clamped after every step. The
/// returned set is the lowest-loss iterate seen, so the reported final loss
/// never exceeds the initial one.
pub fn optimize(set: &GaussianSet, views: &[View], cfg: &OptimizeConfig) -> Result<OptimizeReport> {
    optimize_with_state(set, views, cfg, &mut AdamState::default())
}

/// [`optimize`] continuing from `state`. A state whose size does not match
/// `set` is reset.
pub fn optimize_with_state(
    set: &GaussianSet,
    views: &[View],
    cfg: &OptimizeConfig,
    state: &mut AdamState,
) -> Result<OptimizeReport> {
    check_views(views)?;
    if cfg.steps == 0 {
        return Err(Error::InvalidArgument(
            "optimization needs at least one step".into(),
        ));
    }
    let mut current = set.clone();
    let mut params = current.to_params();
    if state.m.len() != params.len() {
        *state = AdamState {
            m: vec![0.0; params.len()],
            v: vec![0.0; params.len()],
            step: 0,
        };
    }
    let AdamState { m, v, step: t } = state;
    let mut history = Vec::with_capacity(cfg.steps + 1);
    let mut best: Option<(f64, GaussianSet)> = None;

    for _ in 0..cfg.steps {
        let (loss, grad) = reduce_views(&current, views, true, cfg.deterministic)?;
        history.push(loss);
        if best.as_ref().is_none_or(|(b, _)| loss < *b) {
            best = Some((loss, current.clone()));
        }
        let grad = grad.expect("gradient requested");
        *t += 1;
        let bc1 = 1.0 - cfg.beta1.powi(*t as i32);
        let bc2 = 1.0 - cfg.beta2.powi(*t as i32);
        for (i, g) in grad.iter().enumerate() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
            let update = (m[i] / bc1) / ((v[i] / bc2).sqrt() + cfg.eps);
            params[i] -= cfg.lr.for_slot(i % PARAMS_PER_GAUSSIAN) * update;
        }
        current = GaussianSet::from_params(&params);
        current.sanitize();
        params = current.to_params();
    }
    let final_eval = evaluate_loss(&current, views)?;
    history.push(final_eval);
    let (final_loss, out) = match best {
        Some((b, s)) if b < final_eval => (b, s),
        _ => (final_eval, current),
    };
    log::debug!(
        "optimize: loss {:.5} -> {:.5} over {} steps",
        history[0],
        final_loss,
        cfg.steps
    );
    Ok(OptimizeReport {
        set: out,
        initial_loss: history[0],
        final_loss,
        history,
    })
}
