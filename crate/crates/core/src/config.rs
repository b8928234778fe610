//! Run configuration shared by the command-line tools.
//!
//! Values resolve as command-line flag, then config file, then built-in
//! default. Missing fields in a config file keep their defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::consistency::RefineConfig;
use crate::error::Result;
use crate::geometry::{DEFAULT_OBB_SPHERES, DEFAULT_SAMPLES_PER_SPHERE, DEFAULT_SURFACE_SPHERES};
use crate::io::read_json;
use crate::planner::PlannerConfig;
use crate::scene::{SceneKind, SceneParams};
use crate::splat::{NoiseSigmas, OptimizeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoverageConfig {
    pub surface_spheres: usize,
    pub obb_spheres: usize,
    pub samples_per_sphere: usize,
    /// Sphere radius; derived from the center spacing when absent.
    pub radius: Option<f64>,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        Self {
            surface_spheres: DEFAULT_SURFACE_SPHERES,
            obb_spheres: DEFAULT_OBB_SPHERES,
            samples_per_sphere: DEFAULT_SAMPLES_PER_SPHERE,
            radius: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitConfig {
    pub optimize: OptimizeConfig,
    /// Opacity of every seeded Gaussian.
    pub opacity: f64,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            optimize: OptimizeConfig {
                steps: 200,
                ..OptimizeConfig::default()
            },
            opacity: 0.7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DegradeConfig {
    /// Attribute noise; `None` uses the defaults with position noise at 1%
    /// of the scene diagonal.
    pub sigmas: Option<NoiseSigmas>,
    pub remove_fraction: f64,
}

impl Default for DegradeConfig {
    fn default() -> Self {
        Self {
            sigmas: None,
            remove_fraction: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub planner: PlannerConfig,
    pub refine: RefineConfig,
    pub init: InitConfig,
    pub coverage: CoverageConfig,
    pub degrade: DegradeConfig,
    pub scene_kind: SceneKind,
    /// Resolution, field of view and sampling density of generated scenes.
    pub scene: SceneParams,
    pub output_dir: PathBuf,
    pub rng_seed: u64,
    /// Rayon worker threads; 0 lets rayon decide.
    pub threads: usize,
    /// Reduce gradients in a fixed order so runs are bit-reproducible.
    /// Overrides the flags of the nested optimizer settings.
    pub deterministic: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let mut init = InitConfig::default();
        init.optimize.deterministic = false;
        Self {
            planner: PlannerConfig::default(),
            refine: RefineConfig {
                deterministic: false,
                ..RefineConfig::default()
            },
            init,
            coverage: CoverageConfig::default(),
            degrade: DegradeConfig::default(),
            scene_kind: SceneKind::default(),
            scene: SceneParams::default(),
            output_dir: PathBuf::from("out"),
            rng_seed: 0,
            threads: 0,
            deterministic: false,
        }
    }
}

/// Values given on the command line; `None` leaves the file or default.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub deterministic: bool,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        read_json(path)
    }

    /// Defaults, then `file` if given, then `overrides`. A seed override
    /// also reseeds the planner.
    pub fn resolve(file: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut cfg = match file {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        if let Some(seed) = overrides.seed {
            cfg.rng_seed = seed;
            cfg.planner.rng_seed = seed;
        }
        if let Some(t) = overrides.threads {
            cfg.threads = t;
        }
        if overrides.deterministic {
            cfg.deterministic = true;
        }
        if let Some(out) = &overrides.output_dir {
            cfg.output_dir.clone_from(out);
        }
        cfg.init.optimize.deterministic = cfg.deterministic;
        cfg.refine.deterministic = cfg.deterministic;
        cfg.planner.validate()?;
        cfg.refine.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_flag_over_file_over_default() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(
            &p,
            r#"{"rng_seed": 5, "threads": 3, "planner": {"gain_threshold": 0.2}}"#,
        )
        .unwrap();
        let cfg = RunConfig::resolve(Some(&p), &Overrides::default()).unwrap();
        assert_eq!(cfg.rng_seed, 5);
        assert_eq!(cfg.threads, 3);
        assert_eq!(cfg.planner.gain_threshold, 0.2);
        assert_eq!(cfg.planner.max_stall_steps, 30);
        let o = Overrides {
            seed: Some(9),
            ..Overrides::default()
        };
        let cfg = RunConfig::resolve(Some(&p), &o).unwrap();
        assert_eq!((cfg.rng_seed, cfg.planner.rng_seed, cfg.threads), (9, 9, 3));
        assert_eq!(
            RunConfig::resolve(None, &Overrides::default()).unwrap(),
            RunConfig::default()
        );
    }

    #[test]
    fn documented_defaults() {
        let c = RunConfig::default();
        assert_eq!(c.planner.gain_threshold, 0.1);
        assert_eq!(c.planner.max_stall_steps, 30);
        assert_eq!(c.planner.interp_threshold, 0.2);
        assert_eq!(
            (c.planner.weight_translation, c.planner.weight_rotation),
            (1.0, 1.0)
        );
        assert_eq!((c.refine.refine_steps, c.refine.rho), (4, 1.0));
    }

    #[test]
    fn invalid_values_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"refine": {"refine_steps": 0}}"#).unwrap();
        assert!(RunConfig::resolve(Some(&p), &Overrides::default()).is_err());
    }
}
