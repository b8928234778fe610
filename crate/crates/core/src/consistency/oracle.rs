//! Image-repair oracles standing in for a single-step restoration model.

use std::path::PathBuf;
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_pfm, write_pfm};
use crate::splat::Image;

/// Single-call image repair for view `view` of the trajectory.
///
/// Implementations must be stateless per call and deterministic. The
/// refinement loop calls `repair` from several threads at once unless
/// [`RepairOracle::concurrent`] returns false.
pub trait RepairOracle: Send + Sync {
    fn repair(&self, rendered: &Image, view: usize) -> Result<Image>;

    fn concurrent(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    #[default]
    Identity,
    GroundTruth,
    NoisyGroundTruth,
    /// External program called as `argv... <input.pfm> <output.pfm> <view>`.
    Command(Vec<String>),
}

pub struct IdentityOracle;

impl RepairOracle for IdentityOracle {
    fn repair(&self, rendered: &Image, _view: usize) -> Result<Image> {
        Ok(rendered.clone())
    }
}

pub struct GroundTruthOracle {
    views: Vec<Image>,
    noise_sigma: f64,
    rng_seed: u64,
}

impl GroundTruthOracle {
    pub fn new(views: Vec<Image>) -> Self {
        Self {
            views,
            noise_sigma: 0.0,
            rng_seed: 0,
        }
    }

    /// Ground truth plus i.i.d. Gaussian noise seeded by `(rng_seed, view)`,
    /// so every view receives a different but reproducible perturbation.
    pub fn noisy(views: Vec<Image>, noise_sigma: f64, rng_seed: u64) -> Result<Self> {
        if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise sigma must be non-negative, got {noise_sigma}"
            )));
        }
        Ok(Self {
            views,
            noise_sigma,
            rng_seed,
        })
    }
}

impl RepairOracle for GroundTruthOracle {
    fn repair(&self, rendered: &Image, view: usize) -> Result<Image> {
        let gt = self.views.get(view).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "no ground-truth image for view {view} ({} available)",
                self.views.len()
            ))
        })?;
        rendered.ensure_same_shape(gt)?;
        if self.noise_sigma == 0.0 {
            return Ok(gt.clone());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(
            self.rng_seed ^ (view as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
        );
        let normal = Normal::new(0.0, self.noise_sigma).expect("sigma validated");
        let mut out = gt.clone();
        for v in out.data_mut() {
            *v = (*v as f64 + normal.sample(&mut rng)).clamp(0.0, 1.0) as f32;
        }
        Ok(out)
    }
}

pub struct CommandOracle {
    argv: Vec<String>,
    scratch: PathBuf,
}

static SCRATCH_COUNTER: AtomicU64 = AtomicU64::new(0);

impl CommandOracle {
    pub fn new(argv: Vec<String>) -> Result<Self> {
        if argv.is_empty() {
            return Err(Error::InvalidArgument(
                "command oracle needs a program".into(),
            ));
        }
        let n = SCRATCH_COUNTER.fetch_add(1, Ordering::Relaxed);
        let scratch = std::env::temp_dir().join(format!("s2c-oracle-{}-{n}", std::process::id()));
        std::fs::create_dir_all(&scratch).map_err(|e| Error::io(&scratch, e))?;
        Ok(Self { argv, scratch })
    }
}

impl Drop for CommandOracle {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.scratch);
    }
}

impl RepairOracle for CommandOracle {
    fn repair(&self, rendered: &Image, view: usize) -> Result<Image> {
        let input = self.scratch.join(format!("in_{view}.pfm"));
        let output = self.scratch.join(format!("out_{view}.pfm"));
        write_pfm(&input, rendered)?;
        let status = Command::new(&self.argv[0])
            .args(&self.argv[1..])
            .arg(&input)
            .arg(&output)
            .arg(view.to_string())
            .status()
            .map_err(|e| Error::Oracle(format!("failed to start {}: {e}", self.argv[0])))?;
        if !status.success() {
            return Err(Error::Oracle(format!(
                "{} exited with {status} on view {view}",
                self.argv[0]
            )));
        }
        let mut img = read_pfm(&output)?;
        rendered.ensure_same_shape(&img)?;
        img.clamp01();
        Ok(img)
    }

    /// External programs may hold exclusive resources such as a GPU.
    fn concurrent(&self) -> bool {
        false
    }
}

pub fn make_oracle(
    kind: &OracleKind,
    ground_truth: Option<Vec<Image>>,
    noise_sigma: f64,
    rng_seed: u64,
) -> Result<Box<dyn RepairOracle>> {
    Ok(match kind {
        OracleKind::Identity => Box::new(IdentityOracle),
        OracleKind::GroundTruth => Box::new(GroundTruthOracle::new(
            ground_truth.ok_or(Error::MissingGroundTruth)?,
        )),
        OracleKind::NoisyGroundTruth => Box::new(GroundTruthOracle::noisy(
            ground_truth.ok_or(Error::MissingGroundTruth)?,
            noise_sigma,
            rng_seed,
        )?),
        OracleKind::Command(argv) => Box::new(CommandOracle::new(argv.clone())?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splat::psnr;

    #[test]
    fn identity_and_ground_truth() {
        let img = Image::filled(4, 3, 3, 0.25);
        let gt = Image::filled(4, 3, 3, 0.75);
        let id = make_oracle(&OracleKind::Identity, None, 0.0, 0).unwrap();
        assert_eq!(id.repair(&img, 5).unwrap(), img);
        let o = make_oracle(&OracleKind::GroundTruth, Some(vec![gt.clone()]), 0.0, 0).unwrap();
        assert_eq!(psnr(&o.repair(&img, 0).unwrap(), &gt).unwrap(), 99.0);
        assert!(o.repair(&img, 1).is_err());
    }

    #[test]
    fn gt_kinds_need_ground_truth() {
        for k in [OracleKind::GroundTruth, OracleKind::NoisyGroundTruth] {
            assert!(matches!(
                make_oracle(&k, None, 0.05, 0),
                Err(Error::MissingGroundTruth)
            ));
        }
    }

    #[test]
    fn noisy_oracle_statistics() {
        let gt = Image::filled(64, 48, 3, 0.5);
        let o = make_oracle(
            &OracleKind::NoisyGroundTruth,
            Some(vec![gt.clone(); 2]),
            0.05,
            3,
        )
        .unwrap();
        let a = o.repair(&gt, 0).unwrap();
        let b = o.repair(&gt, 1).unwrap();
        assert_ne!(a, b);
        assert_eq!(a, o.repair(&gt, 0).unwrap());
        let d: Vec<f64> = a
            .data()
            .iter()
            .zip(gt.data())
            .map(|(x, y)| (x - y) as f64)
            .collect();
        let std = (d.iter().map(|v| v * v).sum::<f64>() / d.len() as f64).sqrt();
        assert!((std - 0.05).abs() < 0.003, "std {std}");
    }

    #[test]
    fn oracle_kind_serde() {
        let k: OracleKind = serde_json::from_str("\"noisy_ground_truth\"").unwrap();
        assert_eq!(k, OracleKind::NoisyGroundTruth);
        let c: OracleKind = serde_json::from_str(r#"{"command": ["repair", "--fast"]}"#).unwrap();
        assert_eq!(
            c,
            OracleKind::Command(vec!["repair".into(), "--fast".into()])
        );
    }
}
