//! Degradation generators: attribute noise and random Gaussian removal.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::gaussian::GaussianSet;
use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Standard deviations of the zero-mean noise added to each attribute group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSigmas {
    /// Position noise in scene units.
    pub mean: f64,
    /// Log-scale noise.
    pub log_scale: f64,
    /// Per-component quaternion noise before renormalization.
    pub rotation: f64,
    /// Opacity-logit noise.
    pub opacity: f64,
    pub color: f64,
}

impl Default for NoiseSigmas {
    fn default() -> Self {
        Self {
            mean: 0.01,
            log_scale: 0.1,
            rotation: 0.05,
            opacity: 0.5,
            color: 0.1,
        }
    }
}

impl NoiseSigmas {
    pub fn zero() -> Self {
        Self {
            mean: 0.0,
            log_scale: 0.0,
            rotation: 0.0,
            opacity: 0.0,
            color: 0.0,
        }
    }

    /// Defaults with the position noise set to 1% of `scene_diagonal`.
    pub fn for_scene(scene_diagonal: f64) -> Self {
        Self {
            mean: 0.01 * scene_diagonal,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let all = [
            self.mean,
            self.log_scale,
            self.rotation,
            self.opacity,
            self.color,
        ];
        if all.iter().all(|s| s.is_finite() && *s >= 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "noise sigmas must be finite and non-negative: {self:?}"
            )))
        }
    }
}

fn normal(sigma: f64) -> Normal<f64> {
    Normal::new(0.0, sigma).expect("sigma validated as finite and non-negative")
}

/// Perturbs every attribute with seeded Gaussian noise, then renormalizes
/// quaternions and reapplies the attribute clamps.
pub fn degrade_noise(
    set: &GaussianSet,
    sigmas: &NoiseSigmas,
    rng_seed: u64,
) -> Result<GaussianSet> {
    sigmas.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let (n_mu, n_s, n_q, n_a, n_c) = (
        normal(sigmas.mean),
        normal(sigmas.log_scale),
        normal(sigmas.rotation),
        normal(sigmas.opacity),
        normal(sigmas.color),
    );
    let mut out = set.clone();
    for g in &mut out.gaussians {
        let mut draw3 =
            |d: &Normal<f64>| Vec3::new(d.sample(&mut rng), d.sample(&mut rng), d.sample(&mut rng));
        g.mean += draw3(&n_mu);
        g.log_scale += draw3(&n_s);
        let dq = [
            n_q.sample(&mut rng),
            n_q.sample(&mut rng),
            n_q.sample(&mut rng),
            n_q.sample(&mut rng),
        ];
        g.rotation.w += dq[0];
        g.rotation.i += dq[1];
        g.rotation.j += dq[2];
        g.rotation.k += dq[3];
        g.opacity_logit += n_a.sample(&mut rng);
        g.color += Vec3::new(
            n_c.sample(&mut rng),
            n_c.sample(&mut rng),
            n_c.sample(&mut rng),
        );
    }
    if sigmas.rotation > 0.0 || sigmas.log_scale > 0.0 || sigmas.opacity > 0.0 || sigmas.color > 0.0
    {
        out.sanitize();
    }
    Ok(out)
}

/// Removes a uniformly random subset of `round(remove_fraction * n)`
/// Gaussians. The survivors keep their original order.
pub fn degrade_mask(set: &GaussianSet, remove_fraction: f64, rng_seed: u64) -> Result<GaussianSet> {
    if !(0.0..1.0).contains(&remove_fraction) {
        return Err(Error::InvalidArgument(format!(
            "remove fraction must lie in [0, 1), got {remove_fraction}"
        )));
    }
    let n = set.len();
    let remove = (remove_fraction * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut keep = vec![true; n];
    for i in sample(&mut rng, n, remove) {
        keep[i] = false;
    }
    Ok(GaussianSet::new(
        set.gaussians
            .iter()
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|(g, _)| *g)
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splat::Gaussian3D;

    fn grid(n: usize) -> GaussianSet {
        GaussianSet::new(
            (0..n)
                .map(|i| {
                    Gaussian3D::isotropic(
                        Vec3::new(i as f64, 0.0, 1.0),
                        0.1,
                        0.5,
                        Vec3::repeat(0.5),
                    )
                })
                .collect(),
        )
    }

    #[test]
    fn zero_noise_and_zero_mask_are_identities() {
        let s = grid(20);
        assert_eq!(degrade_noise(&s, &NoiseSigmas::zero(), 1).unwrap(), s);
        assert_eq!(degrade_mask(&s, 0.0, 1).unwrap(), s);
    }

    #[test]
    fn mask_removes_rounded_count() {
        let s = grid(100);
        assert_eq!(degrade_mask(&s, 0.5, 3).unwrap().len(), 50);
        assert_eq!(degrade_mask(&s, 0.333, 3).unwrap().len(), 67);
        assert!(degrade_mask(&s, 1.0, 3).is_err());
    }

    #[test]
    fn seeded_determinism() {
        let s = grid(30);
        let sig = NoiseSigmas::default();
        assert_eq!(
            degrade_noise(&s, &sig, 9).unwrap(),
            degrade_noise(&s, &sig, 9).unwrap()
        );
        assert_ne!(
            degrade_noise(&s, &sig, 9).unwrap(),
            degrade_noise(&s, &sig, 10).unwrap()
        );
        assert_eq!(
            degrade_mask(&s, 0.3, 2).unwrap(),
            degrade_mask(&s, 0.3, 2).unwrap()
        );
    }

    #[test]
    fn color_noise_std() {
        let s = grid(10_000);
        let sig = NoiseSigmas {
            color: 0.1,
            ..NoiseSigmas::zero()
        };
        let d = degrade_noise(&s, &sig, 5).unwrap();
        // base color 0.5 keeps clamping at 0 and 1 five sigmas away
        let deltas: Vec<f64> = s
            .gaussians
            .iter()
            .zip(&d.gaussians)
            .flat_map(|(a, b)| (b.color - a.color).iter().copied().collect::<Vec<_>>())
            .collect();
        let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
        let var = deltas.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / deltas.len() as f64;
        let std = var.sqrt();
        assert!((0.09..=0.11).contains(&std), "std {std}");
    }
}
