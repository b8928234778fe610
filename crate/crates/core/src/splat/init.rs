//! Initial Gaussians seeded from a colored point cloud.

use rayon::prelude::*;

use super::gaussian::{Gaussian3D, GaussianSet};
use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Distance from every point to its nearest other point (brute force).
pub fn nearest_neighbor_distances(points: &[Vec3]) -> Vec<f64> {
    points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            points
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| (p - q).norm_squared())
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect()
}

/// One isotropic Gaussian per point, scaled by its nearest-neighbor
/// distance. Points without a color get mid gray. Coincident points fall
/// back to the median spacing.
pub fn seed_from_points(
    positions: &[Vec3],
    colors: Option<&[Vec3]>,
    opacity: f64,
) -> Result<GaussianSet> {
    if positions.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot seed Gaussians from an empty point cloud".into(),
        ));
    }
    if colors.is_some_and(|c| c.len() != positions.len()) {
        return Err(Error::DimensionMismatch {
            expected: format!("{} colors", positions.len()),
            found: format!("{} colors", colors.map_or(0, <[Vec3]>::len)),
        });
    }
    let mut nn = nearest_neighbor_distances(positions);
    let mut finite: Vec<f64> = nn
        .iter()
        .copied()
        .filter(|d| d.is_finite() && *d > 0.0)
        .collect();
    finite.sort_by(f64::total_cmp);
    let fallback = finite.get(finite.len() / 2).copied().unwrap_or(0.01);
    for d in &mut nn {
        if !(d.is_finite() && *d > 0.0) {
            *d = fallback;
        }
    }
    let mut set = GaussianSet::new(
        positions
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let c = colors.map_or(Vec3::repeat(0.5), |c| c[i]);
                Gaussian3D::isotropic(*p, nn[i], opacity, c)
            })
            .collect(),
    );
    set.sanitize();
    Ok(set)
}
