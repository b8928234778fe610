//! Masked L1 view-consistency energy, its subgradient and the guidance step.
//!
//! Each neighbor term is normalized by its number of valid pixel-channels so
//! that the guidance scale does not depend on resolution or mask size. A
//! missing neighbor (trajectory endpoint) or an empty mask contributes zero.

use crate::error::{Error, Result};
use crate::splat::Image;

use super::warp::WarpResult;

fn check(x0: &Image, w: &WarpResult) -> Result<()> {
    x0.ensure_channels(3)?;
    x0.ensure_same_shape(&w.image)?;
    if w.mask.channels() != 1 || w.mask.width() != x0.width() || w.mask.height() != x0.height() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}x1 mask", x0.width(), x0.height()),
            found: w.mask.shape_string(),
        });
    }
    Ok(())
}

fn term(x0: &Image, w: &WarpResult) -> f64 {
    let valid = w.valid_pixels();
    if valid == 0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for (p, &m) in w.mask.data().iter().enumerate() {
        if m > 0.5 {
            for c in 0..3 {
                sum += (x0.data()[3 * p + c] as f64 - w.image.data()[3 * p + c] as f64).abs();
            }
        }
    }
    sum / (3 * valid) as f64
}

pub fn consistency_energy(
    x0: &Image,
    prev: Option<&WarpResult>,
    next: Option<&WarpResult>,
) -> Result<f64> {
    let mut e = 0.0;
    for w in prev.into_iter().chain(next) {
        check(x0, w)?;
        e += term(x0, w);
    }
    Ok(e)
}

/// Subgradient of [`consistency_energy`] with respect to `x0`, using
/// `sign(0) = 0`.
pub fn energy_gradient(
    x0: &Image,
    prev: Option<&WarpResult>,
    next: Option<&WarpResult>,
) -> Result<Image> {
    let mut g = Image::new(x0.width(), x0.height(), 3);
    for w in prev.into_iter().chain(next) {
        check(x0, w)?;
        let valid = w.valid_pixels();
        if valid == 0 {
            continue;
        }
        let inv = 1.0 / (3 * valid) as f64;
        for (p, &m) in w.mask.data().iter().enumerate() {
            if m > 0.5 {
                for c in 0..3 {
                    let d = x0.data()[3 * p + c] as f64 - w.image.data()[3 * p + c] as f64;
                    let s = if d > 0.0 {
                        1.0
                    } else if d < 0.0 {
                        -1.0
                    } else {
                        0.0
                    };
                    let slot = &mut g.data_mut()[3 * p + c];
                    *slot = (*slot as f64 + s * inv) as f32;
                }
            }
        }
    }
    Ok(g)
}

/// `clamp(x0 - rho * g, 0, 1)`.
pub fn guidance_step(x0: &Image, g: &Image, rho: f64) -> Result<Image> {
    x0.ensure_same_shape(g)?;
    let data = x0
        .data()
        .iter()
        .zip(g.data())
        .map(|(&x, &gv)| (x as f64 - rho * gv as f64).clamp(0.0, 1.0) as f32)
        .collect();
    Image::from_data(x0.width(), x0.height(), x0.channels(), data)
}
