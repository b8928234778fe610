//! PSNR, SSIM and the L1 + (1 - SSIM) photometric loss with its gradient.
//!
//! SSIM uses an 11x11 Gaussian window (sigma 1.5) with zero padding, the
//! usual constants `C1 = 0.01^2`, `C2 = 0.03^2`, and averages over pixels and
//! channels.

use super::image::Image;
use crate::error::Result;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;
/// Reported PSNR for identical images.
pub const PSNR_CAP: f64 = 99.0;

pub fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let half = (SSIM_WINDOW / 2) as f64;
    let mut w = [0.0; SSIM_WINDOW];
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - half;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= sum);
    w
}

/// Separable zero-padded "same" filtering of a single plane.
fn blur(plane: &[f64], w: usize, h: usize, kernel: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as isize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, kv) in kernel.iter().enumerate() {
                let xx = x as isize + k as isize - half;
                if xx >= 0 && (xx as usize) < w {
                    acc += kv * plane[y * w + xx as usize];
                }
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, kv) in kernel.iter().enumerate() {
                let yy = y as isize + k as isize - half;
                if yy >= 0 && (yy as usize) < h {
                    acc += kv * tmp[yy as usize * w + x];
                }
            }
            out[y * w + x] = acc;
        }
    }
    out
}

fn plane(data: &[f64], channels: usize, c: usize) -> Vec<f64> {
    data.iter().skip(c).step_by(channels).copied().collect()
}

/// Mean SSIM over interleaved buffers, optionally with its gradient with
/// respect to `x`.
pub fn ssim_with_grad(
    x: &[f64],
    y: &[f64],
    width: usize,
    height: usize,
    channels: usize,
    want_grad: bool,
) -> (f64, Option<Vec<f64>>) {
    let n = width * height;
    let kernel = gaussian_window();
    let mut total = 0.0;
    let mut grad = want_grad.then(|| vec![0.0; n * channels]);
    let norm = (n * channels) as f64;
    for c in 0..channels {
        let xp = plane(x, channels, c);
        let yp = plane(y, channels, c);
        let xx: Vec<f64> = xp.iter().map(|v| v * v).collect();
        let yy: Vec<f64> = yp.iter().map(|v| v * v).collect();
        let xy: Vec<f64> = xp.iter().zip(&yp).map(|(a, b)| a * b).collect();
        let mu_x = blur(&xp, width, height, &kernel);
        let mu_y = blur(&yp, width, height, &kernel);
        let e_xx = blur(&xx, width, height, &kernel);
        let e_yy = blur(&yy, width, height, &kernel);
        let e_xy = blur(&xy, width, height, &kernel);

        let mut d_mu = vec![0.0; n];
        let mut d_exx = vec![0.0; n];
        let mut d_exy = vec![0.0; n];
        for p in 0..n {
            let (mx, my) = (mu_x[p], mu_y[p]);
            let sxx = e_xx[p] - mx * mx;
            let syy = e_yy[p] - my * my;
            let sxy = e_xy[p] - mx * my;
            let a1 = 2.0 * mx * my + SSIM_C1;
            let a2 = 2.0 * sxy + SSIM_C2;
            let b1 = mx * mx + my * my + SSIM_C1;
            let b2 = sxx + syy + SSIM_C2;
            let s = a1 * a2 / (b1 * b2);
            total += s;
            if want_grad {
                let ds_dmx = 2.0 * my * a2 / (b1 * b2) - s * 2.0 * mx / b1;
                let ds_dsxx = -s / b2;
                let ds_dsxy = 2.0 * a1 / (b1 * b2);
                d_mu[p] = ds_dmx - 2.0 * mx * ds_dsxx - my * ds_dsxy;
                d_exx[p] = ds_dsxx;
                d_exy[p] = ds_dsxy;
            }
        }
        if let Some(g) = grad.as_mut() {
            let b_mu = blur(&d_mu, width, height, &kernel);
            let b_xx = blur(&d_exx, width, height, &kernel);
            let b_xy = blur(&d_exy, width, height, &kernel);
            for p in 0..n {
                g[p * channels + c] = (b_mu[p] + 2.0 * xp[p] * b_xx[p] + yp[p] * b_xy[p]) / norm;
            }
        }
    }
    (total / norm, grad)
}

pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    a.ensure_same_shape(b)?;
    let (s, _) = ssim_with_grad(
        &a.to_f64(),
        &b.to_f64(),
        a.width() as usize,
        a.height() as usize,
        a.channels(),
        false,
    );
    Ok(s)
}

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    a.ensure_same_shape(b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    Ok(sum / a.data().len() as f64)
}

/// Mean absolute difference over all pixels and channels.
pub fn l1(a: &Image, b: &Image) -> Result<f64> {
    a.ensure_same_shape(b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x as f64 - y as f64).abs())
        .sum();
    Ok(sum / a.data().len() as f64)
}

/// `10 log10(1 / MSE)`, capped at [`PSNR_CAP`].
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    let m = mse(a, b)?;
    Ok(if m <= 0.0 {
        PSNR_CAP
    } else {
        (10.0 * (1.0 / m).log10()).min(PSNR_CAP)
    })
}

/// `mean |rendered - target| + (1 - SSIM)` and, on request, its gradient
/// with respect to `rendered`. The L1 subgradient uses `sign(0) = 0`.
pub fn photometric_loss_with_grad(
    rendered: &[f64],
    target: &[f64],
    width: usize,
    height: usize,
    want_grad: bool,
) -> (f64, Option<Vec<f64>>) {
    let count = rendered.len() as f64;
    let l1 = rendered
        .iter()
        .zip(target)
        .map(|(r, t)| (r - t).abs())
        .sum::<f64>()
        / count;
    let (s, s_grad) = ssim_with_grad(rendered, target, width, height, 3, want_grad);
    let grad = s_grad.map(|sg| {
        rendered
            .iter()
            .zip(target)
            .zip(sg)
            .map(|((r, t), g)| {
                let d = r - t;
                let sign = if d > 0.0 {
                    1.0
                } else if d < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                sign / count - g
            })
            .collect()
    });
    (l1 + 1.0 - s, grad)
}

pub fn photometric_loss(rendered: &Image, target: &Image) -> Result<f64> {
    rendered.ensure_same_shape(target)?;
    rendered.ensure_channels(3)?;
    let (l, _) = photometric_loss_with_grad(
        &rendered.to_f64(),
        &target.to_f64(),
        rendered.width() as usize,
        rendered.height() as usize,
        false,
    );
    Ok(l)
}
