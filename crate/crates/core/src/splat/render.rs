//! Tile-based CPU rasterizer for 3D Gaussians and its reverse-mode gradient.
//!
//! Gaussians are projected with the first-order perspective Jacobian, culled
//! outside a guard band around the image, sorted front-to-back by
//! camera-space depth of their centers, truncated at three standard
//! deviations and alpha-composited per pixel. Pixel `(x, y)` is
//! sampled at its center `(x + 0.5, y + 0.5)`.

use nalgebra::{Matrix2, Matrix2x3, Matrix3, Vector2};
use rayon::prelude::*;

use super::gaussian::{rotation_matrix, Gaussian3D, GaussianSet, PARAMS_PER_GAUSSIAN};
use super::image::Image;
use crate::geometry::{Camera, Vec3};

pub const TILE_SIZE: usize = 16;
/// Splat support radius in standard deviations.
pub const TRUNCATION_SIGMA: f64 = 3.0;
/// Compositing stops once transmittance falls below this value.
pub const MIN_TRANSMITTANCE: f64 = 1e-4;

/// Gaussians whose centers project beyond this multiple of the image
/// half-extent are culled. Without it a Gaussian just past the near plane
/// and off to the side gets a first-order footprint covering the frame.
pub const GUARD_BAND: f64 = 1.3;

const MAX_POWER: f64 = 0.5 * TRUNCATION_SIGMA * TRUNCATION_SIGMA;
const MIN_COV_DET: f64 = 1e-14;

struct Splat {
    index: usize,
    mean: Vector2<f64>,
    /// Inverse 2D covariance `(a, b, c)` of `[[a, b], [b, c]]`.
    conic: [f64; 3],
    opacity: f64,
    color: Vec3,
    depth: f64,
    cam_point: Vec3,
    cov_cam: Matrix3<f64>,
    jacobian: Matrix2x3<f64>,
}

fn project(
    g: &Gaussian3D,
    index: usize,
    cam: &Camera,
    world_to_cam: &Matrix3<f64>,
) -> Option<Splat> {
    let k = &cam.intrinsics;
    let t = world_to_cam * (g.mean - cam.pose.translation);
    if !(t.z >= k.near && t.z <= k.far) {
        return None;
    }
    let (x, y, z) = (t.x, t.y, t.z);
    let lim_x = GUARD_BAND * k.cx.max(k.width as f64 - k.cx) / k.fx;
    let lim_y = GUARD_BAND * k.cy.max(k.height as f64 - k.cy) / k.fy;
    if (x / z).abs() > lim_x || (y / z).abs() > lim_y {
        return None;
    }
    let jacobian = Matrix2x3::new(
        k.fx / z,
        0.0,
        -k.fx * x / (z * z),
        0.0,
        k.fy / z,
        -k.fy * y / (z * z),
    );
    let rs = g.rotation_matrix() * Matrix3::from_diagonal(&g.scale());
    let cov_cam = world_to_cam * (rs * rs.transpose()) * world_to_cam.transpose();
    let cov2d: Matrix2<f64> = jacobian * cov_cam * jacobian.transpose();
    let (a, b, c) = (
        cov2d[(0, 0)],
        0.5 * (cov2d[(0, 1)] + cov2d[(1, 0)]),
        cov2d[(1, 1)],
    );
    let det = a * c - b * b;
    if !(det > MIN_COV_DET) || !det.is_finite() {
        return None;
    }
    let mean = Vector2::new(k.fx * x / z + k.cx, k.fy * y / z + k.cy);
    // bounding circle of the truncated ellipse
    let lambda_max = 0.5 * (a + c) + (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let radius = TRUNCATION_SIGMA * lambda_max.sqrt();
    if mean.x + radius < 0.0
        || mean.y + radius < 0.0
        || mean.x - radius > k.width as f64
        || mean.y - radius > k.height as f64
    {
        return None;
    }
    Some(Splat {
        index,
        mean,
        conic: [c / det, -b / det, a / det],
        opacity: g.opacity(),
        color: g.color,
        depth: z,
        cam_point: t,
        cov_cam,
        jacobian,
    })
}

impl Splat {
    fn pixel_range(&self, width: usize, height: usize) -> Option<(usize, usize, usize, usize)> {
        let [a, b, c] = self.conic;
        let det = a * c - b * b;
        // inverse of the conic recovers the covariance extents
        let (sa, sb, sc) = (c / det, -b / det, a / det);
        let lambda_max = 0.5 * (sa + sc) + (0.25 * (sa - sc) * (sa - sc) + sb * sb).sqrt();
        let r = TRUNCATION_SIGMA * lambda_max.sqrt();
        let x0 = (self.mean.x - r - 0.5).ceil().max(0.0);
        let y0 = (self.mean.y - r - 0.5).ceil().max(0.0);
        let x1 = (self.mean.x + r - 0.5).floor().min(width as f64 - 1.0);
        let y1 = (self.mean.y + r - 0.5).floor().min(height as f64 - 1.0);
        (x0 <= x1 && y0 <= y1).then_some((x0 as usize, x1 as usize, y0 as usize, y1 as usize))
    }

    /// Gaussian falloff and its exponent at a pixel center, `None` outside
    /// the truncation ellipse.
    #[inline]
    fn falloff(&self, px: f64, py: f64) -> Option<(f64, f64, f64)> {
        let dx = px - self.mean.x;
        let dy = py - self.mean.y;
        let [a, b, c] = self.conic;
        let power = 0.5 * (a * dx * dx + c * dy * dy) + b * dx * dy;
        (power <= MAX_POWER).then(|| ((-power).exp(), dx, dy))
    }
}

struct Raster {
    width: usize,
    height: usize,
    tiles_x: usize,
    splats: Vec<Splat>,
    /// Per tile, splat indices in front-to-back order.
    tiles: Vec<Vec<u32>>,
}

impl Raster {
    fn build(set: &GaussianSet, cam: &Camera) -> Self {
        let width = cam.intrinsics.width as usize;
        let height = cam.intrinsics.height as usize;
        let world_to_cam = cam.pose.rotation_matrix().transpose();
        let mut splats: Vec<Splat> = set
            .gaussians
            .par_iter()
            .enumerate()
            .filter_map(|(i, g)| project(g, i, cam, &world_to_cam))
            .collect();
        splats.sort_by(|a, b| a.depth.total_cmp(&b.depth).then(a.index.cmp(&b.index)));

        let tiles_x = width.div_ceil(TILE_SIZE);
        let tiles_y = height.div_ceil(TILE_SIZE);
        let mut tiles = vec![Vec::new(); tiles_x * tiles_y];
        for (si, s) in splats.iter().enumerate() {
            if let Some((x0, x1, y0, y1)) = s.pixel_range(width, height) {
                for ty in y0 / TILE_SIZE..=y1 / TILE_SIZE {
                    for tx in x0 / TILE_SIZE..=x1 / TILE_SIZE {
                        tiles[ty * tiles_x + tx].push(si as u32);
                    }
                }
            }
        }
        Self {
            width,
            height,
            tiles_x,
            splats,
            tiles,
        }
    }

    fn tile_pixels(&self, tile: usize) -> impl Iterator<Item = (usize, usize)> {
        let tx = tile % self.tiles_x;
        let ty = tile / self.tiles_x;
        let x0 = tx * TILE_SIZE;
        let y0 = ty * TILE_SIZE;
        let x1 = (x0 + TILE_SIZE).min(self.width);
        let y1 = (y0 + TILE_SIZE).min(self.height);
        (y0..y1).flat_map(move |y| (x0..x1).map(move |x| (x, y)))
    }
}

/// Full-precision render buffers; `color` is interleaved RGB.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub width: u32,
    pub height: u32,
    pub color: Vec<f64>,
    /// Expected depth of splat centers (composited depth divided by
    /// accumulated opacity), zero where nothing was hit.
    pub depth: Vec<f64>,
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    pub color: Image,
    pub depth: Image,
    pub alpha_acc: Image,
}

impl Frame {
    pub fn to_output(&self) -> RenderOutput {
        let (w, h) = (self.width, self.height);
        RenderOutput {
            color: Image::from_f64(w, h, 3, &self.color).expect("frame buffers are sized"),
            depth: Image::from_f64(w, h, 1, &self.depth).expect("frame buffers are sized"),
            alpha_acc: Image::from_f64(w, h, 1, &self.alpha).expect("frame buffers are sized"),
        }
    }
}

pub fn render_frame(set: &GaussianSet, cam: &Camera) -> Frame {
    let raster = Raster::build(set, cam);
    let (w, h) = (raster.width, raster.height);
    let per_tile: Vec<Vec<(usize, [f64; 5])>> = (0..raster.tiles.len())
        .into_par_iter()
        .map(|tile| {
            let list = &raster.tiles[tile];
            raster
                .tile_pixels(tile)
                .map(|(x, y)| {
                    let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
                    let mut t = 1.0;
                    let mut acc = [0.0; 5];
                    for &si in list {
                        let s = &raster.splats[si as usize];
                        let Some((g, _, _)) = s.falloff(px, py) else {
                            continue;
                        };
                        let sigma = s.opacity * g;
                        let wgt = sigma * t;
                        acc[0] += s.color.x * wgt;
                        acc[1] += s.color.y * wgt;
                        acc[2] += s.color.z * wgt;
                        acc[3] += s.depth * wgt;
                        acc[4] += wgt;
                        t *= 1.0 - sigma;
                        if t < MIN_TRANSMITTANCE {
                            break;
                        }
                    }
                    (y * w + x, acc)
                })
                .collect()
        })
        .collect();

    let mut frame = Frame {
        width: w as u32,
        height: h as u32,
        color: vec![0.0; 3 * w * h],
        depth: vec![0.0; w * h],
        alpha: vec![0.0; w * h],
    };
    for (p, acc) in per_tile.into_iter().flatten() {
        frame.color[3 * p..3 * p + 3].copy_from_slice(&acc[..3]);
        frame.alpha[p] = acc[4];
        frame.depth[p] = if acc[4] > 0.0 { acc[3] / acc[4] } else { 0.0 };
    }
    frame
}

/// Color, expected depth and accumulated opacity as seen from `cam`.
pub fn render(set: &GaussianSet, cam: &Camera) -> RenderOutput {
    render_frame(set, cam).to_output()
}

/// Gaussian indices composited at every pixel, front to back.
///
/// Two parameter settings with equal supports lie on the same smooth piece
/// of the renderer (no truncation, culling or ordering event in between).
pub fn pixel_support(set: &GaussianSet, cam: &Camera) -> Vec<Vec<usize>> {
    let raster = Raster::build(set, cam);
    let w = raster.width;
    let mut out = vec![Vec::new(); raster.width * raster.height];
    for tile in 0..raster.tiles.len() {
        for (x, y) in raster.tile_pixels(tile) {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let mut t = 1.0;
            for &si in &raster.tiles[tile] {
                let s = &raster.splats[si as usize];
                if let Some((g, _, _)) = s.falloff(px, py) {
                    out[y * w + x].push(s.index);
                    t *= 1.0 - s.opacity * g;
                    if t < MIN_TRANSMITTANCE {
                        break;
                    }
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Default)]
struct SplatGrad {
    mean: [f64; 2],
    conic: [f64; 3],
    opacity: f64,
    color: [f64; 3],
}

impl SplatGrad {
    fn add(&mut self, o: &SplatGrad) {
        for i in 0..2 {
            self.mean[i] += o.mean[i];
        }
        for i in 0..3 {
            self.conic[i] += o.conic[i];
            self.color[i] += o.color[i];
        }
        self.opacity += o.opacity;
    }
}

/// Gradient of a scalar loss with respect to every Gaussian parameter, given
/// the loss gradient `d_color` with respect to the rendered interleaved RGB.
///
/// The result uses the flat layout of [`GaussianSet::to_params`].
pub fn render_backward(set: &GaussianSet, cam: &Camera, d_color: &[f64]) -> Vec<f64> {
    let raster = Raster::build(set, cam);
    let w = raster.width;
    assert_eq!(
        d_color.len(),
        3 * raster.width * raster.height,
        "gradient buffer size"
    );

    let per_tile: Vec<Vec<SplatGrad>> = (0..raster.tiles.len())
        .into_par_iter()
        .map(|tile| {
            let list = &raster.tiles[tile];
            let mut grads = vec![SplatGrad::default(); list.len()];
            // (local index, sigma, falloff, dx, dy, transmittance before)
            let mut hits: Vec<(usize, f64, f64, f64, f64, f64)> = Vec::new();
            for (x, y) in raster.tile_pixels(tile) {
                let p = y * w + x;
                let g_pix = Vec3::new(d_color[3 * p], d_color[3 * p + 1], d_color[3 * p + 2]);
                if g_pix == Vec3::zeros() {
                    continue;
                }
                let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
                hits.clear();
                let mut t = 1.0;
                for (local, &si) in list.iter().enumerate() {
                    let s = &raster.splats[si as usize];
                    let Some((g, dx, dy)) = s.falloff(px, py) else {
                        continue;
                    };
                    let sigma = s.opacity * g;
                    hits.push((local, sigma, g, dx, dy, t));
                    t *= 1.0 - sigma;
                    if t < MIN_TRANSMITTANCE {
                        break;
                    }
                }
                // color contributed by everything behind the current splat,
                // relative to the transmittance just after it
                let mut behind = Vec3::zeros();
                for &(local, sigma, g, dx, dy, t_before) in hits.iter().rev() {
                    let s = &raster.splats[list[local] as usize];
                    let d_sigma = g_pix.dot(&((s.color - behind) * t_before));
                    let gr = &mut grads[local];
                    let wgt = sigma * t_before;
                    gr.color[0] += g_pix.x * wgt;
                    gr.color[1] += g_pix.y * wgt;
                    gr.color[2] += g_pix.z * wgt;
                    gr.opacity += d_sigma * g;
                    let d_power = -d_sigma * s.opacity * g;
                    let [a, b, c] = s.conic;
                    gr.conic[0] += d_power * 0.5 * dx * dx;
                    gr.conic[1] += d_power * dx * dy;
                    gr.conic[2] += d_power * 0.5 * dy * dy;
                    gr.mean[0] -= d_power * (a * dx + b * dy);
                    gr.mean[1] -= d_power * (b * dx + c * dy);
                    behind = s.color * sigma + behind * (1.0 - sigma);
                }
            }
            grads
        })
        .collect();

    let mut splat_grads = vec![SplatGrad::default(); raster.splats.len()];
    for (tile, grads) in per_tile.iter().enumerate() {
        for (local, gr) in grads.iter().enumerate() {
            splat_grads[raster.tiles[tile][local] as usize].add(gr);
        }
    }

    let world_to_cam = cam.pose.rotation_matrix().transpose();
    let chained: Vec<(usize, [f64; PARAMS_PER_GAUSSIAN])> = raster
        .splats
        .par_iter()
        .zip(splat_grads.par_iter())
        .map(|(s, gr)| {
            (
                s.index,
                chain_to_params(&set.gaussians[s.index], s, gr, cam, &world_to_cam),
            )
        })
        .collect();
    let mut out = vec![0.0; set.len() * PARAMS_PER_GAUSSIAN];
    for (i, g) in chained {
        out[i * PARAMS_PER_GAUSSIAN..(i + 1) * PARAMS_PER_GAUSSIAN].copy_from_slice(&g);
    }
    out
}

/// Partial derivatives of the rotation matrix entries with respect to the
/// unit quaternion components `(w, x, y, z)`.
fn rotation_matrix_grad(q: &nalgebra::Quaternion<f64>, g_r: &Matrix3<f64>) -> [f64; 4] {
    let (w, x, y, z) = (q.w, q.i, q.j, q.k);
    let g = |i, j| g_r[(i, j)];
    let dw =
        2.0 * (-z * g(0, 1) + y * g(0, 2) + z * g(1, 0) - x * g(1, 2) - y * g(2, 0) + x * g(2, 1));
    let dx = 2.0
        * (y * g(0, 1) + z * g(0, 2) + y * g(1, 0) - 2.0 * x * g(1, 1) - w * g(1, 2)
            + z * g(2, 0)
            + w * g(2, 1)
            - 2.0 * x * g(2, 2));
    let dy = 2.0
        * (-2.0 * y * g(0, 0) + x * g(0, 1) + w * g(0, 2) + x * g(1, 0) + z * g(1, 2)
            - w * g(2, 0)
            + z * g(2, 1)
            - 2.0 * y * g(2, 2));
    let dz = 2.0
        * (-2.0 * z * g(0, 0) - w * g(0, 1) + x * g(0, 2) + w * g(1, 0) - 2.0 * z * g(1, 1)
            + y * g(1, 2)
            + x * g(2, 0)
            + y * g(2, 1));
    [dw, dx, dy, dz]
}

fn chain_to_params(
    g: &Gaussian3D,
    s: &Splat,
    gr: &SplatGrad,
    cam: &Camera,
    world_to_cam: &Matrix3<f64>,
) -> [f64; PARAMS_PER_GAUSSIAN] {
    let k = &cam.intrinsics;
    let (fx, fy) = (k.fx, k.fy);
    let (x, y, z) = (s.cam_point.x, s.cam_point.y, s.cam_point.z);

    // conic -> 2D covariance
    let [ca, cb, cc] = s.conic;
    let conic = Matrix2::new(ca, cb, cb, cc);
    let g_conic = Matrix2::new(
        gr.conic[0],
        0.5 * gr.conic[1],
        0.5 * gr.conic[1],
        gr.conic[2],
    );
    let g_cov2d = -(conic * g_conic * conic);

    // 2D covariance -> camera covariance and Jacobian
    let jac = &s.jacobian;
    let g_cov_cam = jac.transpose() * g_cov2d * jac;
    let g_jac: Matrix2x3<f64> = 2.0 * g_cov2d * jac * s.cov_cam;

    // camera covariance -> world covariance -> (R, S)
    let g_cov = world_to_cam.transpose() * g_cov_cam * world_to_cam;
    let unit_q = g.unit_rotation();
    let rot = rotation_matrix(&unit_q);
    let scale = g.scale();
    let m = rot * Matrix3::from_diagonal(&scale);
    let g_m = 2.0 * g_cov * m;
    let mut g_log_scale = [0.0; 3];
    let mut g_rot = Matrix3::zeros();
    for j in 0..3 {
        for i in 0..3 {
            g_log_scale[j] += g_m[(i, j)] * rot[(i, j)] * scale[j];
            g_rot[(i, j)] = g_m[(i, j)] * scale[j];
        }
    }
    let g_unit = rotation_matrix_grad(&unit_q, &g_rot);
    // through q / |q|
    let qn = g.rotation.norm();
    let qv = [unit_q.w, unit_q.i, unit_q.j, unit_q.k];
    let radial: f64 = (0..4).map(|i| qv[i] * g_unit[i]).sum();
    let g_q: Vec<f64> = (0..4).map(|i| (g_unit[i] - qv[i] * radial) / qn).collect();

    // camera-space center, via the projected mean and the Jacobian
    let z2 = z * z;
    let z3 = z2 * z;
    let mut g_t = Vec3::new(
        gr.mean[0] * fx / z,
        gr.mean[1] * fy / z,
        -gr.mean[0] * fx * x / z2 - gr.mean[1] * fy * y / z2,
    );
    g_t.x += g_jac[(0, 2)] * (-fx / z2);
    g_t.y += g_jac[(1, 2)] * (-fy / z2);
    g_t.z += g_jac[(0, 0)] * (-fx / z2)
        + g_jac[(0, 2)] * (2.0 * fx * x / z3)
        + g_jac[(1, 1)] * (-fy / z2)
        + g_jac[(1, 2)] * (2.0 * fy * y / z3);
    let g_mean = world_to_cam.transpose() * g_t;

    let o = s.opacity;
    let mut out = [0.0; PARAMS_PER_GAUSSIAN];
    out[..3].copy_from_slice(g_mean.as_slice());
    out[3..6].copy_from_slice(&g_log_scale);
    out[6..10].copy_from_slice(&g_q);
    out[10] = gr.opacity * o * (1.0 - o);
    out[11..14].copy_from_slice(&gr.color);
    out
}
