//! Depth-based warping of a rendered view into a neighboring camera.

use crate::error::{Error, Result};
use crate::geometry::{Camera, Vec3};
use crate::splat::Image;

/// A view point-rendered into another camera, with its validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpResult {
    /// RGB, zero where `mask` is zero.
    pub image: Image,
    /// One channel, 1 where at least one source point landed, else 0.
    pub mask: Image,
    pub source_view: usize,
    pub target_view: usize,
}

impl WarpResult {
    pub fn valid_pixels(&self) -> usize {
        self.mask.data().iter().filter(|&&m| m > 0.5).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColoredPoint {
    pub position: Vec3,
    pub color: [f32; 3],
}

/// One world-space point per pixel with positive depth, through the pixel
/// center. `depth` is camera-space z.
pub fn unproject(color: &Image, depth: &Image, cam: &Camera) -> Result<Vec<ColoredPoint>> {
    color.ensure_channels(3)?;
    depth.ensure_channels(1)?;
    let k = &cam.intrinsics;
    if color.width() != depth.width() || color.height() != depth.height() {
        return Err(Error::DimensionMismatch {
            expected: color.shape_string(),
            found: depth.shape_string(),
        });
    }
    if color.width() != k.width || color.height() != k.height {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{} (camera {})", k.width, k.height, cam.id),
            found: color.shape_string(),
        });
    }
    let mut points = Vec::new();
    for y in 0..color.height() {
        for x in 0..color.width() {
            let d = depth.pixel(x, y)[0] as f64;
            if !(d > 0.0) || !d.is_finite() {
                continue;
            }
            let c = color.pixel(x, y);
            points.push(ColoredPoint {
                position: cam.unproject(x as f64 + 0.5, y as f64 + 0.5, d),
                color: [c[0], c[1], c[2]],
            });
        }
    }
    Ok(points)
}

/// Nearest-pixel z-buffered splatting of `points` into `cam`; on equal
/// depth the earlier point wins.
pub fn point_render(
    points: &[ColoredPoint],
    cam: &Camera,
    source_view: usize,
    target_view: usize,
) -> WarpResult {
    let k = &cam.intrinsics;
    let (w, h) = (k.width, k.height);
    let mut image = Image::new(w, h, 3);
    let mut mask = Image::new(w, h, 1);
    let mut zbuf = vec![f64::INFINITY; w as usize * h as usize];
    for p in points {
        let (uv, z) = cam.project(&p.position);
        if !(z >= k.near && z <= k.far) {
            continue;
        }
        if !(uv.x >= 0.0 && uv.x < w as f64 && uv.y >= 0.0 && uv.y < h as f64) {
            continue;
        }
        let (x, y) = (uv.x.floor() as u32, uv.y.floor() as u32);
        let i = y as usize * w as usize + x as usize;
        if z < zbuf[i] {
            zbuf[i] = z;
            image.pixel_mut(x, y).copy_from_slice(&p.color);
            mask.pixel_mut(x, y)[0] = 1.0;
        }
    }
    WarpResult {
        image,
        mask,
        source_view,
        target_view,
    }
}

/// Warps a rendered `(color, depth)` pair from `source` into `target`.
pub fn warp_view(
    color: &Image,
    depth: &Image,
    source: &Camera,
    target: &Camera,
    source_view: usize,
    target_view: usize,
) -> Result<WarpResult> {
    let points = unproject(color, depth, source)?;
    Ok(point_render(&points, target, source_view, target_view))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Intrinsics, Pose};

    fn cam() -> Camera {
        Camera::new(
            0,
            Pose::identity(),
            Intrinsics::new(10.0, 10.0, 4.0, 3.0, 8, 6, 0.1, 50.0).unwrap(),
        )
    }

    #[test]
    fn principal_point_unprojects_on_axis() {
        // principal point at the centre of pixel (3, 2)
        let c = Camera::new(
            0,
            Pose::identity(),
            Intrinsics::new(10.0, 10.0, 3.5, 2.5, 8, 6, 0.1, 50.0).unwrap(),
        );
        let mut color = Image::new(8, 6, 3);
        color.pixel_mut(3, 2).copy_from_slice(&[1.0, 0.5, 0.25]);
        let mut depth = Image::new(8, 6, 1);
        depth.pixel_mut(3, 2)[0] = 2.0;
        let pts = unproject(&color, &depth, &c).unwrap();
        assert_eq!(pts.len(), 1);
        assert!((pts[0].position - Vec3::new(0.0, 0.0, 2.0)).norm() < 1e-12);
        assert_eq!(pts[0].color, [1.0, 0.5, 0.25]);
    }

    #[test]
    fn empty_points_give_empty_mask() {
        let w = point_render(&[], &cam(), 0, 1);
        assert_eq!(w.valid_pixels(), 0);
    }

    #[test]
    fn depth_channel_checked() {
        let c = cam();
        assert!(unproject(&Image::new(8, 6, 3), &Image::new(8, 6, 3), &c).is_err());
        assert!(unproject(&Image::new(8, 6, 3), &Image::new(7, 6, 1), &c).is_err());
    }
}
