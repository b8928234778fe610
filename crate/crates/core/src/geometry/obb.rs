use nalgebra::{Matrix3, SymmetricEigen};

use super::Vec3;
use crate::error::{Error, Result};

pub const DEFAULT_OBB_MARGIN: f64 = 0.02;

/// Smallest-to-largest eigenvalue ratio below which a cloud counts as flat.
const FLATNESS_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBoundingBox {
    pub center: Vec3,
    /// Columns are the box axes (orthonormal, right-handed).
    pub axes: Matrix3<f64>,
    pub half_extents: Vec3,
}

/// One rectangular face of a box: `center + a*u + b*v` for `a, b` in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxFace {
    pub center: Vec3,
    pub u: Vec3,
    pub v: Vec3,
    pub normal: Vec3,
}

impl BoxFace {
    pub fn area(&self) -> f64 {
        4.0 * self.u.norm() * self.v.norm()
    }
}

impl OrientedBoundingBox {
    pub fn axis(&self, i: usize) -> Vec3 {
        self.axes.column(i).into_owned()
    }

    /// Coordinates of `p` in the box frame, relative to its center.
    pub fn local(&self, p: &Vec3) -> Vec3 {
        self.axes.transpose() * (p - self.center)
    }

    pub fn from_local(&self, l: &Vec3) -> Vec3 {
        self.center + self.axes * l
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        self.contains_with_tolerance(p, 0.0)
    }

    pub fn contains_with_tolerance(&self, p: &Vec3, tol: f64) -> bool {
        let l = self.local(p);
        (0..3).all(|i| l[i].abs() <= self.half_extents[i] + tol)
    }

    pub fn volume(&self) -> f64 {
        8.0 * self.half_extents.x * self.half_extents.y * self.half_extents.z
    }

    pub fn diagonal(&self) -> f64 {
        2.0 * self.half_extents.norm()
    }

    /// The six faces, ordered `+x, -x, +y, -y, +z, -z` in the box frame.
    pub fn faces(&self) -> [BoxFace; 6] {
        let ax = [self.axis(0), self.axis(1), self.axis(2)];
        let h = self.half_extents;
        let mut out = [BoxFace {
            center: self.center,
            u: Vec3::zeros(),
            v: Vec3::zeros(),
            normal: Vec3::zeros(),
        }; 6];
        for k in 0..3 {
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            for (s, sign) in [1.0, -1.0].into_iter().enumerate() {
                out[2 * k + s] = BoxFace {
                    center: self.center + ax[k] * (sign * h[k]),
                    u: ax[i] * h[i],
                    v: ax[j] * h[j],
                    normal: ax[k] * sign,
                };
            }
        }
        out
    }
}

/// PCA-aligned bounding box inflated by [`DEFAULT_OBB_MARGIN`].
pub fn compute_obb(points: &[Vec3]) -> Result<OrientedBoundingBox> {
    compute_obb_with_margin(points, DEFAULT_OBB_MARGIN)
}

pub fn compute_obb_with_margin(points: &[Vec3], margin: f64) -> Result<OrientedBoundingBox> {
    if points.len() < 4 {
        return Err(Error::DegenerateCloud);
    }
    if !(margin >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "negative OBB margin {margin}"
        )));
    }
    let n = points.len() as f64;
    let mean = points.iter().sum::<Vec3>() / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - mean;
        cov += d * d.transpose();
    }
    cov /= n;

    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let largest = eig.eigenvalues[order[0]];
    let smallest = eig.eigenvalues[order[2]];
    if !(largest > 0.0) || smallest <= FLATNESS_TOLERANCE * largest {
        return Err(Error::DegenerateCloud);
    }

    let mut axes = Matrix3::from_columns(&[
        eig.eigenvectors.column(order[0]).into_owned(),
        eig.eigenvectors.column(order[1]).into_owned(),
        eig.eigenvectors.column(order[2]).into_owned(),
    ]);
    for mut c in axes.column_iter_mut() {
        c.normalize_mut();
    }
    if axes.determinant() < 0.0 {
        axes.set_column(2, &(-axes.column(2)));
    }

    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for p in points {
        let l = axes.transpose() * (p - mean);
        lo = lo.inf(&l);
        hi = hi.sup(&l);
    }
    let mid = (lo + hi) * 0.5;
    let half = (hi - lo) * 0.5 * (1.0 + margin);
    if half.min() <= 0.0 {
        return Err(Error::DegenerateCloud);
    }
    Ok(OrientedBoundingBox {
        center: mean + axes * mid,
        axes,
        half_extents: half,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cube_corners() -> Vec<Vec3> {
        let mut v = Vec::new();
        for x in [0.0, 1.0] {
            for y in [0.0, 1.0] {
                for z in [0.0, 1.0] {
                    v.push(Vec3::new(x, y, z));
                }
            }
        }
        v
    }

    #[test]
    fn unit_cube_corners() {
        let obb = compute_obb(&cube_corners()).unwrap();
        assert_relative_eq!(obb.center, Vec3::repeat(0.5), epsilon = 1e-12);
        assert_relative_eq!(obb.half_extents, Vec3::repeat(0.51), epsilon = 1e-12);
        assert_relative_eq!(
            obb.axes.transpose() * obb.axes,
            Matrix3::identity(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn identical_points_are_degenerate() {
        let pts = vec![Vec3::new(1.0, 2.0, 3.0); 10];
        assert!(matches!(compute_obb(&pts), Err(Error::DegenerateCloud)));
    }

    #[test]
    fn coplanar_points_are_degenerate() {
        let pts: Vec<Vec3> = (0..20)
            .map(|i| Vec3::new(i as f64, (i * i % 7) as f64, 0.0))
            .collect();
        assert!(matches!(compute_obb(&pts), Err(Error::DegenerateCloud)));
        assert!(matches!(
            compute_obb(&pts[..3]),
            Err(Error::DegenerateCloud)
        ));
    }

    #[test]
    fn faces_lie_on_box_surface() {
        let obb = compute_obb(&cube_corners()).unwrap();
        for f in obb.faces() {
            let l = obb.local(&f.center);
            let on_face = (0..3).filter(|&i| (l[i].abs() - obb.half_extents[i]).abs() < 1e-12);
            assert_eq!(on_face.count(), 1);
            assert_relative_eq!(f.area(), 4.0 * 0.51 * 0.51, epsilon = 1e-12);
        }
    }
}
