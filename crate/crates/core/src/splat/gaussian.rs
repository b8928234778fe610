use nalgebra::{Matrix3, Quaternion};

use crate::geometry::Vec3;

/// Log-scale bounds keeping `exp(s)` inside `(1e-6, 1e3)`.
pub const MIN_LOG_SCALE: f64 = -13.8;
pub const MAX_LOG_SCALE: f64 = 6.9;
/// Opacity logit bound; `sigmoid(30)` is still below one in f64.
pub const MAX_OPACITY_LOGIT: f64 = 30.0;

/// Values per Gaussian in the flat parameter layout:
/// mean(3) log_scale(3) rotation wxyz(4) opacity(1) color(3).
pub const PARAMS_PER_GAUSSIAN: usize = 14;

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian3D {
    pub mean: Vec3,
    pub log_scale: Vec3,
    /// Rotation quaternion; may drift from unit length between optimizer
    /// steps, rendering always uses its normalized value.
    pub rotation: Quaternion<f64>,
    pub opacity_logit: f64,
    /// Linear RGB in `[0, 1]`.
    pub color: Vec3,
}

impl Gaussian3D {
    pub fn new(
        mean: Vec3,
        scale: Vec3,
        rotation: Quaternion<f64>,
        opacity: f64,
        color: Vec3,
    ) -> Self {
        Self {
            mean,
            log_scale: scale.map(f64::ln),
            rotation: rotation.normalize(),
            opacity_logit: logit(opacity.clamp(1e-12, 1.0 - 1e-12)),
            color,
        }
    }

    pub fn isotropic(mean: Vec3, scale: f64, opacity: f64, color: Vec3) -> Self {
        Self::new(
            mean,
            Vec3::repeat(scale),
            Quaternion::identity(),
            opacity,
            color,
        )
    }

    pub fn opacity(&self) -> f64 {
        sigmoid(self.opacity_logit)
    }

    pub fn scale(&self) -> Vec3 {
        self.log_scale.map(f64::exp)
    }

    pub fn unit_rotation(&self) -> Quaternion<f64> {
        self.rotation.normalize()
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        rotation_matrix(&self.unit_rotation())
    }

    /// Renormalizes the quaternion and clamps scale, opacity and color into
    /// their valid ranges.
    pub fn sanitize(&mut self) {
        let n = self.rotation.norm();
        self.rotation = if n.is_finite() && n > 1e-12 {
            self.rotation / n
        } else {
            Quaternion::identity()
        };
        self.log_scale = self
            .log_scale
            .map(|s| s.clamp(MIN_LOG_SCALE, MAX_LOG_SCALE));
        self.opacity_logit = self
            .opacity_logit
            .clamp(-MAX_OPACITY_LOGIT, MAX_OPACITY_LOGIT);
        self.color = self.color.map(|c| c.clamp(0.0, 1.0));
    }

    pub fn write_params(&self, out: &mut [f64]) {
        let q = &self.rotation;
        out[..3].copy_from_slice(self.mean.as_slice());
        out[3..6].copy_from_slice(self.log_scale.as_slice());
        out[6..10].copy_from_slice(&[q.w, q.i, q.j, q.k]);
        out[10] = self.opacity_logit;
        out[11..14].copy_from_slice(self.color.as_slice());
    }

    pub fn from_params(p: &[f64]) -> Self {
        Self {
            mean: Vec3::new(p[0], p[1], p[2]),
            log_scale: Vec3::new(p[3], p[4], p[5]),
            rotation: Quaternion::new(p[6], p[7], p[8], p[9]),
            opacity_logit: p[10],
            color: Vec3::new(p[11], p[12], p[13]),
        }
    }
}

/// Rotation matrix of a unit quaternion `(w, x, y, z)`.
pub fn rotation_matrix(q: &Quaternion<f64>) -> Matrix3<f64> {
    let (w, x, y, z) = (q.w, q.i, q.j, q.k);
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// `R diag(exp(2s)) R^T`.
pub fn covariance_of(g: &Gaussian3D) -> Matrix3<f64> {
    let r = g.rotation_matrix();
    let m = r * Matrix3::from_diagonal(&g.scale());
    m * m.transpose()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GaussianSet {
    pub gaussians: Vec<Gaussian3D>,
}

impl GaussianSet {
    pub fn new(gaussians: Vec<Gaussian3D>) -> Self {
        Self { gaussians }
    }

    pub fn len(&self) -> usize {
        self.gaussians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaussians.is_empty()
    }

    pub fn to_params(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.len() * PARAMS_PER_GAUSSIAN];
        for (g, chunk) in self.gaussians.iter().zip(p.chunks_mut(PARAMS_PER_GAUSSIAN)) {
            g.write_params(chunk);
        }
        p
    }

    pub fn from_params(p: &[f64]) -> Self {
        Self::new(
            p.chunks(PARAMS_PER_GAUSSIAN)
                .map(Gaussian3D::from_params)
                .collect(),
        )
    }

    pub fn sanitize(&mut self) {
        self.gaussians.iter_mut().for_each(Gaussian3D::sanitize);
    }

    pub fn centers(&self) -> Vec<Vec3> {
        self.gaussians.iter().map(|g| g.mean).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{SymmetricEigen, UnitQuaternion, Vector3};

    #[test]
    fn identity_covariance() {
        let g = Gaussian3D::isotropic(Vec3::zeros(), 1.0, 0.5, Vec3::zeros());
        assert_relative_eq!(covariance_of(&g), Matrix3::identity(), epsilon = 1e-15);
    }

    #[test]
    fn axis_aligned_covariance() {
        let g = Gaussian3D::new(
            Vec3::zeros(),
            Vec3::new(2.0, 1.0, 1.0),
            Quaternion::identity(),
            0.5,
            Vec3::zeros(),
        );
        assert_relative_eq!(
            covariance_of(&g),
            Matrix3::from_diagonal(&Vec3::new(4.0, 1.0, 1.0)),
            epsilon = 1e-12
        );
    }

    #[test]
    fn covariance_eigenvalues_are_squared_scales() {
        let q = UnitQuaternion::from_axis_angle(
            &nalgebra::Unit::new_normalize(Vector3::new(0.3, -0.5, 0.8)),
            1.1,
        );
        let g = Gaussian3D::new(
            Vec3::new(1.0, 2.0, 3.0),
            Vec3::new(0.4, 1.3, 2.2),
            *q.quaternion(),
            0.7,
            Vec3::repeat(0.5),
        );
        let cov = covariance_of(&g);
        assert_relative_eq!(cov, cov.transpose(), epsilon = 1e-14);
        let mut eig: Vec<f64> = SymmetricEigen::new(cov)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        eig.sort_by(f64::total_cmp);
        let mut expect: Vec<f64> = g.scale().iter().map(|s| s * s).collect();
        expect.sort_by(f64::total_cmp);
        for (a, b) in eig.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn rotation_matrix_matches_nalgebra() {
        let q = UnitQuaternion::from_euler_angles(0.2, -0.7, 1.9);
        assert_relative_eq!(
            rotation_matrix(q.quaternion()),
            q.to_rotation_matrix().into_inner(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn params_roundtrip_and_sanitize() {
        let mut g =
            Gaussian3D::isotropic(Vec3::new(1.0, 2.0, 3.0), 0.1, 0.3, Vec3::new(0.1, 0.2, 0.3));
        let mut p = [0.0; PARAMS_PER_GAUSSIAN];
        g.write_params(&mut p);
        assert_eq!(Gaussian3D::from_params(&p), g);
        g.rotation = Quaternion::new(2.0, 0.0, 0.0, 0.0);
        g.color = Vec3::new(-1.0, 0.5, 2.0);
        g.log_scale.x = 50.0;
        g.sanitize();
        assert_relative_eq!(g.rotation.norm(), 1.0);
        assert_eq!(g.color, Vec3::new(0.0, 0.5, 1.0));
        assert_eq!(g.log_scale.x, MAX_LOG_SCALE);
    }
}
