use nalgebra::{Matrix3, Quaternion, Rotation3, UnitQuaternion, Vector2, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Camera-to-world rigid transform.
///
/// `rotation` maps camera-frame directions into the world frame and
/// `translation` is the camera center in world coordinates. The camera frame
/// follows the usual pinhole convention: +x right, +y down, +z forward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vec3,
}

impl Pose {
    pub fn new(rotation: UnitQuaternion<f64>, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(UnitQuaternion::identity(), Vec3::zeros())
    }

    /// Builds a pose from raw `[w, x, y, z]` components, normalizing them.
    /// Components already unit up to rounding are kept verbatim so that
    /// written poses read back bit-exactly.
    pub fn from_wxyz(q: [f64; 4], translation: Vec3) -> Result<Self> {
        let quat = Quaternion::new(q[0], q[1], q[2], q[3]);
        let norm = quat.norm();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "quaternion {q:?} cannot be normalized"
            )));
        }
        let rotation = if (norm - 1.0).abs() <= 8.0 * f64::EPSILON {
            UnitQuaternion::new_unchecked(quat)
        } else {
            UnitQuaternion::from_quaternion(quat)
        };
        Ok(Self::new(rotation, translation))
    }

    pub fn wxyz(&self) -> [f64; 4] {
        let q = self.rotation.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    /// Pose located at `eye` whose optical axis points at `target`.
    ///
    /// The image "down" axis is orthogonalized against `-world_up`; when the
    /// viewing direction is parallel to `world_up` a fallback up vector is used.
    pub fn look_at(eye: Vec3, target: Vec3, world_up: Vec3) -> Self {
        let mut forward = target - eye;
        if forward.norm() < 1e-12 {
            forward = Vec3::x();
        }
        let forward = forward.normalize();
        let mut up = world_up.normalize();
        if forward.cross(&up).norm() < 1e-6 {
            up = if forward.x.abs() < 0.9 {
                Vec3::x()
            } else {
                Vec3::y()
            };
        }
        let right = forward.cross(&up).normalize();
        let down = forward.cross(&right);
        let m = Matrix3::from_columns(&[right, down, forward]);
        let rot = Rotation3::from_matrix_unchecked(m);
        Self::new(UnitQuaternion::from_rotation_matrix(&rot), eye)
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.rotation.to_rotation_matrix().into_inner()
    }

    pub fn world_to_camera(&self, p: &Vec3) -> Vec3 {
        self.rotation
            .inverse_transform_vector(&(p - self.translation))
    }

    pub fn camera_to_world(&self, p: &Vec3) -> Vec3 {
        self.rotation.transform_vector(p) + self.translation
    }

    /// Optical axis in world coordinates.
    pub fn forward(&self) -> Vec3 {
        self.rotation.transform_vector(&Vec3::z())
    }
}

/// Pinhole intrinsics plus clipping range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    pub near: f64,
    pub far: f64,
}

impl Intrinsics {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
        near: f64,
        far: f64,
    ) -> Result<Self> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            near,
            far,
        };
        k.validate()?;
        Ok(k)
    }

    /// Centered principal point with the given horizontal field of view.
    pub fn with_fov(width: u32, height: u32, hfov_deg: f64, near: f64, far: f64) -> Result<Self> {
        let fx = 0.5 * width as f64 / (0.5 * hfov_deg.to_radians()).tan();
        Self::new(
            fx,
            fx,
            0.5 * width as f64,
            0.5 * height as f64,
            width,
            height,
            near,
            far,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidArgument(format!("intrinsics: {msg}")));
        if self.width == 0 || self.height == 0 {
            return fail("width and height must be positive");
        }
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return fail("focal lengths must be positive");
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64) {
            return fail("cx outside [0, width)");
        }
        if !(self.cy >= 0.0 && self.cy < self.height as f64) {
            return fail("cy outside [0, height)");
        }
        if !(self.near > 0.0 && self.near < self.far) {
            return fail("clipping range must satisfy 0 < near < far");
        }
        Ok(())
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub id: u32,
    pub pose: Pose,
    pub intrinsics: Intrinsics,
}

impl Camera {
    pub fn new(id: u32, pose: Pose, intrinsics: Intrinsics) -> Self {
        Self {
            id,
            pose,
            intrinsics,
        }
    }

    /// Projects a camera-frame point to continuous pixel coordinates.
    /// Pixel `(i, j)` covers `[i, i+1) x [j, j+1)`.
    pub fn project_camera_point(&self, pc: &Vec3) -> Vector2<f64> {
        let k = &self.intrinsics;
        Vector2::new(k.fx * pc.x / pc.z + k.cx, k.fy * pc.y / pc.z + k.cy)
    }

    /// Pixel coordinates and camera-space depth of a world point.
    pub fn project(&self, p: &Vec3) -> (Vector2<f64>, f64) {
        let pc = self.pose.world_to_camera(p);
        (self.project_camera_point(&pc), pc.z)
    }

    /// World point at camera-space depth `depth` along the ray through pixel
    /// coordinates `(u, v)`.
    pub fn unproject(&self, u: f64, v: f64, depth: f64) -> Vec3 {
        let k = &self.intrinsics;
        let pc = Vec3::new((u - k.cx) / k.fx * depth, (v - k.cy) / k.fy * depth, depth);
        self.pose.camera_to_world(&pc)
    }

    pub fn center(&self) -> Vec3 {
        self.pose.translation
    }
}

/// True iff `point` projects inside the image with depth in `[near, far]`.
pub fn point_in_frustum(camera: &Camera, point: &Vec3) -> bool {
    let k = &camera.intrinsics;
    let pc = camera.pose.world_to_camera(point);
    if !(pc.z >= k.near && pc.z <= k.far) {
        return false;
    }
    let uv = camera.project_camera_point(&pc);
    uv.x >= 0.0 && uv.x < k.width as f64 && uv.y >= 0.0 && uv.y < k.height as f64
}
