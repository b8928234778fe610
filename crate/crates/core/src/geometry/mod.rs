//! Poses, pinhole cameras, bounding boxes and coverage spheres.

mod bitmask;
mod camera;
mod coverage;
mod obb;

pub use bitmask::Bitmask;
pub use camera::{point_in_frustum, Camera, Intrinsics, Pose, Vec3};
pub use coverage::{
    default_sphere_radius, farthest_point_sampling, packing_radius, sample_coverage_spheres,
    sample_obb_face_points, sample_sphere_points, select_sphere_centers, spheres_from_centers,
    visible_samples, CoverageField, CoverageSphere, DEFAULT_OBB_SPHERES, DEFAULT_RADIUS_FACTOR,
    DEFAULT_SAMPLES_PER_SPHERE, DEFAULT_SURFACE_SPHERES,
};
pub use obb::{
    compute_obb, compute_obb_with_margin, BoxFace, OrientedBoundingBox, DEFAULT_OBB_MARGIN,
};
