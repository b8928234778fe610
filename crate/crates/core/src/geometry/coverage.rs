//! Coverage spheres and their visibility bookkeeping.
//!
//! Scene area is proxied by a set of spheres placed on the surface and on the
//! faces of the scene box. Each sphere carries `N'` sample points; a sample
//! counts as covered once it falls inside the frustum of an accepted camera.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{point_in_frustum, Bitmask, Camera, OrientedBoundingBox, Vec3};
use crate::error::{Error, Result};

pub const DEFAULT_SURFACE_SPHERES: usize = 192;
pub const DEFAULT_OBB_SPHERES: usize = 64;
pub const DEFAULT_SAMPLES_PER_SPHERE: usize = 64;
/// Sphere radius as a multiple of the center packing radius.
pub const DEFAULT_RADIUS_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageSphere {
    pub id: usize,
    pub center: Vec3,
    pub radius: f64,
    pub samples: Vec<Vec3>,
}

/// `n_prime` points on a sphere along a Fibonacci spiral, starting at the
/// `+z` pole and ending at the `-z` pole.
pub fn sample_sphere_points(center: Vec3, radius: f64, n_prime: usize) -> Result<Vec<Vec3>> {
    if n_prime == 0 {
        return Err(Error::InvalidArgument("n_prime must be at least 1".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sphere radius {radius} must be positive"
        )));
    }
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let pts = (0..n_prime)
        .map(|k| {
            let z = if n_prime == 1 {
                1.0
            } else {
                1.0 - 2.0 * k as f64 / (n_prime - 1) as f64
            };
            let r = (1.0 - z * z).max(0.0).sqrt();
            let theta = golden * k as f64;
            let dir = Vec3::new(r * theta.cos(), r * theta.sin(), z);
            center + dir.normalize() * radius
        })
        .collect();
    Ok(pts)
}

/// Greedy farthest-point subsampling starting from the first point.
///
/// Returns the chosen indices and the insertion distance of the last pick,
/// which lower-bounds every pairwise distance among the chosen points.
pub fn farthest_point_sampling(points: &[Vec3], count: usize) -> (Vec<usize>, f64) {
    if points.is_empty() || count == 0 {
        return (Vec::new(), 0.0);
    }
    let count = count.min(points.len());
    let mut chosen = Vec::with_capacity(count);
    let mut dist = vec![f64::INFINITY; points.len()];
    let mut next = 0usize;
    let mut last_gap = f64::INFINITY;
    for _ in 0..count {
        chosen.push(next);
        let c = points[next];
        dist.par_iter_mut()
            .zip(points.par_iter())
            .for_each(|(d, p)| *d = d.min((p - c).norm()));
        let (idx, gap) =
            dist.iter().enumerate().fold(
                (0usize, -1.0f64),
                |best, (i, &d)| if d > best.1 { (i, d) } else { best },
            );
        if chosen.len() < count {
            last_gap = gap;
        }
        next = idx;
    }
    if count == 1 {
        last_gap = 0.0;
    }
    (chosen, last_gap)
}

/// Splits `total` among faces proportionally to area (largest remainder,
/// ties resolved by face order).
fn allocate_by_area(areas: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = areas.iter().sum();
    let quotas: Vec<f64> = areas.iter().map(|a| a / sum * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut rest = total - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..areas.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for i in order {
        if rest == 0 {
            break;
        }
        counts[i] += 1;
        rest -= 1;
    }
    counts
}

/// Jittered-stratified points on the six faces of `obb`.
pub fn sample_obb_face_points(obb: &OrientedBoundingBox, count: usize, rng_seed: u64) -> Vec<Vec3> {
    if count == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let faces = obb.faces();
    let areas: Vec<f64> = faces.iter().map(|f| f.area()).collect();
    let counts = allocate_by_area(&areas, count);
    let mut out = Vec::with_capacity(count);
    for (face, &k) in faces.iter().zip(&counts) {
        if k == 0 {
            continue;
        }
        let (lu, lv) = (face.u.norm(), face.v.norm());
        let cols = ((k as f64 * lu / lv).sqrt().ceil() as usize).clamp(1, k);
        let rows = k.div_ceil(cols);
        let cells = rows * cols;
        for s in 0..k {
            let cell = s * cells / k;
            let (r, c) = (cell / cols, cell % cols);
            let a = (c as f64 + rng.gen::<f64>()) / cols as f64 * 2.0 - 1.0;
            let b = (r as f64 + rng.gen::<f64>()) / rows as f64 * 2.0 - 1.0;
            out.push(face.center + face.u * a + face.v * b);
        }
    }
    out
}

/// Sphere centers: `n_surface` farthest-point picks from `surface_points`
/// followed by `n_obb` stratified picks on the box faces.
pub fn select_sphere_centers(
    surface_points: &[Vec3],
    obb: &OrientedBoundingBox,
    n_surface: usize,
    n_obb: usize,
    rng_seed: u64,
) -> Result<Vec<Vec3>> {
    if n_surface + n_obb == 0 {
        return Err(Error::InvalidArgument(
            "at least one coverage sphere is required".into(),
        ));
    }
    if n_surface > 0 && surface_points.is_empty() {
        return Err(Error::EmptySurface {
            requested: n_surface,
        });
    }
    let (idx, _) = farthest_point_sampling(surface_points, n_surface);
    let mut centers: Vec<Vec3> = idx.into_iter().map(|i| surface_points[i]).collect();
    // FPS cannot pick more distinct points than exist; pad by cycling so the
    // requested count N stays exact.
    let picked = centers.len();
    for k in picked..n_surface {
        centers.push(centers[k % picked]);
    }
    centers.extend(sample_obb_face_points(obb, n_obb, rng_seed));
    Ok(centers)
}

/// Half the smallest center-to-center distance: the largest radius at which
/// spheres around the centers stay disjoint.
pub fn packing_radius(centers: &[Vec3]) -> f64 {
    let nn = centers
        .par_iter()
        .enumerate()
        .map(|(i, a)| {
            centers
                .iter()
                .enumerate()
                .filter(|&(j, b)| j != i && (a - b).norm() > 0.0)
                .map(|(_, b)| (a - b).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min);
    if nn.is_finite() {
        nn * 0.5
    } else {
        0.0
    }
}

/// Default sphere radius for a set of centers, falling back to a fraction of
/// the box diagonal when the centers are too few to define a spacing.
pub fn default_sphere_radius(centers: &[Vec3], obb: &OrientedBoundingBox) -> f64 {
    let r = packing_radius(centers) * DEFAULT_RADIUS_FACTOR;
    if r > 0.0 {
        r
    } else {
        0.05 * obb.diagonal()
    }
}

#[allow(clippy::too_many_arguments)]
pub fn sample_coverage_spheres(
    surface_points: &[Vec3],
    obb: &OrientedBoundingBox,
    n_surface: usize,
    n_obb: usize,
    radius: f64,
    n_prime: usize,
    rng_seed: u64,
) -> Result<Vec<CoverageSphere>> {
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sphere radius {radius} must be positive"
        )));
    }
    let centers = select_sphere_centers(surface_points, obb, n_surface, n_obb, rng_seed)?;
    spheres_from_centers(&centers, radius, n_prime)
}

pub fn spheres_from_centers(
    centers: &[Vec3],
    radius: f64,
    n_prime: usize,
) -> Result<Vec<CoverageSphere>> {
    centers
        .iter()
        .enumerate()
        .map(|(id, &center)| {
            Ok(CoverageSphere {
                id,
                center,
                radius,
                samples: sample_sphere_points(center, radius, n_prime)?,
            })
        })
        .collect()
}

/// Bit `k` is set iff sample `k` of `sphere` lies inside the camera frustum.
pub fn visible_samples(camera: &Camera, sphere: &CoverageSphere) -> Bitmask {
    let mut m = Bitmask::new(sphere.samples.len());
    for (k, s) in sphere.samples.iter().enumerate() {
        if point_in_frustum(camera, s) {
            m.set(k);
        }
    }
    m
}

/// Coverage spheres plus the per-sample "already observed" state.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageField {
    spheres: Vec<CoverageSphere>,
    seen: Vec<Bitmask>,
}

impl CoverageField {
    pub fn new(spheres: Vec<CoverageSphere>) -> Result<Self> {
        let n_prime = spheres.first().map(|s| s.samples.len()).unwrap_or(0);
        if spheres.is_empty() || n_prime == 0 {
            return Err(Error::InvalidArgument(
                "coverage field needs populated spheres".into(),
            ));
        }
        if spheres.iter().any(|s| s.samples.len() != n_prime) {
            return Err(Error::InvalidArgument(
                "all coverage spheres must carry the same sample count".into(),
            ));
        }
        let seen = spheres.iter().map(|_| Bitmask::new(n_prime)).collect();
        Ok(Self { spheres, seen })
    }

    pub fn with_seen(spheres: Vec<CoverageSphere>, seen: Vec<Bitmask>) -> Result<Self> {
        let mut f = Self::new(spheres)?;
        if seen.len() != f.spheres.len() || seen.iter().any(|m| m.len() != f.samples_per_sphere()) {
            return Err(Error::InvalidArgument(
                "seen masks do not match spheres".into(),
            ));
        }
        f.seen = seen;
        Ok(f)
    }

    /// Builds spheres with the default radius rule and wraps them in a field.
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        surface_points: &[Vec3],
        obb: &OrientedBoundingBox,
        n_surface: usize,
        n_obb: usize,
        radius: Option<f64>,
        n_prime: usize,
        rng_seed: u64,
    ) -> Result<Self> {
        let centers = select_sphere_centers(surface_points, obb, n_surface, n_obb, rng_seed)?;
        let radius = radius.unwrap_or_else(|| default_sphere_radius(&centers, obb));
        Self::new(spheres_from_centers(&centers, radius, n_prime)?)
    }

    pub fn spheres(&self) -> &[CoverageSphere] {
        &self.spheres
    }

    pub fn seen(&self) -> &[Bitmask] {
        &self.seen
    }

    pub fn samples_per_sphere(&self) -> usize {
        self.spheres[0].samples.len()
    }

    /// `N * N'`.
    pub fn total_samples(&self) -> usize {
        self.spheres.len() * self.samples_per_sphere()
    }

    pub fn seen_count(&self) -> usize {
        self.seen.iter().map(Bitmask::count_ones).sum()
    }

    pub fn coverage_fraction(&self) -> f64 {
        self.seen_count() as f64 / self.total_samples() as f64
    }

    /// Fresh field over the same spheres with nothing seen.
    pub fn cleared(&self) -> Self {
        Self::new(self.spheres.clone()).expect("spheres were validated on construction")
    }

    /// Per-sphere union of the visibility masks of `cameras`.
    pub fn union_visibility(&self, cameras: &[Camera]) -> Vec<Bitmask> {
        self.spheres
            .par_iter()
            .map(|s| {
                let mut m = Bitmask::new(s.samples.len());
                for c in cameras {
                    m.union_with(&visible_samples(c, s));
                }
                m
            })
            .collect()
    }

    pub(crate) fn seen_mut(&mut self) -> &mut [Bitmask] {
        &mut self.seen
    }

    /// Centroid of all unseen sample points, if any remain.
    pub fn unseen_centroid(&self) -> Option<Vec3> {
        let (sum, n) = self
            .spheres
            .iter()
            .zip(&self.seen)
            .flat_map(|(s, m)| {
                s.samples
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| !m.get(*k))
                    .map(|(_, p)| *p)
            })
            .fold((Vec3::zeros(), 0usize), |(acc, n), p| (acc + p, n + 1));
        (n > 0).then(|| sum / n as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{compute_obb, Intrinsics, Pose};
    use approx::assert_relative_eq;

    #[test]
    fn single_sample_is_the_pole() {
        let c = Vec3::new(1.0, 2.0, 3.0);
        let p = sample_sphere_points(c, 0.5, 1).unwrap();
        assert_eq!(p.len(), 1);
        assert_relative_eq!(p[0], c + Vec3::new(0.0, 0.0, 0.5), epsilon = 1e-15);
    }

    #[test]
    fn sphere_points_on_surface_and_balanced() {
        let c = Vec3::new(-0.3, 0.7, 2.0);
        let pts = sample_sphere_points(c, 1.0, 64).unwrap();
        for p in &pts {
            assert!(((p - c).norm() - 1.0).abs() <= 1e-9);
        }
        let mean = pts.iter().sum::<Vec3>() / 64.0;
        assert!((mean - c).norm() < 0.05);
    }

    #[test]
    fn fibonacci_spacing_is_even() {
        let pts = sample_sphere_points(Vec3::zeros(), 1.0, 64).unwrap();
        // brute-force nearest-neighbour angle per point
        let nn: Vec<f64> = pts
            .iter()
            .enumerate()
            .map(|(i, a)| {
                pts.iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, b)| a.dot(b).clamp(-1.0, 1.0).acos())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let lo = nn.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = nn.iter().cloned().fold(0.0, f64::max);
        assert!(hi / lo < 2.0, "spacing ratio {}", hi / lo);
    }

    #[test]
    fn zero_samples_or_radius_rejected() {
        assert!(sample_sphere_points(Vec3::zeros(), 1.0, 0).is_err());
        assert!(sample_sphere_points(Vec3::zeros(), 0.0, 4).is_err());
    }

    fn unit_cube_obb() -> OrientedBoundingBox {
        let mut v = Vec::new();
        for i in 0..8 {
            v.push(Vec3::new(
                (i & 1) as f64,
                (i >> 1 & 1) as f64,
                (i >> 2 & 1) as f64,
            ));
        }
        compute_obb(&v).unwrap()
    }

    #[test]
    fn one_sphere_per_face() {
        let obb = unit_cube_obb();
        let spheres = sample_coverage_spheres(&[], &obb, 0, 6, 0.1, 8, 3).unwrap();
        assert_eq!(spheres.len(), 6);
        let mut hit = [false; 6];
        for s in &spheres {
            let l = obb.local(&s.center);
            let faces: Vec<usize> = (0..3)
                .filter(|&i| (l[i].abs() - obb.half_extents[i]).abs() < 1e-12)
                .collect();
            assert_eq!(faces.len(), 1);
            hit[2 * faces[0] + usize::from(l[faces[0]] < 0.0)] = true;
        }
        assert!(hit.iter().all(|&h| h));
    }

    #[test]
    fn sphere_sampling_errors() {
        let obb = unit_cube_obb();
        assert!(matches!(
            sample_coverage_spheres(&[], &obb, 3, 0, 0.1, 8, 0),
            Err(Error::EmptySurface { requested: 3 })
        ));
        assert!(sample_coverage_spheres(&[], &obb, 0, 6, 0.0, 8, 0).is_err());
        assert!(sample_coverage_spheres(&[], &obb, 0, 0, 0.1, 8, 0).is_err());
    }

    #[test]
    fn area_allocation_sums_exactly() {
        let c = allocate_by_area(&[12.0, 12.0, 10.0, 10.0, 7.5, 7.5], 64);
        assert_eq!(c.iter().sum::<usize>(), 64);
        assert!(c[0] >= c[4]);
    }

    #[test]
    fn visibility_extremes() {
        let spheres = spheres_from_centers(&[Vec3::new(0.0, 0.0, 5.0)], 0.5, 32).unwrap();
        let k = Intrinsics::new(50.0, 50.0, 32.0, 24.0, 64, 48, 0.1, 20.0).unwrap();
        let facing = Camera::new(0, Pose::identity(), k);
        assert_eq!(visible_samples(&facing, &spheres[0]).count_ones(), 32);
        let away = Camera::new(
            1,
            Pose::look_at(Vec3::zeros(), Vec3::new(0.0, 0.0, -1.0), Vec3::y()),
            k,
        );
        assert_eq!(visible_samples(&away, &spheres[0]).count_ones(), 0);
    }

    #[test]
    fn field_validates_sample_counts() {
        let mut s = spheres_from_centers(&[Vec3::zeros(), Vec3::x()], 0.1, 4).unwrap();
        s[1].samples.pop();
        assert!(CoverageField::new(s).is_err());
        assert!(CoverageField::new(Vec::new()).is_err());
    }
}
