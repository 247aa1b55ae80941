//! Single-view structured-light scan simulation.
//!
//! One ray per pixel is cast from a pinhole camera into the box mesh and
//! the nearest hit is stored as a camera-space point on the pixel grid.
//! Camera axes are X right, Y down, Z forward; pixel `(u, v)` is sampled at
//! its center `(u + 0.5, v + 0.5)`.

mod bvh;
mod intersect;

pub use bvh::Bvh;
pub use intersect::{Ray, RayHit};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{Vec2, Vec3};
use crate::mesh::TriMesh;
use crate::sampling::{RigidPose, ScannerConfig};
use crate::scalar::Real;
use intersect::ShearedRay;

/// Projector-shadow segments stop this far short of the point so the
/// surface the point lies on does not occlude it.
pub const SHADOW_EPSILON: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum ScanError {
    #[error("cannot scan an empty mesh")]
    EmptyMesh,
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("noise standard deviation must be finite and non-negative, got {0}")]
    InvalidNoise(f64),
}

/// Pinhole camera with square pixels and the principal point at the image
/// center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    pub width: u32,
    pub height: u32,
    /// Radians across the image width.
    pub horizontal_fov: f64,
}

impl Intrinsics {
    pub fn new(width: u32, height: u32, horizontal_fov: f64) -> Result<Self, ScanError> {
        let intr = Self {
            width,
            height,
            horizontal_fov,
        };
        intr.validate()?;
        Ok(intr)
    }

    pub fn from_config(cfg: &ScannerConfig) -> Result<Self, ScanError> {
        Self::new(cfg.width, cfg.height, cfg.horizontal_fov)
    }

    pub fn validate(&self) -> Result<(), ScanError> {
        if self.width == 0 || self.height == 0 {
            return Err(ScanError::InvalidIntrinsics(format!(
                "image must be at least 1x1, got {}x{}",
                self.width, self.height
            )));
        }
        if !(self.horizontal_fov > 0.0 && self.horizontal_fov < std::f64::consts::PI) {
            return Err(ScanError::InvalidIntrinsics(format!(
                "horizontal_fov must lie in (0, pi), got {}",
                self.horizontal_fov
            )));
        }
        Ok(())
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Focal length in pixels, shared by both axes.
    pub fn focal<T: Real>(&self) -> T {
        T::lit(self.width as f64 / 2.0) / (T::lit(self.horizontal_fov) / T::two()).tan()
    }

    pub fn principal_point<T: Real>(&self) -> Vec2<T> {
        Vec2::new(T::lit(self.width as f64 / 2.0), T::lit(self.height as f64 / 2.0))
    }

    /// Unit camera-space direction through image position `(x, y)` in
    /// pixel units, where pixel `(u, v)` covers `[u, u+1) x [v, v+1)`.
    pub fn direction_at<T: Real>(&self, x: T, y: T) -> Vec3<T> {
        let f = self.focal::<T>();
        let c = self.principal_point::<T>();
        Vec3::new((x - c.x) / f, (y - c.y) / f, T::one()).normalize()
    }

    /// Camera-space direction through the center of pixel `(u, v)`.
    pub fn pixel_direction<T: Real>(&self, u: u32, v: u32) -> Vec3<T> {
        let half = T::half();
        self.direction_at(T::lit(u as f64) + half, T::lit(v as f64) + half)
    }

    /// Image position of a camera-space point with `z > 0`.
    pub fn project<T: Real>(&self, p: Vec3<T>) -> Vec2<T> {
        let f = self.focal::<T>();
        let c = self.principal_point::<T>();
        Vec2::new(f * p.x / p.z + c.x, f * p.y / p.z + c.y)
    }
}

/// World-space rays for every pixel in row-major order, all starting at the
/// camera center.
pub fn generate_rays<T: Real>(intr: &Intrinsics, camera_to_world: &RigidPose<T>) -> Vec<Ray<T>> {
    let mut rays = Vec::with_capacity(intr.pixel_count());
    for v in 0..intr.height {
        for u in 0..intr.width {
            rays.push(Ray {
                origin: camera_to_world.translation,
                direction: camera_to_world.transform_vector(intr.pixel_direction(u, v)),
            });
        }
    }
    rays
}

/// Organized point cloud: one camera-space point per pixel, row-major.
/// Pixels without a measurement hold three NaNs.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredCloud<T> {
    pub width: u32,
    pub height: u32,
    pub points: Vec<Vec3<T>>,
}

impl<T: Real> StructuredCloud<T> {
    pub fn invalid(width: u32, height: u32) -> Self {
        let nan = T::nan();
        Self {
            width,
            height,
            points: vec![Vec3::new(nan, nan, nan); width as usize * height as usize],
        }
    }

    pub fn index(&self, u: u32, v: u32) -> usize {
        v as usize * self.width as usize + u as usize
    }

    pub fn get(&self, u: u32, v: u32) -> Vec3<T> {
        self.points[self.index(u, v)]
    }

    pub fn is_valid(&self, i: usize) -> bool {
        !self.points[i].x.is_nan()
    }

    pub fn validity(&self) -> Vec<bool> {
        (0..self.points.len()).map(|i| self.is_valid(i)).collect()
    }

    pub fn valid_count(&self) -> usize {
        (0..self.points.len()).filter(|&i| self.is_valid(i)).count()
    }

    pub fn invalidate(&mut self, i: usize) {
        let nan = T::nan();
        self.points[i] = Vec3::new(nan, nan, nan);
    }

    /// Z channel; NaN where invalid.
    pub fn depth(&self) -> Vec<T> {
        self.points.iter().map(|p| p.z).collect()
    }

    pub fn cast<U: Real>(&self) -> StructuredCloud<U> {
        StructuredCloud {
            width: self.width,
            height: self.height,
            points: self.points.iter().map(|p| p.cast()).collect(),
        }
    }
}

/// Per-pixel nearest hits, row-major, using the hierarchy.
pub fn cast_rays<T: Real>(bvh: &Bvh<T>, intr: &Intrinsics, camera_to_world: &RigidPose<T>) -> Vec<Option<RayHit<T>>> {
    let w = intr.width as usize;
    let mut hits = vec![None; intr.pixel_count()];
    hits.par_chunks_mut(w).enumerate().for_each(|(v, row)| {
        for (u, slot) in row.iter_mut().enumerate() {
            let ray = pixel_ray(intr, camera_to_world, u, v);
            *slot = bvh.intersect(&ray);
        }
    });
    hits
}

/// Per-pixel nearest hits by testing every triangle; the reference the
/// hierarchy must reproduce exactly.
pub fn cast_rays_brute_force<T: Real>(
    mesh: &TriMesh<T>,
    intr: &Intrinsics,
    camera_to_world: &RigidPose<T>,
) -> Vec<Option<RayHit<T>>> {
    let triangles: Vec<[Vec3<T>; 3]> = (0..mesh.triangle_count()).map(|t| mesh.corners(t)).collect();
    let w = intr.width as usize;
    let mut hits = vec![None; intr.pixel_count()];
    hits.par_chunks_mut(w).enumerate().for_each(|(v, row)| {
        for (u, slot) in row.iter_mut().enumerate() {
            let ray = ShearedRay::new(&pixel_ray(intr, camera_to_world, u, v));
            let mut best: Option<RayHit<T>> = None;
            for (i, tri) in triangles.iter().enumerate() {
                if let Some((t, barycentrics)) = ray.intersect(tri, T::infinity()) {
                    let hit = RayHit {
                        t,
                        triangle_index: i as u32,
                        barycentrics,
                    };
                    if best.as_ref().is_none_or(|b| hit.is_before(b)) {
                        best = Some(hit);
                    }
                }
            }
            *slot = best;
        }
    });
    hits
}

fn pixel_ray<T: Real>(intr: &Intrinsics, camera_to_world: &RigidPose<T>, u: usize, v: usize) -> Ray<T> {
    Ray {
        origin: camera_to_world.translation,
        direction: camera_to_world.transform_vector(intr.pixel_direction(u as u32, v as u32)),
    }
}

/// Camera-space cloud from per-pixel hits: each point is its hit distance
/// times the pixel's camera-space direction.
pub fn cloud_from_hits<T: Real>(intr: &Intrinsics, hits: &[Option<RayHit<T>>]) -> StructuredCloud<T> {
    let mut cloud = StructuredCloud::invalid(intr.width, intr.height);
    for v in 0..intr.height {
        for u in 0..intr.width {
            let i = cloud.index(u, v);
            if let Some(hit) = &hits[i] {
                cloud.points[i] = intr.pixel_direction::<T>(u, v).scale(hit.t);
            }
        }
    }
    cloud
}

/// Scans `mesh` from `camera_to_world`.
pub fn scan<T: Real>(
    mesh: &TriMesh<T>,
    intr: &Intrinsics,
    camera_to_world: &RigidPose<T>,
) -> Result<StructuredCloud<T>, ScanError> {
    intr.validate()?;
    let bvh = Bvh::build(mesh)?;
    Ok(scan_with(&bvh, intr, camera_to_world))
}

pub fn scan_with<T: Real>(bvh: &Bvh<T>, intr: &Intrinsics, camera_to_world: &RigidPose<T>) -> StructuredCloud<T> {
    cloud_from_hits(intr, &cast_rays(bvh, intr, camera_to_world))
}

/// Drops points the projector cannot see: a valid point is invalidated iff
/// the segment from `projector_origin` (world space) to the point, stopped
/// [`SHADOW_EPSILON`] short of it, hits the mesh.
pub fn projector_shadow_filter<T: Real>(
    cloud: &StructuredCloud<T>,
    bvh: &Bvh<T>,
    camera_to_world: &RigidPose<T>,
    projector_origin: Vec3<T>,
) -> StructuredCloud<T> {
    let mut out = cloud.clone();
    let eps = T::lit(SHADOW_EPSILON);
    out.points.par_iter_mut().for_each(|p| {
        if p.x.is_nan() {
            return;
        }
        let target = camera_to_world.transform_point(*p);
        let seg = target - projector_origin;
        let len = seg.norm();
        if len <= eps {
            return;
        }
        let ray = Ray {
            origin: projector_origin,
            direction: seg.scale(T::one() / len),
        };
        if bvh.occluded(&ray, len - eps) {
            let nan = T::nan();
            *p = Vec3::new(nan, nan, nan);
        }
    });
    out
}

/// Moves every valid point along its viewing ray by an independent
/// `N(0, std²)` distance, drawn in row-major pixel order. No draws are
/// made when `std` is zero.
pub fn add_range_noise<T: Real, R: Rng + ?Sized>(
    cloud: &mut StructuredCloud<T>,
    rng: &mut R,
    std: f64,
) -> Result<(), ScanError> {
    if !(std.is_finite() && std >= 0.0) {
        return Err(ScanError::InvalidNoise(std));
    }
    if std == 0.0 {
        return Ok(());
    }
    let normal = Normal::new(0.0, std).map_err(|_| ScanError::InvalidNoise(std))?;
    for p in cloud.points.iter_mut().filter(|p| !p.x.is_nan()) {
        let delta = T::lit(normal.sample(rng));
        *p = *p + p.normalize().scale(delta);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat3;
    use crate::mesh::test_meshes::unit_cube;
    use crate::sampling::{derive_stream, look_at};

    fn big_quad(z: f64) -> TriMesh<f64> {
        let p = |x: f64, y: f64| Vec3::new(x, y, z);
        TriMesh::new(
            vec![p(-10.0, -10.0), p(10.0, -10.0), p(10.0, 10.0), p(-10.0, 10.0)],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn intrinsics_validated() {
        assert!(Intrinsics::new(0, 4, 1.0).is_err());
        assert!(Intrinsics::new(4, 4, 0.0).is_err());
        assert!(Intrinsics::new(4, 4, std::f64::consts::PI).is_err());
        assert!(Intrinsics::new(1, 1, 3.0).is_ok());
    }

    #[test]
    fn center_ray_is_optical_axis() {
        let intr = Intrinsics::new(5, 3, 1.0).unwrap();
        let rays = generate_rays(&intr, &RigidPose::<f64>::identity());
        assert_eq!(rays[intr.width as usize + 2].direction, Vec3::new(0.0, 0.0, 1.0));
        assert!(rays.iter().all(|r| (r.direction.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn corner_ray_angle_matches_trigonometry() {
        let (w, h, fov) = (640u32, 480u32, 1.2f64);
        let intr = Intrinsics::new(w, h, fov).unwrap();
        // Image corner (0, 0) rather than a pixel center.
        let d = intr.direction_at(0.0f64, 0.0);
        let aspect = w as f64 / h as f64;
        let expected = ((fov / 2.0).tan() * (1.0 + 1.0 / (aspect * aspect)).sqrt()).atan();
        assert!((d.z.acos() - expected).abs() < 1e-12);
        // Left edge of the middle row spans exactly half the horizontal FOV.
        let e = intr.direction_at(0.0f64, h as f64 / 2.0);
        assert!((e.z.acos() - fov / 2.0).abs() < 1e-12);
    }

    #[test]
    fn camera_facing_quad_sees_unit_depth() {
        let intr = Intrinsics::new(3, 3, 1.0).unwrap();
        let pose = RigidPose::new(Mat3::identity(), Vec3::new(0.0, 0.0, -1.0));
        let cloud = scan(&big_quad(0.0), &intr, &pose).unwrap();
        assert_eq!(cloud.get(1, 1), Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(cloud.valid_count(), 9);
    }

    #[test]
    fn misses_are_nan() {
        let intr = Intrinsics::new(8, 8, 1.0).unwrap();
        let pose = look_at(Vec3::new(0.0, 0.0, -3.0), Vec3::new(0.0, 0.0, -10.0), Vec3::unit_y()).unwrap();
        let cloud = scan(&unit_cube(), &intr, &pose).unwrap();
        assert_eq!(cloud.valid_count(), 0);
        assert!(cloud.points.iter().all(|p| p.x.is_nan() && p.y.is_nan() && p.z.is_nan()));
    }

    #[test]
    fn points_reproject_into_their_pixel() {
        let intr = Intrinsics::new(32, 24, 0.9).unwrap();
        let pose = look_at(Vec3::new(1.8, 1.1, 1.4), Vec3::new(0.5, 0.5, 0.5), Vec3::unit_z()).unwrap();
        let cloud = scan(&unit_cube(), &intr, &pose).unwrap();
        assert!(cloud.valid_count() > 100);
        for v in 0..intr.height {
            for u in 0..intr.width {
                let p = cloud.get(u, v);
                if p.x.is_nan() {
                    continue;
                }
                assert!(p.z > 0.0);
                let q = intr.project(p);
                assert!((q.x - (u as f64 + 0.5)).abs() < 1e-9 && (q.y - (v as f64 + 0.5)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn colocated_projector_changes_nothing() {
        let intr = Intrinsics::new(24, 24, 0.9).unwrap();
        let pose = look_at(Vec3::new(1.8, -1.1, 1.4), Vec3::new(0.5, 0.5, 0.5), Vec3::unit_z()).unwrap();
        let bvh = Bvh::build(&unit_cube()).unwrap();
        let cloud = scan_with(&bvh, &intr, &pose);
        let filtered = projector_shadow_filter(&cloud, &bvh, &pose, pose.translation);
        assert_eq!(filtered.validity(), cloud.validity());
    }

    #[test]
    fn noise_is_seeded_and_along_rays() {
        let intr = Intrinsics::new(3, 3, 1.0).unwrap();
        let pose = RigidPose::new(Mat3::identity(), Vec3::new(0.0, 0.0, -1.0));
        let clean = scan(&big_quad(0.0), &intr, &pose).unwrap();
        let noisy = |seed| {
            let mut c = clean.clone();
            add_range_noise(&mut c, &mut derive_stream(seed, 0), 0.001).unwrap();
            c
        };
        assert_eq!(noisy(1), noisy(1));
        assert_ne!(noisy(1), noisy(2));
        let n = noisy(1);
        for (a, b) in clean.points.iter().zip(&n.points) {
            assert!(a.normalize().cross(b.normalize()).norm() < 1e-12);
        }
        let mut same = clean.clone();
        add_range_noise(&mut same, &mut derive_stream(1, 0), 0.0).unwrap();
        assert_eq!(same, clean);
        assert!(add_range_noise(&mut same, &mut derive_stream(1, 0), -1.0).is_err());
    }
}
