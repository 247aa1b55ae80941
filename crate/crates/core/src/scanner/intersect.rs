use crate::linalg::Vec3;
use crate::scalar::Real;

/// Ray with a unit direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray<T> {
    pub origin: Vec3<T>,
    pub direction: Vec3<T>,
}

/// Nearest intersection along a ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit<T> {
    /// Distance along the ray, meters.
    pub t: T,
    pub triangle_index: u32,
    /// Weights of the triangle's second and third corner.
    pub barycentrics: [T; 2],
}

impl<T: Real> RayHit<T> {
    /// Whether `self` is preferred over `other`: smaller `t`, then lower
    /// triangle index.
    pub fn is_before(&self, other: &Self) -> bool {
        self.t < other.t || (self.t == other.t && self.triangle_index < other.triangle_index)
    }
}

/// Ray set up for the watertight triangle test: the axis permutation and
/// shear that map the direction onto +Z.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ShearedRay<T> {
    pub origin: Vec3<T>,
    pub inv_dir: Vec3<T>,
    k: [usize; 3],
    shear: [T; 3],
}

impl<T: Real> ShearedRay<T> {
    pub fn new(ray: &Ray<T>) -> Self {
        let d = ray.direction;
        let kz = d.abs().max_abs_axis();
        let mut kx = (kz + 1) % 3;
        let mut ky = (kx + 1) % 3;
        if d[kz] < T::zero() {
            std::mem::swap(&mut kx, &mut ky);
        }
        let one = T::one();
        Self {
            origin: ray.origin,
            inv_dir: Vec3::new(one / d.x, one / d.y, one / d.z),
            k: [kx, ky, kz],
            shear: [d[kx] / d[kz], d[ky] / d[kz], one / d[kz]],
        }
    }

    /// Watertight ray/triangle intersection (Woop, Benthin and Wald 2013).
    ///
    /// Points on an edge or vertex count as inside, so a ray through an
    /// edge shared by two triangles hits both with the same `t` and never
    /// slips between them. Both sides of the triangle are hit. Returns
    /// `(t, [b1, b2])` for hits with `0 < t < t_max`.
    pub fn intersect(&self, tri: &[Vec3<T>; 3], t_max: T) -> Option<(T, [T; 2])> {
        let [kx, ky, kz] = self.k;
        let [sx, sy, sz] = self.shear;
        let rel = tri.map(|p| p - self.origin);
        let [ax, bx, cx] = rel.map(|p| p[kx] - sx * p[kz]);
        let [ay, by, cy] = rel.map(|p| p[ky] - sy * p[kz]);
        let u = cx * by - cy * bx;
        let v = ax * cy - ay * cx;
        let w = bx * ay - by * ax;
        let zero = T::zero();
        if (u < zero || v < zero || w < zero) && (u > zero || v > zero || w > zero) {
            return None;
        }
        let det = u + v + w;
        if det == zero {
            return None;
        }
        let [az, bz, cz] = rel.map(|p| sz * p[kz]);
        let t_scaled = u * az + v * bz + w * cz;
        let t = t_scaled / det;
        if !(t > zero && t < t_max) {
            return None;
        }
        Some((t, [v / det, w / det]))
    }
}
