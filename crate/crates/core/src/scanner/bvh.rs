use crate::linalg::Vec3;
use crate::mesh::{Aabb, TriMesh};
use crate::scalar::Real;

use super::intersect::{Ray, RayHit, ShearedRay};
use super::ScanError;

const LEAF_SIZE: usize = 4;

/// Node boxes and slab intervals are padded by this many machine epsilons
/// (relative to the scene scale and the ray distance respectively).
const SLACK: f64 = 64.0;

#[derive(Debug, Clone)]
struct Node<T> {
    bounds: Aabb<T>,
    /// First primitive for a leaf, right child for an interior node (the
    /// left child directly follows its parent).
    index: u32,
    /// Primitive count; zero marks an interior node.
    count: u32,
}

/// Bounding-volume hierarchy over the triangles of a mesh.
///
/// Built by median splits along the longest centroid axis into leaves of at
/// most four triangles, stored depth-first in one array. Queries return the
/// same hit as testing every triangle: the nearest `t`, ties going to the
/// lower triangle index.
#[derive(Debug, Clone)]
pub struct Bvh<T> {
    nodes: Vec<Node<T>>,
    /// Triangle indices in leaf order.
    order: Vec<u32>,
    triangles: Vec<[Vec3<T>; 3]>,
}

impl<T: Real> Bvh<T> {
    pub fn build(mesh: &TriMesh<T>) -> Result<Self, ScanError> {
        if mesh.triangle_count() == 0 {
            return Err(ScanError::EmptyMesh);
        }
        let triangles: Vec<[Vec3<T>; 3]> = (0..mesh.triangle_count()).map(|t| mesh.corners(t)).collect();
        let centroids: Vec<Vec3<T>> = triangles
            .iter()
            .map(|[a, b, c]| (*a + *b + *c).scale(T::one() / T::lit(3.0)))
            .collect();
        let mut order: Vec<u32> = (0..triangles.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * triangles.len() / LEAF_SIZE + 1);
        build_node(&triangles, &centroids, &mut order, 0, &mut nodes);
        let root = nodes[0].bounds;
        let scale = root.min.abs().max(root.max.abs());
        let scale = scale.x.max(scale.y).max(scale.z).max(T::one());
        let pad = scale * T::lit(SLACK) * T::epsilon();
        let pad = Vec3::new(pad, pad, pad);
        for node in &mut nodes {
            node.bounds.min = node.bounds.min - pad;
            node.bounds.max = node.bounds.max + pad;
        }
        Ok(Self {
            nodes,
            order,
            triangles,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.count > 0).count()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn bounds(&self) -> Aabb<T> {
        self.nodes[0].bounds
    }

    /// Nearest hit with `t` in `(0, ∞)`.
    pub fn intersect(&self, ray: &Ray<T>) -> Option<RayHit<T>> {
        self.traverse(ray, T::infinity(), false)
    }

    /// Whether anything is hit with `t` in `(0, t_max)`.
    pub fn occluded(&self, ray: &Ray<T>, t_max: T) -> bool {
        self.traverse(ray, t_max, true).is_some()
    }

    fn traverse(&self, ray: &Ray<T>, t_max: T, any: bool) -> Option<RayHit<T>> {
        let sheared = ShearedRay::new(ray);
        let mut best: Option<RayHit<T>> = None;
        let mut stack: Vec<(u32, T)> = Vec::with_capacity(64);
        if let Some(t) = slab(&self.nodes[0].bounds, &sheared, t_max) {
            stack.push((0, t));
        }
        while let Some((ni, t_near)) = stack.pop() {
            // Equal distance is still visited: it may hold a lower index.
            if best.as_ref().is_some_and(|b| t_near > b.t) {
                continue;
            }
            let node = &self.nodes[ni as usize];
            if node.count > 0 {
                let first = node.index as usize;
                for &tri in &self.order[first..first + node.count as usize] {
                    let Some((t, bary)) = sheared.intersect(&self.triangles[tri as usize], t_max) else {
                        continue;
                    };
                    let hit = RayHit {
                        t,
                        triangle_index: tri,
                        barycentrics: bary,
                    };
                    if any {
                        return Some(hit);
                    }
                    if best.as_ref().is_none_or(|b| hit.is_before(b)) {
                        best = Some(hit);
                    }
                }
                continue;
            }
            let (left, right) = (ni + 1, node.index);
            let limit = best.as_ref().map_or(t_max, |b| b.t);
            let tl = slab(&self.nodes[left as usize].bounds, &sheared, limit);
            let tr = slab(&self.nodes[right as usize].bounds, &sheared, limit);
            // Push the farther child first so the nearer one is popped next.
            match (tl, tr) {
                (Some(a), Some(b)) if a <= b => {
                    stack.push((right, b));
                    stack.push((left, a));
                }
                (Some(a), Some(b)) => {
                    stack.push((left, a));
                    stack.push((right, b));
                }
                (Some(a), None) => stack.push((left, a)),
                (None, Some(b)) => stack.push((right, b)),
                (None, None) => {}
            }
        }
        best
    }
}

/// Entry distance of a ray into a box, or `None` if the box is missed or
/// starts beyond `t_max`. The interval is widened by [`SLACK`] ulps on both
/// ends so rounding never culls a hit the triangle test accepts.
fn slab<T: Real>(b: &Aabb<T>, ray: &ShearedRay<T>, t_max: T) -> Option<T> {
    let mut t0 = T::zero();
    let mut t1 = t_max;
    let widen = T::one() + T::lit(SLACK) * T::epsilon();
    for k in 0..3 {
        let inv = ray.inv_dir[k];
        let (a, c) = ((b.min[k] - ray.origin[k]) * inv, (b.max[k] - ray.origin[k]) * inv);
        let (near, far) = if a <= c { (a, c) } else { (c, a) };
        // NaN (origin on a slab plane of a parallel ray) leaves the bounds unchanged.
        t0 = t0.max(near);
        t1 = t1.min(far * widen);
    }
    (t0 <= t1).then_some(t0 * (T::one() - T::lit(SLACK) * T::epsilon()))
}

fn build_node<T: Real>(
    triangles: &[[Vec3<T>; 3]],
    centroids: &[Vec3<T>],
    order: &mut [u32],
    offset: usize,
    nodes: &mut Vec<Node<T>>,
) -> usize {
    let bounds = Aabb::from_points(order.iter().flat_map(|&t| triangles[t as usize].iter()));
    let me = nodes.len();
    nodes.push(Node {
        bounds,
        index: offset as u32,
        count: order.len() as u32,
    });
    if order.len() <= LEAF_SIZE {
        return me;
    }
    let cbounds = Aabb::from_points(order.iter().map(|&t| &centroids[t as usize]));
    let axis = cbounds.extents().max_abs_axis();
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        let (ca, cb) = (centroids[a as usize][axis], centroids[b as usize][axis]);
        ca.partial_cmp(&cb).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    let (lo, hi) = order.split_at_mut(mid);
    build_node(triangles, centroids, lo, offset, nodes);
    let right = build_node(triangles, centroids, hi, offset + mid, nodes);
    nodes[me].index = right as u32;
    nodes[me].count = 0;
    me
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::test_meshes::{unit_cube, unit_quad};

    fn ray(o: [f64; 3], d: [f64; 3]) -> Ray<f64> {
        Ray {
            origin: Vec3::from_f64(o),
            direction: Vec3::from_f64(d).normalize(),
        }
    }

    #[test]
    fn empty_mesh_rejected() {
        assert!(matches!(Bvh::<f64>::build(&TriMesh::empty()), Err(ScanError::EmptyMesh)));
    }

    #[test]
    fn single_triangle_is_one_leaf() {
        let mesh = TriMesh::new(
            vec![Vec3::new(0.0, 0.0, 2.0), Vec3::new(1.0, 0.0, 2.0), Vec3::new(0.0, 1.0, 2.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let bvh = Bvh::build(&mesh).unwrap();
        assert_eq!((bvh.node_count(), bvh.leaf_count()), (1, 1));
        let hit = bvh.intersect(&ray([0.2, 0.2, 0.0], [0.0, 0.0, 1.0])).unwrap();
        assert_eq!(hit.t, 2.0);
        assert_eq!(hit.triangle_index, 0);
    }

    #[test]
    fn leaves_hold_at_most_four() {
        let mut mesh = unit_cube();
        for _ in 0..3 {
            mesh = subdivide(&mesh);
        }
        let bvh = Bvh::build(&mesh).unwrap();
        assert!(bvh.nodes.iter().all(|n| n.count as usize <= LEAF_SIZE));
        let mut seen = bvh.order.clone();
        seen.sort_unstable();
        assert_eq!(seen, (0..mesh.triangle_count() as u32).collect::<Vec<_>>());
    }

    #[test]
    fn cube_hits_match_brute_force() {
        let mut mesh = unit_cube();
        for _ in 0..2 {
            mesh = subdivide(&mesh);
        }
        let bvh = Bvh::build(&mesh).unwrap();
        for i in 0..400 {
            let a = i as f64 * 0.37;
            let o = [2.0 * a.cos(), 2.0 * a.sin(), 0.3 * (a * 1.7).sin()];
            let target = [0.05 * (a * 3.1).sin(), 0.05 * (a * 2.3).cos(), 0.02 * a.sin()];
            let r = ray(o, [target[0] - o[0], target[1] - o[1], target[2] - o[2]]);
            let sheared = ShearedRay::new(&r);
            let mut brute: Option<RayHit<f64>> = None;
            for t in 0..mesh.triangle_count() {
                if let Some((d, bary)) = sheared.intersect(&mesh.corners(t), f64::INFINITY) {
                    let hit = RayHit { t: d, triangle_index: t as u32, barycentrics: bary };
                    if brute.as_ref().is_none_or(|b| hit.is_before(b)) {
                        brute = Some(hit);
                    }
                }
            }
            assert_eq!(bvh.intersect(&r), brute);
        }
    }

    #[test]
    fn ray_through_shared_edge_hits_lower_index() {
        let quad = unit_quad();
        let bvh = Bvh::build(&quad).unwrap();
        // Shared diagonal of the quad runs from corner 0 to corner 2.
        let [a, _, c] = quad.corners(0);
        let target = a.lerp(c, 0.3);
        let o = target + Vec3::new(0.2, -0.1, 1.0);
        let r = Ray { origin: o, direction: (target - o).normalize() };
        let hit = bvh.intersect(&r).unwrap();
        let sheared = ShearedRay::new(&r);
        let count = (0..2).filter(|&t| sheared.intersect(&quad.corners(t), f64::INFINITY).is_some()).count();
        assert!(count >= 1);
        if count == 2 {
            assert_eq!(hit.triangle_index, 0);
        }
    }

    #[test]
    fn miss_and_occlusion() {
        let bvh = Bvh::build(&unit_cube()).unwrap();
        assert!(bvh.intersect(&ray([5.0, 5.0, 5.0], [1.0, 0.0, 0.0])).is_none());
        let r = ray([0.5, 0.5, -1.0], [0.0, 0.0, 1.0]);
        assert!(bvh.occluded(&r, 1.5));
        assert!(!bvh.occluded(&r, 1.0));
    }

    /// Splits every triangle into four at its edge midpoints.
    fn subdivide(mesh: &TriMesh<f64>) -> TriMesh<f64> {
        let mut positions = mesh.positions.clone();
        let mut mids = std::collections::HashMap::new();
        let mut mid = |a: u32, b: u32, positions: &mut Vec<Vec3<f64>>| {
            *mids.entry((a.min(b), a.max(b))).or_insert_with(|| {
                positions.push(positions[a as usize].lerp(positions[b as usize], 0.5));
                positions.len() as u32 - 1
            })
        };
        let mut tris = Vec::new();
        for &[a, b, c] in &mesh.triangles {
            let (ab, bc, ca) = (mid(a, b, &mut positions), mid(b, c, &mut positions), mid(c, a, &mut positions));
            tris.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        TriMesh::new(positions, tris).unwrap()
    }
}
