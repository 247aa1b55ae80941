use crate::linalg::{Vec2, Vec3};
use crate::scalar::Real;

/// A planar face as a loop of vertex indices with one UV per corner.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon<T> {
    pub verts: Vec<u32>,
    pub uv: Vec<Vec2<T>>,
}

impl<T: Real> Polygon<T> {
    pub fn new(verts: Vec<u32>, uv: Vec<Vec2<T>>) -> Self {
        debug_assert_eq!(verts.len(), uv.len());
        Self { verts, uv }
    }

    pub fn without_uv(verts: Vec<u32>) -> Self {
        let uv = vec![Vec2::zero(); verts.len()];
        Self { verts, uv }
    }

    /// Area-weighted normal (Newell), not normalized.
    pub fn newell_normal(&self, positions: &[Vec3<T>]) -> Vec3<T> {
        newell(positions, &self.verts)
    }
}

fn newell<T: Real>(positions: &[Vec3<T>], verts: &[u32]) -> Vec3<T> {
    let n = verts.len();
    let mut acc = Vec3::zero();
    for i in 0..n {
        let a = positions[verts[i] as usize];
        let b = positions[verts[(i + 1) % n] as usize];
        acc += a.cross(b);
    }
    acc.scale(T::half())
}

/// Ear-clips a simple planar loop into triangles (indices into `verts`).
///
/// Ears are tried starting at the vertex after the lowest vertex index, so
/// a quad is always split along the diagonal through its lowest index and
/// convex loops become a fan around it. Zero-area ears are never emitted.
/// Returns `None` when the loop is degenerate or not simple.
pub fn triangulate_loop<T: Real>(positions: &[Vec3<T>], verts: &[u32]) -> Option<Vec<[usize; 3]>> {
    let n = verts.len();
    if n < 3 {
        return None;
    }
    let normal = newell(positions, verts).try_normalize()?;
    let helper = if normal.x.abs() < T::lit(0.9) {
        Vec3::unit_x()
    } else {
        Vec3::unit_y()
    };
    let u = normal.cross(helper).normalize();
    let v = normal.cross(u);
    let pts: Vec<Vec2<T>> = verts
        .iter()
        .map(|&i| {
            let p = positions[i as usize];
            Vec2::new(p.dot(u), p.dot(v))
        })
        .collect();
    let mut span = T::zero();
    for p in &pts {
        span = span.max((*p - pts[0]).norm());
    }
    let eps = T::lit(1e-12) * span * span;

    let start = (0..n).min_by_key(|&i| verts[i]).unwrap_or(0);
    let mut active: Vec<usize> = (0..n).map(|k| (start + k) % n).collect();
    let mut out = Vec::with_capacity(n - 2);

    while active.len() > 3 {
        let m = active.len();
        let mut clipped = false;
        for step in 1..=m {
            let pos = step % m;
            let (ip, ic, inx) = (active[(pos + m - 1) % m], active[pos], active[(pos + 1) % m]);
            if is_ear(&pts, &active, ip, ic, inx, eps) {
                out.push([ip, ic, inx]);
                active.remove(pos);
                clipped = true;
                break;
            }
        }
        if !clipped {
            return None;
        }
    }
    let (a, b, c) = (active[0], active[1], active[2]);
    if (pts[b] - pts[a]).perp_dot(pts[c] - pts[a]) <= eps {
        return None;
    }
    out.push([a, b, c]);
    Some(out)
}

fn is_ear<T: Real>(pts: &[Vec2<T>], active: &[usize], a: usize, b: usize, c: usize, eps: T) -> bool {
    let (pa, pb, pc) = (pts[a], pts[b], pts[c]);
    if (pb - pa).perp_dot(pc - pa) <= eps {
        return false;
    }
    active.iter().all(|&k| {
        if k == a || k == b || k == c {
            return true;
        }
        let p = pts[k];
        let inside = (pb - pa).perp_dot(p - pa) >= -eps
            && (pc - pb).perp_dot(p - pb) >= -eps
            && (pa - pc).perp_dot(p - pc) >= -eps;
        !inside
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<Vec3<f64>> {
        vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ]
    }

    #[test]
    fn quad_split_through_lowest_index() {
        let pos = square();
        // Loop starts at index 2; diagonal must still contain vertex 0.
        let tris = triangulate_loop(&pos, &[2, 3, 0, 1]).unwrap();
        assert_eq!(tris.len(), 2);
        let loop_ = [2u32, 3, 0, 1];
        for t in &tris {
            assert!(t.iter().any(|&k| loop_[k] == 0));
        }
    }

    #[test]
    fn collinear_vertices_produce_no_slivers() {
        // Hexagon with two extra vertices on the top edge.
        let pos = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(3.0, 0.0, 0.0),
            Vec3::new(3.0, 1.0, 0.0),
            Vec3::new(2.0, 1.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ];
        let verts = [0u32, 1, 2, 3, 4, 5];
        let tris = triangulate_loop(&pos, &verts).unwrap();
        assert_eq!(tris.len(), 4);
        let mut area = 0.0f64;
        for t in tris {
            let (a, b, c) = (pos[t[0]], pos[t[1]], pos[t[2]]);
            let ar = (b - a).cross(c - a).z * 0.5;
            assert!(ar > 1e-6, "sliver {ar}");
            area += ar;
        }
        assert!((area - 3.0).abs() < 1e-12);
    }

    #[test]
    fn concave_loop() {
        let pos = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
            Vec3::new(2.0, 2.0, 0.0),
            Vec3::new(1.0, 0.5, 0.0),
            Vec3::new(0.0, 2.0, 0.0),
        ];
        let tris = triangulate_loop(&pos, &[0, 1, 2, 3, 4]).unwrap();
        let area: f64 = tris
            .iter()
            .map(|t| (pos[t[1]] - pos[t[0]]).cross(pos[t[2]] - pos[t[0]]).z * 0.5)
            .sum();
        assert!((area - 2.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_loop_rejected() {
        let pos = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
        ];
        assert!(triangulate_loop(&pos, &[0, 1, 2]).is_none());
    }
}
