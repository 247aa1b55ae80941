//! Rounding of selected mesh creases with polygonal circular fillets.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::BoxModelError;
use crate::linalg::{Mat3, Vec2, Vec3};
use crate::mesh::{Polygon, TriMesh};
use crate::scalar::Real;

/// Dihedral cosine above which two faces count as coplanar.
const FLAT_COS: f64 = 1.0 - 1e-9;

/// Bevels every interior crease of `mesh`, that is every edge between two
/// distinct non-coplanar faces. See [`bevel_selected`].
pub fn bevel_edges<T: Real>(mesh: &TriMesh<T>, radius: T, segments: u32) -> Result<TriMesh<T>, BoxModelError> {
    if radius <= T::zero() {
        return Ok(mesh.clone());
    }
    let polys = mesh.polygons()?;
    let normals: Vec<_> = polys.iter().map(|p| face_normal(&mesh.positions, p)).collect();
    let mut directed: HashMap<(u32, u32), usize> = HashMap::new();
    for (f, poly) in polys.iter().enumerate() {
        for (a, b) in loop_edges(&poly.verts) {
            directed.insert((a, b), f);
        }
    }
    let mut edges = BTreeSet::new();
    for (&(a, b), &f1) in &directed {
        if let Some(&f2) = directed.get(&(b, a)) {
            if f1 != f2 && normals[f1].dot(normals[f2]) < T::lit(FLAT_COS) {
                edges.insert([a.min(b), a.max(b)]);
            }
        }
    }
    let edges: Vec<_> = edges.into_iter().collect();
    bevel_selected(mesh, &edges, radius, segments)
}

/// Replaces each listed edge by `segments` flat strips whose vertices lie
/// on a circular arc of `radius` tangent to both adjacent faces.
///
/// Supported vertex configurations are corners where exactly three beveled
/// edges and three faces meet (they receive a spherical patch) and
/// boundary vertices with a single beveled edge between the only two faces
/// there. Adjacent faces are trimmed back to the tangent lines; UVs follow
/// each face's own planar map, and a strip over a seamless fold blends
/// between its two faces. A radius that would reverse or collapse a
/// trimmed edge is rejected.
pub fn bevel_selected<T: Real>(
    mesh: &TriMesh<T>,
    edges: &[[u32; 2]],
    radius: T,
    segments: u32,
) -> Result<TriMesh<T>, BoxModelError> {
    if radius <= T::zero() || edges.is_empty() {
        return Ok(mesh.clone());
    }
    let segments = segments.max(1);
    let polys = mesh.polygons()?;
    let faces: Vec<Face<T>> = polys
        .into_iter()
        .enumerate()
        .map(|(f, poly)| Face::new(mesh, f as u32, poly))
        .collect();
    let mut directed: HashMap<(u32, u32), usize> = HashMap::new();
    for (f, face) in faces.iter().enumerate() {
        for (a, b) in loop_edges(&face.poly.verts) {
            directed.insert((a, b), f);
        }
    }

    let mut seen = BTreeSet::new();
    let mut creases = Vec::new();
    for &[u, v] in edges {
        if !seen.insert([u.min(v), u.max(v)]) {
            continue;
        }
        let (Some(&fa), Some(&fb)) = (directed.get(&(u, v)), directed.get(&(v, u))) else {
            return Err(BoxModelError::EdgeNotBevelable(u, v));
        };
        let (n1, n2) = (faces[fa].normal, faces[fb].normal);
        if fa == fb || n1.dot(n2).abs() >= T::lit(FLAT_COS) {
            return Err(BoxModelError::EdgeNotBevelable(u, v));
        }
        let dir = mesh.positions[v as usize] - mesh.positions[u as usize];
        let convex = n1.cross(n2).dot(dir) > T::zero();
        creases.push(Crease {
            a: u,
            b: v,
            f1: fa,
            f2: fb,
            sign: if convex { T::one() } else { -T::one() },
        });
    }

    let mut incident: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, c) in creases.iter().enumerate() {
        incident.entry(c.a).or_default().push(i);
        incident.entry(c.b).or_default().push(i);
    }
    let mut fans: BTreeMap<u32, BTreeSet<usize>> = BTreeMap::new();
    for (f, face) in faces.iter().enumerate() {
        for &v in &face.poly.verts {
            if incident.contains_key(&v) {
                fans.entry(v).or_default().insert(f);
            }
        }
    }

    let mut builder = Builder {
        positions: mesh.positions.clone(),
        faces: &faces,
        radius,
        segments,
        corners: BTreeMap::new(),
        points: HashMap::new(),
    };
    for (&v, ids) in &incident {
        let fan: Vec<usize> = fans[&v].iter().copied().collect();
        let corner = classify(mesh.positions[v as usize], v, ids, &creases, &fan, &faces, radius)?;
        builder.corners.insert(v, corner);
    }

    let mut out = TriMesh {
        positions: Vec::new(),
        ..TriMesh::empty()
    };
    let mut next_face = 0u32;

    // Trimmed original faces keep their ids.
    let mut trimmed = Vec::with_capacity(faces.len());
    for (f, face) in faces.iter().enumerate() {
        let mut verts = Vec::with_capacity(face.poly.verts.len());
        let mut uv = Vec::with_capacity(face.poly.verts.len());
        for (k, &v) in face.poly.verts.iter().enumerate() {
            if builder.corners.contains_key(&v) {
                let p = builder.tangent(v, f);
                uv.push(face.map.eval(builder.positions[p as usize]));
                verts.push(p);
            } else {
                verts.push(v);
                uv.push(face.poly.uv[k]);
            }
        }
        for (k, (u, w)) in loop_edges(&face.poly.verts).enumerate() {
            let (nu, nw) = (verts[k], verts[(k + 1) % verts.len()]);
            let before = mesh.positions[w as usize] - mesh.positions[u as usize];
            let after = builder.positions[nw as usize] - builder.positions[nu as usize];
            if after.dot(before) <= T::lit(1e-6) * before.norm_squared() {
                let vertex = if builder.corners.contains_key(&u) { u } else { w };
                return Err(BoxModelError::RadiusTooLarge {
                    radius: radius.as_f64(),
                    vertex,
                });
            }
        }
        trimmed.push(Polygon::new(verts, uv));
    }

    let mut strips = Vec::new();
    for c in &creases {
        strips.extend(builder.strip(c, &faces));
    }
    let mut patches = Vec::new();
    for (&v, corner) in &builder.corners.clone() {
        if let Corner::Triple { faces: fs, .. } = corner {
            patches.push(builder.patch(v, *fs));
        }
    }

    out.positions = builder.positions;
    for poly in trimmed.iter().chain(&strips) {
        out.push_polygon(poly, next_face)?;
        next_face += 1;
    }
    for patch in patches {
        for (tri, uv) in patch {
            out.triangles.push(tri);
            out.uv.push(uv);
            out.face_ids.push(next_face);
            next_face += 1;
        }
    }
    out.compact();
    if mesh.normals.is_some() {
        out.compute_normals();
    }
    out.validate()?;
    Ok(out)
}

fn loop_edges(verts: &[u32]) -> impl Iterator<Item = (u32, u32)> + '_ {
    let n = verts.len();
    (0..n).map(move |i| (verts[i], verts[(i + 1) % n]))
}

fn face_normal<T: Real>(positions: &[Vec3<T>], poly: &Polygon<T>) -> Vec3<T> {
    poly.newell_normal(positions).try_normalize().unwrap_or_else(Vec3::zero)
}

/// Affine map from a face's plane to its UV chart, fitted on the face's
/// largest triangle. Points off the plane map through their projection.
#[derive(Debug, Clone, Copy)]
struct UvMap<T> {
    origin: Vec3<T>,
    e1: Vec3<T>,
    e2: Vec3<T>,
    uv0: Vec2<T>,
    duv1: Vec2<T>,
    duv2: Vec2<T>,
}

impl<T: Real> UvMap<T> {
    fn eval(&self, p: Vec3<T>) -> Vec2<T> {
        let d = p - self.origin;
        let (a11, a12, a22) = (self.e1.dot(self.e1), self.e1.dot(self.e2), self.e2.dot(self.e2));
        let (r1, r2) = (d.dot(self.e1), d.dot(self.e2));
        let det = a11 * a22 - a12 * a12;
        let s = (r1 * a22 - r2 * a12) / det;
        let t = (r2 * a11 - r1 * a12) / det;
        self.uv0 + self.duv1.scale(s) + self.duv2.scale(t)
    }

    /// UV displacement of a 3D direction lying in the face plane.
    fn linear(&self, d: Vec3<T>) -> Vec2<T> {
        self.eval(self.origin + d) - self.uv0
    }
}

struct Face<T> {
    poly: Polygon<T>,
    normal: Vec3<T>,
    map: UvMap<T>,
}

impl<T: Real> Face<T> {
    fn new(mesh: &TriMesh<T>, id: u32, poly: Polygon<T>) -> Self {
        let best = (0..mesh.triangle_count())
            .filter(|&t| mesh.face_ids[t] == id)
            .max_by(|&x, &y| {
                mesh.triangle_area(x)
                    .partial_cmp(&mesh.triangle_area(y))
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(y.cmp(&x))
            })
            .expect("every face id owns a triangle");
        let [p0, p1, p2] = mesh.corners(best);
        let [uv0, uv1, uv2] = mesh.uv[best];
        Self {
            normal: face_normal(&mesh.positions, &poly),
            poly,
            map: UvMap {
                origin: p0,
                e1: p1 - p0,
                e2: p2 - p0,
                uv0,
                duv1: uv1 - uv0,
                duv2: uv2 - uv0,
            },
        }
    }

    fn uv_of(&self, v: u32) -> Option<Vec2<T>> {
        self.poly.verts.iter().position(|&w| w == v).map(|k| self.poly.uv[k])
    }
}

struct Crease<T> {
    /// `a -> b` runs along `f1`'s loop, `b -> a` along `f2`'s.
    a: u32,
    b: u32,
    f1: usize,
    f2: usize,
    /// +1 for convex creases, -1 for concave ones.
    sign: T,
}

#[derive(Debug, Clone, Copy)]
enum Corner<T> {
    /// Three beveled edges meeting between three faces.
    Triple { center: Vec3<T>, sign: T, faces: [usize; 3] },
    /// End of one beveled edge on the mesh boundary.
    End { center: Vec3<T>, sign: T },
}

impl<T: Real> Corner<T> {
    fn center(&self) -> Vec3<T> {
        match *self {
            Corner::Triple { center, .. } | Corner::End { center, .. } => center,
        }
    }

    fn sign(&self) -> T {
        match *self {
            Corner::Triple { sign, .. } | Corner::End { sign, .. } => sign,
        }
    }
}

fn classify<T: Real>(
    p: Vec3<T>,
    v: u32,
    ids: &[usize],
    creases: &[Crease<T>],
    fan: &[usize],
    faces: &[Face<T>],
    radius: T,
) -> Result<Corner<T>, BoxModelError> {
    let unsupported = |reason: String| Err(BoxModelError::UnsupportedBevel { vertex: v, reason });
    match (ids.len(), fan.len()) {
        (1, 2) => {
            let c = &creases[ids[0]];
            let (n1, n2) = (faces[c.f1].normal, faces[c.f2].normal);
            let offset = (n1 + n2).scale(c.sign * radius / (T::one() + n1.dot(n2)));
            Ok(Corner::End {
                center: p - offset,
                sign: c.sign,
            })
        }
        (3, 3) => {
            let sign = creases[ids[0]].sign;
            if ids.iter().any(|&i| creases[i].sign != sign) {
                return unsupported("corner mixes convex and concave creases".into());
            }
            let mut pairs: Vec<[usize; 2]> = ids
                .iter()
                .map(|&i| {
                    let c = &creases[i];
                    [c.f1.min(c.f2), c.f1.max(c.f2)]
                })
                .collect();
            pairs.sort_unstable();
            pairs.dedup();
            let fs = [fan[0], fan[1], fan[2]];
            let expected = [[fs[0], fs[1]], [fs[0], fs[2]], [fs[1], fs[2]]];
            if pairs != expected {
                return unsupported("beveled edges do not pair up the three faces".into());
            }
            let rows = fs.map(|f| faces[f].normal);
            let m = Mat3::from_rows(rows.map(|n| [n.x, n.y, n.z]));
            let rhs = Vec3::new(
                rows[0].dot(p) - sign * radius,
                rows[1].dot(p) - sign * radius,
                rows[2].dot(p) - sign * radius,
            );
            let Some(inv) = m.inverse().filter(|_| m.det().abs() > T::lit(1e-9)) else {
                return unsupported("corner faces are nearly dependent".into());
            };
            Ok(Corner::Triple {
                center: inv * rhs,
                sign,
                faces: fs,
            })
        }
        (c, f) => unsupported(format!("{c} beveled edges across {f} faces")),
    }
}

type PatchTriangle<T> = ([u32; 3], [Vec2<T>; 3]);

struct Builder<'a, T> {
    positions: Vec<Vec3<T>>,
    faces: &'a [Face<T>],
    radius: T,
    segments: u32,
    corners: BTreeMap<u32, Corner<T>>,
    /// (vertex, face lo, face hi, step from lo) -> new vertex; tangent
    /// points use step 0 with `hi == lo`.
    points: HashMap<(u32, usize, usize, u32), u32>,
}

impl<T: Real> Builder<'_, T> {
    fn push(&mut self, key: (u32, usize, usize, u32), p: impl FnOnce() -> Vec3<T>) -> u32 {
        if let Some(&i) = self.points.get(&key) {
            return i;
        }
        let i = self.positions.len() as u32;
        self.positions.push(p());
        self.points.insert(key, i);
        i
    }

    fn tangent(&mut self, v: u32, f: usize) -> u32 {
        let corner = self.corners[&v];
        let n = self.faces[f].normal;
        let r = self.radius;
        self.push((v, f, f, 0), || corner.center() + n.scale(corner.sign() * r))
    }

    /// Point `j` of the arc at `v` running from face `x` to face `y`.
    fn arc(&mut self, v: u32, x: usize, y: usize, j: u32) -> u32 {
        let k = self.segments;
        if j == 0 {
            return self.tangent(v, x);
        }
        if j == k {
            return self.tangent(v, y);
        }
        let (lo, hi, step) = if x < y { (x, y, j) } else { (y, x, k - j) };
        let corner = self.corners[&v];
        let (nl, nh) = (self.faces[lo].normal, self.faces[hi].normal);
        let t = T::lit(step as f64 / k as f64);
        let r = self.radius;
        self.push((v, lo, hi, step), || corner.center() + nl.slerp(nh, t).scale(corner.sign() * r))
    }

    fn strip(&mut self, c: &Crease<T>, faces: &[Face<T>]) -> Vec<Polygon<T>> {
        let k = self.segments;
        let rows_a: Vec<u32> = (0..=k).map(|j| self.arc(c.a, c.f1, c.f2, j)).collect();
        let rows_b: Vec<u32> = (0..=k).map(|j| self.arc(c.b, c.f1, c.f2, j)).collect();
        let (f1, f2) = (&faces[c.f1], &faces[c.f2]);
        let seamless = f1.uv_of(c.a) == f2.uv_of(c.a) && f1.uv_of(c.b) == f2.uv_of(c.b);
        let uv_row = |rows: &[u32], j: u32| -> Vec2<T> {
            let first = f1.map.eval(self.positions[rows[0] as usize]);
            if seamless {
                let last = f2.map.eval(self.positions[rows[k as usize] as usize]);
                let t = T::lit(j as f64 / k as f64);
                first + (last - first).scale(t)
            } else {
                // Unroll the fillet into the first face's chart.
                let along = self.positions[c.b as usize] - self.positions[c.a as usize];
                let out = along.cross(f1.normal).normalize();
                let step = (self.positions[rows[1] as usize] - self.positions[rows[0] as usize]).norm();
                first + f1.map.linear(out).scale(step * T::lit(j as f64))
            }
        };
        let ua: Vec<_> = (0..=k).map(|j| uv_row(&rows_a, j)).collect();
        let ub: Vec<_> = (0..=k).map(|j| uv_row(&rows_b, j)).collect();
        (0..k as usize)
            .map(|j| {
                Polygon::new(
                    vec![rows_b[j], rows_a[j], rows_a[j + 1], rows_b[j + 1]],
                    vec![ub[j], ua[j], ua[j + 1], ub[j + 1]],
                )
            })
            .collect()
    }

    /// Spherical triangle closing a three-edge corner. Its rim reuses the
    /// strip arcs; interior points blend the three face normals.
    fn patch(&mut self, v: u32, fs: [usize; 3]) -> Vec<PatchTriangle<T>> {
        let k = self.segments;
        let corner = self.corners[&v];
        let [na, nb, nc] = fs.map(|f| self.faces[f].normal);
        let r = self.radius;
        let mut grid: HashMap<(u32, u32), u32> = HashMap::new();
        for i in 0..=k {
            for j in 0..=k - i {
                let l = k - i - j;
                let idx = if l == 0 {
                    self.arc(v, fs[0], fs[1], j)
                } else if i == 0 {
                    self.arc(v, fs[1], fs[2], l)
                } else if j == 0 {
                    self.arc(v, fs[2], fs[0], i)
                } else {
                    let w = |x: u32| T::lit(x as f64);
                    let dir = (na.scale(w(i)) + nb.scale(w(j)) + nc.scale(w(l))).normalize();
                    self.push((v, usize::MAX, i as usize, j), || {
                        corner.center() + dir.scale(corner.sign() * r)
                    })
                };
                grid.insert((i, j), idx);
            }
        }
        let mut tris = Vec::new();
        for i in 0..k {
            for j in 0..k - i {
                tris.push([grid[&(i, j)], grid[&(i + 1, j)], grid[&(i, j + 1)]]);
                if i + j + 2 <= k {
                    tris.push([grid[&(i + 1, j)], grid[&(i + 1, j + 1)], grid[&(i, j + 1)]]);
                }
            }
        }
        let outward = na + nb + nc;
        let [p0, p1, p2] = tris[0].map(|i| self.positions[i as usize]);
        let flip = (p1 - p0).cross(p2 - p0).dot(outward) < T::zero();
        let map = self.faces[fs[0]].map;
        tris.into_iter()
            .map(|mut t| {
                if flip {
                    t.swap(1, 2);
                }
                let uv = t.map(|i| map.eval(self.positions[i as usize]));
                (t, uv)
            })
            .collect()
    }
}
