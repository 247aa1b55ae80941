//! Indexed triangle meshes with per-corner UVs and planar face grouping.

mod obj;
mod polygon;

pub use obj::write_obj;
pub use polygon::{triangulate_loop, Polygon};

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::linalg::{Vec2, Vec3};
use crate::scalar::Real;

/// Smallest triangle area accepted anywhere in the pipeline, m².
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("triangle {triangle} references vertex {index} but the mesh has {count} vertices")]
    IndexOutOfRange {
        triangle: usize,
        index: u32,
        count: usize,
    },
    #[error("vertex {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("triangle {triangle} is degenerate (area {area:e} m²)")]
    Degenerate { triangle: usize, area: f64 },
    #[error("attribute length mismatch: {0}")]
    AttributeLength(&'static str),
    #[error("face {0} does not bound a single simple loop")]
    BadFaceLoop(u32),
    #[error("edge ({0}, {1}) is shared by more than two triangles")]
    NonManifoldEdge(u32, u32),
    #[error("edge ({0}, {1}) is traversed twice in the same direction")]
    InconsistentWinding(u32, u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh<T> {
    pub positions: Vec<Vec3<T>>,
    pub triangles: Vec<[u32; 3]>,
    /// One UV per triangle corner, meters in unfolded-sheet space.
    pub uv: Vec<[Vec2<T>; 3]>,
    pub normals: Option<Vec<Vec3<T>>>,
    /// Planar polygon each triangle was cut from. Triangles sharing an id
    /// are coplanar and together bound one simple loop.
    pub face_ids: Vec<u32>,
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb<T> {
    pub min: Vec3<T>,
    pub max: Vec3<T>,
}

impl<T: Real> Aabb<T> {
    pub fn empty() -> Self {
        let inf = T::infinity();
        Self {
            min: Vec3::new(inf, inf, inf),
            max: Vec3::new(-inf, -inf, -inf),
        }
    }

    pub fn from_points<'a>(pts: impl IntoIterator<Item = &'a Vec3<T>>) -> Self {
        let mut b = Self::empty();
        for p in pts {
            b.grow(*p);
        }
        b
    }

    pub fn grow(&mut self, p: Vec3<T>) {
        self.min = self.min.min(p);
        self.max = self.max.max(p);
    }

    pub fn union(&self, o: &Self) -> Self {
        Self {
            min: self.min.min(o.min),
            max: self.max.max(o.max),
        }
    }

    pub fn extents(&self) -> Vec3<T> {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3<T> {
        (self.min + self.max).scale(T::half())
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x
    }

    pub fn contains(&self, o: &Self, tol: T) -> bool {
        (0..3).all(|i| o.min[i] >= self.min[i] - tol && o.max[i] <= self.max[i] + tol)
    }
}

/// Summary of a mesh's combinatorial structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Topology {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub boundary_edges: usize,
    pub non_manifold_edges: usize,
    pub inconsistent_edges: usize,
    pub non_manifold_vertices: usize,
}

impl Topology {
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices as i64 - self.edges as i64 + self.faces as i64
    }

    /// Every edge shared by exactly two oppositely wound triangles and every
    /// vertex neighbourhood a single disk.
    pub fn is_closed_manifold(&self) -> bool {
        self.boundary_edges == 0
            && self.non_manifold_edges == 0
            && self.inconsistent_edges == 0
            && self.non_manifold_vertices == 0
    }
}

pub fn triangle_area<T: Real>(a: Vec3<T>, b: Vec3<T>, c: Vec3<T>) -> T {
    (b - a).cross(c - a).norm() * T::half()
}

pub fn uv_triangle_area<T: Real>(uv: &[Vec2<T>; 3]) -> T {
    (uv[1] - uv[0]).perp_dot(uv[2] - uv[0]) * T::half()
}

impl<T: Real> TriMesh<T> {
    pub fn empty() -> Self {
        Self {
            positions: Vec::new(),
            triangles: Vec::new(),
            uv: Vec::new(),
            normals: None,
            face_ids: Vec::new(),
        }
    }

    /// Builds a mesh from raw triangles. UVs are zero and coplanar
    /// edge-adjacent triangles are grouped into shared faces.
    pub fn new(positions: Vec<Vec3<T>>, triangles: Vec<[u32; 3]>) -> Result<Self, MeshError> {
        let n = triangles.len();
        let mut mesh = Self {
            positions,
            triangles,
            uv: vec![[Vec2::zero(); 3]; n],
            normals: None,
            face_ids: (0..n as u32).collect(),
        };
        mesh.validate()?;
        mesh.face_ids = mesh.coplanar_groups();
        Ok(mesh)
    }

    /// Triangulates planar polygons; each polygon becomes one face id.
    pub fn from_polygons(positions: Vec<Vec3<T>>, polygons: &[Polygon<T>]) -> Result<Self, MeshError> {
        let mut mesh = Self {
            positions,
            ..Self::empty()
        };
        for (fid, poly) in polygons.iter().enumerate() {
            mesh.push_polygon(poly, fid as u32)?;
        }
        mesh.validate()?;
        Ok(mesh)
    }

    pub(crate) fn push_polygon(&mut self, poly: &Polygon<T>, face_id: u32) -> Result<(), MeshError> {
        let tris = triangulate_loop(&self.positions, &poly.verts).ok_or(MeshError::BadFaceLoop(face_id))?;
        for [a, b, c] in tris {
            self.triangles.push([poly.verts[a], poly.verts[b], poly.verts[c]]);
            self.uv.push([poly.uv[a], poly.uv[b], poly.uv[c]]);
            self.face_ids.push(face_id);
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn face_count(&self) -> usize {
        self.face_ids.iter().map(|f| *f as usize + 1).max().unwrap_or(0)
    }

    pub fn corners(&self, t: usize) -> [Vec3<T>; 3] {
        let [a, b, c] = self.triangles[t];
        [
            self.positions[a as usize],
            self.positions[b as usize],
            self.positions[c as usize],
        ]
    }

    pub fn triangle_normal(&self, t: usize) -> Vec3<T> {
        let [a, b, c] = self.corners(t);
        (b - a).cross(c - a).try_normalize().unwrap_or_else(Vec3::zero)
    }

    pub fn triangle_area(&self, t: usize) -> T {
        let [a, b, c] = self.corners(t);
        triangle_area(a, b, c)
    }

    pub fn compute_normals(&mut self) {
        self.normals = Some((0..self.triangles.len()).map(|t| self.triangle_normal(t)).collect());
    }

    /// Checks index bounds, finiteness, attribute lengths and the minimum
    /// triangle area.
    pub fn validate(&self) -> Result<(), MeshError> {
        let n = self.positions.len();
        if self.uv.len() != self.triangles.len() {
            return Err(MeshError::AttributeLength("uv"));
        }
        if self.face_ids.len() != self.triangles.len() {
            return Err(MeshError::AttributeLength("face_ids"));
        }
        if let Some(normals) = &self.normals {
            if normals.len() != self.triangles.len() {
                return Err(MeshError::AttributeLength("normals"));
            }
        }
        if let Some(i) = self.positions.iter().position(|p| !p.is_finite()) {
            return Err(MeshError::NonFinite(i));
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            if let Some(&index) = tri.iter().find(|&&i| i as usize >= n) {
                return Err(MeshError::IndexOutOfRange {
                    triangle: t,
                    index,
                    count: n,
                });
            }
            let area = self.triangle_area(t).as_f64();
            if !(area >= MIN_TRIANGLE_AREA) {
                return Err(MeshError::Degenerate { triangle: t, area });
            }
        }
        Ok(())
    }

    pub fn aabb(&self) -> Aabb<T> {
        Aabb::from_points(&self.positions)
    }

    pub fn surface_area(&self) -> T {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Total unsigned UV area.
    pub fn uv_area(&self) -> T {
        self.uv.iter().map(|uv| uv_triangle_area(uv).abs()).sum()
    }

    /// Signed enclosed volume; positive for a closed mesh wound
    /// counter-clockwise seen from outside.
    pub fn signed_volume(&self) -> T {
        let six = T::lit(6.0);
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.corners(t);
                a.dot(b.cross(c)) / six
            })
            .sum()
    }

    /// Directed edge -> triangles using it.
    fn directed_edges(&self) -> HashMap<(u32, u32), Vec<usize>> {
        let mut map: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                map.entry((tri[k], tri[(k + 1) % 3])).or_default().push(t);
            }
        }
        map
    }

    pub fn topology(&self) -> Topology {
        let directed = self.directed_edges();
        let mut undirected: BTreeMap<(u32, u32), (usize, bool)> = BTreeMap::new();
        for (&(a, b), tris) in &directed {
            let key = (a.min(b), a.max(b));
            let entry = undirected.entry(key).or_insert((0, false));
            entry.0 += tris.len();
            if tris.len() > 1 {
                entry.1 = true;
            }
        }
        let mut used = vec![false; self.positions.len()];
        for tri in &self.triangles {
            for &i in tri {
                used[i as usize] = true;
            }
        }
        let mut topo = Topology {
            vertices: used.iter().filter(|u| **u).count(),
            edges: undirected.len(),
            faces: self.triangles.len(),
            boundary_edges: 0,
            non_manifold_edges: 0,
            inconsistent_edges: 0,
            non_manifold_vertices: 0,
        };
        for (count, same_dir) in undirected.values() {
            match count {
                1 => topo.boundary_edges += 1,
                2 => {}
                _ => topo.non_manifold_edges += 1,
            }
            if *same_dir {
                topo.inconsistent_edges += 1;
            }
        }
        topo.non_manifold_vertices = self.count_non_manifold_vertices(&used);
        topo
    }

    /// Vertices whose incident triangles form more than one edge-connected fan.
    fn count_non_manifold_vertices(&self, used: &[bool]) -> usize {
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); self.positions.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &i in tri {
                incident[i as usize].push(t);
            }
        }
        let mut bad = 0;
        for (v, tris) in incident.iter().enumerate() {
            if !used[v] || tris.len() < 2 {
                continue;
            }
            // Union triangles around v that share an edge through v.
            let mut parent: Vec<usize> = (0..tris.len()).collect();
            fn find(p: &mut [usize], mut i: usize) -> usize {
                while p[i] != i {
                    p[i] = p[p[i]];
                    i = p[i];
                }
                i
            }
            let mut by_other: HashMap<u32, usize> = HashMap::new();
            for (k, &t) in tris.iter().enumerate() {
                for &o in &self.triangles[t] {
                    if o as usize == v {
                        continue;
                    }
                    if let Some(&prev) = by_other.get(&o) {
                        let (ra, rb) = (find(&mut parent, prev), find(&mut parent, k));
                        parent[ra] = rb;
                    } else {
                        by_other.insert(o, k);
                    }
                }
            }
            let roots = (0..tris.len()).filter(|&k| find(&mut parent, k) == k).count();
            if roots > 1 {
                bad += 1;
            }
        }
        bad
    }

    /// Fails unless every edge has at most two uses with opposite directions.
    pub fn check_orientable(&self) -> Result<(), MeshError> {
        let directed = self.directed_edges();
        let mut keys: Vec<_> = directed.keys().copied().collect();
        keys.sort_unstable();
        for (a, b) in keys {
            let uses = directed[&(a, b)].len() + directed.get(&(b, a)).map_or(0, |v| v.len());
            if uses > 2 {
                return Err(MeshError::NonManifoldEdge(a.min(b), a.max(b)));
            }
            if directed[&(a, b)].len() > 1 {
                return Err(MeshError::InconsistentWinding(a, b));
            }
        }
        Ok(())
    }

    /// Groups edge-adjacent triangles lying in a common plane.
    fn coplanar_groups(&self) -> Vec<u32> {
        let n = self.triangles.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        let scale = self.aabb().extents().norm().max(T::one());
        let tol = T::lit(1e-10) * scale;
        let normals: Vec<_> = (0..n).map(|t| self.triangle_normal(t)).collect();
        let directed = self.directed_edges();
        let mut keys: Vec<_> = directed.keys().copied().collect();
        keys.sort_unstable();
        for (a, b) in keys {
            let Some(twins) = directed.get(&(b, a)) else { continue };
            let (t0, t1) = (directed[&(a, b)][0], twins[0]);
            if normals[t0].dot(normals[t1]) < T::one() - T::lit(1e-10) {
                continue;
            }
            let p0 = self.positions[self.triangles[t0][0] as usize];
            let off_plane = self.triangles[t1]
                .iter()
                .any(|&v| (self.positions[v as usize] - p0).dot(normals[t0]).abs() > tol);
            if !off_plane {
                let (r0, r1) = (find(&mut parent, t0), find(&mut parent, t1));
                if r0 != r1 {
                    parent[r0.max(r1)] = r0.min(r1);
                }
            }
        }
        let mut ids = vec![0u32; n];
        let mut remap: HashMap<usize, u32> = HashMap::new();
        for (t, id) in ids.iter_mut().enumerate() {
            let r = find(&mut parent, t);
            let next = remap.len() as u32;
            *id = *remap.entry(r).or_insert(next);
        }
        ids
    }

    /// Recovers the planar polygon of every face id, in id order.
    pub fn polygons(&self) -> Result<Vec<Polygon<T>>, MeshError> {
        let nf = self.face_count();
        let mut by_face: Vec<Vec<usize>> = vec![Vec::new(); nf];
        for (t, &f) in self.face_ids.iter().enumerate() {
            by_face[f as usize].push(t);
        }
        by_face
            .iter()
            .enumerate()
            .map(|(f, tris)| self.face_loop(f as u32, tris))
            .collect()
    }

    fn face_loop(&self, face: u32, tris: &[usize]) -> Result<Polygon<T>, MeshError> {
        let mut edges: HashMap<(u32, u32), Vec2<T>> = HashMap::new();
        for &t in tris {
            let tri = self.triangles[t];
            for k in 0..3 {
                edges.insert((tri[k], tri[(k + 1) % 3]), self.uv[t][k]);
            }
        }
        let mut next: BTreeMap<u32, (u32, Vec2<T>)> = BTreeMap::new();
        for (&(a, b), &uv) in &edges {
            if edges.contains_key(&(b, a)) {
                continue;
            }
            if next.insert(a, (b, uv)).is_some() {
                return Err(MeshError::BadFaceLoop(face));
            }
        }
        let Some((&start, _)) = next.iter().next() else {
            return Err(MeshError::BadFaceLoop(face));
        };
        let mut verts = Vec::with_capacity(next.len());
        let mut uv = Vec::with_capacity(next.len());
        let mut cur = start;
        loop {
            let &(b, corner_uv) = next.get(&cur).ok_or(MeshError::BadFaceLoop(face))?;
            verts.push(cur);
            uv.push(corner_uv);
            cur = b;
            if cur == start {
                break;
            }
            if verts.len() > next.len() {
                return Err(MeshError::BadFaceLoop(face));
            }
        }
        if verts.len() != next.len() {
            return Err(MeshError::BadFaceLoop(face));
        }
        Ok(Polygon { verts, uv })
    }

    /// Drops unreferenced vertices, preserving the order of the rest.
    pub fn compact(&mut self) {
        let mut used = vec![false; self.positions.len()];
        for tri in &self.triangles {
            for &i in tri {
                used[i as usize] = true;
            }
        }
        let mut remap = vec![u32::MAX; self.positions.len()];
        let mut positions = Vec::with_capacity(self.positions.len());
        for (i, p) in self.positions.iter().enumerate() {
            if used[i] {
                remap[i] = positions.len() as u32;
                positions.push(*p);
            }
        }
        for tri in &mut self.triangles {
            for i in tri.iter_mut() {
                *i = remap[*i as usize];
            }
        }
        self.positions = positions;
    }

    /// Applies `f` to every position.
    pub fn map_positions(&self, f: impl Fn(Vec3<T>) -> Vec3<T>) -> Self {
        let mut out = self.clone();
        out.positions = self.positions.iter().map(|p| f(*p)).collect();
        if out.normals.is_some() {
            out.compute_normals();
        }
        out
    }

    pub fn cast<U: Real>(&self) -> TriMesh<U> {
        TriMesh {
            positions: self.positions.iter().map(|p| p.cast()).collect(),
            triangles: self.triangles.clone(),
            uv: self.uv.iter().map(|c| [c[0].cast(), c[1].cast(), c[2].cast()]).collect(),
            normals: self.normals.as_ref().map(|n| n.iter().map(|v| v.cast()).collect()),
            face_ids: self.face_ids.clone(),
        }
    }
}

#[cfg(test)]
pub(crate) mod test_meshes {
    use super::*;

    /// Closed unit cube, outward winding, 12 triangles.
    pub fn unit_cube() -> TriMesh<f64> {
        let p = |x: f64, y: f64, z: f64| Vec3::new(x, y, z);
        let positions = vec![
            p(0., 0., 0.),
            p(1., 0., 0.),
            p(1., 1., 0.),
            p(0., 1., 0.),
            p(0., 0., 1.),
            p(1., 0., 1.),
            p(1., 1., 1.),
            p(0., 1., 1.),
        ];
        let quads = [
            [0u32, 3, 2, 1],
            [4, 5, 6, 7],
            [0, 1, 5, 4],
            [1, 2, 6, 5],
            [2, 3, 7, 6],
            [3, 0, 4, 7],
        ];
        let tris = quads
            .iter()
            .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
            .collect();
        TriMesh::new(positions, tris).unwrap()
    }

    pub fn unit_quad() -> TriMesh<f64> {
        let positions = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ];
        TriMesh::new(positions, vec![[0, 1, 2], [0, 2, 3]]).unwrap()
    }
}
