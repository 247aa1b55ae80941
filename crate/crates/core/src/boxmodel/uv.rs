//! Unfolded-sheet UV layout of the box shell.

use std::collections::HashMap;

use super::shell::{sides, Side, BASE_FACE, FLAP_FACE, WALL_FACE};
use super::BoxParams;
use crate::linalg::{Vec2, Vec3};
use crate::mesh::TriMesh;
use crate::scalar::Real;

/// Assigns UVs from the flat cardboard sheet the shell folds from: the base
/// rectangle with the walls folded out around it and each flap continuing
/// its wall. Coordinates are meters, so the map is an isometry per face and
/// fold edges get identical UVs on both sides.
///
/// `shell` must come from [`super::build_shell`] with the same parameters.
pub fn unwrap_uv<T: Real>(params: &BoxParams<T>, shell: &TriMesh<T>) -> TriMesh<T> {
    let sides = sides(params);
    let sz = params.size.z;
    // Charts are filled parent first (base, wall, flap) and a vertex on a
    // fold reuses its parent's UV bit for bit.
    let mut charts: Vec<HashMap<u32, Vec2<T>>> = vec![HashMap::new(); 9];
    let mut order: Vec<usize> = (0..shell.triangle_count()).collect();
    order.sort_by_key(|&t| shell.face_ids[t]);
    let mut out = shell.clone();
    for t in order {
        let face = shell.face_ids[t];
        let parent = match face {
            BASE_FACE => None,
            f if f < FLAP_FACE => Some(BASE_FACE),
            f => Some(f - FLAP_FACE + WALL_FACE),
        };
        for (k, &v) in shell.triangles[t].iter().enumerate() {
            let inherited = parent.and_then(|f| charts[f as usize].get(&v).copied());
            let uv = inherited.unwrap_or_else(|| {
                let p = shell.positions[v as usize];
                match face {
                    BASE_FACE => base_uv(p),
                    f if f < FLAP_FACE => wall_uv(&sides[(f - WALL_FACE) as usize], p),
                    f => flap_uv(&sides[(f - FLAP_FACE) as usize], sz, p),
                }
            });
            charts[face as usize].insert(v, uv);
            out.uv[t][k] = uv;
        }
    }
    out
}

/// The base seen from below, so every chart keeps counter-clockwise
/// orientation.
fn base_uv<T: Real>(p: Vec3<T>) -> Vec2<T> {
    Vec2::new(p.x, -p.y)
}

fn outward_uv<T: Real>(side: &Side<T>) -> Vec2<T> {
    base_uv(side.outward)
}

fn wall_uv<T: Real>(side: &Side<T>, p: Vec3<T>) -> Vec2<T> {
    base_uv(p) + outward_uv(side).scale(p.z)
}

fn flap_uv<T: Real>(side: &Side<T>, sz: T, p: Vec3<T>) -> Vec2<T> {
    let along = (p - side.start).dot(side.along);
    let hinge_line = side.start + Vec3::unit_z().scale(sz);
    let up = (p - hinge_line).dot(side.flap_dir);
    base_uv(side.start + side.along.scale(along)) + outward_uv(side).scale(sz + up)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxmodel::build_shell;
    use crate::mesh::uv_triangle_area;

    fn params() -> BoxParams<f64> {
        BoxParams {
            size: Vec3::new(0.3, 0.3, 0.2),
            flap_length: 0.1,
            flap_taper: 0.02,
            open: [0.3, 1.2, 2.0, 0.0],
            thickness: 0.0,
            bevel_radius: 0.0,
            bevel_segments: 1,
        }
    }

    #[test]
    fn base_is_size_rectangle() {
        let p = params();
        let m = unwrap_uv(&p, &build_shell(&p).unwrap());
        let mut min = Vec2::new(f64::MAX, f64::MAX);
        let mut max = Vec2::new(f64::MIN, f64::MIN);
        for (t, &f) in m.face_ids.iter().enumerate() {
            if f != BASE_FACE {
                continue;
            }
            for uv in m.uv[t] {
                min = Vec2::new(min.x.min(uv.x), min.y.min(uv.y));
                max = Vec2::new(max.x.max(uv.x), max.y.max(uv.y));
            }
        }
        assert!((max.x - min.x - 0.3).abs() < 1e-15);
        assert!((max.y - min.y - 0.3).abs() < 1e-15);
    }

    #[test]
    fn charts_are_isometric_and_positive() {
        let p = params();
        let m = unwrap_uv(&p, &build_shell(&p).unwrap());
        for t in 0..m.triangle_count() {
            let a3 = m.triangle_area(t);
            let a2 = uv_triangle_area(&m.uv[t]);
            assert!(a2 > 0.0);
            assert!((a2 - a3).abs() <= 1e-12 * a3, "triangle {t}: {a2} vs {a3}");
        }
    }

    #[test]
    fn fold_edges_have_no_seam() {
        let p = params();
        let m = unwrap_uv(&p, &build_shell(&p).unwrap());
        // Map each (face, vertex) to its UV, then compare across faces that
        // meet at a fold.
        let mut corner: HashMap<(u32, u32), Vec2<f64>> = HashMap::new();
        for (t, tri) in m.triangles.iter().enumerate() {
            for k in 0..3 {
                corner.insert((m.face_ids[t], tri[k]), m.uv[t][k]);
            }
        }
        let folds = [(BASE_FACE, WALL_FACE), (WALL_FACE, FLAP_FACE), (WALL_FACE + 2, FLAP_FACE + 2)];
        for (a, b) in folds {
            let mut shared = 0;
            for (&(f, v), uv) in &corner {
                if f != a {
                    continue;
                }
                if let Some(other) = corner.get(&(b, v)) {
                    assert_eq!(uv, other, "vertex {v} between faces {a} and {b}");
                    shared += 1;
                }
            }
            assert_eq!(shared, 2);
        }
    }
}
