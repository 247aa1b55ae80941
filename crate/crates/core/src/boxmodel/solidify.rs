//! Inward offset of an open surface into a closed solid.

use std::collections::{BTreeMap, HashMap};

use super::BoxModelError;
use crate::linalg::{solve_psd_pseudo, Mat3, Vec2, Vec3};
use crate::mesh::{triangle_area, TriMesh, MIN_TRIANGLE_AREA};
use crate::scalar::Real;

/// Offsets longer than this many thicknesses mean a fold too sharp to
/// thicken without overlapping itself.
pub const MITER_LIMIT: f64 = 8.0;

/// Normals closer than this are merged before solving vertex offsets.
const SAME_NORMAL: f64 = 1e-9;

/// Turns an oriented open surface into a closed shell of the given
/// thickness.
///
/// The input stays as the outer surface. An inner copy is displaced by
/// `thickness` against the normals and wound the other way, and every
/// boundary edge is bridged by a rim quad. Each vertex moves by the
/// minimum-norm least-squares offset that puts all its incident face
/// planes exactly `thickness` inward where they agree, which keeps flat
/// regions and mitered folds at full thickness.
///
/// Offsets beyond a miter limit, inner triangles that flip or collapse, and
/// rim quads that collapse are reported as self-intersections.
pub fn solidify<T: Real>(mesh: &TriMesh<T>, thickness: T) -> Result<TriMesh<T>, BoxModelError> {
    if !(thickness > T::zero()) {
        return Err(BoxModelError::NonPositiveThickness(thickness.as_f64()));
    }
    mesh.validate()?;
    mesh.check_orientable()?;
    let n = mesh.vertex_count();
    let normals: Vec<Vec3<T>> = (0..mesh.triangle_count()).map(|t| mesh.triangle_normal(t)).collect();

    let mut incident: Vec<Vec<Vec3<T>>> = vec![Vec::new(); n];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for &v in tri {
            let list = &mut incident[v as usize];
            if !list.iter().any(|m| (*m - normals[t]).norm() < T::lit(SAME_NORMAL)) {
                list.push(normals[t]);
            }
        }
    }

    let mut positions = mesh.positions.clone();
    positions.reserve(n);
    for (v, list) in incident.iter().enumerate() {
        let p = mesh.positions[v];
        if list.is_empty() {
            positions.push(p);
            continue;
        }
        let mut a = Mat3::zero();
        let mut b = Vec3::zero();
        for m in list {
            a = a + outer(*m);
            b += m.scale(-thickness);
        }
        let d = solve_psd_pseudo(&a, b, T::lit(1e-12));
        if !d.is_finite() || d.norm() > thickness * T::lit(MITER_LIMIT) {
            return Err(BoxModelError::SelfIntersection {
                vertex: v as u32,
                reason: format!("fold too sharp, offset {:e} m", d.norm().as_f64()),
            });
        }
        positions.push(p + d);
    }

    let face_count = mesh.face_count() as u32;
    let mut out = TriMesh {
        positions,
        ..TriMesh::empty()
    };
    out.triangles.extend_from_slice(&mesh.triangles);
    out.uv.extend_from_slice(&mesh.uv);
    out.face_ids.extend_from_slice(&mesh.face_ids);

    let inner = |v: u32| v + n as u32;
    for (t, &[a, b, c]) in mesh.triangles.iter().enumerate() {
        let [pa, pb, pc] = [a, b, c].map(|v| out.positions[inner(v) as usize]);
        let offset_normal = (pb - pa).cross(pc - pa);
        let area = offset_normal.norm() * T::half();
        if offset_normal.dot(normals[t]) <= T::zero() || area.as_f64() < MIN_TRIANGLE_AREA {
            return Err(BoxModelError::SelfIntersection {
                vertex: a,
                reason: format!("offset of triangle {t} folds over"),
            });
        }
        let uv = mesh.uv[t];
        out.triangles.push([inner(a), inner(c), inner(b)]);
        out.uv.push([uv[0], uv[2], uv[1]]);
        out.face_ids.push(face_count + mesh.face_ids[t]);
    }

    // Boundary edges in a fixed order, each with the UVs of its owner.
    let mut directed: HashMap<(u32, u32), (usize, usize)> = HashMap::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for k in 0..3 {
            directed.insert((tri[k], tri[(k + 1) % 3]), (t, k));
        }
    }
    let boundary: BTreeMap<(u32, u32), (usize, usize)> = directed
        .iter()
        .filter(|(&(a, b), _)| !directed.contains_key(&(b, a)))
        .map(|(&e, &o)| (e, o))
        .collect();

    let mut next_face = 2 * face_count;
    for (&(a, b), &(t, k)) in &boundary {
        let (ua, ub) = (mesh.uv[t][k], mesh.uv[t][(k + 1) % 3]);
        let (ua2, ub2) = rim_uv(ua, ub, thickness);
        let quad = [(b, ub), (a, ua), (inner(a), ua2), (inner(b), ub2)];
        // Split along the diagonal through the lower original index.
        let tris = if a < b {
            [[quad[1], quad[2], quad[3]], [quad[1], quad[3], quad[0]]]
        } else {
            [[quad[0], quad[1], quad[2]], [quad[0], quad[2], quad[3]]]
        };
        let planar = {
            let [p0, p1, p2, p3] = quad.map(|(v, _)| out.positions[v as usize]);
            let nrm = (p2 - p0).cross(p3 - p1);
            nrm.try_normalize()
                .map(|u| (p1 - p0).dot(u).abs() < T::lit(1e-12))
                .unwrap_or(false)
        };
        for (i, tri) in tris.iter().enumerate() {
            let pts = tri.map(|(v, _)| out.positions[v as usize]);
            if triangle_area(pts[0], pts[1], pts[2]).as_f64() < MIN_TRIANGLE_AREA {
                return Err(BoxModelError::SelfIntersection {
                    vertex: a,
                    reason: format!("rim of edge ({a}, {b}) collapses"),
                });
            }
            out.triangles.push(tri.map(|(v, _)| v));
            out.uv.push(tri.map(|(_, uv)| uv));
            out.face_ids.push(next_face);
            if !planar || i == 1 {
                next_face += 1;
            }
        }
    }
    out.compute_normals();
    out.validate()?;
    Ok(out)
}

fn outer<T: Real>(m: Vec3<T>) -> Mat3<T> {
    Mat3::from_rows([
        [m.x * m.x, m.x * m.y, m.x * m.z],
        [m.y * m.x, m.y * m.y, m.y * m.z],
        [m.z * m.x, m.z * m.y, m.z * m.z],
    ])
}

/// UVs of the inner rim edge: the outer edge pushed `thickness` away from
/// the chart interior, which lies to the left of a counter-clockwise edge.
fn rim_uv<T: Real>(ua: Vec2<T>, ub: Vec2<T>, thickness: T) -> (Vec2<T>, Vec2<T>) {
    let d = ub - ua;
    let len = d.norm();
    if len <= T::zero() {
        return (ua, ub);
    }
    let right = Vec2::new(d.y, -d.x).scale(thickness / len);
    (ua + right, ub + right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxmodel::{build_shell, BoxParams};
    use crate::mesh::test_meshes::{unit_cube, unit_quad};

    #[test]
    fn quad_becomes_slab() {
        let out = solidify(&unit_quad(), 0.01).unwrap();
        let ext = out.aabb().extents();
        assert!((ext.x - 1.0).abs() < 1e-15 && (ext.y - 1.0).abs() < 1e-15);
        assert!((ext.z - 0.01).abs() < 1e-15);
        assert!(out.topology().is_closed_manifold());
        assert!((out.signed_volume() - 0.01).abs() < 1e-12);
    }

    #[test]
    fn open_box_becomes_sphere() {
        let p = BoxParams::open_box(Vec3::new(0.3, 0.3, 0.2));
        let out = solidify(&build_shell(&p).unwrap(), 0.003).unwrap();
        let topo = out.topology();
        assert!(topo.is_closed_manifold(), "{topo:?}");
        assert_eq!(topo.euler_characteristic(), 2);
        assert!(out.signed_volume() > 0.0);
        // Inner cavity is the outer box shrunk by the thickness.
        let body: f64 = 0.3 * 0.3 * 0.2;
        let cavity = 0.294 * 0.294 * 0.197;
        assert!((out.signed_volume() - (body - cavity)).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_positive_thickness() {
        assert!(matches!(
            solidify(&unit_quad(), 0.0),
            Err(BoxModelError::NonPositiveThickness(_))
        ));
    }

    #[test]
    fn closed_input_has_no_rim() {
        // A closed cube offsets inward into a hollow cube: two components.
        let out = solidify(&unit_cube(), 0.1).unwrap();
        assert_eq!(out.triangle_count(), 24);
        assert!((out.signed_volume() - (1.0 - 0.8f64.powi(3))).abs() < 1e-12);
    }

    #[test]
    fn thick_offset_on_sharp_fold_rejected() {
        // Two triangles folded almost flat onto each other.
        let a: f64 = 0.05;
        let positions = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(a.cos(), 0.5, a.sin()),
        ];
        let mesh = TriMesh::new(positions, vec![[0, 2, 1], [0, 1, 3]]).unwrap();
        let err = solidify(&mesh, 0.01).unwrap_err();
        assert!(matches!(err, BoxModelError::SelfIntersection { .. }), "{err:?}");
    }
}
