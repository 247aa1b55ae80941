//! Zero-thickness construction of the box: base, four extruded walls and
//! four rotated flaps.

use super::{BoxModelError, BoxParams};
use crate::linalg::Vec3;
use crate::mesh::{Polygon, TriMesh};
use crate::scalar::Real;

/// Face id of the base panel.
pub const BASE_FACE: u32 = 0;
/// Face id of wall `i` is `WALL_FACE + i`.
pub const WALL_FACE: u32 = 1;
/// Face id of flap `i` is `FLAP_FACE + i`.
pub const FLAP_FACE: u32 = 5;

/// Flap tips narrower than this collapse into a single point.
const MIN_TIP_HALF_WIDTH: f64 = 1e-6;

/// Geometry of one side of the box, shared by shell construction and UV
/// unfolding.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Side<T> {
    /// Base corner where the side starts (counter-clockwise from above).
    pub start: Vec3<T>,
    /// Unit direction along the side.
    pub along: Vec3<T>,
    /// Unit outward wall normal.
    pub outward: Vec3<T>,
    pub length: T,
    /// Unit direction from hinge toward flap tip.
    pub flap_dir: Vec3<T>,
}

/// Base corners, counter-clockwise seen from above.
pub(crate) fn base_corners<T: Real>(size: Vec3<T>) -> [Vec3<T>; 4] {
    let hx = size.x * T::half();
    let hy = size.y * T::half();
    let z = T::zero();
    [
        Vec3::new(-hx, -hy, z),
        Vec3::new(hx, -hy, z),
        Vec3::new(hx, hy, z),
        Vec3::new(-hx, hy, z),
    ]
}

pub(crate) fn sides<T: Real>(p: &BoxParams<T>) -> [Side<T>; 4] {
    let b = base_corners(p.size);
    std::array::from_fn(|i| {
        let start = b[i];
        let delta = b[(i + 1) % 4] - start;
        let length = delta.norm();
        let along = delta.scale(T::one() / length);
        let outward = along.cross(Vec3::unit_z());
        let (sin, cos) = p.open[i].sin_cos();
        let flap_dir = Vec3::unit_z().scale(cos) + outward.scale(sin);
        Side {
            start,
            along,
            outward,
            length,
            flap_dir,
        }
    })
}

/// Box edges rounded by the bevel stage: the four vertical wall edges and
/// the base perimeter. Flap hinges and tips stay sharp.
pub fn crease_edges() -> Vec<[u32; 2]> {
    let mut edges = Vec::with_capacity(8);
    for i in 0..4u32 {
        edges.push([i, (i + 1) % 4]);
        edges.push([i, 4 + i]);
    }
    edges
}

/// Builds the zero-thickness shell: the base in the plane z = 0 centered on
/// the origin, walls extruded up by `size.z`, and flaps extruded from the
/// wall tops by `flap_length`, tapered and rotated outward about their
/// hinges. All faces are wound counter-clockwise seen from outside.
///
/// Vertices 0..4 are the base corners and 4..8 the wall-top corners. Face
/// ids follow [`BASE_FACE`], [`WALL_FACE`] and [`FLAP_FACE`]. UVs are left
/// at zero; see [`super::unwrap_uv`].
pub fn build_shell<T: Real>(params: &BoxParams<T>) -> Result<TriMesh<T>, BoxModelError> {
    params.validate()?;
    let sz = params.size.z;
    let up = Vec3::unit_z().scale(sz);
    let base = base_corners(params.size);
    let sides = sides(params);

    let mut positions: Vec<Vec3<T>> = base.to_vec();
    positions.extend(base.iter().map(|b| *b + up));

    let mut polygons = vec![Polygon::without_uv(vec![0, 3, 2, 1])];
    let mut flaps = Vec::new();
    let inset = params.hinge_inset();

    for (i, side) in sides.iter().enumerate() {
        let (b0, b1) = (i as u32, ((i + 1) % 4) as u32);
        let (t0, t1) = (b0 + 4, b1 + 4);
        let mut wall = vec![b0, b1, t1];
        if params.has_flaps() {
            let half_hinge = side.length * T::half() - inset;
            if half_hinge <= T::lit(MIN_TIP_HALF_WIDTH) {
                return Err(BoxModelError::InvalidParams {
                    field: "thickness",
                    reason: format!(
                        "flap hinge on wall {i} vanishes: thickness plus bevel ({}) leaves no room on a {} m side",
                        inset, side.length
                    ),
                });
            }
            let (h0, h1) = if inset > T::zero() {
                let mid = positions[t0 as usize].lerp(positions[t1 as usize], T::half());
                let h0 = positions.len() as u32;
                positions.push(mid - side.along.scale(half_hinge));
                positions.push(mid + side.along.scale(half_hinge));
                wall.extend([h0 + 1, h0]);
                (h0, h0 + 1)
            } else {
                (t0, t1)
            };
            let hinge_mid = positions[h0 as usize].lerp(positions[h1 as usize], T::half());
            let tip_mid = hinge_mid + side.flap_dir.scale(params.flap_length);
            let half_tip = half_hinge - params.flap_taper;
            let mut flap = vec![h0, h1];
            if half_tip >= T::lit(MIN_TIP_HALF_WIDTH) {
                let k = positions.len() as u32;
                positions.push(tip_mid + side.along.scale(half_tip));
                positions.push(tip_mid - side.along.scale(half_tip));
                flap.extend([k, k + 1]);
            } else {
                flap.push(positions.len() as u32);
                positions.push(tip_mid);
            }
            flaps.push(Polygon::without_uv(flap));
        }
        wall.push(t0);
        polygons.push(Polygon::without_uv(wall));
    }
    polygons.extend(flaps);
    let mut mesh = TriMesh::from_polygons(positions, &polygons)?;
    mesh.compute_normals();
    Ok(mesh)
}
