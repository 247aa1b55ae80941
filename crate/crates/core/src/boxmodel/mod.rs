//! Parametric cardboard box construction.
//!
//! [`build_box`] runs the full sequence: a zero-thickness shell of base,
//! walls and rotated flaps, an unfolded-sheet UV layout, rounded creases and
//! finally an inward offset into a closed solid.

mod bevel;
mod params;
mod shell;
mod solidify;
mod uv;

pub use bevel::{bevel_edges, bevel_selected};
pub use params::BoxParams;
pub use shell::{build_shell, crease_edges, BASE_FACE, FLAP_FACE, WALL_FACE};
pub use solidify::{solidify, MITER_LIMIT};
pub use uv::unwrap_uv;

use thiserror::Error;

use crate::mesh::{MeshError, TriMesh};
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum BoxModelError {
    #[error("invalid box parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },
    #[error("bevel radius {radius} too large near vertex {vertex}")]
    RadiusTooLarge { radius: f64, vertex: u32 },
    #[error("cannot bevel vertex {vertex}: {reason}")]
    UnsupportedBevel { vertex: u32, reason: String },
    #[error("edge ({0}, {1}) is not an interior crease between two faces")]
    EdgeNotBevelable(u32, u32),
    #[error("solidify thickness must be positive, got {0}")]
    NonPositiveThickness(f64),
    #[error("offset surface self-intersects near vertex {vertex}: {reason}")]
    SelfIntersection { vertex: u32, reason: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Builds the complete box mesh for `params`.
///
/// The result is a pure function of the parameters. With positive thickness
/// it is a closed, consistently wound 2-manifold whose outer surface spans
/// `params.size`; with zero thickness it is the open beveled shell.
pub fn build_box<T: Real>(params: &BoxParams<T>) -> Result<TriMesh<T>, BoxModelError> {
    let shell = build_shell(params)?;
    let mut mesh = unwrap_uv(params, &shell);
    let radius = params.outer_bevel_radius();
    if radius > T::zero() {
        mesh = bevel_selected(&mesh, &crease_edges(), radius, params.bevel_segments)?;
    }
    if params.thickness > T::zero() {
        mesh = solidify(&mesh, params.thickness)?;
    }
    mesh.compute_normals();
    Ok(mesh)
}
