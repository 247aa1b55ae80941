//! Synthetic cardboard-box scans.
//!
//! The crate builds a parametric cardboard box mesh, scans it with a
//! simulated pinhole structured-light scanner and writes organized point
//! clouds together with the 6D ground truth of the box body. A small
//! evaluator implements the translation and rotation error metrics used to
//! score pose predictions against such datasets.
//!
//! Geometry is generic over the scalar type ([`Real`]); the aliases below
//! fix it to `f64`, which the dataset pipeline uses throughout.

pub mod boxmodel;
pub mod dataset;
pub mod linalg;
pub mod mesh;
pub mod metrics;
pub mod sampling;
pub mod scalar;
pub mod scanner;

pub use boxmodel::{build_box, BoxModelError, BoxParams};
pub use linalg::{Mat3, Vec2, Vec3};
pub use sampling::{GenerationConfig, RigidPose};
pub use scalar::Real;

pub type Mesh = mesh::TriMesh<f64>;
pub type Mesh32 = mesh::TriMesh<f32>;
