//! Seeded randomization of box parameters and scanner poses.
//!
//! Every sample draws from its own ChaCha20 stream, derived from the
//! master seed and the sample index alone, so a dataset does not depend on
//! how samples are scheduled across threads. Within a stream the draw
//! order is fixed: box parameters, camera direction, camera distance,
//! optional box yaw, then scanner noise.

mod config;
mod pose;

pub use config::{ConfigError, GenerationConfig, ParamSpec, ScannerConfig};
pub use pose::{look_at, rotation_deviation, PoseError, RigidPose};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal, UnitSphere};

use crate::boxmodel::BoxParams;
use crate::linalg::Vec3;

/// Per-sample random stream.
pub type SampleRng = ChaCha20Rng;

/// Identifies the stream derivation; recorded in dataset manifests.
pub const RNG_ID: &str = "chacha20 (rand_chacha 0.9.0): seed_from_u64(master_seed), set_stream(sample_index)";

/// The stream for `sample_index`: a ChaCha20 key expanded from
/// `master_seed` and the sample index as the 64-bit stream id. Streams of
/// different indices share no keystream.
pub fn derive_stream(master_seed: u64, sample_index: u64) -> SampleRng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream(sample_index);
    rng
}

/// Applies the clamp of a spec to a raw Gaussian draw.
pub fn truncate_draw(spec: &ParamSpec, draw: f64) -> f64 {
    let h = spec.half_width();
    spec.base + draw.clamp(-h, h)
}

/// `base + clamp(N(mu, sigma²), -sigma·gamma, sigma·gamma)`.
pub fn sample_truncated<R: Rng + ?Sized>(rng: &mut R, spec: &ParamSpec) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    truncate_draw(spec, spec.mu + spec.sigma * z)
}

pub fn sample_box_params<R: Rng + ?Sized>(rng: &mut R, cfg: &GenerationConfig) -> BoxParams<f64> {
    let size_x = sample_truncated(rng, &cfg.size_x);
    let size_y = sample_truncated(rng, &cfg.size_y);
    let size_z = sample_truncated(rng, &cfg.size_z);
    let flap_length = sample_truncated(rng, &cfg.flap_length);
    let flap_taper = sample_truncated(rng, &cfg.flap_taper);
    let mut open = [0.0; 4];
    for angle in &mut open {
        *angle = sample_truncated(rng, &cfg.open).clamp(0.0, std::f64::consts::PI);
    }
    let thickness = sample_truncated(rng, &cfg.thickness);
    let bevel_radius = sample_truncated(rng, &cfg.bevel_radius);
    BoxParams {
        size: Vec3::new(size_x, size_y, size_z),
        flap_length,
        flap_taper,
        open,
        thickness,
        bevel_radius,
        bevel_segments: cfg.bevel_segments,
    }
}

/// Uniform unit vector in the non-negative octant: a uniform sphere
/// sample folded by component-wise absolute value.
pub fn sample_octant_direction<R: Rng + ?Sized>(rng: &mut R) -> Vec3<f64> {
    let [x, y, z]: [f64; 3] = UnitSphere.sample(rng);
    Vec3::new(x.abs(), y.abs(), z.abs())
}

/// Camera at `direction * distance` looking at the world origin with +Z up.
pub fn camera_pose(direction: Vec3<f64>, distance: f64) -> RigidPose<f64> {
    look_at(direction.scale(distance), Vec3::zero(), Vec3::unit_z())
        .expect("camera distance is positive")
}

pub fn sample_camera_pose<R: Rng + ?Sized>(rng: &mut R, cfg: &GenerationConfig) -> RigidPose<f64> {
    let direction = sample_octant_direction(rng);
    let distance = rng.random_range(cfg.camera_distance_min..cfg.camera_distance_max);
    camera_pose(direction, distance)
}

/// Random quantities of one sample, before any geometry is built.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneDraw {
    pub params: BoxParams<f64>,
    pub camera_to_world: RigidPose<f64>,
    /// Box-to-world pose; identity unless yaw randomization is enabled.
    pub box_pose: RigidPose<f64>,
}

/// Draws one scene. `rng` is left positioned for the scanner noise draws.
pub fn sample_scene<R: Rng + ?Sized>(rng: &mut R, cfg: &GenerationConfig) -> SceneDraw {
    let params = sample_box_params(rng, cfg);
    let camera_to_world = sample_camera_pose(rng, cfg);
    let box_pose = if cfg.randomize_yaw {
        RigidPose::yaw(rng.random_range(0.0..std::f64::consts::TAU))
    } else {
        RigidPose::identity()
    };
    SceneDraw {
        params,
        camera_to_world,
        box_pose,
    }
}
