//! On-disk samples, ground truth and whole-dataset generation.
//!
//! A dataset directory holds `manifest.json` and one `sample_{i:06}/`
//! directory per sample with `cloud.spcd` and `meta.json`.

mod generate;
pub mod spcd;

pub use generate::{generate_dataset, generate_sample, GenerateOptions};

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boxmodel::{BoxModelError, BoxParams};
use crate::linalg::{Mat3, Vec3};
use crate::sampling::{ConfigError, GenerationConfig, RigidPose};
use crate::scanner::{ScanError, StructuredCloud};

pub const CLOUD_FILE: &str = "cloud.spcd";
pub const META_FILE: &str = "meta.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = concat!("boxscan ", env!("CARGO_PKG_VERSION"));
pub const VOLUME_BOX_DEFINITION: &str = "outer cuboid of the box body (base and walls, flaps excluded) in world \
     coordinates: center = box_pose * (0, 0, size_z / 2), half_extents = size / 2, rotation = box_pose rotation";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}: bad magic {found:?}, expected \"SPCD\"")]
    BadMagic { path: String, found: [u8; 4] },
    #[error("{path}: unsupported format version {version}")]
    UnsupportedVersion { path: String, version: u8 },
    #[error("{path}: truncated, expected {expected} bytes, found {actual}")]
    Truncated { path: String, expected: u64, actual: u64 },
    #[error("{path}: header says {width}x{height} but payload has {payload_bytes} bytes")]
    DimensionMismatch {
        path: String,
        width: u32,
        height: u32,
        payload_bytes: u64,
    },
    #[error("{path}: malformed JSON: {reason}")]
    MalformedJson { path: String, reason: String },
    #[error("{path}: invalid sample record: {reason}")]
    InvalidRecord { path: String, reason: String },
    #[error("sample {index} missing from dataset at {path}")]
    MissingSample { index: u64, path: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("sample {index}: {source}")]
    Geometry {
        index: u64,
        #[source]
        source: BoxModelError,
    },
    #[error(transparent)]
    Scan(#[from] ScanError),
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Ground-truth box body: an oriented cuboid in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeBox {
    pub center: Vec3<f64>,
    pub half_extents: Vec3<f64>,
    /// Unit quaternion, `w >= 0`.
    pub rotation_wxyz: [f64; 4],
}

impl VolumeBox {
    pub fn rotation(&self) -> Mat3<f64> {
        Mat3::from_quaternion(self.rotation_wxyz)
    }

    /// Box-to-world pose of the cuboid's center.
    pub fn pose(&self) -> RigidPose<f64> {
        RigidPose::new(self.rotation(), self.center)
    }

    /// Whether world point `p` lies inside the cuboid grown by `margin` on
    /// every side.
    pub fn contains(&self, p: Vec3<f64>, margin: f64) -> bool {
        let local = self.rotation().transpose() * (p - self.center);
        (0..3).all(|k| local[k].abs() <= self.half_extents[k] + margin)
    }
}

/// Volume box of the body for a box placed at `box_pose`.
pub fn ground_truth_volume_box(params: &BoxParams<f64>, box_pose: &RigidPose<f64>) -> VolumeBox {
    VolumeBox {
        center: box_pose.transform_point(Vec3::new(0.0, 0.0, params.size.z / 2.0)),
        half_extents: params.size.scale(0.5),
        rotation_wxyz: box_pose.rotation.to_quaternion(),
    }
}

/// Everything stored for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub cloud: StructuredCloud<f32>,
    pub camera_to_world: RigidPose<f64>,
    pub volume_box: VolumeBox,
    pub box_params: BoxParams<f64>,
    pub sample_index: u64,
    pub master_seed: u64,
}

/// Contents of `meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    /// Row-major 4x4.
    pub camera_to_world: [f64; 16],
    pub volume_box: VolumeBox,
    pub box_params: BoxParams<f64>,
    pub sample_index: u64,
    pub master_seed: u64,
}

impl SampleRecord {
    pub fn meta(&self) -> SampleMeta {
        SampleMeta {
            camera_to_world: self.camera_to_world.to_matrix4(),
            volume_box: self.volume_box,
            box_params: self.box_params.clone(),
            sample_index: self.sample_index,
            master_seed: self.master_seed,
        }
    }
}

/// `sample_000042` for index 42.
pub fn sample_dir_name(index: u64) -> String {
    format!("sample_{index:06}")
}

pub fn sample_dir(root: &Path, index: u64) -> PathBuf {
    root.join(sample_dir_name(index))
}

/// Writes `bytes` to `path` through a temporary file and a rename, so a
/// reader never sees a partial file.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), DatasetError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub(crate) fn to_json_bytes<S: Serialize>(value: &S) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("in-memory JSON serialization");
    bytes.push(b'\n');
    bytes
}

/// Writes `cloud.spcd` and then `meta.json` into `dir`, creating it. The
/// metadata file is written last, so its presence marks a complete sample.
pub fn write_sample(dir: &Path, rec: &SampleRecord) -> Result<(), DatasetError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_atomic(&dir.join(CLOUD_FILE), &spcd::encode(&rec.cloud))?;
    write_atomic(&dir.join(META_FILE), &to_json_bytes(&rec.meta()))
}

pub fn read_cloud(path: &Path) -> Result<StructuredCloud<f32>, DatasetError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    spcd::decode(&bytes, path)
}

pub fn read_meta(dir: &Path) -> Result<SampleMeta, DatasetError> {
    let path = dir.join(META_FILE);
    read_json(&path)
}

pub(crate) fn read_json<D: serde::de::DeserializeOwned>(path: &Path) -> Result<D, DatasetError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    serde_json::from_slice(&bytes).map_err(|e| DatasetError::MalformedJson {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

/// Exact inverse of [`write_sample`].
pub fn read_sample(dir: &Path) -> Result<SampleRecord, DatasetError> {
    let cloud = read_cloud(&dir.join(CLOUD_FILE))?;
    let meta = read_meta(dir)?;
    let invalid = |reason: String| DatasetError::InvalidRecord {
        path: dir.join(META_FILE).display().to_string(),
        reason,
    };
    let camera_to_world = RigidPose::from_matrix4(&meta.camera_to_world, 1e-9)
        .map_err(|e| invalid(format!("camera_to_world: {e}")))?;
    let q = meta.volume_box.rotation_wxyz;
    let qn = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !((qn - 1.0).abs() <= 1e-9) {
        return Err(invalid(format!("volume box quaternion has norm {qn}")));
    }
    if !(0..3).all(|k| meta.volume_box.half_extents[k] > 0.0) {
        return Err(invalid("volume box half extents must be positive".into()));
    }
    Ok(SampleRecord {
        cloud,
        camera_to_world,
        volume_box: meta.volume_box,
        box_params: meta.box_params,
        sample_index: meta.sample_index,
        master_seed: meta.master_seed,
    })
}

/// Contents of `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub count: u64,
    pub config: GenerationConfig,
    pub tool_version: String,
    pub rng_id: String,
    pub format_version: u32,
    pub volume_box_definition: String,
}

pub fn read_manifest(root: &Path) -> Result<Manifest, DatasetError> {
    read_json(&root.join(MANIFEST_FILE))
}

/// Checks that every sample listed in the manifest is present, readable
/// and consistent with its index, the seed and the scanner resolution.
pub fn verify_dataset(root: &Path) -> Result<Manifest, DatasetError> {
    let manifest = read_manifest(root)?;
    let scanner = &manifest.config.scanner;
    for index in 0..manifest.count {
        let dir = sample_dir(root, index);
        if !dir.join(META_FILE).is_file() {
            return Err(DatasetError::MissingSample {
                index,
                path: root.display().to_string(),
            });
        }
        let rec = read_sample(&dir)?;
        let consistent = rec.sample_index == index
            && rec.master_seed == manifest.config.master_seed
            && rec.cloud.width == scanner.width
            && rec.cloud.height == scanner.height;
        if !consistent {
            return Err(DatasetError::InvalidRecord {
                path: dir.display().to_string(),
                reason: "index, seed or resolution disagrees with the manifest".into(),
            });
        }
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn record() -> SampleRecord {
        let params = BoxParams::default();
        let mut cloud = StructuredCloud::invalid(4, 3);
        cloud.points[5] = Vec3::new(0.125, -0.3, 1.2345678);
        cloud.points[6] = Vec3::new(1e-8, 0.0, 0.7);
        SampleRecord {
            cloud,
            camera_to_world: crate::sampling::camera_pose(Vec3::new(0.3, 0.5, 0.81).normalize(), 1.37),
            volume_box: ground_truth_volume_box(&params, &RigidPose::yaw(0.3)),
            box_params: params,
            sample_index: 7,
            master_seed: 42,
        }
    }

    #[test]
    fn volume_box_examples() {
        let p = BoxParams::open_box(Vec3::new(0.3, 0.3, 0.2));
        let vb = ground_truth_volume_box(&p, &RigidPose::identity());
        assert_eq!(vb.center, Vec3::new(0.0, 0.0, 0.1));
        assert_eq!(vb.half_extents, Vec3::new(0.15, 0.15, 0.1));
        assert_eq!(vb.rotation_wxyz, [1.0, 0.0, 0.0, 0.0]);

        let yawed = ground_truth_volume_box(&p, &RigidPose::yaw(FRAC_PI_2));
        assert_eq!(yawed.half_extents, vb.half_extents);
        assert!(yawed.rotation().max_abs_diff(&Mat3::rot_z(FRAC_PI_2)) < 1e-15);

        let flapped = BoxParams { flap_length: 0.2, ..p.clone() };
        assert_eq!(ground_truth_volume_box(&flapped, &RigidPose::identity()), vb);
    }

    #[test]
    fn sample_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rec = record();
        write_sample(dir.path(), &rec).unwrap();
        let back = read_sample(dir.path()).unwrap();
        assert_eq!(back.camera_to_world, rec.camera_to_world);
        assert_eq!(back.volume_box, rec.volume_box);
        assert_eq!(back.box_params, rec.box_params);
        assert_eq!((back.sample_index, back.master_seed), (7, 42));
        let bits = |c: &StructuredCloud<f32>| -> Vec<u32> {
            c.points.iter().flat_map(|p| [p.x, p.y, p.z].map(f32::to_bits)).collect()
        };
        assert_eq!(bits(&back.cloud), bits(&rec.cloud));
    }

    #[test]
    fn rewrite_is_byte_identical() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        write_sample(a.path(), &record()).unwrap();
        write_sample(b.path(), &record()).unwrap();
        for f in [CLOUD_FILE, META_FILE] {
            assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
        }
        assert!(!a.path().join("meta.json.tmp").exists());
    }

    #[test]
    fn malformed_meta_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_sample(dir.path(), &record()).unwrap();
        fs::write(dir.path().join(META_FILE), b"{\"camera_to_world\": [1, 2").unwrap();
        assert!(matches!(read_sample(dir.path()), Err(DatasetError::MalformedJson { .. })));
    }

    #[test]
    fn missing_files_name_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let err = read_sample(dir.path()).unwrap_err();
        assert!(err.to_string().contains(CLOUD_FILE), "{err}");
    }

    #[test]
    fn dilated_containment() {
        let vb = ground_truth_volume_box(&BoxParams::open_box(Vec3::new(0.2, 0.4, 0.2)), &RigidPose::yaw(FRAC_PI_2));
        // Yawed by 90 degrees the long side lies along world X.
        assert!(vb.contains(Vec3::new(0.19, 0.0, 0.1), 0.0));
        assert!(!vb.contains(Vec3::new(0.0, 0.19, 0.1), 0.0));
        assert!(vb.contains(Vec3::new(0.0, 0.19, 0.1), 0.1));
    }
}
