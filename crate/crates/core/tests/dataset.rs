use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use boxscan::dataset::{
    generate_dataset, generate_sample, read_manifest, read_sample, sample_dir, spcd, verify_dataset, write_sample,
    DatasetError, GenerateOptions, CLOUD_FILE, META_FILE,
};
use boxscan::sampling::{GenerationConfig, ScannerConfig};
use boxscan::scanner::StructuredCloud;
use boxscan::Vec3;
use proptest::prelude::*;

fn config(seed: u64, w: u32, h: u32) -> GenerationConfig {
    GenerationConfig {
        master_seed: seed,
        scanner: ScannerConfig {
            width: w,
            height: h,
            ..ScannerConfig::default()
        },
        ..GenerationConfig::default()
    }
}

/// Every file under `root`, keyed by relative path.
fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn thread_count_does_not_change_bytes() {
    let cfg = config(42, 48, 36);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let one = GenerateOptions { threads: Some(1), ..Default::default() };
    let eight = GenerateOptions { threads: Some(8), ..Default::default() };
    generate_dataset(&cfg, a.path(), 6, &one).unwrap();
    generate_dataset(&cfg, b.path(), 6, &eight).unwrap();
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    assert_eq!(ta.len(), 6 * 2 + 1);
    assert_eq!(ta, tb);
}

#[test]
fn resume_over_complete_dataset_changes_nothing() {
    let cfg = config(4, 24, 16);
    let dir = tempfile::tempdir().unwrap();
    generate_dataset(&cfg, dir.path(), 4, &GenerateOptions::default()).unwrap();
    let before = tree(dir.path());
    let opts = GenerateOptions { resume: true, ..Default::default() };
    generate_dataset(&cfg, dir.path(), 4, &opts).unwrap();
    assert_eq!(tree(dir.path()), before);
}

#[test]
fn resume_regenerates_stale_samples() {
    let dir = tempfile::tempdir().unwrap();
    generate_dataset(&config(4, 24, 16), dir.path(), 2, &GenerateOptions::default()).unwrap();
    let opts = GenerateOptions { resume: true, ..Default::default() };
    generate_dataset(&config(5, 24, 16), dir.path(), 2, &opts).unwrap();
    assert_eq!(read_sample(&sample_dir(dir.path(), 1)).unwrap().master_seed, 5);
}

#[test]
fn missing_and_corrupt_samples_detected() {
    let dir = tempfile::tempdir().unwrap();
    generate_dataset(&config(6, 8, 8), dir.path(), 3, &GenerateOptions::default()).unwrap();
    fs::remove_dir_all(sample_dir(dir.path(), 1)).unwrap();
    assert!(matches!(verify_dataset(dir.path()), Err(DatasetError::MissingSample { index: 1, .. })));

    let cloud = sample_dir(dir.path(), 2).join(CLOUD_FILE);
    let bytes = fs::read(&cloud).unwrap();
    fs::write(&cloud, &bytes[..bytes.len() - 4]).unwrap();
    let err = read_sample(&sample_dir(dir.path(), 2)).unwrap_err();
    assert!(matches!(err, DatasetError::Truncated { .. }));
    assert!(err.to_string().contains("cloud.spcd"));
}

#[test]
fn manifest_records_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(11, 8, 8);
    generate_dataset(&cfg, dir.path(), 2, &GenerateOptions::default()).unwrap();
    let m = read_manifest(dir.path()).unwrap();
    assert_eq!(m.count, 2);
    assert_eq!(m.config, cfg);
    assert_eq!(m.format_version, 1);
    assert!(m.rng_id.contains("chacha20"));
    assert!(m.tool_version.starts_with("boxscan "));
    assert!(m.volume_box_definition.contains("flaps excluded"));
    let raw: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    for key in ["count", "config", "tool_version", "rng_id", "format_version"] {
        assert!(raw.get(key).is_some(), "{key}");
    }
    let meta: serde_json::Value =
        serde_json::from_slice(&fs::read(sample_dir(dir.path(), 0).join(META_FILE)).unwrap()).unwrap();
    for key in ["camera_to_world", "volume_box", "box_params", "sample_index", "master_seed"] {
        assert!(meta.get(key).is_some(), "{key}");
    }
    assert_eq!(meta["camera_to_world"].as_array().unwrap().len(), 16);
    for key in ["center", "half_extents", "rotation_wxyz"] {
        assert!(meta["volume_box"].get(key).is_some(), "{key}");
    }
}

#[test]
fn points_stay_near_the_volume_box() {
    for yaw in [false, true] {
        let cfg = GenerationConfig { randomize_yaw: yaw, ..config(12, 64, 48) };
        for i in 0..6 {
            let rec = generate_sample(&cfg, i).unwrap();
            let p = &rec.box_params;
            let margin = p.flap_length + p.bevel_radius + 0.001;
            assert!(rec.cloud.valid_count() > 0);
            for (k, q) in rec.cloud.points.iter().enumerate() {
                if rec.cloud.is_valid(k) {
                    let world = rec.camera_to_world.transform_point(q.cast());
                    assert!(rec.volume_box.contains(world, margin), "sample {i} point {world:?}");
                    assert!(q.z > 0.0);
                }
            }
        }
    }
}

#[test]
fn noise_and_projector_are_seeded() {
    let mut cfg = config(13, 32, 24);
    cfg.scanner.noise_std = 0.0005;
    cfg.scanner.projector_offset = Some([0.1, 0.0, 0.0]);
    let a = generate_sample(&cfg, 2).unwrap();
    // NaN != NaN, so compare the encoded bytes.
    assert_eq!(spcd::encode(&a.cloud), spcd::encode(&generate_sample(&cfg, 2).unwrap().cloud));
    let clean = generate_sample(&config(13, 32, 24), 2).unwrap();
    assert!(a.cloud.valid_count() <= clean.cloud.valid_count());
    assert_ne!(spcd::encode(&a.cloud), spcd::encode(&clean.cloud));
    // Noise never affects the ground truth or the draws before it.
    assert_eq!(a.box_params, clean.box_params);
    assert_eq!(a.volume_box, clean.volume_box);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn records_round_trip_bitwise(
        w in 1u32..6, h in 1u32..6,
        bits in prop::collection::vec(any::<u32>(), 0..200),
        index in any::<u64>(), seed in any::<u64>(),
    ) {
        let mut rec = generate_sample(&config(seed, 1, 1), 0).unwrap();
        let mut cloud = StructuredCloud::invalid(w, h);
        for (k, p) in cloud.points.iter_mut().enumerate() {
            let f = |j: usize| bits.get(3 * k + j).map_or(f32::NAN, |b| {
                let v = f32::from_bits(*b);
                if v.is_nan() { f32::NAN } else { v }
            });
            *p = Vec3::new(f(0), f(1), f(2));
        }
        rec.cloud = cloud;
        rec.sample_index = index;
        let dir = tempfile::tempdir().unwrap();
        write_sample(dir.path(), &rec).unwrap();
        let back = read_sample(dir.path()).unwrap();
        let raw = |c: &StructuredCloud<f32>| -> Vec<u32> {
            c.points.iter().flat_map(|p| [p.x, p.y, p.z].map(f32::to_bits)).collect()
        };
        prop_assert_eq!(raw(&back.cloud), raw(&rec.cloud));
        prop_assert_eq!(back.camera_to_world, rec.camera_to_world);
        prop_assert_eq!(back.volume_box, rec.volume_box);
        prop_assert_eq!(back.box_params, rec.box_params);
        prop_assert_eq!((back.sample_index, back.master_seed), (index, seed));
        let bytes = fs::read(dir.path().join(CLOUD_FILE)).unwrap();
        prop_assert_eq!(bytes.len(), spcd::HEADER_LEN + (w * h * 12) as usize);
    }
}
