use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::{
    ground_truth_volume_box, io_err, read_sample, sample_dir, to_json_bytes, write_atomic, write_sample, DatasetError,
    Manifest, SampleRecord, FORMAT_VERSION, MANIFEST_FILE, META_FILE, TOOL_VERSION, VOLUME_BOX_DEFINITION,
};
use crate::boxmodel::build_box;
use crate::linalg::Vec3;
use crate::sampling::{derive_stream, sample_scene, GenerationConfig, RNG_ID};
use crate::scanner::{add_range_noise, projector_shadow_filter, scan_with, Bvh, Intrinsics};

/// Scheduling knobs; none of them changes the bytes written.
#[derive(Default)]
pub struct GenerateOptions<'a> {
    /// Worker threads; `None` uses the available parallelism.
    pub threads: Option<usize>,
    /// Keep samples that are already complete and match the config.
    pub resume: bool,
    /// Called once per sample with its index and whether it was skipped.
    pub on_sample: Option<&'a (dyn Fn(u64, bool) + Sync)>,
}

/// Produces sample `index` of the dataset described by `cfg`.
pub fn generate_sample(cfg: &GenerationConfig, index: u64) -> Result<SampleRecord, DatasetError> {
    let mut rng = derive_stream(cfg.master_seed, index);
    let draw = sample_scene(&mut rng, cfg);
    let body = build_box(&draw.params).map_err(|source| DatasetError::Geometry { index, source })?;
    let mesh = body.map_positions(|p| draw.box_pose.transform_point(p));
    let intr = Intrinsics::from_config(&cfg.scanner)?;
    let bvh = Bvh::build(&mesh)?;
    let mut cloud = scan_with(&bvh, &intr, &draw.camera_to_world);
    if let Some(offset) = cfg.scanner.projector_offset {
        let projector = draw.camera_to_world.transform_point(Vec3::from_f64(offset));
        cloud = projector_shadow_filter(&cloud, &bvh, &draw.camera_to_world, projector);
    }
    add_range_noise(&mut cloud, &mut rng, cfg.scanner.noise_std)?;
    Ok(SampleRecord {
        cloud: cloud.cast(),
        camera_to_world: draw.camera_to_world,
        volume_box: ground_truth_volume_box(&draw.params, &draw.box_pose),
        box_params: draw.params,
        sample_index: index,
        master_seed: cfg.master_seed,
    })
}

/// Whether `dir` already holds sample `index` exactly as `cfg` would
/// generate it. Only the cheap random draws are redone, not the scan.
fn is_complete(dir: &Path, cfg: &GenerationConfig, index: u64) -> bool {
    if !dir.join(META_FILE).is_file() {
        return false;
    }
    let Ok(rec) = read_sample(dir) else {
        return false;
    };
    let draw = sample_scene(&mut derive_stream(cfg.master_seed, index), cfg);
    rec.sample_index == index
        && rec.master_seed == cfg.master_seed
        && rec.box_params == draw.params
        && rec.camera_to_world == draw.camera_to_world
        && rec.volume_box == ground_truth_volume_box(&draw.params, &draw.box_pose)
        && rec.cloud.width == cfg.scanner.width
        && rec.cloud.height == cfg.scanner.height
}

/// Generates `count` samples into `out` and then writes the manifest.
///
/// Each sample depends only on the config, the master seed and its index,
/// so the output bytes are the same for any thread count. On failure the
/// error of the lowest failing index is returned and no manifest is
/// written.
pub fn generate_dataset(
    cfg: &GenerationConfig,
    out: &Path,
    count: u64,
    opts: &GenerateOptions,
) -> Result<Manifest, DatasetError> {
    cfg.validate()?;
    if count == 0 {
        return Err(crate::sampling::ConfigError::Invalid {
            field: "count".into(),
            reason: "must be at least 1".into(),
        }
        .into());
    }
    fs::create_dir_all(out).map_err(io_err(out))?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().expect("thread pool");
    let results: Vec<Result<(), DatasetError>> = pool.install(|| {
        (0..count)
            .into_par_iter()
            .map(|index| {
                let dir = sample_dir(out, index);
                let skip = opts.resume && is_complete(&dir, cfg, index);
                if !skip {
                    write_sample(&dir, &generate_sample(cfg, index)?)?;
                }
                if let Some(cb) = opts.on_sample {
                    cb(index, skip);
                }
                Ok(())
            })
            .collect()
    });
    results.into_iter().collect::<Result<(), _>>()?;

    let manifest = Manifest {
        count,
        config: cfg.clone(),
        tool_version: TOOL_VERSION.into(),
        rng_id: RNG_ID.into(),
        format_version: FORMAT_VERSION,
        volume_box_definition: VOLUME_BOX_DEFINITION.into(),
    };
    write_atomic(&out.join(MANIFEST_FILE), &to_json_bytes(&manifest))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{read_manifest, sample_dir_name, verify_dataset, CLOUD_FILE};
    use crate::sampling::ScannerConfig;

    fn small_config(seed: u64) -> GenerationConfig {
        GenerationConfig {
            master_seed: seed,
            scanner: ScannerConfig {
                width: 32,
                height: 24,
                ..ScannerConfig::default()
            },
            ..GenerationConfig::default()
        }
    }

    #[test]
    fn two_samples_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = generate_dataset(&small_config(7), dir.path(), 2, &GenerateOptions::default()).unwrap();
        assert_eq!(manifest.count, 2);
        for i in 0..2 {
            assert!(dir.path().join(sample_dir_name(i)).join(CLOUD_FILE).is_file());
        }
        assert_eq!(read_manifest(dir.path()).unwrap(), manifest);
        verify_dataset(dir.path()).unwrap();
    }

    #[test]
    fn generated_samples_see_the_box() {
        let cfg = small_config(3);
        for i in 0..4 {
            let rec = generate_sample(&cfg, i).unwrap();
            assert!(rec.cloud.valid_count() > 0, "sample {i} sees nothing");
        }
    }

    #[test]
    fn resume_skips_complete_samples() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(9);
        generate_dataset(&cfg, dir.path(), 3, &GenerateOptions::default()).unwrap();
        let skipped = std::sync::atomic::AtomicUsize::new(0);
        let cb = |_i: u64, skip: bool| {
            if skip {
                skipped.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
            }
        };
        fs::remove_file(sample_dir(dir.path(), 1).join(META_FILE)).unwrap();
        let opts = GenerateOptions {
            resume: true,
            on_sample: Some(&cb),
            ..Default::default()
        };
        generate_dataset(&cfg, dir.path(), 3, &opts).unwrap();
        assert_eq!(skipped.into_inner(), 2);
        verify_dataset(dir.path()).unwrap();
    }

    #[test]
    fn invalid_config_and_count_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_config(1);
        assert!(generate_dataset(&cfg, dir.path(), 0, &GenerateOptions::default()).is_err());
        cfg.camera_distance_min = 2.0;
        assert!(matches!(
            generate_dataset(&cfg, dir.path(), 1, &GenerateOptions::default()),
            Err(DatasetError::Config(_))
        ));
    }
}
