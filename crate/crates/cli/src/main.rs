use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use anyhow::{Context, Result};
use boxscan::dataset::{generate_dataset, read_sample, GenerateOptions};
use boxscan::mesh::{write_obj, Aabb};
use boxscan::metrics::{box_symmetry, evaluate, parse_predictions};
use boxscan::{build_box, BoxParams, GenerationConfig, Vec3};
use clap::{Parser, Subcommand};

/// Synthetic cardboard-box scan datasets.
#[derive(Parser)]
#[command(name = "boxscan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset of scanned boxes.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        count: u64,
        /// Overrides the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long)]
        threads: Option<usize>,
        /// Keep samples that are already complete.
        #[arg(long)]
        resume: bool,
    },
    /// Score pose predictions against a dataset's ground truth.
    Evaluate {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Print the summary as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Describe one sample directory.
    Inspect {
        #[arg(long)]
        sample: PathBuf,
    },
    /// Build a box from a parameter file and write it as OBJ.
    ExportMesh {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate {
            config,
            out,
            count,
            seed,
            threads,
            resume,
        } => generate(&config, &out, count, seed, threads, resume),
        Command::Evaluate { gt, pred, json } => run_evaluate(&gt, &pred, json),
        Command::Inspect { sample } => inspect(&sample),
        Command::ExportMesh { params, out } => export_mesh(&params, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn generate(
    config: &Path,
    out: &Path,
    count: u64,
    seed: Option<u64>,
    threads: Option<usize>,
    resume: bool,
) -> Result<()> {
    let mut cfg = GenerationConfig::load(config)?;
    if let Some(seed) = seed {
        cfg.master_seed = seed;
    }
    let done = AtomicU64::new(0);
    let skipped = AtomicU64::new(0);
    let console = Mutex::new(());
    let step = (count / 20).max(1);
    let progress = |_index: u64, skip: bool| {
        if skip {
            skipped.fetch_add(1, Ordering::Relaxed);
        }
        let n = done.fetch_add(1, Ordering::Relaxed) + 1;
        if n % step == 0 || n == count {
            let _guard = console.lock().unwrap_or_else(|e| e.into_inner());
            eprintln!("{n}/{count} samples");
        }
    };
    let opts = GenerateOptions {
        threads,
        resume,
        on_sample: Some(&progress),
    };
    let manifest = generate_dataset(&cfg, out, count, &opts)?;
    println!(
        "wrote {} samples to {} (seed {}, {} reused)",
        manifest.count,
        out.display(),
        manifest.config.master_seed,
        skipped.into_inner()
    );
    Ok(())
}

fn run_evaluate(gt: &Path, pred: &Path, json: bool) -> Result<()> {
    let text = fs::read_to_string(pred).with_context(|| format!("cannot read predictions {}", pred.display()))?;
    let predictions = parse_predictions(&text)?;
    let summary = evaluate(&predictions, gt, &box_symmetry())?;
    if json {
        println!("{}", serde_json::to_string_pretty(&summary)?);
    } else {
        print!("{}", summary.table());
    }
    Ok(())
}

fn inspect(sample: &Path) -> Result<()> {
    let rec = read_sample(sample)?;
    let cloud = &rec.cloud;
    let valid = cloud.valid_count();
    let total = cloud.points.len();
    println!("sample       {} (seed {})", rec.sample_index, rec.master_seed);
    println!("resolution   {}x{}", cloud.width, cloud.height);
    println!("valid        {valid}/{total} ({:.4})", valid as f64 / total.max(1) as f64);
    let points: Vec<Vec3<f64>> = (0..total)
        .filter(|&i| cloud.is_valid(i))
        .map(|i| cloud.points[i].cast())
        .collect();
    if points.is_empty() {
        println!("points aabb  none");
    } else {
        let b = Aabb::from_points(&points);
        println!("points aabb  min {} max {} (camera frame, m)", fmt3(b.min), fmt3(b.max));
    }
    let p = &rec.box_params;
    println!("box size     {} m", fmt3(p.size));
    println!(
        "flaps        length {:.4} m, taper {:.4} m, open [{:.3}, {:.3}, {:.3}, {:.3}] rad",
        p.flap_length, p.flap_taper, p.open[0], p.open[1], p.open[2], p.open[3]
    );
    println!(
        "material     thickness {:.4} m, bevel {:.4} m x {} segments",
        p.thickness, p.bevel_radius, p.bevel_segments
    );
    let vb = &rec.volume_box;
    let q = vb.rotation_wxyz;
    println!(
        "volume box   center {} half {} q [{:.6}, {:.6}, {:.6}, {:.6}]",
        fmt3(vb.center),
        fmt3(vb.half_extents),
        q[0],
        q[1],
        q[2],
        q[3]
    );
    Ok(())
}

fn fmt3(v: Vec3<f64>) -> String {
    format!("[{:.4}, {:.4}, {:.4}]", v.x, v.y, v.z)
}

fn export_mesh(params: &Path, out: &Path) -> Result<()> {
    let text = fs::read_to_string(params).with_context(|| format!("cannot read params {}", params.display()))?;
    let params: BoxParams<f64> =
        serde_json::from_str(&text).with_context(|| format!("malformed params {}", params.display()))?;
    let mesh = build_box(&params)?;
    let file = fs::File::create(out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut w = BufWriter::new(file);
    write_obj(&mesh, &mut w).and_then(|()| w.flush())
        .with_context(|| format!("cannot write {}", out.display()))?;
    println!(
        "wrote {} ({} vertices, {} triangles)",
        out.display(),
        mesh.vertex_count(),
        mesh.triangle_count()
    );
    Ok(())
}
