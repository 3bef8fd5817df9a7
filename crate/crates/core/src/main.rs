//! `deform3d` command-line tool.
//!
//! Exit codes: 0 success, 1 check failed (gradcheck, validate), 2 bad input
//! or configuration, 3 mesh labels missing from the target image, 4 numerical
//! abort.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use deform3d::config::{apply_overrides, camera_from_entries, load_config, DeformConfig, Entries};
use deform3d::error::{Error, Result};
use deform3d::gradcheck::check_all;
use deform3d::imgproc::png::{depth_to_unit, read_metric_image, read_rgb, to_luma, write_mask, write_unit_gray};
use deform3d::imgproc::{mse, ssim};
use deform3d::losses::{BinarizeParams, Objective};
use deform3d::mesh::{load_obj_file, save_mtl, to_obj_string, validate, DisplacementField, Mesh, DEFAULT_LABEL};
use deform3d::optimizer::{csv_row, prepare_objective, run_objective, HistoryRow, ProgressSink, CSV_HEADER};
use deform3d::raster::{rasterize_depth, rasterize_soft, RasterConfig};
use deform3d::Camera;

#[derive(Parser)]
#[command(name = "deform3d", version, about = "Image-guided mesh deformation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Deform a mesh toward a semantic target image.
    Deform {
        #[arg(long)]
        config: PathBuf,
        /// `key=value` override, repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Render a mesh silhouette, its binarization, or its depth.
    Render {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = RenderMode::Soft)]
        mode: RenderMode,
        #[arg(long, default_value_t = 512)]
        width: usize,
        #[arg(long, default_value_t = 512)]
        height: usize,
        /// `camera_*=value` override, repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Print MSE and SSIM between two PNGs.
    Metrics {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Check analytic gradients against central differences.
    Gradcheck {
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// List mesh invariant violations.
    Validate {
        #[arg(long)]
        mesh: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RenderMode {
    Soft,
    Binary,
    Depth,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::UnmatchedLabels(_) => 3,
        Error::NonFinite { .. } | Error::ZeroDenominator | Error::BehindEye { .. } => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Some(n) = std::env::var("DEFORM3D_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Deform { config, overrides } => cmd_deform(&config, &overrides),
        Command::Render {
            mesh,
            out,
            mode,
            width,
            height,
            overrides,
        } => cmd_render(&mesh, &out, mode, width, height, &overrides),
        Command::Metrics { a, b } => cmd_metrics(&a, &b),
        Command::Gradcheck { tol, seed } => cmd_gradcheck(tol, seed),
        Command::Validate { mesh } => cmd_validate(&mesh),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Binarized render of every view with a target, as `<prefix>_<label>.png`.
fn write_view_renders(objective: &Objective, d: &DisplacementField, dir: &Path, prefix: &str) -> Result<()> {
    let b = objective.params.binarize;
    for (i, t) in objective.targets.iter().enumerate() {
        if t.mask.is_none() {
            continue;
        }
        let soft = objective.render_view(i, d)?;
        let unit = soft.values.map(|&s| b.unit_value(s).clamp(0.0, 1.0));
        let name = objective.source.label_name(t.view.label);
        write_unit_gray(&dir.join(format!("{prefix}_{name}.png")), &unit)?;
    }
    Ok(())
}

struct Checkpoints<'a> {
    dir: &'a Path,
    every: usize,
    mtllib: Option<&'a str>,
    csv: String,
}

impl ProgressSink for Checkpoints<'_> {
    fn on_iteration(&mut self, row: &HistoryRow, d: &DisplacementField, objective: &Objective) -> Result<()> {
        self.csv.push_str(&csv_row(row));
        if self.every > 0 && row.iteration > 0 && row.iteration.is_multiple_of(self.every) {
            let stem = format!("checkpoint_{:06}", row.iteration);
            let obj = to_obj_string(&objective.source, d, self.mtllib)?;
            write_file(&self.dir.join(format!("{stem}.obj")), &obj)?;
            write_view_renders(objective, d, self.dir, &stem)?;
            info!("checkpoint at iteration {}", row.iteration);
        }
        Ok(())
    }
}

fn has_materials(mesh: &Mesh) -> bool {
    mesh.label_table.keys().any(|&id| id != DEFAULT_LABEL)
}

fn cmd_deform(config: &Path, overrides: &[String]) -> Result<u8> {
    let DeformConfig { mesh, target, output, run } = load_config(config, overrides)?;
    let source = load_obj_file(&mesh)?;
    let image = read_rgb(&target)?;
    let objective = prepare_objective(&source, &image, &run)?;
    fs::create_dir_all(&output).map_err(|e| Error::io(&output, e))?;

    let mtllib = has_materials(&source).then_some("final.mtl");
    let mut sink = Checkpoints {
        dir: &output,
        every: run.checkpoint_every,
        mtllib,
        csv: CSV_HEADER.to_string(),
    };
    let result = run_objective(objective, &run, &mut sink)?;

    write_file(&output.join("loss.csv"), &sink.csv)?;
    write_file(
        &output.join("final.obj"),
        &to_obj_string(&result.objective.source, &result.displacement, mtllib)?,
    )?;
    if mtllib.is_some() {
        write_file(&output.join("final.mtl"), &save_mtl(&source))?;
    }
    write_view_renders(&result.objective, &result.displacement, &output, "final")?;
    let first = result.history.first().map(|r| r.loss.total).unwrap_or(f64::NAN);
    println!(
        "iterations={} initial_loss={:e} final_loss={:e}",
        result.history.len(),
        first,
        result.final_loss.total
    );
    Ok(0)
}

fn cmd_render(mesh: &Path, out: &Path, mode: RenderMode, width: usize, height: usize, overrides: &[String]) -> Result<u8> {
    let mesh = load_obj_file(mesh)?;
    let mut entries = Entries::new();
    apply_overrides(&mut entries, overrides)?;
    let camera = match camera_from_entries(&entries, width, height)? {
        Some(c) => c,
        None => Camera::front_view(&mesh, width, height)?,
    };
    match mode {
        RenderMode::Depth => write_unit_gray(out, &depth_to_unit(&rasterize_depth(&mesh, &camera)))?,
        RenderMode::Soft | RenderMode::Binary => {
            let (points, _) = camera.project_all(&mesh.vertices)?;
            let soft = rasterize_soft(&points, &mesh.faces, width, height, &RasterConfig::default())?;
            if mode == RenderMode::Soft {
                write_unit_gray(out, &soft.values)?;
            } else {
                let b = BinarizeParams::default();
                write_mask(out, &soft.values.map(|&s| b.value(s) >= 0.0))?;
            }
        }
    }
    Ok(0)
}

fn cmd_metrics(a: &Path, b: &Path) -> Result<u8> {
    let ia = read_metric_image(a)?;
    let ib = read_metric_image(b)?;
    let m = mse(&ia, &ib)?;
    let s = ssim(&to_luma(&ia), &to_luma(&ib))?;
    println!("mse={m:.6} ssim={s:.6}");
    Ok(0)
}

fn cmd_gradcheck(tol: f64, seed: u64) -> Result<u8> {
    let reports = check_all(seed, tol)?;
    println!("term   max relative   max absolute   worst  result");
    for r in &reports {
        println!("{r}");
    }
    Ok(if reports.iter().all(|r| r.passed) { 0 } else { 1 })
}

fn cmd_validate(mesh: &Path) -> Result<u8> {
    let mesh = load_obj_file(mesh)?;
    let violations = validate(&mesh);
    if violations.is_empty() {
        println!("ok: {} vertices, {} faces", mesh.num_vertices(), mesh.num_faces());
        return Ok(0);
    }
    for v in &violations {
        println!("{v}");
    }
    Ok(1)
}
