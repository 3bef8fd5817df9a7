//! Flat `key = value` run configuration.
//!
//! One entry per line; `#` starts a comment. Relative paths are resolved
//! against the directory of the config file. Every key has a default except
//! `mesh` and `target`.
//!
//! | key | default |
//! |---|---|
//! | `mesh`, `target` | required (OBJ, semantic PNG) |
//! | `output` | `out` |
//! | `width`, `height` | 512, 512 |
//! | `iterations` | 2000 |
//! | `lr` | 0.001 |
//! | `seed` | 0 |
//! | `checkpoint_every` | 0 (off) |
//! | `refresh_interval` | 50 |
//! | `color_tolerance` | 0 |
//! | `lambda_biou`, `lambda_gs`, `lambda_as`, `lambda_rig`, `lambda_lap` | 1e9, 1e3, 1e3, 1e6, 1e2 |
//! | `rho` | 16 |
//! | `as_weight_literal` | false |
//! | `silhouette_loss` | `binary` (or `soft`) |
//! | `binarize_t`, `binarize_k` | 0.5, 100 |
//! | `raster_sigma`, `raster_eps`, `raster_max_radius` | 1, 1e-7, 30 |
//! | `sync_sigma`, `sync_radius` | width/100, 2 sync_sigma (pixels) |
//! | `sync_units` | `plane` (Gaussian in projection-plane units) or `pixels` |
//! | `visibility_eps` | 0.001 |
//! | `camera_mode` | `front` (or `orthographic`, `perspective`) |
//! | `camera_eye`, `camera_look_at`, `camera_up` | `x,y,z` triples |
//! | `camera_half_width` | model units, orthographic |
//! | `camera_fov_y` | radians, perspective |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::camera::{Camera, Projection};
use crate::error::{Error, Result};
use crate::imgproc::WeightDirection;
use crate::losses::{SilhouetteLoss, SyncConfig, SyncUnits};
use crate::mesh::Vec3;
use crate::optimizer::RunConfig;

const KEYS: &[&str] = &[
    "mesh",
    "target",
    "output",
    "width",
    "height",
    "iterations",
    "lr",
    "seed",
    "checkpoint_every",
    "refresh_interval",
    "color_tolerance",
    "lambda_biou",
    "lambda_gs",
    "lambda_as",
    "lambda_rig",
    "lambda_lap",
    "rho",
    "as_weight_literal",
    "silhouette_loss",
    "binarize_t",
    "binarize_k",
    "raster_sigma",
    "raster_eps",
    "raster_max_radius",
    "sync_sigma",
    "sync_radius",
    "visibility_eps",
    "sync_units",
    "camera_mode",
    "camera_eye",
    "camera_look_at",
    "camera_up",
    "camera_half_width",
    "camera_fov_y",
];

#[derive(Debug, Clone, PartialEq)]
pub struct DeformConfig {
    pub mesh: PathBuf,
    pub target: PathBuf,
    pub output: PathBuf,
    pub run: RunConfig,
}

/// Raw `key -> value` entries.
pub type Entries = BTreeMap<String, String>;

pub fn parse_entries(text: &str) -> Result<Entries> {
    let mut out = Entries::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = split_entry(line).map_err(|m| Error::Config(format!("line {}: {m}", i + 1)))?;
        if out.insert(k.clone(), v).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key `{k}`", i + 1)));
        }
    }
    Ok(out)
}

/// Applies `key=value` overrides on top of `entries`.
pub fn apply_overrides(entries: &mut Entries, overrides: &[String]) -> Result<()> {
    for o in overrides {
        let (k, v) = split_entry(o).map_err(|m| Error::Config(format!("override `{o}`: {m}")))?;
        entries.insert(k, v);
    }
    Ok(())
}

fn split_entry(s: &str) -> std::result::Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| "expected `key = value`".to_string())?;
    let (k, v) = (k.trim(), v.trim());
    if !KEYS.contains(&k) {
        return Err(format!("unknown key `{k}`"));
    }
    Ok((k.to_string(), v.to_string()))
}

fn get<T: FromStr>(e: &Entries, key: &str) -> Result<Option<T>> {
    e.get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| Error::Config(format!("invalid value `{v}` for `{key}`")))
        })
        .transpose()
}

fn set<T: FromStr>(e: &Entries, key: &str, slot: &mut T) -> Result<()> {
    if let Some(v) = get(e, key)? {
        *slot = v;
    }
    Ok(())
}

fn vec3(e: &Entries, key: &str) -> Result<Option<Vec3>> {
    let Some(v) = e.get(key) else { return Ok(None) };
    let parts: Vec<f64> = v
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("invalid vector `{v}` for `{key}`")))?;
    if parts.len() != 3 {
        return Err(Error::Config(format!("`{key}` needs three components, got `{v}`")));
    }
    Ok(Some(Vec3::new(parts[0], parts[1], parts[2])))
}

fn required(e: &Entries, key: &str) -> Result<Vec3> {
    vec3(e, key)?.ok_or_else(|| Error::Config(format!("`{key}` is required for this camera mode")))
}

/// Run configuration from entries. `mesh`/`target`/`output` paths are
/// resolved against `base`.
pub fn build_config(e: &Entries, base: &Path) -> Result<DeformConfig> {
    let path = |key: &str| -> Option<PathBuf> { e.get(key).map(|p| base.join(p)) };
    let mesh = path("mesh").ok_or_else(|| Error::Config("`mesh` is required".into()))?;
    let target = path("target").ok_or_else(|| Error::Config("`target` is required".into()))?;
    let output = path("output").unwrap_or_else(|| base.join("out"));

    let width: usize = get(e, "width")?.unwrap_or(512);
    let height: usize = get(e, "height")?.unwrap_or(512);
    let mut run = RunConfig::with_size(width, height);
    set(e, "iterations", &mut run.iterations)?;
    set(e, "lr", &mut run.lr)?;
    set(e, "seed", &mut run.seed)?;
    set(e, "checkpoint_every", &mut run.checkpoint_every)?;
    set(e, "refresh_interval", &mut run.refresh_interval)?;
    set(e, "color_tolerance", &mut run.color_tolerance)?;

    let p = &mut run.objective;
    set(e, "lambda_biou", &mut p.weights.biou)?;
    set(e, "lambda_gs", &mut p.weights.gs)?;
    set(e, "lambda_as", &mut p.weights.angle)?;
    set(e, "lambda_rig", &mut p.weights.rig)?;
    set(e, "lambda_lap", &mut p.weights.lap)?;
    set(e, "rho", &mut p.rho)?;
    if let Some(literal) = get::<bool>(e, "as_weight_literal")? {
        p.weight_direction = if literal {
            WeightDirection::FarFromBoundary
        } else {
            WeightDirection::NearBoundary
        };
    }
    if let Some(s) = e.get("silhouette_loss") {
        p.silhouette = match s.as_str() {
            "binary" => SilhouetteLoss::BinaryIou,
            "soft" => SilhouetteLoss::SoftIou,
            other => return Err(Error::Config(format!("silhouette_loss must be `binary` or `soft`, got `{other}`"))),
        };
    }
    set(e, "binarize_t", &mut p.binarize.t)?;
    set(e, "binarize_k", &mut p.binarize.k)?;
    set(e, "raster_sigma", &mut p.raster.sharpness_sigma)?;
    set(e, "raster_eps", &mut p.raster.background_eps)?;
    set(e, "raster_max_radius", &mut p.raster.max_radius)?;
    let mut sync = SyncConfig::for_width(width);
    if let Some(s) = get::<f64>(e, "sync_sigma")? {
        sync.sigma_g = s;
        sync.match_radius = 2.0 * s;
    }
    set(e, "sync_radius", &mut sync.match_radius)?;
    set(e, "visibility_eps", &mut sync.visibility_eps)?;
    if let Some(u) = e.get("sync_units") {
        sync.units = match u.as_str() {
            "plane" => SyncUnits::Plane,
            "pixels" => SyncUnits::Pixels,
            other => return Err(Error::Config(format!("sync_units must be `plane` or `pixels`, got `{other}`"))),
        };
    }
    p.sync = sync;

    run.camera = camera_from_entries(e, width, height)?;
    run.check().map_err(|e| match e {
        Error::Config(m) => Error::Config(m),
        other => Error::Config(other.to_string()),
    })?;
    Ok(DeformConfig { mesh, target, output, run })
}

/// Camera from the `camera_*` keys; `None` for the default front view.
pub fn camera_from_entries(e: &Entries, width: usize, height: usize) -> Result<Option<Camera>> {
    let mode = e.get("camera_mode").map(String::as_str).unwrap_or("front");
    match mode {
        "front" => Ok(None),
        "orthographic" | "perspective" => {
            let eye = required(e, "camera_eye")?;
            let look_at = vec3(e, "camera_look_at")?.unwrap_or_else(Vec3::zeros);
            let up = vec3(e, "camera_up")?.unwrap_or_else(|| Vec3::new(0.0, 1.0, 0.0));
            let projection = if mode == "orthographic" {
                let half_width = get(e, "camera_half_width")?
                    .ok_or_else(|| Error::Config("`camera_half_width` is required for orthographic cameras".into()))?;
                Projection::Orthographic { half_width }
            } else {
                let fov_y =
                    get(e, "camera_fov_y")?.ok_or_else(|| Error::Config("`camera_fov_y` is required for perspective cameras".into()))?;
                Projection::Perspective { fov_y }
            };
            Camera::new(projection, eye, look_at, up, width, height)
                .map(Some)
                .map_err(|e| Error::Config(e.to_string()))
        }
        other => Err(Error::Config(format!("unknown camera_mode `{other}`"))),
    }
}

/// Reads `path`, applies `overrides` and builds the configuration.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<DeformConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut entries = parse_entries(&text)?;
    apply_overrides(&mut entries, overrides)?;
    let base = path.parent().unwrap_or(Path::new("."));
    build_config(&entries, base)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_comments() {
        let e = parse_entries("# run\nmesh = a.obj\ntarget = t.png  # target\n\n").unwrap();
        let c = build_config(&e, Path::new("/base")).unwrap();
        assert_eq!(c.mesh, PathBuf::from("/base/a.obj"));
        assert_eq!(c.output, PathBuf::from("/base/out"));
        assert_eq!(c.run.iterations, 2000);
        assert_eq!(c.run.objective.weights.biou, 1e9);
        assert_eq!(c.run.objective.sync.sigma_g, 5.12);
        assert!(c.run.camera.is_none());
    }

    #[test]
    fn overrides_win() {
        let mut e = parse_entries("mesh=a.obj\ntarget=t.png\niterations=10\nwidth=64\nheight=64").unwrap();
        apply_overrides(&mut e, &["iterations=1".into(), "lambda_gs = 0".into()]).unwrap();
        let c = build_config(&e, Path::new(".")).unwrap();
        assert_eq!(c.run.iterations, 1);
        assert_eq!(c.run.objective.weights.gs, 0.0);
        assert_eq!(c.run.objective.sync.sigma_g, 0.64);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_entries("nonsense = 1").is_err());
        assert!(parse_entries("mesh").is_err());
        assert!(parse_entries("mesh=a\nmesh=b").is_err());
        let e = parse_entries("mesh=a\ntarget=b\niterations=0").unwrap();
        assert!(build_config(&e, Path::new(".")).is_err());
        let e = parse_entries("mesh=a\ntarget=b\ncamera_mode=orthographic").unwrap();
        assert!(build_config(&e, Path::new(".")).is_err());
    }

    #[test]
    fn explicit_camera() {
        let e =
            parse_entries("mesh=a\ntarget=b\nwidth=32\nheight=32\ncamera_mode=perspective\ncamera_eye=0,0,5\ncamera_fov_y=0.8").unwrap();
        let c = build_config(&e, Path::new(".")).unwrap();
        let cam = c.run.camera.unwrap();
        assert_eq!(cam.projection, Projection::Perspective { fov_y: 0.8 });
        assert_eq!(cam.width, 32);
    }
}
