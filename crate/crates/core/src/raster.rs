//! Soft silhouette rasterization and its backward pass, plus a hard z-buffer.
//!
//! Face `j` covers pixel `p` with probability
//! `d_j(p) = sigmoid(sign_j(p) * dist(p, boundary_j)^2 / sigma)`, where the
//! sign is positive inside the projected triangle. Coverage is aggregated as
//! `1 - prod_j (1 - d_j(p))`.
//!
//! Work is split into horizontal bands of rows. Each band visits its faces in
//! face order, and per-band gradient partials are reduced in band order, so
//! results do not depend on the number of worker threads.

use rayon::prelude::*;

use crate::camera::{Camera, Projection, Vec2};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::mesh::Mesh;

/// Sigmoid arguments beyond this magnitude are treated as saturated
/// (`sigmoid(-36) < 2.4e-16`).
const SATURATION: f64 = 36.0;
const BAND_ROWS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RasterConfig {
    /// Edge softness in squared pixels.
    pub sharpness_sigma: f64,
    /// Rendered coverage is clamped to `[eps, 1 - eps]`.
    pub background_eps: f64,
    /// Hard cap on how far from its boundary a face contributes, in pixels.
    pub max_radius: f64,
}

impl Default for RasterConfig {
    fn default() -> Self {
        RasterConfig {
            sharpness_sigma: 1.0,
            background_eps: 1e-7,
            max_radius: 30.0,
        }
    }
}

impl RasterConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.sharpness_sigma > 0.0 && self.sharpness_sigma.is_finite()) {
            return Err(Error::Config(format!(
                "sharpness_sigma must be positive, got {}",
                self.sharpness_sigma
            )));
        }
        if !(self.background_eps >= 0.0 && self.background_eps < 0.5) {
            return Err(Error::Config(format!(
                "background_eps must be in [0, 0.5), got {}",
                self.background_eps
            )));
        }
        if !(self.max_radius > 0.0) {
            return Err(Error::Config(format!("max_radius must be positive, got {}", self.max_radius)));
        }
        Ok(())
    }

    /// Distance beyond which a face's coverage is saturated at 0 or 1.
    pub fn cutoff_radius(&self) -> f64 {
        (SATURATION * self.sharpness_sigma).sqrt().min(self.max_radius)
    }
}

/// Forward result of [`rasterize_soft`]; keeps what the backward pass needs.
#[derive(Debug, Clone)]
pub struct SoftRaster {
    /// Clamped coverage in `[eps, 1 - eps]`.
    pub values: Grid<f64>,
    /// Product of `1 - d_j` over unsaturated faces.
    survival: Vec<f64>,
    /// Number of faces whose coverage saturated at 1.
    saturated: Vec<u32>,
    cfg: RasterConfig,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Squared distance from `p` to the boundary of triangle `tri`, with the
/// gradient of that squared distance with respect to the three corners.
#[inline]
fn boundary_distance_sq(p: Vec2, tri: &[Vec2; 3]) -> (f64, [Vec2; 3]) {
    let mut best = f64::INFINITY;
    let mut best_edge = 0;
    let mut best_t = 0.0;
    let mut best_diff = Vec2::zeros();
    for k in 0..3 {
        let a = tri[k];
        let b = tri[(k + 1) % 3];
        let ab = b - a;
        let len2 = ab.norm_squared();
        let t = if len2 > 0.0 {
            ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let diff = p - (a + ab * t);
        let d2 = diff.norm_squared();
        if d2 < best {
            best = d2;
            best_edge = k;
            best_t = t;
            best_diff = diff;
        }
    }
    let mut grad = [Vec2::zeros(); 3];
    grad[best_edge] = best_diff * (-2.0 * (1.0 - best_t));
    grad[(best_edge + 1) % 3] = best_diff * (-2.0 * best_t);
    (best, grad)
}

#[inline]
fn inside(p: Vec2, tri: &[Vec2; 3], area2: f64) -> bool {
    if area2 == 0.0 {
        return false;
    }
    let s = area2.signum();
    (0..3).all(|k| s * cross(tri[(k + 1) % 3] - tri[k], p - tri[k]) > 0.0)
}

struct FaceSpan {
    face: usize,
    tri: [Vec2; 3],
    area2: f64,
    x0: usize,
    x1: usize,
    y0: usize,
    y1: usize,
}

/// Faces grouped into row bands; each band lists the faces whose expanded
/// bounding box reaches it, in face order.
fn bin_faces(points: &[Vec2], faces: &[[usize; 3]], width: usize, height: usize, radius: f64) -> Result<Vec<Vec<FaceSpan>>> {
    let nbands = height.div_ceil(BAND_ROWS);
    let mut bands: Vec<Vec<FaceSpan>> = (0..nbands).map(|_| Vec::new()).collect();
    for (fi, f) in faces.iter().enumerate() {
        let mut tri = [Vec2::zeros(); 3];
        for k in 0..3 {
            let Some(p) = points.get(f[k]) else {
                return Err(Error::IndexOutOfRange {
                    index: f[k],
                    len: points.len(),
                });
            };
            if !(p.x.is_finite() && p.y.is_finite()) {
                return Err(Error::NonFinite {
                    term: "projected vertex".into(),
                });
            }
            tri[k] = *p;
        }
        let minx = tri.iter().map(|p| p.x).fold(f64::INFINITY, f64::min) - radius;
        let maxx = tri.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max) + radius;
        let miny = tri.iter().map(|p| p.y).fold(f64::INFINITY, f64::min) - radius;
        let maxy = tri.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max) + radius;
        // pixel i has center i + 0.5
        let lo = |v: f64| (v - 0.5).ceil().max(0.0);
        let hi = |v: f64, n: usize| ((v - 0.5).floor() + 1.0).min(n as f64);
        let (x0, x1) = (lo(minx), hi(maxx, width));
        let (y0, y1) = (lo(miny), hi(maxy, height));
        if !(x0 < x1 && y0 < y1) {
            continue;
        }
        let (x0, x1, y0, y1) = (x0 as usize, x1 as usize, y0 as usize, y1 as usize);
        let area2 = cross(tri[1] - tri[0], tri[2] - tri[0]);
        for b in y0 / BAND_ROWS..=(y1 - 1) / BAND_ROWS {
            bands[b].push(FaceSpan {
                face: fi,
                tri,
                area2,
                x0,
                x1,
                y0: y0.max(b * BAND_ROWS),
                y1: y1.min((b + 1) * BAND_ROWS),
            });
        }
    }
    Ok(bands)
}

/// Soft silhouette of the projected faces on a `width x height` image.
pub fn rasterize_soft(points: &[Vec2], faces: &[[usize; 3]], width: usize, height: usize, cfg: &RasterConfig) -> Result<SoftRaster> {
    if faces.is_empty() {
        return Err(Error::EmptyFaces);
    }
    cfg.check()?;
    let bands = bin_faces(points, faces, width, height, cfg.cutoff_radius())?;
    let inv_sigma = 1.0 / cfg.sharpness_sigma;

    let per_band: Vec<(Vec<f64>, Vec<u32>)> = bands
        .par_iter()
        .enumerate()
        .map(|(b, spans)| {
            let row0 = b * BAND_ROWS;
            let rows = BAND_ROWS.min(height - row0);
            let mut survival = vec![1.0; rows * width];
            let mut saturated = vec![0u32; rows * width];
            for s in spans {
                for y in s.y0..s.y1 {
                    let py = y as f64 + 0.5;
                    let row = (y - row0) * width;
                    for x in s.x0..s.x1 {
                        let p = Vec2::new(x as f64 + 0.5, py);
                        let (d2, _) = boundary_distance_sq(p, &s.tri);
                        let sign = if inside(p, &s.tri, s.area2) { 1.0 } else { -1.0 };
                        let arg = sign * d2 * inv_sigma;
                        if arg >= SATURATION {
                            saturated[row + x] += 1;
                        } else if arg > -SATURATION {
                            survival[row + x] *= sigmoid(-arg);
                        }
                    }
                }
            }
            (survival, saturated)
        })
        .collect();

    let mut survival = Vec::with_capacity(width * height);
    let mut saturated = Vec::with_capacity(width * height);
    for (s, c) in per_band {
        survival.extend(s);
        saturated.extend(c);
    }
    let eps = cfg.background_eps;
    let values: Vec<f64> = survival
        .iter()
        .zip(&saturated)
        .map(|(&s, &c)| if c > 0 { 1.0 - eps } else { (1.0 - s).clamp(eps, 1.0 - eps) })
        .collect();
    Ok(SoftRaster {
        values: Grid::from_vec(width, height, values),
        survival,
        saturated,
        cfg: *cfg,
    })
}

impl SoftRaster {
    pub fn width(&self) -> usize {
        self.values.width()
    }

    pub fn height(&self) -> usize {
        self.values.height()
    }

    /// Unclamped coverage at linear pixel index `i`.
    fn raw(&self, i: usize) -> f64 {
        if self.saturated[i] > 0 {
            1.0
        } else {
            1.0 - self.survival[i]
        }
    }

    /// Gradient of `sum_p grad_out(p) * value(p)` with respect to the
    /// projected vertex positions. `points` and `faces` must be the inputs of
    /// the forward call.
    pub fn backward(&self, points: &[Vec2], faces: &[[usize; 3]], grad_out: &Grid<f64>) -> Result<Vec<Vec2>> {
        if !grad_out.same_dims(&self.values) {
            return Err(Error::ShapeMismatch(format!(
                "gradient image is {}x{}, silhouette is {}x{}",
                grad_out.width(),
                grad_out.height(),
                self.width(),
                self.height()
            )));
        }
        let (width, height) = self.values.dims();
        let eps = self.cfg.background_eps;
        // gradient with respect to the unclamped coverage
        let upstream: Vec<f64> = (0..width * height)
            .map(|i| {
                let raw = self.raw(i);
                if raw > eps && raw < 1.0 - eps {
                    grad_out.data()[i]
                } else {
                    0.0
                }
            })
            .collect();

        let bands = bin_faces(points, faces, width, height, self.cfg.cutoff_radius())?;
        let inv_sigma = 1.0 / self.cfg.sharpness_sigma;

        let partials: Vec<Vec<(usize, [Vec2; 3])>> = bands
            .par_iter()
            .map(|spans| {
                let mut out = Vec::new();
                for s in spans {
                    let mut acc = [Vec2::zeros(); 3];
                    let mut touched = false;
                    for y in s.y0..s.y1 {
                        let py = y as f64 + 0.5;
                        for x in s.x0..s.x1 {
                            let i = y * width + x;
                            let g = upstream[i];
                            if g == 0.0 {
                                continue;
                            }
                            let p = Vec2::new(x as f64 + 0.5, py);
                            let (d2, dgrad) = boundary_distance_sq(p, &s.tri);
                            let sign = if inside(p, &s.tri, s.area2) { 1.0 } else { -1.0 };
                            let arg = sign * d2 * inv_sigma;
                            if arg.abs() >= SATURATION {
                                continue;
                            }
                            let miss = sigmoid(-arg);
                            let hit = sigmoid(arg);
                            // d value / d d_j = prod_{k != j} (1 - d_k)
                            let others = self.survival[i] / miss;
                            let scale = g * others * hit * miss * sign * inv_sigma;
                            for k in 0..3 {
                                acc[k] += dgrad[k] * scale;
                            }
                            touched = true;
                        }
                    }
                    if touched {
                        out.push((s.face, acc));
                    }
                }
                out
            })
            .collect();

        let mut grads = vec![Vec2::zeros(); points.len()];
        for band in partials {
            for (face, acc) in band {
                for k in 0..3 {
                    grads[faces[face][k]] += acc[k];
                }
            }
        }
        Ok(grads)
    }
}

/// Hard z-buffer of already projected vertices. `depths` are camera depths;
/// `perspective` selects `1/z` interpolation. Faces with a missing
/// projection (`None`) are skipped.
pub fn rasterize_depth_projected(
    points: &[Option<(Vec2, f64)>],
    faces: &[[usize; 3]],
    width: usize,
    height: usize,
    perspective: bool,
) -> Grid<f64> {
    let mut depth = Grid::new(width, height, f64::INFINITY);
    for f in faces {
        let (Some(a), Some(b), Some(c)) = (points[f[0]], points[f[1]], points[f[2]]) else {
            continue;
        };
        let tri = [a.0, b.0, c.0];
        let zs = [a.1, b.1, c.1];
        let area2 = cross(tri[1] - tri[0], tri[2] - tri[0]);
        if area2 == 0.0 || !area2.is_finite() {
            continue;
        }
        let minx = tri.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
        let maxx = tri.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
        let miny = tri.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
        let maxy = tri.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
        let x0 = (minx - 0.5).ceil().max(0.0) as usize;
        let y0 = (miny - 0.5).ceil().max(0.0) as usize;
        let x1 = ((maxx - 0.5).floor() + 1.0).clamp(0.0, width as f64) as usize;
        let y1 = ((maxy - 0.5).floor() + 1.0).clamp(0.0, height as f64) as usize;
        for y in y0..y1 {
            for x in x0..x1 {
                let p = Vec2::new(x as f64 + 0.5, y as f64 + 0.5);
                // barycentric weight of corner k is the edge function of the opposite edge
                let w = [
                    cross(tri[2] - tri[1], p - tri[1]) / area2,
                    cross(tri[0] - tri[2], p - tri[2]) / area2,
                    cross(tri[1] - tri[0], p - tri[0]) / area2,
                ];
                if w.iter().any(|&wk| wk < 0.0) {
                    continue;
                }
                let z = if perspective {
                    1.0 / (w[0] / zs[0] + w[1] / zs[1] + w[2] / zs[2])
                } else {
                    w[0] * zs[0] + w[1] * zs[1] + w[2] * zs[2]
                };
                let slot = depth.get_mut(x, y);
                if z < *slot {
                    *slot = z;
                }
            }
        }
    }
    depth
}

/// Nearest surface depth along the viewing ray through each query point
/// (`+inf` where no face covers it). Same conventions as
/// [`rasterize_depth_projected`], evaluated at arbitrary points instead of
/// pixel centers; coverage is inclusive up to a relative `1e-12` slack.
pub fn surface_depth_at(points: &[Option<(Vec2, f64)>], faces: &[[usize; 3]], queries: &[Vec2], perspective: bool) -> Vec<f64> {
    const CELL: f64 = 4.0;
    let mut out = vec![f64::INFINITY; queries.len()];
    if queries.is_empty() {
        return out;
    }
    let minx = queries.iter().map(|q| q.x).fold(f64::INFINITY, f64::min);
    let miny = queries.iter().map(|q| q.y).fold(f64::INFINITY, f64::min);
    let maxx = queries.iter().map(|q| q.x).fold(f64::NEG_INFINITY, f64::max);
    let maxy = queries.iter().map(|q| q.y).fold(f64::NEG_INFINITY, f64::max);
    if !(minx.is_finite() && miny.is_finite() && maxx.is_finite() && maxy.is_finite()) {
        return out;
    }
    let nx = ((maxx - minx) / CELL).floor() as usize + 1;
    let ny = ((maxy - miny) / CELL).floor() as usize + 1;
    let cell_of = |q: &Vec2| (((q.x - minx) / CELL).floor() as usize, ((q.y - miny) / CELL).floor() as usize);
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); nx * ny];
    for (i, q) in queries.iter().enumerate() {
        let (cx, cy) = cell_of(q);
        buckets[cy * nx + cx].push(i);
    }
    for f in faces {
        let (Some(a), Some(b), Some(c)) = (points[f[0]], points[f[1]], points[f[2]]) else {
            continue;
        };
        let tri = [a.0, b.0, c.0];
        let zs = [a.1, b.1, c.1];
        let area2 = cross(tri[1] - tri[0], tri[2] - tri[0]);
        if area2 == 0.0 || !area2.is_finite() {
            continue;
        }
        let fx0 = tri.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
        let fx1 = tri.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
        let fy0 = tri.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
        let fy1 = tri.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
        if fx1 < minx || fx0 > maxx || fy1 < miny || fy0 > maxy {
            continue;
        }
        let cx0 = ((fx0.max(minx) - minx) / CELL).floor() as usize;
        let cx1 = (((fx1.min(maxx) - minx) / CELL).floor() as usize).min(nx - 1);
        let cy0 = ((fy0.max(miny) - miny) / CELL).floor() as usize;
        let cy1 = (((fy1.min(maxy) - miny) / CELL).floor() as usize).min(ny - 1);
        for cy in cy0..=cy1 {
            for cx in cx0..=cx1 {
                for &qi in &buckets[cy * nx + cx] {
                    let p = queries[qi];
                    let w = [
                        cross(tri[2] - tri[1], p - tri[1]) / area2,
                        cross(tri[0] - tri[2], p - tri[2]) / area2,
                        cross(tri[1] - tri[0], p - tri[0]) / area2,
                    ];
                    if w.iter().any(|&wk| wk < -1e-12) {
                        continue;
                    }
                    let z = if perspective {
                        1.0 / (w[0] / zs[0] + w[1] / zs[1] + w[2] / zs[2])
                    } else {
                        w[0] * zs[0] + w[1] * zs[1] + w[2] * zs[2]
                    };
                    if z < out[qi] {
                        out[qi] = z;
                    }
                }
            }
        }
    }
    out
}

/// Hard z-buffer of `mesh` seen from `cam`; background pixels hold `+inf`.
pub fn rasterize_depth(mesh: &Mesh, cam: &Camera) -> Grid<f64> {
    let projected: Vec<Option<(Vec2, f64)>> = mesh.vertices.iter().map(|v| cam.project(v).ok()).collect();
    let perspective = matches!(cam.projection, Projection::Perspective { .. });
    rasterize_depth_projected(&projected, &mesh.faces, cam.width, cam.height, perspective)
}
