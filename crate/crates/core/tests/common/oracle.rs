//! Brute-force reference implementations.

use deform3d::camera::Vec2;
use deform3d::grid::{Grid, Mask};
use deform3d::hoa::LocalView;
use deform3d::imgproc::Target;
use deform3d::losses::{SyncConfig, Visibility};
use deform3d::mesh::{Mesh, Vec3};

/// Squared distance from every pixel center to the nearest pixel of class
/// `to`, by exhaustive search.
pub fn squared_edt(mask: &Mask, to: Target) -> Grid<f64> {
    let want = to == Target::White;
    let (w, h) = mask.dims();
    let targets: Vec<(i64, i64)> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|&(x, y)| *mask.get(x, y) == want)
        .map(|(x, y)| (x as i64, y as i64))
        .collect();
    Grid::from_fn(w, h, |x, y| {
        targets
            .iter()
            .map(|&(tx, ty)| {
                let (dx, dy) = (tx - x as i64, ty - y as i64);
                (dx * dx + dy * dy) as f64
            })
            .min_by(|a, b| a.total_cmp(b))
            .expect("target class is non-empty")
    })
}

/// Every `(front, occluded)` pair within the match radius, in root then leaf
/// order, with the Gaussian weight in the configured units.
pub fn sync_pairs(projected: &[Vec2], vis: &Visibility, cfg: &SyncConfig, pixels_per_unit: f64) -> Vec<(usize, usize, f64)> {
    let mut front = vis.front.clone();
    front.sort_unstable();
    let mut occluded = vis.occluded.clone();
    occluded.sort_unstable();
    let mut out = Vec::new();
    for &f in &front {
        for &o in &occluded {
            let r2 = (projected[o] - projected[f]).norm_squared();
            if r2 <= cfg.match_radius * cfg.match_radius {
                out.push((f, o, cfg.weight(r2, pixels_per_unit)));
            }
        }
    }
    out
}

/// Dense 0/1 selection matrix of a view: row `i` picks global vertex
/// `global_vertex_ids[i]`.
pub fn selection_matrix(view: &LocalView, num_global: usize) -> Vec<Vec<f64>> {
    view.global_vertex_ids
        .iter()
        .map(|&g| (0..num_global).map(|j| if j == g { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// `rows x cols` matrix times a column of 3-vectors.
pub fn mat_vec3(m: &[Vec<f64>], x: &[Vec3]) -> Vec<Vec3> {
    m.iter()
        .map(|row| row.iter().zip(x).fold(Vec3::zeros(), |acc, (&a, v)| acc + v * a))
        .collect()
}

pub fn transpose(m: &[Vec<f64>], cols: usize) -> Vec<Vec<f64>> {
    (0..cols).map(|j| m.iter().map(|row| row[j]).collect()).collect()
}

/// Uniform Laplacian `L = I - D^-1 A` as a dense matrix, with zero rows for
/// isolated vertices.
pub fn uniform_laplacian(mesh: &Mesh) -> Vec<Vec<f64>> {
    let n = mesh.num_vertices();
    let mut adj = vec![vec![false; n]; n];
    for f in &mesh.faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            if a != b {
                adj[a][b] = true;
                adj[b][a] = true;
            }
        }
    }
    (0..n)
        .map(|i| {
            let deg = adj[i].iter().filter(|&&x| x).count();
            (0..n)
                .map(|j| {
                    if deg == 0 {
                        0.0
                    } else if i == j {
                        1.0
                    } else if adj[i][j] {
                        -1.0 / deg as f64
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Distance along the ray from `origin` in direction `dir` to triangle
/// `(a, b, c)`, if it hits.
pub fn ray_triangle(origin: &Vec3, dir: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - a;
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    Some(e2.dot(&q) * inv)
}
