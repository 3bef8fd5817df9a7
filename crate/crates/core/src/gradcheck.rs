//! Central-difference checks of every analytic gradient.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::grid::{Grid, Mask};
use crate::losses::{Objective, ObjectiveParams};
use crate::mesh::shapes::icosphere;
use crate::mesh::{DisplacementField, Label, Mesh, Vec3};

/// Terms whose numeric gradient has max-norm at most this are compared by
/// absolute error instead of relative error.
pub const MAGNITUDE_FLOOR: f64 = 1e-8;
pub const ABS_TOLERANCE: f64 = 1e-6;
pub const TERMS: [&str; 6] = ["biou", "gs", "as", "rig", "lap", "total"];
/// Finite-difference step as a fraction of the bounding-box diagonal. The
/// binarization slope makes the image term stiff: its central-difference
/// truncation error only drops below 1e-3 relative for steps of a few
/// 1e-5 pixels.
pub const STEP_FRACTION: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct GradReport {
    pub term: String,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    /// Flat coordinate index (`3 * vertex + axis`) of the worst mismatch.
    pub worst_index: usize,
    pub passed: bool,
}

impl fmt::Display for GradReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<6} rel={:.3e} abs={:.3e} worst={:<5} {}",
            self.term,
            self.max_rel_error,
            self.max_abs_error,
            self.worst_index,
            if self.passed { "PASS" } else { "FAIL" }
        )
    }
}

/// `(f(d + h e_i) - f(d - h e_i)) / 2h` for every coordinate.
pub fn finite_diff_grad(f: &mut dyn FnMut(&DisplacementField) -> Result<f64>, d: &DisplacementField, h: f64) -> Result<Vec<Vec3>> {
    let mut out = vec![Vec3::zeros(); d.len()];
    let mut probe = d.clone();
    for i in 0..d.len() {
        for c in 0..3 {
            let x = d.offsets[i][c];
            probe.offsets[i][c] = x + h;
            let up = f(&probe)?;
            probe.offsets[i][c] = x - h;
            let down = f(&probe)?;
            probe.offsets[i][c] = x;
            if !(up.is_finite() && down.is_finite()) {
                return Err(Error::NonFinite {
                    term: format!("finite difference at coordinate {}", 3 * i + c),
                });
            }
            out[i][c] = (up - down) / (2.0 * h);
        }
    }
    Ok(out)
}

/// Compares two gradients of one term.
///
/// The relative error is `max_i |a_i - n_i| / max_i |n_i|`. A term passes when
/// it is below `tolerance`, or, when `max_i |n_i|` is at most
/// [`MAGNITUDE_FLOOR`], when the largest absolute error is below
/// [`ABS_TOLERANCE`]. Coordinates far below the term's scale carry mostly
/// rounding noise and would fail any per-coordinate ratio test.
pub fn compare(term: &str, analytic: &[Vec3], numeric: &[Vec3], tolerance: f64) -> GradReport {
    let mut max_abs: f64 = 0.0;
    let mut scale: f64 = 0.0;
    let mut worst = 0;
    let mut finite = analytic.len() == numeric.len();
    for (i, (a, n)) in analytic.iter().zip(numeric).enumerate() {
        for c in 0..3 {
            let abs = (a[c] - n[c]).abs();
            if !abs.is_finite() {
                finite = false;
            }
            if abs > max_abs {
                max_abs = abs;
                worst = 3 * i + c;
            }
            scale = scale.max(n[c].abs());
        }
    }
    let (max_rel, passed) = if scale > MAGNITUDE_FLOOR {
        let rel = max_abs / scale;
        (rel, rel < tolerance)
    } else {
        (0.0, max_abs < ABS_TOLERANCE)
    };
    GradReport {
        term: term.to_string(),
        max_rel_error: max_rel,
        max_abs_error: max_abs,
        worst_index: worst,
        passed: passed && finite,
    }
}

/// Checks every term of `objective` at `d` with step `h`. Angle weights and
/// the sync forest stay frozen.
pub fn check_objective(objective: &Objective, d: &DisplacementField, h: f64, tolerance: f64) -> Result<Vec<GradReport>> {
    let analytic = objective.evaluate(d)?;
    let n = d.len();
    let mut numeric: BTreeMap<&str, Vec<Vec3>> = TERMS.iter().map(|t| (*t, vec![Vec3::zeros(); n])).collect();
    let mut probe = d.clone();
    for i in 0..n {
        for c in 0..3 {
            let x = d.offsets[i][c];
            probe.offsets[i][c] = x + h;
            let up = objective.evaluate(&probe)?.loss;
            probe.offsets[i][c] = x - h;
            let down = objective.evaluate(&probe)?.loss;
            probe.offsets[i][c] = x;
            for t in TERMS {
                let v = (up.term(t).unwrap_or(0.0) - down.term(t).unwrap_or(0.0)) / (2.0 * h);
                numeric.get_mut(t).expect("every term has a slot")[i][c] = v;
            }
        }
    }
    Ok(TERMS
        .iter()
        .map(|t| {
            let a = match *t {
                "total" => &analytic.grad[..],
                name => analytic.terms.term(name).unwrap_or(&[]),
            };
            compare(t, a, &numeric[t], tolerance)
        })
        .collect())
}

/// A random two-label scene: a jittered 42-vertex icosphere seen by the
/// default front camera on a 32x32 image, elliptical half-masks per label,
/// and a random displacement.
pub fn random_instance(seed: u64) -> Result<(Objective, DisplacementField)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = icosphere(1, 1.0);
    let vertices: Vec<Vec3> = base
        .vertices
        .iter()
        .map(|v| v + Vec3::new(rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05)))
        .collect();
    let mut mesh = Mesh::unlabeled(vertices, base.faces.clone());
    mesh.face_labels = mesh
        .faces
        .iter()
        .map(|f| {
            let cy: f64 = f.iter().map(|&i| mesh.vertices[i].y).sum();
            if cy > 0.0 {
                1
            } else {
                2
            }
        })
        .collect();
    mesh.label_table.insert(
        1,
        Label {
            name: "top".into(),
            color: [255, 0, 0],
        },
    );
    mesh.label_table.insert(
        2,
        Label {
            name: "bottom".into(),
            color: [0, 0, 255],
        },
    );

    let (w, h) = (32, 32);
    let camera = Camera::front_view(&mesh, w, h)?;
    let (cx, cy) = (16.0 + rng.gen_range(-1.5..1.5), 16.0 + rng.gen_range(-1.5..1.5));
    let (ax, ay) = (rng.gen_range(8.0..13.0), rng.gen_range(8.0..13.0));
    let ellipse = |x: usize, y: usize| {
        let (u, v) = ((x as f64 + 0.5 - cx) / ax, (y as f64 + 0.5 - cy) / ay);
        u * u + v * v <= 1.0
    };
    let mut masks: BTreeMap<u32, Mask> = BTreeMap::new();
    masks.insert(1, Grid::from_fn(w, h, |x, y| ellipse(x, y) && (y as f64 + 0.5) < cy));
    masks.insert(2, Grid::from_fn(w, h, |x, y| ellipse(x, y) && (y as f64 + 0.5) >= cy));

    let mut params = ObjectiveParams::for_width(w);
    // wide enough that the coarse sphere has matched pairs
    params.sync.sigma_g = 3.0;
    params.sync.match_radius = 6.0;
    params.rho = 2.0;
    let mut objective = Objective::new(mesh, camera, &masks, params)?;
    objective.refresh_angle_weights(&DisplacementField::zeros(objective.num_vertices()))?;

    let scale = 0.05 * objective.source.bbox_diagonal();
    let d = DisplacementField {
        offsets: (0..objective.num_vertices())
            .map(|_| {
                Vec3::new(
                    rng.gen_range(-scale..scale),
                    rng.gen_range(-scale..scale),
                    rng.gen_range(-scale..scale),
                )
            })
            .collect(),
    };
    Ok((objective, d))
}

/// Every term on the random instance for `seed`, step [`STEP_FRACTION`]
/// times the bbox diagonal.
pub fn check_all(seed: u64, tolerance: f64) -> Result<Vec<GradReport>> {
    let (objective, d) = random_instance(seed)?;
    let h = STEP_FRACTION * objective.source.bbox_diagonal();
    check_objective(&objective, &d, h, tolerance)
}
