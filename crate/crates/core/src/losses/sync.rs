//! Front/occluded matching and the synchronization loss.
//!
//! Each front vertex roots a tree whose leaves are the occluded vertices
//! projecting within `match_radius` of it, weighted by a 2D Gaussian of the
//! projected distance. The loss pulls matched displacements together.
//!
//! `sigma_g` and `match_radius` are given in pixels. By default the Gaussian
//! density is evaluated in projection-plane units (pixel lengths divided by
//! the camera's pixels per model unit), which scales every weight by
//! `pixels_per_unit^2`; [`SyncUnits::Pixels`] evaluates it in pixels.

use std::collections::HashMap;

use super::visibility::Visibility;
use crate::camera::Vec2;
use crate::error::{Error, Result};
use crate::mesh::{DisplacementField, Vec3};

/// Length unit of the Gaussian density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SyncUnits {
    /// Model units on the projection plane.
    #[default]
    Plane,
    Pixels,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncConfig {
    /// Gaussian standard deviation in pixels.
    pub sigma_g: f64,
    /// Leaves are admitted within this projected distance, in pixels.
    pub match_radius: f64,
    /// Visibility depth tolerance as a fraction of the bounding-box diagonal.
    pub visibility_eps: f64,
    pub units: SyncUnits,
}

impl SyncConfig {
    /// `sigma_g = width / 100`, `match_radius = 2 sigma_g`.
    pub fn for_width(width: usize) -> Self {
        let sigma_g = width as f64 / 100.0;
        SyncConfig {
            sigma_g,
            match_radius: 2.0 * sigma_g,
            visibility_eps: 1e-3,
            units: SyncUnits::Plane,
        }
    }

    pub fn check(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_g", self.sigma_g),
            ("match_radius", self.match_radius),
            ("visibility_eps", self.visibility_eps),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// `exp(-r^2 / (2 sigma^2)) / (2 pi sigma^2)` for squared pixel distance
    /// `r2`, with lengths in pixels.
    #[inline]
    pub fn pixel_weight(&self, r2: f64) -> f64 {
        let s2 = self.sigma_g * self.sigma_g;
        (-r2 / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2)
    }

    /// Leaf weight for squared pixel distance `r2` in the configured units.
    #[inline]
    pub fn weight(&self, r2: f64, pixels_per_unit: f64) -> f64 {
        match self.units {
            SyncUnits::Pixels => self.pixel_weight(r2),
            // the exponent is unit-free; only the normalization changes
            SyncUnits::Plane => self.pixel_weight(r2) * pixels_per_unit * pixels_per_unit,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyncTree {
    pub root: usize,
    /// `(occluded vertex, weight)`, ascending by vertex id.
    pub leaves: Vec<(usize, f64)>,
}

/// Trees in ascending root order; roots without leaves are omitted.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SyncForest {
    pub trees: Vec<SyncTree>,
}

impl SyncForest {
    pub fn num_pairs(&self) -> usize {
        self.trees.iter().map(|t| t.leaves.len()).sum()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.trees.iter().flat_map(|t| t.leaves.iter().map(move |&(l, w)| (t.root, l, w)))
    }

    /// Mean `|D_root - D_leaf|` over matched pairs (0 for an empty forest).
    pub fn mean_discrepancy(&self, d: &DisplacementField) -> f64 {
        let n = self.num_pairs();
        if n == 0 {
            return 0.0;
        }
        self.pairs().map(|(r, l, _)| (d.offsets[r] - d.offsets[l]).norm()).sum::<f64>() / n as f64
    }
}

/// Matches occluded vertices to front vertices by projected pixel distance.
pub fn build_sync_forest(projected: &[Vec2], vis: &Visibility, cfg: &SyncConfig, pixels_per_unit: f64) -> SyncForest {
    let radius = cfg.match_radius;
    let r2max = radius * radius;
    let cell = |p: &Vec2| ((p.x / radius).floor() as i64, (p.y / radius).floor() as i64);
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for &o in &vis.occluded {
        buckets.entry(cell(&projected[o])).or_default().push(o);
    }

    let mut trees = Vec::new();
    let mut candidates = Vec::new();
    for &f in &vis.front {
        let pf = projected[f];
        let (cx, cy) = cell(&pf);
        candidates.clear();
        for dy in -1..=1 {
            for dx in -1..=1 {
                if let Some(b) = buckets.get(&(cx + dx, cy + dy)) {
                    candidates.extend_from_slice(b);
                }
            }
        }
        candidates.sort_unstable();
        let leaves: Vec<(usize, f64)> = candidates
            .iter()
            .filter_map(|&o| {
                let r2 = (projected[o] - pf).norm_squared();
                (r2 <= r2max).then(|| (o, cfg.weight(r2, pixels_per_unit)))
            })
            .collect();
        if !leaves.is_empty() {
            trees.push(SyncTree { root: f, leaves });
        }
    }
    SyncForest { trees }
}

/// `sum ||(D_root - D_leaf) * w||^2` and its gradient.
pub fn loss_gs(d: &DisplacementField, forest: &SyncForest) -> Result<(f64, Vec<Vec3>)> {
    let n = d.len();
    let mut grad = vec![Vec3::zeros(); n];
    let mut loss = 0.0;
    for (r, l, w) in forest.pairs() {
        if r >= n || l >= n {
            return Err(Error::IndexOutOfRange { index: r.max(l), len: n });
        }
        let diff = d.offsets[r] - d.offsets[l];
        let w2 = w * w;
        loss += w2 * diff.norm_squared();
        let g = diff * (2.0 * w2);
        grad[r] += g;
        grad[l] -= g;
    }
    Ok((loss, grad))
}
