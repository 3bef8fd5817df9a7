use std::collections::BTreeMap;

use log::{info, warn};

use super::adam::{adam_step, AdamState};
use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::grid::Mask;
use crate::imgproc::{separate_masks, SemanticImage};
use crate::losses::{LossBreakdown, Objective, ObjectiveParams};
use crate::mesh::{apply_displacement, DisplacementField, Mesh, DEFAULT_LABEL};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub iterations: usize,
    pub lr: f64,
    pub objective: ObjectiveParams,
    /// Angle weights are recomputed every this many iterations.
    pub refresh_interval: usize,
    /// `None` frames the source mesh with the default front view.
    pub camera: Option<Camera>,
    pub width: usize,
    pub height: usize,
    /// Per-channel color tolerance when separating the target image.
    pub color_tolerance: u8,
    /// Recorded with the run; the optimization itself draws no random numbers.
    pub seed: u64,
    /// 0 disables checkpoints.
    pub checkpoint_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::with_size(512, 512)
    }
}

impl RunConfig {
    pub fn with_size(width: usize, height: usize) -> Self {
        RunConfig {
            iterations: 2000,
            lr: 1e-3,
            objective: ObjectiveParams::for_width(width),
            refresh_interval: 50,
            camera: None,
            width,
            height,
            color_tolerance: 0,
            seed: 0,
            checkpoint_every: 0,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if self.refresh_interval == 0 {
            return Err(Error::Config("refresh_interval must be at least 1".into()));
        }
        if self.width < 8 || self.height < 8 {
            return Err(Error::Config(format!(
                "image must be at least 8x8, got {}x{}",
                self.width, self.height
            )));
        }
        if let Some(c) = &self.camera {
            c.check()?;
            if (c.width, c.height) != (self.width, self.height) {
                return Err(Error::Config("camera size differs from the configured image size".into()));
            }
        }
        self.objective.check()
    }

    /// The configured camera, or the default front view of `mesh`.
    pub fn resolve_camera(&self, mesh: &Mesh) -> Result<Camera> {
        match &self.camera {
            Some(c) => Ok(*c),
            None => Camera::front_view(mesh, self.width, self.height),
        }
    }
}

/// One row per iteration: the loss at the displacement the step started from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRow {
    pub iteration: usize,
    pub loss: LossBreakdown,
}

/// Header of the per-iteration loss log.
pub const CSV_HEADER: &str = "iteration,total,biou,gs,as,rig,lap\n";

/// One loss-log line, newline included. Values use the shortest
/// representation that round-trips.
pub fn csv_row(row: &HistoryRow) -> String {
    let l = &row.loss;
    format!(
        "{},{},{},{},{},{},{}\n",
        row.iteration, l.total, l.biou, l.gs, l.angle, l.rig, l.lap
    )
}

/// The full loss log for `history`.
pub fn loss_csv(history: &[HistoryRow]) -> String {
    let mut out = CSV_HEADER.to_string();
    for row in history {
        out.push_str(&csv_row(row));
    }
    out
}

/// Observes the loop. Returning an error aborts the run.
pub trait ProgressSink {
    fn on_iteration(&mut self, _row: &HistoryRow, _d: &DisplacementField, _objective: &Objective) -> Result<()> {
        Ok(())
    }
}

/// Ignores all progress.
pub struct NoProgress;

impl ProgressSink for NoProgress {}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub mesh: Mesh,
    pub displacement: DisplacementField,
    pub history: Vec<HistoryRow>,
    /// Loss at the final displacement.
    pub final_loss: LossBreakdown,
    pub objective: Objective,
}

/// Target masks for every label used by `mesh`.
///
/// A non-default label with no pixels in the image is an error; an empty
/// default-label mask is skipped with a warning.
pub fn match_labels(mesh: &Mesh, image: &SemanticImage, tolerance: u8) -> Result<BTreeMap<u32, Mask>> {
    let used = mesh.used_labels();
    let table: BTreeMap<_, _> = used
        .iter()
        .filter_map(|id| mesh.label_table.get(id).map(|l| (*id, l.clone())))
        .collect();
    let masks = separate_masks(image, &table, tolerance)?;
    let mut out = BTreeMap::new();
    let mut unmatched = Vec::new();
    for id in used {
        match masks.get(&id) {
            Some(m) if m.data().iter().any(|&b| b) => {
                out.insert(id, m.clone());
            }
            _ if id == DEFAULT_LABEL => {
                warn!("no pixels of the default label color; skipping its image losses");
            }
            _ => unmatched.push(mesh.label_name(id)),
        }
    }
    if !unmatched.is_empty() {
        return Err(Error::UnmatchedLabels(unmatched));
    }
    Ok(out)
}

/// Builds the objective for a run: camera, masks, views, visibility, sync
/// forest and initial angle weights.
pub fn prepare_objective(source: &Mesh, image: &SemanticImage, cfg: &RunConfig) -> Result<Objective> {
    cfg.check()?;
    if image.dims() != (cfg.width, cfg.height) {
        return Err(Error::ShapeMismatch(format!(
            "target image is {}x{}, configured size is {}x{}",
            image.width(),
            image.height(),
            cfg.width,
            cfg.height
        )));
    }
    let camera = cfg.resolve_camera(source)?;
    let masks = match_labels(source, image, cfg.color_tolerance)?;
    let mut objective = Objective::new(source.clone(), camera, &masks, cfg.objective.clone())?;
    objective.refresh_angle_weights(&DisplacementField::zeros(source.num_vertices()))?;
    Ok(objective)
}

/// Optimizes the displacement field from zero for `cfg.iterations` steps.
pub fn run_deformation(source: &Mesh, image: &SemanticImage, cfg: &RunConfig, sink: &mut dyn ProgressSink) -> Result<RunResult> {
    let objective = prepare_objective(source, image, cfg)?;
    run_objective(objective, cfg, sink)
}

/// Runs the loop on a prepared objective.
pub fn run_objective(mut objective: Objective, cfg: &RunConfig, sink: &mut dyn ProgressSink) -> Result<RunResult> {
    cfg.check()?;
    let n = objective.num_vertices();
    info!(
        "{} vertices, {} views, {} sync pairs",
        n,
        objective.targets.len(),
        objective.forest.num_pairs()
    );
    let mut d = DisplacementField::zeros(n);
    let mut adam = AdamState::new(n, cfg.lr);
    let mut history = Vec::with_capacity(cfg.iterations);
    for it in 0..cfg.iterations {
        if it > 0 && it % cfg.refresh_interval == 0 {
            objective.refresh_angle_weights(&d)?;
        }
        let eval = objective.evaluate(&d)?;
        let row = HistoryRow {
            iteration: it,
            loss: eval.loss,
        };
        history.push(row);
        sink.on_iteration(&row, &d, &objective)?;
        adam_step(&mut adam, &mut d, &eval.grad)?;
        if !d.is_finite() {
            return Err(Error::NonFinite {
                term: "displacement".into(),
            });
        }
    }
    let final_loss = objective.evaluate(&d)?.loss;
    let mesh = apply_displacement(&objective.source, &d)?;
    Ok(RunResult {
        mesh,
        displacement: d,
        history,
        final_loss,
        objective,
    })
}
