//! The weighted sum of all loss terms and its gradient with respect to the
//! global displacement field.

use log::warn;
use rayon::prelude::*;

use super::angle::{loss_as, sample_vertex_weights};
use super::binarize::BinarizeParams;
use super::biou::loss_biou;
use super::regularizers::{loss_lap, loss_rig};
use super::sync::{build_sync_forest, loss_gs, SyncConfig, SyncForest};
use super::visibility::{classify_visibility, Visibility};
use crate::camera::{Camera, Vec2};
use crate::error::{Error, Result};
use crate::grid::{Grid, Mask};
use crate::hoa::{build_local_views, gather, scatter_add, LocalView};
use crate::imgproc::{boundary_weight, WeightDirection};
use crate::mesh::{build_adjacency, deformed_positions, AdjacencyInfo, DisplacementField, Mesh, Vec3};
use crate::raster::{rasterize_soft, RasterConfig, SoftRaster};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub biou: f64,
    pub gs: f64,
    pub angle: f64,
    pub rig: f64,
    pub lap: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            biou: 1e9,
            gs: 1e3,
            angle: 1e3,
            rig: 1e6,
            lap: 1e2,
        }
    }
}

impl LossWeights {
    pub fn zero() -> Self {
        LossWeights {
            biou: 0.0,
            gs: 0.0,
            angle: 0.0,
            rig: 0.0,
            lap: 0.0,
        }
    }

    pub fn check(&self) -> Result<()> {
        for (name, v) in self.named() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("weight {name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    fn named(&self) -> [(&'static str, f64); 5] {
        [
            ("biou", self.biou),
            ("gs", self.gs),
            ("as", self.angle),
            ("rig", self.rig),
            ("lap", self.lap),
        ]
    }
}

/// What the rendered silhouette is compared against the mask through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SilhouetteLoss {
    /// IoU of the binarized coverage.
    #[default]
    BinaryIou,
    /// IoU of the raw soft coverage.
    SoftIou,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveParams {
    pub weights: LossWeights,
    pub binarize: BinarizeParams,
    pub raster: RasterConfig,
    pub sync: SyncConfig,
    pub rho: f64,
    pub weight_direction: WeightDirection,
    pub silhouette: SilhouetteLoss,
}

impl ObjectiveParams {
    pub fn for_width(width: usize) -> Self {
        ObjectiveParams {
            weights: LossWeights::default(),
            binarize: BinarizeParams::default(),
            raster: RasterConfig::default(),
            sync: SyncConfig::for_width(width),
            rho: 16.0,
            weight_direction: WeightDirection::NearBoundary,
            silhouette: SilhouetteLoss::BinaryIou,
        }
    }

    pub fn check(&self) -> Result<()> {
        self.weights.check()?;
        self.binarize.check()?;
        self.raster.check()?;
        self.sync.check()?;
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::Config(format!("rho must be positive, got {}", self.rho)));
        }
        Ok(())
    }
}

/// Unweighted term values; `total` is the weighted sum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub total: f64,
    pub biou: f64,
    pub gs: f64,
    pub angle: f64,
    pub rig: f64,
    pub lap: f64,
}

impl LossBreakdown {
    pub fn term(&self, name: &str) -> Option<f64> {
        Some(match name {
            "total" => self.total,
            "biou" => self.biou,
            "gs" => self.gs,
            "as" => self.angle,
            "rig" => self.rig,
            "lap" => self.lap,
            _ => return None,
        })
    }
}

/// Unweighted per-term gradients with respect to `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct TermGrads {
    pub biou: Vec<Vec3>,
    pub gs: Vec<Vec3>,
    pub angle: Vec<Vec3>,
    pub rig: Vec<Vec3>,
    pub lap: Vec<Vec3>,
}

impl TermGrads {
    pub fn term(&self, name: &str) -> Option<&[Vec3]> {
        Some(match name {
            "biou" => &self.biou,
            "gs" => &self.gs,
            "as" => &self.angle,
            "rig" => &self.rig,
            "lap" => &self.lap,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub loss: LossBreakdown,
    /// Gradient of `loss.total`.
    pub grad: Vec<Vec3>,
    pub terms: TermGrads,
}

/// One labeled region: its view and target mask (`None` when the image has
/// no pixels of that label, in which case its image losses are skipped).
#[derive(Debug, Clone)]
pub struct ViewTarget {
    pub view: LocalView,
    pub mask: Option<Mask>,
}

/// Image loss, its local gradient, angle loss, its local gradient.
type ViewLosses = (f64, Vec<Vec3>, f64, Vec<Vec3>);

/// Everything fixed during a run: the source mesh, camera, per-label views
/// and masks, adjacency, the sync forest built from the source, and the
/// current (frozen) angle weights.
#[derive(Debug, Clone)]
pub struct Objective {
    pub source: Mesh,
    pub camera: Camera,
    pub params: ObjectiveParams,
    pub targets: Vec<ViewTarget>,
    pub adjacency: AdjacencyInfo,
    pub visibility: Visibility,
    pub forest: SyncForest,
    /// Per-view vertex weights for the angle term, in local order.
    pub angle_weights: Vec<Vec<f64>>,
    /// Negates the image-space backward pass; used only to check that the
    /// gradient checker notices a broken gradient.
    #[doc(hidden)]
    pub corrupt_biou_backward: bool,
}

impl Objective {
    /// `masks` maps label id to target mask; labels without an entry get no
    /// image losses. Angle weights start at zero; call
    /// [`Objective::refresh_angle_weights`] to compute them.
    pub fn new(source: Mesh, camera: Camera, masks: &std::collections::BTreeMap<u32, Mask>, params: ObjectiveParams) -> Result<Self> {
        params.check()?;
        camera.check()?;
        let views = build_local_views(&source);
        let mut targets = Vec::with_capacity(views.len());
        for view in views {
            let mask = masks.get(&view.label).cloned();
            if let Some(m) = &mask {
                if m.dims() != (camera.width, camera.height) {
                    return Err(Error::ShapeMismatch(format!(
                        "mask for label {} is {}x{}, camera is {}x{}",
                        view.label,
                        m.width(),
                        m.height(),
                        camera.width,
                        camera.height
                    )));
                }
            }
            targets.push(ViewTarget { view, mask });
        }
        let adjacency = build_adjacency(&source);
        let tolerance = params.sync.visibility_eps * source.bbox_diagonal();
        let visibility = classify_visibility(&source.vertices, &source.faces, &camera, tolerance);
        let (projected, _) = camera.project_all(&source.vertices)?;
        let forest = build_sync_forest(&projected, &visibility, &params.sync, camera.pixels_per_unit());
        let angle_weights = targets.iter().map(|t| vec![0.0; t.view.num_vertices()]).collect();
        Ok(Objective {
            source,
            camera,
            params,
            targets,
            adjacency,
            visibility,
            forest,
            angle_weights,
            corrupt_biou_backward: false,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.source.num_vertices()
    }

    /// Soft silhouette of one view at displacement `d`.
    pub fn render_view(&self, view_index: usize, d: &DisplacementField) -> Result<SoftRaster> {
        let positions = deformed_positions(&self.source, d)?;
        let view = &self.targets[view_index].view;
        let (points, _) = self.camera.project_all(&gather(&positions, view)?)?;
        rasterize_soft(
            &points,
            &view.local_faces,
            self.camera.width,
            self.camera.height,
            &self.params.raster,
        )
    }

    /// Hard silhouette: coverage at or above the binarization threshold.
    pub fn threshold(&self, soft: &Grid<f64>) -> Mask {
        let t = self.params.binarize.t;
        soft.map(|&s| s >= t)
    }

    /// Recomputes the frozen angle weights from the hard-thresholded render
    /// of each view at `d`. A view whose render is empty or fills the image
    /// gets zero weights.
    pub fn refresh_angle_weights(&mut self, d: &DisplacementField) -> Result<()> {
        let positions = deformed_positions(&self.source, d)?;
        let mut all = Vec::with_capacity(self.targets.len());
        for (i, t) in self.targets.iter().enumerate() {
            if t.mask.is_none() {
                all.push(vec![0.0; t.view.num_vertices()]);
                continue;
            }
            let hard = self.threshold(&self.render_view(i, d)?.values);
            let weights = match boundary_weight(&hard, self.params.rho, self.params.weight_direction) {
                Ok(w) => sample_vertex_weights(&gather(&positions, &t.view)?, &self.camera, &w)?,
                Err(Error::SingleClassMask) => {
                    warn!("render of label {} has a single class; angle weights set to zero", t.view.label);
                    vec![0.0; t.view.num_vertices()]
                }
                Err(e) => return Err(e),
            };
            all.push(weights);
        }
        self.angle_weights = all;
        Ok(())
    }

    /// Image-space loss of one view and its gradient in local vertex order.
    fn view_image_loss(&self, positions: &[Vec3], i: usize) -> Result<(f64, Vec<Vec3>)> {
        let t = &self.targets[i];
        let Some(mask) = &t.mask else {
            return Ok((0.0, vec![Vec3::zeros(); t.view.num_vertices()]));
        };
        let local = gather(positions, &t.view)?;
        let (points, _) = self.camera.project_all(&local)?;
        let (w, h) = (self.camera.width, self.camera.height);
        let soft = rasterize_soft(&points, &t.view.local_faces, w, h, &self.params.raster)?;
        let b = self.params.binarize;
        let (loss, grad_s) = match self.params.silhouette {
            SilhouetteLoss::BinaryIou => {
                let bmap = soft.values.map(|&s| b.unit_value(s));
                let (loss, g) = loss_biou(mask, &bmap)?;
                let gs = Grid::from_vec(
                    w,
                    h,
                    g.data()
                        .iter()
                        .zip(soft.values.data())
                        .map(|(&g, &s)| g * b.unit_derivative(s))
                        .collect(),
                );
                (loss, gs)
            }
            SilhouetteLoss::SoftIou => loss_biou(mask, &soft.values)?,
        };
        let grad_px = soft.backward(&points, &t.view.local_faces, &grad_s)?;
        let jac = self.camera.jacobian_all(&local)?;
        let sign = if self.corrupt_biou_backward { -1.0 } else { 1.0 };
        let grad = grad_px
            .iter()
            .zip(&jac)
            .map(|(g, j): (&Vec2, _)| j.transpose() * g * sign)
            .collect();
        Ok((loss, grad))
    }

    /// All terms and gradients at displacement `d`.
    pub fn evaluate(&self, d: &DisplacementField) -> Result<Evaluation> {
        let n = self.num_vertices();
        let positions = deformed_positions(&self.source, d)?;
        let w = self.params.weights;

        // per-view terms in parallel, reduced in label order
        let per_view: Vec<Result<ViewLosses>> = (0..self.targets.len())
            .into_par_iter()
            .map(|i| {
                let (li, gi) = self.view_image_loss(&positions, i)?;
                let t = &self.targets[i];
                let local = gather(&positions, &t.view)?;
                let (la, ga) = loss_as(&local, &t.view.local_faces, &self.angle_weights[i]);
                Ok((li, gi, la, ga))
            })
            .collect();

        let mut biou = 0.0;
        let mut angle = 0.0;
        let mut g_biou = vec![Vec3::zeros(); n];
        let mut g_angle = vec![Vec3::zeros(); n];
        for (i, r) in per_view.into_iter().enumerate() {
            let (li, gi, la, ga) = r?;
            let view = &self.targets[i].view;
            biou += li;
            angle += la;
            scatter_add(&gi, view, &mut g_biou)?;
            scatter_add(&ga, view, &mut g_angle)?;
        }

        let (gs, g_gs) = loss_gs(d, &self.forest)?;
        let (rig, g_rig) = loss_rig(d, &self.adjacency)?;
        let (lap, g_lap) = loss_lap(&positions, &self.adjacency)?;

        let total = w.biou * biou + w.gs * gs + w.angle * angle + w.rig * rig + w.lap * lap;
        let grad: Vec<Vec3> = (0..n)
            .map(|v| g_biou[v] * w.biou + g_gs[v] * w.gs + g_angle[v] * w.angle + g_rig[v] * w.rig + g_lap[v] * w.lap)
            .collect();
        let eval = Evaluation {
            loss: LossBreakdown {
                total,
                biou,
                gs,
                angle,
                rig,
                lap,
            },
            grad,
            terms: TermGrads {
                biou: g_biou,
                gs: g_gs,
                angle: g_angle,
                rig: g_rig,
                lap: g_lap,
            },
        };
        eval.check_finite()?;
        Ok(eval)
    }
}

impl Evaluation {
    /// Fails with the name of the first term whose value or gradient is not
    /// finite.
    pub fn check_finite(&self) -> Result<()> {
        let finite = |v: &[Vec3]| v.iter().all(|g| g.iter().all(|c| c.is_finite()));
        for name in ["biou", "gs", "as", "rig", "lap"] {
            let value = self.loss.term(name).unwrap_or(f64::NAN);
            if !value.is_finite() || !finite(self.terms.term(name).unwrap_or(&[])) {
                return Err(Error::NonFinite { term: name.to_string() });
            }
        }
        if !self.loss.total.is_finite() || !finite(&self.grad) {
            return Err(Error::NonFinite { term: "total".to_string() });
        }
        Ok(())
    }
}
