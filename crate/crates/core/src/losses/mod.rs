//! Loss terms and their analytic gradients.
//!
//! - [`loss_biou`] on the binarized silhouette of each labeled view
//! - [`loss_gs`] pulls occluded vertices along with the front vertices they
//!   project near
//! - [`loss_as`] keeps triangle corners near the silhouette boundary open
//! - [`loss_rig`] and [`loss_lap`] regularize the displacement and the shape
//!
//! [`Objective`] combines them.

mod angle;
mod binarize;
mod biou;
mod objective;
mod regularizers;
mod sync;
mod visibility;

pub use angle::{loss_as, sample_vertex_weights};
pub use binarize::{binarize, binarize_backward, BinarizeParams};
pub use biou::loss_biou;
pub use objective::{Evaluation, LossBreakdown, LossWeights, Objective, ObjectiveParams, SilhouetteLoss, TermGrads, ViewTarget};
pub use regularizers::{loss_lap, loss_rig};
pub use sync::{build_sync_forest, loss_gs, SyncConfig, SyncForest, SyncTree, SyncUnits};
pub use visibility::{classify_visibility, Visibility};
