//! Semantic-image ingestion, exact distance transforms, boundary weights,
//! image metrics and PNG I/O.

mod edt;
mod masks;
mod metrics;
pub mod png;
mod weights;

pub use edt::{distance_transform, squared_distance_transform, Target};
pub use masks::{separate_masks, MaskSet, SemanticImage};
pub use metrics::{mse, ssim, ImageF};
pub use weights::{boundary_weight, WeightDirection};
