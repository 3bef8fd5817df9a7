//! Image-guided mesh deformation.
//!
//! A labeled source mesh is deformed by a per-vertex displacement field so
//! that the soft-rendered, binarized silhouette of each labeled region matches
//! a color-coded target image. Rigidity, smoothness, angle and front/back
//! synchronization terms keep the result well-shaped.
//!
//! The pipeline, bottom-up:
//! [`mesh`] (OBJ I/O, adjacency) → [`camera`] (projection) →
//! [`raster`] (soft silhouettes, depth) → [`hoa`] (per-label index views) →
//! [`imgproc`] (masks, distance transforms, metrics) → [`losses`] →
//! [`optimizer`] (Adam loop). [`gradcheck`] verifies every backward pass
//! against central differences.

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod camera;
pub mod config;
pub mod error;
pub mod gradcheck;
pub mod grid;
pub mod hoa;
pub mod imgproc;
pub mod losses;
pub mod mesh;
pub mod optimizer;
pub mod raster;

pub use camera::{Camera, Projection, Vec2};
pub use error::{Error, Result};
pub use grid::{Grid, Mask};
pub use mesh::{DisplacementField, Mesh, Vec3};
