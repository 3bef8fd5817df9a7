use crate::camera::Camera;
use crate::error::Result;
use crate::grid::Grid;
use crate::mesh::Vec3;

/// Edges shorter than this make a corner degenerate; it contributes nothing.
const MIN_EDGE: f64 = 1e-12;

/// Boundary weight sampled bilinearly at each vertex's projection.
pub fn sample_vertex_weights(positions: &[Vec3], cam: &Camera, weights: &Grid<f64>) -> Result<Vec<f64>> {
    positions
        .iter()
        .map(|p| cam.project(p).map(|(px, _)| weights.sample_bilinear(px.x, px.y)))
        .collect()
}

/// `sum over corners (1 + cos theta) * w(corner vertex)` and its gradient with
/// respect to `positions`. The weights are constants.
pub fn loss_as(positions: &[Vec3], faces: &[[usize; 3]], vertex_weights: &[f64]) -> (f64, Vec<Vec3>) {
    let mut grad = vec![Vec3::zeros(); positions.len()];
    let mut loss = 0.0;
    for f in faces {
        for k in 0..3 {
            let (a, b, c) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
            let w = vertex_weights[a];
            if w == 0.0 {
                continue;
            }
            let u = positions[b] - positions[a];
            let v = positions[c] - positions[a];
            let (lu, lv) = (u.norm(), v.norm());
            if lu < MIN_EDGE || lv < MIN_EDGE {
                continue;
            }
            let inv = 1.0 / (lu * lv);
            let cos = u.dot(&v) * inv;
            loss += w * (1.0 + cos);
            let du = (v * inv - u * (cos / (lu * lu))) * w;
            let dv = (u * inv - v * (cos / (lv * lv))) * w;
            grad[b] += du;
            grad[c] += dv;
            grad[a] -= du + dv;
        }
    }
    (loss, grad)
}
