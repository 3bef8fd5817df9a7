use crate::error::Result;
use crate::mesh::{AdjacencyInfo, DisplacementField, Vec3};

/// `sum over edges ||D_i - D_j||^2` and its gradient.
pub fn loss_rig(d: &DisplacementField, adj: &AdjacencyInfo) -> Result<(f64, Vec<Vec3>)> {
    let n = d.len();
    if adj.vertex_neighbors.len() != n {
        return Err(crate::error::Error::LengthMismatch {
            what: "adjacency",
            expected: n,
            got: adj.vertex_neighbors.len(),
        });
    }
    let mut grad = vec![Vec3::zeros(); n];
    let mut loss = 0.0;
    for &(i, j) in &adj.edges {
        let diff = d.offsets[i] - d.offsets[j];
        loss += diff.norm_squared();
        grad[i] += diff * 2.0;
        grad[j] -= diff * 2.0;
    }
    Ok((loss, grad))
}

/// `sum_i ||p_i - mean of neighbors||^2` over `positions` and its gradient.
/// Isolated vertices contribute nothing.
pub fn loss_lap(positions: &[Vec3], adj: &AdjacencyInfo) -> Result<(f64, Vec<Vec3>)> {
    let n = positions.len();
    if adj.vertex_neighbors.len() != n {
        return Err(crate::error::Error::LengthMismatch {
            what: "adjacency",
            expected: n,
            got: adj.vertex_neighbors.len(),
        });
    }
    let mut grad = vec![Vec3::zeros(); n];
    let mut loss = 0.0;
    for (i, nbrs) in adj.vertex_neighbors.iter().enumerate() {
        if nbrs.is_empty() {
            continue;
        }
        let inv = 1.0 / nbrs.len() as f64;
        let mean = nbrs.iter().fold(Vec3::zeros(), |acc, &j| acc + positions[j]) * inv;
        let delta = positions[i] - mean;
        loss += delta.norm_squared();
        grad[i] += delta * 2.0;
        let g = delta * (-2.0 * inv);
        for &j in nbrs {
            grad[j] += g;
        }
    }
    Ok((loss, grad))
}
