use crate::error::{Error, Result};
use crate::mesh::{DisplacementField, Vec3};

/// Per-vertex gradient norms are clipped to this before the update.
pub const DEFAULT_CLIP: f64 = 1e6;

/// Bias-corrected Adam over the flattened displacement field.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub clip: f64,
}

impl AdamState {
    pub fn new(num_vertices: usize, lr: f64) -> Self {
        AdamState {
            m: vec![0.0; 3 * num_vertices],
            v: vec![0.0; 3 * num_vertices],
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            clip: DEFAULT_CLIP,
        }
    }
}

/// One Adam update of `d` in place.
pub fn adam_step(state: &mut AdamState, d: &mut DisplacementField, grad: &[Vec3]) -> Result<()> {
    let n = d.len();
    if grad.len() != n {
        return Err(Error::LengthMismatch {
            what: "gradient",
            expected: n,
            got: grad.len(),
        });
    }
    if state.m.len() != 3 * n || state.v.len() != 3 * n {
        return Err(Error::LengthMismatch {
            what: "optimizer state",
            expected: 3 * n,
            got: state.m.len(),
        });
    }
    if let Some(i) = grad.iter().position(|g| !g.iter().all(|c| c.is_finite())) {
        return Err(Error::NonFinite {
            term: format!("gradient at vertex {i}"),
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    for (i, g) in grad.iter().enumerate() {
        let norm = g.norm();
        let g = if norm > state.clip { g * (state.clip / norm) } else { *g };
        for c in 0..3 {
            let k = 3 * i + c;
            state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g[c];
            state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g[c] * g[c];
            let m_hat = state.m[k] / c1;
            let v_hat = state.v[k] / c2;
            d.offsets[i][c] -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
        }
    }
    Ok(())
}
