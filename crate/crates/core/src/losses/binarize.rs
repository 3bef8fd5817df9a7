use crate::error::{Error, Result};
use crate::grid::Grid;

/// Differentiable binarization `B(s) = a / (1 + |a|)` with `a = k (s - t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinarizeParams {
    pub t: f64,
    pub k: f64,
}

impl Default for BinarizeParams {
    fn default() -> Self {
        BinarizeParams { t: 0.5, k: 100.0 }
    }
}

impl BinarizeParams {
    pub fn check(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t < 1.0) {
            return Err(Error::Config(format!("binarize threshold must be in (0, 1), got {}", self.t)));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::Config(format!("binarize slope must be positive, got {}", self.k)));
        }
        Ok(())
    }

    #[inline]
    pub fn value(&self, s: f64) -> f64 {
        let a = self.k * (s - self.t);
        a / (1.0 + a.abs())
    }

    /// `dB/ds = k / (1 + |a|)^2`, positive everywhere.
    #[inline]
    pub fn derivative(&self, s: f64) -> f64 {
        let a = self.k * (s - self.t);
        let den = 1.0 + a.abs();
        self.k / (den * den)
    }

    /// `B` affinely rescaled so that `B(0) -> 0` and `B(1) -> 1`; this is
    /// the map compared against `{0, 1}` target masks.
    #[inline]
    pub fn unit_value(&self, s: f64) -> f64 {
        let lo = self.value(0.0);
        (self.value(s) - lo) / (self.value(1.0) - lo)
    }

    #[inline]
    pub fn unit_derivative(&self, s: f64) -> f64 {
        self.derivative(s) / (self.value(1.0) - self.value(0.0))
    }
}

/// Elementwise `B(s)`, values in `(-1, 1)`.
pub fn binarize(s: &Grid<f64>, p: &BinarizeParams) -> Grid<f64> {
    s.map(|&v| p.value(v))
}

/// Gradient with respect to `s` given the gradient with respect to `B(s)`.
pub fn binarize_backward(s: &Grid<f64>, grad_out: &Grid<f64>, p: &BinarizeParams) -> Result<Grid<f64>> {
    if !s.same_dims(grad_out) {
        return Err(Error::ShapeMismatch("binarize gradient".into()));
    }
    let data = s.data().iter().zip(grad_out.data()).map(|(&v, &g)| g * p.derivative(v)).collect();
    Ok(Grid::from_vec(s.width(), s.height(), data))
}
