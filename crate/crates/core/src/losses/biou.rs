use crate::error::{Error, Result};
use crate::grid::{Grid, Mask};

/// `1 - sum(I * B) / sum(I + B - I * B)` with plain (signed) sums, and its
/// exact gradient with respect to `B`.
pub fn loss_biou(target: &Mask, bmap: &Grid<f64>) -> Result<(f64, Grid<f64>)> {
    if !target.same_dims(bmap) {
        return Err(Error::ShapeMismatch(format!(
            "target {}x{} vs map {}x{}",
            target.width(),
            target.height(),
            bmap.width(),
            bmap.height()
        )));
    }
    let mut inter = 0.0;
    let mut union = 0.0;
    for (&t, &b) in target.data().iter().zip(bmap.data()) {
        let i = if t { 1.0 } else { 0.0 };
        inter += i * b;
        union += i + b - i * b;
    }
    if union == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let loss = 1.0 - inter / union;
    // d/dB_p: intersection grows with I_p, union with 1 - I_p
    let u2 = union * union;
    let grad = target.map(|&t| if t { -1.0 / union } else { inter / u2 });
    Ok((loss, grad))
}
