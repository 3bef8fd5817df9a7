//! Similarity metrics on 0..255-scaled images.

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Interleaved `height x width x channels` image on the 0..255 scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageF {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl ImageF {
    pub fn from_gray(g: &Grid<f64>) -> Self {
        ImageF {
            width: g.width(),
            height: g.height(),
            channels: 1,
            data: g.data().to_vec(),
        }
    }
}

/// `sum (a - b)^2 / (C * H * W * 255)`, in `[0, 255]`.
pub fn mse(a: &ImageF, b: &ImageF) -> Result<f64> {
    if (a.width, a.height, a.channels) != (b.width, b.height, b.channels) || a.data.len() != b.data.len() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width, a.height, a.channels, b.width, b.height, b.channels
        )));
    }
    let sum: f64 = a.data.iter().zip(&b.data).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sum / (a.channels * a.height * a.width) as f64 / 255.0)
}

const WINDOW: usize = 11;
const WINDOW_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;
const DYNAMIC_RANGE: f64 = 255.0;

fn gaussian_window() -> [[f64; WINDOW]; WINDOW] {
    let c = (WINDOW / 2) as f64;
    let mut w = [[0.0; WINDOW]; WINDOW];
    let mut total = 0.0;
    for (i, row) in w.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (dy, dx) = (i as f64 - c, j as f64 - c);
            *v = (-(dx * dx + dy * dy) / (2.0 * WINDOW_SIGMA * WINDOW_SIGMA)).exp();
            total += *v;
        }
    }
    for row in &mut w {
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    w
}

/// Mean structural similarity over all fully contained 11x11 Gaussian
/// windows (sigma 1.5), grayscale on the 0..255 scale.
pub fn ssim(a: &Grid<f64>, b: &Grid<f64>) -> Result<f64> {
    if !a.same_dims(b) {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let (w, h) = a.dims();
    if w < WINDOW || h < WINDOW {
        return Err(Error::ShapeMismatch(format!(
            "{w}x{h} is smaller than the {WINDOW}x{WINDOW} window"
        )));
    }
    let win = gaussian_window();
    let c1 = (K1 * DYNAMIC_RANGE).powi(2);
    let c2 = (K2 * DYNAMIC_RANGE).powi(2);
    let mut total = 0.0;
    let mut count = 0usize;
    for y in 0..=h - WINDOW {
        for x in 0..=w - WINDOW {
            let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (i, row) in win.iter().enumerate() {
                for (j, &g) in row.iter().enumerate() {
                    let va = *a.get(x + j, y + i);
                    let vb = *b.get(x + j, y + i);
                    ma += g * va;
                    mb += g * vb;
                    saa += g * va * va;
                    sbb += g * vb * vb;
                    sab += g * va * vb;
                }
            }
            let var_a = saa - ma * ma;
            let var_b = sbb - mb * mb;
            let cov = sab - ma * mb;
            let num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
            let den = (ma * ma + mb * mb + c1) * (var_a + var_b + c2);
            total += num / den;
            count += 1;
        }
    }
    Ok(total / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(channels: usize, w: usize, h: usize, f: impl Fn(usize) -> f64) -> ImageF {
        ImageF {
            width: w,
            height: h,
            channels,
            data: (0..w * h * channels).map(f).collect(),
        }
    }

    #[test]
    fn mse_examples() {
        let a = img(3, 5, 4, |i| (i % 256) as f64);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        let white = img(3, 5, 4, |_| 255.0);
        let black = img(3, 5, 4, |_| 0.0);
        assert_eq!(mse(&white, &black).unwrap(), 255.0);
        let half = img(1, 4, 4, |i| if i < 8 { 255.0 } else { 0.0 });
        let zero = img(1, 4, 4, |_| 0.0);
        assert_eq!(mse(&half, &zero).unwrap(), 127.5);
        assert!(mse(&half, &white).is_err());
    }

    #[test]
    fn ssim_identity_and_constants() {
        let a = Grid::from_fn(16, 16, |x, y| ((x * 7 + y * 13) % 256) as f64);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let c = Grid::new(12, 12, 77.0);
        assert!((ssim(&c, &c).unwrap() - 1.0).abs() < 1e-12);
        assert!(ssim(&Grid::new(10, 12, 0.0), &Grid::new(10, 12, 0.0)).is_err());
    }

    #[test]
    fn checker_negative_is_anticorrelated() {
        let a = Grid::from_fn(16, 16, |x, y| if (x + y) % 2 == 0 { 255.0 } else { 0.0 });
        let b = a.map(|v| 255.0 - v);
        let s = ssim(&a, &b).unwrap();
        assert!((-1.0..0.0).contains(&s), "{s}");
        assert!((s - ssim(&b, &a).unwrap()).abs() < 1e-15);
    }
}
