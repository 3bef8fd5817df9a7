//! Exact Euclidean distance transform by separable lower envelopes of
//! parabolas. Squared distances between pixel centers are integers, so the
//! result is bit-identical to a brute-force nearest-pixel search.

use crate::error::{Error, Result};
use crate::grid::{Grid, Mask};

/// Which pixel class distances are measured to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    White,
    Black,
}

/// Distance from every pixel center to the nearest pixel center of class
/// `to`; zero on that class.
pub fn distance_transform(mask: &Mask, to: Target) -> Result<Grid<f64>> {
    Ok(squared_distance_transform(mask, to)?.map(|d| d.sqrt()))
}

/// Squared variant of [`distance_transform`]; entries are integers.
pub fn squared_distance_transform(mask: &Mask, to: Target) -> Result<Grid<f64>> {
    let want = to == Target::White;
    if !mask.data().contains(&want) {
        return Err(Error::EmptyTargetClass);
    }
    let (w, h) = mask.dims();
    let mut grid: Grid<Option<f64>> = mask.map(|&m| if m == want { Some(0.0) } else { None });

    let mut scratch = Envelope::with_capacity(w.max(h));
    let mut column = vec![None; h];
    let mut out = vec![None; w.max(h)];
    for x in 0..w {
        for y in 0..h {
            column[y] = *grid.get(x, y);
        }
        scratch.transform(&column, &mut out[..h]);
        for y in 0..h {
            *grid.get_mut(x, y) = out[y];
        }
    }
    let mut row = vec![None; w];
    for y in 0..h {
        row.copy_from_slice(&grid.data()[y * w..(y + 1) * w]);
        scratch.transform(&row, &mut out[..w]);
        grid.data_mut()[y * w..(y + 1) * w].copy_from_slice(&out[..w]);
    }
    // every column or row pass has at least one finite sample once the
    // target class is nonempty
    Ok(grid.map(|d| d.expect("target class is nonempty")))
}

struct Envelope {
    vertices: Vec<usize>,
    bounds: Vec<f64>,
}

impl Envelope {
    fn with_capacity(n: usize) -> Self {
        Envelope {
            vertices: Vec::with_capacity(n),
            bounds: Vec::with_capacity(n + 1),
        }
    }

    /// `out[q] = min_p (q - p)^2 + f[p]` over finite samples; `None` when
    /// `f` has none.
    fn transform(&mut self, f: &[Option<f64>], out: &mut [Option<f64>]) {
        self.vertices.clear();
        self.bounds.clear();
        for (q, fq) in f.iter().enumerate() {
            let Some(fq) = *fq else { continue };
            let qf = q as f64;
            loop {
                let Some(&v) = self.vertices.last() else {
                    self.vertices.push(q);
                    self.bounds.push(f64::NEG_INFINITY);
                    break;
                };
                let vf = v as f64;
                let fv = f[v].expect("envelope holds finite samples");
                let s = ((fq + qf * qf) - (fv + vf * vf)) / (2.0 * qf - 2.0 * vf);
                if s <= *self.bounds.last().expect("bounds track vertices") {
                    self.vertices.pop();
                    self.bounds.pop();
                } else {
                    self.vertices.push(q);
                    self.bounds.push(s);
                    break;
                }
            }
        }
        if self.vertices.is_empty() {
            out.iter_mut().for_each(|o| *o = None);
            return;
        }
        let mut k = 0;
        for (q, slot) in out.iter_mut().enumerate() {
            let qf = q as f64;
            while k + 1 < self.vertices.len() && self.bounds[k + 1] < qf {
                k += 1;
            }
            let v = self.vertices[k];
            let dq = qf - v as f64;
            *slot = Some(dq * dq + f[v].expect("envelope holds finite samples"));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_white_pixel_corners() {
        let mask = Grid::from_fn(3, 3, |x, y| x == 1 && y == 1);
        let d = distance_transform(&mask, Target::White).unwrap();
        assert_eq!(*d.get(0, 0), 2f64.sqrt());
        assert_eq!(*d.get(1, 0), 1.0);
        assert_eq!(*d.get(1, 1), 0.0);
    }

    #[test]
    fn all_white_to_white_is_zero() {
        let mask = Grid::new(5, 4, true);
        let d = distance_transform(&mask, Target::White).unwrap();
        assert!(d.data().iter().all(|&v| v == 0.0));
        assert!(matches!(distance_transform(&mask, Target::Black), Err(Error::EmptyTargetClass)));
    }

    #[test]
    fn one_dimensional_envelope() {
        let mask = Grid::from_fn(7, 1, |x, _| x == 0 || x == 6);
        let d = squared_distance_transform(&mask, Target::White).unwrap();
        assert_eq!(d.data(), &[0.0, 1.0, 4.0, 9.0, 4.0, 1.0, 0.0]);
    }
}
