use super::edt::{distance_transform, Target};
use crate::error::{Error, Result};
use crate::grid::{Grid, Mask};

/// Orientation of the boundary weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightDirection {
    /// `(1 - d)^rho`: largest on the mask boundary.
    #[default]
    NearBoundary,
    /// `d^rho`: largest far from the boundary.
    FarFromBoundary,
}

/// Per-pixel boundary weight in `[0, 1]`.
///
/// `d(p)` is the mean of the distances to the nearest white and nearest black
/// pixel (one of the two is zero), min-max normalized over the image so the
/// pixels closest to the boundary get `d = 0` and the farthest get `d = 1`.
pub fn boundary_weight(mask: &Mask, rho: f64, direction: WeightDirection) -> Result<Grid<f64>> {
    let has_white = mask.data().iter().any(|&m| m);
    let has_black = mask.data().iter().any(|&m| !m);
    if !(has_white && has_black) {
        return Err(Error::SingleClassMask);
    }
    let to_white = distance_transform(mask, Target::White)?;
    let to_black = distance_transform(mask, Target::Black)?;
    let d: Vec<f64> = to_white.data().iter().zip(to_black.data()).map(|(a, b)| 0.5 * (a + b)).collect();
    let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let weights = d
        .iter()
        .map(|&v| {
            let n = if span > 0.0 { (v - lo) / span } else { 0.0 };
            match direction {
                WeightDirection::NearBoundary => (1.0 - n).powf(rho),
                WeightDirection::FarFromBoundary => n.powf(rho),
            }
        })
        .collect();
    Ok(Grid::from_vec(mask.width(), mask.height(), weights))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_plane() -> Mask {
        Grid::from_fn(12, 6, |x, _| x < 4)
    }

    #[test]
    fn boundary_pixels_weigh_one() {
        let w = boundary_weight(&half_plane(), 16.0, WeightDirection::NearBoundary).unwrap();
        assert_eq!(*w.get(3, 2), 1.0);
        assert_eq!(*w.get(4, 2), 1.0);
        // column 11 is the farthest from the boundary
        assert_eq!(*w.get(11, 0), 0.0);
        assert!(w.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn literal_direction_flips_endpoints() {
        let w = boundary_weight(&half_plane(), 16.0, WeightDirection::FarFromBoundary).unwrap();
        assert_eq!(*w.get(11, 0), 1.0);
        assert_eq!(*w.get(4, 0), 0.0);
    }

    #[test]
    fn single_class_is_rejected() {
        assert!(matches!(
            boundary_weight(&Grid::new(8, 8, true), 2.0, WeightDirection::NearBoundary),
            Err(Error::SingleClassMask)
        ));
    }
}
