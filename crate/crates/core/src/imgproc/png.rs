//! 8-bit PNG reading and writing.

use std::path::Path;

use image::{ColorType, DynamicImage, ImageFormat};

use super::metrics::ImageF;
use crate::error::{Error, Result};
use crate::grid::Grid;

fn open(path: &Path) -> Result<DynamicImage> {
    image::open(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Image {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    })
}

pub fn read_rgb(path: &Path) -> Result<Grid<[u8; 3]>> {
    let img = open(path)?.to_rgb8();
    let (w, h) = img.dimensions();
    let data = img.pixels().map(|p| p.0).collect();
    Ok(Grid::from_vec(w as usize, h as usize, data))
}

/// Reads a PNG as an interleaved 0..255 image, keeping one channel for
/// grayscale files and three otherwise.
pub fn read_metric_image(path: &Path) -> Result<ImageF> {
    let img = open(path)?;
    let gray = matches!(img.color(), ColorType::L8 | ColorType::L16 | ColorType::La8 | ColorType::La16);
    let (w, h) = (img.width() as usize, img.height() as usize);
    if gray {
        let data = img.to_luma8().into_raw().into_iter().map(f64::from).collect();
        Ok(ImageF {
            width: w,
            height: h,
            channels: 1,
            data,
        })
    } else {
        let data = img.to_rgb8().into_raw().into_iter().map(f64::from).collect();
        Ok(ImageF {
            width: w,
            height: h,
            channels: 3,
            data,
        })
    }
}

/// Luma of `img` on the 0..255 scale (ITU-R 601 weights for color input).
pub fn to_luma(img: &ImageF) -> Grid<f64> {
    let data = match img.channels {
        1 => img.data.clone(),
        c => img.data.chunks(c).map(|px| 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]).collect(),
    };
    Grid::from_vec(img.width, img.height, data)
}

fn write(path: &Path, bytes: &[u8], w: usize, h: usize, color: image::ExtendedColorType) -> Result<()> {
    image::save_buffer_with_format(path, bytes, w as u32, h as u32, color, ImageFormat::Png).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Image {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    })
}

/// Writes values in `[0, 1]` as 8-bit gray (`value * 255`, clamped).
pub fn write_unit_gray(path: &Path, img: &Grid<f64>) -> Result<()> {
    let bytes: Vec<u8> = img.data().iter().map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8).collect();
    write(path, &bytes, img.width(), img.height(), image::ExtendedColorType::L8)
}

pub fn write_mask(path: &Path, mask: &Grid<bool>) -> Result<()> {
    let bytes: Vec<u8> = mask.data().iter().map(|&m| if m { 255 } else { 0 }).collect();
    write(path, &bytes, mask.width(), mask.height(), image::ExtendedColorType::L8)
}

pub fn write_rgb(path: &Path, img: &Grid<[u8; 3]>) -> Result<()> {
    let bytes: Vec<u8> = img.data().iter().flatten().copied().collect();
    write(path, &bytes, img.width(), img.height(), image::ExtendedColorType::Rgb8)
}

/// Depth normalized to 0..255 over the finite entries; background is 255.
pub fn depth_to_unit(depth: &Grid<f64>) -> Grid<f64> {
    let finite = depth.data().iter().copied().filter(|d| d.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
    depth.map(|&d| {
        if !d.is_finite() {
            1.0
        } else if hi > lo {
            (d - lo) / (hi - lo)
        } else {
            0.0
        }
    })
}
