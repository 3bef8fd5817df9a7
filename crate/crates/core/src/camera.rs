//! The supervised viewpoint.
//!
//! Pixel coordinates are continuous with the origin at the top-left corner,
//! `+x` right and `+y` down; pixel `(i, j)` has its center at `(i + 0.5, j + 0.5)`.
//! Depth is the camera-space distance along the view axis.

use nalgebra::{Matrix2x3, Vector2};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Vec3};

pub type Vec2 = Vector2<f64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    /// Half of the horizontal visible extent, in model units.
    Orthographic { half_width: f64 },
    /// Vertical field of view in radians.
    Perspective { fov_y: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub projection: Projection,
    pub eye: Vec3,
    pub look_at: Vec3,
    pub up: Vec3,
    pub width: usize,
    pub height: usize,
}

/// Orthonormal camera frame: `right`, `up`, `forward`.
#[derive(Debug, Clone, Copy)]
struct Frame {
    right: Vec3,
    up: Vec3,
    forward: Vec3,
}

impl Camera {
    pub fn new(projection: Projection, eye: Vec3, look_at: Vec3, up: Vec3, width: usize, height: usize) -> Result<Self> {
        let cam = Camera {
            projection,
            eye,
            look_at,
            up,
            width,
            height,
        };
        cam.check()?;
        Ok(cam)
    }

    /// Orthographic front view (looking down `-z`, `+y` up) framing the mesh
    /// bounding box with a 10% margin.
    pub fn front_view(mesh: &Mesh, width: usize, height: usize) -> Result<Self> {
        let (lo, hi) = mesh.bounds();
        let center = (lo + hi) * 0.5;
        let ext = hi - lo;
        let aspect = width as f64 / height as f64;
        let half = 0.5 * ext.x.max(ext.y * aspect);
        let half_width = 1.1 * if half > 0.0 { half } else { 1.0 };
        let distance = ext.norm().max(1.0) * 2.0;
        Camera::new(
            Projection::Orthographic { half_width },
            center + Vec3::new(0.0, 0.0, distance),
            center,
            Vec3::new(0.0, 1.0, 0.0),
            width,
            height,
        )
    }

    pub fn check(&self) -> Result<()> {
        if self.width < 8 || self.height < 8 {
            return Err(Error::InvalidCamera(format!(
                "image must be at least 8x8, got {}x{}",
                self.width, self.height
            )));
        }
        let fwd = self.look_at - self.eye;
        if !(fwd.norm() > 0.0) {
            return Err(Error::InvalidCamera("eye and look_at coincide".into()));
        }
        if !(fwd.normalize().cross(&self.up).norm() > 1e-9) {
            return Err(Error::InvalidCamera("up is parallel to the view direction".into()));
        }
        match self.projection {
            Projection::Orthographic { half_width } if !(half_width > 0.0) => {
                Err(Error::InvalidCamera(format!("half width must be positive, got {half_width}")))
            }
            Projection::Perspective { fov_y } if !(fov_y > 0.0 && fov_y < std::f64::consts::PI) => {
                Err(Error::InvalidCamera(format!("fov must be in (0, pi), got {fov_y}")))
            }
            _ => Ok(()),
        }
    }

    fn frame(&self) -> Frame {
        let forward = (self.look_at - self.eye).normalize();
        let right = forward.cross(&self.up).normalize();
        let up = right.cross(&forward);
        Frame { right, up, forward }
    }

    /// Pixels per model unit for orthographic cameras; focal length in
    /// pixels for perspective ones.
    pub fn scale(&self) -> f64 {
        match self.projection {
            Projection::Orthographic { half_width } => 0.5 * self.width as f64 / half_width,
            Projection::Perspective { fov_y } => 0.5 * self.height as f64 / (0.5 * fov_y).tan(),
        }
    }

    /// Pixels per model unit on the plane through `look_at`.
    pub fn pixels_per_unit(&self) -> f64 {
        match self.projection {
            Projection::Orthographic { .. } => self.scale(),
            Projection::Perspective { .. } => self.scale() / (self.look_at - self.eye).norm(),
        }
    }

    fn center(&self) -> Vec2 {
        Vec2::new(0.5 * self.width as f64, 0.5 * self.height as f64)
    }

    /// Pixel position and camera depth of `p`.
    pub fn project(&self, p: &Vec3) -> Result<(Vec2, f64)> {
        let fr = self.frame();
        self.project_in(&fr, p)
    }

    fn project_in(&self, fr: &Frame, p: &Vec3) -> Result<(Vec2, f64)> {
        let rel = p - self.eye;
        let (xc, yc, zc) = (fr.right.dot(&rel), fr.up.dot(&rel), fr.forward.dot(&rel));
        let s = self.scale();
        let c = self.center();
        match self.projection {
            Projection::Orthographic { .. } => Ok((Vec2::new(c.x + s * xc, c.y - s * yc), zc)),
            Projection::Perspective { .. } => {
                if !(zc > 1e-9) {
                    return Err(Error::BehindEye { depth: zc });
                }
                Ok((Vec2::new(c.x + s * xc / zc, c.y - s * yc / zc), zc))
            }
        }
    }

    /// `J[r][c] = d pixel_r / d p_c`.
    pub fn project_jacobian(&self, p: &Vec3) -> Result<Matrix2x3<f64>> {
        let fr = self.frame();
        self.jacobian_in(&fr, p)
    }

    fn jacobian_in(&self, fr: &Frame, p: &Vec3) -> Result<Matrix2x3<f64>> {
        let s = self.scale();
        match self.projection {
            Projection::Orthographic { .. } => Ok(Matrix2x3::from_rows(&[(fr.right * s).transpose(), (fr.up * -s).transpose()])),
            Projection::Perspective { .. } => {
                let rel = p - self.eye;
                let (xc, yc, zc) = (fr.right.dot(&rel), fr.up.dot(&rel), fr.forward.dot(&rel));
                if !(zc > 1e-9) {
                    return Err(Error::BehindEye { depth: zc });
                }
                let gx = (fr.right / zc - fr.forward * (xc / (zc * zc))) * s;
                let gy = (fr.up / zc - fr.forward * (yc / (zc * zc))) * -s;
                Ok(Matrix2x3::from_rows(&[gx.transpose(), gy.transpose()]))
            }
        }
    }

    /// Projects every point, failing on the first one behind the eye.
    pub fn project_all(&self, points: &[Vec3]) -> Result<(Vec<Vec2>, Vec<f64>)> {
        let fr = self.frame();
        let mut px = Vec::with_capacity(points.len());
        let mut depth = Vec::with_capacity(points.len());
        for p in points {
            let (q, z) = self.project_in(&fr, p)?;
            px.push(q);
            depth.push(z);
        }
        Ok((px, depth))
    }

    pub fn jacobian_all(&self, points: &[Vec3]) -> Result<Vec<Matrix2x3<f64>>> {
        let fr = self.frame();
        points.iter().map(|p| self.jacobian_in(&fr, p)).collect()
    }
}
