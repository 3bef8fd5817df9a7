//! Fixtures shared by the integration tests.
#![allow(dead_code)]

pub mod oracle;

use deform3d::grid::{Grid, Mask};
use deform3d::imgproc::SemanticImage;
use deform3d::losses::Objective;
use deform3d::mesh::shapes::icosphere;
use deform3d::mesh::{triangle_area, DisplacementField, Mesh, Vec3};
use deform3d::optimizer::RunConfig;

pub const WHITE: [u8; 3] = [255, 255, 255];
pub const BLACK: [u8; 3] = [0, 0, 0];

/// Flat-color ellipse on black, axes in pixels.
pub fn ellipse_image(w: usize, h: usize, center: (f64, f64), radii: (f64, f64), color: [u8; 3]) -> SemanticImage {
    Grid::from_fn(w, h, |x, y| {
        let u = (x as f64 + 0.5 - center.0) / radii.0;
        let v = (y as f64 + 0.5 - center.1) / radii.1;
        if u * u + v * v <= 1.0 {
            color
        } else {
            BLACK
        }
    })
}

pub fn mask_of(img: &SemanticImage, color: [u8; 3]) -> Mask {
    img.map(|p| *p == color)
}

pub fn iou(a: &Mask, b: &Mask) -> f64 {
    let inter = a.data().iter().zip(b.data()).filter(|(x, y)| **x && **y).count();
    let union = a.data().iter().zip(b.data()).filter(|(x, y)| **x || **y).count();
    inter as f64 / union as f64
}

/// Hard-thresholded render of every view, merged.
pub fn hard_render(objective: &Objective, d: &DisplacementField) -> Mask {
    let (w, h) = (objective.camera.width, objective.camera.height);
    let mut out = Grid::new(w, h, false);
    for i in 0..objective.targets.len() {
        let hard = objective.threshold(&objective.render_view(i, d).unwrap().values);
        for (o, v) in out.data_mut().iter_mut().zip(hard.data()) {
            *o |= *v;
        }
    }
    out
}

pub fn min_triangle_area(mesh: &Mesh) -> f64 {
    mesh.faces
        .iter()
        .map(|f| triangle_area(&mesh.vertices[f[0]], &mesh.vertices[f[1]], &mesh.vertices[f[2]]))
        .fold(f64::INFINITY, f64::min)
}

/// The desk-scale fixture: 642-vertex unit icosphere, front view at 128x128,
/// target ellipse wider and flatter than the sphere's disk.
pub fn sphere_ellipse() -> (Mesh, SemanticImage) {
    let mesh = icosphere(3, 1.0);
    let img = ellipse_image(128, 128, (64.0, 64.0), (62.0, 44.0), WHITE);
    (mesh, img)
}

/// A second fixture: an egg-shaped sphere (back half pushed out) under a
/// tall off-center ellipse.
pub fn egg_ellipse() -> (Mesh, SemanticImage) {
    let mut mesh = icosphere(3, 1.0);
    for v in &mut mesh.vertices {
        if v.z < 0.0 {
            v.z *= 1.6;
        }
        v.x *= if v.z < 0.0 { 0.85 } else { 1.0 };
    }
    let img = ellipse_image(128, 128, (60.0, 66.0), (46.0, 58.0), WHITE);
    (mesh, img)
}

pub fn desk_config(iterations: usize) -> RunConfig {
    let mut cfg = RunConfig::with_size(128, 128);
    cfg.iterations = iterations;
    cfg
}

pub fn vec3(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3::new(x, y, z)
}

/// Random mask with roughly `density` white pixels and at least one pixel of
/// each class.
pub fn random_mask(rng: &mut impl rand::Rng, w: usize, h: usize, density: f64) -> Mask {
    let mut m = Grid::from_fn(w, h, |_, _| rng.gen_bool(density));
    *m.get_mut(rng.gen_range(0..w), rng.gen_range(0..h)) = true;
    let (x, y) = (rng.gen_range(0..w), rng.gen_range(0..h));
    if m.data().iter().all(|&b| b) {
        *m.get_mut(x, y) = false;
    }
    m
}

/// `n` random projected points and a random front/occluded split, both
/// sorted.
pub fn random_split(rng: &mut impl rand::Rng, n: usize, extent: f64) -> (Vec<deform3d::Vec2>, deform3d::losses::Visibility) {
    let pts = (0..n)
        .map(|_| deform3d::Vec2::new(rng.gen_range(0.0..extent), rng.gen_range(0.0..extent)))
        .collect();
    let mut vis = deform3d::losses::Visibility::default();
    for i in 0..n {
        if rng.gen_bool(0.5) {
            vis.front.push(i);
        } else {
            vis.occluded.push(i);
        }
    }
    (pts, vis)
}

/// Random triangle soup over `n` vertices with face labels drawn from
/// `1..=labels`.
pub fn random_labeled_mesh(rng: &mut impl rand::Rng, n: usize, faces: usize, labels: u32) -> Mesh {
    let vertices = (0..n).map(|_| vec3(rng.gen(), rng.gen(), rng.gen())).collect();
    let faces = (0..faces)
        .map(|_| {
            let a = rng.gen_range(0..n);
            let mut b = rng.gen_range(0..n);
            while b == a {
                b = rng.gen_range(0..n);
            }
            let mut c = rng.gen_range(0..n);
            while c == a || c == b {
                c = rng.gen_range(0..n);
            }
            [a, b, c]
        })
        .collect();
    let mut mesh = Mesh::unlabeled(vertices, faces);
    mesh.face_labels = (0..mesh.num_faces()).map(|_| rng.gen_range(1..=labels)).collect();
    mesh
}
