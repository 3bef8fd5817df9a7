use crate::camera::{Camera, Projection};
use crate::mesh::Vec3;
use crate::raster::surface_depth_at;

/// Front/occluded split of the vertices as seen from the camera.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Visibility {
    pub front: Vec<usize>,
    pub occluded: Vec<usize>,
}

impl Visibility {
    pub fn is_front(&self, v: usize) -> bool {
        self.front.binary_search(&v).is_ok()
    }
}

/// A vertex is front when no surface lies more than `tolerance` (model
/// units) nearer to the camera along the ray through its projection.
/// Vertices projecting outside the image, or behind a perspective eye, are
/// occluded.
///
/// The surface depth is evaluated at the vertex's exact projection rather
/// than at a nearby pixel center: on a sloped surface a sub-pixel offset
/// changes the sampled depth by far more than a small tolerance.
pub fn classify_visibility(positions: &[Vec3], faces: &[[usize; 3]], cam: &Camera, tolerance: f64) -> Visibility {
    let projected: Vec<_> = positions.iter().map(|p| cam.project(p).ok()).collect();
    let (w, h) = (cam.width as f64, cam.height as f64);
    let in_image: Vec<usize> = projected
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.filter(|(q, _)| q.x >= 0.0 && q.y >= 0.0 && q.x < w && q.y < h).map(|_| i))
        .collect();
    let queries: Vec<_> = in_image.iter().map(|&i| projected[i].expect("filtered above").0).collect();
    let perspective = matches!(cam.projection, Projection::Perspective { .. });
    let surface = surface_depth_at(&projected, faces, &queries, perspective);

    let mut front = vec![false; positions.len()];
    for (&i, &z_surface) in in_image.iter().zip(&surface) {
        let z = projected[i].expect("filtered above").1;
        front[i] = z <= z_surface + tolerance;
    }
    let mut out = Visibility::default();
    for (i, f) in front.into_iter().enumerate() {
        if f {
            out.front.push(i);
        } else {
            out.occluded.push(i);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh;

    fn cam() -> Camera {
        Camera::new(
            Projection::Orthographic { half_width: 2.0 },
            Vec3::new(0.0, 0.0, 5.0),
            Vec3::zeros(),
            Vec3::new(0.0, 1.0, 0.0),
            32,
            32,
        )
        .unwrap()
    }

    #[test]
    fn single_triangle_all_front() {
        let m = Mesh::unlabeled(
            vec![Vec3::new(-1.0, -1.0, 0.0), Vec3::new(1.0, -1.0, 0.0), Vec3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        );
        let vis = classify_visibility(&m.vertices, &m.faces, &cam(), 1e-3 * m.bbox_diagonal());
        assert_eq!(vis.front, vec![0, 1, 2]);
        assert!(vis.occluded.is_empty());
    }

    #[test]
    fn stacked_triangles_split_by_depth() {
        let m = Mesh::unlabeled(
            vec![
                Vec3::new(-1.0, -1.0, 1.0),
                Vec3::new(1.0, -1.0, 1.0),
                Vec3::new(0.0, 1.0, 1.0),
                Vec3::new(-0.5, -0.5, -1.0),
                Vec3::new(0.5, -0.5, -1.0),
                Vec3::new(0.0, 0.5, -1.0),
            ],
            vec![[0, 1, 2], [3, 4, 5]],
        );
        let vis = classify_visibility(&m.vertices, &m.faces, &cam(), 1e-3 * m.bbox_diagonal());
        assert_eq!(vis.front, vec![0, 1, 2]);
        assert_eq!(vis.occluded, vec![3, 4, 5]);
    }

    #[test]
    fn outside_image_is_occluded() {
        let m = Mesh::unlabeled(
            vec![Vec3::new(10.0, 0.0, 0.0), Vec3::new(11.0, 0.0, 0.0), Vec3::new(10.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        );
        let vis = classify_visibility(&m.vertices, &m.faces, &cam(), 0.0);
        assert_eq!(vis.occluded, vec![0, 1, 2]);
    }
}
