//! Triangle meshes with per-face semantic labels.
//!
//! A [`Mesh`] never changes once built; deformation is expressed as a separate
//! [`DisplacementField`] that the optimizer owns and updates.

mod obj;
pub mod shapes;

use std::collections::BTreeMap;

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub use obj::{load_obj, load_obj_file, mtllib_references, save_mtl, save_obj, to_obj_string};

pub type Vec3 = Vector3<f64>;

/// Label id given to faces that carry no material.
pub const DEFAULT_LABEL: u32 = 0;
pub const DEFAULT_LABEL_NAME: &str = "default";
/// Faces without a material render as white regions.
pub const DEFAULT_LABEL_COLOR: [u8; 3] = [255, 255, 255];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Label {
    pub name: String,
    pub color: [u8; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    pub face_labels: Vec<u32>,
    pub label_table: BTreeMap<u32, Label>,
}

impl Mesh {
    /// Builds a mesh whose faces all carry the default label.
    pub fn unlabeled(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Self {
        let face_labels = vec![DEFAULT_LABEL; faces.len()];
        let mut label_table = BTreeMap::new();
        label_table.insert(
            DEFAULT_LABEL,
            Label {
                name: DEFAULT_LABEL_NAME.to_string(),
                color: DEFAULT_LABEL_COLOR,
            },
        );
        Mesh {
            vertices,
            faces,
            face_labels,
            label_table,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    /// Axis-aligned bounding box as `(min, max)`.
    pub fn bounds(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        if self.vertices.is_empty() {
            return 0.0;
        }
        let (lo, hi) = self.bounds();
        (hi - lo).norm()
    }

    /// Distinct labels used by at least one face, in ascending id order.
    pub fn used_labels(&self) -> Vec<u32> {
        let mut labels = self.face_labels.clone();
        labels.sort_unstable();
        labels.dedup();
        labels
    }

    pub fn label_name(&self, id: u32) -> String {
        self.label_table
            .get(&id)
            .map(|l| l.name.clone())
            .unwrap_or_else(|| format!("#{id}"))
    }
}

/// Per-vertex offsets added to the source positions.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    pub offsets: Vec<Vec3>,
}

impl DisplacementField {
    pub fn zeros(n: usize) -> Self {
        DisplacementField {
            offsets: vec![Vec3::zeros(); n],
        }
    }

    pub fn uniform(n: usize, offset: Vec3) -> Self {
        DisplacementField { offsets: vec![offset; n] }
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.offsets.iter().all(|o| o.iter().all(|c| c.is_finite()))
    }

    pub fn max_norm(&self) -> f64 {
        self.offsets.iter().map(|o| o.amax()).fold(0.0, f64::max)
    }

    /// Iterates `x0 y0 z0 x1 ...`.
    pub fn components(&self) -> impl Iterator<Item = f64> + '_ {
        self.offsets.iter().flat_map(|o| o.iter().copied())
    }

    pub fn components_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.offsets.iter_mut().flat_map(|o| o.iter_mut())
    }
}

impl std::ops::Add for &DisplacementField {
    type Output = DisplacementField;

    fn add(self, rhs: &DisplacementField) -> DisplacementField {
        DisplacementField {
            offsets: self.offsets.iter().zip(&rhs.offsets).map(|(a, b)| a + b).collect(),
        }
    }
}

/// Returns `T = (V + D, E)`, keeping faces and labels.
pub fn apply_displacement(mesh: &Mesh, d: &DisplacementField) -> Result<Mesh> {
    check_len(mesh, d)?;
    let mut out = mesh.clone();
    for (v, o) in out.vertices.iter_mut().zip(&d.offsets) {
        *v += o;
    }
    Ok(out)
}

pub(crate) fn check_len(mesh: &Mesh, d: &DisplacementField) -> Result<()> {
    if d.len() != mesh.num_vertices() {
        return Err(Error::LengthMismatch {
            what: "displacement field",
            expected: mesh.num_vertices(),
            got: d.len(),
        });
    }
    Ok(())
}

/// Deformed positions `V + D`.
pub fn deformed_positions(mesh: &Mesh, d: &DisplacementField) -> Result<Vec<Vec3>> {
    check_len(mesh, d)?;
    Ok(mesh.vertices.iter().zip(&d.offsets).map(|(v, o)| v + o).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyInfo {
    pub vertex_neighbors: Vec<Vec<usize>>,
    /// Undirected edges stored as `(lo, hi)` with `lo < hi`, sorted.
    pub edges: Vec<(usize, usize)>,
    pub vertex_faces: Vec<Vec<usize>>,
}

pub fn build_adjacency(mesh: &Mesh) -> AdjacencyInfo {
    let n = mesh.num_vertices();
    let mut edges = Vec::with_capacity(mesh.num_faces() * 3);
    let mut vertex_faces = vec![Vec::new(); n];
    for (fi, f) in mesh.faces.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            if a != b {
                edges.push((a.min(b), a.max(b)));
            }
        }
        for (k, &v) in f.iter().enumerate() {
            // a degenerate triple lists the face once per vertex
            if !f[..k].contains(&v) {
                vertex_faces[v].push(fi);
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();

    let mut vertex_neighbors = vec![Vec::new(); n];
    for &(a, b) in &edges {
        vertex_neighbors[a].push(b);
        vertex_neighbors[b].push(a);
    }
    for nbrs in &mut vertex_neighbors {
        nbrs.sort_unstable();
    }
    AdjacencyInfo {
        vertex_neighbors,
        edges,
        vertex_faces,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    TooFewVertices(usize),
    NoFaces,
    FaceIndexOutOfRange { face: usize, index: usize },
    DegenerateIndexTriple { face: usize },
    LabelCountMismatch { labels: usize, faces: usize },
    UnknownLabel { face: usize, label: u32 },
    NonFiniteVertex { vertex: usize },
    ZeroAreaFace { face: usize, area: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::TooFewVertices(n) => write!(f, "too few vertices ({n} < 3)"),
            Violation::NoFaces => write!(f, "mesh has no faces"),
            Violation::FaceIndexOutOfRange { face, index } => {
                write!(f, "face {face}: vertex index {index} out of range")
            }
            Violation::DegenerateIndexTriple { face } => {
                write!(f, "face {face}: degenerate index triple")
            }
            Violation::LabelCountMismatch { labels, faces } => {
                write!(f, "{labels} face labels for {faces} faces")
            }
            Violation::UnknownLabel { face, label } => {
                write!(f, "face {face}: label {label} missing from label table")
            }
            Violation::NonFiniteVertex { vertex } => {
                write!(f, "vertex {vertex}: non-finite position")
            }
            Violation::ZeroAreaFace { face, area } => {
                write!(f, "face {face}: zero-area face (area {area:e})")
            }
        }
    }
}

/// Lists every broken mesh invariant; an empty list means the mesh is usable.
pub fn validate(mesh: &Mesh) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = mesh.num_vertices();
    if n < 3 {
        out.push(Violation::TooFewVertices(n));
    }
    if mesh.faces.is_empty() {
        out.push(Violation::NoFaces);
    }
    for (i, v) in mesh.vertices.iter().enumerate() {
        if !v.iter().all(|c| c.is_finite()) {
            out.push(Violation::NonFiniteVertex { vertex: i });
        }
    }
    if mesh.face_labels.len() != mesh.faces.len() {
        out.push(Violation::LabelCountMismatch {
            labels: mesh.face_labels.len(),
            faces: mesh.faces.len(),
        });
    }
    for (fi, label) in mesh.face_labels.iter().enumerate() {
        if !mesh.label_table.contains_key(label) {
            out.push(Violation::UnknownLabel { face: fi, label: *label });
        }
    }

    let diag = mesh.bbox_diagonal();
    let min_area = 1e-12 * diag * diag;
    for (fi, f) in mesh.faces.iter().enumerate() {
        if let Some(&bad) = f.iter().find(|&&i| i >= n) {
            out.push(Violation::FaceIndexOutOfRange { face: fi, index: bad });
            continue;
        }
        if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
            out.push(Violation::DegenerateIndexTriple { face: fi });
            continue;
        }
        let area = triangle_area(&mesh.vertices[f[0]], &mesh.vertices[f[1]], &mesh.vertices[f[2]]);
        if !(area >= min_area) || area == 0.0 {
            out.push(Violation::ZeroAreaFace { face: fi, area });
        }
    }
    out
}

pub fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}
