//! Per-label local views of the global mesh.
//!
//! A [`LocalView`] is an index map, not a copy: local vertex `i` is global
//! vertex `global_vertex_ids[i]`. [`gather`] reads global data into local
//! order and [`scatter_add`] is its adjoint, so gradients of per-view losses
//! land on the single global displacement field. Vertices on the border
//! between two labels belong to both views and collect both contributions.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Vec3};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalView {
    pub label: u32,
    /// Sorted, unique.
    pub global_vertex_ids: Vec<usize>,
    pub local_faces: Vec<[usize; 3]>,
    /// Global index of each local face.
    pub global_faces: Vec<usize>,
}

impl LocalView {
    pub fn num_vertices(&self) -> usize {
        self.global_vertex_ids.len()
    }
}

/// One view per distinct face label, in ascending label order.
pub fn build_local_views(mesh: &Mesh) -> Vec<LocalView> {
    let mut by_label: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (fi, &label) in mesh.face_labels.iter().enumerate() {
        by_label.entry(label).or_default().push(fi);
    }
    by_label
        .into_iter()
        .map(|(label, global_faces)| {
            let mut ids: Vec<usize> = global_faces.iter().flat_map(|&f| mesh.faces[f]).collect();
            ids.sort_unstable();
            ids.dedup();
            let local_faces = global_faces
                .iter()
                .map(|&f| mesh.faces[f].map(|g| ids.binary_search(&g).expect("vertex collected above")))
                .collect();
            LocalView {
                label,
                global_vertex_ids: ids,
                local_faces,
                global_faces,
            }
        })
        .collect()
}

/// `local[i] = global[view.global_vertex_ids[i]]`.
pub fn gather<T: Clone>(global: &[T], view: &LocalView) -> Result<Vec<T>> {
    view.global_vertex_ids
        .iter()
        .map(|&g| {
            global.get(g).cloned().ok_or(Error::IndexOutOfRange {
                index: g,
                len: global.len(),
            })
        })
        .collect()
}

/// `accum[g] += local[i]` for every local index mapping to `g`.
pub fn scatter_add(local: &[Vec3], view: &LocalView, accum: &mut [Vec3]) -> Result<()> {
    scatter_add_with(local, view, accum)
}

pub(crate) fn scatter_add_with<T: Copy + std::ops::AddAssign>(local: &[T], view: &LocalView, accum: &mut [T]) -> Result<()> {
    if local.len() != view.num_vertices() {
        return Err(Error::LengthMismatch {
            what: "local gradient",
            expected: view.num_vertices(),
            got: local.len(),
        });
    }
    if let Some(&bad) = view.global_vertex_ids.last().filter(|&&g| g >= accum.len()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            len: accum.len(),
        });
    }
    for (&g, &v) in view.global_vertex_ids.iter().zip(local) {
        accum[g] += v;
    }
    Ok(())
}
