//! Wavefront OBJ/MTL reading and writing.
//!
//! Only `v`, `f`, `usemtl` and `mtllib` are interpreted on the OBJ side and
//! `newmtl`/`Kd` on the MTL side. Each material becomes one semantic label.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{check_len, DisplacementField, Label, Mesh, Vec3, DEFAULT_LABEL, DEFAULT_LABEL_COLOR, DEFAULT_LABEL_NAME};
use crate::error::{Error, Result};

/// Parses OBJ text, taking material colors from `mtl` when given.
pub fn load_obj(obj: &str, mtl: Option<&str>) -> Result<Mesh> {
    let colors = match mtl {
        Some(text) => parse_mtl(text)?,
        None => BTreeMap::new(),
    };

    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut face_labels = Vec::new();
    let mut label_table = BTreeMap::new();
    let mut ids: BTreeMap<String, u32> = BTreeMap::new();
    let mut current = DEFAULT_LABEL;
    // (line, vertex tokens), resolved after all vertices are known so that
    // faces may precede the vertices they use
    let mut pending: Vec<(usize, Vec<i64>)> = Vec::new();

    for (lineno, raw) in obj.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        let Some(keyword) = tokens.next() else { continue };
        match keyword {
            "v" => {
                let coords: Vec<f64> = tokens
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::parse(line_no, format!("bad vertex coordinate: {e}")))?;
                if coords.len() != 3 {
                    return Err(Error::parse(line_no, "vertex needs three coordinates"));
                }
                vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            "f" => {
                let mut idx = Vec::new();
                for t in tokens {
                    let head = t.split('/').next().unwrap_or("");
                    let i: i64 = head.parse().map_err(|_| Error::parse(line_no, format!("bad face index '{t}'")))?;
                    if i == 0 {
                        return Err(Error::parse(line_no, "face index 0 (OBJ indices are 1-based)"));
                    }
                    // relative indices count back from the vertices seen so far
                    let abs = if i < 0 { vertices.len() as i64 + i + 1 } else { i };
                    if abs <= 0 {
                        return Err(Error::parse(line_no, format!("relative face index {i} before any vertex")));
                    }
                    idx.push(abs);
                }
                if idx.len() < 3 {
                    return Err(Error::parse(
                        line_no,
                        format!("polygon with {} vertices cannot be triangulated", idx.len()),
                    ));
                }
                for k in 1..idx.len() - 1 {
                    pending.push((line_no, vec![idx[0], idx[k], idx[k + 1]]));
                    face_labels.push(current);
                }
            }
            "usemtl" => {
                let name = tokens.collect::<Vec<_>>().join(" ");
                if name.is_empty() {
                    return Err(Error::parse(line_no, "usemtl without a material name"));
                }
                if name == DEFAULT_LABEL_NAME && !colors.contains_key(&name) {
                    current = DEFAULT_LABEL;
                    label_table.entry(DEFAULT_LABEL).or_insert_with(default_label);
                    continue;
                }
                let next_id = ids.len() as u32 + 1;
                let id = *ids.entry(name.clone()).or_insert(next_id);
                if let std::collections::btree_map::Entry::Vacant(e) = label_table.entry(id) {
                    let color = match (mtl, colors.get(&name)) {
                        (_, Some(c)) => *c,
                        (None, None) => return Err(Error::parse(line_no, format!("material '{name}' used but no MTL supplied"))),
                        (Some(_), None) => return Err(Error::parse(line_no, format!("material '{name}' has no Kd color in the MTL"))),
                    };
                    e.insert(Label { name, color });
                }
                current = id;
            }
            _ => {}
        }
    }

    for (face_no, (_line, idx)) in pending.iter().enumerate() {
        let mut tri = [0usize; 3];
        for (slot, &i) in tri.iter_mut().zip(idx) {
            if i as usize > vertices.len() {
                return Err(Error::FaceIndexOutOfRange {
                    face: face_no,
                    index: i,
                    count: vertices.len(),
                });
            }
            *slot = (i - 1) as usize;
        }
        faces.push(tri);
    }
    if face_labels.contains(&DEFAULT_LABEL) {
        label_table.entry(DEFAULT_LABEL).or_insert_with(default_label);
    }

    Ok(Mesh {
        vertices,
        faces,
        face_labels,
        label_table,
    })
}

fn default_label() -> Label {
    Label {
        name: DEFAULT_LABEL_NAME.to_string(),
        color: DEFAULT_LABEL_COLOR,
    }
}

/// Reads an OBJ file and every MTL file it references (relative to the OBJ's
/// directory). A referenced MTL that cannot be read is an error.
pub fn load_obj_file(path: &Path) -> Result<Mesh> {
    let obj = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let refs = mtllib_references(&obj);
    if refs.is_empty() {
        return load_obj(&obj, None);
    }
    let mut mtl = String::new();
    for r in refs {
        let p = dir.join(&r);
        mtl.push_str(&std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?);
        mtl.push('\n');
    }
    load_obj(&obj, Some(&mtl))
}

/// `mtllib` file names referenced by an OBJ, in order of appearance.
pub fn mtllib_references(obj: &str) -> Vec<String> {
    obj.lines()
        .filter_map(|l| {
            let l = l.split('#').next()?.trim();
            l.strip_prefix("mtllib")
                .filter(|r| r.starts_with(char::is_whitespace))
                .map(|r| r.trim().to_string())
        })
        .filter(|s| !s.is_empty())
        .collect()
}

fn parse_mtl(text: &str) -> Result<BTreeMap<String, [u8; 3]>> {
    let mut out = BTreeMap::new();
    let mut current: Option<String> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("newmtl") => {
                let name = tokens.collect::<Vec<_>>().join(" ");
                if name.is_empty() {
                    return Err(Error::parse(lineno + 1, "newmtl without a name"));
                }
                current = Some(name);
            }
            Some("Kd") => {
                let Some(name) = current.clone() else {
                    return Err(Error::parse(lineno + 1, "Kd before any newmtl"));
                };
                let rgb: Vec<f64> = tokens
                    .take(3)
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::parse(lineno + 1, format!("bad Kd value: {e}")))?;
                if rgb.len() != 3 {
                    return Err(Error::parse(lineno + 1, "Kd needs three components"));
                }
                let to_byte = |c: f64| (c.clamp(0.0, 1.0) * 255.0).round() as u8;
                out.insert(name, [to_byte(rgb[0]), to_byte(rgb[1]), to_byte(rgb[2])]);
            }
            _ => {}
        }
    }
    Ok(out)
}

/// Writes `V + D` with the original faces and material groups.
pub fn save_obj(mesh: &Mesh, d: &DisplacementField) -> Result<String> {
    to_obj_string(mesh, d, None)
}

/// Like [`save_obj`], optionally emitting an `mtllib` statement.
pub fn to_obj_string(mesh: &Mesh, d: &DisplacementField, mtllib: Option<&str>) -> Result<String> {
    check_len(mesh, d)?;
    let mut out = String::with_capacity(mesh.num_vertices() * 48 + mesh.num_faces() * 24);
    if let Some(lib) = mtllib {
        let _ = writeln!(out, "mtllib {lib}");
    }
    for (v, o) in mesh.vertices.iter().zip(&d.offsets) {
        let p = v + o;
        // `{}` prints the shortest representation that parses back exactly
        let _ = writeln!(out, "v {} {} {}", p.x, p.y, p.z);
    }
    let mut current = None;
    for (f, &label) in mesh.faces.iter().zip(&mesh.face_labels) {
        if current != Some(label) {
            let name = mesh.label_name(label);
            if !(current.is_none() && label == DEFAULT_LABEL) {
                let _ = writeln!(out, "usemtl {name}");
            }
            current = Some(label);
        }
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    Ok(out)
}

/// MTL text describing every label except the implicit default.
pub fn save_mtl(mesh: &Mesh) -> String {
    let mut out = String::new();
    for (&id, label) in &mesh.label_table {
        if id == DEFAULT_LABEL {
            continue;
        }
        let c = label.color;
        let _ = writeln!(out, "newmtl {}", label.name);
        let _ = writeln!(out, "Kd {} {} {}\n", c[0] as f64 / 255.0, c[1] as f64 / 255.0, c[2] as f64 / 255.0);
    }
    out
}
