//! Wavefront OBJ reading and writing (triangles only).
//!
//! Supported records: `v`, `vt`, `vn`, `f` (with `i`, `i/t`, `i//n`, `i/t/n`
//! corners, negative indices allowed) and `#` comments. Grouping and material
//! records are ignored. Indices are 1-based in files and 0-based in memory.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::{CornerAttribute, TriangleMesh};

pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_obj(&text, path)
}

pub fn save_mesh(path: impl AsRef<Path>, mesh: &TriangleMesh) -> Result<()> {
    fs::write(path, write_obj(mesh))?;
    Ok(())
}

pub fn parse_obj(text: &str, path: &Path) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut uvs: Vec<[f64; 2]> = Vec::new();
    let mut normals: Vec<[f64; 3]> = Vec::new();
    let mut faces = Vec::new();
    let mut face_uv = Vec::new();
    let mut face_n = Vec::new();
    let mut any_uv = false;
    let mut any_n = false;

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let tag = tokens.next().unwrap();
        match tag {
            "v" => {
                let xyz = parse_floats::<3>(tokens, path, line, "v")?;
                vertices.push(xyz);
            }
            "vt" => {
                let uv = parse_floats::<2>(tokens, path, line, "vt")?;
                uvs.push(uv);
            }
            "vn" => {
                let n = parse_floats::<3>(tokens, path, line, "vn")?;
                normals.push(n);
            }
            "f" => {
                let face_id = faces.len();
                let corners: Vec<&str> = tokens.collect();
                if corners.len() != 3 {
                    return Err(Error::InvalidFace {
                        face: face_id,
                        msg: format!(
                            "{}:{line}: face has {} corners, only triangles are supported",
                            path.display(),
                            corners.len()
                        ),
                    });
                }
                let mut vi = [0usize; 3];
                let mut ti = [None; 3];
                let mut ni = [None; 3];
                for (k, c) in corners.iter().enumerate() {
                    let mut parts = c.split('/');
                    let v = parts.next().unwrap_or("");
                    vi[k] = resolve_index(v, vertices.len(), path, line, face_id)?;
                    if let Some(t) = parts.next().filter(|s| !s.is_empty()) {
                        ti[k] = Some(resolve_index(t, uvs.len(), path, line, face_id)?);
                    }
                    if let Some(nn) = parts.next().filter(|s| !s.is_empty()) {
                        ni[k] = Some(resolve_index(nn, normals.len(), path, line, face_id)?);
                    }
                }
                faces.push(vi);
                any_uv |= ti.iter().any(Option::is_some);
                any_n |= ni.iter().any(Option::is_some);
                face_uv.push(ti);
                face_n.push(ni);
            }
            _ => {}
        }
    }

    let mut mesh = TriangleMesh::new(vertices, faces)?;
    if any_uv {
        mesh.uvs = Some(collect_corners(uvs, &face_uv, path, "texture")?);
    }
    if any_n {
        mesh.normals = Some(collect_corners(normals, &face_n, path, "normal")?);
    }
    Ok(mesh)
}

fn collect_corners<const D: usize>(
    values: Vec<[f64; D]>,
    per_face: &[[Option<usize>; 3]],
    path: &Path,
    what: &str,
) -> Result<CornerAttribute<D>> {
    let mut face_indices = Vec::with_capacity(per_face.len());
    for (f, c) in per_face.iter().enumerate() {
        match (c[0], c[1], c[2]) {
            (Some(a), Some(b), Some(d)) => face_indices.push([a, b, d]),
            _ => {
                return Err(Error::InvalidFace {
                    face: f,
                    msg: format!("{}: face lacks {what} indices present on other faces", path.display()),
                })
            }
        }
    }
    Ok(CornerAttribute {
        values,
        face_indices,
    })
}

fn parse_floats<'a, const D: usize>(
    mut tokens: impl Iterator<Item = &'a str>,
    path: &Path,
    line: usize,
    tag: &str,
) -> Result<[f64; D]> {
    let mut out = [0.0; D];
    for slot in out.iter_mut() {
        let tok = tokens
            .next()
            .ok_or_else(|| Error::parse(path, line, format!("`{tag}` needs {D} values")))?;
        *slot = tok
            .parse()
            .map_err(|_| Error::parse(path, line, format!("bad number `{tok}`")))?;
    }
    Ok(out)
}

fn resolve_index(tok: &str, count: usize, path: &Path, line: usize, face: usize) -> Result<usize> {
    let raw: i64 = tok
        .parse()
        .map_err(|_| Error::parse(path, line, format!("bad index `{tok}`")))?;
    let idx = if raw > 0 {
        raw - 1
    } else if raw < 0 {
        count as i64 + raw
    } else {
        -1
    };
    if idx < 0 || idx as usize >= count {
        return Err(Error::InvalidFace {
            face,
            msg: format!("{}:{line}: index {raw} out of range ({count} defined)", path.display()),
        });
    }
    Ok(idx as usize)
}

pub fn write_obj(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    for p in mesh.vertices() {
        let _ = writeln!(s, "v {} {} {}", p[0], p[1], p[2]);
    }
    if let Some(uv) = &mesh.uvs {
        for t in &uv.values {
            let _ = writeln!(s, "vt {} {}", t[0], t[1]);
        }
    }
    if let Some(nrm) = &mesh.normals {
        for n in &nrm.values {
            let _ = writeln!(s, "vn {} {} {}", n[0], n[1], n[2]);
        }
    }
    for (f, face) in mesh.faces().iter().enumerate() {
        s.push('f');
        for k in 0..3 {
            let v = face[k] + 1;
            match (&mesh.uvs, &mesh.normals) {
                (Some(uv), Some(n)) => {
                    let _ = write!(s, " {v}/{}/{}", uv.face_indices[f][k] + 1, n.face_indices[f][k] + 1);
                }
                (Some(uv), None) => {
                    let _ = write!(s, " {v}/{}", uv.face_indices[f][k] + 1);
                }
                (None, Some(n)) => {
                    let _ = write!(s, " {v}//{}", n.face_indices[f][k] + 1);
                }
                (None, None) => {
                    let _ = write!(s, " {v}");
                }
            }
        }
        s.push('\n');
    }
    s
}
