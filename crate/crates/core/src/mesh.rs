//! Triangle mesh storage and connectivity.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Per-corner attribute table carried through from OBJ files (texture
/// coordinates or normals): a value list plus one index triple per face.
#[derive(Clone, Debug, PartialEq)]
pub struct CornerAttribute<const D: usize> {
    pub values: Vec<[f64; D]>,
    pub face_indices: Vec<[usize; 3]>,
}

/// An indexed triangle mesh. Vertex order is preserved from the input; it is
/// the contract with map, landmark and label files.
#[derive(Clone, Debug)]
pub struct TriangleMesh {
    vertices: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    edge_faces: Vec<[Option<usize>; 2]>,
    vertex_faces: Vec<Vec<usize>>,
    vertex_neighbors: Vec<Vec<usize>>,
    pub uvs: Option<CornerAttribute<2>>,
    pub normals: Option<CornerAttribute<3>>,
}

impl TriangleMesh {
    /// Validates and builds a mesh: every index in range, no repeated vertex
    /// within a face, every edge shared by at most two faces.
    pub fn new(vertices: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        for (f, face) in faces.iter().enumerate() {
            if let Some(&bad) = face.iter().find(|&&v| v >= n) {
                return Err(Error::InvalidFace {
                    face: f,
                    msg: format!("vertex index {bad} out of range (n = {n})"),
                });
            }
            if face[0] == face[1] || face[1] == face[2] || face[0] == face[2] {
                return Err(Error::InvalidFace {
                    face: f,
                    msg: format!("degenerate face {face:?} repeats a vertex"),
                });
            }
        }

        let mut edge_index: HashMap<[usize; 2], usize> = HashMap::with_capacity(faces.len() * 2);
        let mut edges = Vec::new();
        let mut edge_faces: Vec<[Option<usize>; 2]> = Vec::new();
        for (f, face) in faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (face[k], face[(k + 1) % 3]);
                let key = [a.min(b), a.max(b)];
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_faces.push([None, None]);
                    edges.len() - 1
                });
                let slot = &mut edge_faces[e];
                if slot[0].is_none() {
                    slot[0] = Some(f);
                } else if slot[1].is_none() {
                    slot[1] = Some(f);
                } else {
                    return Err(Error::InvalidFace {
                        face: f,
                        msg: format!("edge {key:?} is shared by more than two faces"),
                    });
                }
            }
        }

        let mut vertex_faces = vec![Vec::new(); n];
        for (f, face) in faces.iter().enumerate() {
            for &v in face {
                vertex_faces[v].push(f);
            }
        }
        let mut vertex_neighbors = vec![Vec::new(); n];
        for &[a, b] in &edges {
            vertex_neighbors[a].push(b);
            vertex_neighbors[b].push(a);
        }
        for nb in &mut vertex_neighbors {
            nb.sort_unstable();
        }

        Ok(Self {
            vertices,
            faces,
            edges,
            edge_faces,
            vertex_faces,
            vertex_neighbors,
            uvs: None,
            normals: None,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> [f64; 3] {
        self.vertices[v]
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face(&self, f: usize) -> [usize; 3] {
        self.faces[f]
    }

    /// Undirected edges `[a, b]` with `a < b`, each stored once.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// The one or two faces incident to edge `e`.
    pub fn edge_faces(&self, e: usize) -> [Option<usize>; 2] {
        self.edge_faces[e]
    }

    /// Faces incident to `v`, ascending.
    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }

    /// 1-ring neighbours of `v`, ascending.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.vertex_neighbors[v]
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_faces[e][1].is_none()
    }

    pub fn is_closed(&self) -> bool {
        self.edge_faces.iter().all(|f| f[1].is_some())
    }

    /// Vertices on a boundary edge, ascending.
    pub fn boundary_vertices(&self) -> Vec<usize> {
        let mut on = vec![false; self.n_vertices()];
        for (e, &[a, b]) in self.edges.iter().enumerate() {
            if self.is_boundary_edge(e) {
                on[a] = true;
                on[b] = true;
            }
        }
        (0..self.n_vertices()).filter(|&v| on[v]).collect()
    }

    /// Vertices not referenced by any face.
    pub fn isolated_vertices(&self) -> Vec<usize> {
        (0..self.n_vertices())
            .filter(|&v| self.vertex_faces[v].is_empty())
            .collect()
    }

    pub fn face_points(&self, f: usize) -> [[f64; 3]; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.face_points(f);
        triangle_area(&a, &b, &c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_faces()).map(|f| self.face_area(f)).sum()
    }

    pub fn bounding_box(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    pub fn mean_edge_length(&self) -> f64 {
        if self.edges.is_empty() {
            return 0.0;
        }
        self.edges
            .iter()
            .map(|&[a, b]| norm3(&sub3(&self.vertices[a], &self.vertices[b])))
            .sum::<f64>()
            / self.edges.len() as f64
    }

    /// Copy with every vertex passed through `f`; connectivity and corner
    /// attributes are kept.
    pub fn map_vertices(&self, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut out = self.clone();
        out.vertices.iter_mut().for_each(|p| *p = f(*p));
        out
    }

    /// Copy with new vertex positions (same count) and the same connectivity.
    pub fn with_vertices(&self, vertices: Vec<[f64; 3]>) -> Result<Self> {
        if vertices.len() != self.n_vertices() {
            return Err(Error::Dimension(format!(
                "{} positions for {} vertices",
                vertices.len(),
                self.n_vertices()
            )));
        }
        let mut out = self.clone();
        out.vertices = vertices;
        Ok(out)
    }

    /// Index of the first face (lowest id) containing vertex `v`.
    pub fn first_face_of(&self, v: usize) -> Option<usize> {
        self.vertex_faces[v].first().copied()
    }

    /// Position of `v` within face `f`, if present.
    pub fn corner_of(&self, f: usize, v: usize) -> Option<usize> {
        self.faces[f].iter().position(|&x| x == v)
    }

    /// Connected components over face adjacency; returns a label per vertex
    /// (isolated vertices get their own label) and the component count.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let n = self.n_vertices();
        let mut label = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = count;
            stack.push(s);
            while let Some(v) = stack.pop() {
                for &w in &self.vertex_neighbors[v] {
                    if label[w] == usize::MAX {
                        label[w] = count;
                        stack.push(w);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }

    /// A content hash of positions and faces, used to key cached embeddings.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update((self.n_vertices() as u64).to_le_bytes());
        h.update((self.n_faces() as u64).to_le_bytes());
        for p in &self.vertices {
            for c in p {
                h.update(c.to_le_bytes());
            }
        }
        for f in &self.faces {
            for &v in f {
                h.update((v as u64).to_le_bytes());
            }
        }
        h.finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[inline]
pub(crate) fn sub3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub(crate) fn norm3(a: &[f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

pub fn triangle_area(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> f64 {
    0.5 * norm3(&cross3(&sub3(b, a), &sub3(c, a)))
}
