//! Cotangent Laplacian, lumped mass and per-face differentials.

use crate::error::{Error, Result};
use crate::linalg::Csr;
use crate::mesh::{cross3, dot3, norm3, sub3, TriangleMesh};

#[derive(Clone, Copy, Debug, Default)]
pub struct OperatorOptions {
    /// Clamp negative cotangent edge weights to zero.
    pub clamp_negative: bool,
}

/// Discrete operators of one mesh.
///
/// `laplacian` is the cotangent matrix `W` with `gᵀWg = Σ_edges w_uv (g_u − g_v)²`
/// where `w_uv = ½ (cot α + cot β)` over the one or two angles opposite the
/// edge. `mass` is the barycentric lumped mass (a third of each incident face
/// area per vertex).
#[derive(Clone, Debug)]
pub struct MeshOperators {
    pub laplacian: Csr,
    pub edge_weights: Vec<f64>,
    pub mass: Vec<f64>,
    pub face_areas: Vec<f64>,
    pub total_area: f64,
}

impl MeshOperators {
    pub fn new(mesh: &TriangleMesh) -> Result<Self> {
        Self::with_options(mesh, OperatorOptions::default())
    }

    pub fn with_options(mesh: &TriangleMesh, opts: OperatorOptions) -> Result<Self> {
        for (v, p) in mesh.vertices().iter().enumerate() {
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFiniteVertex(v));
            }
        }
        let isolated = mesh.isolated_vertices();
        if !isolated.is_empty() {
            return Err(Error::InvalidInput(format!(
                "vertices not referenced by any face: {isolated:?}"
            )));
        }

        let mut face_areas = Vec::with_capacity(mesh.n_faces());
        let mut degenerate = Vec::new();
        for f in 0..mesh.n_faces() {
            let [a, b, c] = mesh.face_points(f);
            let area = mesh.face_area(f);
            let longest = [sub3(&b, &a), sub3(&c, &b), sub3(&a, &c)]
                .iter()
                .map(norm3)
                .fold(0.0, f64::max);
            if !(area > f64::EPSILON * longest * longest) {
                degenerate.push(f);
            }
            face_areas.push(area);
        }
        if !degenerate.is_empty() {
            return Err(Error::ZeroAreaFaces(degenerate));
        }

        let mut edge_weights = vec![0.0; mesh.n_edges()];
        for (e, &[u, v]) in mesh.edges().iter().enumerate() {
            let mut w = 0.0;
            for f in mesh.edge_faces(e).into_iter().flatten() {
                let face = mesh.face(f);
                let o = *face.iter().find(|&&x| x != u && x != v).unwrap();
                w += 0.5 * cot_at(&mesh.vertex(o), &mesh.vertex(u), &mesh.vertex(v));
            }
            if opts.clamp_negative {
                w = w.max(0.0);
            }
            edge_weights[e] = w;
        }

        let n = mesh.n_vertices();
        let mut triplets = Vec::with_capacity(4 * mesh.n_edges());
        for (e, &[u, v]) in mesh.edges().iter().enumerate() {
            let w = edge_weights[e];
            triplets.push((u, v, -w));
            triplets.push((v, u, -w));
            triplets.push((u, u, w));
            triplets.push((v, v, w));
        }
        let laplacian = Csr::from_triplets(n, &triplets);

        let mut mass = vec![0.0; n];
        for (f, face) in mesh.faces().iter().enumerate() {
            for &v in face {
                mass[v] += face_areas[f] / 3.0;
            }
        }
        let total_area = face_areas.iter().sum();
        Ok(Self {
            laplacian,
            edge_weights,
            mass,
            face_areas,
            total_area,
        })
    }

    pub fn n(&self) -> usize {
        self.mass.len()
    }

    /// `‖G‖²_W = tr(Gᵀ W G)`.
    pub fn dirichlet(&self, g: &crate::RowMatrix) -> f64 {
        self.laplacian.quad_form(g)
    }
}

impl TriangleMesh {
    pub fn n_edges(&self) -> usize {
        self.edges().len()
    }
}

/// Cotangent of the angle at `apex` in triangle (apex, p, q).
fn cot_at(apex: &[f64; 3], p: &[f64; 3], q: &[f64; 3]) -> f64 {
    let a = sub3(p, apex);
    let b = sub3(q, apex);
    dot3(&a, &b) / norm3(&cross3(&a, &b))
}

/// Singular values `(σ1, σ2)`, `σ1 ≥ σ2 ≥ 0`, of the linear map taking the
/// source triangle (in its own plane) to the image triangle. Corners
/// correspond by position.
pub fn face_differential(source: &[[f64; 3]; 3], image: &[[f64; 3]; 3]) -> Result<(f64, f64)> {
    let e1 = sub3(&source[1], &source[0]);
    let e2 = sub3(&source[2], &source[0]);
    let l1 = norm3(&e1);
    let area2 = norm3(&cross3(&e1, &e2));
    if !(area2 > f64::EPSILON * l1.max(norm3(&e2)).powi(2)) {
        return Err(Error::InvalidInput("degenerate source face".into()));
    }
    // Source edges in an orthonormal frame of their plane: S = [[l1, x2], [0, y2]].
    let x2 = dot3(&e1, &e2) / l1;
    let y2 = area2 / l1;
    let t1 = sub3(&image[1], &image[0]);
    let t2 = sub3(&image[2], &image[0]);
    // J = T S⁻¹ with S⁻¹ = [[1/l1, -x2/(l1 y2)], [0, 1/y2]].
    let mut j0 = [0.0; 3];
    let mut j1 = [0.0; 3];
    for k in 0..3 {
        j0[k] = t1[k] / l1;
        j1[k] = -t1[k] * x2 / (l1 * y2) + t2[k] / y2;
    }
    let a = dot3(&j0, &j0);
    let b = dot3(&j0, &j1);
    let c = dot3(&j1, &j1);
    let tr = a + c;
    let det = (a * c - b * b).max(0.0);
    // ‖j0 × j1‖ is the product σ1σ2 without cancellation.
    let prod = norm3(&cross3(&j0, &j1));
    let disc = ((a - c) * (a - c) + 4.0 * b * b).sqrt();
    let s1 = (0.5 * (tr + disc)).sqrt();
    let s2 = if s1 > 0.0 { prod / s1 } else { det.sqrt() };
    Ok((s1, s2.min(s1)))
}
