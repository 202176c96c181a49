//! Barycentric surface points and precise maps.
//!
//! A [`PreciseMap`] sends every source vertex to a point on a face of the
//! target mesh. As a matrix it is `n_source × n_target` with at most three
//! nonzeros per row, all on the corners of one face, nonnegative and summing
//! to one.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dense::RowMatrix;
use crate::error::{Error, Result};
use crate::kdtree::KdTree;
use crate::mesh::TriangleMesh;
use crate::projection::EmbeddedSurface;

/// Slack allowed on weights read from files.
pub const WEIGHT_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarycentricPoint {
    pub face: usize,
    pub weights: [f64; 3],
}

impl BarycentricPoint {
    pub fn new(face: usize, weights: [f64; 3]) -> Self {
        Self { face, weights }
    }

    /// Vertex `v` expressed on its lowest-index incident face.
    pub fn at_vertex(mesh: &TriangleMesh, v: usize) -> Self {
        let face = mesh.first_face_of(v).expect("vertex has an incident face");
        let mut weights = [0.0; 3];
        weights[mesh.corner_of(face, v).unwrap()] = 1.0;
        Self { face, weights }
    }

    /// Clamps negative weights to zero and rescales to unit sum.
    pub fn normalized(self) -> Self {
        let mut w = self.weights.map(|x| x.max(0.0));
        let s: f64 = w.iter().sum();
        if s > 0.0 && s != 1.0 {
            w = w.map(|x| x / s);
        } else if s <= 0.0 {
            w = [1.0, 0.0, 0.0];
        }
        Self { face: self.face, weights: w }
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        self.weights.iter().all(|&w| w >= -tol && w.is_finite())
            && (self.weights.iter().sum::<f64>() - 1.0).abs() <= tol
    }

    pub fn position(&self, mesh: &TriangleMesh) -> [f64; 3] {
        let [a, b, c] = mesh.face_points(self.face);
        let w = self.weights;
        [
            w[0] * a[0] + w[1] * b[0] + w[2] * c[0],
            w[0] * a[1] + w[1] * b[1] + w[2] * c[1],
            w[0] * a[2] + w[1] * b[2] + w[2] * c[2],
        ]
    }

    /// The vertex this point sits on, if one weight is exactly 1.
    pub fn vertex(&self, mesh: &TriangleMesh) -> Option<usize> {
        self.weights
            .iter()
            .position(|&w| w == 1.0)
            .map(|k| mesh.face(self.face)[k])
    }

    /// Vertices carrying a nonzero weight.
    pub fn support(&self, mesh: &TriangleMesh) -> Vec<usize> {
        let face = mesh.face(self.face);
        (0..3).filter(|&k| self.weights[k] != 0.0).map(|k| face[k]).collect()
    }

    /// Weight on vertex `v` (zero when `v` is not a corner).
    pub fn weight_of(&self, mesh: &TriangleMesh, v: usize) -> f64 {
        mesh.corner_of(self.face, v).map_or(0.0, |k| self.weights[k])
    }

    /// Re-expresses the point on face `f` if its support lies in `f`.
    pub fn on_face(&self, mesh: &TriangleMesh, f: usize) -> Option<Self> {
        if f == self.face {
            return Some(*self);
        }
        let face = mesh.face(self.face);
        let mut weights = [0.0; 3];
        for k in 0..3 {
            if self.weights[k] != 0.0 {
                weights[mesh.corner_of(f, face[k])?] = self.weights[k];
            }
        }
        Some(Self { face: f, weights })
    }

    /// Canonical representation: the lowest-index face containing the support.
    pub fn canonical(&self, mesh: &TriangleMesh) -> Self {
        let support = self.support(mesh);
        let Some(&first) = support.first() else {
            return *self;
        };
        mesh.vertex_faces(first)
            .iter()
            .find_map(|&f| self.on_face(mesh, f))
            .unwrap_or(*self)
    }
}

/// A precise map from a source mesh to a target mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct PreciseMap {
    rows: Vec<BarycentricPoint>,
    corners: Vec<[usize; 3]>,
    n_target: usize,
}

impl PreciseMap {
    /// Builds a map onto `target`, checking face ids and weight feasibility.
    pub fn new(target: &TriangleMesh, rows: Vec<BarycentricPoint>) -> Result<Self> {
        let mut corners = Vec::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            if r.face >= target.n_faces() {
                return Err(Error::InvalidInput(format!(
                    "row {i}: face {} out of range ({} faces)",
                    r.face,
                    target.n_faces()
                )));
            }
            if !r.is_feasible(WEIGHT_SLACK) {
                return Err(Error::InvalidInput(format!("row {i}: infeasible weights {:?}", r.weights)));
            }
            corners.push(target.face(r.face));
        }
        Ok(Self {
            rows,
            corners,
            n_target: target.n_vertices(),
        })
    }

    /// Every vertex to itself on the same mesh.
    pub fn identity(mesh: &TriangleMesh) -> Self {
        Self::from_vertex_targets(mesh, &(0..mesh.n_vertices()).collect::<Vec<_>>())
    }

    /// Source vertex `i` to target vertex `targets[i]`, on its canonical face.
    pub fn from_vertex_targets(target: &TriangleMesh, targets: &[usize]) -> Self {
        let rows = targets.iter().map(|&v| BarycentricPoint::at_vertex(target, v)).collect();
        Self::new(target, rows).expect("vertex rows are feasible")
    }

    pub fn n_source(&self) -> usize {
        self.rows.len()
    }

    pub fn n_target(&self) -> usize {
        self.n_target
    }

    pub fn rows(&self) -> &[BarycentricPoint] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &BarycentricPoint {
        &self.rows[i]
    }

    /// Target vertex ids of row `i`'s face.
    pub fn corners(&self, i: usize) -> [usize; 3] {
        self.corners[i]
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        self.rows.iter().all(|r| r.is_feasible(tol))
    }

    /// `P · columns`.
    pub fn apply(&self, columns: &RowMatrix) -> Result<RowMatrix> {
        if columns.rows() != self.n_target {
            return Err(Error::Dimension(format!(
                "map targets {} vertices, columns have {} rows",
                self.n_target,
                columns.rows()
            )));
        }
        let k = columns.cols();
        let mut out = RowMatrix::zeros(self.rows.len(), k);
        for (i, r) in self.rows.iter().enumerate() {
            let c = self.corners[i];
            let dst = out.row_mut(i);
            for l in 0..3 {
                let w = r.weights[l];
                if w != 0.0 {
                    for (d, s) in dst.iter_mut().zip(columns.row(c[l])) {
                        *d += w * s;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Images of the source vertices in R³.
    pub fn image_points(&self, target: &TriangleMesh) -> RowMatrix {
        self.apply(&RowMatrix::from_rows(target.vertices()))
            .expect("map built for this target")
    }

    /// `Pᵀ · diag(d) · columns` (`n_target × k`).
    pub fn transpose_apply(&self, d: &[f64], columns: &RowMatrix) -> RowMatrix {
        let k = columns.cols();
        let mut out = RowMatrix::zeros(self.n_target, k);
        for (i, r) in self.rows.iter().enumerate() {
            let c = self.corners[i];
            for l in 0..3 {
                let w = r.weights[l] * d[i];
                if w != 0.0 {
                    for (o, s) in out.row_mut(c[l]).iter_mut().zip(columns.row(i)) {
                        *o += w * s;
                    }
                }
            }
        }
        out
    }

    /// Entries of `Pᵀ · diag(d) · P` as `(i, j, value)` with `i ≥ j`.
    pub fn gram_lower(&self, d: &[f64]) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(6 * self.rows.len());
        for (i, r) in self.rows.iter().enumerate() {
            let c = self.corners[i];
            for a in 0..3 {
                for b in 0..3 {
                    let (ca, cb) = (c[a], c[b]);
                    if ca >= cb && r.weights[a] != 0.0 && r.weights[b] != 0.0 {
                        out.push((ca, cb, d[i] * r.weights[a] * r.weights[b]));
                    }
                }
            }
        }
        out
    }

    /// Replaces every row by its canonical face representation.
    pub fn canonicalize(&self, target: &TriangleMesh) -> Self {
        let rows = self.rows.iter().map(|r| r.canonical(target)).collect();
        Self::new(target, rows).expect("canonical rows stay feasible")
    }

    /// Image of a surface point `p` of the source: the barycentric blend of
    /// the images of its corners. When all corner images share one target
    /// face the blend is exact there; otherwise the blended point (in the
    /// space of `surface`, whose rows correspond to target vertices) is
    /// projected back to the target.
    pub fn eval_at_point(
        &self,
        source: &TriangleMesh,
        target: &TriangleMesh,
        surface: &EmbeddedSurface,
        p: &BarycentricPoint,
    ) -> BarycentricPoint {
        let src_face = source.face(p.face);
        if let Some(v) = p.vertex(source) {
            return self.rows[v];
        }
        let images: Vec<BarycentricPoint> = src_face.iter().map(|&v| self.rows[v]).collect();
        for cand in images.iter().map(|r| r.face) {
            let same: Option<Vec<BarycentricPoint>> = images
                .iter()
                .zip(p.weights)
                .map(|(r, w)| if w == 0.0 { Some(*r) } else { r.on_face(target, cand) })
                .collect();
            if let Some(same) = same {
                let mut weights = [0.0; 3];
                for (r, w) in same.iter().zip(p.weights) {
                    if w != 0.0 {
                        for l in 0..3 {
                            weights[l] += w * r.weights[l];
                        }
                    }
                }
                return BarycentricPoint::new(cand, weights).normalized();
            }
        }
        let x = surface.points();
        let mut q = vec![0.0; x.cols()];
        for (k, &v) in src_face.iter().enumerate() {
            let w = p.weights[k];
            if w == 0.0 {
                continue;
            }
            let r = &self.rows[v];
            let c = self.corners[v];
            for l in 0..3 {
                for (qq, xx) in q.iter_mut().zip(x.row(c[l])) {
                    *qq += w * r.weights[l] * xx;
                }
            }
        }
        let hit = surface.project(&q);
        BarycentricPoint::new(hit.face, hit.weights)
    }

    /// Pointwise inverse: each target vertex goes to the source vertex whose
    /// image is nearest in R³ (lowest index on ties).
    pub fn invert_pointwise(&self, source: &TriangleMesh, target: &TriangleMesh) -> Self {
        let images = self.image_points(target);
        let tree = KdTree::new(&images);
        let targets: Vec<usize> = crate::par::map_indices(target.n_vertices(), |v| {
            tree.nearest(&target.vertex(v)).expect("non-empty source").0
        });
        Self::from_vertex_targets(source, &targets)
    }

    /// Text form: header `n_source n_target`, then `face w1 w2 w3` per
    /// source vertex with 1-based face ids.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n_source(), self.n_target);
        for r in &self.rows {
            let _ = writeln!(s, "{} {} {} {}", r.face + 1, r.weights[0], r.weights[1], r.weights[2]);
        }
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>, source: &TriangleMesh, target: &TriangleMesh) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&fs::read_to_string(path)?, path, source, target)
    }

    pub fn parse(text: &str, path: &Path, source: &TriangleMesh, target: &TriangleMesh) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or_else(|| Error::parse(path, 1, "empty map file"))?;
        let counts: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(path, hline, "header must be `n_source n_target`"))?;
        if counts.len() != 2 {
            return Err(Error::parse(path, hline, "header must be `n_source n_target`"));
        }
        if counts[0] != source.n_vertices() || counts[1] != target.n_vertices() {
            return Err(Error::parse(
                path,
                hline,
                format!(
                    "map is {}→{} vertices, meshes have {}→{}",
                    counts[0],
                    counts[1],
                    source.n_vertices(),
                    target.n_vertices()
                ),
            ));
        }
        let mut rows = Vec::with_capacity(counts[0]);
        for (line, l) in lines {
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.len() != 4 {
                return Err(Error::parse(path, line, "expected `face w1 w2 w3`"));
            }
            let face: usize = toks[0]
                .parse()
                .map_err(|_| Error::parse(path, line, format!("bad face id `{}`", toks[0])))?;
            if face == 0 || face > target.n_faces() {
                return Err(Error::parse(path, line, format!("face id {face} out of range")));
            }
            let mut weights = [0.0; 3];
            for k in 0..3 {
                let w: f64 = toks[k + 1]
                    .parse()
                    .map_err(|_| Error::parse(path, line, format!("bad weight `{}`", toks[k + 1])))?;
                if !(-WEIGHT_SLACK..=1.0 + WEIGHT_SLACK).contains(&w) {
                    return Err(Error::parse(path, line, format!("weight {w} outside [0, 1]")));
                }
                weights[k] = w;
            }
            let p = BarycentricPoint::new(face - 1, weights);
            if (weights.iter().sum::<f64>() - 1.0).abs() > WEIGHT_SLACK {
                return Err(Error::parse(path, line, "weights do not sum to 1"));
            }
            rows.push(p.normalized());
        }
        if rows.len() != counts[0] {
            return Err(Error::parse(
                path,
                hline,
                format!("header announces {} rows, found {}", counts[0], rows.len()),
            ));
        }
        Self::new(target, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_map(target: &TriangleMesh, n: usize, rng: &mut ChaCha8Rng) -> PreciseMap {
        let rows = (0..n)
            .map(|_| {
                let a: f64 = rng.random();
                let b: f64 = rng.random::<f64>() * (1.0 - a);
                BarycentricPoint::new(rng.random_range(0..target.n_faces()), [a, b, 1.0 - a - b])
            })
            .collect();
        PreciseMap::new(target, rows).unwrap()
    }

    #[test]
    fn identity_apply_and_affine_invariance() {
        let m = shapes::icosphere(1);
        let v = RowMatrix::from_rows(m.vertices());
        let id = PreciseMap::identity(&m);
        assert_eq!(id.apply(&v).unwrap(), v);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random_map(&m, 50, &mut rng);
        let ones = RowMatrix::from_fn(m.n_vertices(), 1, |_, _| 1.0);
        for x in p.apply(&ones).unwrap().as_slice() {
            assert!((x - 1.0).abs() < 1e-15);
        }
        assert!(p.apply(&RowMatrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn transpose_and_gram_agree_with_dense() {
        let m = shapes::icosphere(0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_map(&m, 30, &mut rng);
        let d: Vec<f64> = (0..30).map(|_| rng.random_range(0.5..2.0)).collect();
        let n = m.n_vertices();
        let mut dense = vec![0.0; 30 * n];
        for i in 0..30 {
            for l in 0..3 {
                dense[i * n + p.corners(i)[l]] += p.row(i).weights[l];
            }
        }
        let x = RowMatrix::from_fn(30, 2, |i, j| (i * 3 + j) as f64 * 0.1);
        let t = p.transpose_apply(&d, &x);
        for a in 0..n {
            for j in 0..2 {
                let e: f64 = (0..30).map(|i| dense[i * n + a] * d[i] * x[(i, j)]).sum();
                assert!((t[(a, j)] - e).abs() < 1e-12);
            }
        }
        let mut g = vec![0.0; n * n];
        for (a, b, v) in p.gram_lower(&d) {
            g[a * n + b] += v;
            if a != b {
                g[b * n + a] += v;
            }
        }
        for a in 0..n {
            for b in 0..n {
                let e: f64 = (0..30).map(|i| dense[i * n + a] * d[i] * dense[i * n + b]).sum();
                assert!((g[a * n + b] - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn inverse_of_identity_and_collapse() {
        let m = shapes::icosphere(2);
        let id = PreciseMap::identity(&m);
        assert_eq!(id.invert_pointwise(&m, &m), id);
        let collapsed = PreciseMap::from_vertex_targets(&m, &vec![17; m.n_vertices()]);
        let inv = collapsed.invert_pointwise(&m, &m);
        assert!(inv.rows().iter().all(|r| *r == BarycentricPoint::at_vertex(&m, 0)));
    }

    #[test]
    fn canonical_edge_points() {
        let m = shapes::grid(2, 2, 1.0, 1.0);
        let e = (0..m.n_edges()).find(|&e| !m.is_boundary_edge(e)).unwrap();
        let [u, v] = m.edges()[e];
        let faces: Vec<usize> = m.edge_faces(e).into_iter().flatten().collect();
        let hi = *faces.iter().max().unwrap();
        let mut w = [0.0; 3];
        w[m.corner_of(hi, u).unwrap()] = 0.25;
        w[m.corner_of(hi, v).unwrap()] = 0.75;
        let c = BarycentricPoint::new(hi, w).canonical(&m);
        assert_eq!(c.face, *faces.iter().min().unwrap());
        assert_eq!(c.weight_of(&m, u), 0.25);
        assert_eq!(c.weight_of(&m, v), 0.75);
    }

    #[test]
    fn eval_at_point_cases() {
        let m = shapes::icosphere(2);
        let surface = EmbeddedSurface::new(RowMatrix::from_rows(m.vertices()), m.faces()).unwrap();
        let id = PreciseMap::identity(&m);
        let p = BarycentricPoint::new(40, [0.2, 0.5, 0.3]);
        let q = id.eval_at_point(&m, &m, &surface, &p);
        assert_eq!(q.face, 40);
        for k in 0..3 {
            assert!((q.weights[k] - p.weights[k]).abs() < 1e-15);
        }
        let v = m.face(40)[1];
        let at = BarycentricPoint::new(40, [0.0, 1.0, 0.0]);
        assert_eq!(id.eval_at_point(&m, &m, &surface, &at), *id.row(v));
    }

    #[test]
    fn text_round_trip_and_errors() {
        let m = shapes::icosphere(1);
        let id = PreciseMap::identity(&m);
        let back = PreciseMap::parse(&id.to_text(), Path::new("m.map"), &m, &m).unwrap();
        assert_eq!(back, id);
        let n = m.n_vertices();
        let mut text = format!("{n} {n}\n8 0.2 0.3 0.5\n");
        for _ in 1..n {
            text.push_str("1 1 0 0\n");
        }
        let p = PreciseMap::parse(&text, Path::new("m.map"), &m, &m).unwrap();
        assert_eq!(*p.row(0), BarycentricPoint::new(7, [0.2, 0.3, 0.5]));
        let bad = text.replacen("8 0.2 0.3 0.5", "8 -0.5 1.0 0.5", 1);
        assert!(matches!(
            PreciseMap::parse(&bad, Path::new("m.map"), &m, &m),
            Err(Error::Parse { line: 2, .. })
        ));
        let bad = text.replacen("8 0.2", "9999 0.2", 1);
        assert!(PreciseMap::parse(&bad, Path::new("m.map"), &m, &m).is_err());
    }
}
