//! Euclidean embeddings whose distances approximate geodesic distances.
//!
//! Pipeline: farthest-point landmarks (seeded at vertex 0), classical MDS on
//! the landmark distance matrix, SMACOF refinement of the landmarks under
//! relative stress (pair weights `1/δ²`), then every remaining vertex is
//! placed by distance-based triangulation and refined against the landmarks.
//! When the mesh has at most `full_threshold` vertices every vertex is a
//! landmark and the result is plain (refined) classical MDS.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::{dist_sq, RowMatrix};
use crate::error::{Error, Result};
use crate::geodesic::GeodesicSolver;
use crate::linalg::sym_eigen;
use crate::mesh::{norm3, sub3, TriangleMesh};
use crate::par;

#[derive(Clone, Debug)]
pub struct EmbeddingOptions {
    pub dim: usize,
    /// Upper bound on landmark count when the mesh is large.
    pub landmarks: usize,
    /// Meshes up to this size use every vertex as a landmark.
    pub full_threshold: usize,
    pub smacof_iters: usize,
    /// Per-vertex refinement sweeps for non-landmark vertices.
    pub extension_iters: usize,
    /// Seed for the pair sample behind the stress report.
    pub seed: u64,
    /// Number of source vertices sampled for the stress report.
    pub stress_sources: usize,
}

impl Default for EmbeddingOptions {
    fn default() -> Self {
        Self {
            dim: 8,
            landmarks: 1000,
            full_threshold: 2000,
            smacof_iters: 300,
            extension_iters: 50,
            seed: 0,
            stress_sources: 32,
        }
    }
}

/// Relative distance error statistics over sampled vertex pairs.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StressReport {
    pub median: f64,
    pub p95: f64,
    pub pairs: usize,
}

#[derive(Clone, Debug)]
pub struct MetricEmbedding {
    pub x: RowMatrix,
    pub stress: StressReport,
}

impl MetricEmbedding {
    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    /// Wraps an existing coordinate matrix (e.g. from a cache), centring it.
    pub fn from_coordinates(mut x: RowMatrix) -> Self {
        center(&mut x);
        Self {
            x,
            stress: StressReport::default(),
        }
    }

    pub fn compute(mesh: &TriangleMesh, geo: &GeodesicSolver<'_>, opts: &EmbeddingOptions) -> Result<Self> {
        let n = mesh.n_vertices();
        let m = opts.dim;
        if m == 0 || m > n {
            return Err(Error::Dimension(format!("embedding dimension {m} for {n} vertices")));
        }
        let full = n <= opts.full_threshold;
        let (landmarks, fields) = if full {
            let all: Vec<usize> = (0..n).collect();
            let fields: Vec<Vec<f64>> = geo.fields(&all)?.into_iter().map(|f| f.dist).collect();
            (all, fields)
        } else {
            farthest_point_sampling(geo, opts.landmarks.min(n))
        };
        if let Some(v) = fields[0].iter().position(|d| !d.is_finite()) {
            return Err(Error::Disconnected(v));
        }

        let k = landmarks.len();
        let mut delta = vec![0.0; k * k];
        for a in 0..k {
            for b in 0..k {
                delta[a * k + b] = 0.5 * (fields[a][landmarks[b]] + fields[b][landmarks[a]]);
            }
        }
        let (classical, eig) = classical_mds(k, &delta, m)?;
        let refined = smacof(k, &delta, classical.clone(), opts.smacof_iters)?;

        let x = if full {
            refined
        } else {
            let mut is_landmark = vec![usize::MAX; n];
            for (a, &v) in landmarks.iter().enumerate() {
                is_landmark[v] = a;
            }
            let mean_sq: Vec<f64> = (0..k)
                .map(|b| (0..k).map(|a| delta[a * k + b].powi(2)).sum::<f64>() / k as f64)
                .collect();
            let rows = par::map_indices(n, |v| {
                if is_landmark[v] != usize::MAX {
                    return refined.row(is_landmark[v]).to_vec();
                }
                let d: Vec<f64> = (0..k).map(|a| fields[a][v]).collect();
                let mut x = triangulate(&d, &mean_sq, &eig, &classical, m);
                refine_point(&mut x, &d, &refined, opts.extension_iters);
                x
            });
            RowMatrix::from_vec(n, m, rows.concat())?
        };
        let mut emb = Self::from_coordinates(x);
        emb.stress = stress_report(&emb.x, geo, opts.stress_sources, opts.seed)?;
        Ok(emb)
    }

    /// Cache file for `mesh` under `dir`, keyed by content hash and dimension.
    pub fn cache_path(dir: &Path, mesh: &TriangleMesh, dim: usize) -> PathBuf {
        dir.join(format!("{}-m{dim}.emb", mesh.content_hash()))
    }

    /// Binary sidecar: `n` and `m` as little-endian u64, then row-major f64.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(16 + 8 * self.x.as_slice().len());
        buf.extend_from_slice(&(self.x.rows() as u64).to_le_bytes());
        buf.extend_from_slice(&(self.x.cols() as u64).to_le_bytes());
        for v in self.x.as_slice() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        fs::File::create(path)?.write_all(&buf)?;
        Ok(())
    }

    pub fn load(path: &Path, n: usize, dim: usize) -> Result<Self> {
        let mut buf = Vec::new();
        fs::File::open(path)?.read_to_end(&mut buf)?;
        let word = |i: usize| -> Option<[u8; 8]> { buf.get(8 * i..8 * i + 8)?.try_into().ok() };
        let (Some(a), Some(b)) = (word(0), word(1)) else {
            return Err(Error::parse(path, 0, "truncated embedding header"));
        };
        let (rows, cols) = (u64::from_le_bytes(a) as usize, u64::from_le_bytes(b) as usize);
        if rows != n || cols != dim {
            return Err(Error::parse(
                path,
                0,
                format!("cached embedding is {rows}x{cols}, expected {n}x{dim}"),
            ));
        }
        if buf.len() != 16 + 8 * rows * cols {
            return Err(Error::parse(path, 0, "embedding payload has the wrong length"));
        }
        let data = (0..rows * cols)
            .map(|i| f64::from_le_bytes(word(i + 2).unwrap()))
            .collect();
        Ok(Self {
            x: RowMatrix::from_vec(rows, cols, data)?,
            stress: StressReport::default(),
        })
    }

    /// Loads from `dir` when a matching sidecar exists, otherwise computes
    /// and writes it.
    pub fn cached(
        dir: &Path,
        mesh: &TriangleMesh,
        geo: &GeodesicSolver<'_>,
        opts: &EmbeddingOptions,
    ) -> Result<Self> {
        let path = Self::cache_path(dir, mesh, opts.dim);
        if path.exists() {
            if let Ok(e) = Self::load(&path, mesh.n_vertices(), opts.dim) {
                log::info!("embedding loaded from {}", path.display());
                return Ok(e);
            }
        }
        let e = Self::compute(mesh, geo, opts)?;
        fs::create_dir_all(dir)?;
        e.save(&path)?;
        Ok(e)
    }
}

/// Landmarks by farthest-point sampling from vertex 0 (lowest index on ties),
/// with the geodesic field of each landmark.
pub fn farthest_point_sampling(geo: &GeodesicSolver<'_>, k: usize) -> (Vec<usize>, Vec<Vec<f64>>) {
    let n = geo.mesh().n_vertices();
    let mut landmarks = vec![0usize];
    let mut fields = vec![geo.propagate(&[(0, 0.0)])];
    let mut nearest = fields[0].clone();
    while landmarks.len() < k {
        let mut next = 0;
        for v in 1..n {
            if nearest[v] > nearest[next] {
                next = v;
            }
        }
        if nearest[next] <= 0.0 || !nearest[next].is_finite() {
            break;
        }
        let f = geo.propagate(&[(next, 0.0)]);
        for (a, b) in nearest.iter_mut().zip(&f) {
            *a = a.min(*b);
        }
        landmarks.push(next);
        fields.push(f);
    }
    (landmarks, fields)
}

/// Top-`m` classical MDS coordinates of a `k × k` distance matrix, plus the
/// eigenpairs used (values descending, vectors as columns).
fn classical_mds(k: usize, delta: &[f64], m: usize) -> Result<(RowMatrix, (Vec<f64>, RowMatrix))> {
    let sq: Vec<f64> = delta.iter().map(|d| d * d).collect();
    let row_mean: Vec<f64> = (0..k).map(|a| sq[a * k..(a + 1) * k].iter().sum::<f64>() / k as f64).collect();
    let total = row_mean.iter().sum::<f64>() / k as f64;
    let mut b = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            b[i * k + j] = -0.5 * (sq[i * k + j] - row_mean[i] - row_mean[j] + total);
        }
    }
    let (vals, vecs) = sym_eigen(k, &b)?;
    let cols = m.min(k);
    let top: Vec<f64> = (0..cols).map(|c| vals[k - 1 - c].max(0.0)).collect();
    let u = RowMatrix::from_fn(k, cols, |i, c| vecs[(i, k - 1 - c)]);
    let x = RowMatrix::from_fn(k, m, |i, c| if c < cols { u[(i, c)] * top[c].sqrt() } else { 0.0 });
    Ok((x, (top, u)))
}

/// SMACOF with weights `1/δ²`: repeated Guttman transforms `X ← V⁺ B(X) X`.
fn smacof(k: usize, delta: &[f64], mut x: RowMatrix, iters: usize) -> Result<RowMatrix> {
    if iters == 0 || k < 3 {
        return Ok(x);
    }
    let m = x.cols();
    let weight = |a: usize, b: usize| {
        let d = delta[a * k + b];
        if a != b && d > 0.0 {
            1.0 / (d * d)
        } else {
            0.0
        }
    };
    let mut v = vec![0.0; k * k];
    for a in 0..k {
        let mut diag = 0.0;
        for b in 0..k {
            let w = weight(a, b);
            v[a * k + b] = -w;
            diag += w;
        }
        v[a * k + a] = diag;
    }
    let (lam, u) = sym_eigen(k, &v)?;
    let top = lam.iter().cloned().fold(0.0, f64::max);
    let inv: Vec<f64> = lam.iter().map(|&l| if l > 1e-10 * top { 1.0 / l } else { 0.0 }).collect();
    let ut = RowMatrix::from_fn(k, k, |c, a| u[(a, c)]);

    let stress = |x: &RowMatrix| -> f64 {
        par::map_indices(k, |a| {
            (0..k)
                .map(|b| {
                    let w = weight(a, b);
                    if w == 0.0 {
                        0.0
                    } else {
                        w * (dist_sq(x.row(a), x.row(b)).sqrt() - delta[a * k + b]).powi(2)
                    }
                })
                .sum::<f64>()
        })
        .iter()
        .sum()
    };
    let mut prev = stress(&x);
    for _ in 0..iters {
        // B(X) X, row by row.
        let bx = par::map_indices(k, |a| {
            let mut out = vec![0.0; m];
            let xa = x.row(a);
            for b in 0..k {
                let w = weight(a, b);
                if w == 0.0 {
                    continue;
                }
                let e = dist_sq(xa, x.row(b)).sqrt();
                if e > 0.0 {
                    let s = w * delta[a * k + b] / e;
                    for (o, (p, q)) in out.iter_mut().zip(xa.iter().zip(x.row(b))) {
                        *o += s * (p - q);
                    }
                }
            }
            out
        });
        let bx = RowMatrix::from_vec(k, m, bx.concat())?;
        // V⁺ = U diag(inv) Uᵀ applied as two thin products.
        let t = par::map_indices(k, |c| {
            let mut out = vec![0.0; m];
            if inv[c] != 0.0 {
                let uc = ut.row(c);
                for a in 0..k {
                    let s = uc[a] * inv[c];
                    for (o, b) in out.iter_mut().zip(bx.row(a)) {
                        *o += s * b;
                    }
                }
            }
            out
        })
        .concat();
        let rows = par::map_indices(k, |a| {
            let ua = u.row(a);
            let mut out = vec![0.0; m];
            for c in 0..k {
                if inv[c] != 0.0 {
                    for j in 0..m {
                        out[j] += ua[c] * t[c * m + j];
                    }
                }
            }
            out
        });
        x = RowMatrix::from_vec(k, m, rows.concat())?;
        let s = stress(&x);
        let done = prev - s <= 1e-7 * prev;
        prev = s;
        if done {
            break;
        }
    }
    Ok(x)
}

/// Landmark-MDS placement of one vertex from its landmark distances.
fn triangulate(d: &[f64], mean_sq: &[f64], eig: &(Vec<f64>, RowMatrix), classical: &RowMatrix, m: usize) -> Vec<f64> {
    let (vals, u) = eig;
    let mut x = vec![0.0; m];
    for c in 0..vals.len().min(m) {
        if vals[c] <= 0.0 {
            continue;
        }
        let mut s = 0.0;
        for (a, &da) in d.iter().enumerate() {
            s += u[(a, c)] * (da * da - mean_sq[a]);
        }
        x[c] = -0.5 * s / vals[c].sqrt();
    }
    debug_assert_eq!(classical.cols(), m);
    x
}

/// Majorization sweeps on a single point against fixed landmark positions.
fn refine_point(x: &mut [f64], d: &[f64], landmarks: &RowMatrix, iters: usize) {
    let m = x.len();
    for _ in 0..iters {
        let mut num = vec![0.0; m];
        let mut den = 0.0;
        for (a, &da) in d.iter().enumerate() {
            if da <= 0.0 {
                continue;
            }
            let w = 1.0 / (da * da);
            let la = landmarks.row(a);
            let e = dist_sq(x, la).sqrt();
            let s = if e > 0.0 { da / e } else { 0.0 };
            for j in 0..m {
                num[j] += w * (la[j] + s * (x[j] - la[j]));
            }
            den += w;
        }
        if den > 0.0 {
            for j in 0..m {
                x[j] = num[j] / den;
            }
        }
    }
}

fn center(x: &mut RowMatrix) {
    let means = x.column_means();
    for i in 0..x.rows() {
        for (v, mu) in x.row_mut(i).iter_mut().zip(&means) {
            *v -= mu;
        }
    }
}

/// Median and 95th percentile of `|‖x_u − x_v‖ − d(u, v)| / d(u, v)` over all
/// pairs from `sources` seeded random source vertices.
pub fn stress_report(x: &RowMatrix, geo: &GeodesicSolver<'_>, sources: usize, seed: u64) -> Result<StressReport> {
    let n = x.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks: Vec<usize> = (0..sources.min(n)).map(|_| rng.random_range(0..n)).collect();
    let fields = geo.fields(&picks)?;
    let mut errs = Vec::new();
    for f in &fields {
        for v in 0..n {
            let d = f.dist[v];
            if v != f.source && d > 0.0 && d.is_finite() {
                errs.push((dist_sq(x.row(f.source), x.row(v)).sqrt() - d).abs() / d);
            }
        }
    }
    Ok(summarize(errs))
}

/// Median / p95 of a sample of relative errors.
pub fn summarize(mut errs: Vec<f64>) -> StressReport {
    if errs.is_empty() {
        return StressReport::default();
    }
    errs.sort_by(f64::total_cmp);
    let at = |q: f64| errs[((errs.len() - 1) as f64 * q).round() as usize];
    StressReport {
        median: at(0.5),
        p95: at(0.95),
        pairs: errs.len(),
    }
}

/// Comparison of edge lengths in R³ against their embedded lengths.
#[derive(Clone, Debug)]
pub struct EdgeLengthReport {
    pub max_relative: f64,
    pub mean_relative: f64,
    /// Edges whose relative discrepancy exceeds the threshold.
    pub flagged: Vec<usize>,
}

pub fn embedding_weights_check(mesh: &TriangleMesh, x: &RowMatrix, threshold: f64) -> EdgeLengthReport {
    let mut max_relative: f64 = 0.0;
    let mut sum = 0.0;
    let mut flagged = Vec::new();
    for (e, &[a, b]) in mesh.edges().iter().enumerate() {
        let l3 = norm3(&sub3(&mesh.vertex(a), &mesh.vertex(b)));
        let lm = dist_sq(x.row(a), x.row(b)).sqrt();
        let r = (lm - l3).abs() / l3;
        max_relative = max_relative.max(r);
        sum += r;
        if r > threshold {
            flagged.push(e);
        }
    }
    EdgeLengthReport {
        max_relative,
        mean_relative: sum / mesh.n_edges().max(1) as f64,
        flagged,
    }
}
