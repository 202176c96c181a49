//! Closest-point queries against the piecewise-linear image of a mesh in R^m.
//!
//! Every query is globally exact: the BVH only prunes boxes whose lower
//! bound already exceeds the best distance. Ties are resolved in two passes
//! (find the minimal distance `d*`, then the lowest face id with
//! `d ≤ d* + 1e-12`), so the accelerated and brute-force paths return the
//! same face and weights bit for bit.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::dense::RowMatrix;
use crate::error::{Error, Result};
use crate::par;

/// Absolute distance slack within which faces count as tied.
pub const TIE_EPS: f64 = 1e-12;

/// Face count below which queries scan every face.
pub const BRUTE_FORCE_FACES: usize = 500;

const LEAF_FACES: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    pub face: usize,
    pub weights: [f64; 3],
    pub distance: f64,
}

/// Barycentric weights of the closest point to `p` on triangle `(a, b, c)`
/// and the distance to it. Degenerate triangles are handled through their
/// edges.
pub fn closest_point_on_triangle(p: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> ([f64; 3], f64) {
    let w = closest_weights(p, a, b, c);
    (w, point_distance(p, a, b, c, &w))
}

fn closest_weights(p: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> [f64; 3] {
    let m = p.len();
    let mut a00 = 0.0;
    let mut a01 = 0.0;
    let mut a11 = 0.0;
    let mut b0 = 0.0;
    let mut b1 = 0.0;
    for k in 0..m {
        let e0 = b[k] - a[k];
        let e1 = c[k] - a[k];
        let d = a[k] - p[k];
        a00 += e0 * e0;
        a01 += e0 * e1;
        a11 += e1 * e1;
        b0 += e0 * d;
        b1 += e1 * d;
    }
    let det = a00 * a11 - a01 * a01;
    if det > 1e-14 * a00 * a11 && det > 0.0 {
        let s = (a01 * b1 - a11 * b0) / det;
        let t = (a01 * b0 - a00 * b1) / det;
        if s >= 0.0 && t >= 0.0 && s + t <= 1.0 {
            return [1.0 - s - t, s, t];
        }
    }
    // The constrained minimum lies on the boundary: best of the three edges.
    let candidates = [
        edge_weights(p, a, b, 0, 1),
        edge_weights(p, b, c, 1, 2),
        edge_weights(p, c, a, 2, 0),
    ];
    let mut best = candidates[0];
    let mut best_d = point_distance_sq(p, a, b, c, &best);
    for w in &candidates[1..] {
        let d = point_distance_sq(p, a, b, c, w);
        if d < best_d {
            best = *w;
            best_d = d;
        }
    }
    best
}

/// Closest point on segment `(u, v)`, written into corners `iu`, `iv`.
fn edge_weights(p: &[f64], u: &[f64], v: &[f64], iu: usize, iv: usize) -> [f64; 3] {
    let mut len2 = 0.0;
    let mut proj = 0.0;
    for k in 0..p.len() {
        let e = v[k] - u[k];
        len2 += e * e;
        proj += e * (p[k] - u[k]);
    }
    let t = if len2 > 0.0 { (proj / len2).clamp(0.0, 1.0) } else { 0.0 };
    let mut w = [0.0; 3];
    w[iu] = 1.0 - t;
    w[iv] = t;
    w
}

fn point_distance_sq(p: &[f64], a: &[f64], b: &[f64], c: &[f64], w: &[f64; 3]) -> f64 {
    let mut s = 0.0;
    for k in 0..p.len() {
        let x = w[0] * a[k] + w[1] * b[k] + w[2] * c[k] - p[k];
        s += x * x;
    }
    s
}

fn point_distance(p: &[f64], a: &[f64], b: &[f64], c: &[f64], w: &[f64; 3]) -> f64 {
    point_distance_sq(p, a, b, c, w).sqrt()
}

struct Bvh {
    /// Per node: `[lo; m]` then `[hi; m]`.
    bounds: Vec<f64>,
    /// Per node: `(left, right)` children or, for leaves, `(start, end)`
    /// into `order`.
    links: Vec<(usize, usize)>,
    leaf: Vec<bool>,
    order: Vec<usize>,
}

#[derive(PartialEq)]
struct Candidate {
    bound: f64,
    node: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The image of a mesh under an embedding `X` (`n × m`), ready for
/// closest-point queries.
pub struct EmbeddedSurface {
    points: RowMatrix,
    faces: Vec<[usize; 3]>,
    bvh: Option<Bvh>,
}

impl EmbeddedSurface {
    pub fn new(points: RowMatrix, faces: &[[usize; 3]]) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::InvalidInput("empty surface".into()));
        }
        if let Some((f, _)) = faces
            .iter()
            .enumerate()
            .find(|(_, face)| face.iter().any(|&v| v >= points.rows()))
        {
            return Err(Error::Dimension(format!(
                "face {f} references a vertex beyond the {} embedded points",
                points.rows()
            )));
        }
        let mut surface = Self {
            points,
            faces: faces.to_vec(),
            bvh: None,
        };
        if faces.len() >= BRUTE_FORCE_FACES {
            surface.bvh = Some(surface.build_bvh());
        }
        Ok(surface)
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn points(&self) -> &RowMatrix {
        &self.points
    }

    fn corners(&self, f: usize) -> [&[f64]; 3] {
        let [a, b, c] = self.faces[f];
        [self.points.row(a), self.points.row(b), self.points.row(c)]
    }

    fn face_query(&self, q: &[f64], f: usize) -> ([f64; 3], f64) {
        let [a, b, c] = self.corners(f);
        closest_point_on_triangle(q, a, b, c)
    }

    fn build_bvh(&self) -> Bvh {
        let m = self.dim();
        let nf = self.faces.len();
        let mut centroids = vec![0.0; nf * m];
        let mut face_lo = vec![0.0; nf * m];
        let mut face_hi = vec![0.0; nf * m];
        for f in 0..nf {
            let [a, b, c] = self.corners(f);
            for k in 0..m {
                centroids[f * m + k] = (a[k] + b[k] + c[k]) / 3.0;
                face_lo[f * m + k] = a[k].min(b[k]).min(c[k]);
                face_hi[f * m + k] = a[k].max(b[k]).max(c[k]);
            }
        }
        let mut bvh = Bvh {
            bounds: Vec::new(),
            links: Vec::new(),
            leaf: Vec::new(),
            order: (0..nf).collect(),
        };
        build_node(&mut bvh, m, &centroids, &face_lo, &face_hi, 0, nf);
        bvh
    }

    /// Closest point over all faces, tie rule applied.
    pub fn project(&self, q: &[f64]) -> Projection {
        match &self.bvh {
            Some(bvh) => self.project_bvh(bvh, q),
            None => self.project_brute(q),
        }
    }

    /// Exhaustive scan over every face, same tie rule.
    pub fn project_brute(&self, q: &[f64]) -> Projection {
        let dists: Vec<([f64; 3], f64)> = (0..self.faces.len()).map(|f| self.face_query(q, f)).collect();
        let best = dists.iter().map(|d| d.1).fold(f64::INFINITY, f64::min);
        let f = dists
            .iter()
            .position(|d| d.1 <= best + TIE_EPS)
            .expect("non-empty surface");
        Projection {
            face: f,
            weights: dists[f].0,
            distance: dists[f].1,
        }
    }

    fn project_bvh(&self, bvh: &Bvh, q: &[f64]) -> Projection {
        let m = self.dim();
        // Pass 1: minimal distance by best-first search.
        let mut best = f64::INFINITY;
        let mut heap = BinaryHeap::new();
        heap.push(Candidate {
            bound: box_dist_sq(&bvh.bounds, 0, m, q),
            node: 0,
        });
        while let Some(Candidate { bound, node }) = heap.pop() {
            if bound.sqrt() > best {
                break;
            }
            let (l, r) = bvh.links[node];
            if bvh.leaf[node] {
                for &f in &bvh.order[l..r] {
                    best = best.min(self.face_query(q, f).1);
                }
            } else {
                for child in [l, r] {
                    let b = box_dist_sq(&bvh.bounds, child, m, q);
                    if b.sqrt() <= best {
                        heap.push(Candidate { bound: b, node: child });
                    }
                }
            }
        }
        // Pass 2: lowest face id within the tie window.
        let limit = best + TIE_EPS;
        let mut pick: Option<(usize, [f64; 3], f64)> = None;
        let mut stack = vec![0usize];
        while let Some(node) = stack.pop() {
            if box_dist_sq(&bvh.bounds, node, m, q).sqrt() > limit {
                continue;
            }
            let (l, r) = bvh.links[node];
            if bvh.leaf[node] {
                for &f in &bvh.order[l..r] {
                    if pick.is_some_and(|p| p.0 < f) {
                        continue;
                    }
                    let (w, d) = self.face_query(q, f);
                    if d <= limit {
                        pick = Some((f, w, d));
                    }
                }
            } else {
                stack.push(l);
                stack.push(r);
            }
        }
        let (face, weights, distance) = pick.expect("best face lies within the tie window");
        Projection {
            face,
            weights,
            distance,
        }
    }

    /// Projects every row of `points`, in parallel when enabled.
    pub fn project_points(&self, points: &RowMatrix) -> Result<Vec<Projection>> {
        self.check_dim(points)?;
        Ok(par::map_indices(points.rows(), |i| self.project(points.row(i))))
    }

    pub fn project_points_seq(&self, points: &RowMatrix) -> Result<Vec<Projection>> {
        self.check_dim(points)?;
        Ok(par::map_indices_seq(points.rows(), |i| self.project(points.row(i))))
    }

    fn check_dim(&self, points: &RowMatrix) -> Result<()> {
        if points.cols() != self.dim() {
            return Err(Error::Dimension(format!(
                "query points have {} columns, surface has {}",
                points.cols(),
                self.dim()
            )));
        }
        Ok(())
    }
}

fn build_node(
    bvh: &mut Bvh,
    m: usize,
    centroids: &[f64],
    face_lo: &[f64],
    face_hi: &[f64],
    start: usize,
    end: usize,
) -> usize {
    let id = bvh.links.len();
    let mut lo = vec![f64::INFINITY; m];
    let mut hi = vec![f64::NEG_INFINITY; m];
    let mut clo = vec![f64::INFINITY; m];
    let mut chi = vec![f64::NEG_INFINITY; m];
    for &f in &bvh.order[start..end] {
        for k in 0..m {
            lo[k] = lo[k].min(face_lo[f * m + k]);
            hi[k] = hi[k].max(face_hi[f * m + k]);
            clo[k] = clo[k].min(centroids[f * m + k]);
            chi[k] = chi[k].max(centroids[f * m + k]);
        }
    }
    bvh.bounds.extend_from_slice(&lo);
    bvh.bounds.extend_from_slice(&hi);
    bvh.links.push((start, end));
    bvh.leaf.push(true);
    let axis = (0..m)
        .max_by(|&a, &b| (chi[a] - clo[a]).total_cmp(&(chi[b] - clo[b])))
        .unwrap_or(0);
    if end - start <= LEAF_FACES || chi[axis] - clo[axis] <= 0.0 {
        return id;
    }
    let mid = (start + end) / 2;
    bvh.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
        centroids[a * m + axis].total_cmp(&centroids[b * m + axis])
    });
    let left = build_node(bvh, m, centroids, face_lo, face_hi, start, mid);
    let right = build_node(bvh, m, centroids, face_lo, face_hi, mid, end);
    bvh.links[id] = (left, right);
    bvh.leaf[id] = false;
    id
}

fn box_dist_sq(bounds: &[f64], node: usize, m: usize, q: &[f64]) -> f64 {
    let lo = &bounds[2 * m * node..2 * m * node + m];
    let hi = &bounds[2 * m * node + m..2 * m * (node + 1)];
    let mut s = 0.0;
    for k in 0..m {
        let d = if q[k] < lo[k] {
            lo[k] - q[k]
        } else if q[k] > hi[k] {
            q[k] - hi[k]
        } else {
            0.0
        };
        s += d * d;
    }
    s
}
