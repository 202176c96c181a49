//! Geodesic distances on triangle meshes.
//!
//! The default solver is fast marching with an unfolding update: inside a
//! triangle with two accepted corners `a`, `b`, the front is modelled by a
//! virtual point source placed in the triangle's plane at distances `d(a)`,
//! `d(b)`, and the third corner receives its straight-line distance to that
//! source when the ray crosses edge `ab`. On flat meshes this reproduces
//! Euclidean distance exactly; on curved meshes it is first-order accurate.
//! A plain Dijkstra on the edge graph is available as a fallback.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::map::BarycentricPoint;
use crate::mesh::{dot3, norm3, sub3, TriangleMesh};
use crate::par;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GeodesicMethod {
    #[default]
    FastMarching,
    EdgeDijkstra,
}

/// Distances from one source vertex to every vertex; unreachable vertices
/// hold `+∞`.
#[derive(Clone, Debug)]
pub struct GeodesicField {
    pub source: usize,
    pub dist: Vec<f64>,
}

impl GeodesicField {
    pub fn unreachable(&self) -> Vec<usize> {
        (0..self.dist.len())
            .filter(|&v| !self.dist[v].is_finite())
            .collect()
    }

    /// Value of the field at a surface point, interpolated barycentrically.
    pub fn at(&self, mesh: &TriangleMesh, p: &BarycentricPoint) -> f64 {
        interpolate_field(mesh, &self.dist, p)
    }
}

/// A geodesic distance oracle bound to one immutable mesh. `Sync`, so many
/// solves may run concurrently against the same instance.
#[derive(Clone, Copy)]
pub struct GeodesicSolver<'a> {
    mesh: &'a TriangleMesh,
    method: GeodesicMethod,
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    vertex: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<'a> GeodesicSolver<'a> {
    pub fn new(mesh: &'a TriangleMesh, method: GeodesicMethod) -> Self {
        Self { mesh, method }
    }

    pub fn mesh(&self) -> &'a TriangleMesh {
        self.mesh
    }

    pub fn method(&self) -> GeodesicMethod {
        self.method
    }

    pub fn single_source(&self, v: usize) -> Result<GeodesicField> {
        if v >= self.mesh.n_vertices() {
            return Err(Error::InvalidInput(format!(
                "source vertex {v} out of range (n = {})",
                self.mesh.n_vertices()
            )));
        }
        Ok(GeodesicField {
            source: v,
            dist: self.propagate(&[(v, 0.0)]),
        })
    }

    /// Fields for many sources, computed in parallel.
    pub fn fields(&self, sources: &[usize]) -> Result<Vec<GeodesicField>> {
        if let Some(&bad) = sources.iter().find(|&&s| s >= self.mesh.n_vertices()) {
            return Err(Error::InvalidInput(format!("source vertex {bad} out of range")));
        }
        Ok(par::map_indices(sources.len(), |i| GeodesicField {
            source: sources[i],
            dist: self.propagate(&[(sources[i], 0.0)]),
        }))
    }

    /// Distances from an arbitrary surface point to every vertex. The front
    /// starts from the exact in-plane distances to the corners of the
    /// point's face.
    pub fn from_point(&self, p: &BarycentricPoint) -> Vec<f64> {
        self.propagate(&self.point_seeds(p))
    }

    /// As [`from_point`](Self::from_point), but only the entries at
    /// `targets` are guaranteed final: the front stops once they are all
    /// reached. Those entries equal the full field's.
    pub fn from_point_until(&self, p: &BarycentricPoint, targets: &[usize]) -> Vec<f64> {
        self.propagate_until(&self.point_seeds(p), targets)
    }

    fn point_seeds(&self, p: &BarycentricPoint) -> Vec<(usize, f64)> {
        let pos = p.position(self.mesh);
        self.mesh
            .face(p.face)
            .iter()
            .map(|&v| (v, norm3(&sub3(&self.mesh.vertex(v), &pos))))
            .collect()
    }

    /// Geodesic distance between two surface points: exact within a shared
    /// face, otherwise the field from `p` interpolated at `q`.
    pub fn distance(&self, p: &BarycentricPoint, q: &BarycentricPoint) -> f64 {
        if let Some(d) = self.same_face_distance(p, q) {
            return d;
        }
        if let (Some(a), Some(b)) = (p.vertex(self.mesh), q.vertex(self.mesh)) {
            return self.propagate_until(&[(a, 0.0)], &[b])[b];
        }
        interpolate_field(self.mesh, &self.from_point_until(p, &self.mesh.face(q.face)), q)
    }

    /// Exact in-plane distance when both points lie on one common face.
    pub fn same_face_distance(&self, p: &BarycentricPoint, q: &BarycentricPoint) -> Option<f64> {
        let fp = self.mesh.face(p.face);
        let fq = self.mesh.face(q.face);
        let shared = p.face == q.face
            || q.support(self.mesh).iter().all(|v| fp.contains(v))
            || p.support(self.mesh).iter().all(|v| fq.contains(v));
        shared.then(|| norm3(&sub3(&p.position(self.mesh), &q.position(self.mesh))))
    }

    /// Multi-source propagation from `(vertex, initial distance)` seeds.
    pub fn propagate(&self, seeds: &[(usize, f64)]) -> Vec<f64> {
        self.march(seeds, None)
    }

    /// Propagation that stops once every vertex in `targets` is final.
    pub fn propagate_until(&self, seeds: &[(usize, f64)], targets: &[usize]) -> Vec<f64> {
        self.march(seeds, Some(targets))
    }

    fn march(&self, seeds: &[(usize, f64)], targets: Option<&[usize]>) -> Vec<f64> {
        let mut stop = targets.map(|t| StopSet::new(self.mesh.n_vertices(), t));
        match self.method {
            GeodesicMethod::FastMarching => self.fast_marching(seeds, stop.as_mut()),
            GeodesicMethod::EdgeDijkstra => self.dijkstra(seeds, stop.as_mut()),
        }
    }

    fn dijkstra(&self, seeds: &[(usize, f64)], mut stop: Option<&mut StopSet>) -> Vec<f64> {
        let mesh = self.mesh;
        let n = mesh.n_vertices();
        let mut dist = vec![f64::INFINITY; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        for &(v, d) in seeds {
            if d < dist[v] {
                dist[v] = d;
                heap.push(Entry { dist: d, vertex: v });
            }
        }
        while let Some(Entry { dist: d, vertex: v }) = heap.pop() {
            if done[v] || d > dist[v] {
                continue;
            }
            done[v] = true;
            if stop.as_deref_mut().is_some_and(|s| s.reach(v)) {
                break;
            }
            let pv = mesh.vertex(v);
            for &w in mesh.neighbors(v) {
                let nd = d + norm3(&sub3(&mesh.vertex(w), &pv));
                if nd < dist[w] {
                    dist[w] = nd;
                    heap.push(Entry { dist: nd, vertex: w });
                }
            }
        }
        dist
    }

    fn fast_marching(&self, seeds: &[(usize, f64)], mut stop: Option<&mut StopSet>) -> Vec<f64> {
        let mesh = self.mesh;
        let n = mesh.n_vertices();
        let mut dist = vec![f64::INFINITY; n];
        let mut accepted = vec![false; n];
        let mut heap = BinaryHeap::new();
        for &(v, d) in seeds {
            if d < dist[v] {
                dist[v] = d;
                heap.push(Entry { dist: d, vertex: v });
            }
        }
        while let Some(Entry { dist: d, vertex: v }) = heap.pop() {
            if accepted[v] || d > dist[v] {
                continue;
            }
            accepted[v] = true;
            if stop.as_deref_mut().is_some_and(|s| s.reach(v)) {
                break;
            }
            for &f in mesh.vertex_faces(v) {
                let face = mesh.face(f);
                for k in 0..3 {
                    let c = face[k];
                    if accepted[c] {
                        continue;
                    }
                    let a = face[(k + 1) % 3];
                    let b = face[(k + 2) % 3];
                    let pc = mesh.vertex(c);
                    let candidate = match (accepted[a], accepted[b]) {
                        (true, true) => unfold_update(
                            &mesh.vertex(a),
                            &mesh.vertex(b),
                            &pc,
                            dist[a],
                            dist[b],
                        ),
                        (true, false) => dist[a] + norm3(&sub3(&pc, &mesh.vertex(a))),
                        (false, true) => dist[b] + norm3(&sub3(&pc, &mesh.vertex(b))),
                        (false, false) => continue,
                    };
                    if candidate < dist[c] {
                        dist[c] = candidate;
                        heap.push(Entry {
                            dist: candidate,
                            vertex: c,
                        });
                    }
                }
            }
        }
        dist
    }
}

/// Vertices still waiting to be finalized.
struct StopSet {
    pending: Vec<bool>,
    left: usize,
}

impl StopSet {
    fn new(n: usize, targets: &[usize]) -> Self {
        let mut pending = vec![false; n];
        let mut left = 0;
        for &t in targets {
            if !pending[t] {
                pending[t] = true;
                left += 1;
            }
        }
        Self { pending, left }
    }

    /// Marks `v` final; true once nothing is pending.
    fn reach(&mut self, v: usize) -> bool {
        if std::mem::take(&mut self.pending[v]) {
            self.left -= 1;
        }
        self.left == 0
    }
}

/// Distance at `c` given accepted distances at `a` and `b` of one triangle.
fn unfold_update(pa: &[f64; 3], pb: &[f64; 3], pc: &[f64; 3], da: f64, db: f64) -> f64 {
    let ab = sub3(pb, pa);
    let ac = sub3(pc, pa);
    let len = norm3(&ab);
    let via_edges = (da + norm3(&ac)).min(db + norm3(&sub3(pc, pb)));
    if len <= 0.0 {
        return via_edges;
    }
    // 2D frame: a = (0, 0), b = (len, 0), c = (cx, cy) with cy > 0.
    let cx = dot3(&ac, &ab) / len;
    let cy = (dot3(&ac, &ac) - cx * cx).max(0.0).sqrt();
    let sx = (da * da - db * db + len * len) / (2.0 * len);
    let sy2 = da * da - sx * sx;
    if sy2 < 0.0 || cy <= 0.0 {
        return via_edges;
    }
    // Virtual source on the far side of ab.
    let sy = -sy2.sqrt();
    let t = -sy / (cy - sy);
    let cross = sx + t * (cx - sx);
    if (0.0..=len).contains(&cross) {
        let direct = ((cx - sx).powi(2) + (cy - sy).powi(2)).sqrt();
        direct.min(via_edges)
    } else {
        via_edges
    }
}

/// A per-vertex field evaluated at a surface point.
pub fn interpolate_field(mesh: &TriangleMesh, dist: &[f64], p: &BarycentricPoint) -> f64 {
    let face = mesh.face(p.face);
    let mut s = 0.0;
    for k in 0..3 {
        if p.weights[k] != 0.0 {
            s += p.weights[k] * dist[face[k]];
        }
    }
    s
}

/// Assigns every vertex to its geodesically nearest center (index into
/// `centers`); ties go to the lowest center index.
pub fn geodesic_voronoi(solver: &GeodesicSolver<'_>, centers: &[usize]) -> Result<Vec<usize>> {
    if centers.is_empty() {
        return Err(Error::InvalidInput("geodesic Voronoi needs at least one center".into()));
    }
    let fields = solver.fields(centers)?;
    let n = solver.mesh().n_vertices();
    Ok((0..n)
        .map(|v| {
            let mut best = 0;
            for (c, f) in fields.iter().enumerate().skip(1) {
                if f.dist[v] < fields[best].dist[v] {
                    best = c;
                }
            }
            best
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn self_distance_and_flat_exactness() {
        let m = shapes::grid(8, 8, 1.0, 1.0);
        let s = GeodesicSolver::new(&m, GeodesicMethod::FastMarching);
        let f = s.single_source(30).unwrap();
        assert_eq!(f.dist[30], 0.0);
        let p = m.vertex(30);
        for v in 0..m.n_vertices() {
            let e = norm3(&sub3(&m.vertex(v), &p));
            assert!((f.dist[v] - e).abs() < 1e-12, "{v}: {} vs {e}", f.dist[v]);
        }
    }

    #[test]
    fn thin_strip_matches_arc_length() {
        let m = shapes::grid(100, 2, 10.0, 0.2);
        for method in [GeodesicMethod::FastMarching, GeodesicMethod::EdgeDijkstra] {
            let f = GeodesicSolver::new(&m, method).single_source(0).unwrap();
            let far = 100;
            assert!((f.dist[far] - 10.0).abs() < 0.02 * 10.0);
        }
    }

    #[test]
    fn antipodal_sphere_distance() {
        let m = shapes::icosphere(3);
        let f = GeodesicSolver::new(&m, GeodesicMethod::FastMarching)
            .single_source(0)
            .unwrap();
        let p0 = m.vertex(0);
        let anti = (0..m.n_vertices())
            .min_by(|&a, &b| dot3(&m.vertex(a), &p0).total_cmp(&dot3(&m.vertex(b), &p0)))
            .unwrap();
        let rel = (f.dist[anti] - std::f64::consts::PI).abs() / std::f64::consts::PI;
        assert!(rel < 0.03, "relative error {rel}");
    }

    #[test]
    fn truncated_fronts_match_full_fields() {
        let m = shapes::icosphere(3);
        for method in [GeodesicMethod::FastMarching, GeodesicMethod::EdgeDijkstra] {
            let s = GeodesicSolver::new(&m, method);
            let full = s.propagate(&[(5, 0.0)]);
            let targets = [9, 17, 5, 300];
            let part = s.propagate_until(&[(5, 0.0)], &targets);
            for t in targets {
                assert_eq!(part[t], full[t]);
            }
            assert!(part.iter().any(|d| d.is_infinite()));
        }
    }

    #[test]
    fn disconnected_vertices_are_infinite() {
        let m = TriangleMesh::new(
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [5.0, 0.0, 0.0],
                [6.0, 0.0, 0.0],
                [5.0, 1.0, 0.0],
            ],
            vec![[0, 1, 2], [3, 4, 5]],
        )
        .unwrap();
        let f = GeodesicSolver::new(&m, GeodesicMethod::FastMarching)
            .single_source(0)
            .unwrap();
        assert_eq!(f.unreachable(), vec![3, 4, 5]);
    }

    #[test]
    fn voronoi_single_and_self_assignment() {
        let m = shapes::icosphere(2);
        let s = GeodesicSolver::new(&m, GeodesicMethod::FastMarching);
        let one = geodesic_voronoi(&s, &[7]).unwrap();
        assert!(one.iter().all(|&c| c == 0));
        let centers = [0, 40, 99, 99];
        let cells = geodesic_voronoi(&s, &centers).unwrap();
        assert_eq!(cells[0], 0);
        assert_eq!(cells[40], 1);
        assert_eq!(cells[99], 2, "duplicate centers resolve to the lowest index");
        assert!(geodesic_voronoi(&s, &[]).is_err());
    }

    #[test]
    fn point_distances() {
        let m = shapes::grid(10, 10, 1.0, 1.0);
        let s = GeodesicSolver::new(&m, GeodesicMethod::FastMarching);
        let p = BarycentricPoint::new(13, [0.2, 0.3, 0.5]);
        assert_eq!(s.distance(&p, &p), 0.0);
        let a = BarycentricPoint::at_vertex(&m, 5);
        let b = BarycentricPoint::at_vertex(&m, 90);
        let field = s.single_source(5).unwrap();
        assert_eq!(s.distance(&a, &b), field.dist[90]);
    }
}
