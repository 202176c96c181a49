//! Map quality measures: conformal distortion, ground-truth error, symmetry
//! compatibility and segmentation compatibility, with cumulative curves.

use std::fmt::Write as _;

use crate::dense::RowMatrix;
use crate::error::{Error, Result};
use crate::geodesic::GeodesicSolver;
use crate::map::{BarycentricPoint, PreciseMap};
use crate::mesh::TriangleMesh;
use crate::operators::face_differential;
use crate::par::map_indices;
use crate::projection::EmbeddedSurface;

/// Number of uniform thresholds between 0 and the 99th percentile.
pub const CURVE_SAMPLES: usize = 200;

/// How items contribute to a cumulative curve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Weighting {
    #[default]
    Count,
    Area,
}

/// Fraction of items whose value is at or below each threshold.
///
/// Thresholds are `CURVE_SAMPLES` uniform steps from 0 to the 99th
/// percentile of the finite values, followed by a final `+∞` threshold at
/// which the fraction is 1.
#[derive(Clone, Debug, PartialEq)]
pub struct CumulativeCurve {
    pub thresholds: Vec<f64>,
    pub fractions: Vec<f64>,
}

impl CumulativeCurve {
    pub fn from_values(values: &[f64], weights: Option<&[f64]>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("cumulative curve of no items".into()));
        }
        if let Some(w) = weights {
            if w.len() != values.len() {
                return Err(Error::Dimension(format!("{} weights for {} values", w.len(), values.len())));
            }
        }
        if values.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::InvalidInput("curve values must be non-negative".into()));
        }
        let weight = |i: usize| weights.map_or(1.0, |w| w[i]);
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let finite: Vec<f64> = order.iter().map(|&i| values[i]).filter(|v| v.is_finite()).collect();
        let top = if finite.is_empty() {
            0.0
        } else {
            let rank = ((0.99 * finite.len() as f64).ceil() as usize).clamp(1, finite.len());
            finite[rank - 1]
        };
        let total: f64 = (0..values.len()).map(weight).sum();
        if !(total > 0.0) {
            return Err(Error::InvalidInput("curve weights sum to zero".into()));
        }
        let mut thresholds: Vec<f64> = (0..CURVE_SAMPLES)
            .map(|k| top * k as f64 / (CURVE_SAMPLES - 1) as f64)
            .collect();
        thresholds.push(f64::INFINITY);
        let mut fractions = Vec::with_capacity(thresholds.len());
        let mut acc = 0.0;
        let mut next = 0;
        for &t in &thresholds {
            while next < order.len() && values[order[next]] <= t {
                acc += weight(order[next]);
                next += 1;
            }
            fractions.push((acc / total).min(1.0));
        }
        *fractions.last_mut().expect("non-empty") = 1.0;
        Ok(Self { thresholds, fractions })
    }

    /// Fraction at the largest threshold not exceeding `t`.
    pub fn fraction_at(&self, t: f64) -> f64 {
        match self.thresholds.iter().rposition(|&x| x <= t) {
            Some(k) => self.fractions[k],
            None => 0.0,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("threshold,fraction\n");
        for (t, f) in self.thresholds.iter().zip(&self.fractions) {
            let _ = writeln!(s, "{t},{f}");
        }
        s
    }
}

/// Per-item values, the items left out, and their curve.
#[derive(Clone, Debug)]
pub struct MetricReport {
    pub values: Vec<Option<f64>>,
    pub excluded: usize,
    pub curve: CumulativeCurve,
}

impl MetricReport {
    fn build(values: Vec<Option<f64>>, weights: Option<&[f64]>) -> Result<Self> {
        let keep: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_some()).collect();
        let vals: Vec<f64> = keep.iter().map(|&i| values[i].expect("kept")).collect();
        let w: Option<Vec<f64>> = weights.map(|w| keep.iter().map(|&i| w[i]).collect());
        let curve = CumulativeCurve::from_values(&vals, w.as_deref())?;
        Ok(Self { excluded: values.len() - keep.len(), values, curve })
    }

    /// Values of the included items.
    pub fn included(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flatten().copied()
    }
}

/// Lumped vertex areas: a third of each incident face.
pub fn vertex_areas(mesh: &TriangleMesh) -> Vec<f64> {
    let mut a = vec![0.0; mesh.n_vertices()];
    for f in 0..mesh.n_faces() {
        let third = mesh.face_area(f) / 3.0;
        for v in mesh.face(f) {
            a[v] += third;
        }
    }
    a
}

/// `κ − 2 = (σ1 − σ2)² / (σ1 σ2)`; `+∞` for a collapsed image.
pub fn conformal_excess(s1: f64, s2: f64) -> f64 {
    if !(s2 > 0.0) || !s1.is_finite() {
        return f64::INFINITY;
    }
    let d = s1 - s2;
    d * d / (s1 * s2)
}

/// `κ(f) − 2` for every source face, with `κ = σ1/σ2 + σ2/σ1` of the map
/// from the source face to its image triangle.
pub fn conformal_distortion(
    p12: &PreciseMap,
    source: &TriangleMesh,
    target: &TriangleMesh,
    weighting: Weighting,
) -> Result<MetricReport> {
    check_source(p12, source, target)?;
    let images = p12.image_points(target);
    let values = map_indices(source.n_faces(), |f| {
        let face = source.face(f);
        let img = face.map(|v| row3(&images, v));
        Some(match face_differential(&source.face_points(f), &img) {
            Ok((s1, s2)) => conformal_excess(s1, s2),
            Err(_) => f64::INFINITY,
        })
    });
    let areas: Vec<f64> = (0..source.n_faces()).map(|f| source.face_area(f)).collect();
    MetricReport::build(values, (weighting == Weighting::Area).then_some(&areas[..]))
}

/// Ground truth expressed at target vertices.
pub fn vertex_ground_truth(target: &TriangleMesh, gt: &[Option<usize>]) -> Vec<Option<BarycentricPoint>> {
    gt.iter()
        .map(|g| g.filter(|&v| v < target.n_vertices()).map(|v| BarycentricPoint::at_vertex(target, v)))
        .collect()
}

/// `d(φ12(v), gt(v)) / √s_2` for every source vertex with a ground-truth
/// entry; vertices without one are excluded and counted.
pub fn ground_truth_error(
    p12: &PreciseMap,
    gt: &[Option<BarycentricPoint>],
    source: &TriangleMesh,
    target_geo: &GeodesicSolver<'_>,
    weighting: Weighting,
) -> Result<MetricReport> {
    let target = target_geo.mesh();
    check_source(p12, source, target)?;
    if gt.len() != source.n_vertices() {
        return Err(Error::Dimension(format!("{} ground-truth entries for {} vertices", gt.len(), source.n_vertices())));
    }
    if let Some(bad) = gt.iter().flatten().find(|g| g.face >= target.n_faces()) {
        return Err(Error::InvalidInput(format!("ground-truth face {} out of range", bad.face)));
    }
    let scale = target.total_area().sqrt();
    let values = map_indices(source.n_vertices(), |v| {
        gt[v].map(|g| target_geo.distance(p12.row(v), &g) / scale)
    });
    let areas = vertex_areas(source);
    MetricReport::build(values, (weighting == Weighting::Area).then_some(&areas[..]))
}

/// `d(S2(φ12(v)), φ12(S1(v))) / √s_2` for every source vertex.
pub fn symmetry_compatibility(
    p12: &PreciseMap,
    s1: &PreciseMap,
    s2: &PreciseMap,
    source: &TriangleMesh,
    target_geo: &GeodesicSolver<'_>,
    weighting: Weighting,
) -> Result<MetricReport> {
    let target = target_geo.mesh();
    check_source(p12, source, target)?;
    check_source(s1, source, source)?;
    check_source(s2, target, target)?;
    let surface = EmbeddedSurface::new(RowMatrix::from_rows(target.vertices()), target.faces())?;
    let scale = target.total_area().sqrt();
    let values = map_indices(source.n_vertices(), |v| {
        let a = s2.eval_at_point(target, target, &surface, p12.row(v));
        let b = p12.eval_at_point(source, target, &surface, s1.row(v));
        Some(target_geo.distance(&a, &b) / scale)
    });
    let areas = vertex_areas(source);
    MetricReport::build(values, (weighting == Weighting::Area).then_some(&areas[..]))
}

/// Per-face labels from per-vertex labels: majority of the labelled corners,
/// ties to the lowest label; unlabelled when no corner is labelled.
pub fn face_labels_from_vertices(mesh: &TriangleMesh, labels: &[Option<i64>]) -> Result<Vec<Option<i64>>> {
    if labels.len() != mesh.n_vertices() {
        return Err(Error::Dimension(format!("{} labels for {} vertices", labels.len(), mesh.n_vertices())));
    }
    Ok(mesh
        .faces()
        .iter()
        .map(|face| {
            let mut ls: Vec<i64> = face.iter().filter_map(|&v| labels[v]).collect();
            ls.sort_unstable();
            let mut best: Option<(usize, i64)> = None;
            for &l in &ls {
                let c = ls.iter().filter(|&&x| x == l).count();
                if best.is_none_or(|(bc, _)| c > bc) {
                    best = Some((c, l));
                }
            }
            best.map(|(_, l)| l)
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentationReport {
    /// Matched source area over the area of the included vertices.
    pub score: f64,
    pub excluded_vertices: usize,
}

/// Area fraction of source vertices whose image lies on a target face with
/// the same label. An image on an edge or at a vertex lies on every face
/// around it and matches if any of them does. Vertices that are unlabelled,
/// or whose image faces are all unlabelled, are excluded and counted.
pub fn segmentation_compatibility(
    p12: &PreciseMap,
    source: &TriangleMesh,
    target: &TriangleMesh,
    source_labels: &[Option<i64>],
    target_face_labels: &[Option<i64>],
) -> Result<SegmentationReport> {
    check_source(p12, source, target)?;
    if source_labels.len() != source.n_vertices() {
        return Err(Error::Dimension(format!("{} labels for {} vertices", source_labels.len(), source.n_vertices())));
    }
    if target_face_labels.len() != target.n_faces() {
        return Err(Error::Dimension(format!("{} labels for {} faces", target_face_labels.len(), target.n_faces())));
    }
    let areas = vertex_areas(source);
    let mut matched = 0.0;
    let mut included = 0.0;
    let mut excluded = 0;
    for v in 0..source.n_vertices() {
        let Some(label) = source_labels[v] else {
            excluded += 1;
            continue;
        };
        let faces = faces_containing(target, p12.row(v));
        let labelled: Vec<i64> = faces.iter().filter_map(|&f| target_face_labels[f]).collect();
        if labelled.is_empty() {
            excluded += 1;
            continue;
        }
        included += areas[v];
        if labelled.contains(&label) {
            matched += areas[v];
        }
    }
    if !(included > 0.0) {
        return Err(Error::InvalidInput("no labelled vertices to score".into()));
    }
    Ok(SegmentationReport { score: matched / included, excluded_vertices: excluded })
}

fn faces_containing(mesh: &TriangleMesh, p: &BarycentricPoint) -> Vec<usize> {
    let support = p.support(mesh);
    match support.len() {
        1 => mesh.vertex_faces(support[0]).to_vec(),
        2 => mesh
            .vertex_faces(support[0])
            .iter()
            .copied()
            .filter(|&f| mesh.corner_of(f, support[1]).is_some())
            .collect(),
        _ => vec![p.face],
    }
}

fn check_source(p: &PreciseMap, source: &TriangleMesh, target: &TriangleMesh) -> Result<()> {
    if p.n_source() != source.n_vertices() || p.n_target() != target.n_vertices() {
        return Err(Error::Dimension(format!(
            "map is {}→{} but meshes have {} and {} vertices",
            p.n_source(),
            p.n_target(),
            source.n_vertices(),
            target.n_vertices()
        )));
    }
    Ok(())
}

fn row3(m: &RowMatrix, i: usize) -> [f64; 3] {
    let r = m.row(i);
    [r[0], r[1], r[2]]
}
