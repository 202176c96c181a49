//! Moving attributes and connectivity through a map.

use crate::error::{Error, Result};
use crate::map::PreciseMap;
use crate::mesh::{CornerAttribute, TriangleMesh};

/// Faces with area below this fraction of the target area count as collapsed.
pub const ZERO_AREA_FRACTION: f64 = 1e-12;
pub const MAX_REPAIR_PASSES: usize = 100;

/// Source mesh with per-vertex texture coordinates pulled from the target:
/// each vertex gets the barycentric blend of the UV wedge of the face its
/// image lies on.
pub fn transfer_texture(p12: &PreciseMap, source: &TriangleMesh, target: &TriangleMesh) -> Result<TriangleMesh> {
    check(p12, source, target)?;
    let uv = target
        .uvs
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("target mesh has no texture coordinates".into()))?;
    let values: Vec<[f64; 2]> = p12
        .rows()
        .iter()
        .map(|r| {
            let wedge = uv.face_indices[r.face];
            let mut t = [0.0; 2];
            for (l, &w) in r.weights.iter().enumerate() {
                let c = uv.values[wedge[l]];
                t[0] += w * c[0];
                t[1] += w * c[1];
            }
            t
        })
        .collect();
    let mut out = source.clone();
    out.uvs = Some(CornerAttribute { values, face_indices: source.faces().to_vec() });
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct Remesh {
    pub mesh: TriangleMesh,
    pub passes: usize,
    /// Faces still below the area threshold when the pass cap was reached.
    pub degenerate: Vec<usize>,
}

/// Target surface resampled with source connectivity: vertices are the
/// images of the source vertices, faces are the source faces. Collapsed
/// faces are repaired by moving their vertices to the average of their
/// 1-ring, all at once per pass, until none remain or the pass cap is hit.
pub fn transfer_connectivity(p12: &PreciseMap, source: &TriangleMesh, target: &TriangleMesh) -> Result<Remesh> {
    check(p12, source, target)?;
    let images = p12.image_points(target);
    let mut pos: Vec<[f64; 3]> = images.row_iter().map(|r| [r[0], r[1], r[2]]).collect();
    let threshold = ZERO_AREA_FRACTION * target.total_area();
    let mut passes = 0;
    let mut degenerate = collapsed_faces(source, &pos, threshold);
    while !degenerate.is_empty() && passes < MAX_REPAIR_PASSES {
        let mut moving = vec![false; pos.len()];
        for &f in &degenerate {
            for v in source.face(f) {
                moving[v] = true;
            }
        }
        let old = pos.clone();
        for (v, p) in pos.iter_mut().enumerate() {
            let ring = source.neighbors(v);
            if !moving[v] || ring.is_empty() {
                continue;
            }
            let mut avg = [0.0; 3];
            for &u in ring {
                for k in 0..3 {
                    avg[k] += old[u][k];
                }
            }
            *p = avg.map(|c| c / ring.len() as f64);
        }
        passes += 1;
        degenerate = collapsed_faces(source, &pos, threshold);
    }
    if !degenerate.is_empty() {
        log::warn!("{} faces still degenerate after {passes} repair passes", degenerate.len());
    }
    let mut mesh = source.with_vertices(pos)?;
    mesh.normals = None;
    Ok(Remesh { mesh, passes, degenerate })
}

fn collapsed_faces(mesh: &TriangleMesh, pos: &[[f64; 3]], threshold: f64) -> Vec<usize> {
    (0..mesh.n_faces())
        .filter(|&f| {
            let [a, b, c] = mesh.face(f);
            !(crate::mesh::triangle_area(&pos[a], &pos[b], &pos[c]) >= threshold)
        })
        .collect()
}

fn check(p: &PreciseMap, source: &TriangleMesh, target: &TriangleMesh) -> Result<()> {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    fn textured_grid() -> TriangleMesh {
        let mut m = shapes::grid(3, 3, 1.0, 1.0);
        let values: Vec<[f64; 2]> = m.vertices().iter().map(|p| [p[0], p[1]]).collect();
        m.uvs = Some(CornerAttribute { values, face_indices: m.faces().to_vec() });
        m
    }

    #[test]
    fn identity_texture() {
        let m = textured_grid();
        let out = transfer_texture(&PreciseMap::identity(&m), &m, &m).unwrap();
        let uv = out.uvs.unwrap();
        for (v, p) in m.vertices().iter().enumerate() {
            assert!((uv.values[v][0] - p[0]).abs() < 1e-15 && (uv.values[v][1] - p[1]).abs() < 1e-15);
        }
        assert!(transfer_texture(&PreciseMap::identity(&m), &m, &shapes::grid(3, 3, 1.0, 1.0)).is_err());
    }

    #[test]
    fn identity_connectivity() {
        let m = shapes::icosphere(1);
        let r = transfer_connectivity(&PreciseMap::identity(&m), &m, &m).unwrap();
        assert_eq!(r.passes, 0);
        assert!(r.degenerate.is_empty());
        assert_eq!(r.mesh.vertices(), m.vertices());
        assert_eq!(r.mesh.faces(), m.faces());
    }

    #[test]
    fn partial_collapse_is_repaired() {
        let m = shapes::grid(4, 4, 1.0, 1.0);
        let mut targets: Vec<usize> = (0..m.n_vertices()).collect();
        let centre = m.vertices().iter().position(|p| (p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12).unwrap();
        let ring = m.neighbors(centre)[0];
        targets[ring] = centre;
        let p = PreciseMap::from_vertex_targets(&m, &targets);
        let r = transfer_connectivity(&p, &m, &m).unwrap();
        assert!(r.passes >= 1);
        assert!(r.degenerate.is_empty());
    }

    #[test]
    fn full_collapse_hits_cap() {
        let m = shapes::grid(2, 2, 1.0, 1.0);
        let p = PreciseMap::from_vertex_targets(&m, &vec![0; m.n_vertices()]);
        let r = transfer_connectivity(&p, &m, &m).unwrap();
        assert_eq!(r.passes, MAX_REPAIR_PASSES);
        assert_eq!(r.degenerate.len(), m.n_faces());
    }
}
