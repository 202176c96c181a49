//! Procedural test meshes: icospheres, flat grids, disks and Enneper patches.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::mesh::TriangleMesh;

/// Unit icosphere from `level` loop-subdivision steps of the icosahedron:
/// level 0 has 12 vertices / 20 faces, level 3 has 642 / 1280, level 4 has
/// 2562 / 5120. Vertices of level `k` are the first vertices of level `k+1`.
pub fn icosphere(level: usize) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<[f64; 3]> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(normalized)
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut mid = |a: usize, b: usize, verts: &mut Vec<[f64; 3]>| -> usize {
            *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (p, q) = (verts[a], verts[b]);
                verts.push(normalized(&[p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                verts.len() - 1
            })
        };
        for &[a, b, c] in &faces {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    TriangleMesh::new(vertices, faces).expect("icosphere is valid")
}

fn normalized(p: &[f64; 3]) -> [f64; 3] {
    let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    [p[0] / n, p[1] / n, p[2] / n]
}

/// Flat `width × height` rectangle in the z = 0 plane, `nx × ny` cells, each
/// split along its (0,0)-(1,1) diagonal.
pub fn grid(nx: usize, ny: usize, width: f64, height: f64) -> TriangleMesh {
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([width * i as f64 / nx as f64, height * j as f64 / ny as f64, 0.0]);
        }
    }
    let mut faces = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let a = j * (nx + 1) + i;
            let b = a + 1;
            let c = a + nx + 1;
            let d = c + 1;
            faces.push([a, b, d]);
            faces.push([a, d, c]);
        }
    }
    TriangleMesh::new(vertices, faces).expect("grid is valid")
}

/// Unit square grid with interior vertices jittered in-plane by up to
/// `amount` cell widths, driven by a small deterministic generator.
pub fn jittered_grid(n: usize, amount: f64, seed: u64) -> TriangleMesh {
    let base = grid(n, n, 1.0, 1.0);
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    let h = 1.0 / n as f64;
    let vertices = base
        .vertices()
        .iter()
        .map(|p| {
            let interior = p[0] > 1e-12 && p[0] < 1.0 - 1e-12 && p[1] > 1e-12 && p[1] < 1.0 - 1e-12;
            let (dx, dy) = (next(), next());
            if interior {
                [p[0] + amount * h * dx, p[1] + amount * h * dy, 0.0]
            } else {
                *p
            }
        })
        .collect();
    base.with_vertices(vertices).expect("same vertex count")
}

/// Planar disk of the given radius: a centre vertex plus `rings` concentric
/// rings, ring `r` holding `sectors * r` vertices.
pub fn disk(radius: f64, rings: usize, sectors: usize) -> TriangleMesh {
    let (vertices, faces) = polar_patch(rings, sectors, |r, theta| {
        [radius * r * theta.cos(), radius * r * theta.sin(), 0.0]
    });
    TriangleMesh::new(vertices, faces).expect("disk is valid")
}

/// Enneper minimal surface over the parameter disk of radius `radius`
/// (`radius < √3` keeps it embedded), with the same polar layout as [`disk`].
pub fn enneper(radius: f64, rings: usize, sectors: usize) -> TriangleMesh {
    let (vertices, faces) = polar_patch(rings, sectors, |r, theta| {
        let u = radius * r * theta.cos();
        let v = radius * r * theta.sin();
        [
            u - u * u * u / 3.0 + u * v * v,
            v - v * v * v / 3.0 + v * u * u,
            u * u - v * v,
        ]
    });
    TriangleMesh::new(vertices, faces).expect("enneper patch is valid")
}

/// Polar triangulation; `place(r, θ)` maps normalized radius and angle to 3D.
/// Vertex 0 is the centre, ring `k` starts at `1 + sectors·k(k−1)/2`.
fn polar_patch(
    rings: usize,
    sectors: usize,
    place: impl Fn(f64, f64) -> [f64; 3],
) -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let mut vertices = vec![place(0.0, 0.0)];
    let mut ring_start = vec![0usize];
    for k in 1..=rings {
        ring_start.push(vertices.len());
        let count = sectors * k;
        for i in 0..count {
            let theta = 2.0 * PI * i as f64 / count as f64;
            vertices.push(place(k as f64 / rings as f64, theta));
        }
    }
    let mut faces = Vec::new();
    // Innermost fan.
    for i in 0..sectors {
        faces.push([0, ring_start[1] + i, ring_start[1] + (i + 1) % sectors]);
    }
    for k in 1..rings {
        let (inner, outer) = (ring_start[k], ring_start[k + 1]);
        let (ni, no) = (sectors * k, sectors * (k + 1));
        // Walk both rings by angle, always advancing the one that lags.
        let (mut i, mut o) = (0usize, 0usize);
        while i < ni || o < no {
            let ti = (i as f64 + 1.0) / ni as f64;
            let to = (o as f64 + 1.0) / no as f64;
            if o < no && (i >= ni || to <= ti) {
                faces.push([inner + i % ni, outer + o, outer + (o + 1) % no]);
                o += 1;
            } else {
                faces.push([inner + i, outer + o % no, inner + (i + 1) % ni]);
                i += 1;
            }
        }
    }
    (vertices, faces)
}

/// Vertex indices of the outer ring produced by [`disk`] / [`enneper`].
pub fn polar_boundary(rings: usize, sectors: usize) -> std::ops::Range<usize> {
    let start = 1 + sectors * rings * (rings - 1) / 2;
    start..start + sectors * rings
}
