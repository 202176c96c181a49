//! Initial maps and auxiliary images for the solver.

use crate::dense::RowMatrix;
use crate::error::{Error, Result};
use crate::geodesic::{geodesic_voronoi, GeodesicSolver};
use crate::linalg::lowest_generalized_eigenpairs;
use crate::map::PreciseMap;
use crate::mesh::TriangleMesh;
use crate::operators::MeshOperators;

/// Landmark pairs `(p on M1, q on M2)` as 0-based vertex ids. Targets may
/// repeat.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LandmarkSet {
    pub pairs: Vec<(usize, usize)>,
}

impl LandmarkSet {
    pub fn new(pairs: Vec<(usize, usize)>, n1: usize, n2: usize) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidInput("at least one landmark pair is required".into()));
        }
        for (i, &(p, q)) in pairs.iter().enumerate() {
            if p >= n1 || q >= n2 {
                return Err(Error::InvalidInput(format!(
                    "landmark {} = ({}, {}) out of range ({n1}, {n2} vertices)",
                    i + 1,
                    p + 1,
                    q + 1
                )));
            }
        }
        Ok(Self { pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn sources(&self) -> Vec<usize> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn targets(&self) -> Vec<usize> {
        self.pairs.iter().map(|p| p.1).collect()
    }
}

/// Coefficient matrices `C12` (`k1 × k2`) and `C21` (`k2 × k1`) between
/// reduced bases.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionalMap {
    pub c12: RowMatrix,
    pub c21: RowMatrix,
}

impl FunctionalMap {
    pub fn new(c12: RowMatrix, c21: RowMatrix) -> Result<Self> {
        if c12.rows() != c21.cols() || c12.cols() != c21.rows() {
            return Err(Error::Dimension(format!(
                "C12 is {}x{} but C21 is {}x{}",
                c12.rows(),
                c12.cols(),
                c21.rows(),
                c21.cols()
            )));
        }
        if !c12.is_finite() || !c21.is_finite() {
            return Err(Error::InvalidInput("functional map has non-finite entries".into()));
        }
        Ok(Self { c12, c21 })
    }

    pub fn k1(&self) -> usize {
        self.c12.rows()
    }

    pub fn k2(&self) -> usize {
        self.c12.cols()
    }
}

/// Starting point for the solver. Maps may be absent (functional-map
/// initialization), in which case the solver opens with P-steps.
#[derive(Clone, Debug)]
pub struct Initialization {
    pub p12: Option<PreciseMap>,
    pub p21: Option<PreciseMap>,
    pub x12: RowMatrix,
    pub x21: RowMatrix,
}

/// Initialization from two maps: `X_ij = P_ij X_j`.
pub fn init_from_maps(p12: PreciseMap, p21: PreciseMap, x1: &RowMatrix, x2: &RowMatrix) -> Result<Initialization> {
    if p12.n_source() != x1.rows() || p21.n_source() != x2.rows() {
        return Err(Error::Dimension("maps do not match the embeddings".into()));
    }
    let x12 = p12.apply(x2)?;
    let x21 = p21.apply(x1)?;
    Ok(Initialization {
        p12: Some(p12),
        p21: Some(p21),
        x12,
        x21,
    })
}

/// Every geodesic Voronoi cell of the `p_i` on M1 is sent to `q_i`, and
/// symmetrically for M2.
pub fn init_from_landmarks(
    geo1: &GeodesicSolver<'_>,
    geo2: &GeodesicSolver<'_>,
    landmarks: &LandmarkSet,
    x1: &RowMatrix,
    x2: &RowMatrix,
) -> Result<Initialization> {
    let (m1, m2) = (geo1.mesh(), geo2.mesh());
    LandmarkSet::new(landmarks.pairs.clone(), m1.n_vertices(), m2.n_vertices())?;
    let (p12, p21) = landmark_maps(geo1, geo2, landmarks)?;
    init_from_maps(p12, p21, x1, x2)
}

/// The cell-collapsing maps of [`init_from_landmarks`].
pub fn landmark_maps(
    geo1: &GeodesicSolver<'_>,
    geo2: &GeodesicSolver<'_>,
    landmarks: &LandmarkSet,
) -> Result<(PreciseMap, PreciseMap)> {
    let (src, dst) = (landmarks.sources(), landmarks.targets());
    let cells1 = geodesic_voronoi(geo1, &src)?;
    let cells2 = geodesic_voronoi(geo2, &dst)?;
    let t12: Vec<usize> = cells1.iter().map(|&c| dst[c]).collect();
    let t21: Vec<usize> = cells2.iter().map(|&c| src[c]).collect();
    Ok((
        PreciseMap::from_vertex_targets(geo2.mesh(), &t12),
        PreciseMap::from_vertex_targets(geo1.mesh(), &t21),
    ))
}

/// From a pointwise map M1 → M2: `P21` is its nearest-vertex inverse.
pub fn init_from_pointwise(
    p12: PreciseMap,
    m1: &TriangleMesh,
    m2: &TriangleMesh,
    x1: &RowMatrix,
    x2: &RowMatrix,
) -> Result<Initialization> {
    if p12.n_source() != m1.n_vertices() || p12.n_target() != m2.n_vertices() {
        return Err(Error::Dimension("pointwise map does not match the meshes".into()));
    }
    if !p12.is_feasible(crate::map::WEIGHT_SLACK) {
        return Err(Error::InvalidInput("pointwise map is not feasible".into()));
    }
    let p21 = p12.invert_pointwise(m1, m2);
    init_from_maps(p12, p21, x1, x2)
}

/// Reduced Laplace–Beltrami basis: the `k` lowest generalized eigenpairs of
/// `(W, A)`, `A`-orthonormal, ascending.
#[derive(Clone, Debug)]
pub struct SpectralBasis {
    pub values: Vec<f64>,
    pub vectors: RowMatrix,
}

pub fn lb_basis(ops: &MeshOperators, k: usize) -> Result<SpectralBasis> {
    if k == 0 || k > ops.n() {
        return Err(Error::InvalidInput(format!("basis size {k} for {} vertices", ops.n())));
    }
    let (values, vectors) = lowest_generalized_eigenpairs(&ops.laplacian, &ops.mass, k, 1e-10, 300)?;
    Ok(SpectralBasis { values, vectors })
}

impl SpectralBasis {
    pub fn k(&self) -> usize {
        self.vectors.cols()
    }

    /// `Ψᵀ A X` (`k × cols`).
    pub fn analyze(&self, mass: &[f64], x: &RowMatrix) -> RowMatrix {
        let k = self.k();
        let mut out = RowMatrix::zeros(k, x.cols());
        for i in 0..x.rows() {
            let psi = self.vectors.row(i);
            let xi = x.row(i);
            for a in 0..k {
                let s = psi[a] * mass[i];
                for (o, v) in out.row_mut(a).iter_mut().zip(xi) {
                    *o += s * v;
                }
            }
        }
        out
    }

    /// `Ψ C` (`n × cols`).
    pub fn synthesize(&self, coeffs: &RowMatrix) -> RowMatrix {
        let n = self.vectors.rows();
        let cols = coeffs.cols();
        RowMatrix::from_fn(n, cols, |i, c| {
            let psi = self.vectors.row(i);
            (0..self.k()).map(|a| psi[a] * coeffs[(a, c)]).sum()
        })
    }
}

fn mat_mul(a: &RowMatrix, b: &RowMatrix) -> RowMatrix {
    RowMatrix::from_fn(a.rows(), b.cols(), |i, j| {
        (0..a.cols()).map(|l| a[(i, l)] * b[(l, j)]).sum()
    })
}

/// `X_ij = Ψ_i C_ij Ψ_jᵀ A_j X_j`; maps are left for the solver's opening
/// P-steps.
pub fn init_from_functional_map(
    fmap: &FunctionalMap,
    basis1: &SpectralBasis,
    basis2: &SpectralBasis,
    ops1: &MeshOperators,
    ops2: &MeshOperators,
    x1: &RowMatrix,
    x2: &RowMatrix,
) -> Result<Initialization> {
    if fmap.k1() != basis1.k() || fmap.k2() != basis2.k() {
        return Err(Error::Dimension(format!(
            "functional map is {}x{}, bases have {} and {} functions",
            fmap.k1(),
            fmap.k2(),
            basis1.k(),
            basis2.k()
        )));
    }
    if x1.rows() != ops1.n() || x2.rows() != ops2.n() {
        return Err(Error::Dimension("embeddings do not match the meshes".into()));
    }
    let x12 = basis1.synthesize(&mat_mul(&fmap.c12, &basis2.analyze(&ops2.mass, x2)));
    let x21 = basis2.synthesize(&mat_mul(&fmap.c21, &basis1.analyze(&ops1.mass, x1)));
    Ok(Initialization {
        p12: None,
        p21: None,
        x12,
        x21,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesic::GeodesicMethod;
    use crate::map::BarycentricPoint;
    use crate::shapes;

    #[test]
    fn landmarks_covering_all_vertices_give_identity() {
        let m = shapes::icosphere(1);
        let geo = GeodesicSolver::new(&m, GeodesicMethod::FastMarching);
        let x = RowMatrix::from_rows(m.vertices());
        let lms = LandmarkSet::new((0..m.n_vertices()).map(|v| (v, v)).collect(), 42, 42).unwrap();
        let init = init_from_landmarks(&geo, &geo, &lms, &x, &x).unwrap();
        assert_eq!(init.p12.unwrap(), PreciseMap::identity(&m));
        assert_eq!(init.x12, x);
    }

    #[test]
    fn single_landmark_collapses() {
        let m = shapes::icosphere(2);
        let geo = GeodesicSolver::new(&m, GeodesicMethod::FastMarching);
        let x = RowMatrix::from_rows(m.vertices());
        let lms = LandmarkSet::new(vec![(3, 50)], 162, 162).unwrap();
        let init = init_from_landmarks(&geo, &geo, &lms, &x, &x).unwrap();
        let target = BarycentricPoint::at_vertex(&m, 50);
        assert!(init.p12.unwrap().rows().iter().all(|r| *r == target));
        assert!(LandmarkSet::new(vec![], 1, 1).is_err());
        assert!(LandmarkSet::new(vec![(0, 200)], 162, 162).is_err());
    }

    #[test]
    fn basis_is_mass_orthonormal_with_constant_first() {
        let m = shapes::icosphere(2);
        let ops = MeshOperators::new(&m).unwrap();
        let b = lb_basis(&ops, 10).unwrap();
        assert!(b.values[0].abs() < 1e-8);
        let first = b.vectors.row(0)[0];
        for i in 0..m.n_vertices() {
            assert!((b.vectors.row(i)[0] - first).abs() < 1e-8);
        }
        for p in 0..10 {
            for q in 0..10 {
                let g: f64 = (0..m.n_vertices())
                    .map(|i| b.vectors[(i, p)] * ops.mass[i] * b.vectors[(i, q)])
                    .sum();
                let e = if p == q { 1.0 } else { 0.0 };
                assert!((g - e).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn identity_functional_map_with_full_basis() {
        let m = shapes::icosphere(0);
        let ops = MeshOperators::new(&m).unwrap();
        let b = lb_basis(&ops, 12).unwrap();
        let x = RowMatrix::from_rows(m.vertices());
        let eye = RowMatrix::from_fn(12, 12, |i, j| if i == j { 1.0 } else { 0.0 });
        let fmap = FunctionalMap::new(eye.clone(), eye).unwrap();
        let init = init_from_functional_map(&fmap, &b, &b, &ops, &ops, &x, &x).unwrap();
        assert!(init.x12.max_abs_diff(&x) < 1e-9);
        assert!(init.p12.is_none());
        let bad = FunctionalMap::new(RowMatrix::zeros(3, 3), RowMatrix::zeros(3, 3)).unwrap();
        assert!(init_from_functional_map(&bad, &b, &b, &ops, &ops, &x, &x).is_err());
    }
}
