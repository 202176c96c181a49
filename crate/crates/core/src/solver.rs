//! Reversible harmonic maps by half-quadratic splitting.
//!
//! For each direction `ij` (source `i`, target `j`) with embeddings `X_i`,
//! `X_j`, maps `P_ij`, auxiliary images `X_ij` and total areas `s_i`:
//!
//! * `Ē_D(X_ij) = tr(X_ijᵀ W_i X_ij) / s_i`
//! * `Ē_R(P_ij, X_ji) = ‖P_ij X_ji − X_i‖²_{A_i} / s_i²`
//! * `Ē_Q(P_ij, X_ij) = ‖X_ij − P_ij X_j‖²_{A_i} / (s_i s_j)`
//!
//! and the split energy is `Σ_ij α Ē_D + (1 − α) Ē_R + β Ē_Q`, optionally
//! plus weak landmark terms. Each iteration runs, for `ij = 12` then `21`, a
//! P-step (row-wise exact projection) and an X-step (sparse SPD solve).

use std::fmt;

use crate::dense::RowMatrix;
use crate::error::{Error, Result};
use crate::geodesic::{interpolate_field, GeodesicSolver};
use crate::init::{Initialization, LandmarkSet};
use crate::linalg::{PatternValues, SpdSolver};
use crate::map::{BarycentricPoint, PreciseMap};
use crate::mesh::{triangle_area, TriangleMesh};
use crate::operators::MeshOperators;
use crate::par;
use crate::projection::EmbeddedSurface;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopRule {
    /// `|E_prev − E| ≤ tol · |E|`.
    Relative,
    /// `|E_prev − E| ≤ tol`.
    Absolute,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub alpha: f64,
    pub beta_slope: f64,
    pub beta_cap_iter: usize,
    pub gamma: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub stop: StopRule,
    /// Stop once both maps are unchanged for this many consecutive
    /// iterations; 0 disables the rule.
    pub stationary_iters: usize,
    /// Evaluate the geodesic Dirichlet energy every this many iterations
    /// (0 = never).
    pub geodesic_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha: 5e-4,
            beta_slope: 5e-3,
            beta_cap_iter: 100,
            gamma: 0.0,
            max_iters: 200,
            tol: 1e-9,
            stop: StopRule::Relative,
            stationary_iters: 2,
            geodesic_every: 1,
        }
    }
}

impl SolverConfig {
    /// `β_k = slope · min(k, cap)`, iterations counted from 1.
    pub fn beta(&self, iteration: usize) -> f64 {
        self.beta_slope * iteration.min(self.beta_cap_iter) as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidInput(format!("alpha = {} outside [0, 1]", self.alpha)));
        }
        if !(self.beta_slope >= 0.0) || !(self.gamma >= 0.0) || !(self.tol >= 0.0) {
            return Err(Error::InvalidInput("beta slope, gamma and tol must be nonnegative".into()));
        }
        Ok(())
    }
}

/// One mesh with everything the solver reads from it.
#[derive(Clone, Copy)]
pub struct Shape<'a> {
    pub mesh: &'a TriangleMesh,
    pub ops: &'a MeshOperators,
    pub x: &'a RowMatrix,
    pub geo: GeodesicSolver<'a>,
}

impl Shape<'_> {
    fn area(&self) -> f64 {
        self.ops.total_area
    }
}

/// A mapping problem between two shapes, with reusable symbolic factorizations.
pub struct Problem<'a> {
    shapes: [Shape<'a>; 2],
    landmarks: Option<LandmarkSet>,
    solvers: [SpdSolver; 2],
}

impl<'a> Problem<'a> {
    pub fn new(s1: Shape<'a>, s2: Shape<'a>, landmarks: Option<LandmarkSet>) -> Result<Self> {
        if s1.x.cols() != s2.x.cols() {
            return Err(Error::Dimension(format!(
                "embedding dimensions differ: {} vs {}",
                s1.x.cols(),
                s2.x.cols()
            )));
        }
        for s in [&s1, &s2] {
            if s.x.rows() != s.mesh.n_vertices() || s.ops.n() != s.mesh.n_vertices() {
                return Err(Error::Dimension("embedding or operators do not match the mesh".into()));
            }
        }
        if let Some(l) = &landmarks {
            LandmarkSet::new(l.pairs.clone(), s1.mesh.n_vertices(), s2.mesh.n_vertices())?;
        }
        let solvers = [
            SpdSolver::new(s1.ops.laplacian.lower_pattern())?,
            SpdSolver::new(s2.ops.laplacian.lower_pattern())?,
        ];
        Ok(Self {
            shapes: [s1, s2],
            landmarks,
            solvers,
        })
    }

    pub fn shape(&self, i: usize) -> &Shape<'a> {
        &self.shapes[i]
    }

    pub fn landmarks(&self) -> Option<&LandmarkSet> {
        self.landmarks.as_ref()
    }

    /// Landmark pairs oriented for direction `i → j` (`(vertex on i, vertex on j)`).
    fn oriented_landmarks(&self, dir: Direction) -> Vec<(usize, usize)> {
        match &self.landmarks {
            None => Vec::new(),
            Some(l) => l
                .pairs
                .iter()
                .map(|&(p, q)| if dir == Direction::Forward { (p, q) } else { (q, p) })
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// M1 → M2.
    Forward,
    /// M2 → M1.
    Backward,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::Forward, Direction::Backward];

    /// `(i, j)` as 0-based shape indices.
    pub fn ij(self) -> (usize, usize) {
        match self {
            Direction::Forward => (0, 1),
            Direction::Backward => (1, 0),
        }
    }

    fn index(self) -> usize {
        self.ij().0
    }
}

/// Individual energy terms, indexed by direction (`[12, 21]`).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyTerms {
    pub ed: [f64; 2],
    pub er: [f64; 2],
    pub eq: [f64; 2],
    /// Weak landmark energy, already multiplied by γ.
    pub landmark: f64,
}

impl EnergyTerms {
    pub fn total(&self, alpha: f64, beta: f64) -> f64 {
        (0..2)
            .map(|d| alpha * self.ed[d] + (1.0 - alpha) * self.er[d] + beta * self.eq[d])
            .sum::<f64>()
            + self.landmark
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub beta: f64,
    pub total: f64,
    pub terms: EnergyTerms,
    /// Geodesic Dirichlet energy of both maps, divided by its value at the
    /// first traced iteration; NaN when not evaluated.
    pub geodesic: f64,
    pub image_area: [f64; 2],
}

impl TraceRow {
    pub const CSV_HEADER: &'static str =
        "iteration,E_total,E_D12,E_D21,E_R12,E_R21,E_Q12,E_Q21,E_geodesic,imageArea12,imageArea21,beta";

    pub fn csv(&self) -> String {
        let t = &self.terms;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.iteration,
            self.total,
            t.ed[0],
            t.ed[1],
            t.er[0],
            t.er[1],
            t.eq[0],
            t.eq[1],
            self.geodesic,
            self.image_area[0],
            self.image_area[1],
            self.beta
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    EnergyConverged,
    MapsStationary,
    MaxIterations,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::EnergyConverged => "energy change below tolerance",
            Termination::MapsStationary => "maps unchanged",
            Termination::MaxIterations => "iteration limit",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SolverState {
    pub p: [PreciseMap; 2],
    pub x: [RowMatrix; 2],
    pub iteration: usize,
    pub trace: Vec<TraceRow>,
    pub termination: Option<Termination>,
    geodesic_reference: Option<f64>,
}

impl SolverState {
    /// Builds the state from an initialization. Missing maps are produced by
    /// P-steps at the first iteration's β before anything else.
    pub fn new(problem: &Problem<'_>, cfg: &SolverConfig, init: Initialization) -> Result<Self> {
        cfg.validate()?;
        let [s1, s2] = &problem.shapes;
        let m = s1.x.cols();
        if init.x12.rows() != s1.mesh.n_vertices()
            || init.x21.rows() != s2.mesh.n_vertices()
            || init.x12.cols() != m
            || init.x21.cols() != m
        {
            return Err(Error::Dimension("initial auxiliary images have the wrong shape".into()));
        }
        let placeholder = |src: &Shape<'_>, dst: &Shape<'_>| {
            PreciseMap::from_vertex_targets(dst.mesh, &vec![0; src.mesh.n_vertices()])
        };
        let missing = [init.p12.is_none(), init.p21.is_none()];
        let mut state = Self {
            p: [
                init.p12.unwrap_or_else(|| placeholder(s1, s2)),
                init.p21.unwrap_or_else(|| placeholder(s2, s1)),
            ],
            x: [init.x12, init.x21],
            iteration: 0,
            trace: Vec::new(),
            termination: None,
            geodesic_reference: None,
        };
        for (d, dir) in Direction::BOTH.into_iter().enumerate() {
            let (i, j) = dir.ij();
            if state.p[d].n_source() != problem.shapes[i].mesh.n_vertices()
                || state.p[d].n_target() != problem.shapes[j].mesh.n_vertices()
            {
                return Err(Error::Dimension("initial map does not match the meshes".into()));
            }
        }
        for dir in Direction::BOTH {
            if missing[dir.index()] {
                state.p_step(problem, cfg, dir, cfg.beta(1))?;
            }
        }
        Ok(state)
    }

    pub fn p12(&self) -> &PreciseMap {
        &self.p[0]
    }

    pub fn p21(&self) -> &PreciseMap {
        &self.p[1]
    }

    pub fn energy_terms(&self, problem: &Problem<'_>, cfg: &SolverConfig) -> EnergyTerms {
        let mut t = EnergyTerms::default();
        for dir in Direction::BOTH {
            let d = dir.index();
            let (i, j) = dir.ij();
            let (si, sj) = (&problem.shapes[i], &problem.shapes[j]);
            let (ai, aj) = (si.area(), sj.area());
            t.ed[d] = si.ops.dirichlet(&self.x[d]) / ai;
            let back = self.p[d].apply(&self.x[1 - d]).expect("consistent shapes");
            t.er[d] = back.sub(si.x).expect("same shape").weighted_norm_sq(&si.ops.mass) / (ai * ai);
            let fwd = self.p[d].apply(sj.x).expect("consistent shapes");
            t.eq[d] = self.x[d].sub(&fwd).expect("same shape").weighted_norm_sq(&si.ops.mass) / (ai * aj);
        }
        if cfg.gamma > 0.0 {
            for dir in Direction::BOTH {
                let d = dir.index();
                let (i, j) = dir.ij();
                for (p, q) in problem.oriented_landmarks(dir) {
                    let diff: f64 = self.x[d]
                        .row(p)
                        .iter()
                        .zip(problem.shapes[j].x.row(q))
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    t.landmark += cfg.gamma * problem.shapes[i].ops.mass[p] * diff;
                }
            }
        }
        t
    }

    pub fn energy(&self, problem: &Problem<'_>, cfg: &SolverConfig, beta: f64) -> f64 {
        self.energy_terms(problem, cfg).total(cfg.alpha, beta)
    }

    /// Replaces `P_ij` by the row-wise exact minimizer of
    /// `(1 − α) Ē_R(P, X_ji) + β Ē_Q(P, X_ij)`.
    pub fn p_step(&mut self, problem: &Problem<'_>, cfg: &SolverConfig, dir: Direction, beta: f64) -> Result<()> {
        let d = dir.index();
        let (i, j) = dir.ij();
        let (si, sj) = (&problem.shapes[i], &problem.shapes[j]);
        let (ai, aj) = (si.area(), sj.area());
        let cr = ((1.0 - cfg.alpha) / (ai * ai)).sqrt();
        let cq = (beta / (ai * aj)).sqrt();
        let m = si.x.cols();
        let xji = &self.x[1 - d];
        let xij = &self.x[d];
        let stacked = RowMatrix::from_fn(sj.mesh.n_vertices(), 2 * m, |v, c| {
            if c < m {
                cr * xji[(v, c)]
            } else {
                cq * sj.x[(v, c - m)]
            }
        });
        let queries = RowMatrix::from_fn(si.mesh.n_vertices(), 2 * m, |v, c| {
            if c < m {
                cr * si.x[(v, c)]
            } else {
                cq * xij[(v, c - m)]
            }
        });
        let surface = EmbeddedSurface::new(stacked, sj.mesh.faces())?;
        let hits = surface.project_points(&queries)?;
        let rows = hits
            .into_iter()
            .map(|h| BarycentricPoint::new(h.face, h.weights))
            .collect();
        self.p[d] = PreciseMap::new(sj.mesh, rows)?;
        Ok(())
    }

    /// Replaces `X_ij` by the exact minimizer of the split energy with both
    /// maps fixed.
    pub fn x_step(&mut self, problem: &Problem<'_>, cfg: &SolverConfig, dir: Direction, beta: f64) -> Result<()> {
        let (h, rhs) = self.x_system(problem, cfg, dir, beta)?;
        let d = dir.index();
        let factor = problem.solvers[d].factorize(&h)?;
        let x = factor.solve(&rhs);
        if !x.is_finite() {
            return Err(Error::Numerical("X-step produced non-finite values".into()));
        }
        self.x[d] = x;
        Ok(())
    }

    /// Normal equations `H X = R` of the X-step for direction `dir`; `H` as
    /// values on the direction's sparsity pattern.
    pub fn x_system(
        &self,
        problem: &Problem<'_>,
        cfg: &SolverConfig,
        dir: Direction,
        beta: f64,
    ) -> Result<(Vec<f64>, RowMatrix)> {
        let d = dir.index();
        let (i, j) = dir.ij();
        let (si, sj) = (&problem.shapes[i], &problem.shapes[j]);
        let (ai, aj) = (si.area(), sj.area());
        let cd = cfg.alpha / ai;
        let cr = (1.0 - cfg.alpha) / (aj * aj);
        let cq = beta / (ai * aj);
        let pji = &self.p[1 - d];
        let pij = &self.p[d];
        let n = si.mesh.n_vertices();

        let pattern = problem.solvers[d].pattern();
        let mut vals = PatternValues::new(pattern);
        for r in 0..n {
            for (c, v) in si.ops.laplacian.row(r) {
                if c <= r {
                    vals.add(r, c, cd * v)?;
                }
            }
            vals.add(r, r, cq * si.ops.mass[r])?;
        }
        if cr != 0.0 {
            for (a, b, v) in pji.gram_lower(&sj.ops.mass) {
                vals.add(a, b, cr * v)?;
            }
        }

        let mut rhs = pji.transpose_apply(&sj.ops.mass, sj.x);
        rhs.scale(cr);
        let mut q = pij.apply(sj.x)?;
        q.scale_rows(&si.ops.mass);
        rhs.axpy(cq, &q)?;

        if cfg.gamma > 0.0 {
            for (p, t) in problem.oriented_landmarks(dir) {
                let w = cfg.gamma * si.ops.mass[p];
                vals.add(p, p, w)?;
                for (r, x) in rhs.row_mut(p).iter_mut().zip(sj.x.row(t)) {
                    *r += w * x;
                }
            }
        }
        Ok((vals.into_values(), rhs))
    }

    /// One full iteration. Returns `true` when a stopping rule fired.
    pub fn iterate(&mut self, problem: &Problem<'_>, cfg: &SolverConfig) -> Result<bool> {
        self.iterate_observed(problem, cfg, &mut |_, _, _| {})
    }

    /// As [`iterate`](Self::iterate), calling `observer(state, dir, is_x_step)`
    /// after every sub-step.
    pub fn iterate_observed(
        &mut self,
        problem: &Problem<'_>,
        cfg: &SolverConfig,
        observer: &mut dyn FnMut(&SolverState, Direction, bool),
    ) -> Result<bool> {
        if self.trace.is_empty() {
            self.record(problem, cfg, 0);
        }
        let k = self.iteration + 1;
        let beta = cfg.beta(k);
        for dir in Direction::BOTH {
            self.p_step(problem, cfg, dir, beta)?;
            observer(self, dir, false);
            self.x_step(problem, cfg, dir, beta)?;
            observer(self, dir, true);
        }
        self.iteration = k;
        let prev_terms = self.trace.last().expect("recorded").terms;
        self.record(problem, cfg, k);
        let current = self.trace.last().unwrap().total;
        let previous = prev_terms.total(cfg.alpha, beta);
        let change = (previous - current).abs();
        let converged = match cfg.stop {
            StopRule::Relative => change <= cfg.tol * current.abs().max(f64::MIN_POSITIVE),
            StopRule::Absolute => change <= cfg.tol,
        };
        if converged {
            self.termination = Some(Termination::EnergyConverged);
            return Ok(true);
        }
        Ok(false)
    }

    fn record(&mut self, problem: &Problem<'_>, cfg: &SolverConfig, k: usize) {
        let terms = self.energy_terms(problem, cfg);
        let beta = cfg.beta(k.max(1));
        let geodesic = if cfg.geodesic_every > 0 && k.is_multiple_of(cfg.geodesic_every) {
            let raw = geodesic_dirichlet_energy(&self.p[0], problem.shapes[0].mesh, problem.shapes[0].ops, &problem.shapes[1].geo);
            let reference = *self.geodesic_reference.get_or_insert(raw);
            if reference != 0.0 {
                raw / reference
            } else {
                raw
            }
        } else {
            f64::NAN
        };
        let image_area = [
            image_area(&self.p[0], problem.shapes[0].mesh, problem.shapes[1].mesh),
            image_area(&self.p[1], problem.shapes[1].mesh, problem.shapes[0].mesh),
        ];
        self.trace.push(TraceRow {
            iteration: k,
            beta,
            total: terms.total(cfg.alpha, beta),
            terms,
            geodesic,
            image_area,
        });
    }
}

/// Runs the alternating minimization to convergence or the iteration cap.
pub fn run(problem: &Problem<'_>, cfg: &SolverConfig, init: Initialization) -> Result<SolverState> {
    run_observed(problem, cfg, init, &mut |_| {})
}

/// As [`run`], calling `observer` after every completed iteration.
pub fn run_observed(
    problem: &Problem<'_>,
    cfg: &SolverConfig,
    init: Initialization,
    observer: &mut dyn FnMut(&SolverState),
) -> Result<SolverState> {
    let mut state = SolverState::new(problem, cfg, init)?;
    let mut unchanged = 0;
    while state.iteration < cfg.max_iters {
        let before = state.p.clone();
        let stop = state.iterate(problem, cfg)?;
        observer(&state);
        if stop {
            break;
        }
        unchanged = if before == state.p { unchanged + 1 } else { 0 };
        if cfg.stationary_iters > 0 && unchanged >= cfg.stationary_iters {
            state.termination = Some(Termination::MapsStationary);
            break;
        }
    }
    if state.termination.is_none() {
        state.termination = Some(Termination::MaxIterations);
    }
    log::info!(
        "solver stopped after {} iterations: {}",
        state.iteration,
        state.termination.unwrap()
    );
    Ok(state)
}

/// `Σ_edges w_uv d²(φ(u), φ(v))` with `d` the geodesic distance on the target.
pub fn geodesic_dirichlet_energy(
    p: &PreciseMap,
    source: &TriangleMesh,
    ops: &MeshOperators,
    target_geo: &GeodesicSolver<'_>,
) -> f64 {
    let target = target_geo.mesh();
    let mut outgoing = vec![Vec::new(); source.n_vertices()];
    for (e, &[a, b]) in source.edges().iter().enumerate() {
        outgoing[a].push((b, ops.edge_weights[e]));
    }
    let per_vertex = par::map_indices(source.n_vertices(), |u| {
        if outgoing[u].is_empty() {
            return 0.0;
        }
        let pu = p.row(u);
        let needed: Vec<usize> = outgoing[u].iter().flat_map(|&(v, _)| target.face(p.row(v).face)).collect();
        let field = target_geo.from_point_until(pu, &needed);
        outgoing[u]
            .iter()
            .map(|&(v, w)| {
                let pv = p.row(v);
                let d = if pu == pv {
                    0.0
                } else {
                    target_geo
                        .same_face_distance(pu, pv)
                        .unwrap_or_else(|| interpolate_field(target, &field, pv))
                };
                w * d * d
            })
            .sum::<f64>()
    });
    per_vertex.iter().sum()
}

/// Total area of the image triangles `apply(P, V_target)` over source faces.
pub fn image_area(p: &PreciseMap, source: &TriangleMesh, target: &TriangleMesh) -> f64 {
    let img = p.image_points(target);
    source
        .faces()
        .iter()
        .map(|&[a, b, c]| {
            let r = |v: usize| [img[(v, 0)], img[(v, 1)], img[(v, 2)]];
            triangle_area(&r(a), &r(b), &r(c))
        })
        .sum()
}

/// Baseline minimizer of the Euclidean harmonic energy restricted to the
/// target surface: repeated weighted 1-ring averaging of vertex images in
/// R³ followed by closest-point projection onto the target. Vertices flagged
/// in `fixed` keep their initial image.
pub fn euclidean_harmonic_baseline(
    source: &TriangleMesh,
    ops: &MeshOperators,
    target: &TriangleMesh,
    init: &PreciseMap,
    fixed: &[bool],
    iters: usize,
) -> Result<PreciseMap> {
    let surface = EmbeddedSurface::new(RowMatrix::from_rows(target.vertices()), target.faces())?;
    let mut map = init.clone();
    let mut weight_of = vec![Vec::new(); source.n_vertices()];
    for (e, &[a, b]) in source.edges().iter().enumerate() {
        weight_of[a].push((b, ops.edge_weights[e]));
        weight_of[b].push((a, ops.edge_weights[e]));
    }
    for _ in 0..iters {
        let img = map.image_points(target);
        let rows = par::map_indices(source.n_vertices(), |u| {
            if fixed[u] {
                return *map.row(u);
            }
            let mut avg = [0.0; 3];
            let mut wsum = 0.0;
            for &(v, w) in &weight_of[u] {
                for k in 0..3 {
                    avg[k] += w * img[(v, k)];
                }
                wsum += w;
            }
            if wsum.abs() < 1e-300 {
                return *map.row(u);
            }
            let q: Vec<f64> = avg.iter().map(|a| a / wsum).collect();
            let hit = surface.project(&q);
            BarycentricPoint::new(hit.face, hit.weights)
        });
        let next = PreciseMap::new(target, rows)?;
        if next == map {
            break;
        }
        map = next;
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesic::GeodesicMethod;
    use crate::init::init_from_maps;
    use crate::shapes;

    fn sphere() -> (TriangleMesh, MeshOperators, RowMatrix) {
        let m = shapes::icosphere(2);
        let ops = MeshOperators::new(&m).unwrap();
        let x = RowMatrix::from_rows(m.vertices()).pad_columns(4);
        (m, ops, x)
    }

    #[test]
    fn identity_is_a_fixed_point() {
        let (m, ops, x) = sphere();
        let geo = GeodesicSolver::new(&m, GeodesicMethod::FastMarching);
        let shape = Shape { mesh: &m, ops: &ops, x: &x, geo };
        let problem = Problem::new(shape, shape, None).unwrap();
        let id = PreciseMap::identity(&m);
        let init = init_from_maps(id.clone(), id.clone(), &x, &x).unwrap();
        let cfg = SolverConfig::default();
        let t0 = SolverState::new(&problem, &cfg, init.clone()).unwrap().energy_terms(&problem, &cfg);
        assert_eq!(t0.er, [0.0, 0.0]);
        assert_eq!(t0.eq, [0.0, 0.0]);
        let state = run(&problem, &cfg, init).unwrap();
        assert!(state.iteration <= 2, "{} iterations", state.iteration);
        assert_eq!(state.p[0], id);
        assert_eq!(state.p[1], id);
    }

    #[test]
    fn zero_images_have_zero_dirichlet() {
        let (m, ops, x) = sphere();
        let geo = GeodesicSolver::new(&m, GeodesicMethod::FastMarching);
        let shape = Shape { mesh: &m, ops: &ops, x: &x, geo };
        let problem = Problem::new(shape, shape, None).unwrap();
        let id = PreciseMap::identity(&m);
        let mut init = init_from_maps(id.clone(), id, &x, &x).unwrap();
        init.x12 = RowMatrix::zeros(x.rows(), x.cols());
        let cfg = SolverConfig::default();
        let st = SolverState::new(&problem, &cfg, init).unwrap();
        assert_eq!(st.energy_terms(&problem, &cfg).ed[0], 0.0);
    }

    #[test]
    fn sub_steps_do_not_increase_energy() {
        let (m, ops, x) = sphere();
        let geo = GeodesicSolver::new(&m, GeodesicMethod::FastMarching);
        let shape = Shape { mesh: &m, ops: &ops, x: &x, geo };
        let problem = Problem::new(shape, shape, None).unwrap();
        let collapsed = PreciseMap::from_vertex_targets(&m, &(0..m.n_vertices()).map(|v| v / 4).collect::<Vec<_>>());
        let init = init_from_maps(collapsed.clone(), collapsed, &x, &x).unwrap();
        let cfg = SolverConfig::default();
        let mut st = SolverState::new(&problem, &cfg, init).unwrap();
        for k in 1..=5 {
            let beta = cfg.beta(k);
            for dir in Direction::BOTH {
                let e0 = st.energy(&problem, &cfg, beta);
                st.p_step(&problem, &cfg, dir, beta).unwrap();
                let e1 = st.energy(&problem, &cfg, beta);
                st.x_step(&problem, &cfg, dir, beta).unwrap();
                let e2 = st.energy(&problem, &cfg, beta);
                assert!(e1 <= e0 * (1.0 + 1e-10) && e2 <= e1 * (1.0 + 1e-10), "{e0} {e1} {e2}");
            }
            st.iteration = k;
        }
    }

    #[test]
    fn beta_schedule() {
        let cfg = SolverConfig::default();
        assert_eq!(cfg.beta(1), 5e-3);
        assert!((cfg.beta(100) - 0.5).abs() < 1e-15);
        assert!((cfg.beta(150) - 0.5).abs() < 1e-15);
        let bad = SolverConfig { alpha: 1.5, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
