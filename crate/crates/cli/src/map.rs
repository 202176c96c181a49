use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use rhm_core::embedding::{EmbeddingOptions, MetricEmbedding};
use rhm_core::geodesic::{GeodesicMethod, GeodesicSolver};
use rhm_core::init::{self, FunctionalMap, LandmarkSet};
use rhm_core::solver::{self, Problem, Shape};
use rhm_core::{io, obj, MeshOperators, PreciseMap, RowMatrix, TriangleMesh};

use crate::manifest::{InitSource, MapConfig, Outputs, RunManifest, Timings};

pub struct MapRequest {
    pub source: PathBuf,
    pub target: PathBuf,
    pub init: InitSource,
    pub config: MapConfig,
    pub out_dir: PathBuf,
    pub trace: Option<PathBuf>,
}

pub fn load_mesh(path: &Path) -> Result<TriangleMesh> {
    obj::load_mesh(path).with_context(|| format!("loading mesh {}", path.display()))
}

fn absolute(p: &Path) -> Result<PathBuf> {
    Ok(std::path::absolute(p)?)
}

fn embed(mesh: &TriangleMesh, geo: &GeodesicSolver<'_>, cfg: &MapConfig) -> Result<RowMatrix> {
    let opts = EmbeddingOptions { dim: cfg.dim, seed: cfg.seed, ..EmbeddingOptions::default() };
    let e = match &cfg.cache_embedding {
        Some(dir) => MetricEmbedding::cached(dir, mesh, geo, &opts)?,
        None => MetricEmbedding::compute(mesh, geo, &opts)?,
    };
    log::info!(
        "embedding of {} vertices: median distance error {:.3}, p95 {:.3}",
        mesh.n_vertices(),
        e.stress.median,
        e.stress.p95
    );
    Ok(e.x)
}

fn truncate(m: &RowMatrix, rows: usize, cols: usize) -> RowMatrix {
    RowMatrix::from_fn(rows.min(m.rows()), cols.min(m.cols()), |i, j| m[(i, j)])
}

pub fn run(req: &MapRequest) -> Result<RunManifest> {
    let start = Instant::now();
    let solver_cfg = req.config.solver()?;
    solver_cfg.validate()?;
    let m1 = load_mesh(&req.source)?;
    let m2 = load_mesh(&req.target)?;
    let ops1 = MeshOperators::new(&m1)?;
    let ops2 = MeshOperators::new(&m2)?;
    let g1 = GeodesicSolver::new(&m1, GeodesicMethod::FastMarching);
    let g2 = GeodesicSolver::new(&m2, GeodesicMethod::FastMarching);

    let t = Instant::now();
    let x1 = embed(&m1, &g1, &req.config)?;
    let x2 = embed(&m2, &g2, &req.config)?;
    let embedding_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let mut landmarks = None;
    let initialization = match &req.init {
        InitSource::Landmarks(path) => {
            let l: LandmarkSet = io::read_landmarks(path, m1.n_vertices(), m2.n_vertices())
                .with_context(|| format!("reading landmarks {}", path.display()))?;
            let i = init::init_from_landmarks(&g1, &g2, &l, &x1, &x2)?;
            landmarks = Some(l);
            i
        }
        InitSource::Map(path) => {
            let p12 = PreciseMap::load(path, &m1, &m2).with_context(|| format!("reading map {}", path.display()))?;
            init::init_from_pointwise(p12, &m1, &m2, &x1, &x2)?
        }
        InitSource::Fmap(path) => {
            let full: FunctionalMap =
                io::read_functional_map(path).with_context(|| format!("reading functional map {}", path.display()))?;
            let k = req.config.basis_k;
            let fmap = FunctionalMap::new(truncate(&full.c12, k, k), truncate(&full.c21, k, k))?;
            let b1 = init::lb_basis(&ops1, fmap.k1())?;
            let b2 = init::lb_basis(&ops2, fmap.k2())?;
            init::init_from_functional_map(&fmap, &b1, &b2, &ops1, &ops2, &x1, &x2)?
        }
    };
    let init_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let s1 = Shape { mesh: &m1, ops: &ops1, x: &x1, geo: g1 };
    let s2 = Shape { mesh: &m2, ops: &ops2, x: &x2, geo: g2 };
    let problem = Problem::new(s1, s2, landmarks)?;
    let state = solver::run(&problem, &solver_cfg, initialization)?;
    let solve_s = t.elapsed().as_secs_f64();

    std::fs::create_dir_all(&req.out_dir).with_context(|| format!("creating {}", req.out_dir.display()))?;
    let outputs = Outputs {
        p12: absolute(&req.out_dir.join("p12.map"))?,
        p21: absolute(&req.out_dir.join("p21.map"))?,
        trace: absolute(&req.trace.clone().unwrap_or_else(|| req.out_dir.join("trace.csv")))?,
    };
    state.p12().save(&outputs.p12)?;
    state.p21().save(&outputs.p21)?;
    io::write_trace(&outputs.trace, &state.trace)?;

    let init = match &req.init {
        InitSource::Landmarks(p) => InitSource::Landmarks(absolute(p)?),
        InitSource::Map(p) => InitSource::Map(absolute(p)?),
        InitSource::Fmap(p) => InitSource::Fmap(absolute(p)?),
    };
    let mut config = req.config.clone();
    if let Some(dir) = &config.cache_embedding {
        config.cache_embedding = Some(absolute(dir)?);
    }
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        source: absolute(&req.source)?,
        target: absolute(&req.target)?,
        init,
        config,
        outputs,
        timings: Timings { embedding_s, init_s, solve_s, total_s: start.elapsed().as_secs_f64() },
        iterations: state.iteration,
        termination: state.termination.map(|t| t.to_string()).unwrap_or_default(),
    };
    manifest.save(&req.out_dir.join("manifest.json"))?;
    println!(
        "{} iterations ({}); maps written to {}",
        manifest.iterations,
        manifest.termination,
        req.out_dir.display()
    );
    Ok(manifest)
}

/// Re-runs a recorded `map` invocation, writing into `out_dir`.
pub fn replay(manifest: &RunManifest, out_dir: &Path) -> Result<RunManifest> {
    let trace = manifest.outputs.trace.file_name().map(|n| out_dir.join(n));
    run(&MapRequest {
        source: manifest.source.clone(),
        target: manifest.target.clone(),
        init: manifest.init.clone(),
        config: manifest.config.clone(),
        out_dir: out_dir.to_path_buf(),
        trace,
    })
}
