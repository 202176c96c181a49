use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rhm_core::geodesic::{GeodesicMethod, GeodesicSolver};
use rhm_core::metrics::{self, MetricReport, Weighting};
use rhm_core::{io, PreciseMap};

use crate::map::load_mesh;

pub struct EvalRequest {
    pub source: PathBuf,
    pub target: PathBuf,
    pub map: PathBuf,
    pub gt: Option<PathBuf>,
    pub gt_vertices: Option<PathBuf>,
    pub symmetry: Option<(PathBuf, PathBuf)>,
    pub segmentation: Option<(PathBuf, PathBuf)>,
    pub area_weighted: bool,
    pub out_dir: PathBuf,
}

fn summary(name: &str, r: &MetricReport) {
    let mut v: Vec<f64> = r.included().collect();
    v.sort_by(f64::total_cmp);
    let median = v.get(v.len() / 2).copied().unwrap_or(f64::NAN);
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    println!("{name}: median {median:.6e}, mean {mean:.6e}, excluded {}", r.excluded);
}

fn write(dir: &Path, name: &str, r: &MetricReport) -> Result<()> {
    io::write_curve(dir.join(name), &r.curve).with_context(|| format!("writing {name}"))?;
    Ok(())
}

pub fn run(req: &EvalRequest) -> Result<()> {
    let m1 = load_mesh(&req.source)?;
    let m2 = load_mesh(&req.target)?;
    let p12 = PreciseMap::load(&req.map, &m1, &m2).with_context(|| format!("reading map {}", req.map.display()))?;
    let geo2 = GeodesicSolver::new(&m2, GeodesicMethod::FastMarching);
    let weighting = if req.area_weighted { Weighting::Area } else { Weighting::Count };
    std::fs::create_dir_all(&req.out_dir).with_context(|| format!("creating {}", req.out_dir.display()))?;

    let conf = metrics::conformal_distortion(&p12, &m1, &m2, weighting)?;
    summary("conformal distortion", &conf);
    write(&req.out_dir, "conformal.csv", &conf)?;

    let gt = match (&req.gt, &req.gt_vertices) {
        (Some(path), _) => {
            let g = PreciseMap::load(path, &m1, &m2).with_context(|| format!("reading ground truth {}", path.display()))?;
            Some(g.rows().iter().map(|r| Some(*r)).collect::<Vec<_>>())
        }
        (None, Some(path)) => {
            let v = io::read_vertex_map(path, m1.n_vertices(), m2.n_vertices())
                .with_context(|| format!("reading ground truth {}", path.display()))?;
            Some(metrics::vertex_ground_truth(&m2, &v))
        }
        (None, None) => None,
    };
    if let Some(gt) = gt {
        let r = metrics::ground_truth_error(&p12, &gt, &m1, &geo2, weighting)?;
        summary("ground-truth error", &r);
        write(&req.out_dir, "gt_error.csv", &r)?;
    }

    if let Some((s1, s2)) = &req.symmetry {
        let s1 = PreciseMap::load(s1, &m1, &m1).with_context(|| format!("reading symmetry {}", s1.display()))?;
        let s2 = PreciseMap::load(s2, &m2, &m2).with_context(|| format!("reading symmetry {}", s2.display()))?;
        let r = metrics::symmetry_compatibility(&p12, &s1, &s2, &m1, &geo2, weighting)?;
        summary("symmetry compatibility", &r);
        write(&req.out_dir, "symmetry.csv", &r)?;
    }

    if let Some((l1, l2)) = &req.segmentation {
        let seg1 = io::read_labels(l1, m1.n_vertices()).with_context(|| format!("reading labels {}", l1.display()))?;
        let text = std::fs::read_to_string(l2).with_context(|| format!("reading labels {}", l2.display()))?;
        let count = text.lines().filter(|l| !l.trim().is_empty() && !l.trim().starts_with('#')).count();
        let seg2 = if count == m2.n_faces() {
            io::parse_labels(&text, l2, m2.n_faces())?
        } else {
            metrics::face_labels_from_vertices(&m2, &io::parse_labels(&text, l2, m2.n_vertices())?)?
        };
        let r = metrics::segmentation_compatibility(&p12, &m1, &m2, &seg1, &seg2)?;
        println!("segmentation compatibility: {:.6} (excluded {})", r.score, r.excluded_vertices);
        std::fs::write(
            req.out_dir.join("segmentation.txt"),
            format!("score {}\nexcluded_vertices {}\n", r.score, r.excluded_vertices),
        )?;
    }
    Ok(())
}
