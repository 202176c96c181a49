//! `rhm`: compute, evaluate and apply reversible harmonic maps.

mod eval;
mod manifest;
mod map;
mod transfer;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use manifest::{InitSource, MapConfig, RunManifest};

#[derive(Parser)]
#[command(name = "rhm", version, about = "Reversible harmonic maps between triangle meshes")]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// Worker threads for the parallel kernels.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute P12 and P21 between two meshes.
    Map(MapArgs),
    /// Score a map with the quality metrics.
    Eval(EvalArgs),
    /// Carry texture coordinates or connectivity through a map.
    Transfer(TransferArgs),
    /// Repeat a recorded `map` run from its manifest.
    Replay {
        manifest: PathBuf,
        /// Output directory (defaults to the manifest's).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
#[group(id = "init", required = true, multiple = false)]
struct InitArgs {
    /// Landmark pairs, one `p q` per line (1-based).
    #[arg(long, group = "init")]
    landmarks: Option<PathBuf>,
    /// Initial P12 map file; P21 starts as its nearest-vertex inverse.
    #[arg(long, group = "init")]
    init_map: Option<PathBuf>,
    /// Functional map file with C12 and C21 blocks.
    #[arg(long, group = "init")]
    fmap: Option<PathBuf>,
}

#[derive(Args)]
struct MapArgs {
    source: PathBuf,
    target: PathBuf,
    #[command(flatten)]
    init: InitArgs,
    #[arg(long, default_value_t = 5e-4)]
    alpha: f64,
    #[arg(long, default_value_t = 5e-3)]
    beta_slope: f64,
    #[arg(long, default_value_t = 100)]
    beta_cap_iter: usize,
    /// Weight of the landmark terms.
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Maximum number of iterations.
    #[arg(long, default_value_t = 200)]
    iters: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// `relative` or `absolute` energy change.
    #[arg(long, default_value = "relative")]
    stop_rule: String,
    /// Stop after this many iterations without map changes (0 disables).
    #[arg(long, default_value_t = 2)]
    stationary_iters: usize,
    /// Embedding dimension.
    #[arg(long, default_value_t = 8)]
    dim: usize,
    /// Basis size for functional-map initialization.
    #[arg(long, default_value_t = 60)]
    basis_k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trace CSV path (defaults to `trace.csv` in the output directory).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Directory for embedding sidecar files.
    #[arg(long)]
    cache_embedding: Option<PathBuf>,
    #[arg(long, short, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    source: PathBuf,
    target: PathBuf,
    /// P12 map file.
    map: PathBuf,
    /// Ground truth as a map file.
    #[arg(long, conflicts_with = "gt_vertices")]
    gt: Option<PathBuf>,
    /// Ground truth as one target vertex per line (1-based, 0 = missing).
    #[arg(long)]
    gt_vertices: Option<PathBuf>,
    /// Symmetry maps S1 (source) and S2 (target).
    #[arg(long, num_args = 2, value_names = ["S1", "S2"])]
    symmetry: Option<Vec<PathBuf>>,
    /// Per-vertex source labels and per-face (or per-vertex) target labels.
    #[arg(long, num_args = 2, value_names = ["SOURCE_LABELS", "TARGET_LABELS"])]
    segmentation: Option<Vec<PathBuf>>,
    /// Weight curves by area instead of count.
    #[arg(long)]
    area_weighted: bool,
    #[arg(long, short, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct TransferArgs {
    source: PathBuf,
    target: PathBuf,
    /// P12 map file.
    map: PathBuf,
    /// Pull the target's texture coordinates onto the source.
    #[arg(long, conflicts_with = "connectivity", required_unless_present = "connectivity")]
    texture: bool,
    /// Resample the target with the source connectivity.
    #[arg(long)]
    connectivity: bool,
    #[arg(long, short)]
    output: PathBuf,
}

fn pair(v: Option<Vec<PathBuf>>) -> Option<(PathBuf, PathBuf)> {
    v.map(|mut v| {
        let b = v.pop().expect("two values");
        (v.pop().expect("two values"), b)
    })
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Map(a) => {
            let init = match (a.init.landmarks, a.init.init_map, a.init.fmap) {
                (Some(p), _, _) => InitSource::Landmarks(p),
                (_, Some(p), _) => InitSource::Map(p),
                (_, _, Some(p)) => InitSource::Fmap(p),
                _ => unreachable!("clap enforces one initialization"),
            };
            let config = MapConfig {
                alpha: a.alpha,
                beta_slope: a.beta_slope,
                beta_cap_iter: a.beta_cap_iter,
                gamma: a.gamma,
                iters: a.iters,
                tol: a.tol,
                stop_rule: a.stop_rule,
                stationary_iters: a.stationary_iters,
                dim: a.dim,
                basis_k: a.basis_k,
                seed: a.seed,
                threads: cli.threads,
                cache_embedding: a.cache_embedding,
            };
            map::run(&map::MapRequest {
                source: a.source,
                target: a.target,
                init,
                config,
                out_dir: a.out_dir,
                trace: a.trace,
            })?;
        }
        Command::Eval(a) => eval::run(&eval::EvalRequest {
            source: a.source,
            target: a.target,
            map: a.map,
            gt: a.gt,
            gt_vertices: a.gt_vertices,
            symmetry: pair(a.symmetry),
            segmentation: pair(a.segmentation),
            area_weighted: a.area_weighted,
            out_dir: a.out_dir,
        })?,
        Command::Transfer(a) => transfer::run(&transfer::TransferRequest {
            source: a.source,
            target: a.target,
            map: a.map,
            mode: if a.texture { transfer::Mode::Texture } else { transfer::Mode::Connectivity },
            output: a.output,
        })?,
        Command::Replay { manifest, out_dir } => {
            let m = RunManifest::load(&manifest)?;
            let dir = match out_dir {
                Some(d) => d,
                None => m.outputs.p12.parent().map(PathBuf::from).unwrap_or_default(),
            };
            map::replay(&m, &dir)?;
        }
    }
    Ok(())
}

fn init_threads(threads: Option<usize>) -> Result<()> {
    let Some(n) = threads else { return Ok(()) };
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    #[cfg(not(feature = "parallel"))]
    log::warn!("built without the parallel feature; --threads {n} ignored");
    Ok(())
}

/// 2 for bad inputs, 3 for numerical failures.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<rhm_core::Error>()) {
        Some(e) if !e.is_input_error() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    let result = init_threads(cli.threads).and_then(|()| execute(cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::Context;

    #[test]
    fn exit_codes() {
        let numerical: Result<()> = Err(rhm_core::Error::Numerical("not positive definite".into())).context("solving");
        assert_eq!(exit_code(&numerical.unwrap_err()), 3);
        let input: Result<()> = Err(rhm_core::Error::InvalidInput("bad".into())).context("reading");
        assert_eq!(exit_code(&input.unwrap_err()), 2);
        assert_eq!(exit_code(&anyhow::anyhow!("other")), 2);
    }
}
