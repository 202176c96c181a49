use std::path::PathBuf;

use anyhow::{Context, Result};
use rhm_core::{obj, transfer, PreciseMap};

use crate::map::load_mesh;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Texture,
    Connectivity,
}

pub struct TransferRequest {
    pub source: PathBuf,
    pub target: PathBuf,
    pub map: PathBuf,
    pub mode: Mode,
    pub output: PathBuf,
}

pub fn run(req: &TransferRequest) -> Result<()> {
    let m1 = load_mesh(&req.source)?;
    let m2 = load_mesh(&req.target)?;
    let p12 = PreciseMap::load(&req.map, &m1, &m2).with_context(|| format!("reading map {}", req.map.display()))?;
    let mesh = match req.mode {
        Mode::Texture => transfer::transfer_texture(&p12, &m1, &m2)?,
        Mode::Connectivity => {
            let r = transfer::transfer_connectivity(&p12, &m1, &m2)?;
            if r.degenerate.is_empty() {
                println!("{} repair passes", r.passes);
            } else {
                let ids: Vec<String> = r.degenerate.iter().map(|f| (f + 1).to_string()).collect();
                eprintln!(
                    "warning: {} faces still degenerate after {} passes: {}",
                    r.degenerate.len(),
                    r.passes,
                    ids.join(" ")
                );
            }
            r.mesh
        }
    };
    obj::save_mesh(&req.output, &mesh).with_context(|| format!("writing {}", req.output.display()))?;
    Ok(())
}
