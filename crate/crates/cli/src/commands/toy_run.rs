// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use modalprobe::{write_run, SentencePair, ToyModel};

use super::load_config;
use crate::error::CliError;

#[derive(clap::Args)]
pub struct Args {
    /// Pairs JSONL produced by `pairgen`.
    #[arg(long)]
    pub pairs: PathBuf,
    /// Run directory to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub d_model: Option<usize>,
    #[arg(long)]
    pub heads: Option<usize>,
}

pub fn read_pairs(path: &Path) -> Result<Vec<SentencePair>, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, &e))?;
    let mut pairs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, &e))?;
        if line.trim().is_empty() {
            continue;
        }
        let pair = serde_json::from_str(&line).map_err(|e| {
            CliError::Validation(format!("{}: line {}: {e}", path.display(), i + 1))
        })?;
        pairs.push(pair);
    }
    if pairs.is_empty() {
        return Err(CliError::Validation(format!("{}: no pairs", path.display())));
    }
    Ok(pairs)
}

pub fn run(args: &Args) -> Result<(), CliError> {
    let mut toy = load_config(args.config.as_deref())?.toy;
    if let Some(v) = args.seed {
        toy.seed = v;
    }
    if let Some(v) = args.layers {
        toy.n_layers = v;
    }
    if let Some(v) = args.d_model {
        toy.d_model = v;
    }
    if let Some(v) = args.heads {
        toy.n_heads = v;
    }
    let pairs = read_pairs(&args.pairs)?;
    let model = ToyModel::build(toy)?;
    let run = model.run_pairs(&pairs)?;
    write_run(&run, &args.out)?;
    eprintln!(
        "{}: {} pairs x {} layers -> {}",
        run.manifest.model_id,
        run.n_pairs(),
        run.n_layers(),
        args.out.display()
    );
    Ok(())
}
