// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use modalprobe::pairgen::{generate_corpus, read_claims_jsonl, write_pairs_jsonl};

use super::load_config;
use crate::error::CliError;
use crate::output::{write_atomic, write_json};

#[derive(clap::Args)]
pub struct Args {
    /// JSONL file with one `{"claim": "..."}` object per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Pairs JSONL to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Statistics JSON; defaults to the pairs path with a `.stats.json` suffix.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the generation seed from the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn run(args: &Args) -> Result<(), CliError> {
    let config = load_config(args.config.as_deref())?;
    let mut generation = config.pairgen.generation.clone();
    if let Some(seed) = args.seed {
        generation.seed = seed;
    }
    let file = File::open(&args.input).map_err(|e| CliError::io(&args.input, &e))?;
    let claims = read_claims_jsonl(BufReader::new(file));
    let (pairs, stats) = generate_corpus(
        claims,
        &config.pairgen.lexicon,
        &config.pairgen.template,
        &generation,
    )
    .map_err(|e| match CliError::from(e) {
        CliError::Validation(m) => CliError::Validation(format!("{}: {m}", args.input.display())),
        CliError::Io(m) => CliError::Io(format!("{}: {m}", args.input.display())),
    })?;

    let mut buf = Vec::new();
    write_pairs_jsonl(&mut buf, &pairs)?;
    write_atomic(&args.out, &buf)?;
    let stats_path = args.stats.clone().unwrap_or_else(|| {
        let mut name = args.out.clone().into_os_string();
        name.push(".stats.json");
        PathBuf::from(name)
    });
    write_json(&stats_path, &stats)?;
    eprintln!(
        "{} sentences, {} matched, {} pairs -> {}",
        stats.input_sentences,
        stats.matched_sentences,
        stats.emitted_pairs,
        args.out.display()
    );
    if stats.letter_modality_confounded {
        eprintln!("note: every pair puts the certain option under the same letter");
    }
    Ok(())
}
