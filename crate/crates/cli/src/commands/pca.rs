// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt::Write;
use std::path::PathBuf;

use modalprobe::pca::{analyze_layers, detect_inversion, PcaLayerResult, PcaSummary};
use modalprobe::{Matrix, RunReader};

use crate::error::CliError;
use crate::output::{write_atomic, write_json};
use crate::svg;

pub const JSON_FILE: &str = "pca.json";

#[derive(clap::Args)]
pub struct Args {
    /// Activation run directory.
    #[arg(long)]
    pub run: PathBuf,
    /// Comma-separated layer indices, or `all`.
    #[arg(long, default_value = "all")]
    pub layers: String,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `all` or a comma list into sorted, distinct indices below `n_layers`.
pub fn parse_layers(list: &str, n_layers: usize) -> Result<Vec<usize>, CliError> {
    if list.trim() == "all" {
        return Ok((0..n_layers).collect());
    }
    let mut layers = Vec::new();
    for part in list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let l: usize = part
            .parse()
            .map_err(|_| CliError::Validation(format!("--layers: {part:?} is not a layer index")))?;
        if l >= n_layers {
            return Err(CliError::Validation(format!(
                "--layers: layer {l} out of range (run has {n_layers} layers, 0..={})",
                n_layers - 1
            )));
        }
        layers.push(l);
    }
    if layers.is_empty() {
        return Err(CliError::Validation("--layers: no layers given".into()));
    }
    layers.sort_unstable();
    layers.dedup();
    Ok(layers)
}

fn points(m: &Matrix<f64>) -> Vec<[f64; 2]> {
    m.iter_rows().map(|r| [r[0], r[1]]).collect()
}

pub fn csv(result: &PcaLayerResult) -> String {
    let mut out = String::from("arm,pc1,pc2\n");
    for (arm, m) in [("certain", &result.proj_certain), ("uncertain", &result.proj_uncertain)] {
        for r in m.iter_rows() {
            let _ = writeln!(out, "{arm},{},{}", r[0], r[1]);
        }
    }
    out
}

pub fn chart(model_id: &str, result: &PcaLayerResult) -> String {
    svg::scatter_two_classes(
        &format!(
            "{model_id} layer {}: separability {:.3}",
            result.layer, result.separability
        ),
        &points(&result.proj_certain),
        &points(&result.proj_uncertain),
        [result.centroid_certain, result.centroid_uncertain],
    )
}

pub fn run(args: &Args) -> Result<(), CliError> {
    let reader = RunReader::open(&args.run)?;
    let layers = parse_layers(&args.layers, reader.manifest().n_layers)?;
    let run = reader.read_all()?;
    let mut results = analyze_layers(&run, &layers)?;
    let inversion = if results.len() >= 2 {
        Some(detect_inversion(&mut results)?)
    } else {
        None
    };
    let model_id = &run.manifest.model_id;
    for r in &results {
        write_atomic(&args.out.join(format!("pca_layer_{}.csv", r.layer)), csv(r).as_bytes())?;
        write_atomic(
            &args.out.join(format!("pca_layer_{}.svg", r.layer)),
            chart(model_id, r).as_bytes(),
        )?;
    }
    let summary = PcaSummary::new(&run, &results, inversion);
    write_json(&args.out.join(JSON_FILE), &summary)?;
    match &summary.inversion {
        Some(inv) if !inv.layers_with_flip.is_empty() => {
            eprintln!("{model_id}: inversion at layers {:?}", inv.layers_with_flip);
        }
        Some(_) => eprintln!("{model_id}: no inversion across {} layers", results.len()),
        None => eprintln!("{model_id}: one layer analyzed, inversion not assessed"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_lists() {
        assert_eq!(parse_layers("all", 3).unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_layers("2, 0,2", 3).unwrap(), vec![0, 2]);
        assert!(matches!(parse_layers("3", 3), Err(CliError::Validation(_))));
        assert!(parse_layers("x", 3).is_err());
        assert!(parse_layers("", 3).is_err());
    }
}
