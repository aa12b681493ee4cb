// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt::Write;
use std::path::PathBuf;

use modalprobe::{msu_profile, read_run, BootstrapSettings, MsuProfile};

use super::load_config;
use crate::error::CliError;
use crate::output::{write_atomic, write_json};
use crate::svg;

pub const JSON_FILE: &str = "msu.json";
pub const CSV_FILE: &str = "msu.csv";
pub const SVG_FILE: &str = "msu.svg";

#[derive(clap::Args)]
pub struct Args {
    /// Activation run directory.
    #[arg(long)]
    pub run: PathBuf,
    /// Output directory for msu.json, msu.csv and msu.svg.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Bootstrap seed; required here or as `[msu] seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub resamples: Option<usize>,
}

pub fn settings(args: &Args) -> Result<BootstrapSettings, CliError> {
    let from_config = load_config(args.config.as_deref())?.msu;
    let mut settings = match (args.seed, from_config) {
        (Some(seed), Some(cfg)) => BootstrapSettings { seed, ..cfg },
        (Some(seed), None) => BootstrapSettings::with_seed(seed),
        (None, Some(cfg)) => cfg,
        (None, None) => {
            return Err(CliError::Validation(
                "a bootstrap seed is required: pass --seed or set [msu] seed in the config".into(),
            ))
        }
    };
    if let Some(n) = args.resamples {
        settings.n_resamples = n;
    }
    Ok(settings)
}

pub fn csv(profile: &MsuProfile) -> String {
    let mut out = String::from("layer,msu,ci_low,ci_high\n");
    for l in &profile.per_layer {
        let _ = writeln!(out, "{},{},{},{}", l.layer, l.msu, l.ci_low, l.ci_high);
    }
    out
}

pub fn chart(profile: &MsuProfile) -> String {
    let pick = |f: fn(&modalprobe::msu::LayerMsu) -> f64| profile.per_layer.iter().map(f).collect::<Vec<_>>();
    svg::line_with_band(
        &format!("Layerwise MSU: {}", profile.model_id),
        "MSU",
        &pick(|l| l.msu),
        &pick(|l| l.ci_low),
        &pick(|l| l.ci_high),
    )
}

pub fn run(args: &Args) -> Result<(), CliError> {
    let settings = settings(args)?;
    let run = read_run(&args.run)?;
    let profile = msu_profile(&run, &settings)?;
    write_json(&args.out.join(JSON_FILE), &profile)?;
    write_atomic(&args.out.join(CSV_FILE), csv(&profile).as_bytes())?;
    write_atomic(&args.out.join(SVG_FILE), chart(&profile).as_bytes())?;
    eprintln!(
        "{}: average MSU {:.6}, Spearman rho {:.4}{}",
        profile.model_id,
        profile.average_msu,
        profile.trend.spearman_rho,
        if profile.trend.degenerate { " (degenerate)" } else { "" }
    );
    Ok(())
}
