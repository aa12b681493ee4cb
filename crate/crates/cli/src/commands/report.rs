// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt::Write;
use std::path::{Path, PathBuf};

use modalprobe::pca::{InversionReport, PcaSummary};
use modalprobe::MsuProfile;
use serde::{Deserialize, Serialize};

use super::{msu, pca};
use crate::error::CliError;
use crate::output::{read_file, sha256_hex, write_atomic, write_json};
use crate::svg::escape;

pub const RAW_MSU_CAVEAT: &str = "Raw MSU is an unnormalized Euclidean distance. Its scale \
grows with d_model and with the typical activation norm of each model, so raw averages of \
models with different widths are not directly comparable. The normalized column divides each \
layer's MSU by that layer's mean activation norm.";

#[derive(clap::Args)]
pub struct Args {
    /// Directories holding msu.json and pca.json, one per analyzed run.
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// HTML file to write; a `.json` bundle is written next to it.
    #[arg(long)]
    pub out: PathBuf,
    /// Config file to fingerprint in the provenance record.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub inputs: Vec<InputHash>,
    pub config_sha256: Option<String>,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSeparability {
    pub layer: usize,
    pub separability: f64,
    pub explained_variance: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaOverview {
    pub layers: Vec<LayerSeparability>,
    pub inversion: Option<InversionReport>,
    pub inversion_rule: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub msu_profile: MsuProfile,
    pub pca_summary: PcaOverview,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub runs: Vec<ReportBundle>,
    pub raw_msu_caveat: String,
}

struct Loaded {
    dir: PathBuf,
    bundle: ReportBundle,
    pca: PcaSummary,
}

fn read_input(dir: &Path, name: &str) -> Result<(Vec<u8>, InputHash), CliError> {
    let path = dir.join(name);
    if !path.is_file() {
        return Err(CliError::Validation(format!("{}: missing input", path.display())));
    }
    let bytes = read_file(&path)?;
    let hash = InputHash {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    };
    Ok((bytes, hash))
}

fn parse<T: serde::de::DeserializeOwned>(bytes: &[u8], path: &str) -> Result<T, CliError> {
    serde_json::from_slice(bytes).map_err(|e| CliError::Validation(format!("{path}: {e}")))
}

fn load(dir: &Path, config_sha256: Option<&str>) -> Result<Loaded, CliError> {
    let (msu_bytes, msu_hash) = read_input(dir, msu::JSON_FILE)?;
    let (pca_bytes, pca_hash) = read_input(dir, pca::JSON_FILE)?;
    let profile: MsuProfile = parse(&msu_bytes, &msu_hash.path)?;
    let summary: PcaSummary = parse(&pca_bytes, &pca_hash.path)?;
    if profile.model_id != summary.model_id {
        return Err(CliError::Validation(format!(
            "{}: msu.json is for {:?} but pca.json is for {:?}",
            dir.display(),
            profile.model_id,
            summary.model_id
        )));
    }
    let overview = PcaOverview {
        layers: summary
            .layers
            .iter()
            .map(|l| LayerSeparability {
                layer: l.layer,
                separability: l.separability,
                explained_variance: l.explained_variance,
            })
            .collect(),
        inversion: summary.inversion.clone(),
        inversion_rule: summary.inversion_rule.clone(),
    };
    Ok(Loaded {
        dir: dir.to_path_buf(),
        bundle: ReportBundle {
            msu_profile: profile,
            pca_summary: overview,
            provenance: Provenance {
                inputs: vec![msu_hash, pca_hash],
                config_sha256: config_sha256.map(str::to_string),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
            },
        },
        pca: summary,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn inversion_text(inv: Option<&InversionReport>) -> String {
    match inv {
        None => "not assessed".into(),
        Some(r) if r.layers_with_flip.is_empty() => "none".into(),
        Some(r) => r
            .layers_with_flip
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(", "),
    }
}

const STYLE: &str = "body{font-family:sans-serif;margin:24px;color:#222;max-width:1100px}\
table{border-collapse:collapse;margin:12px 0}\
th,td{border:1px solid #ccc;padding:4px 10px;text-align:right}\
th:first-child,td:first-child{text-align:left}\
.caveat{background:#fff6e0;border-left:4px solid #e0a000;padding:8px 12px}\
.mono{font-family:monospace;font-size:12px}\
figure{display:inline-block;margin:8px}";

fn render_html(loaded: &[Loaded]) -> String {
    let mut h = String::new();
    h.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\"/>\n");
    h.push_str("<title>modalprobe report</title>\n");
    let _ = writeln!(h, "<style>{STYLE}</style>\n</head>\n<body>");
    h.push_str("<h1>MSU and PCA report</h1>\n");

    h.push_str("<h2>Average MSU by model</h2>\n<table>\n<tr><th>Model</th><th>Average MSU</th>\
<th>Average normalized MSU</th><th>Layers</th><th>d_model</th><th>Pairs</th>\
<th>Spearman rho</th><th>Inversion layers</th></tr>\n");
    for l in loaded {
        let p = &l.bundle.msu_profile;
        let _ = writeln!(
            h,
            "<tr><td>{}</td><td>{:.2}</td><td>{:.4}</td><td>{}</td><td>{}</td><td>{}</td><td>{:.3}{}</td><td>{}</td></tr>",
            escape(&p.model_id),
            p.average_msu,
            mean(p.per_layer.iter().map(|x| x.msu_normalized)),
            p.per_layer.len(),
            p.d_model,
            p.n_pairs,
            p.trend.spearman_rho,
            if p.trend.degenerate { " (degenerate)" } else { "" },
            inversion_text(l.bundle.pca_summary.inversion.as_ref())
        );
    }
    h.push_str("</table>\n");
    let _ = writeln!(h, "<p class=\"caveat\">{}</p>", escape(RAW_MSU_CAVEAT));

    for l in loaded {
        let p = &l.bundle.msu_profile;
        let _ = writeln!(h, "<h2>{}</h2>", escape(&p.model_id));
        let _ = writeln!(h, "<h3>Layerwise MSU</h3>\n{}", msu::chart(p));
        h.push_str("<table>\n<tr><th>Layer</th><th>MSU</th><th>95% CI low</th><th>95% CI high</th><th>Normalized</th></tr>\n");
        for x in &p.per_layer {
            let _ = writeln!(
                h,
                "<tr><td>{}</td><td>{:.4}</td><td>{:.4}</td><td>{:.4}</td><td>{:.5}</td></tr>",
                x.layer, x.msu, x.ci_low, x.ci_high, x.msu_normalized
            );
        }
        let _ = writeln!(
            h,
            "</table>\n<p>Bootstrap: {} resamples, seed {}.</p>",
            p.bootstrap.n_resamples, p.bootstrap.seed
        );

        h.push_str("<h3>PCA and inversion</h3>\n<table>\n<tr><th>Layer</th><th>Separability</th>\
<th>PC1 variance</th><th>PC2 variance</th><th>Flipped vs previous</th></tr>\n");
        for x in &l.pca.layers {
            let _ = writeln!(
                h,
                "<tr><td>{}</td><td>{:.3}</td><td>{:.4}</td><td>{:.4}</td><td>{}</td></tr>",
                x.layer,
                x.separability,
                x.explained_variance[0],
                x.explained_variance[1],
                match x.flipped_vs_previous {
                    [false, false] => "-",
                    [true, false] => "PC1",
                    [false, true] => "PC2",
                    [true, true] => "PC1, PC2",
                }
            );
        }
        h.push_str("</table>\n");
        let _ = writeln!(
            h,
            "<p>Geometric inversion at layers: <b>{}</b>.</p>\n<p>Inversion rule: {}.</p>",
            inversion_text(l.pca.inversion.as_ref()),
            escape(&l.pca.inversion_rule)
        );
        for x in &l.pca.layers {
            let path = l.dir.join(format!("pca_layer_{}.svg", x.layer));
            if let Ok(svg) = std::fs::read_to_string(&path) {
                let _ = writeln!(h, "<figure>{}</figure>", svg.trim_end());
            }
        }

        h.push_str("<h3>Provenance</h3>\n<table class=\"mono\">\n<tr><th>Input</th><th>SHA-256</th></tr>\n");
        for input in &l.bundle.provenance.inputs {
            let _ = writeln!(h, "<tr><td>{}</td><td>{}</td></tr>", escape(&input.path), input.sha256);
        }
        if let Some(c) = &l.bundle.provenance.config_sha256 {
            let _ = writeln!(h, "<tr><td>config</td><td>{c}</td></tr>");
        }
        let _ = writeln!(
            h,
            "<tr><td>tool version</td><td>{}</td></tr>\n</table>",
            l.bundle.provenance.tool_version
        );
    }
    h.push_str("</body>\n</html>\n");
    h
}

pub fn run(args: &Args) -> Result<(), CliError> {
    let config_sha256 = match &args.config {
        Some(p) => Some(sha256_hex(&read_file(p)?)),
        None => None,
    };
    let loaded = args
        .input
        .iter()
        .map(|dir| load(dir, config_sha256.as_deref()))
        .collect::<Result<Vec<_>, _>>()?;
    write_atomic(&args.out, render_html(&loaded).as_bytes())?;
    let report = Report {
        runs: loaded.into_iter().map(|l| l.bundle).collect(),
        raw_msu_caveat: RAW_MSU_CAVEAT.to_string(),
    };
    write_json(&args.out.with_extension("json"), &report)?;
    eprintln!("{} run(s) -> {}", report.runs.len(), args.out.display());
    Ok(())
}
