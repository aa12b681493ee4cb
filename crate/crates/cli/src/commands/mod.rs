// SPDX-License-Identifier: MIT OR Apache-2.0

pub mod msu;
pub mod pairgen;
pub mod pca;
pub mod report;
pub mod toy_run;

use std::path::Path;

use modalprobe::ProbeConfig;

use crate::error::CliError;

pub fn load_config(path: Option<&Path>) -> Result<ProbeConfig, CliError> {
    match path {
        Some(p) => Ok(ProbeConfig::load(p)?),
        None => Ok(ProbeConfig::default()),
    }
}
