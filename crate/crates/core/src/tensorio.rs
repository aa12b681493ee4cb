// SPDX-License-Identifier: MIT OR Apache-2.0

//! On-disk activation runs.
//!
//! Layout of a run directory:
//!
//! ```text
//! manifest.json                 RunManifest, UTF-8 JSON
//! layers/L{idx}_certain.bin     N × d_model binary32 little-endian, row-major
//! layers/L{idx}_uncertain.bin   same, uncertain arm
//! ```
//!
//! Layer files carry no header: their byte length is exactly
//! `n_pairs * d_model * 4`. Row `i` of every file belongs to `pair_ids[i]`.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;

pub const FORMAT_VERSION: u32 = 1;
pub const HOOK_POINT: &str = "resid_post";
pub const TOKEN_POSITION: &str = "final";
pub const DTYPE: &str = "f32le";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const LAYERS_DIR: &str = "layers";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Certain,
    Uncertain,
}

impl Arm {
    pub const BOTH: [Arm; 2] = [Arm::Certain, Arm::Uncertain];

    pub fn as_str(self) -> &'static str {
        match self {
            Arm::Certain => "certain",
            Arm::Uncertain => "uncertain",
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum TensorIoError {
    #[error("run has no pairs")]
    EmptyRun,
    #[error("{}: non-finite value at layer {layer}, {arm} arm, row {row}, column {col}", display_path(.file))]
    NonFinite {
        file: Option<PathBuf>,
        layer: usize,
        arm: Arm,
        row: usize,
        col: usize,
    },
    #[error("{}: manifest inconsistency: {message}", display_path(.file))]
    ManifestInconsistency { file: Option<PathBuf>, message: String },
    #[error("{}: unreadable manifest: {message}", .file.display())]
    ManifestParse { file: PathBuf, message: String },
    #[error("{}: unknown format_version {found} (supported: {FORMAT_VERSION})", .file.display())]
    UnknownFormatVersion { file: PathBuf, found: u64 },
    #[error("{}: missing file", .file.display())]
    MissingFile { file: PathBuf },
    #[error("{}: expected {expected} bytes, found {actual}", .file.display())]
    SizeMismatch {
        file: PathBuf,
        expected: u64,
        actual: u64,
    },
    #[error("{}: {source}", .file.display())]
    Io {
        file: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn display_path(p: &Option<PathBuf>) -> String {
    p.as_ref()
        .map_or_else(|| "<in-memory run>".to_string(), |p| p.display().to_string())
}

impl TensorIoError {
    /// Stable identifier for each failure class.
    pub fn code(&self) -> &'static str {
        match self {
            Self::EmptyRun => "empty-run",
            Self::NonFinite { .. } => "non-finite",
            Self::ManifestInconsistency { .. } => "manifest-inconsistency",
            Self::ManifestParse { .. } => "manifest-parse",
            Self::UnknownFormatVersion { .. } => "unknown-format-version",
            Self::MissingFile { .. } => "missing-file",
            Self::SizeMismatch { .. } => "size-mismatch",
            Self::Io { .. } => "io",
        }
    }

    /// False only for environment failures (permissions, disk).
    pub fn is_validation(&self) -> bool {
        !matches!(self, Self::Io { .. })
    }

    fn io(file: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let file = file.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Self::MissingFile { file }
        } else {
            Self::Io { file, source }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub format_version: u32,
    pub model_id: String,
    pub n_layers: usize,
    pub d_model: usize,
    pub n_pairs: usize,
    pub hook_point: String,
    pub token_position: String,
    pub dtype: String,
    pub pair_ids: Vec<String>,
}

impl RunManifest {
    pub fn new(model_id: impl Into<String>, n_layers: usize, d_model: usize, pair_ids: Vec<String>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            model_id: model_id.into(),
            n_layers,
            d_model,
            n_pairs: pair_ids.len(),
            hook_point: HOOK_POINT.into(),
            token_position: TOKEN_POSITION.into(),
            dtype: DTYPE.into(),
            pair_ids,
        }
    }

    fn validate(&self, file: Option<&Path>) -> Result<(), TensorIoError> {
        let bad = |message: String| TensorIoError::ManifestInconsistency {
            file: file.map(Path::to_path_buf),
            message,
        };
        if self.n_pairs == 0 || self.pair_ids.is_empty() {
            return Err(TensorIoError::EmptyRun);
        }
        if self.n_layers == 0 || self.d_model == 0 {
            return Err(bad(format!(
                "n_layers={} and d_model={} must be positive",
                self.n_layers, self.d_model
            )));
        }
        if self.pair_ids.len() != self.n_pairs {
            return Err(bad(format!(
                "n_pairs={} but pair_ids has {} entries",
                self.n_pairs,
                self.pair_ids.len()
            )));
        }
        let mut seen = HashSet::with_capacity(self.pair_ids.len());
        if let Some(dup) = self.pair_ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(bad(format!("duplicate pair id {dup:?}")));
        }
        for (field, value, want) in [
            ("hook_point", &self.hook_point, HOOK_POINT),
            ("token_position", &self.token_position, TOKEN_POSITION),
            ("dtype", &self.dtype, DTYPE),
        ] {
            if value != want {
                return Err(bad(format!("{field} is {value:?}, expected {want:?}")));
            }
        }
        Ok(())
    }

    pub fn layer_bytes(&self) -> u64 {
        (self.n_pairs * self.d_model * 4) as u64
    }
}

pub fn layer_file_name(layer: usize, arm: Arm) -> String {
    format!("L{layer}_{arm}.bin")
}

/// Final-token residual vectors of both arms for every layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationRun {
    pub manifest: RunManifest,
    pub certain: Vec<Matrix<f32>>,
    pub uncertain: Vec<Matrix<f32>>,
}

impl ActivationRun {
    /// Builds the manifest from the matrices and validates the whole run.
    pub fn new(
        model_id: impl Into<String>,
        pair_ids: Vec<String>,
        certain: Vec<Matrix<f32>>,
        uncertain: Vec<Matrix<f32>>,
    ) -> Result<Self, TensorIoError> {
        let d_model = certain.first().map_or(0, Matrix::cols);
        let manifest = RunManifest::new(model_id, certain.len(), d_model, pair_ids);
        let run = Self {
            manifest,
            certain,
            uncertain,
        };
        run.validate()?;
        Ok(run)
    }

    pub fn n_layers(&self) -> usize {
        self.manifest.n_layers
    }

    pub fn n_pairs(&self) -> usize {
        self.manifest.n_pairs
    }

    pub fn d_model(&self) -> usize {
        self.manifest.d_model
    }

    pub fn layer(&self, layer: usize) -> (&Matrix<f32>, &Matrix<f32>) {
        (&self.certain[layer], &self.uncertain[layer])
    }

    pub fn validate(&self) -> Result<(), TensorIoError> {
        let m = &self.manifest;
        m.validate(None)?;
        let bad = |message: String| TensorIoError::ManifestInconsistency {
            file: None,
            message,
        };
        if self.certain.len() != m.n_layers || self.uncertain.len() != m.n_layers {
            return Err(bad(format!(
                "manifest declares {} layers, run holds {} certain and {} uncertain",
                m.n_layers,
                self.certain.len(),
                self.uncertain.len()
            )));
        }
        for (arm, mats) in [(Arm::Certain, &self.certain), (Arm::Uncertain, &self.uncertain)] {
            for (layer, mat) in mats.iter().enumerate() {
                if mat.shape() != (m.n_pairs, m.d_model) {
                    return Err(bad(format!(
                        "layer {layer} {arm} is {}x{}, expected {}x{}",
                        mat.rows(),
                        mat.cols(),
                        m.n_pairs,
                        m.d_model
                    )));
                }
                if let Some((row, col)) = mat.first_non_finite() {
                    return Err(TensorIoError::NonFinite {
                        file: None,
                        layer,
                        arm,
                        row,
                        col,
                    });
                }
            }
        }
        Ok(())
    }
}

fn encode_f32le(mat: &Matrix<f32>) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(mat.as_slice().len() * 4);
    for v in mat.as_slice() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), TensorIoError> {
    let mut f = fs::File::create(path).map_err(|e| TensorIoError::io(path, e))?;
    f.write_all(bytes)
        .and_then(|()| f.sync_all())
        .map_err(|e| TensorIoError::io(path, e))
}

/// Writes `run` under `dir`.
///
/// Files are staged in a sibling temporary directory that is renamed into
/// place once complete. An existing run directory at `dir` is replaced; any
/// other non-empty directory is left alone and reported.
pub fn write_run(run: &ActivationRun, dir: impl AsRef<Path>) -> Result<(), TensorIoError> {
    let dir = dir.as_ref();
    run.validate()?;

    let parent = match dir.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(|e| TensorIoError::io(&parent, e))?;
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    let staging = parent.join(format!(".{name}.partial-{}", std::process::id()));
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(|e| TensorIoError::io(&staging, e))?;
    }
    let layers = staging.join(LAYERS_DIR);
    fs::create_dir_all(&layers).map_err(|e| TensorIoError::io(&layers, e))?;

    let manifest = serde_json::to_string_pretty(&run.manifest).expect("manifest serializes");
    write_file(&staging.join(MANIFEST_FILE), format!("{manifest}\n").as_bytes())?;
    for layer in 0..run.n_layers() {
        for (arm, mat) in [(Arm::Certain, &run.certain[layer]), (Arm::Uncertain, &run.uncertain[layer])] {
            write_file(&layers.join(layer_file_name(layer, arm)), &encode_f32le(mat))?;
        }
    }

    if dir.exists() {
        let is_run = dir.join(MANIFEST_FILE).is_file();
        let is_empty = fs::read_dir(dir)
            .map_err(|e| TensorIoError::io(dir, e))?
            .next()
            .is_none();
        if !is_run && !is_empty {
            let _ = fs::remove_dir_all(&staging);
            return Err(TensorIoError::Io {
                file: dir.to_path_buf(),
                source: std::io::Error::new(
                    std::io::ErrorKind::AlreadyExists,
                    "target exists and is not a run directory",
                ),
            });
        }
        fs::remove_dir_all(dir).map_err(|e| TensorIoError::io(dir, e))?;
    }
    fs::rename(&staging, dir).map_err(|e| TensorIoError::io(dir, e))
}

/// Validated handle on a run directory; layers are loaded on demand.
#[derive(Debug, Clone)]
pub struct RunReader {
    dir: PathBuf,
    manifest: RunManifest,
}

impl RunReader {
    /// Parses and checks the manifest, then checks that every layer file
    /// exists with the exact expected byte length.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, TensorIoError> {
        let dir = dir.as_ref().to_path_buf();
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| TensorIoError::io(&path, e))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| TensorIoError::ManifestParse {
                file: path.clone(),
                message: e.to_string(),
            })?;
        match value.get("format_version").and_then(serde_json::Value::as_u64) {
            Some(v) if v == u64::from(FORMAT_VERSION) => {}
            Some(found) => {
                return Err(TensorIoError::UnknownFormatVersion { file: path, found });
            }
            None => {
                return Err(TensorIoError::ManifestParse {
                    file: path,
                    message: "format_version missing or not an integer".into(),
                });
            }
        }
        let manifest: RunManifest =
            serde_json::from_value(value).map_err(|e| TensorIoError::ManifestParse {
                file: path.clone(),
                message: e.to_string(),
            })?;
        manifest.validate(Some(&path))?;

        let reader = Self { dir, manifest };
        let expected = reader.manifest.layer_bytes();
        for layer in 0..reader.manifest.n_layers {
            for arm in Arm::BOTH {
                let file = reader.layer_path(layer, arm);
                let actual = fs::metadata(&file)
                    .map_err(|e| TensorIoError::io(&file, e))?
                    .len();
                if actual != expected {
                    return Err(TensorIoError::SizeMismatch {
                        file,
                        expected,
                        actual,
                    });
                }
            }
        }
        Ok(reader)
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn layer_path(&self, layer: usize, arm: Arm) -> PathBuf {
        self.dir.join(LAYERS_DIR).join(layer_file_name(layer, arm))
    }

    pub fn read_matrix(&self, layer: usize, arm: Arm) -> Result<Matrix<f32>, TensorIoError> {
        let file = self.layer_path(layer, arm);
        let bytes = fs::read(&file).map_err(|e| TensorIoError::io(&file, e))?;
        let expected = self.manifest.layer_bytes();
        if bytes.len() as u64 != expected {
            return Err(TensorIoError::SizeMismatch {
                file,
                expected,
                actual: bytes.len() as u64,
            });
        }
        let data: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        let mat = Matrix::from_vec(self.manifest.n_pairs, self.manifest.d_model, data)
            .expect("length checked against manifest");
        if let Some((row, col)) = mat.first_non_finite() {
            return Err(TensorIoError::NonFinite {
                file: Some(file),
                layer,
                arm,
                row,
                col,
            });
        }
        Ok(mat)
    }

    /// `(certain, uncertain)` for one layer.
    pub fn read_layer(&self, layer: usize) -> Result<(Matrix<f32>, Matrix<f32>), TensorIoError> {
        Ok((
            self.read_matrix(layer, Arm::Certain)?,
            self.read_matrix(layer, Arm::Uncertain)?,
        ))
    }

    pub fn read_all(&self) -> Result<ActivationRun, TensorIoError> {
        let mut certain = Vec::with_capacity(self.manifest.n_layers);
        let mut uncertain = Vec::with_capacity(self.manifest.n_layers);
        for layer in 0..self.manifest.n_layers {
            let (c, u) = self.read_layer(layer)?;
            certain.push(c);
            uncertain.push(u);
        }
        Ok(ActivationRun {
            manifest: self.manifest.clone(),
            certain,
            uncertain,
        })
    }
}

pub fn read_run(dir: impl AsRef<Path>) -> Result<ActivationRun, TensorIoError> {
    RunReader::open(dir)?.read_all()
}
