//! Versioned on-disk artifacts.
//!
//! An artifact is a directory holding `manifest.json` and `data.json`.
//! The manifest records the artifact kind, the format version and
//! kind-specific build details. Directories are written under a temporary
//! sibling name and renamed into place, so a failed write never leaves a
//! half-built artifact at the target path.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DATA_FILE: &str = "data.json";

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed artifact file {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path} holds a {found:?} artifact, expected {expected:?}")]
    KindMismatch {
        path: PathBuf,
        found: String,
        expected: &'static str,
    },
    #[error(
        "{path} has format version {found}, this build reads version {expected}; \
         rebuild the artifact with `conceptmine build --force`"
    )]
    VersionMismatch {
        path: PathBuf,
        found: u32,
        expected: u32,
    },
    #[error("{0} already exists (pass --force to overwrite)")]
    AlreadyExists(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest<D> {
    pub kind: String,
    pub format_version: u32,
    pub details: D,
}

#[derive(Deserialize)]
struct ManifestHeader {
    kind: String,
    format_version: u32,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ArtifactError + '_ {
    move |source| ArtifactError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ArtifactError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, value).map_err(|source| ArtifactError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    w.flush().map_err(io_err(path))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, ArtifactError> {
    let file = File::open(path).map_err(io_err(path))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|source| ArtifactError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Fails with [`ArtifactError::AlreadyExists`] when `dir` exists and
/// `force` is not set.
pub fn check_writable(dir: &Path, force: bool) -> Result<(), ArtifactError> {
    if dir.exists() && !force {
        return Err(ArtifactError::AlreadyExists(dir.to_path_buf()));
    }
    Ok(())
}

pub fn write<D: Serialize, P: Serialize>(
    dir: &Path,
    kind: &str,
    format_version: u32,
    details: &D,
    payload: &P,
    force: bool,
) -> Result<(), ArtifactError> {
    check_writable(dir, force)?;
    let parent = match dir.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(io_err(&parent))?;
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "artifact".to_string());
    let tmp = parent.join(format!(".{name}.tmp-{}", std::process::id()));
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(io_err(&tmp))?;
    }
    fs::create_dir(&tmp).map_err(io_err(&tmp))?;

    let result = (|| {
        write_json(&tmp.join(DATA_FILE), payload)?;
        let manifest = Manifest {
            kind: kind.to_string(),
            format_version,
            details,
        };
        write_json(&tmp.join(MANIFEST_FILE), &manifest)
    })();
    if let Err(e) = result {
        let _ = fs::remove_dir_all(&tmp);
        return Err(e);
    }

    if dir.exists() {
        fs::remove_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::rename(&tmp, dir).map_err(io_err(dir))
}

pub fn read_manifest<D: DeserializeOwned>(
    dir: &Path,
    kind: &'static str,
    format_version: u32,
) -> Result<Manifest<D>, ArtifactError> {
    let path = dir.join(MANIFEST_FILE);
    let header: ManifestHeader = read_json(&path)?;
    if header.kind != kind {
        return Err(ArtifactError::KindMismatch {
            path,
            found: header.kind,
            expected: kind,
        });
    }
    if header.format_version != format_version {
        return Err(ArtifactError::VersionMismatch {
            path,
            found: header.format_version,
            expected: format_version,
        });
    }
    read_json(&path)
}

pub fn read<D: DeserializeOwned, P: DeserializeOwned>(
    dir: &Path,
    kind: &'static str,
    format_version: u32,
) -> Result<(Manifest<D>, P), ArtifactError> {
    let manifest = read_manifest(dir, kind, format_version)?;
    let payload = read_json(&dir.join(DATA_FILE))?;
    Ok((manifest, payload))
}
