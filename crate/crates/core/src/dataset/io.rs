use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GeneratorConfig, SampleMeta, SampleRecord, CHANNEL_COUNT, CHANNEL_NAMES};
use crate::error::{Error, Result};
use crate::tensor::{f32_from_le_bytes, f32_to_le_bytes};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
const SAMPLE_DIR: &str = "samples";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub nelx: usize,
    pub nely: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path of the payload, relative to the dataset directory.
    pub path: String,
    pub crc32: u32,
    pub meta: SampleMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub resolution: Resolution,
    /// Input channel names in payload order; the target block follows them.
    pub channels: Vec<String>,
    pub count: usize,
    pub generator: Option<GeneratorConfig>,
    pub samples: Vec<ManifestEntry>,
}

fn sample_path(index: usize) -> String {
    format!("{SAMPLE_DIR}/sample_{index:06}.bin")
}

/// Writes `samples` under `dir` (created if missing) and returns the
/// manifest that was stored next to them.
pub fn write_dataset(
    dir: &Path,
    nelx: usize,
    nely: usize,
    generator: Option<&GeneratorConfig>,
    samples: &[SampleRecord],
) -> Result<DatasetManifest> {
    let n = nelx * nely;
    let sample_dir = dir.join(SAMPLE_DIR);
    fs::create_dir_all(&sample_dir).map_err(|e| Error::io(&sample_dir, e))?;
    let mut entries = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        if s.nelx != nelx || s.nely != nely {
            return Err(Error::format(
                Some(i),
                format!(
                    "resolution {}x{} differs from dataset {nely}x{nelx}",
                    s.nely, s.nelx
                ),
            ));
        }
        if s.channels.len() != CHANNEL_COUNT * n || s.target.len() != n {
            return Err(Error::format(
                Some(i),
                "tensor sizes do not match the resolution",
            ));
        }
        let mut payload = f32_to_le_bytes(&s.channels);
        payload.extend(f32_to_le_bytes(&s.target));
        let rel = sample_path(i);
        let path = dir.join(&rel);
        fs::write(&path, &payload).map_err(|e| Error::io(&path, e))?;
        entries.push(ManifestEntry {
            path: rel,
            crc32: crc32fast::hash(&payload),
            meta: s.meta.clone(),
        });
    }
    let manifest = DatasetManifest {
        version: FORMAT_VERSION,
        resolution: Resolution { nelx, nely },
        channels: CHANNEL_NAMES.iter().map(|s| s.to_string()).collect(),
        count: entries.len(),
        generator: generator.cloned(),
        samples: entries,
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::format(None, format!("cannot encode manifest: {e}")))?;
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<DatasetManifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: DatasetManifest = serde_json::from_str(&text)
        .map_err(|e| Error::format(None, format!("malformed manifest: {e}")))?;
    if manifest.version != FORMAT_VERSION {
        return Err(Error::format(
            None,
            format!(
                "dataset version {} unsupported (expected {FORMAT_VERSION})",
                manifest.version
            ),
        ));
    }
    if manifest.count != manifest.samples.len() {
        return Err(Error::format(
            None,
            format!(
                "manifest count {} but {} sample entries",
                manifest.count,
                manifest.samples.len()
            ),
        ));
    }
    if manifest.channels.len() != CHANNEL_COUNT {
        return Err(Error::format(
            None,
            format!("expected {CHANNEL_COUNT} channels"),
        ));
    }
    Ok(manifest)
}

/// Reads and verifies every sample listed in the manifest.
pub fn read_dataset(dir: &Path) -> Result<(Vec<SampleRecord>, DatasetManifest)> {
    let manifest = read_manifest(dir)?;
    let Resolution { nelx, nely } = manifest.resolution;
    let n = nelx * nely;
    let expected_len = 4 * (CHANNEL_COUNT + 1) * n;
    let mut samples = Vec::with_capacity(manifest.count);
    for (i, entry) in manifest.samples.iter().enumerate() {
        let path = dir.join(&entry.path);
        let bytes = fs::read(&path)
            .map_err(|e| Error::format(Some(i), format!("{}: {e}", path.display())))?;
        if bytes.len() != expected_len {
            return Err(Error::format(
                Some(i),
                format!(
                    "payload is {} bytes, expected {expected_len} (truncated or wrong resolution)",
                    bytes.len()
                ),
            ));
        }
        if crc32fast::hash(&bytes) != entry.crc32 {
            return Err(Error::format(Some(i), "checksum mismatch"));
        }
        let mut values = f32_from_le_bytes(&bytes);
        let target = values.split_off(CHANNEL_COUNT * n);
        samples.push(SampleRecord {
            nelx,
            nely,
            channels: values,
            target,
            meta: entry.meta.clone(),
        });
    }
    Ok((samples, manifest))
}
