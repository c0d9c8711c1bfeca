use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::GenerationConfig;
use super::ingest::SourceKind;
use crate::degrade::DegradationParams;
use crate::error::{Error, Result};
use crate::io::{read_bytes, sha256_hex, write_atomic, CHECKSUM_ALGORITHM, JPEG_SUBSAMPLING};
use crate::isp::IspProfile;
use crate::rng::RNG_ALGORITHM;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JpegSettings {
    pub quality: u8,
    pub subsampling: String,
    pub baseline: bool,
    pub optimized_huffman: bool,
}

impl JpegSettings {
    pub fn for_profile(profile: &IspProfile) -> Self {
        JpegSettings {
            quality: profile.jpeg_quality,
            subsampling: JPEG_SUBSAMPLING.to_string(),
            baseline: true,
            optimized_huffman: false,
        }
    }
}

/// A stored file, relative to the dataset root, with its digest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

impl FileEntry {
    pub fn of(path: String, bytes: &[u8]) -> Self {
        FileEntry {
            path,
            sha256: sha256_hex(bytes),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputFiles {
    pub lin: FileEntry,
    pub gt: FileEntry,
    pub raw: FileEntry,
    #[serde(rename = "ref")]
    pub reference: FileEntry,
}

impl OutputFiles {
    pub fn entries(&self) -> [&FileEntry; 4] {
        [&self.lin, &self.gt, &self.raw, &self.reference]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleRecord {
    pub index: usize,
    /// Source file name.
    pub source_id: String,
    /// Path the source was read from.
    pub source_path: String,
    pub source_sha256: String,
    pub source_kind: SourceKind,
    pub pseudo_linear: bool,
    /// Size of the stored linear image (top-left crop to a multiple of 4).
    pub lin_height: usize,
    pub lin_width: usize,
    /// Kernel and noise streams are derived from `params.seed`.
    pub params: DegradationParams,
    pub files: OutputFiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureRecord {
    pub index: usize,
    pub source_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub toolkit_version: String,
    pub master_seed: u64,
    pub rng_algorithm: String,
    pub checksum_algorithm: String,
    pub isp_profile: IspProfile,
    pub jpeg: JpegSettings,
    pub config: GenerationConfig,
    pub examples: Vec<ExampleRecord>,
    pub failures: Vec<FailureRecord>,
}

impl DatasetManifest {
    pub fn new(config: &GenerationConfig, master_seed: u64) -> Self {
        DatasetManifest {
            toolkit_version: TOOLKIT_VERSION.to_string(),
            master_seed,
            rng_algorithm: RNG_ALGORITHM.to_string(),
            checksum_algorithm: CHECKSUM_ALGORITHM.to_string(),
            isp_profile: config.isp_profile.clone(),
            jpeg: JpegSettings::for_profile(&config.isp_profile),
            config: config.clone(),
            examples: Vec::new(),
            failures: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn write(&self, root: &Path) -> Result<()> {
        write_atomic(&root.join(MANIFEST_FILE), self.to_json()?.as_bytes())
    }

    pub fn read(root: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&read_bytes(&root.join(MANIFEST_FILE))?)?)
    }

    /// Checks that every referenced file exists and matches its digest.
    pub fn verify_files(&self, root: &Path) -> Result<()> {
        if self.checksum_algorithm != CHECKSUM_ALGORITHM {
            return Err(Error::UnsupportedFormat(format!(
                "checksum algorithm {}",
                self.checksum_algorithm
            )));
        }
        for record in &self.examples {
            for entry in record.files.entries() {
                let path = root.join(&entry.path);
                let actual = sha256_hex(&read_bytes(&path)?);
                if actual != entry.sha256 {
                    return Err(Error::ChecksumMismatch {
                        path,
                        expected: entry.sha256.clone(),
                        actual,
                    });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::config::sample_params;
    use crate::rng::stream;

    #[test]
    fn sampled_parameters_survive_json_exactly() {
        let cfg = GenerationConfig::default();
        let mut rng = stream(9);
        for i in 0..500 {
            let p = sample_params(&mut rng, &cfg, i);
            let back: DegradationParams = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
            assert_eq!(back, p);
        }
    }

    #[test]
    fn header_names_algorithms() {
        let m = DatasetManifest::new(&GenerationConfig::default(), 7);
        let v: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        assert_eq!(v["checksum_algorithm"], "sha256");
        assert_eq!(v["jpeg"]["quality"], 95);
        assert_eq!(v["jpeg"]["subsampling"], "4:2:0");
        assert_eq!(v["master_seed"], 7);
        assert_eq!(
            DatasetManifest::new(&GenerationConfig::default(), 7).to_json().unwrap(),
            m.to_json().unwrap()
        );
    }
}
