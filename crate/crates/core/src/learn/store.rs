//! Solved training variations and their on-disk layout: a directory holding
//! `manifest.json` and one `sample_<i>.json` per record, `i` counting from 1.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::LearnError;
use crate::powergrid::{to_json, ConstraintKey, KeyRecord, PowerNetwork, UCInstance, UCSolution};
use crate::sampling::ParameterVector;

pub const STORE_FORMAT: &str = "scuc-lab-store/1";

/// SHA-256 of the canonical JSON form of an instance, hex encoded.
pub fn fingerprint(base: &UCInstance) -> String {
    let digest = Sha256::digest(to_json(base).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRecord {
    pub seed: u64,
    pub params: ParameterVector,
    /// Flow limits enforced in the final model of the solve.
    pub enforced: BTreeSet<ConstraintKey>,
    pub solution: UCSolution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingStore {
    pub fingerprint: String,
    pub records: Vec<TrainingRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoreManifest {
    pub format: String,
    pub fingerprint: String,
    pub seeds: Vec<u64>,
    /// Free-form settings echoed by whoever wrote the store.
    #[serde(default)]
    pub settings: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleDocument {
    pub seed: u64,
    pub params: ParameterVector,
    pub enforced: Vec<KeyRecord>,
    pub solution: UCSolution,
}

pub fn parse_manifest(text: &str) -> Result<StoreManifest, LearnError> {
    let manifest: StoreManifest = serde_json::from_str(text)?;
    if manifest.format != STORE_FORMAT {
        return Err(LearnError::Format(manifest.format));
    }
    Ok(manifest)
}

/// Parses one sample document and resolves its keys against `network`.
pub fn parse_sample(text: &str, network: &PowerNetwork) -> Result<TrainingRecord, LearnError> {
    let doc: SampleDocument = serde_json::from_str(text)?;
    let enforced = doc
        .enforced
        .iter()
        .map(|k| k.resolve(network))
        .collect::<Result<BTreeSet<_>, _>>()
        .map_err(|e| LearnError::Sample {
            index: 0,
            reason: e.to_string(),
        })?;
    Ok(TrainingRecord {
        seed: doc.seed,
        params: doc.params,
        enforced,
        solution: doc.solution,
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> LearnError + '_ {
    move |source| LearnError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl TrainingStore {
    pub fn new(base: &UCInstance) -> Self {
        TrainingStore {
            fingerprint: fingerprint(base),
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn check_base(&self, base: &UCInstance) -> Result<(), LearnError> {
        let found = fingerprint(base);
        if found != self.fingerprint {
            return Err(LearnError::Fingerprint {
                expected: self.fingerprint.clone(),
                found,
            });
        }
        Ok(())
    }

    pub fn save(
        &self,
        dir: impl AsRef<Path>,
        base: &UCInstance,
        settings: serde_json::Value,
    ) -> Result<(), LearnError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let manifest = StoreManifest {
            format: STORE_FORMAT.into(),
            fingerprint: self.fingerprint.clone(),
            seeds: self.records.iter().map(|r| r.seed).collect(),
            settings,
        };
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(io_err(&path))?;
        for (i, r) in self.records.iter().enumerate() {
            let doc = SampleDocument {
                seed: r.seed,
                params: r.params.clone(),
                enforced: r
                    .enforced
                    .iter()
                    .map(|k| k.to_record(&base.network))
                    .collect(),
                solution: r.solution.clone(),
            };
            let path = dir.join(format!("sample_{}.json", i + 1));
            fs::write(&path, serde_json::to_string(&doc)?).map_err(io_err(&path))?;
        }
        Ok(())
    }

    /// Loads a store written for `base`; any other base is rejected.
    pub fn load(dir: impl AsRef<Path>, base: &UCInstance) -> Result<Self, LearnError> {
        let dir = dir.as_ref();
        let path = dir.join("manifest.json");
        let manifest = parse_manifest(&fs::read_to_string(&path).map_err(io_err(&path))?)?;
        let store = TrainingStore {
            fingerprint: manifest.fingerprint.clone(),
            records: Vec::new(),
        };
        store.check_base(base)?;
        let mut records = Vec::with_capacity(manifest.seeds.len());
        for (i, &seed) in manifest.seeds.iter().enumerate() {
            let path = dir.join(format!("sample_{}.json", i + 1));
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            let record = parse_sample(&text, &base.network).map_err(|e| match e {
                LearnError::Sample { reason, .. } => LearnError::Sample {
                    index: i + 1,
                    reason,
                },
                other => other,
            })?;
            if record.seed != seed {
                return Err(LearnError::Sample {
                    index: i + 1,
                    reason: format!("seed {} does not match manifest seed {seed}", record.seed),
                });
            }
            records.push(record);
        }
        Ok(TrainingStore { records, ..store })
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.records.iter().map(|r| r.seed).collect()
    }
}
