//! JSON instance documents (`"format": "scuc-lab/1"`).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Generator, PowerNetwork, TransmissionLine, UCInstance, ValidationError, HORIZON};

pub const FORMAT_TAG: &str = "scuc-lab/1";

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed instance document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported format {0:?}, expected {FORMAT_TAG:?}")]
    Format(String),
    #[error("invalid instance: {0}")]
    Validation(#[from] ValidationError),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDocument {
    format: String,
    buses: Vec<String>,
    slack_bus: String,
    lines: Vec<TransmissionLine>,
    generators: Vec<Generator>,
    /// Bus id to 24 hourly values. Buses without an entry have no load.
    demand: BTreeMap<String, Vec<f64>>,
    reserve: Vec<f64>,
}

/// Parses and validates an instance document.
pub fn parse_instance(text: &str) -> Result<UCInstance, InstanceError> {
    let doc: InstanceDocument = serde_json::from_str(text)?;
    if doc.format != FORMAT_TAG {
        return Err(InstanceError::Format(doc.format));
    }
    let network = PowerNetwork::new(doc.buses, doc.lines, doc.slack_bus)?;
    let mut demand = vec![vec![0.0; HORIZON]; network.bus_count()];
    for (bus, values) in doc.demand {
        let b = network
            .bus_index(&bus)
            .ok_or_else(|| ValidationError::UnknownBus {
                context: "demand table".into(),
                bus: bus.clone(),
            })?;
        demand[b] = values;
    }
    Ok(UCInstance::new(
        network,
        doc.generators,
        demand,
        doc.reserve,
    )?)
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<UCInstance, InstanceError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| InstanceError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_instance(&text)
}

pub fn to_json(instance: &UCInstance) -> String {
    let net = &instance.network;
    let doc = InstanceDocument {
        format: FORMAT_TAG.to_string(),
        buses: net.buses().to_vec(),
        slack_bus: net.slack_bus().to_string(),
        lines: net.lines().to_vec(),
        generators: instance.generators.clone(),
        demand: net
            .buses()
            .iter()
            .cloned()
            .zip(instance.demand.iter().cloned())
            .collect(),
        reserve: instance.reserve.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("instance documents always serialize")
}

pub fn save_instance(instance: &UCInstance, path: impl AsRef<Path>) -> Result<(), InstanceError> {
    let path = path.as_ref();
    fs::write(path, to_json(instance)).map_err(|source| InstanceError::Io {
        path: path.to_path_buf(),
        source,
    })
}
