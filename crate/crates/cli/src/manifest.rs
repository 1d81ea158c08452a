use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

pub const TOOL: &str = concat!("macrostate ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Serialize)]
pub struct InputRecord {
    pub id: String,
    pub path: String,
    pub format: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Everything needed to reproduce a report. There is deliberately no
/// timestamp, so identical runs print identical documents.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub relation: String,
    pub compressor: String,
    pub parameters: BTreeMap<String, Value>,
    pub inputs: Vec<InputRecord>,
    pub tool: String,
}

impl RunManifest {
    pub fn new(command: &str, relation: String, compressor: String) -> Self {
        Self {
            command: command.to_string(),
            relation,
            compressor,
            parameters: BTreeMap::new(),
            inputs: Vec::new(),
            tool: TOOL.to_string(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.parameters
            .insert(key.to_string(), serde_json::to_value(value).expect("serializable parameter"));
        self
    }

    pub fn input(&mut self, id: &str, path: &Path, format: &str, bytes: &[u8]) -> &mut Self {
        self.inputs.push(InputRecord {
            id: id.to_string(),
            path: path.display().to_string(),
            format: format.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        self
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// The report body's fields with `manifest` added alongside them.
pub fn document(manifest: &RunManifest, body: impl Serialize) -> anyhow::Result<Value> {
    let mut map = match serde_json::to_value(body)? {
        Value::Object(map) => map,
        other => {
            let mut map = Map::new();
            map.insert("result".into(), other);
            map
        }
    };
    map.insert("manifest".into(), serde_json::to_value(manifest)?);
    Ok(Value::Object(map))
}
