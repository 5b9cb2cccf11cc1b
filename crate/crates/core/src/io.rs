//! JSON envelope for every instance kind.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{KeychainError, Result};
use crate::model::{KnownOrderInstance, MultiKeyInstance, ScenarioInstance};
use crate::obm::WobmInstance;
use crate::order::OrderInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    KnownOrder,
    Scenarios,
    MultiKey,
    OrderSelection,
    Wobm,
}

impl InstanceKind {
    pub const ALL: [InstanceKind; 5] = [
        InstanceKind::KnownOrder,
        InstanceKind::Scenarios,
        InstanceKind::MultiKey,
        InstanceKind::OrderSelection,
        InstanceKind::Wobm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InstanceKind::KnownOrder => "known_order",
            InstanceKind::Scenarios => "scenarios",
            InstanceKind::MultiKey => "multi_key",
            InstanceKind::OrderSelection => "order_selection",
            InstanceKind::Wobm => "wobm",
        }
    }
}

impl std::fmt::Display for InstanceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InstanceKind {
    type Err = KeychainError;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.replace('-', "_");
        match s.as_str() {
            "order" => return Ok(InstanceKind::OrderSelection),
            "multikey" => return Ok(InstanceKind::MultiKey),
            _ => {}
        }
        InstanceKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| KeychainError::InvalidInput(format!("unknown instance kind {s:?}")))
    }
}

/// An instance file: the payload fields plus a `kind` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Instance {
    KnownOrder(KnownOrderInstance),
    Scenarios(ScenarioInstance),
    MultiKey(MultiKeyInstance),
    OrderSelection(OrderInstance),
    Wobm(WobmInstance),
}

impl Instance {
    pub fn kind(&self) -> InstanceKind {
        match self {
            Instance::KnownOrder(_) => InstanceKind::KnownOrder,
            Instance::Scenarios(_) => InstanceKind::Scenarios,
            Instance::MultiKey(_) => InstanceKind::MultiKey,
            Instance::OrderSelection(_) => InstanceKind::OrderSelection,
            Instance::Wobm(_) => InstanceKind::Wobm,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instances serialize")
    }
}

pub fn parse_instance(json: &str) -> Result<Instance> {
    serde_json::from_str(json).map_err(|e| KeychainError::InvalidInput(e.to_string()))
}

pub fn load_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| KeychainError::InvalidInput(format!("{}: {e}", path.display())))?;
    parse_instance(&text)
}

pub fn save_instance(path: &Path, instance: &Instance) -> Result<()> {
    std::fs::write(path, instance.to_json() + "\n")
        .map_err(|e| KeychainError::InvalidInput(format!("{}: {e}", path.display())))
}
