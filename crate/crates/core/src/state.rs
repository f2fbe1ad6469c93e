//! Serialized activation snapshot of the short-term memory.
//!
//! This is the only format the executive and the reference classifier share.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One component of a snapshot: its active neurons and the saturation
/// magnitude of its connections to the executive, in thousandths.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ComponentState {
    pub name: String,
    pub size: usize,
    pub active: Vec<usize>,
    pub w_max: i64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InternalState {
    pub components: Vec<ComponentState>,
}

impl InternalState {
    pub fn component(&self, name: &str) -> Option<&ComponentState> {
        self.components.iter().find(|c| c.name == name)
    }

    /// Component names and magnitudes in order.
    pub fn layout(&self) -> Vec<(&str, i64)> {
        self.components
            .iter()
            .map(|c| (c.name.as_str(), c.w_max))
            .collect()
    }

    pub fn active_counts(&self) -> Vec<usize> {
        self.components.iter().map(|c| c.active.len()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("snapshot serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Integrity(e.to_string()))
    }

    /// Drops the named components.
    pub fn without(&self, names: &[String]) -> InternalState {
        InternalState {
            components: self
                .components
                .iter()
                .filter(|c| !names.contains(&c.name))
                .cloned()
                .collect(),
        }
    }
}
