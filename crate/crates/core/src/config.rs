//! Session configuration.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ssm::{weight_from_f64, Activation};
use crate::stm::{StateLayout, COMPONENTS};

/// Random search settings used while exploring towards a target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplorationPolicy {
    /// Attempts before an exploration gives up.
    pub max_attempts: usize,
    /// Basic sequences chained in one attempt.
    pub max_chain: usize,
    pub p_ph_from_input: f64,
    pub p_wg_out: f64,
    pub p_retr_as: f64,
    pub p_get_start_ph: f64,
    pub p_get_next_ph: f64,
    pub p_goal: f64,
    /// Largest number of consecutive GET_NEXT_PH in one sequence.
    pub n3_max: usize,
    /// Successful attempts to collect before keeping the shortest one.
    pub candidates: usize,
}

impl Default for ExplorationPolicy {
    fn default() -> Self {
        ExplorationPolicy {
            max_attempts: 5000,
            max_chain: 3,
            p_ph_from_input: 0.25,
            p_wg_out: 0.25,
            p_retr_as: 0.25,
            p_get_start_ph: 0.25,
            p_get_next_ph: 0.25,
            p_goal: 0.25,
            n3_max: 3,
            candidates: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub seed: u64,
    pub vocab_capacity: usize,
    pub phrase_capacity: usize,
    pub assoc_capacity: usize,
    pub saann_capacity: usize,
    pub goal_depth: usize,
    /// Winners of the state-action network while answering.
    pub k: usize,
    /// Neurons trained per rewarded step; `None` means `k`.
    pub reward_copies: Option<usize>,
    /// Step cap of one epoch.
    pub t_max: usize,
    pub activation: Activation,
    /// Magnitude per state component; missing components use 1, the
    /// comparison structure 5.
    pub w_max: BTreeMap<String, f64>,
    /// State components left out of the executive input.
    pub ablate: Vec<String>,
    /// Answer every question immediately once a policy exists.
    pub auto_exploit: bool,
    pub exploration: ExplorationPolicy,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 1,
            vocab_capacity: 4096,
            phrase_capacity: 100_000,
            assoc_capacity: 400_000,
            saann_capacity: 100_000,
            goal_depth: 4,
            k: 5,
            reward_copies: None,
            t_max: 100,
            activation: Activation::default(),
            w_max: BTreeMap::new(),
            ablate: Vec::new(),
            auto_exploit: false,
            exploration: ExplorationPolicy::default(),
        }
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Config = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.vocab_capacity < 2 {
            return Err(Error::Config("vocabulary needs room beyond the null word".into()));
        }
        if self.reward_copies == Some(0) {
            return Err(Error::Config("reward_copies must be at least 1".into()));
        }
        let e = &self.exploration;
        if self.t_max == 0 || e.max_chain == 0 || e.n3_max == 0 || e.candidates == 0 || e.max_attempts == 0 {
            return Err(Error::Config("step and chain limits must be positive".into()));
        }
        let probs = [
            self.exploration.p_ph_from_input,
            self.exploration.p_wg_out,
            self.exploration.p_retr_as,
            self.exploration.p_get_start_ph,
            self.exploration.p_get_next_ph,
            self.exploration.p_goal,
        ];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("probabilities must lie in [0, 1]".into()));
        }
        for name in self.w_max.keys().chain(&self.ablate) {
            if !COMPONENTS.contains(&name.as_str()) {
                return Err(Error::Config(format!("unknown state component `{name}`")));
            }
        }
        self.layout().map(|_| ())
    }

    pub fn copies(&self) -> usize {
        self.reward_copies.unwrap_or(self.k)
    }

    /// The executive input layout this configuration selects.
    pub fn layout(&self) -> Result<StateLayout> {
        let mut layout = StateLayout::standard();
        for (name, &w) in &self.w_max {
            if w < 0.0 {
                return Err(Error::Config(format!("negative magnitude for `{name}`")));
            }
            layout = layout.with_magnitude(name, weight_from_f64(w)?)?;
        }
        Ok(layout.without(&self.ablate))
    }

    /// Hex digest of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
