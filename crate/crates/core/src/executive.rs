//! Central executive: mental actions, their gatekeeper wiring, and the
//! state-action network that picks an action for a snapshot.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ltm::{Ltm, Retrieval};
use crate::ssm::{Activation, BankKind, ConnectionBank, SparseLayer, UpdateRule, Weight, UNIT};
use crate::state::InternalState;
use crate::stm::{Gate, GateSet, Stm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MentalAction {
    WFromWk,
    NextW,
    GetW,
    FlushWg,
    WgOut,
    RetrAs,
    GetStartPh,
    GetNextPh,
    PushGoal,
    DropGoal,
    PhFromInput,
    Continue,
    Done,
    StorePh,
    AssocGroup,
}

/// Actions the state-action network can choose, in action-neuron order.
pub const ELABORATION: [MentalAction; 13] = [
    MentalAction::WFromWk,
    MentalAction::NextW,
    MentalAction::GetW,
    MentalAction::FlushWg,
    MentalAction::WgOut,
    MentalAction::RetrAs,
    MentalAction::GetStartPh,
    MentalAction::GetNextPh,
    MentalAction::PushGoal,
    MentalAction::DropGoal,
    MentalAction::PhFromInput,
    MentalAction::Continue,
    MentalAction::Done,
];

impl MentalAction {
    pub fn name(self) -> &'static str {
        match self {
            MentalAction::WFromWk => "W_FROM_WK",
            MentalAction::NextW => "NEXT_W",
            MentalAction::GetW => "GET_W",
            MentalAction::FlushWg => "FLUSH_WG",
            MentalAction::WgOut => "WG_OUT",
            MentalAction::RetrAs => "RETR_AS",
            MentalAction::GetStartPh => "GET_START_PH",
            MentalAction::GetNextPh => "GET_NEXT_PH",
            MentalAction::PushGoal => "PUSH_GOAL",
            MentalAction::DropGoal => "DROP_GOAL",
            MentalAction::PhFromInput => "PH_FROM_INPUT",
            MentalAction::Continue => "CONTINUE",
            MentalAction::Done => "DONE",
            MentalAction::StorePh => "STORE_PH",
            MentalAction::AssocGroup => "ASSOC_GROUP",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        ELABORATION
            .iter()
            .chain(&[MentalAction::StorePh, MentalAction::AssocGroup])
            .copied()
            .find(|a| a.name() == name)
    }

    /// Index of the action neuron, for elaboration actions.
    pub fn neuron(self) -> Option<usize> {
        ELABORATION.iter().position(|&a| a == self)
    }

    /// Gatekeepers the action neuron switches on.
    pub fn gates(self) -> &'static [Gate] {
        match self {
            MentalAction::WFromWk => &[Gate::StartPhIFlag],
            MentalAction::NextW => &[Gate::NextPhIFlag],
            MentalAction::GetW => &[Gate::GetFlag],
            MentalAction::FlushWg => &[Gate::FlushWgFlag],
            MentalAction::WgOut => &[Gate::WgOutFlag],
            MentalAction::RetrAs => &[Gate::RetrAsFlag],
            MentalAction::GetStartPh => &[Gate::StartPhFlag],
            MentalAction::GetNextPh => &[Gate::NextPhFlag],
            MentalAction::PushGoal => &[Gate::PushGoalFlag],
            MentalAction::DropGoal => &[Gate::DropGoalFlag],
            MentalAction::PhFromInput => &[Gate::WkFlag],
            MentalAction::Continue => &[Gate::ContinueFlag],
            MentalAction::Done => &[Gate::DoneFlag],
            MentalAction::StorePh => &[Gate::StorePhFlag],
            MentalAction::AssocGroup => &[Gate::AssocFlag],
        }
    }

    pub fn is_internal(self) -> bool {
        self.neuron().is_none()
    }
}

impl fmt::Display for MentalAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionMode {
    Acquisition,
    Association,
    Exploration,
    Reward,
    Exploitation,
}

/// What an executed action did beyond the buffers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Effect {
    Buffers,
    Retrieval(Retrieval),
    Stored(usize),
    Continue,
    Done,
}

/// Fires the action's gatekeepers and runs the operations they open.
pub fn execute(action: MentalAction, mode: SessionMode, stm: &mut Stm, ltm: &mut Ltm) -> Result<Effect> {
    let allowed = match mode {
        SessionMode::Association | SessionMode::Acquisition => true,
        SessionMode::Exploration | SessionMode::Exploitation | SessionMode::Reward => !action.is_internal(),
    };
    if !allowed {
        return Err(Error::Contract(format!("{action} is not available in {mode:?} mode")));
    }
    let gates = GateSet::of(action.gates());
    stm.cycle(gates)?;
    if gates.is_on(Gate::RetrAsFlag) {
        return Ok(Effect::Retrieval(ltm.retr_as(stm)?));
    }
    if gates.is_on(Gate::StartPhFlag) {
        return Ok(Effect::Retrieval(ltm.get_start_ph(stm)?));
    }
    if gates.is_on(Gate::NextPhFlag) {
        return Ok(Effect::Retrieval(ltm.get_next_ph(stm)?));
    }
    if gates.is_on(Gate::StorePhFlag) {
        return Ok(Effect::Stored(ltm.memorize(&stm.working)?));
    }
    if gates.is_on(Gate::AssocFlag) {
        let phrase = ltm
            .current()
            .ok_or_else(|| Error::Contract("association without a current phrase".into()))?;
        return Ok(Effect::Stored(ltm.associate(&stm.group, phrase)?));
    }
    if gates.is_on(Gate::ContinueFlag) {
        return Ok(Effect::Continue);
    }
    if gates.is_on(Gate::DoneFlag) {
        return Ok(Effect::Done);
    }
    Ok(Effect::Buffers)
}

// ============================================================================
// State-action network
// ============================================================================

/// One component of the layout the network was trained on.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputSlot {
    pub name: String,
    pub size: usize,
    pub w_max: Weight,
}

/// Result of one action choice, with the evidence behind it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub action: MentalAction,
    pub winners: Vec<usize>,
    /// Input of each action neuron.
    pub votes: Vec<Weight>,
}

/// The state-action association network.
///
/// Each used neuron stores one trained state. Its incoming weights are
/// `+w_max` from the neurons active in that state and `-w_max` from all
/// others, so only the active sets need to be kept; identical states share
/// one stored pattern.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateActionNet {
    layer: SparseLayer,
    output: ConnectionBank,
    slots: Vec<InputSlot>,
    patterns: Vec<Vec<Vec<u32>>>,
    pattern_of: Vec<u32>,
    actions: Vec<MentalAction>,
    #[serde(skip)]
    dedup: HashMap<Vec<Vec<u32>>, u32>,
    #[serde(skip)]
    members: Vec<Vec<u32>>,
}

impl StateActionNet {
    pub fn new(capacity: usize) -> Self {
        StateActionNet {
            layer: SparseLayer::new("elactfst", capacity, Activation::default(), UpdateRule::Kwta(1)),
            output: ConnectionBank::new(
                "elactfst",
                "actions",
                BankKind::Learnable,
                capacity,
                ELABORATION.len(),
                UNIT,
            ),
            slots: Vec::new(),
            patterns: Vec::new(),
            pattern_of: Vec::new(),
            actions: Vec::new(),
            dedup: HashMap::new(),
            members: Vec::new(),
        }
    }

    pub fn reindex(&mut self) {
        self.output.reindex();
        self.dedup = self
            .patterns
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i as u32))
            .collect();
        self.members = vec![Vec::new(); self.patterns.len()];
        for (n, &p) in self.pattern_of.iter().enumerate() {
            self.members[p as usize].push(n as u32);
        }
    }

    pub fn capacity(&self) -> usize {
        self.layer.size()
    }

    pub fn used(&self) -> usize {
        self.pattern_of.len()
    }

    pub fn distinct_states(&self) -> usize {
        self.patterns.len()
    }

    pub fn slots(&self) -> &[InputSlot] {
        &self.slots
    }

    pub fn action_of(&self, neuron: usize) -> Option<MentalAction> {
        self.actions.get(neuron).copied()
    }

    fn check_layout(&self, state: &InternalState) -> Result<()> {
        let same = state.components.len() == self.slots.len()
            && state
                .components
                .iter()
                .zip(&self.slots)
                .all(|(c, s)| c.name == s.name && c.size == s.size && c.w_max == s.w_max);
        if same {
            Ok(())
        } else {
            Err(Error::Contract("state layout differs from the trained layout".into()))
        }
    }

    /// Trains a fresh neuron on `(state, action)`.
    pub fn train(&mut self, state: &InternalState, action: MentalAction) -> Result<usize> {
        let target = action
            .neuron()
            .ok_or_else(|| Error::Contract(format!("{action} has no action neuron")))?;
        if self.slots.is_empty() {
            self.slots = state
                .components
                .iter()
                .map(|c| InputSlot {
                    name: c.name.clone(),
                    size: c.size,
                    w_max: c.w_max,
                })
                .collect();
        }
        self.check_layout(state)?;
        for c in &state.components {
            if c.active.iter().any(|&j| j >= c.size) {
                return Err(Error::Contract(format!("active index outside `{}`", c.name)));
            }
        }
        let fresh = self.layer.claim_fresh()?;
        debug_assert_eq!(fresh, self.pattern_of.len());
        let pattern: Vec<Vec<u32>> = state
            .components
            .iter()
            .map(|c| {
                let mut v: Vec<u32> = c.active.iter().map(|&j| j as u32).collect();
                v.sort_unstable();
                v.dedup();
                v
            })
            .collect();
        let id = match self.dedup.get(&pattern) {
            Some(&id) => id,
            None => {
                let id = self.patterns.len() as u32;
                self.dedup.insert(pattern.clone(), id);
                self.patterns.push(pattern);
                self.members.push(Vec::new());
                id
            }
        };
        self.members[id as usize].push(fresh as u32);
        self.pattern_of.push(id);
        self.actions.push(action);
        self.output.dhl_update_out(fresh, target)?;
        Ok(fresh)
    }

    /// Input sum of every used neuron for `state`, in neuron order.
    pub fn input_signals(&self, state: &InternalState) -> Result<Vec<Weight>> {
        let per_pattern = self.pattern_signals(state)?;
        Ok(self.pattern_of.iter().map(|&p| per_pattern[p as usize]).collect())
    }

    fn pattern_signals(&self, state: &InternalState) -> Result<Vec<Weight>> {
        self.check_layout(state)?;
        let mut bits: Vec<Vec<u64>> = Vec::with_capacity(self.slots.len());
        for c in &state.components {
            let mut b = vec![0u64; c.size.div_ceil(64)];
            for &j in &c.active {
                b[j / 64] |= 1 << (j % 64);
            }
            bits.push(b);
        }
        let counts: Vec<Weight> = state.components.iter().map(|c| c.active.len() as Weight).collect();
        Ok(self
            .patterns
            .iter()
            .map(|pattern| {
                let mut y = 0;
                for (m, active) in pattern.iter().enumerate() {
                    let b = &bits[m];
                    let overlap = active
                        .iter()
                        .filter(|&&j| b[j as usize / 64] >> (j % 64) & 1 == 1)
                        .count() as Weight;
                    y += self.slots[m].w_max * (2 * overlap - counts[m]);
                }
                y
            })
            .collect())
    }

    /// k-winner selection over the used neurons followed by a vote of the
    /// action neurons.
    pub fn select(&self, state: &InternalState, k: usize) -> Result<Selection> {
        if self.used() == 0 {
            return Err(Error::PolicyEmpty);
        }
        if k == 0 {
            return Err(Error::Contract("k-WTA with k=0".into()));
        }
        let k = k.min(self.used());
        let y = self.pattern_signals(state)?;
        let mut order: Vec<usize> = (0..self.patterns.len()).collect();
        order.sort_by(|&a, &b| y[b].cmp(&y[a]));
        // The k-th largest input, counting every neuron of a pattern.
        let mut covered = 0;
        let mut threshold = y[order[0]];
        for &p in &order {
            covered += self.members[p].len();
            threshold = y[p];
            if covered >= k {
                break;
            }
        }
        let mut winners: Vec<usize> = Vec::with_capacity(k);
        let mut tied: Vec<usize> = Vec::new();
        for &p in &order {
            if y[p] > threshold {
                winners.extend(self.members[p].iter().map(|&n| n as usize));
            } else if y[p] == threshold {
                tied.extend(self.members[p].iter().map(|&n| n as usize));
            } else {
                break;
            }
        }
        tied.sort_unstable();
        let room = k - winners.len();
        winners.extend(tied.into_iter().take(room));
        winners.sort_unstable();
        let mut votes = vec![0; ELABORATION.len()];
        for &i in &winners {
            for (l, v) in votes.iter_mut().enumerate() {
                *v += self.output.weight(i, l);
            }
        }
        let best = crate::ssm::top_k(&votes, 1)[0];
        Ok(Selection {
            action: ELABORATION[best],
            winners,
            votes,
        })
    }

    /// Distinct actions of the used neurons, nearest stored state first.
    pub fn ranked_actions(&self, state: &InternalState) -> Result<Vec<MentalAction>> {
        let y = self.input_signals(state)?;
        let mut order: Vec<usize> = (0..y.len()).collect();
        order.sort_by(|&a, &b| y[b].cmp(&y[a]).then(a.cmp(&b)));
        let mut seen = Vec::new();
        for i in order {
            if !seen.contains(&self.actions[i]) {
                seen.push(self.actions[i]);
            }
        }
        Ok(seen)
    }

    /// Weight from neuron `j` of component `m` to SAANN neuron `i`.
    pub fn input_weight(&self, i: usize, m: usize, j: usize) -> Weight {
        let p = &self.patterns[self.pattern_of[i] as usize][m];
        let w = self.slots[m].w_max;
        if p.binary_search(&(j as u32)).is_ok() {
            w
        } else {
            -w
        }
    }

    /// The input weights as explicit banks, one per component.
    pub fn export_input_banks(&self) -> Result<Vec<ConnectionBank>> {
        let mut banks = Vec::with_capacity(self.slots.len());
        for (m, slot) in self.slots.iter().enumerate() {
            let mut bank = ConnectionBank::new(
                &slot.name,
                "elactfst",
                BankKind::Learnable,
                slot.size,
                self.capacity(),
                slot.w_max,
            );
            for (i, &p) in self.pattern_of.iter().enumerate() {
                let active: Vec<usize> = self.patterns[p as usize][m].iter().map(|&j| j as usize).collect();
                bank.dhl_update_in(i, &active)?;
            }
            banks.push(bank);
        }
        Ok(banks)
    }

    pub fn output_bank(&self) -> &ConnectionBank {
        &self.output
    }

    /// Stored entries: per neuron one row baseline and one weight per active
    /// input for each component, plus the output rows.
    pub fn allocated(&self) -> u128 {
        let inputs: u128 = self
            .pattern_of
            .iter()
            .map(|&p| {
                self.patterns[p as usize]
                    .iter()
                    .map(|a| a.len() as u128 + 1)
                    .sum::<u128>()
            })
            .sum();
        inputs + self.output.allocated() as u128
    }

    pub fn virtual_count(&self) -> u128 {
        let inputs: u128 = self.slots.iter().map(|s| s.size as u128).sum();
        self.capacity() as u128 * inputs + self.output.virtual_count()
    }

    /// Actions of the used neurons, by count.
    pub fn action_histogram(&self) -> Vec<(MentalAction, usize)> {
        ELABORATION
            .iter()
            .map(|&a| (a, self.actions.iter().filter(|&&b| b == a).count()))
            .filter(|&(_, n)| n > 0)
            .collect()
    }

    /// Corrupts one stored input weight of neuron `i`, for mutation tests.
    #[doc(hidden)]
    pub fn corrupt(&mut self, i: usize, m: usize, j: u32) {
        let pid = self.pattern_of[i] as usize;
        let mut p = self.patterns[pid].clone();
        match p[m].binary_search(&j) {
            Ok(at) => {
                p[m].remove(at);
            }
            Err(at) => p[m].insert(at, j),
        }
        let new_id = self.patterns.len() as u32;
        self.patterns.push(p);
        self.members[pid].retain(|&n| n as usize != i);
        self.members.push(vec![i as u32]);
        self.pattern_of[i] = new_id;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::ComponentState;

    fn state(a: &[usize], b: &[usize]) -> InternalState {
        InternalState {
            components: vec![
                ComponentState {
                    name: "x".into(),
                    size: 8,
                    active: a.to_vec(),
                    w_max: 5 * UNIT,
                },
                ComponentState {
                    name: "y".into(),
                    size: 8,
                    active: b.to_vec(),
                    w_max: UNIT,
                },
            ],
        }
    }

    #[test]
    fn trained_state_recalls_its_action() {
        let mut net = StateActionNet::new(16);
        net.train(&state(&[1], &[2, 3]), MentalAction::NextW).unwrap();
        net.train(&state(&[4], &[2, 3]), MentalAction::GetW).unwrap();
        assert_eq!(net.select(&state(&[1], &[2, 3]), 1).unwrap().action, MentalAction::NextW);
        assert_eq!(net.select(&state(&[4], &[2, 3]), 1).unwrap().action, MentalAction::GetW);
    }

    #[test]
    fn empty_network_refuses() {
        let net = StateActionNet::new(4);
        assert_eq!(net.select(&state(&[1], &[2]), 1), Err(Error::PolicyEmpty));
    }

    #[test]
    fn training_leaves_old_neurons_alone() {
        let mut net = StateActionNet::new(16);
        net.train(&state(&[1], &[2, 3]), MentalAction::NextW).unwrap();
        let before = net.input_signals(&state(&[1], &[2, 3])).unwrap();
        net.train(&state(&[5], &[6, 7]), MentalAction::Done).unwrap();
        let after = net.input_signals(&state(&[1], &[2, 3])).unwrap();
        assert_eq!(before[0], after[0]);
        assert_eq!(net.used(), 2);
    }

    #[test]
    fn comparison_magnitude_outweighs_a_word() {
        let mut net = StateActionNet::new(16);
        // A differs from the query in the heavy component, B in the light one.
        net.train(&state(&[2], &[2, 3]), MentalAction::NextW).unwrap();
        net.train(&state(&[1], &[4, 5]), MentalAction::GetW).unwrap();
        let q = state(&[1], &[2, 3]);
        assert_eq!(net.select(&q, 1).unwrap().action, MentalAction::GetW);
    }

    #[test]
    fn output_rows_have_one_positive_weight() {
        let mut net = StateActionNet::new(4);
        net.train(&state(&[1], &[2, 3]), MentalAction::RetrAs).unwrap();
        let row: Vec<Weight> = (0..ELABORATION.len()).map(|l| net.output_bank().weight(0, l)).collect();
        assert_eq!(row.iter().filter(|&&w| w > 0).count(), 1);
        assert_eq!(row[MentalAction::RetrAs.neuron().unwrap()], UNIT);
    }

    #[test]
    fn export_matches_the_compact_form() {
        let mut net = StateActionNet::new(8);
        net.train(&state(&[1], &[2, 3]), MentalAction::NextW).unwrap();
        net.train(&state(&[0], &[2, 7]), MentalAction::GetW).unwrap();
        let banks = net.export_input_banks().unwrap();
        for (m, bank) in banks.iter().enumerate() {
            for i in 0..2 {
                for j in 0..8 {
                    assert_eq!(bank.weight(j, i), net.input_weight(i, m, j));
                }
            }
        }
    }

    #[test]
    fn internal_actions_are_refused_while_answering() {
        let mut stm = Stm::new(8, 4);
        let mut ltm = Ltm::new(8, 4, 4);
        assert!(matches!(
            execute(MentalAction::StorePh, SessionMode::Exploitation, &mut stm, &mut ltm),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn names_round_trip() {
        for a in ELABORATION {
            assert_eq!(MentalAction::parse(a.name()), Some(a));
        }
        assert_eq!(
            serde_json::to_string(&MentalAction::WFromWk).unwrap(),
            "\"W_FROM_WK\""
        );
    }
}
