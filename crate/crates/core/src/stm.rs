//! Short-term memory: phrase buffers, the word group, indexes, the goal
//! stack, the comparison structure and the snapshot fed to the executive.
//!
//! Word-slot components encode a (row, word) pair as neuron
//! `word * rows + row`. Empty rows hold the null word, so every buffer keeps
//! exactly one active neuron per row.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{MAX_PHRASE, NULL_WORD};
use crate::ssm::{Weight, UNIT};
use crate::state::{ComponentState, InternalState};

/// Rows of the word-group buffer.
pub const GROUP_ROWS: usize = 4;
/// Input phrases remembered by the previous-phrase store.
pub const PREVIOUS_PHRASES: usize = 2;
/// Positions of the phrase index: one per word plus one past the end.
pub const PHRASE_POSITIONS: usize = MAX_PHRASE + 1;
/// Positions of the word-group index.
pub const GROUP_POSITIONS: usize = GROUP_ROWS + 1;

pub type Phrase = [usize; MAX_PHRASE];

pub const EMPTY_PHRASE: Phrase = [NULL_WORD; MAX_PHRASE];

pub fn phrase_from_words(words: &[usize]) -> Result<Phrase> {
    if words.len() > MAX_PHRASE {
        return Err(Error::Length {
            words: words.len(),
            max: MAX_PHRASE,
        });
    }
    let mut p = EMPTY_PHRASE;
    p[..words.len()].copy_from_slice(words);
    Ok(p)
}

/// Non-null words of a phrase, in row order.
pub fn phrase_words(p: &[usize]) -> Vec<usize> {
    p.iter().copied().filter(|&w| w != NULL_WORD).collect()
}

pub fn phrase_is_empty(p: &[usize]) -> bool {
    p.iter().all(|&w| w == NULL_WORD)
}

// ============================================================================
// Gatekeepers
// ============================================================================

/// Gatekeeper neurons that open signal paths inside the short-term memory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gate {
    /// Input phrase to working phrase.
    WkFlag,
    /// Reset of the phrase index.
    StartPhIFlag,
    /// Increment of the phrase index.
    NextPhIFlag,
    /// Current word to the word group.
    GetFlag,
    /// Flush of the word group.
    FlushWgFlag,
    /// Word group to the output phrase.
    WgOutFlag,
    PushGoalFlag,
    DropGoalFlag,
    /// Word group as a cue into long-term memory.
    RetrAsFlag,
    /// First phrase of the current context.
    StartPhFlag,
    /// Next phrase of the current context.
    NextPhFlag,
    /// Working phrase into the phrase store.
    StorePhFlag,
    /// Word group and phrase into the association store.
    AssocFlag,
    /// Output phrase latched as a partial answer.
    ContinueFlag,
    /// Output phrase latched as the final answer.
    DoneFlag,
}

/// The set of gatekeepers that are on during one cycle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GateSet(u16);

impl GateSet {
    pub fn of(gates: &[Gate]) -> Self {
        let mut s = GateSet(0);
        for &g in gates {
            s.0 |= 1 << g as u16;
        }
        s
    }

    pub fn is_on(self, g: Gate) -> bool {
        self.0 & (1 << g as u16) != 0
    }
}

// ============================================================================
// Snapshot layout
// ============================================================================

pub const COMPARISON: &str = "comparison";
pub const GOAL_STACK: &str = "goal_stack";
pub const PREVIOUS: &str = "previous_phrases";
pub const INDEXES: &str = "indexes";
pub const INPUT_PHRASE: &str = "input_phrase";
pub const CURRENT_WORD: &str = "current_word";
pub const WORKING_PHRASE: &str = "working_phrase";
pub const WORD_GROUP: &str = "word_group";
pub const OUTPUT_PHRASE: &str = "output_phrase";
pub const RETRIEVAL_STATUS: &str = "retrieval_status";

/// Every snapshot component in order.
pub const COMPONENTS: [&str; 10] = [
    COMPARISON,
    GOAL_STACK,
    PREVIOUS,
    INDEXES,
    INPUT_PHRASE,
    CURRENT_WORD,
    WORKING_PHRASE,
    WORD_GROUP,
    OUTPUT_PHRASE,
    RETRIEVAL_STATUS,
];

/// Monitored comparison pairs: working rows x goal rows, group rows x
/// working rows, group rows x goal rows, current word x goal rows, current
/// word x most recent previous phrase and group rows x output rows.
pub const COMPARISON_PAIRS: usize = MAX_PHRASE * MAX_PHRASE
    + GROUP_ROWS * MAX_PHRASE
    + GROUP_ROWS * MAX_PHRASE
    + MAX_PHRASE
    + MAX_PHRASE
    + GROUP_ROWS * MAX_PHRASE;

/// Which components enter the snapshot, with their magnitudes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateLayout {
    pub components: Vec<(String, Weight)>,
}

impl StateLayout {
    /// All components, magnitude 5 for the comparison structure and 1
    /// elsewhere.
    pub fn standard() -> Self {
        StateLayout {
            components: COMPONENTS
                .iter()
                .map(|&c| {
                    let w = if c == COMPARISON { 5 * UNIT } else { UNIT };
                    (c.to_string(), w)
                })
                .collect(),
        }
    }

    pub fn without(mut self, removed: &[String]) -> Self {
        self.components.retain(|(c, _)| !removed.contains(c));
        self
    }

    pub fn with_magnitude(mut self, component: &str, w: Weight) -> Result<Self> {
        let slot = self
            .components
            .iter_mut()
            .find(|(c, _)| c == component)
            .ok_or_else(|| Error::Config(format!("unknown state component `{component}`")))?;
        slot.1 = w;
        Ok(self)
    }
}

// ============================================================================
// The buffers
// ============================================================================

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stm {
    /// Word columns of every word-slot layer.
    pub capacity: usize,
    pub goal_depth: usize,
    pub input: Phrase,
    pub working: Phrase,
    pub output: Phrase,
    pub group: [usize; GROUP_ROWS],
    pub group_index: usize,
    pub phrase_index: usize,
    pub current_word: usize,
    pub previous: [Phrase; PREVIOUS_PHRASES],
    pub goals: Vec<Phrase>,
    pub retrieval_miss: bool,
    /// Set once the current input has entered the previous-phrase store.
    pub input_latched: bool,
}

impl Stm {
    pub fn new(capacity: usize, goal_depth: usize) -> Self {
        Stm {
            capacity,
            goal_depth,
            input: EMPTY_PHRASE,
            working: EMPTY_PHRASE,
            output: EMPTY_PHRASE,
            group: [NULL_WORD; GROUP_ROWS],
            group_index: 0,
            phrase_index: 0,
            current_word: NULL_WORD,
            previous: [EMPTY_PHRASE; PREVIOUS_PHRASES],
            goals: Vec::new(),
            retrieval_miss: false,
            input_latched: true,
        }
    }

    /// Clears the input buffer and the phrase index before a new line.
    pub fn begin_input(&mut self) {
        self.input = EMPTY_PHRASE;
        self.phrase_index = 0;
        self.input_latched = false;
        self.refresh_current_word();
    }

    pub fn acquire_word(&mut self, w: usize) -> Result<()> {
        if self.phrase_index >= MAX_PHRASE {
            return Err(Error::Length {
                words: self.phrase_index + 1,
                max: MAX_PHRASE,
            });
        }
        self.input[self.phrase_index] = w;
        self.phrase_index += 1;
        self.refresh_current_word();
        Ok(())
    }

    /// Pushes a phrase into the previous-phrase store as the most recent one.
    pub fn remember_previous(&mut self, p: Phrase) {
        for i in (1..PREVIOUS_PHRASES).rev() {
            self.previous[i] = self.previous[i - 1];
        }
        self.previous[0] = p;
    }

    fn refresh_current_word(&mut self) {
        self.current_word = if self.phrase_index < MAX_PHRASE {
            self.working[self.phrase_index]
        } else {
            NULL_WORD
        };
    }

    /// Sets the working phrase directly, as forced by long-term memory.
    pub fn force_working(&mut self, p: Phrase) {
        self.working = p;
        self.refresh_current_word();
    }

    pub fn goal_top(&self) -> Phrase {
        self.goals.last().copied().unwrap_or(EMPTY_PHRASE)
    }

    /// One update of the buffers with the given gatekeepers on.
    pub fn cycle(&mut self, gates: GateSet) -> Result<()> {
        if gates.is_on(Gate::PushGoalFlag) && self.goals.len() >= self.goal_depth {
            return Err(Error::Stack(format!("goal stack full at depth {}", self.goal_depth)));
        }
        if gates.is_on(Gate::DropGoalFlag) && self.goals.is_empty() {
            return Err(Error::Stack("goal stack is empty".into()));
        }
        if gates.is_on(Gate::WkFlag) {
            self.working = self.input;
            if !self.input_latched {
                self.remember_previous(self.input);
                self.input_latched = true;
            }
        }
        if gates.is_on(Gate::StartPhIFlag) {
            self.phrase_index = 0;
        }
        if gates.is_on(Gate::NextPhIFlag) && self.phrase_index < MAX_PHRASE {
            self.phrase_index += 1;
        }
        if gates.is_on(Gate::FlushWgFlag) {
            self.group = [NULL_WORD; GROUP_ROWS];
            self.group_index = 0;
        }
        if gates.is_on(Gate::GetFlag)
            && self.current_word != NULL_WORD
            && self.group_index < GROUP_ROWS
        {
            self.group[self.group_index] = self.current_word;
            self.group_index += 1;
        }
        if gates.is_on(Gate::WgOutFlag) {
            let mut len = phrase_words(&self.output).len();
            for &w in self.group.iter().filter(|&&w| w != NULL_WORD) {
                if len < MAX_PHRASE {
                    self.output[len] = w;
                    len += 1;
                }
            }
        }
        if gates.is_on(Gate::PushGoalFlag) {
            self.goals.push(self.working);
        }
        if gates.is_on(Gate::DropGoalFlag) {
            if let Some(p) = self.goals.pop() {
                self.working = p;
            }
        }
        self.refresh_current_word();
        Ok(())
    }

    /// Takes the output phrase as a finished line and clears the buffer.
    pub fn take_output(&mut self) -> Phrase {
        std::mem::replace(&mut self.output, EMPTY_PHRASE)
    }

    /// Equality flags of the monitored pairs, in a fixed order.
    pub fn comparisons(&self) -> Vec<bool> {
        let goal = self.goal_top();
        let mut eq = Vec::with_capacity(COMPARISON_PAIRS);
        for &w in &self.working {
            for &g in &goal {
                eq.push(w == g);
            }
        }
        for &c in &self.group {
            for &w in &self.working {
                eq.push(c == w);
            }
        }
        for &c in &self.group {
            for &g in &goal {
                eq.push(c == g);
            }
        }
        for &g in &goal {
            eq.push(self.current_word == g);
        }
        for &p in &self.previous[0] {
            eq.push(self.current_word == p);
        }
        for &c in &self.group {
            for &o in &self.output {
                eq.push(c == o);
            }
        }
        eq
    }

    fn rows_active(&self, rows: &[usize]) -> Vec<usize> {
        let n = rows.len();
        let mut v: Vec<usize> = rows
            .iter()
            .enumerate()
            .map(|(r, &w)| w * n + r)
            .collect();
        v.sort_unstable();
        v
    }

    fn component(&self, name: &str) -> (usize, Vec<usize>) {
        let cap = self.capacity;
        match name {
            COMPARISON => {
                let active = self
                    .comparisons()
                    .into_iter()
                    .enumerate()
                    .map(|(p, eq)| 2 * p + usize::from(!eq))
                    .collect();
                (2 * COMPARISON_PAIRS, active)
            }
            GOAL_STACK => (cap * MAX_PHRASE, self.rows_active(&self.goal_top())),
            PREVIOUS => {
                let rows: Vec<usize> = self.previous.iter().flatten().copied().collect();
                (cap * rows.len(), self.rows_active(&rows))
            }
            INDEXES => (
                PHRASE_POSITIONS + GROUP_POSITIONS,
                vec![self.phrase_index, PHRASE_POSITIONS + self.group_index],
            ),
            INPUT_PHRASE => (cap * MAX_PHRASE, self.rows_active(&self.input)),
            CURRENT_WORD => (cap, vec![self.current_word]),
            WORKING_PHRASE => (cap * MAX_PHRASE, self.rows_active(&self.working)),
            WORD_GROUP => (cap * GROUP_ROWS, self.rows_active(&self.group)),
            OUTPUT_PHRASE => (cap * MAX_PHRASE, self.rows_active(&self.output)),
            RETRIEVAL_STATUS => (2, vec![usize::from(self.retrieval_miss)]),
            other => unreachable!("layout names unknown component {other}"),
        }
    }

    pub fn snapshot(&self, layout: &StateLayout) -> InternalState {
        InternalState {
            components: layout
                .components
                .iter()
                .map(|(name, w)| {
                    let (size, active) = self.component(name);
                    ComponentState {
                        name: name.clone(),
                        size,
                        active,
                        w_max: *w,
                    }
                })
                .collect(),
        }
    }

    /// Checks the buffer invariants that the snapshot relies on.
    pub fn validate(&self) -> Result<()> {
        let words = self
            .input
            .iter()
            .chain(&self.working)
            .chain(&self.output)
            .chain(&self.group)
            .chain(self.previous.iter().flatten())
            .chain(self.goals.iter().flatten())
            .chain(std::iter::once(&self.current_word));
        if let Some(w) = words.into_iter().find(|&&w| w >= self.capacity) {
            return Err(Error::Integrity(format!("word {w} beyond capacity {}", self.capacity)));
        }
        if self.phrase_index > MAX_PHRASE || self.group_index > GROUP_ROWS {
            return Err(Error::Integrity("index out of range".into()));
        }
        if self.goals.len() > self.goal_depth {
            return Err(Error::Integrity("goal stack deeper than its limit".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loaded(words: &[usize]) -> Stm {
        let mut stm = Stm::new(64, 4);
        stm.begin_input();
        for &w in words {
            stm.acquire_word(w).unwrap();
        }
        stm.cycle(GateSet::of(&[Gate::WkFlag])).unwrap();
        stm
    }

    fn run(stm: &mut Stm, gates: &[Gate]) {
        stm.cycle(GateSet::of(gates)).unwrap();
    }

    #[test]
    fn acquisition_fills_rows_from_the_start() {
        let stm = loaded(&[5, 6, 7]);
        assert_eq!(&stm.input[..4], &[5, 6, 7, NULL_WORD]);
        assert_eq!(stm.working, stm.input);
        assert_eq!(stm.previous[0], stm.input);
        assert_eq!(stm.phrase_index, 3);
    }

    #[test]
    fn eleventh_word_is_rejected() {
        let mut stm = Stm::new(64, 4);
        stm.begin_input();
        for w in 1..=10 {
            stm.acquire_word(w).unwrap();
        }
        assert!(matches!(stm.acquire_word(11), Err(Error::Length { .. })));
    }

    #[test]
    fn copying_the_input_is_idempotent() {
        let mut stm = loaded(&[5, 6]);
        let before = stm.clone();
        run(&mut stm, &[Gate::WkFlag]);
        assert_eq!(before, stm);
    }

    #[test]
    fn previous_store_keeps_the_last_two_inputs() {
        let mut stm = loaded(&[5, 6]);
        stm.begin_input();
        stm.acquire_word(9).unwrap();
        run(&mut stm, &[Gate::WkFlag]);
        assert_eq!(phrase_words(&stm.previous[0]), vec![9]);
        assert_eq!(phrase_words(&stm.previous[1]), vec![5, 6]);
    }

    #[test]
    fn group_extraction() {
        // "tell me a reptile": skip two words, take two.
        let mut stm = loaded(&[10, 11, 12, 13]);
        run(&mut stm, &[Gate::StartPhIFlag]);
        run(&mut stm, &[Gate::NextPhIFlag]);
        run(&mut stm, &[Gate::NextPhIFlag]);
        run(&mut stm, &[Gate::FlushWgFlag]);
        for _ in 0..2 {
            run(&mut stm, &[Gate::GetFlag]);
            run(&mut stm, &[Gate::NextPhIFlag]);
        }
        assert_eq!(stm.group, [12, 13, NULL_WORD, NULL_WORD]);
        run(&mut stm, &[Gate::WgOutFlag]);
        assert_eq!(phrase_words(&stm.output), vec![12, 13]);
        run(&mut stm, &[Gate::FlushWgFlag]);
        assert_eq!(stm.group, [NULL_WORD; GROUP_ROWS]);
        assert_eq!(stm.group_index, 0);
    }

    #[test]
    fn index_past_the_end_reads_null() {
        let mut stm = loaded(&[10]);
        run(&mut stm, &[Gate::StartPhIFlag]);
        for _ in 0..12 {
            run(&mut stm, &[Gate::NextPhIFlag]);
        }
        assert_eq!(stm.current_word, NULL_WORD);
        assert_eq!(stm.phrase_index, MAX_PHRASE);
    }

    #[test]
    fn closed_gate_leaves_working_phrase() {
        let mut stm = loaded(&[5]);
        stm.begin_input();
        stm.acquire_word(8).unwrap();
        let before = stm.working;
        run(&mut stm, &[Gate::NextPhIFlag]);
        assert_eq!(stm.working, before);
    }

    #[test]
    fn goal_stack_is_lifo_and_bounded() {
        let mut stm = loaded(&[5, 6]);
        let start = stm.clone();
        run(&mut stm, &[Gate::PushGoalFlag]);
        assert_eq!(phrase_words(&stm.goal_top()), vec![5, 6]);
        run(&mut stm, &[Gate::DropGoalFlag]);
        assert_eq!(stm.goals, start.goals);
        for _ in 0..4 {
            run(&mut stm, &[Gate::PushGoalFlag]);
        }
        assert!(matches!(
            stm.cycle(GateSet::of(&[Gate::PushGoalFlag])),
            Err(Error::Stack(_))
        ));
        let mut empty = loaded(&[5]);
        assert!(matches!(
            empty.cycle(GateSet::of(&[Gate::DropGoalFlag])),
            Err(Error::Stack(_))
        ));
    }

    #[test]
    fn goal_top_changes_the_snapshot() {
        let mut stm = loaded(&[5, 6]);
        let layout = StateLayout::standard();
        let before = stm.snapshot(&layout);
        run(&mut stm, &[Gate::PushGoalFlag]);
        let after = stm.snapshot(&layout);
        assert_ne!(
            before.component(GOAL_STACK).unwrap().active,
            after.component(GOAL_STACK).unwrap().active
        );
    }

    #[test]
    fn empty_buffers_compare_equal() {
        let stm = Stm::new(8, 4);
        assert!(stm.comparisons().iter().all(|&e| e));
        assert_eq!(stm.comparisons().len(), COMPARISON_PAIRS);
    }

    #[test]
    fn group_matches_working_slots() {
        // "the lizard is a reptile" against the group "a reptile".
        let mut stm = loaded(&[1, 2, 3, 4, 5]);
        stm.group = [4, 5, NULL_WORD, NULL_WORD];
        let eq = stm.comparisons();
        let base = MAX_PHRASE * MAX_PHRASE;
        assert!(eq[base + 3]);
        assert!(eq[base + MAX_PHRASE + 4]);
        assert!(!eq[base + 4]);
    }

    #[test]
    fn one_word_change_flips_only_its_pairs() {
        let mut stm = loaded(&[1, 2, 3]);
        run(&mut stm, &[Gate::PushGoalFlag]);
        stm.group = [2, 7, NULL_WORD, NULL_WORD];
        let before = stm.comparisons();
        stm.working[1] = 9;
        let after = stm.comparisons();
        let flipped: Vec<usize> = (0..before.len()).filter(|&i| before[i] != after[i]).collect();
        let base = MAX_PHRASE * MAX_PHRASE;
        let touches_row = |i: usize| {
            (i < base && i / MAX_PHRASE == 1)
                || (base..base + GROUP_ROWS * MAX_PHRASE).contains(&i) && (i - base) % MAX_PHRASE == 1
        };
        assert!(!flipped.is_empty());
        assert!(flipped.iter().all(|&i| touches_row(i)));
    }

    #[test]
    fn snapshot_counts_are_stable() {
        let layout = StateLayout::standard();
        let mut stm = loaded(&[1, 2, 3]);
        let counts = stm.snapshot(&layout).active_counts();
        run(&mut stm, &[Gate::PushGoalFlag]);
        run(&mut stm, &[Gate::GetFlag]);
        run(&mut stm, &[Gate::WgOutFlag]);
        assert_eq!(stm.snapshot(&layout).active_counts(), counts);
        assert_eq!(stm.snapshot(&layout), stm.snapshot(&layout));
    }
}
