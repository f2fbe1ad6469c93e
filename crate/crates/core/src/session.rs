//! Operating modes: acquisition and association of sentences, exploration
//! towards teacher targets, reward, and answering with the learned policy.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::executive::{execute, Effect, MentalAction, SessionMode, StateActionNet};
use crate::lexicon::{tokenize, Command, Line, LineKind, Vocabulary, MAX_PHRASE};
use crate::ltm::Ltm;
use crate::rewarder::{EpochTrace, RewardKind};
use crate::state::InternalState;
use crate::stm::{phrase_from_words, phrase_is_empty, phrase_words, Phrase, StateLayout, Stm, GROUP_ROWS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    WordGroup,
    Phrase,
}

/// What the teacher wants an exploration to produce.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Target {
    pub kind: TargetKind,
    pub words: Vec<String>,
}

impl Target {
    pub fn word_group(text: &str) -> Self {
        Target {
            kind: TargetKind::WordGroup,
            words: text.split_whitespace().map(str::to_string).collect(),
        }
    }

    pub fn phrase(text: &str) -> Self {
        Target {
            kind: TargetKind::Phrase,
            words: text.split_whitespace().map(str::to_string).collect(),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.kind {
            TargetKind::WordGroup => "word_group",
            TargetKind::Phrase => "phrase",
        };
        write!(f, "{name} `{}`", self.words.join(" "))
    }
}

/// Decoded buffer contents.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BufferView {
    pub input_phrase: String,
    pub working_phrase: String,
    pub current_word: String,
    pub word_group: String,
    pub output_phrase: String,
    pub goal: String,
    pub goal_depth: usize,
    pub previous_phrases: Vec<String>,
    pub phrase_index: usize,
    pub group_index: usize,
    pub retrieval_miss: bool,
}

/// One executive step, as pushed to observers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepEvent {
    pub mode: SessionMode,
    pub action: MentalAction,
    pub changed: bool,
    /// Exploration attempt the step belongs to.
    pub attempt: Option<usize>,
    pub buffers: BufferView,
    /// Active neurons of every component after the step.
    pub state: InternalState,
}

pub type EventSink = Arc<dyn Fn(&StepEvent) + Send + Sync>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub lines: Vec<String>,
    /// Ended with DONE rather than the step cap or a stuck state.
    pub completed: bool,
    pub actions: Vec<MentalAction>,
}

impl Answer {
    pub fn text(&self) -> String {
        self.lines.join(" ")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reply {
    Silent,
    Acquired { phrase: usize, associations: usize },
    NewContext { context: usize },
    Explored { target: String, attempts: usize, steps: usize },
    ExplorationFailed { target: String, attempts: usize },
    Performed { actions: Vec<MentalAction> },
    Rewarded { reward: RewardKind, steps: usize, trained: usize },
    NothingToReward,
    Answer { answer: Answer },
}

impl Reply {
    /// The line a terminal shows for this reply, if any.
    pub fn text(&self) -> Option<String> {
        match self {
            Reply::Silent | Reply::Acquired { .. } | Reply::NewContext { .. } | Reply::Performed { .. } => None,
            Reply::Explored { target, attempts, .. } => {
                Some(format!("reached {target} after {attempts} attempts"))
            }
            Reply::ExplorationFailed { target, attempts } => {
                Some(format!("could not reach {target} in {attempts} attempts"))
            }
            Reply::Rewarded { reward, steps, .. } => Some(format!("{reward:?} reward on {steps} steps").to_lowercase()),
            Reply::NothingToReward => Some("nothing to reward".into()),
            Reply::Answer { answer } => {
                let text = answer.text();
                Some(if answer.completed || !text.is_empty() {
                    text
                } else {
                    "(no answer)".into()
                })
            }
        }
    }
}

/// Sizes and connection counts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub words: usize,
    pub phrases: usize,
    pub contexts: usize,
    pub associations: usize,
    pub policy_neurons: usize,
    pub distinct_states: usize,
    pub trace_steps: usize,
    pub epoch: u64,
    /// Stored entries of the learnable banks.
    pub learnable_allocated: u128,
    /// Connections the learnable banks represent.
    pub learnable_virtual: u128,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
struct Episode {
    /// Answer lines latched so far.
    lines: Vec<String>,
    /// The word group changed since it last went to the output.
    group_dirty: bool,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Record {
    IfChanged,
    Always,
    /// Record changed steps while the trace has room.
    WhileRoom,
}

enum Outcome {
    Success,
    Progress,
    Dead,
}

struct Checkpoint {
    stm: Stm,
    current: Option<usize>,
    trace: EpochTrace,
    episode: Episode,
}

struct Goal {
    kind: TargetKind,
    words: Vec<usize>,
    phrase: Phrase,
    label: String,
}

#[derive(Clone, Serialize, Deserialize)]
pub struct Session {
    config: Config,
    layout: StateLayout,
    vocab: Vocabulary,
    stm: Stm,
    ltm: Ltm,
    net: StateActionNet,
    trace: EpochTrace,
    rng: ChaCha8Rng,
    mode: SessionMode,
    episode: Episode,
    #[serde(skip)]
    attempt: Option<usize>,
    #[serde(skip)]
    sink: Option<EventSink>,
}

impl fmt::Debug for Session {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Session")
            .field("mode", &self.mode)
            .field("words", &self.vocab.len())
            .field("phrases", &self.ltm.phrase_count())
            .field("policy_neurons", &self.net.used())
            .finish_non_exhaustive()
    }
}

impl Session {
    pub fn new(config: Config) -> Result<Self> {
        config.validate()?;
        let layout = config.layout()?;
        Ok(Session {
            vocab: Vocabulary::new(config.vocab_capacity, config.seed),
            stm: Stm::new(config.vocab_capacity, config.goal_depth),
            ltm: Ltm::new(config.vocab_capacity, config.phrase_capacity, config.assoc_capacity),
            net: StateActionNet::new(config.saann_capacity),
            trace: EpochTrace::new(config.t_max),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            mode: SessionMode::Acquisition,
            episode: Episode::default(),
            attempt: None,
            sink: None,
            layout,
            config,
        })
    }

    /// Rebuilds derived lookup tables after deserialization.
    pub fn reindex(&mut self) -> Result<()> {
        self.vocab.reindex();
        self.ltm.reindex()?;
        self.net.reindex();
        self.stm.validate()
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn layout(&self) -> &StateLayout {
        &self.layout
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn stm(&self) -> &Stm {
        &self.stm
    }

    pub fn ltm(&self) -> &Ltm {
        &self.ltm
    }

    pub fn net(&self) -> &StateActionNet {
        &self.net
    }

    pub fn trace(&self) -> &EpochTrace {
        &self.trace
    }

    pub fn mode(&self) -> SessionMode {
        self.mode
    }

    pub fn set_sink(&mut self, sink: Option<EventSink>) {
        self.sink = sink;
    }

    /// Executive input for the current buffers.
    pub fn snapshot(&self) -> InternalState {
        self.stm.snapshot(&self.layout)
    }

    /// Every component regardless of ablation, for display.
    pub fn full_snapshot(&self) -> InternalState {
        self.stm.snapshot(&StateLayout::standard())
    }

    pub fn buffers(&self) -> BufferView {
        let d = |p: &[usize]| self.vocab.decode_phrase(p).unwrap_or_default();
        BufferView {
            input_phrase: d(&self.stm.input),
            working_phrase: d(&self.stm.working),
            current_word: d(&[self.stm.current_word]),
            word_group: d(&self.stm.group),
            output_phrase: d(&self.stm.output),
            goal: d(&self.stm.goal_top()),
            goal_depth: self.stm.goals.len(),
            previous_phrases: self.stm.previous.iter().map(|p| d(p)).collect(),
            phrase_index: self.stm.phrase_index,
            group_index: self.stm.group_index,
            retrieval_miss: self.stm.retrieval_miss,
        }
    }

    pub fn stats(&self) -> Stats {
        let vocab = self.vocab.bank();
        Stats {
            words: self.vocab.len() - 1,
            phrases: self.ltm.phrase_count(),
            contexts: self.ltm.contexts().iter().filter(|c| !c.is_empty()).count(),
            associations: self.ltm.association_count(),
            policy_neurons: self.net.used(),
            distinct_states: self.net.distinct_states(),
            trace_steps: self.trace.len(),
            epoch: self.trace.epoch(),
            learnable_allocated: vocab.allocated() as u128
                + self.ltm.learnable_allocated() as u128
                + self.net.allocated(),
            learnable_virtual: vocab.virtual_count() + self.ltm.learnable_virtual() + self.net.virtual_count(),
        }
    }

    pub fn process_text(&mut self, text: &str) -> Result<Reply> {
        let line = tokenize(text)?;
        self.process_line(&line)
    }

    pub fn process_line(&mut self, line: &Line) -> Result<Reply> {
        match &line.kind {
            LineKind::Comment => Ok(Reply::Silent),
            LineKind::ContextBreak => {
                self.ltm.begin_context();
                Ok(Reply::NewContext {
                    context: self.ltm.contexts().len() - 1,
                })
            }
            LineKind::Declarative => self.acquire(&line.tokens, false),
            LineKind::Question => {
                let reply = self.acquire(&line.tokens, true)?;
                if self.config.auto_exploit && self.net.used() > 0 {
                    let answer = self.exploit()?;
                    return Ok(Reply::Answer { answer });
                }
                Ok(reply)
            }
            LineKind::Command { command } => match command {
                Command::WordGroup => self.explore(&Target {
                    kind: TargetKind::WordGroup,
                    words: line.tokens.clone(),
                }),
                Command::Phrase => self.explore(&Target {
                    kind: TargetKind::Phrase,
                    words: line.tokens.clone(),
                }),
                Command::Reward => self.reward(RewardKind::Full),
                Command::PartialReward => self.reward(RewardKind::Partial),
                Command::Exploitation => Ok(Reply::Answer { answer: self.exploit()? }),
                Command::Action => {
                    let mut actions = Vec::new();
                    for name in &line.tokens {
                        let action = MentalAction::parse(name)
                            .ok_or_else(|| Error::Protocol(format!(".action {name}")))?;
                        self.perform(action)?;
                        actions.push(action);
                    }
                    Ok(Reply::Performed { actions })
                }
                Command::Save | Command::Load | Command::Stat | Command::Monitor => Err(Error::Protocol(format!(
                    ".{} is handled by the interface",
                    command.name()
                ))),
            },
        }
    }

    /// Opens an answer episode for a new question.
    fn begin_episode(&mut self) {
        self.trace.reset();
        self.episode = Episode::default();
        self.stm.goals.clear();
        self.stm.output = [0; MAX_PHRASE];
        self.stm.retrieval_miss = false;
    }

    /// Reads a sentence into the input buffer, memorizes it and associates
    /// every group of up to four consecutive words with it.
    pub fn acquire(&mut self, tokens: &[String], question: bool) -> Result<Reply> {
        if tokens.is_empty() {
            return Err(Error::Contract("empty sentence".into()));
        }
        if tokens.len() > MAX_PHRASE {
            return Err(Error::Length {
                words: tokens.len(),
                max: MAX_PHRASE,
            });
        }
        let words = tokens
            .iter()
            .map(|t| self.vocab.encode(t))
            .collect::<Result<Vec<_>>>()?;
        if question {
            self.begin_episode();
        }
        self.mode = SessionMode::Acquisition;
        self.stm.begin_input();
        for &w in &words {
            self.stm.acquire_word(w)?;
        }
        self.mode = SessionMode::Association;
        self.internal(MentalAction::PhFromInput)?;
        let phrase = match self.internal(MentalAction::StorePh)? {
            Effect::Stored(id) => id,
            other => return Err(Error::Contract(format!("STORE_PH gave {other:?}"))),
        };
        let n = words.len();
        let mut associations = 0;
        for len in 1..=n.min(GROUP_ROWS) {
            for start in 0..=n - len {
                self.internal(MentalAction::WFromWk)?;
                for _ in 0..start {
                    self.internal(MentalAction::NextW)?;
                }
                self.internal(MentalAction::FlushWg)?;
                for _ in 0..len {
                    self.internal(MentalAction::GetW)?;
                    self.internal(MentalAction::NextW)?;
                }
                self.internal(MentalAction::AssocGroup)?;
                associations += 1;
            }
        }
        self.episode.group_dirty = false;
        self.mode = if question {
            SessionMode::Exploration
        } else {
            SessionMode::Acquisition
        };
        Ok(Reply::Acquired { phrase, associations })
    }

    fn internal(&mut self, action: MentalAction) -> Result<Effect> {
        execute(action, self.mode, &mut self.stm, &mut self.ltm)
    }

    fn latch_output(&mut self) -> Result<()> {
        let out = self.stm.take_output();
        if !phrase_is_empty(&out) {
            self.stm.remember_previous(out);
            self.episode.lines.push(self.vocab.decode_phrase(&out)?);
        }
        Ok(())
    }

    /// Executes one elaboration action. Returns its effect and whether the
    /// buffers changed.
    fn step(&mut self, action: MentalAction, record: Record) -> Result<(Effect, bool)> {
        let before = self.stm.clone();
        let effect = execute(action, self.mode, &mut self.stm, &mut self.ltm)?;
        if matches!(effect, Effect::Continue | Effect::Done) {
            self.latch_output()?;
        }
        let changed = self.stm != before;
        let keep = match record {
            Record::IfChanged => changed,
            Record::Always => true,
            Record::WhileRoom => changed && !self.trace.is_full(),
        };
        if keep {
            let prior = before.snapshot(&self.layout);
            let after = self.stm.snapshot(&self.layout);
            if record == Record::Always || prior != after {
                self.trace.record(prior, action)?;
                // A step back into an earlier state closes a cycle; the
                // epoch keeps only the path without it.
                if record != Record::Always {
                    if let Some(i) = self.trace.steps().iter().position(|st| st.state == after) {
                        self.trace.truncate(i);
                    }
                }
            }
        }
        if before.group != self.stm.group {
            self.episode.group_dirty = true;
        }
        if action == MentalAction::WgOut && changed {
            self.episode.group_dirty = false;
        }
        if let Some(sink) = &self.sink {
            sink(&StepEvent {
                mode: self.mode,
                action,
                changed,
                attempt: self.attempt,
                buffers: self.buffers(),
                state: self.full_snapshot(),
            });
        }
        Ok((effect, changed))
    }

    /// Runs one teacher-chosen action and records it in the current epoch.
    pub fn perform(&mut self, action: MentalAction) -> Result<Reply> {
        if action.is_internal() {
            return Err(Error::Contract(format!("{action} cannot be chosen by the executive")));
        }
        if self.trace.is_full() {
            return Err(Error::Contract(format!("epoch exceeded {} steps", self.config.t_max)));
        }
        self.mode = SessionMode::Exploration;
        self.step(action, Record::IfChanged)?;
        Ok(Reply::Performed { actions: vec![action] })
    }

    fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            stm: self.stm.clone(),
            current: self.ltm.current(),
            trace: self.trace.clone(),
            episode: self.episode.clone(),
        }
    }

    fn restore(&mut self, cp: &Checkpoint) {
        self.stm = cp.stm.clone();
        self.ltm.set_current(cp.current);
        self.trace = cp.trace.clone();
        self.episode = cp.episode.clone();
    }

    fn resolve_target(&self, target: &Target) -> Option<Goal> {
        let words = target
            .words
            .iter()
            .map(|w| self.vocab.lookup(w))
            .collect::<Option<Vec<_>>>()?;
        if words.is_empty() || words.len() > MAX_PHRASE {
            return None;
        }
        Some(Goal {
            kind: target.kind,
            phrase: phrase_from_words(&words).ok()?,
            words,
            label: target.to_string(),
        })
    }

    /// Searches partially random action sequences until the buffers hold the
    /// target. Steps of the successful path stay in the current epoch.
    pub fn explore(&mut self, target: &Target) -> Result<Reply> {
        self.mode = SessionMode::Exploration;
        let Some(goal) = self.resolve_target(target) else {
            return Ok(Reply::ExplorationFailed {
                target: target.to_string(),
                attempts: 0,
            });
        };
        let start = self.checkpoint();
        let out_base = phrase_words(&self.stm.output).len();
        let mut resume = self.checkpoint();
        let max = self.config.exploration.max_attempts;
        let wanted = self.config.exploration.candidates;
        let mut best: Option<(usize, Checkpoint)> = None;
        let mut successes = 0;
        let mut attempts = 0;
        for attempt in 1..=max {
            attempts = attempt;
            self.restore(&resume);
            self.attempt = Some(attempt);
            // Longer chains only once shorter ones have had their share.
            let chain = 1 + (attempt - 1) * self.config.exploration.max_chain / max;
            match self.attempt_once(&goal, out_base, chain)? {
                Outcome::Success => {
                    let steps = self.trace.len();
                    if best.as_ref().map_or(true, |(s, _)| steps < *s) {
                        best = Some((steps, self.checkpoint()));
                    }
                    successes += 1;
                    if successes >= wanted {
                        break;
                    }
                }
                Outcome::Progress => resume = self.checkpoint(),
                Outcome::Dead => {}
            }
        }
        self.attempt = None;
        let Some((_, found)) = best else {
            self.restore(&start);
            return Ok(Reply::ExplorationFailed {
                target: goal.label,
                attempts,
            });
        };
        self.restore(&found);
        if goal.kind == TargetKind::Phrase {
            self.episode.group_dirty = false;
        }
        Ok(Reply::Explored {
            target: goal.label,
            attempts,
            steps: self.trace.len().saturating_sub(start.trace.len()),
        })
    }

    fn attempt_once(&mut self, goal: &Goal, out_base: usize, chain: usize) -> Result<Outcome> {
        let policy = self.config.exploration.clone();
        macro_rules! act {
            ($a:expr) => {
                if let Some(o) = self.explore_step($a, goal, out_base)? {
                    return Ok(o);
                }
            };
        }
        for _ in 0..chain {
            if self.rng.gen_bool(policy.p_ph_from_input) {
                act!(MentalAction::PhFromInput);
            }
            if !self.stm.goals.is_empty() && self.rng.gen_bool(policy.p_goal) {
                act!(MentalAction::DropGoal);
            }
            let len = phrase_words(&self.stm.working).len();
            if len == 0 {
                return Ok(Outcome::Dead);
            }
            act!(MentalAction::WFromWk);
            let n1 = self.rng.gen_range(0..len);
            for _ in 0..n1 {
                act!(MentalAction::NextW);
            }
            act!(MentalAction::FlushWg);
            let n2 = self.rng.gen_range(1..=GROUP_ROWS.min(len - n1));
            for _ in 0..n2 {
                self.step(MentalAction::GetW, Record::IfChanged)?;
                act!(MentalAction::NextW);
            }
            if self.rng.gen_bool(policy.p_wg_out) {
                act!(MentalAction::WgOut);
            }
            if self.rng.gen_bool(policy.p_retr_as) {
                act!(MentalAction::RetrAs);
            }
            if self.rng.gen_bool(policy.p_get_start_ph) {
                act!(MentalAction::GetStartPh);
            }
            if self.rng.gen_bool(policy.p_get_next_ph) {
                let n3 = self.rng.gen_range(1..=policy.n3_max);
                for _ in 0..n3 {
                    act!(MentalAction::GetNextPh);
                }
            }
            if self.stm.goals.len() < self.stm.goal_depth && self.rng.gen_bool(policy.p_goal) {
                act!(MentalAction::PushGoal);
            }
        }
        Ok(Outcome::Dead)
    }

    fn explore_step(&mut self, action: MentalAction, goal: &Goal, out_base: usize) -> Result<Option<Outcome>> {
        if self.trace.is_full() {
            return Ok(Some(Outcome::Dead));
        }
        let (_, changed) = self.step(action, Record::IfChanged)?;
        if !changed && action != MentalAction::NextW {
            return Ok(None);
        }
        let produced = &phrase_words(&self.stm.output)[out_base..];
        Ok(match goal.kind {
            TargetKind::Phrase if action == MentalAction::WgOut => Some(Outcome::Dead),
            TargetKind::Phrase => (self.stm.working == goal.phrase).then_some(Outcome::Success),
            TargetKind::WordGroup if action == MentalAction::WgOut => {
                if produced == goal.words.as_slice() {
                    Some(Outcome::Success)
                } else if goal.words.starts_with(produced) {
                    Some(Outcome::Progress)
                } else {
                    Some(Outcome::Dead)
                }
            }
            TargetKind::WordGroup => {
                let group = phrase_words(&self.stm.group);
                let complete = !group.is_empty()
                    && produced.len() + group.len() == goal.words.len()
                    && goal.words.starts_with(produced)
                    && goal.words[produced.len()..] == group[..];
                complete.then_some(Outcome::Success)
            }
        })
    }

    /// Trains the executive on the current epoch, closing it with DONE or
    /// CONTINUE. A word group not yet sent to the output is sent first.
    pub fn reward(&mut self, kind: RewardKind) -> Result<Reply> {
        let pending = self.episode.group_dirty && !phrase_is_empty(&self.stm.group);
        if self.trace.is_empty() && !pending {
            return Ok(Reply::NothingToReward);
        }
        self.mode = SessionMode::Reward;
        if pending {
            self.step(MentalAction::WgOut, Record::Always)?;
        }
        self.step(kind.terminal(), Record::Always)?;
        let steps = self.trace.len();
        let trained = self.trace.replay(&mut self.net, self.config.copies())?;
        self.trace.reset();
        self.episode.group_dirty = false;
        self.mode = SessionMode::Exploration;
        Ok(Reply::Rewarded {
            reward: kind,
            steps,
            trained,
        })
    }

    /// Answers with the learned policy until DONE, a stuck state or the step
    /// cap. An action that changes nothing is replaced by the action of the
    /// next nearest stored state.
    pub fn exploit(&mut self) -> Result<Answer> {
        if self.net.used() == 0 {
            return Err(Error::PolicyEmpty);
        }
        self.mode = SessionMode::Exploitation;
        self.trace.reset();
        let first_line = self.episode.lines.len();
        let mut actions = Vec::new();
        let mut completed = false;
        'steps: for _ in 0..self.config.t_max {
            let state = self.snapshot();
            let chosen = self.net.select(&state, self.config.k)?.action;
            let mut fallback = None;
            let mut action = chosen;
            loop {
                match self.step(action, Record::WhileRoom) {
                    Ok((Effect::Done, _)) => {
                        actions.push(action);
                        completed = true;
                        break 'steps;
                    }
                    Ok((_, true)) => {
                        actions.push(action);
                        break;
                    }
                    Ok((_, false)) | Err(Error::Stack(_)) => {}
                    Err(e) => return Err(e),
                }
                if fallback.is_none() {
                    let mut ranked = self.net.ranked_actions(&state)?;
                    ranked.retain(|&a| a != chosen);
                    ranked.reverse();
                    fallback = Some(ranked);
                }
                match fallback.as_mut().and_then(Vec::pop) {
                    Some(next) => action = next,
                    None => break 'steps,
                }
            }
        }
        self.mode = SessionMode::Exploration;
        let lines = self.episode.lines[first_line..].to_vec();
        if completed {
            self.episode.lines.clear();
        }
        Ok(Answer {
            lines,
            completed,
            actions,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session() -> Session {
        Session::new(Config {
            vocab_capacity: 256,
            phrase_capacity: 512,
            assoc_capacity: 4096,
            saann_capacity: 2048,
            ..Config::default()
        })
        .unwrap()
    }

    #[test]
    fn windows_of_up_to_four_words_are_associated() {
        let mut s = session();
        match s.process_text("the turtle is a reptile").unwrap() {
            Reply::Acquired { associations, .. } => assert_eq!(associations, 14),
            other => panic!("{other:?}"),
        }
        match s.process_text("hello").unwrap() {
            Reply::Acquired { associations, .. } => assert_eq!(associations, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn untrained_exploitation_is_refused() {
        let mut s = session();
        s.process_text("? tell me a reptile").unwrap();
        assert!(matches!(s.process_text(".exploitation"), Err(Error::PolicyEmpty)));
    }

    #[test]
    fn unknown_target_word_fails_at_once() {
        let mut s = session();
        s.process_text("? tell me a reptile").unwrap();
        let r = s.process_text(".word_group zebra").unwrap();
        assert_eq!(
            r,
            Reply::ExplorationFailed {
                target: "word_group `zebra`".into(),
                attempts: 0
            }
        );
        assert!(s.trace().is_empty());
    }

    #[test]
    fn exploration_leaves_the_policy_untouched() {
        let mut s = session();
        s.process_text("the turtle is a reptile").unwrap();
        s.process_text("? tell me a reptile").unwrap();
        let r = s.process_text(".word_group reptile").unwrap();
        assert!(matches!(r, Reply::Explored { .. }), "{r:?}");
        assert_eq!(s.net().used(), 0);
        assert!(!s.trace().is_empty());
    }

    #[test]
    fn context_breaks_open_contexts() {
        let mut s = session();
        s.process_text("a b").unwrap();
        assert_eq!(s.process_text("#####").unwrap(), Reply::NewContext { context: 1 });
        assert_eq!(s.process_text("#####").unwrap(), Reply::NewContext { context: 1 });
        assert_eq!(s.process_text("# note").unwrap(), Reply::Silent);
    }

    #[test]
    fn interface_commands_are_not_dispatched_here() {
        let mut s = session();
        assert!(matches!(s.process_text(".stat"), Err(Error::Protocol(_))));
    }
}
