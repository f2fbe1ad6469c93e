//! Word to neuron mapping and the line protocol.
//!
//! Each word is presented as a fixed-width grid of one-hot character nodes.
//! The input-word layer is fully connected to the grid through a learnable
//! bank with seeded random initial weights. A word's winner neuron is
//! imprinted with the discrete Hebbian rule, so presenting the word again
//! always selects the same neuron.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ssm::{propagate, top_k, ConnectionBank, BankKind, Weight, UNIT};

/// Characters per word in the input grid.
pub const WORD_WIDTH: usize = 24;
/// Distinct character codes per grid column.
pub const CHAR_CODES: usize = 128;
/// Longest phrase the buffers hold.
pub const MAX_PHRASE: usize = 10;
/// Index of the null word in every word-indexed layer.
pub const NULL_WORD: usize = 0;

// ============================================================================
// Lines
// ============================================================================

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Reward,
    PartialReward,
    WordGroup,
    Phrase,
    Exploitation,
    Save,
    Load,
    Stat,
    Monitor,
    /// Teacher-forced mental action.
    Action,
}

impl Command {
    pub const ALL: [Command; 10] = [
        Command::Reward,
        Command::PartialReward,
        Command::WordGroup,
        Command::Phrase,
        Command::Exploitation,
        Command::Save,
        Command::Load,
        Command::Stat,
        Command::Monitor,
        Command::Action,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Reward => "reward",
            Command::PartialReward => "partial_reward",
            Command::WordGroup => "word_group",
            Command::Phrase => "phrase",
            Command::Exploitation => "exploitation",
            Command::Save => "save",
            Command::Load => "load",
            Command::Stat => "stat",
            Command::Monitor => "monitor",
            Command::Action => "action",
        }
    }

    pub fn parse(name: &str) -> Option<Command> {
        Command::ALL.into_iter().find(|c| c.name() == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LineKind {
    Declarative,
    Question,
    Command { command: Command },
    Comment,
    ContextBreak,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Line {
    pub kind: LineKind,
    /// Words of a sentence, or the arguments of a command.
    pub tokens: Vec<String>,
}

impl Line {
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

fn check_length(tokens: &[String]) -> Result<()> {
    if tokens.len() > MAX_PHRASE {
        return Err(Error::Length {
            words: tokens.len(),
            max: MAX_PHRASE,
        });
    }
    Ok(())
}

/// Splits one line of the teaching protocol.
pub fn tokenize(text: &str) -> Result<Line> {
    let trimmed = text.trim();
    if trimmed.starts_with("#####") {
        return Ok(Line {
            kind: LineKind::ContextBreak,
            tokens: Vec::new(),
        });
    }
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return Ok(Line {
            kind: LineKind::Comment,
            tokens: vec![trimmed.trim_start_matches('#').trim().to_string()],
        });
    }
    let mut tokens: Vec<String> = trimmed.split_whitespace().map(str::to_string).collect();
    if let Some(rest) = trimmed.strip_prefix('.') {
        let name = rest.split_whitespace().next().unwrap_or("");
        let command = Command::parse(name).ok_or_else(|| Error::Protocol(format!(".{name}")))?;
        tokens.remove(0);
        if matches!(command, Command::Phrase | Command::WordGroup | Command::Action) {
            if tokens.is_empty() {
                return Err(Error::Protocol(format!(".{name} needs a target")));
            }
            check_length(&tokens)?;
        }
        return Ok(Line {
            kind: LineKind::Command { command },
            tokens,
        });
    }
    if trimmed.starts_with('?') {
        if tokens[0] == "?" {
            tokens.remove(0);
        } else {
            tokens[0] = tokens[0].trim_start_matches('?').to_string();
        }
        check_length(&tokens)?;
        return Ok(Line {
            kind: LineKind::Question,
            tokens,
        });
    }
    check_length(&tokens)?;
    Ok(Line {
        kind: LineKind::Declarative,
        tokens,
    })
}

// ============================================================================
// Vocabulary
// ============================================================================

fn char_code(c: char) -> usize {
    let code = c as usize;
    if code < CHAR_CODES {
        code
    } else {
        CHAR_CODES - 1
    }
}

/// Active grid nodes for `word`: one per column, blanks padded with code 0.
pub fn ascii_pattern(word: &str) -> Result<Vec<usize>> {
    let chars: Vec<char> = word.chars().collect();
    if chars.len() > WORD_WIDTH {
        return Err(Error::Contract(format!(
            "word `{word}` is longer than {WORD_WIDTH} characters"
        )));
    }
    Ok((0..WORD_WIDTH)
        .map(|col| col * CHAR_CODES + chars.get(col).map_or(0, |&c| char_code(c)))
        .collect())
}

/// Deterministic small initial weight for an untrained grid-to-word pair.
fn initial_weight(seed: u64, pre: usize, post: usize) -> Weight {
    let mut x = seed ^ ((pre as u64) << 32) ^ (post as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x ^= x >> 33;
    x = x.wrapping_mul(0xff51_afd7_ed55_8ccd);
    x ^= x >> 33;
    x = x.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    x ^= x >> 33;
    // Uniform in [-5, 5] thousandths: far below any imprinted weight.
    (x % 11) as Weight - 5
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Vocabulary {
    #[serde(skip)]
    entries: HashMap<String, usize>,
    surfaces: Vec<String>,
    capacity: usize,
    seed: u64,
    bank: ConnectionBank,
    used: BTreeSet<usize>,
}

impl Vocabulary {
    pub fn new(capacity: usize, seed: u64) -> Self {
        let bank = ConnectionBank::new(
            "ascii",
            "IW",
            BankKind::Learnable,
            WORD_WIDTH * CHAR_CODES,
            capacity,
            UNIT,
        );
        let mut used = BTreeSet::new();
        used.insert(NULL_WORD);
        Vocabulary {
            entries: HashMap::new(),
            surfaces: vec![String::new()],
            capacity,
            seed,
            bank,
            used,
        }
    }

    /// Allocated words plus the null word.
    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfaces.len() <= 1
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn bank(&self) -> &ConnectionBank {
        &self.bank
    }

    pub fn reindex(&mut self) {
        self.bank.reindex();
        self.entries = self
            .surfaces
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, w)| (w.clone(), i))
            .collect();
    }

    pub fn lookup(&self, surface: &str) -> Option<usize> {
        self.entries.get(surface).copied()
    }

    pub fn surface(&self, index: usize) -> Option<&str> {
        self.surfaces.get(index).map(String::as_str)
    }

    /// Input totals of every input-word neuron for `pattern`.
    fn signal(&self, pattern: &[usize]) -> Vec<Weight> {
        let raw = propagate(self.capacity, &[(&self.bank, pattern)], None)
            .expect("grid bank matches the input-word layer");
        let mut y = raw.y;
        for (post, v) in y.iter_mut().enumerate() {
            if !self.used.contains(&post) {
                *v += pattern
                    .iter()
                    .map(|&pre| initial_weight(self.seed, pre, post))
                    .sum::<Weight>();
            }
        }
        y
    }

    /// Runs the input-word layer on `surface` and returns the winner: the
    /// imprinted neuron whose weights match the word exactly, if any.
    pub fn recognize(&self, surface: &str) -> Result<Option<usize>> {
        let pattern = ascii_pattern(surface)?;
        let y = self.signal(&pattern);
        let winner = top_k(&y, 1)[0];
        let exact = WORD_WIDTH as Weight * UNIT;
        Ok((y[winner] == exact).then_some(winner))
    }

    /// Index of `surface`, imprinting a fresh neuron the first time.
    pub fn encode(&mut self, surface: &str) -> Result<usize> {
        if surface.is_empty() {
            return Err(Error::Contract("cannot encode an empty token".into()));
        }
        if let Some(&i) = self.entries.get(surface) {
            return Ok(i);
        }
        if let Some(i) = self.recognize(surface)? {
            return Err(Error::Integrity(format!(
                "neuron {i} answers to `{surface}` but the word is not registered"
            )));
        }
        let fresh = self.surfaces.len();
        if fresh >= self.capacity {
            return Err(Error::Capacity {
                layer: "IW".into(),
                size: self.capacity,
            });
        }
        let pattern = ascii_pattern(surface)?;
        self.bank.dhl_update_in(fresh, &pattern)?;
        self.used.insert(fresh);
        self.entries.insert(surface.to_string(), fresh);
        self.surfaces.push(surface.to_string());
        Ok(fresh)
    }

    /// Surfaces of the active words in index order; the null word is silent.
    pub fn decode(&self, active: &[usize]) -> Result<Vec<String>> {
        let mut sorted = active.to_vec();
        sorted.sort_unstable();
        let mut out = Vec::new();
        for i in sorted {
            if i == NULL_WORD {
                continue;
            }
            let s = self
                .surfaces
                .get(i)
                .ok_or_else(|| Error::Integrity(format!("word neuron {i} is not allocated")))?;
            out.push(s.clone());
        }
        Ok(out)
    }

    /// Words of a row-ordered phrase, stopping at nothing: null rows are skipped.
    pub fn decode_phrase(&self, words: &[usize]) -> Result<String> {
        let mut out = Vec::new();
        for &w in words {
            if w == NULL_WORD {
                continue;
            }
            let s = self
                .surfaces
                .get(w)
                .ok_or_else(|| Error::Integrity(format!("word neuron {w} is not allocated")))?;
            out.push(s.as_str());
        }
        Ok(out.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn question_drops_marker() {
        let line = tokenize("? how old are you").unwrap();
        assert_eq!(line.kind, LineKind::Question);
        assert_eq!(line.tokens, vec!["how", "old", "are", "you"]);
        let glued = tokenize("?how old").unwrap();
        assert_eq!(glued.tokens, vec!["how", "old"]);
    }

    #[test]
    fn commands_comments_breaks() {
        assert_eq!(
            tokenize(".reward").unwrap().kind,
            LineKind::Command {
                command: Command::Reward
            }
        );
        let wg = tokenize(".word_group is go -ing to the theater").unwrap();
        assert_eq!(wg.tokens.len(), 6);
        assert_eq!(tokenize("#####").unwrap().kind, LineKind::ContextBreak);
        assert_eq!(tokenize("#Mum says").unwrap().kind, LineKind::Comment);
        assert_eq!(tokenize("   ").unwrap().kind, LineKind::Comment);
        assert!(matches!(tokenize(".dance"), Err(Error::Protocol(_))));
        assert!(matches!(tokenize(".phrase"), Err(Error::Protocol(_))));
    }

    #[test]
    fn long_phrases_rejected() {
        let err = tokenize("a b c d e f g h i j k").unwrap_err();
        assert_eq!(err, Error::Length { words: 11, max: 10 });
        assert!(err.to_string().contains("ten words") || err.to_string().contains("10 words"));
    }

    #[test]
    fn proper_nouns_keep_case() {
        let line = tokenize("Pac_Man is a game").unwrap();
        assert_eq!(line.tokens[0], "Pac_Man");
    }

    #[test]
    fn encoding_is_stable_and_distinct() {
        let mut v = Vocabulary::new(64, 7);
        let turtle = v.encode("turtle").unwrap();
        assert_eq!(v.encode("turtle").unwrap(), turtle);
        let reptile = v.encode("reptile").unwrap();
        assert_ne!(turtle, reptile);
        assert_eq!(v.recognize("turtle").unwrap(), Some(turtle));
        assert_eq!(v.recognize("turtles").unwrap(), None);
        assert_eq!(v.decode(&[turtle]).unwrap(), vec!["turtle"]);
        assert!(v.decode(&[]).unwrap().is_empty());
        assert!(matches!(v.decode(&[50]), Err(Error::Integrity(_))));
    }

    #[test]
    fn capacity_is_enforced() {
        let mut v = Vocabulary::new(3, 1);
        v.encode("a").unwrap();
        v.encode("b").unwrap();
        assert!(matches!(v.encode("c"), Err(Error::Capacity { .. })));
    }
}
