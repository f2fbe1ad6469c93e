//! Script files, answer keys and scored replay.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{tokenize, Line, LineKind};
use crate::session::{Reply, Session};

/// A parsed line, or the reason the engine will refuse it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Entry {
    Line(Line),
    Rejected(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScriptLine {
    /// 1-based line number in the source.
    pub number: usize,
    pub text: String,
    pub entry: Entry,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Script {
    pub source: String,
    pub lines: Vec<ScriptLine>,
}

impl Script {
    pub fn parse(text: &str, source: &str) -> Result<Script> {
        let mut lines = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let number = i + 1;
            let entry = match tokenize(raw) {
                Ok(line) => Entry::Line(line),
                Err(e @ Error::Length { .. }) => Entry::Rejected(e.to_string()),
                Err(e) => {
                    return Err(Error::Parse {
                        line: number,
                        message: format!("{source}: {e}"),
                    })
                }
            };
            lines.push(ScriptLine {
                number,
                text: raw.to_string(),
                entry,
            });
        }
        Ok(Script {
            source: source.to_string(),
            lines,
        })
    }

    pub fn load(path: &Path) -> Result<Script> {
        let text = std::fs::read_to_string(path)?;
        Script::parse(&text, &path.display().to_string())
    }

    /// Number of non-empty blocks between context breaks.
    pub fn contexts(&self) -> usize {
        let mut count = 0;
        let mut open = false;
        for l in &self.lines {
            match &l.entry {
                Entry::Line(Line {
                    kind: LineKind::ContextBreak,
                    ..
                }) => open = false,
                Entry::Line(Line {
                    kind: LineKind::Comment,
                    ..
                }) => {}
                _ => {
                    if !open {
                        count += 1;
                        open = true;
                    }
                }
            }
        }
        count
    }

    /// Line numbers of the questions.
    pub fn questions(&self) -> Vec<usize> {
        self.lines
            .iter()
            .filter(|l| matches!(&l.entry, Entry::Line(Line { kind: LineKind::Question, .. })))
            .map(|l| l.number)
            .collect()
    }
}

pub fn load_script(path: &Path) -> Result<Script> {
    Script::load(path)
}

/// Accepted answers per question line.
///
/// One entry per line: `<line number><TAB><answer>|<answer>...`. Blank lines
/// and lines starting with `#` are ignored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerKey {
    pub answers: BTreeMap<usize, Vec<String>>,
}

pub fn normalize(answer: &str) -> String {
    answer.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl AnswerKey {
    pub fn parse(text: &str) -> Result<AnswerKey> {
        let mut answers = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (num, rest) = t.split_once('\t').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: "expected `<line>\\t<answers>`".into(),
            })?;
            let num: usize = num.trim().parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("bad line number `{num}`"),
            })?;
            let alts: Vec<String> = rest.split('|').map(normalize).filter(|a| !a.is_empty()).collect();
            if alts.is_empty() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: "no accepted answer".into(),
                });
            }
            answers.insert(num, alts);
        }
        Ok(AnswerKey { answers })
    }

    pub fn load(path: &Path) -> Result<AnswerKey> {
        AnswerKey::parse(&std::fs::read_to_string(path)?)
    }

    pub fn accepts(&self, line: usize, answer: &str) -> bool {
        let a = normalize(answer);
        self.answers.get(&line).is_some_and(|alts| alts.contains(&a))
    }

    /// Checks that every key entry points at a question of `script`.
    pub fn check(&self, script: &Script) -> Result<()> {
        let questions = script.questions();
        for &n in self.answers.keys() {
            if !questions.contains(&n) {
                return Err(Error::Parse {
                    line: n,
                    message: format!("answer key entry does not point at a question of {}", script.source),
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionResult {
    pub line: usize,
    pub question: String,
    pub answer: String,
    pub correct: bool,
}

/// What one replay produced.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptRun {
    pub results: Vec<QuestionResult>,
    /// Lines the session refused, with the reason.
    pub errors: Vec<(usize, String)>,
}

impl ScriptRun {
    pub fn correct(&self) -> usize {
        self.results.iter().filter(|r| r.correct).count()
    }

    pub fn total(&self) -> usize {
        self.results.len()
    }
}

/// Replays `script`. Questions listed in `key` are answered with the learned
/// policy right after they are read and scored; session errors count as
/// wrong answers.
pub fn replay(session: &mut Session, script: &Script, key: &AnswerKey) -> ScriptRun {
    let mut run = ScriptRun::default();
    for l in &script.lines {
        let line = match &l.entry {
            Entry::Line(line) => line,
            Entry::Rejected(why) => {
                run.errors.push((l.number, why.clone()));
                continue;
            }
        };
        let reply = session.process_line(line);
        if let Err(e) = &reply {
            run.errors.push((l.number, e.to_string()));
        }
        if line.kind != LineKind::Question || !key.answers.contains_key(&l.number) {
            continue;
        }
        let answer = match reply {
            Ok(Reply::Answer { answer }) => Ok(answer),
            Ok(_) => session.exploit(),
            Err(e) => Err(e),
        };
        let text = match answer {
            Ok(a) => a.text(),
            Err(e) => {
                run.errors.push((l.number, e.to_string()));
                String::new()
            }
        };
        run.results.push(QuestionResult {
            line: l.number,
            question: line.text(),
            correct: key.accepts(l.number, &text),
            answer: text,
        });
    }
    run
}

/// Correct and total answers of one dataset in one round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundScore {
    pub dataset: String,
    pub round: usize,
    pub seed: u64,
    pub correct: usize,
    pub total: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalReport {
    pub label: String,
    pub config_hash: String,
    pub scores: Vec<RoundScore>,
}

impl EvalReport {
    pub fn correct(&self) -> usize {
        self.scores.iter().map(|s| s.correct).sum()
    }

    pub fn total(&self) -> usize {
        self.scores.iter().map(|s| s.total).sum()
    }

    /// Fraction of correct answers; zero when nothing was asked.
    pub fn accuracy(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            self.correct() as f64 / self.total() as f64
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        let mut s: Vec<u64> = self.scores.iter().map(|s| s.seed).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Totals of one dataset over all rounds.
    pub fn dataset(&self, name: &str) -> (usize, usize) {
        self.scores
            .iter()
            .filter(|s| s.dataset == name)
            .fold((0, 0), |(c, t), s| (c + s.correct, t + s.total))
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# {} config {}", self.label, self.config_hash)?;
        writeln!(f, "dataset\tround\tseed\tcorrect\ttotal")?;
        for s in &self.scores {
            writeln!(f, "{}\t{}\t{}\t{}\t{}", s.dataset, s.round, s.seed, s.correct, s.total)?;
        }
        writeln!(f, "all\t-\t-\t{}\t{}", self.correct(), self.total())
    }
}

/// Replays a script on `session` and scores it as one dataset round.
pub fn run_script(session: &mut Session, script: &Script, key: &AnswerKey) -> EvalReport {
    let run = replay(session, script, key);
    EvalReport {
        label: script.source.clone(),
        config_hash: session.config().hash(),
        scores: vec![RoundScore {
            dataset: script.source.clone(),
            round: 1,
            seed: session.config().seed,
            correct: run.correct(),
            total: run.total(),
        }],
    }
}
