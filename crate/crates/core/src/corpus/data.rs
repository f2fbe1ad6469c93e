//! Grouped question banks and the bundled corpora.

use crate::error::{Error, Result};
use crate::lexicon::{tokenize, Line, LineKind};

use super::script::{normalize, Script};

/// One question with the teacher commands that train it and the accepted
/// answers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BankItem {
    pub question: Line,
    pub training: Vec<Line>,
    pub answers: Vec<String>,
}

impl BankItem {
    pub fn accepts(&self, answer: &str) -> bool {
        let a = normalize(answer);
        self.answers.contains(&a)
    }
}

/// Questions of similar structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Group {
    pub name: String,
    pub items: Vec<BankItem>,
}

/// Facts to memorize plus grouped questions.
///
/// Text format: every line before the first `@group <name>` is a fact line
/// (sentences, comments, `#####`). Inside a group each item starts with a
/// `?` question, continues with teacher commands and ends with
/// `= <answer>|<answer>...`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    pub name: String,
    pub facts: Script,
    pub groups: Vec<Group>,
}

fn parse_error(number: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line: number,
        message: message.into(),
    }
}

impl Dataset {
    pub fn parse(name: &str, text: &str) -> Result<Dataset> {
        let all: Vec<&str> = text.lines().collect();
        let split = all.iter().position(|l| l.trim_start().starts_with("@group")).unwrap_or(all.len());
        let facts = Script::parse(&all[..split].join("\n"), name)?;
        let mut groups: Vec<Group> = Vec::new();
        let mut pending: Option<(usize, Line, Vec<Line>)> = None;
        for (i, raw) in all.iter().enumerate().skip(split) {
            let number = i + 1;
            let t = raw.trim();
            if let Some(group) = t.strip_prefix("@group") {
                if let Some((n, ..)) = pending {
                    return Err(parse_error(n, "question without answers"));
                }
                let group = group.trim();
                if group.is_empty() {
                    return Err(parse_error(number, "group needs a name"));
                }
                groups.push(Group {
                    name: group.to_string(),
                    items: Vec::new(),
                });
                continue;
            }
            if let Some(answers) = t.strip_prefix('=') {
                let (_, question, training) = pending.take().ok_or_else(|| parse_error(number, "answers without a question"))?;
                let answers: Vec<String> = answers.split('|').map(normalize).filter(|a| !a.is_empty()).collect();
                if answers.is_empty() {
                    return Err(parse_error(number, "no accepted answer"));
                }
                groups.last_mut().expect("inside a group").items.push(BankItem {
                    question,
                    training,
                    answers,
                });
                continue;
            }
            let line = tokenize(t).map_err(|e| parse_error(number, e.to_string()))?;
            match line.kind {
                LineKind::Comment => {}
                LineKind::Question => {
                    if let Some((n, ..)) = pending {
                        return Err(parse_error(n, "question without answers"));
                    }
                    pending = Some((number, line, Vec::new()));
                }
                LineKind::Command { .. } => match pending.as_mut() {
                    Some((_, _, training)) => training.push(line),
                    None => return Err(parse_error(number, "command outside a question item")),
                },
                _ => return Err(parse_error(number, "only questions, commands and answers may follow @group")),
            }
        }
        if let Some((n, ..)) = pending {
            return Err(parse_error(n, "question without answers"));
        }
        Ok(Dataset {
            name: name.to_string(),
            facts,
            groups,
        })
    }

    pub fn questions(&self) -> usize {
        self.groups.iter().map(|g| g.items.len()).sum()
    }

    pub fn group(&self, name: &str) -> Option<&Group> {
        self.groups.iter().find(|g| g.name == name)
    }
}

pub const CATEGORIZATION: &str = include_str!("../../data/corpora/categorization.txt");
pub const PEOPLE: &str = include_str!("../../data/corpora/people.txt");
pub const BODY_PARTS: &str = include_str!("../../data/corpora/body_parts.txt");

pub const VIRTUAL_ENVIRONMENT_SCRIPT: &str = include_str!("../../data/scripts/virtual_environment.txt");
pub const PRONOUN_SCRIPT: &str = include_str!("../../data/scripts/pronouns.txt");
pub const PRONOUN_KEY: &str = include_str!("../../data/scripts/pronouns.key");
pub const CATEGORIZATION_SCRIPT: &str = include_str!("../../data/scripts/categorization.txt");
pub const CATEGORIZATION_KEY: &str = include_str!("../../data/scripts/categorization.key");

/// The bundled evaluation suite: categorization, people and body parts.
pub fn bundled_suite() -> Vec<Dataset> {
    [("categorization", CATEGORIZATION), ("people", PEOPLE), ("body_parts", BODY_PARTS)]
        .into_iter()
        .map(|(name, text)| Dataset::parse(name, text).expect("bundled corpus parses"))
        .collect()
}

/// Bundled scripts by name, with their answer keys where they have one.
pub fn bundled_script(name: &str) -> Option<(&'static str, Option<&'static str>)> {
    match name {
        "virtual_environment" => Some((VIRTUAL_ENVIRONMENT_SCRIPT, None)),
        "pronouns" => Some((PRONOUN_SCRIPT, Some(PRONOUN_KEY))),
        "categorization" => Some((CATEGORIZATION_SCRIPT, Some(CATEGORIZATION_KEY))),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_corpora_parse() {
        let suite = bundled_suite();
        assert_eq!(suite.len(), 3);
        for d in &suite {
            for g in &d.groups {
                assert!(g.items.len() >= 4, "{}/{}", d.name, g.name);
            }
        }
    }

    #[test]
    fn categorization_covers_sixty_two_animals() {
        let d = Dataset::parse("categorization", CATEGORIZATION).unwrap();
        let members: usize = d.group("tell_category").unwrap().items.iter().map(|i| i.answers.len()).sum();
        assert_eq!(members, 62);
        assert_eq!(d.group("tell_category").unwrap().items.len(), 6);
        assert_eq!(d.group("tell_adjective").unwrap().items.len(), 5);
    }

    #[test]
    fn item_errors_carry_line_numbers() {
        let err = Dataset::parse("x", "a b\n@group g\n? q r\n.reward\n? s t\n= u\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        let err = Dataset::parse("x", "@group g\n= u\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn bundled_scripts_parse() {
        for name in ["virtual_environment", "pronouns", "categorization"] {
            let (text, key) = bundled_script(name).unwrap();
            let s = Script::parse(text, name).unwrap();
            if let Some(k) = key {
                super::super::script::AnswerKey::parse(k).unwrap().check(&s).unwrap();
            }
        }
    }
}
