//! The single dispatch path shared by the terminal and the service.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{tokenize, Command, LineKind};
use crate::session::{BufferView, EventSink, Reply, Session};
use crate::state::ComponentState;
use crate::stm::COMPONENTS;

use super::snapshot::{load_snapshot, save_snapshot};

/// What one submitted line produced.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Response {
    /// Lines a terminal prints, in order.
    pub output: Vec<String>,
    pub reply: Option<Reply>,
}

/// One state component, decoded for display.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentView {
    pub name: String,
    pub size: usize,
    pub w_max: i64,
    pub active: Vec<usize>,
    pub decoded: String,
}

const ALIASES: [(&str, &str); 9] = [
    ("inphb", "input_phrase"),
    ("wkphb", "working_phrase"),
    ("cw", "current_word"),
    ("wgb", "word_group"),
    ("outphb", "output_phrase"),
    ("goal", "goal_stack"),
    ("previous", "previous_phrases"),
    ("phi", "indexes"),
    ("retrieval", "retrieval_status"),
];

/// Canonical component name for a layer name or alias.
pub fn component_name(layer: &str) -> Option<&'static str> {
    let lower = layer.to_ascii_lowercase();
    COMPONENTS
        .iter()
        .copied()
        .find(|c| *c == lower)
        .or_else(|| ALIASES.iter().find(|(a, _)| *a == lower).map(|(_, c)| *c))
}

pub fn decode(component: &ComponentState, buffers: &BufferView) -> String {
    match component.name.as_str() {
        "comparison" => {
            let equal = component.active.iter().filter(|&&i| i % 2 == 0).count();
            format!("{equal} of {} pairs equal", component.active.len())
        }
        "goal_stack" => format!("{} (depth {})", buffers.goal, buffers.goal_depth),
        "previous_phrases" => buffers.previous_phrases.join(" | "),
        "indexes" => format!("phrase {}, group {}", buffers.phrase_index, buffers.group_index),
        "input_phrase" => buffers.input_phrase.clone(),
        "current_word" => buffers.current_word.clone(),
        "working_phrase" => buffers.working_phrase.clone(),
        "word_group" => buffers.word_group.clone(),
        "output_phrase" => buffers.output_phrase.clone(),
        "retrieval_status" => if buffers.retrieval_miss { "miss" } else { "ok" }.to_string(),
        _ => String::new(),
    }
}

/// Every state component of `session`, decoded.
pub fn components(session: &Session) -> Vec<ComponentView> {
    let buffers = session.buffers();
    session
        .full_snapshot()
        .components
        .into_iter()
        .map(|c| ComponentView {
            decoded: decode(&c, &buffers),
            name: c.name,
            size: c.size,
            w_max: c.w_max,
            active: c.active,
        })
        .collect()
}

pub fn stat_lines(session: &Session) -> Vec<String> {
    let s = session.stats();
    let ratio = if s.learnable_virtual == 0 {
        0.0
    } else {
        s.learnable_allocated as f64 / s.learnable_virtual as f64
    };
    let mut out = vec![
        format!("words {}", s.words),
        format!("phrases {} in {} contexts", s.phrases, s.contexts),
        format!("associations {}", s.associations),
        format!("policy neurons {} ({} distinct states)", s.policy_neurons, s.distinct_states),
        format!(
            "learnable connections {} allocated of {} virtual ({:.6}%)",
            s.learnable_allocated,
            s.learnable_virtual,
            ratio * 100.0
        ),
    ];
    for c in session.full_snapshot().components {
        out.push(format!("layer {} size {} active {}", c.name, c.size, c.active.len()));
    }
    out
}

pub struct Console {
    session: Session,
    sink: Option<EventSink>,
}

impl Console {
    pub fn new(session: Session) -> Self {
        Console { session, sink: None }
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    pub fn session_mut(&mut self) -> &mut Session {
        &mut self.session
    }

    pub fn into_session(self) -> Session {
        self.session
    }

    /// Observer for every executive step; survives `.load`.
    pub fn set_sink(&mut self, sink: Option<EventSink>) {
        self.session.set_sink(sink.clone());
        self.sink = sink;
    }

    pub fn replace_session(&mut self, mut session: Session) {
        session.set_sink(self.sink.clone());
        self.session = session;
    }

    pub fn submit(&mut self, text: &str) -> Result<Response> {
        let line = tokenize(text)?;
        let LineKind::Command { command } = &line.kind else {
            let reply = self.session.process_line(&line)?;
            return Ok(Response {
                output: reply.text().into_iter().collect(),
                reply: Some(reply),
            });
        };
        let argument = line.tokens.join(" ");
        let output = match command {
            Command::Save => {
                let path = required(&argument, ".save")?;
                save_snapshot(&self.session, Path::new(path))?;
                vec![format!("saved {path}")]
            }
            Command::Load => {
                let path = required(&argument, ".load")?;
                let loaded = load_snapshot(Path::new(path))?;
                self.replace_session(loaded);
                vec![format!("loaded {path}")]
            }
            Command::Stat => stat_lines(&self.session),
            Command::Monitor => {
                let layer = required(&argument, ".monitor")?;
                let name = component_name(layer).ok_or_else(|| Error::Protocol(format!(".monitor {layer}")))?;
                let view = components(&self.session)
                    .into_iter()
                    .find(|c| c.name == name)
                    .expect("every component is in the full snapshot");
                let active: Vec<String> = view.active.iter().map(usize::to_string).collect();
                vec![
                    format!("{}: {}", view.name, view.decoded),
                    format!("active [{}]", active.join(" ")),
                ]
            }
            _ => {
                let reply = self.session.process_line(&line)?;
                return Ok(Response {
                    output: reply.text().into_iter().collect(),
                    reply: Some(reply),
                });
            }
        };
        Ok(Response { output, reply: None })
    }
}

fn required<'a>(argument: &'a str, command: &str) -> Result<&'a str> {
    if argument.is_empty() {
        Err(Error::Protocol(format!("{command} needs an argument")))
    } else {
        Ok(argument)
    }
}

/// Reads lines until end of input, printing replies; errors are printed and
/// the loop goes on.
pub fn repl(console: &mut Console, input: impl BufRead, mut output: impl Write) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        match console.submit(&line) {
            Ok(r) => {
                for l in r.output {
                    writeln!(output, "{l}")?;
                }
            }
            Err(e) => writeln!(output, "error: {e}")?,
        }
        output.flush()?;
    }
    Ok(())
}
