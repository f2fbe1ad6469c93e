//! Cross-validation, ablation and parameter sweeps over question banks.

use std::thread;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::lexicon::{Line, LineKind};
use crate::session::{Reply, Session};

use super::data::Dataset;
use super::script::{EvalReport, RoundScore};

/// Capacities sized for the bundled corpora.
pub fn suite_config() -> Config {
    Config {
        vocab_capacity: 1024,
        phrase_capacity: 4096,
        assoc_capacity: 65536,
        saann_capacity: 8192,
        ..Config::default()
    }
}

/// Where an item lives: dataset, group and item index.
type ItemRef = (usize, usize, usize);

const BREAK: Line = Line {
    kind: LineKind::ContextBreak,
    tokens: Vec::new(),
};

/// Training item per group and round; the same item never trains twice.
fn training_plan(datasets: &[Dataset], rounds: usize, seed: u64) -> Result<Vec<Vec<ItemRef>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut plan = vec![Vec::new(); rounds];
    for (d, dataset) in datasets.iter().enumerate() {
        for (g, group) in dataset.groups.iter().enumerate() {
            if group.items.len() < rounds.max(2) {
                return Err(Error::Config(format!(
                    "group {}/{} has {} items, {} rounds need at least {}",
                    dataset.name,
                    group.name,
                    group.items.len(),
                    rounds,
                    rounds.max(2)
                )));
            }
            let mut order: Vec<usize> = (0..group.items.len()).collect();
            order.shuffle(&mut rng);
            for (round, items) in plan.iter_mut().enumerate() {
                items.push((d, g, order[round]));
            }
        }
    }
    Ok(plan)
}

/// One scored test question.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestAnswer {
    pub dataset: String,
    pub group: String,
    pub question: String,
    pub answer: String,
    pub correct: bool,
}

/// Fresh session, all facts, the round's training items, then every other
/// item as a test question.
fn run_round(config: &Config, datasets: &[Dataset], training: &[ItemRef], round: usize) -> Result<(Vec<RoundScore>, Vec<TestAnswer>)> {
    let seed = config.seed.wrapping_add(round as u64);
    let mut session = Session::new(Config {
        seed,
        auto_exploit: false,
        ..config.clone()
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for dataset in datasets {
        for line in dataset.facts.lines.iter().filter_map(|l| match &l.entry {
            super::script::Entry::Line(line) => Some(line),
            super::script::Entry::Rejected(_) => None,
        }) {
            session.process_line(line)?;
        }
        session.process_line(&BREAK)?;
    }

    let mut order = training.to_vec();
    order.shuffle(&mut rng);
    for &(d, g, i) in &order {
        let item = &datasets[d].groups[g].items[i];
        session.process_line(&item.question)?;
        for command in &item.training {
            // A failed exploration leaves nothing useful to reward; the
            // round still goes on.
            let _ = session.process_line(command);
        }
    }

    let mut tests: Vec<ItemRef> = Vec::new();
    for (d, dataset) in datasets.iter().enumerate() {
        for (g, group) in dataset.groups.iter().enumerate() {
            for i in 0..group.items.len() {
                if !training.contains(&(d, g, i)) {
                    tests.push((d, g, i));
                }
            }
        }
    }
    tests.shuffle(&mut rng);
    let mut scores: Vec<RoundScore> = datasets
        .iter()
        .map(|d| RoundScore {
            dataset: d.name.clone(),
            round: round + 1,
            seed,
            correct: 0,
            total: 0,
        })
        .collect();
    let mut transcript = Vec::new();
    for (d, g, i) in tests {
        let item = &datasets[d].groups[g].items[i];
        let answer = match session.process_line(&item.question) {
            Ok(Reply::Answer { answer }) => Some(answer),
            Ok(_) => session.exploit().ok(),
            Err(_) => None,
        };
        let answer = answer.map(|a| a.text()).unwrap_or_default();
        let correct = item.accepts(&answer);
        scores[d].total += 1;
        scores[d].correct += usize::from(correct);
        transcript.push(TestAnswer {
            dataset: datasets[d].name.clone(),
            group: datasets[d].groups[g].name.clone(),
            question: item.question.text(),
            answer,
            correct,
        });
    }
    Ok((scores, transcript))
}

/// Rounds of train-then-test over all datasets. Rounds run in parallel on
/// independent sessions.
pub fn crossvalidate(config: &Config, datasets: &[Dataset], rounds: usize) -> Result<EvalReport> {
    crossvalidate_with_answers(config, datasets, rounds).map(|(report, _)| report)
}

/// Like [`crossvalidate`], also returning every test answer per round.
pub fn crossvalidate_with_answers(
    config: &Config,
    datasets: &[Dataset],
    rounds: usize,
) -> Result<(EvalReport, Vec<Vec<TestAnswer>>)> {
    config.validate()?;
    if rounds == 0 {
        return Err(Error::Config("at least one round".into()));
    }
    let plan = training_plan(datasets, rounds, config.seed)?;
    let results: Vec<Result<(Vec<RoundScore>, Vec<TestAnswer>)>> = thread::scope(|scope| {
        let handles: Vec<_> = plan
            .iter()
            .enumerate()
            .map(|(round, training)| scope.spawn(move || run_round(config, datasets, training, round)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("round thread")).collect()
    });
    let mut scores = Vec::new();
    let mut answers = Vec::new();
    for r in results {
        let (s, a) = r?;
        scores.extend(s);
        answers.push(a);
    }
    let report = EvalReport {
        label: format!("crossvalidation rounds={rounds}"),
        config_hash: config.hash(),
        scores,
    };
    Ok((report, answers))
}

/// One row of a sweep or ablation table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub label: String,
    pub report: EvalReport,
}

fn sweep(configs: Vec<(String, Config)>, datasets: &[Dataset], rounds: usize) -> Result<Vec<SweepRow>> {
    configs
        .into_iter()
        .map(|(label, config)| {
            let mut report = crossvalidate(&config, datasets, rounds)?;
            report.label = label.clone();
            Ok(SweepRow { label, report })
        })
        .collect()
}

/// Baseline first, then one run per removed set of state components.
pub fn ablation(config: &Config, datasets: &[Dataset], rounds: usize, removals: &[Vec<String>]) -> Result<Vec<SweepRow>> {
    let mut configs = vec![("baseline".to_string(), config.clone())];
    for removed in removals {
        let mut c = config.clone();
        c.ablate.extend(removed.iter().cloned());
        configs.push((format!("without {}", removed.join("+")), c));
    }
    sweep(configs, datasets, rounds)
}

pub fn k_sweep(config: &Config, datasets: &[Dataset], rounds: usize, ks: &[usize]) -> Result<Vec<SweepRow>> {
    let configs = ks
        .iter()
        .map(|&k| (format!("k={k}"), Config { k, ..config.clone() }))
        .collect();
    sweep(configs, datasets, rounds)
}

/// Scales the magnitude of one state component.
pub fn w_max_sweep(config: &Config, datasets: &[Dataset], rounds: usize, component: &str, values: &[f64]) -> Result<Vec<SweepRow>> {
    let configs = values
        .iter()
        .map(|&w| {
            let mut c = config.clone();
            c.w_max.insert(component.to_string(), w);
            (format!("{component}={w}"), c)
        })
        .collect();
    sweep(configs, datasets, rounds)
}

/// Tab-separated accuracy table of a sweep.
pub fn sweep_table(rows: &[SweepRow]) -> String {
    let mut out = String::from("label\tcorrect\ttotal\taccuracy\n");
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{:.4}\n",
            r.label,
            r.report.correct(),
            r.report.total(),
            r.report.accuracy()
        ));
    }
    out
}
