//! Brute-force nearest-neighbour reference for the state-action network.
//!
//! Everything here works from serialized snapshots with exact rational
//! arithmetic. Nothing is borrowed from the network's own scoring code.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use num_rational::Ratio;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::executive::{MentalAction, StateActionNet};
use crate::state::{ComponentState, InternalState};

pub type Exact = Ratio<i128>;

const THOUSANDTHS: i128 = 1000;

fn magnitude(c: &ComponentState) -> Exact {
    Exact::new(c.w_max as i128, THOUSANDTHS)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledState {
    pub state: InternalState,
    pub action: MentalAction,
}

fn same_layout(a: &InternalState, b: &InternalState) -> Result<()> {
    let shape = |s: &InternalState| {
        s.components
            .iter()
            .map(|c| (c.name.clone(), c.size, c.w_max))
            .collect::<Vec<_>>()
    };
    if shape(a) != shape(b) {
        return Err(Error::Contract("snapshots have different layouts".into()));
    }
    Ok(())
}

fn active_set(c: &ComponentState) -> Result<BTreeSet<usize>> {
    let set: BTreeSet<usize> = c.active.iter().copied().collect();
    if set.len() != c.active.len() || set.iter().any(|&j| j >= c.size) {
        return Err(Error::Contract(format!("component `{}` is not a valid activation", c.name)));
    }
    Ok(set)
}

fn indicator(c: &ComponentState) -> Result<Vec<i128>> {
    let set = active_set(c)?;
    Ok((0..c.size).map(|j| i128::from(set.contains(&j))).collect())
}

/// Weighted sum and weighted square sum of the activations.
pub fn normalization(state: &InternalState) -> Result<(Exact, Exact)> {
    let mut sum = Exact::from_integer(0);
    let mut squares = Exact::from_integer(0);
    for c in &state.components {
        let s = indicator(c)?;
        sum += magnitude(c) * s.iter().sum::<i128>();
        squares += magnitude(c) * s.iter().map(|x| x * x).sum::<i128>();
    }
    Ok((sum, squares))
}

/// Weighted squared difference, summed neuron by neuron.
pub fn distance(a: &InternalState, b: &InternalState) -> Result<Exact> {
    same_layout(a, b)?;
    let mut d = Exact::from_integer(0);
    for (ca, cb) in a.components.iter().zip(&b.components) {
        let sa = indicator(ca)?;
        let sb = indicator(cb)?;
        let squares: i128 = sa.iter().zip(&sb).map(|(x, y)| (x - y) * (x - y)).sum();
        d += magnitude(ca) * squares;
    }
    Ok(d)
}

/// The same distance through the overlap form, valid for states that share
/// the normalization constant.
pub fn distance_by_overlap(a: &InternalState, b: &InternalState) -> Result<Exact> {
    same_layout(a, b)?;
    let (_, u2) = normalization(a)?;
    let mut overlap = Exact::from_integer(0);
    for (ca, cb) in a.components.iter().zip(&b.components) {
        let sb = active_set(cb)?;
        let shared = active_set(ca)?.intersection(&sb).count() as i128;
        overlap += magnitude(ca) * shared;
    }
    Ok(u2 * 2 - overlap * 2)
}

/// Labeled training states in training order, all with one normalization
/// constant.
#[derive(Clone, Debug)]
pub struct Oracle {
    train: Vec<LabeledState>,
    counts: Vec<usize>,
    norm: Exact,
}

impl Oracle {
    pub fn new(train: Vec<LabeledState>) -> Result<Self> {
        let first = train
            .first()
            .ok_or_else(|| Error::Contract("oracle needs at least one training state".into()))?;
        let counts = first.state.active_counts();
        let (u1, u2) = normalization(&first.state)?;
        if u1 != u2 {
            return Err(Error::Contract("normalization sums differ".into()));
        }
        let oracle = Oracle {
            counts,
            norm: u1,
            train: Vec::new(),
        };
        for l in &train {
            oracle.admit(&l.state)?;
            if l.action.neuron().is_none() {
                return Err(Error::Contract(format!("{} is not a trainable action", l.action)));
            }
        }
        Ok(Oracle { train, ..oracle })
    }

    /// Checks that `state` has the stored layout and normalization.
    pub fn admit(&self, state: &InternalState) -> Result<()> {
        if let Some(first) = self.train.first() {
            same_layout(&first.state, state)?;
        }
        if state.active_counts() != self.counts {
            return Err(Error::Contract("active counts differ from the training states".into()));
        }
        let (u1, u2) = normalization(state)?;
        if u1 != self.norm || u2 != self.norm {
            return Err(Error::Contract("normalization constant differs".into()));
        }
        Ok(())
    }

    pub fn norm(&self) -> Exact {
        self.norm
    }

    pub fn train(&self) -> &[LabeledState] {
        &self.train
    }

    /// Every training index with its distance, nearest first, ties by
    /// training order.
    pub fn ranking(&self, query: &InternalState) -> Result<Vec<(usize, Exact)>> {
        self.admit(query)?;
        let mut all = self
            .train
            .iter()
            .enumerate()
            .map(|(i, l)| Ok((i, distance(&l.state, query)?)))
            .collect::<Result<Vec<_>>>()?;
        all.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
        Ok(all)
    }

    pub fn neighbors(&self, query: &InternalState, k: usize) -> Result<Vec<(usize, Exact)>> {
        let mut all = self.ranking(query)?;
        all.truncate(k);
        Ok(all)
    }

    /// Majority action of the `k` nearest states; equal counts go to the
    /// lowest action neuron.
    pub fn classify(&self, query: &InternalState, k: usize) -> Result<MentalAction> {
        self.vote(&self.ranking(query)?, k)
    }

    fn vote(&self, ranking: &[(usize, Exact)], k: usize) -> Result<MentalAction> {
        if k == 0 || k > self.train.len() {
            return Err(Error::Contract(format!("k={k} with {} training states", self.train.len())));
        }
        let mut tally: Vec<(MentalAction, usize)> = Vec::new();
        for &(i, _) in &ranking[..k] {
            let a = self.train[i].action;
            match tally.iter_mut().find(|(b, _)| *b == a) {
                Some(t) => t.1 += 1,
                None => tally.push((a, 1)),
            }
        }
        tally.sort_by(|x, y| match y.1.cmp(&x.1) {
            Ordering::Equal => x.0.neuron().cmp(&y.0.neuron()),
            o => o,
        });
        Ok(tally[0].0)
    }
}

/// A random state with the oracle's layout and active counts.
pub fn random_state(template: &InternalState, rng: &mut impl Rng) -> InternalState {
    let mut s = template.clone();
    for c in &mut s.components {
        let mut v = sample(rng, c.size, c.active.len()).into_vec();
        v.sort_unstable();
        c.active = v;
    }
    s
}

/// Moves up to `swaps` active neurons of random components to inactive
/// positions.
pub fn perturb(state: &InternalState, swaps: usize, rng: &mut impl Rng) -> InternalState {
    let mut s = state.clone();
    for _ in 0..swaps {
        let m = rng.gen_range(0..s.components.len());
        let c = &mut s.components[m];
        if c.active.is_empty() || c.active.len() == c.size {
            continue;
        }
        let from = rng.gen_range(0..c.active.len());
        let free: Vec<usize> = (0..c.size).filter(|j| !c.active.contains(j)).collect();
        c.active[from] = free[rng.gen_range(0..free.len())];
        c.active.sort_unstable();
    }
    s
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Divergence {
    pub query: usize,
    pub k: usize,
    pub engine: MentalAction,
    pub oracle: MentalAction,
    pub state: InternalState,
    pub neighbors: Vec<(usize, Exact, MentalAction)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub queries: usize,
    pub checks: usize,
    pub divergences: usize,
    pub first: Option<Divergence>,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.divergences == 0
    }
}

impl fmt::Display for EquivalenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "queries {} checks {} divergences {}",
            self.queries, self.checks, self.divergences
        )?;
        if let Some(d) = &self.first {
            writeln!(
                f,
                "first divergence: query {} k {} engine {} oracle {}",
                d.query, d.k, d.engine, d.oracle
            )?;
            for (i, dist, a) in &d.neighbors {
                writeln!(f, "  train {i} distance {dist} action {a}")?;
            }
            writeln!(f, "  state {}", d.state.to_json())?;
        }
        Ok(())
    }
}

/// Compares the network with the oracle on `trials` random queries for each
/// `k`. Half of the queries are perturbed training states, so near ties are
/// common.
pub fn check_equivalence(
    net: &StateActionNet,
    oracle: &Oracle,
    trials: usize,
    seed: u64,
    ks: &[usize],
) -> Result<EquivalenceReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let template = &oracle
        .train
        .first()
        .ok_or_else(|| Error::Contract("oracle is empty".into()))?
        .state;
    let mut report = EquivalenceReport::default();
    for q in 0..trials {
        let query = if q % 2 == 0 {
            let base = &oracle.train[rng.gen_range(0..oracle.train.len())].state;
            let swaps = rng.gen_range(0..4);
            perturb(base, swaps, &mut rng)
        } else {
            random_state(template, &mut rng)
        };
        report.queries += 1;
        let ranking = oracle.ranking(&query)?;
        for &k in ks {
            let k = k.min(oracle.train.len());
            let engine = net.select(&query, k)?.action;
            let expected = oracle.vote(&ranking, k)?;
            report.checks += 1;
            if engine != expected {
                report.divergences += 1;
                if report.first.is_none() {
                    let neighbors = ranking[..k]
                        .iter()
                        .map(|&(i, d)| (i, d, oracle.train[i].action))
                        .collect();
                    report.first = Some(Divergence {
                        query: q,
                        k,
                        engine,
                        oracle: expected,
                        state: query.clone(),
                        neighbors,
                    });
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(comp: &[(usize, &[usize], i64)]) -> InternalState {
        InternalState {
            components: comp
                .iter()
                .enumerate()
                .map(|(m, (size, active, w))| ComponentState {
                    name: format!("c{m}"),
                    size: *size,
                    active: active.to_vec(),
                    w_max: *w,
                })
                .collect(),
        }
    }

    #[test]
    fn self_distance_is_zero() {
        let s = state(&[(4, &[1], 5000), (6, &[0, 3], 1000)]);
        assert_eq!(distance(&s, &s).unwrap(), Exact::from_integer(0));
    }

    #[test]
    fn one_swap_costs_twice_the_magnitude() {
        let a = state(&[(4, &[1], 5000), (6, &[0, 3], 1000)]);
        let b = state(&[(4, &[2], 5000), (6, &[0, 3], 1000)]);
        assert_eq!(distance(&a, &b).unwrap(), Exact::from_integer(10));
        let c = state(&[(4, &[1], 5000), (6, &[0, 4], 1000)]);
        assert_eq!(distance(&a, &c).unwrap(), Exact::from_integer(2));
    }

    #[test]
    fn fractional_magnitudes_stay_exact() {
        let a = state(&[(3, &[0], 333)]);
        let b = state(&[(3, &[1], 333)]);
        assert_eq!(distance(&a, &b).unwrap(), Exact::new(666, 1000));
    }

    #[test]
    fn layout_mismatch_is_rejected() {
        let a = state(&[(4, &[1], 5000)]);
        let b = state(&[(5, &[1], 5000)]);
        assert!(distance(&a, &b).is_err());
    }

    #[test]
    fn majority_and_tie_rules() {
        let train = vec![
            LabeledState { state: state(&[(8, &[0], 1000)]), action: MentalAction::GetW },
            LabeledState { state: state(&[(8, &[1], 1000)]), action: MentalAction::NextW },
            LabeledState { state: state(&[(8, &[2], 1000)]), action: MentalAction::NextW },
        ];
        let o = Oracle::new(train).unwrap();
        let q = state(&[(8, &[0], 1000)]);
        assert_eq!(o.classify(&q, 1).unwrap(), MentalAction::GetW);
        assert_eq!(o.classify(&q, 3).unwrap(), MentalAction::NextW);
        let far = state(&[(8, &[7], 1000)]);
        // All equidistant: the first two by training order, one vote each,
        // the lower action neuron wins.
        assert_eq!(o.classify(&far, 2).unwrap(), MentalAction::NextW);
        assert!(o.classify(&q, 4).is_err());
    }

    #[test]
    fn unstable_query_is_refused() {
        let o = Oracle::new(vec![LabeledState {
            state: state(&[(8, &[0], 1000)]),
            action: MentalAction::Done,
        }])
        .unwrap();
        assert!(o.classify(&state(&[(8, &[0, 1], 1000)]), 1).is_err());
    }
}
