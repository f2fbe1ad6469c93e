//! Neuron substrate.
//!
//! A [`SparseLayer`] is a set of binary neurons of which only a few are on at
//! any time. Layers are linked by [`ConnectionBank`]s whose learnable weights
//! are virtual: a bank stores only the weights that the discrete Hebbian rule
//! has actually written, and every other pair reads the bank default.
//!
//! Weights are fixed-point integers in thousandths ([`UNIT`]) so that every
//! sum the engine forms is exact.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed-point weight, in thousandths of a unit.
pub type Weight = i64;

/// The fixed-point representation of a weight of 1.
pub const UNIT: Weight = 1000;

/// Converts a real weight to fixed point, rejecting values that do not land
/// exactly on a thousandth.
pub fn weight_from_f64(x: f64) -> Result<Weight> {
    if !x.is_finite() {
        return Err(Error::Config(format!("weight {x} is not finite")));
    }
    let scaled = x * UNIT as f64;
    let rounded = scaled.round();
    if (scaled - rounded).abs() > 1e-6 {
        return Err(Error::Config(format!(
            "weight {x} is not a multiple of 1/{UNIT}"
        )));
    }
    Ok(rounded as Weight)
}

pub fn weight_to_f64(w: Weight) -> f64 {
    w as f64 / UNIT as f64
}

// ============================================================================
// Activation and winner selection
// ============================================================================

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    Heaviside { threshold: f64 },
    Logistic { gain: f64, offset: f64 },
}

impl Default for Activation {
    fn default() -> Self {
        Activation::Heaviside { threshold: 0.0 }
    }
}

impl Activation {
    pub fn logistic_default() -> Self {
        Activation::Logistic {
            gain: 4.0,
            offset: 0.0,
        }
    }

    /// Output level of a neuron with total input `y`.
    pub fn apply(&self, y: Weight) -> f64 {
        let y = weight_to_f64(y);
        match *self {
            Activation::Heaviside { threshold } => {
                if y > threshold {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Logistic { gain, offset } => 1.0 / (1.0 + (-gain * (y - offset)).exp()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "k", rename_all = "snake_case")]
pub enum UpdateRule {
    None,
    Wta,
    Kwta(usize),
    NewWta,
}

/// Per-neuron input totals over a post layer. `y` already includes `bias`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawSignal {
    pub y: Vec<Weight>,
    pub bias: Vec<Weight>,
}

impl RawSignal {
    pub fn zeros(size: usize) -> Self {
        RawSignal {
            y: vec![0; size],
            bias: vec![0; size],
        }
    }
}

/// Indices of the `k` largest entries, ties going to the lower index.
pub fn top_k(y: &[Weight], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| y[b].cmp(&y[a]).then(a.cmp(&b)));
    order.truncate(k);
    order.sort_unstable();
    order
}

/// Applies a winner-selection rule to a raw signal.
///
/// `used` is the winner history of the layer; `NewWta` picks the lowest index
/// not in it and records the pick.
pub fn select_winners(
    raw: &RawSignal,
    rule: UpdateRule,
    activation: Activation,
    used: &mut BTreeSet<usize>,
    layer: &str,
) -> Result<Vec<usize>> {
    let n = raw.y.len();
    match rule {
        UpdateRule::None => Ok((0..n)
            .filter(|&i| activation.apply(raw.y[i]) > 0.5)
            .collect()),
        UpdateRule::Wta => {
            if n == 0 {
                return Err(Error::Capacity {
                    layer: layer.to_string(),
                    size: 0,
                });
            }
            Ok(top_k(&raw.y, 1))
        }
        UpdateRule::Kwta(k) => {
            if k > n {
                return Err(Error::Contract(format!(
                    "k-WTA with k={k} on layer `{layer}` of {n} neurons"
                )));
            }
            Ok(top_k(&raw.y, k))
        }
        UpdateRule::NewWta => {
            let fresh = lowest_unused(used, n).ok_or_else(|| Error::Capacity {
                layer: layer.to_string(),
                size: n,
            })?;
            used.insert(fresh);
            Ok(vec![fresh])
        }
    }
}

fn lowest_unused(used: &BTreeSet<usize>, size: usize) -> Option<usize> {
    match used.last() {
        None => return (size > 0).then_some(0),
        Some(&last) if last + 1 == used.len() => {
            return (used.len() < size).then_some(used.len());
        }
        _ => {}
    }
    let mut expect = 0;
    for &u in used {
        if u != expect {
            break;
        }
        expect += 1;
    }
    (expect < size).then_some(expect)
}

// ============================================================================
// Layers
// ============================================================================

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseLayer {
    pub name: String,
    size: usize,
    active: Vec<usize>,
    pub activation: Activation,
    pub rule: UpdateRule,
    used: BTreeSet<usize>,
}

impl SparseLayer {
    pub fn new(name: &str, size: usize, activation: Activation, rule: UpdateRule) -> Self {
        SparseLayer {
            name: name.to_string(),
            size,
            active: Vec::new(),
            activation,
            rule,
            used: BTreeSet::new(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn used(&self) -> &BTreeSet<usize> {
        &self.used
    }

    pub fn used_count(&self) -> usize {
        self.used.len()
    }

    pub fn set_active(&mut self, mut indices: Vec<usize>) -> Result<()> {
        indices.sort_unstable();
        indices.dedup();
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.size) {
            return Err(Error::Contract(format!(
                "index {bad} outside layer `{}` of size {}",
                self.name, self.size
            )));
        }
        self.active = indices;
        Ok(())
    }

    pub fn clear(&mut self) {
        self.active.clear();
    }

    /// Enlarges a vocabulary-indexed layer. Never shrinks.
    pub fn grow(&mut self, size: usize) {
        self.size = self.size.max(size);
    }

    /// Switches on the lowest never-used neuron, as the new-winner rule does,
    /// without forming an input signal.
    pub fn claim_fresh(&mut self) -> Result<usize> {
        let fresh = lowest_unused(&self.used, self.size).ok_or_else(|| Error::Capacity {
            layer: self.name.clone(),
            size: self.size,
        })?;
        self.used.insert(fresh);
        self.active = vec![fresh];
        Ok(fresh)
    }

    /// Runs the layer's activation and update rule on `raw`.
    pub fn update(&mut self, raw: &RawSignal) -> Result<&[usize]> {
        if raw.y.len() != self.size {
            return Err(Error::Contract(format!(
                "signal of length {} for layer `{}` of size {}",
                raw.y.len(),
                self.name,
                self.size
            )));
        }
        let winners = select_winners(raw, self.rule, self.activation, &mut self.used, &self.name)?;
        self.active = winners;
        Ok(&self.active)
    }
}

// ============================================================================
// Connection banks
// ============================================================================

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BankKind {
    Fixed,
    Learnable,
    Forcing,
}

/// A weighted link set between two layers.
///
/// Weights are read in this order: an explicit override for the pair, the
/// baseline written for the whole post row by [`ConnectionBank::dhl_update_in`],
/// then the bank default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectionBank {
    pub pre: String,
    pub post: String,
    pub kind: BankKind,
    pub default_weight: Weight,
    pub w_max: Weight,
    pre_size: usize,
    post_size: usize,
    #[serde(with = "pair_map")]
    overrides: HashMap<(usize, usize), Weight>,
    row_base: BTreeMap<usize, Weight>,
    #[serde(skip)]
    by_pre: HashMap<usize, BTreeSet<usize>>,
    #[serde(skip)]
    by_post: HashMap<usize, BTreeSet<usize>>,
}

mod pair_map {
    use super::Weight;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::HashMap;

    pub fn serialize<S: Serializer>(
        map: &HashMap<(usize, usize), Weight>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let mut entries: Vec<(usize, usize, Weight)> =
            map.iter().map(|(&(a, b), &w)| (a, b, w)).collect();
        entries.sort_unstable();
        entries.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<HashMap<(usize, usize), Weight>, D::Error> {
        let entries: Vec<(usize, usize, Weight)> = Vec::deserialize(d)?;
        Ok(entries.into_iter().map(|(a, b, w)| ((a, b), w)).collect())
    }
}

impl ConnectionBank {
    pub fn new(
        pre: &str,
        post: &str,
        kind: BankKind,
        pre_size: usize,
        post_size: usize,
        w_max: Weight,
    ) -> Self {
        ConnectionBank {
            pre: pre.to_string(),
            post: post.to_string(),
            kind,
            default_weight: 0,
            w_max: w_max.abs(),
            pre_size,
            post_size,
            overrides: HashMap::new(),
            row_base: BTreeMap::new(),
            by_pre: HashMap::new(),
            by_post: HashMap::new(),
        }
    }

    pub fn with_default(mut self, default_weight: Weight) -> Self {
        self.default_weight = default_weight;
        self
    }

    pub fn pre_size(&self) -> usize {
        self.pre_size
    }

    pub fn post_size(&self) -> usize {
        self.post_size
    }

    pub fn grow(&mut self, pre_size: usize, post_size: usize) {
        self.pre_size = self.pre_size.max(pre_size);
        self.post_size = self.post_size.max(post_size);
    }

    /// Rebuilds the lookup indexes after deserialization.
    pub fn reindex(&mut self) {
        self.by_pre.clear();
        self.by_post.clear();
        for &(a, b) in self.overrides.keys() {
            self.by_pre.entry(a).or_default().insert(b);
            self.by_post.entry(b).or_default().insert(a);
        }
    }

    pub fn weight(&self, pre: usize, post: usize) -> Weight {
        if let Some(&w) = self.overrides.get(&(pre, post)) {
            return w;
        }
        self.base(post)
    }

    fn base(&self, post: usize) -> Weight {
        self.row_base
            .get(&post)
            .copied()
            .unwrap_or(self.default_weight)
    }

    /// Number of explicitly stored pair weights.
    pub fn override_count(&self) -> usize {
        self.overrides.len()
    }

    /// Stored entries: pair overrides plus one per row baseline.
    pub fn allocated(&self) -> usize {
        self.overrides.len() + self.row_base.len()
    }

    /// Number of connections the bank represents.
    pub fn virtual_count(&self) -> u128 {
        self.pre_size as u128 * self.post_size as u128
    }

    pub fn set(&mut self, pre: usize, post: usize, w: Weight) -> Result<()> {
        if pre >= self.pre_size || post >= self.post_size {
            return Err(Error::Contract(format!(
                "pair ({pre}, {post}) outside bank {}->{} of {}x{}",
                self.pre, self.post, self.pre_size, self.post_size
            )));
        }
        self.overrides.insert((pre, post), w);
        self.by_pre.entry(pre).or_default().insert(post);
        self.by_post.entry(post).or_default().insert(pre);
        Ok(())
    }

    fn clear_column(&mut self, post: usize) {
        if let Some(pres) = self.by_post.remove(&post) {
            for pre in pres {
                self.overrides.remove(&(pre, post));
                if let Some(set) = self.by_pre.get_mut(&pre) {
                    set.remove(&post);
                    if set.is_empty() {
                        self.by_pre.remove(&pre);
                    }
                }
            }
        }
    }

    fn require_plastic(&self) -> Result<()> {
        if self.kind == BankKind::Fixed {
            return Err(Error::Contract(format!(
                "DHL update on fixed bank {}->{}",
                self.pre, self.post
            )));
        }
        Ok(())
    }

    /// Discrete Hebbian update of the incoming weights of `winner`: every pre
    /// neuron gets `+w_max` if active and `-w_max` otherwise. Only the row of
    /// `winner` changes.
    pub fn dhl_update_in(&mut self, winner: usize, pre_active: &[usize]) -> Result<()> {
        self.require_plastic()?;
        if winner >= self.post_size {
            return Err(Error::Contract(format!(
                "winner {winner} outside post layer `{}`",
                self.post
            )));
        }
        self.clear_column(winner);
        self.row_base.insert(winner, -self.w_max);
        for &j in pre_active {
            self.set(j, winner, self.w_max)?;
        }
        Ok(())
    }

    /// Discrete Hebbian update of the outgoing weights of `winner`: `+w_max`
    /// towards `target`, `-w_max` towards every other post neuron.
    pub fn dhl_update_out(&mut self, winner: usize, target: usize) -> Result<()> {
        self.require_plastic()?;
        if target >= self.post_size || winner >= self.pre_size {
            return Err(Error::Contract(format!(
                "pair ({winner}, {target}) outside bank {}->{}",
                self.pre, self.post
            )));
        }
        for l in 0..self.post_size {
            let w = if l == target { self.w_max } else { -self.w_max };
            self.set(winner, l, w)?;
        }
        Ok(())
    }

    /// Writes `+w_max` from `pre` to each of `targets`, leaving other pairs
    /// virtual. Used by forcing banks that bind one neuron to a pattern.
    pub fn imprint(&mut self, pre: usize, targets: &[usize]) -> Result<()> {
        self.require_plastic()?;
        for &t in targets {
            self.set(pre, t, self.w_max)?;
        }
        Ok(())
    }

    /// Explicitly stored weights into `post`, by pre index.
    pub fn incoming(&self, post: usize) -> Vec<(usize, Weight)> {
        self.by_post
            .get(&post)
            .map(|pres| pres.iter().map(|&j| (j, self.overrides[&(j, post)])).collect())
            .unwrap_or_default()
    }

    /// Post neurons reached from `pre` by a stored positive weight.
    pub fn positive_targets(&self, pre: usize) -> Vec<usize> {
        self.by_pre
            .get(&pre)
            .map(|posts| {
                posts
                    .iter()
                    .copied()
                    .filter(|&p| self.overrides[&(pre, p)] > 0)
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Adds this bank's contribution for `pre_active` into `y`.
    pub fn accumulate(&self, pre_active: &[usize], y: &mut [Weight]) {
        let n = pre_active.len() as Weight;
        if n == 0 {
            return;
        }
        if self.default_weight != 0 {
            for v in y.iter_mut() {
                *v += self.default_weight * n;
            }
        }
        for (&post, &base) in &self.row_base {
            if post < y.len() {
                y[post] += (base - self.default_weight) * n;
            }
        }
        for &j in pre_active {
            if let Some(posts) = self.by_pre.get(&j) {
                for &post in posts {
                    if post < y.len() {
                        y[post] += self.overrides[&(j, post)] - self.base(post);
                    }
                }
            }
        }
    }
}

/// Input sum over one post layer: `y_i = sum over banks and active pre
/// neurons of w_ij, plus b_i`.
pub fn propagate(
    post_size: usize,
    inputs: &[(&ConnectionBank, &[usize])],
    bias: Option<&[Weight]>,
) -> Result<RawSignal> {
    let mut raw = RawSignal::zeros(post_size);
    if let Some(b) = bias {
        if b.len() != post_size {
            return Err(Error::Contract("bias length differs from layer size".into()));
        }
        raw.bias.copy_from_slice(b);
        raw.y.copy_from_slice(b);
    }
    for (bank, active) in inputs {
        if bank.post_size > post_size {
            return Err(Error::Contract(format!(
                "bank {}->{} is wider than the post layer",
                bank.pre, bank.post
            )));
        }
        bank.accumulate(active, &mut raw.y);
    }
    Ok(raw)
}

// ============================================================================
// Gating and the layer registry
// ============================================================================

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateTarget {
    pub layer: String,
    pub open_bias: Weight,
    pub closed_bias: Weight,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gatekeeper {
    pub name: String,
    pub on: bool,
    pub targets: Vec<GateTarget>,
}

/// Bias that keeps a closed gated layer silent under any input.
pub const CLOSED_BIAS: Weight = -(1 << 50);

/// Named layers, banks and gatekeepers wired together.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Network {
    layers: BTreeMap<String, SparseLayer>,
    banks: BTreeMap<String, ConnectionBank>,
    gates: BTreeMap<String, Gatekeeper>,
}

impl Network {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_layer(&mut self, layer: SparseLayer) {
        self.layers.insert(layer.name.clone(), layer);
    }

    pub fn add_bank(&mut self, name: &str, bank: ConnectionBank) -> Result<()> {
        for end in [&bank.pre, &bank.post] {
            if !self.layers.contains_key(end) {
                return Err(Error::Config(format!("bank `{name}` names unknown layer `{end}`")));
            }
        }
        if bank.kind == BankKind::Forcing {
            let strongest = self
                .banks
                .values()
                .filter(|b| b.post == bank.post && b.kind != BankKind::Forcing)
                .map(|b| b.w_max.max(b.default_weight.abs()))
                .max()
                .unwrap_or(0);
            if bank.w_max <= strongest {
                return Err(Error::Config(format!(
                    "forcing bank `{name}` is not stronger than the other inputs of `{}`",
                    bank.post
                )));
            }
        }
        self.banks.insert(name.to_string(), bank);
        Ok(())
    }

    pub fn add_gate(&mut self, gate: Gatekeeper) -> Result<()> {
        for t in &gate.targets {
            if !self.layers.contains_key(&t.layer) {
                return Err(Error::Config(format!(
                    "gatekeeper `{}` targets unknown layer `{}`",
                    gate.name, t.layer
                )));
            }
        }
        self.gates.insert(gate.name.clone(), gate);
        Ok(())
    }

    pub fn layer(&self, name: &str) -> Result<&SparseLayer> {
        self.layers
            .get(name)
            .ok_or_else(|| Error::Config(format!("unknown layer `{name}`")))
    }

    pub fn layer_mut(&mut self, name: &str) -> Result<&mut SparseLayer> {
        self.layers
            .get_mut(name)
            .ok_or_else(|| Error::Config(format!("unknown layer `{name}`")))
    }

    pub fn bank(&self, name: &str) -> Result<&ConnectionBank> {
        self.banks
            .get(name)
            .ok_or_else(|| Error::Config(format!("unknown bank `{name}`")))
    }

    pub fn bank_mut(&mut self, name: &str) -> Result<&mut ConnectionBank> {
        self.banks
            .get_mut(name)
            .ok_or_else(|| Error::Config(format!("unknown bank `{name}`")))
    }

    pub fn layers(&self) -> impl Iterator<Item = &SparseLayer> {
        self.layers.values()
    }

    pub fn banks(&self) -> impl Iterator<Item = (&String, &ConnectionBank)> {
        self.banks.iter()
    }

    pub fn set_gate(&mut self, name: &str, on: bool) -> Result<()> {
        let gate = self
            .gates
            .get_mut(name)
            .ok_or_else(|| Error::Config(format!("unknown gatekeeper `{name}`")))?;
        gate.on = on;
        Ok(())
    }

    pub fn gate_is_on(&self, name: &str) -> Result<bool> {
        self.gates
            .get(name)
            .map(|g| g.on)
            .ok_or_else(|| Error::Config(format!("unknown gatekeeper `{name}`")))
    }

    pub fn reindex(&mut self) {
        for bank in self.banks.values_mut() {
            bank.reindex();
        }
    }

    /// Input sum for `post` from the named banks, with the gate bias shifts
    /// of every gatekeeper that targets `post`.
    pub fn propagate(&self, post: &str, banks: &[&str], bias: Option<&[Weight]>) -> Result<RawSignal> {
        let layer = self.layer(post)?;
        let mut inputs = Vec::with_capacity(banks.len());
        for &name in banks {
            let bank = self.bank(name)?;
            if bank.post != post {
                return Err(Error::Config(format!(
                    "bank `{name}` feeds `{}`, not `{post}`",
                    bank.post
                )));
            }
            let pre = self.layer(&bank.pre)?;
            inputs.push((bank, pre.active()));
        }
        let mut raw = propagate(layer.size(), &inputs, bias)?;
        for gate in self.gates.values() {
            for t in gate.targets.iter().filter(|t| t.layer == post) {
                let shift = if gate.on { t.open_bias } else { t.closed_bias };
                for (y, b) in raw.y.iter_mut().zip(raw.bias.iter_mut()) {
                    *y += shift;
                    *b += shift;
                }
            }
        }
        Ok(raw)
    }

    fn gated_closed(&self, post: &str) -> bool {
        self.gates
            .values()
            .any(|g| !g.on && g.targets.iter().any(|t| t.layer == post))
    }

    /// Propagates into `post` and applies its update rule. A closed gate
    /// leaves the layer empty; an active forcing input overrides the rule.
    pub fn update(&mut self, post: &str, banks: &[&str], bias: Option<&[Weight]>) -> Result<Vec<usize>> {
        if self.gated_closed(post) {
            self.layer_mut(post)?.clear();
            return Ok(Vec::new());
        }
        let mut forced: BTreeSet<usize> = BTreeSet::new();
        let mut forcing_present = false;
        for &name in banks {
            let bank = self.bank(name)?;
            if bank.kind == BankKind::Forcing {
                let pre = self.layer(&bank.pre)?;
                for &j in pre.active() {
                    forcing_present = true;
                    forced.extend(bank.positive_targets(j));
                }
            }
        }
        if forcing_present {
            let layer = self.layer_mut(post)?;
            layer.set_active(forced.into_iter().collect())?;
            return Ok(layer.active().to_vec());
        }
        let raw = self.propagate(post, banks, bias)?;
        let layer = self.layer_mut(post)?;
        Ok(layer.update(&raw)?.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn learnable(pre: usize, post: usize) -> ConnectionBank {
        ConnectionBank::new("a", "b", BankKind::Learnable, pre, post, UNIT)
    }

    #[test]
    fn single_override_reaches_its_target() {
        let mut bank = learnable(3, 2);
        bank.set(1, 0, UNIT).unwrap();
        let raw = propagate(2, &[(&bank, &[1])], None).unwrap();
        assert_eq!(raw.y, vec![UNIT, 0]);
    }

    #[test]
    fn silent_input_gives_zero() {
        let mut bank = learnable(3, 2);
        bank.dhl_update_in(0, &[2]).unwrap();
        let raw = propagate(2, &[(&bank, &[])], None).unwrap();
        assert_eq!(raw.y, vec![0, 0]);
    }

    #[test]
    fn heaviside_and_logistic() {
        let h = Activation::default();
        assert_eq!(h.apply(500), 1.0);
        assert_eq!(h.apply(0), 0.0);
        let l = Activation::logistic_default();
        assert_eq!(l.apply(0), 0.5);
        assert!(l.apply(-10) < l.apply(10));
    }

    #[test]
    fn winner_rules() {
        let raw = RawSignal {
            y: vec![100, 900, 900],
            bias: vec![0; 3],
        };
        let mut used = BTreeSet::new();
        let act = Activation::default();
        assert_eq!(select_winners(&raw, UpdateRule::Wta, act, &mut used, "l").unwrap(), vec![1]);
        let raw = RawSignal {
            y: vec![3, 1, 2, 0],
            bias: vec![0; 4],
        };
        assert_eq!(
            select_winners(&raw, UpdateRule::Kwta(2), act, &mut used, "l").unwrap(),
            vec![0, 2]
        );
        let mut used: BTreeSet<usize> = [0, 1].into_iter().collect();
        assert_eq!(
            select_winners(&raw, UpdateRule::NewWta, act, &mut used, "l").unwrap(),
            vec![2]
        );
        let mut full: BTreeSet<usize> = (0..4).collect();
        assert!(matches!(
            select_winners(&raw, UpdateRule::NewWta, act, &mut full, "l"),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn dhl_in_writes_signed_row() {
        let mut bank = learnable(3, 2);
        bank.dhl_update_in(1, &[2]).unwrap();
        let row: Vec<Weight> = (0..3).map(|j| bank.weight(j, 1)).collect();
        assert_eq!(row, vec![-UNIT, -UNIT, UNIT]);
        assert_eq!(bank.weight(0, 0), 0);
        let before = bank.clone();
        bank.dhl_update_in(1, &[2]).unwrap();
        assert_eq!(before, bank);
    }

    #[test]
    fn dhl_in_with_comparison_magnitude() {
        let mut bank = ConnectionBank::new("a", "b", BankKind::Learnable, 4, 1, 5 * UNIT);
        bank.dhl_update_in(0, &[0, 3]).unwrap();
        for j in 0..4 {
            assert_eq!(bank.weight(j, 0).abs(), 5 * UNIT);
        }
    }

    #[test]
    fn dhl_out_writes_one_positive() {
        let mut bank = learnable(2, 4);
        bank.dhl_update_out(0, 2).unwrap();
        let row: Vec<Weight> = (0..4).map(|l| bank.weight(0, l)).collect();
        assert_eq!(row, vec![-UNIT, -UNIT, UNIT, -UNIT]);
        let before = bank.clone();
        bank.dhl_update_out(0, 2).unwrap();
        assert_eq!(before, bank);
    }

    #[test]
    fn fixed_banks_refuse_learning() {
        let mut bank = ConnectionBank::new("a", "b", BankKind::Fixed, 2, 2, UNIT);
        assert!(matches!(bank.dhl_update_in(0, &[1]), Err(Error::Contract(_))));
        assert!(matches!(bank.dhl_update_out(0, 1), Err(Error::Contract(_))));
    }

    fn gated_network() -> Network {
        let mut net = Network::new();
        net.add_layer(SparseLayer::new("src", 3, Activation::default(), UpdateRule::None));
        net.add_layer(SparseLayer::new("dst", 3, Activation::default(), UpdateRule::None));
        let mut bank = ConnectionBank::new("src", "dst", BankKind::Fixed, 3, 3, UNIT);
        for i in 0..3 {
            bank.set(i, i, UNIT).unwrap();
        }
        net.add_bank("copy", bank).unwrap();
        net.add_gate(Gatekeeper {
            name: "flag".into(),
            on: false,
            targets: vec![GateTarget {
                layer: "dst".into(),
                open_bias: 0,
                closed_bias: CLOSED_BIAS,
            }],
        })
        .unwrap();
        net.layer_mut("src").unwrap().set_active(vec![0, 2]).unwrap();
        net
    }

    #[test]
    fn closed_gate_silences_and_open_gate_transmits() {
        let mut net = gated_network();
        assert!(net.update("dst", &["copy"], None).unwrap().is_empty());
        net.set_gate("flag", true).unwrap();
        assert_eq!(net.update("dst", &["copy"], None).unwrap(), vec![0, 2]);
        net.set_gate("flag", false).unwrap();
        assert!(net.update("dst", &["copy"], None).unwrap().is_empty());
        net.set_gate("flag", true).unwrap();
        assert_eq!(net.update("dst", &["copy"], None).unwrap(), vec![0, 2]);
        assert!(matches!(net.set_gate("nope", true), Err(Error::Config(_))));
        assert!(matches!(net.propagate("nowhere", &[], None), Err(Error::Config(_))));
    }

    #[test]
    fn forcing_input_dominates() {
        let mut net = Network::new();
        net.add_layer(SparseLayer::new("cue", 4, Activation::default(), UpdateRule::None));
        net.add_layer(SparseLayer::new("idx", 2, Activation::default(), UpdateRule::None));
        net.add_layer(SparseLayer::new("out", 4, Activation::default(), UpdateRule::None));
        let mut fan = ConnectionBank::new("cue", "out", BankKind::Learnable, 4, 4, UNIT);
        for j in 0..4 {
            fan.dhl_update_in(j, &[0, 1, 2, 3]).unwrap();
        }
        net.add_bank("fan", fan).unwrap();
        let mut force = ConnectionBank::new("idx", "out", BankKind::Forcing, 2, 4, 100 * UNIT);
        force.imprint(1, &[3]).unwrap();
        net.add_bank("force", force).unwrap();
        net.layer_mut("cue").unwrap().set_active(vec![0, 1, 2, 3]).unwrap();
        net.layer_mut("idx").unwrap().set_active(vec![1]).unwrap();
        assert_eq!(net.update("out", &["fan", "force"], None).unwrap(), vec![3]);
        let weak = ConnectionBank::new("idx", "out", BankKind::Forcing, 2, 4, UNIT);
        assert!(net.add_bank("weak", weak).is_err());
    }

    #[test]
    fn untrained_bank_allocates_nothing() {
        let bank = ConnectionBank::new("a", "b", BankKind::Learnable, 100_000, 100_000, UNIT);
        assert_eq!(bank.allocated(), 0);
        assert_eq!(bank.virtual_count(), 10_000_000_000);
    }

    #[test]
    fn weights_from_reals() {
        assert_eq!(weight_from_f64(5.0).unwrap(), 5 * UNIT);
        assert_eq!(weight_from_f64(0.5).unwrap(), UNIT / 2);
        assert!(weight_from_f64(0.0001).is_err());
        assert!(weight_from_f64(f64::NAN).is_err());
    }
}
