//! Long-term memory: the phrase store, the word-group association store and
//! sequential navigation inside a context.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::MAX_PHRASE;
use crate::ssm::{Activation, BankKind, ConnectionBank, SparseLayer, UpdateRule, UNIT};
use crate::stm::{phrase_is_empty, Phrase, Stm, EMPTY_PHRASE, GROUP_ROWS};

/// Magnitude of the forcing links out of the index layers.
const FORCING: i64 = 1000 * UNIT;

fn row_neurons(rows: &[usize]) -> Vec<usize> {
    let n = rows.len();
    let mut v: Vec<usize> = rows.iter().enumerate().map(|(r, &w)| w * n + r).collect();
    v.sort_unstable();
    v
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct PhraseMeta {
    context: usize,
    position: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Ltm {
    /// Phrase index layer.
    remph: SparseLayer,
    /// Forcing links from a phrase index to the working-phrase rows.
    recall: ConnectionBank,
    meta: Vec<PhraseMeta>,
    contexts: Vec<Vec<usize>>,
    /// Association layer, one neuron per stored cue.
    cues: SparseLayer,
    /// Word group to association neuron.
    cue_bank: ConnectionBank,
    /// Association neuron to phrase index.
    target_bank: ConnectionBank,
    /// Phrase index that is currently on.
    current: Option<usize>,
    #[serde(skip)]
    by_content: HashMap<Phrase, Vec<usize>>,
    #[serde(skip)]
    by_cue: HashMap<[usize; GROUP_ROWS], usize>,
}

/// Outcome of a retrieval.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Retrieval {
    Hit(usize),
    /// The context ended; the working phrase is now the null phrase.
    ContextEnd,
    Miss,
}

impl Ltm {
    pub fn new(word_capacity: usize, phrase_capacity: usize, assoc_capacity: usize) -> Self {
        Ltm {
            remph: SparseLayer::new("remph", phrase_capacity, Activation::default(), UpdateRule::NewWta),
            recall: ConnectionBank::new(
                "remph",
                "working_phrase",
                BankKind::Forcing,
                phrase_capacity,
                word_capacity * MAX_PHRASE,
                FORCING,
            ),
            meta: Vec::new(),
            contexts: vec![Vec::new()],
            cues: SparseLayer::new("remphfwg", assoc_capacity, Activation::default(), UpdateRule::Wta),
            cue_bank: ConnectionBank::new(
                "word_group",
                "remphfwg",
                BankKind::Learnable,
                word_capacity * GROUP_ROWS,
                assoc_capacity,
                UNIT,
            ),
            target_bank: ConnectionBank::new(
                "remphfwg",
                "remph",
                BankKind::Forcing,
                assoc_capacity,
                phrase_capacity,
                FORCING,
            ),
            current: None,
            by_content: HashMap::new(),
            by_cue: HashMap::new(),
        }
    }

    /// Rebuilds derived indexes after deserialization.
    pub fn reindex(&mut self) -> Result<()> {
        self.recall.reindex();
        self.cue_bank.reindex();
        self.target_bank.reindex();
        self.by_content.clear();
        self.by_cue.clear();
        for id in 0..self.meta.len() {
            let p = self.phrase(id)?;
            self.by_content.entry(p).or_default().push(id);
        }
        for a in 0..self.cues.used_count() {
            let cue = self.cue_of(a)?;
            self.by_cue.entry(cue).or_insert(a);
        }
        Ok(())
    }

    pub fn phrase_count(&self) -> usize {
        self.meta.len()
    }

    pub fn association_count(&self) -> usize {
        self.cues.used_count()
    }

    pub fn contexts(&self) -> &[Vec<usize>] {
        &self.contexts
    }

    pub fn current(&self) -> Option<usize> {
        self.current
    }

    pub fn set_current(&mut self, id: Option<usize>) {
        self.current = id;
    }

    /// Starts a new context unless the current one is still empty.
    pub fn begin_context(&mut self) {
        if self.contexts.last().is_some_and(|c| !c.is_empty()) {
            self.contexts.push(Vec::new());
        }
    }

    /// Binds a fresh phrase index to the working phrase.
    pub fn memorize(&mut self, working: &Phrase) -> Result<usize> {
        if phrase_is_empty(working) {
            return Err(Error::Contract("memorizing an empty phrase".into()));
        }
        let id = self.remph.claim_fresh()?;
        self.recall.imprint(id, &row_neurons(working))?;
        let context = self.contexts.len() - 1;
        let position = self.contexts[context].len();
        self.contexts[context].push(id);
        self.meta.push(PhraseMeta { context, position });
        self.by_content.entry(*working).or_default().push(id);
        self.current = Some(id);
        Ok(id)
    }

    /// The phrase bound to index `id`, read back through its forcing links.
    pub fn phrase(&self, id: usize) -> Result<Phrase> {
        if id >= self.meta.len() {
            return Err(Error::Integrity(format!("phrase index {id} was never used")));
        }
        let mut p = EMPTY_PHRASE;
        let targets = self.recall.positive_targets(id);
        if targets.len() != MAX_PHRASE {
            return Err(Error::Integrity(format!("phrase index {id} forces {} rows", targets.len())));
        }
        for n in targets {
            p[n % MAX_PHRASE] = n / MAX_PHRASE;
        }
        Ok(p)
    }

    /// Stores the association between a word-group cue and a phrase.
    pub fn associate(&mut self, group: &[usize; GROUP_ROWS], phrase: usize) -> Result<usize> {
        if group.iter().all(|&w| w == crate::lexicon::NULL_WORD) {
            return Err(Error::Contract("associating an empty word group".into()));
        }
        if phrase >= self.meta.len() {
            return Err(Error::Contract(format!("association to unknown phrase {phrase}")));
        }
        let a = self.cues.claim_fresh()?;
        self.cue_bank.dhl_update_in(a, &row_neurons(group))?;
        self.target_bank.imprint(a, &[phrase])?;
        self.by_cue.entry(*group).or_insert(a);
        Ok(a)
    }

    fn cue_of(&self, a: usize) -> Result<[usize; GROUP_ROWS]> {
        let mut cue = [0; GROUP_ROWS];
        let mut rows = 0;
        for (pre, w) in self.cue_bank.incoming(a) {
            if w > 0 {
                cue[pre % GROUP_ROWS] = pre / GROUP_ROWS;
                rows += 1;
            }
        }
        if rows != GROUP_ROWS {
            return Err(Error::Integrity(format!("association {a} has {rows} cue rows")));
        }
        Ok(cue)
    }

    /// Association neuron that wins for `group`, if any association exists.
    ///
    /// Every row of the group is one active neuron, so a stored cue scores
    /// `w_max * (2 * overlap - rows)`; the lowest index wins ties and the
    /// first unused neuron stands for "no association" with score zero.
    pub fn best_association(&self, group: &[usize; GROUP_ROWS]) -> Option<usize> {
        if let Some(&a) = self.by_cue.get(group) {
            return Some(a);
        }
        self.scan_associations(group)
    }

    /// The same choice as [`Ltm::best_association`] from the full input sum.
    pub fn scan_associations(&self, group: &[usize; GROUP_ROWS]) -> Option<usize> {
        let used = self.cues.used_count();
        if used == 0 {
            return None;
        }
        let mut y = vec![0; used + 1];
        self.cue_bank.accumulate(&row_neurons(group), &mut y);
        let winner = crate::ssm::top_k(&y, 1)[0];
        (winner < used).then_some(winner)
    }

    fn target_of(&self, a: usize) -> Result<usize> {
        self.target_bank
            .positive_targets(a)
            .first()
            .copied()
            .ok_or_else(|| Error::Integrity(format!("association {a} has no target")))
    }

    fn load(&mut self, stm: &mut Stm, id: usize) -> Result<()> {
        stm.force_working(self.phrase(id)?);
        self.current = Some(id);
        self.remph.set_active(vec![id])?;
        stm.retrieval_miss = false;
        Ok(())
    }

    /// Retrieves the phrase associated with the word group.
    pub fn retr_as(&mut self, stm: &mut Stm) -> Result<Retrieval> {
        let group = stm.group;
        if group.iter().all(|&w| w == crate::lexicon::NULL_WORD) {
            stm.retrieval_miss = true;
            return Ok(Retrieval::Miss);
        }
        match self.best_association(&group) {
            Some(a) => {
                let id = self.target_of(a)?;
                self.load(stm, id)?;
                Ok(Retrieval::Hit(id))
            }
            None => {
                stm.retrieval_miss = true;
                Ok(Retrieval::Miss)
            }
        }
    }

    /// The memorized phrase the working phrase stands for: the active index
    /// if it still matches, else the latest phrase with the same words.
    pub fn resolve(&self, working: &Phrase) -> Option<usize> {
        if let Some(id) = self.current {
            if self.phrase(id).ok().as_ref() == Some(working) {
                return Some(id);
            }
        }
        self.by_content.get(working).and_then(|ids| ids.last().copied())
    }

    pub fn get_start_ph(&mut self, stm: &mut Stm) -> Result<Retrieval> {
        let Some(id) = self.resolve(&stm.working) else {
            stm.retrieval_miss = true;
            return Ok(Retrieval::Miss);
        };
        let start = self.contexts[self.meta[id].context][0];
        self.load(stm, start)?;
        Ok(Retrieval::Hit(start))
    }

    pub fn get_next_ph(&mut self, stm: &mut Stm) -> Result<Retrieval> {
        let Some(id) = self.resolve(&stm.working) else {
            stm.retrieval_miss = true;
            return Ok(Retrieval::Miss);
        };
        let PhraseMeta { context, position } = self.meta[id];
        match self.contexts[context].get(position + 1) {
            Some(&next) => {
                self.load(stm, next)?;
                Ok(Retrieval::Hit(next))
            }
            None => {
                stm.force_working(EMPTY_PHRASE);
                self.current = None;
                self.remph.clear();
                stm.retrieval_miss = false;
                Ok(Retrieval::ContextEnd)
            }
        }
    }

    /// Stored learnable and forcing entries.
    pub fn allocated(&self) -> usize {
        self.recall.allocated() + self.cue_bank.allocated() + self.target_bank.allocated()
    }

    /// Connections the learnable association bank represents.
    pub fn learnable_allocated(&self) -> usize {
        self.cue_bank.allocated()
    }

    pub fn learnable_virtual(&self) -> u128 {
        self.cue_bank.virtual_count()
    }

    pub fn virtual_count(&self) -> u128 {
        self.recall.virtual_count() + self.cue_bank.virtual_count() + self.target_bank.virtual_count()
    }
}
