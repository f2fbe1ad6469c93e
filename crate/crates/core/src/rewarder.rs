//! Recorded state-action epochs and their replay into the executive.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::executive::{MentalAction, StateActionNet};
use crate::state::InternalState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    Full,
    Partial,
}

impl RewardKind {
    /// Action that closes a rewarded epoch.
    pub fn terminal(self) -> MentalAction {
        match self {
            RewardKind::Full => MentalAction::Done,
            RewardKind::Partial => MentalAction::Continue,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub state: InternalState,
    pub action: MentalAction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochTrace {
    steps: Vec<Step>,
    t_max: usize,
    epoch: u64,
}

impl EpochTrace {
    pub fn new(t_max: usize) -> Self {
        EpochTrace {
            steps: Vec::new(),
            t_max,
            epoch: 0,
        }
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn is_full(&self) -> bool {
        self.steps.len() >= self.t_max
    }

    pub fn record(&mut self, state: InternalState, action: MentalAction) -> Result<()> {
        if self.is_full() {
            return Err(Error::Contract(format!("epoch exceeded {} steps", self.t_max)));
        }
        self.steps.push(Step { state, action });
        Ok(())
    }

    /// Drops steps recorded after `len`.
    pub fn truncate(&mut self, len: usize) {
        self.steps.truncate(len);
    }

    /// Starts the next epoch with an empty trace.
    pub fn reset(&mut self) {
        if !self.steps.is_empty() {
            self.steps.clear();
        }
        self.epoch += 1;
    }

    /// Trains every recorded step, in order, `copies` times each. Returns the
    /// number of neurons trained.
    pub fn replay(&self, net: &mut StateActionNet, copies: usize) -> Result<usize> {
        let mut trained = 0;
        for step in &self.steps {
            for _ in 0..copies {
                net.train(&step.state, step.action)?;
                trained += 1;
            }
        }
        Ok(trained)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::ComponentState;
    use crate::ssm::UNIT;

    fn s(i: usize) -> InternalState {
        InternalState {
            components: vec![ComponentState {
                name: "c".into(),
                size: 4,
                active: vec![i],
                w_max: UNIT,
            }],
        }
    }

    #[test]
    fn records_in_order_up_to_the_cap() {
        let mut t = EpochTrace::new(2);
        assert!(t.is_empty());
        t.record(s(0), MentalAction::NextW).unwrap();
        t.record(s(1), MentalAction::GetW).unwrap();
        assert_eq!(t.len(), 2);
        assert!(t.record(s(2), MentalAction::Done).is_err());
        assert_eq!(t.steps()[1].action, MentalAction::GetW);
    }

    #[test]
    fn reset_is_idempotent_and_counts_epochs() {
        let mut t = EpochTrace::new(4);
        t.record(s(0), MentalAction::NextW).unwrap();
        t.reset();
        let e = t.epoch();
        t.reset();
        assert!(t.is_empty());
        assert_eq!(t.epoch(), e + 1);
    }

    #[test]
    fn replay_trains_every_copy() {
        let mut t = EpochTrace::new(4);
        t.record(s(0), MentalAction::NextW).unwrap();
        t.record(s(1), MentalAction::Done).unwrap();
        let mut net = StateActionNet::new(16);
        assert_eq!(t.replay(&mut net, 3).unwrap(), 6);
        assert_eq!(net.used(), 6);
        assert_eq!(net.select(&s(1), 3).unwrap().action, MentalAction::Done);
    }
}
