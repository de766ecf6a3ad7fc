//! Sources of observed transitions `(s_k, a_k, s_{k+1}, r_k)`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::mdp::{self, MdpModel, StochasticPolicy};
use crate::schedule::{DistributionSchedule, MeasureSchedule};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub next_state: usize,
    pub reward: f64,
}

pub trait TransitionSource {
    /// The transition observed at step `k`; steps are requested in order.
    fn next_transition(&mut self, k: usize) -> Result<Transition>;
}

/// One continuous trajectory of the behavior policy. The first state is
/// drawn from the schedule's distribution at its first observed step, so the
/// marginal law of `(s_k, a_k)` is exactly `M_k`.
pub struct TrajectorySampler<'a, R> {
    model: &'a MdpModel,
    behavior: StochasticPolicy,
    state: usize,
    rng: R,
}

impl<'a, R: Rng> TrajectorySampler<'a, R> {
    pub fn new(model: &'a MdpModel, schedule: &mut DistributionSchedule, mut rng: R) -> Self {
        let start = schedule.state_distribution_at(schedule.start_step());
        let state = mdp::sample_index(&start, &mut rng);
        Self {
            model,
            behavior: schedule.behavior().clone(),
            state,
            rng,
        }
    }

    pub fn current_state(&self) -> usize {
        self.state
    }
}

impl<R: Rng> TransitionSource for TrajectorySampler<'_, R> {
    fn next_transition(&mut self, _k: usize) -> Result<Transition> {
        let s = self.state;
        let a = mdp::sample_index(self.behavior.row(s), &mut self.rng);
        let (next, reward) = mdp::sample_step(self.model, s, a, &mut self.rng)?;
        self.state = next;
        Ok(Transition {
            state: s,
            action: a,
            next_state: next,
            reward,
        })
    }
}

/// Independent draws `(s_k, a_k) ~ M_k` at every step.
pub struct IidSampler<'a, M, R> {
    model: &'a MdpModel,
    schedule: M,
    rng: R,
}

impl<'a, M: MeasureSchedule, R: Rng> IidSampler<'a, M, R> {
    pub fn new(model: &'a MdpModel, schedule: M, rng: R) -> Self {
        Self {
            model,
            schedule,
            rng,
        }
    }
}

impl<M: MeasureSchedule, R: Rng> TransitionSource for IidSampler<'_, M, R> {
    fn next_transition(&mut self, k: usize) -> Result<Transition> {
        let m = self.schedule.measure_at(k);
        let idx = mdp::sample_index(m.as_slice(), &mut self.rng);
        let (action, state) = (idx / m.n_states(), idx % m.n_states());
        let (next, reward) = mdp::sample_step(self.model, state, action, &mut self.rng)?;
        Ok(Transition {
            state,
            action,
            next_state: next,
            reward,
        })
    }
}

/// A pre-recorded transition log, for running without a model.
#[derive(Debug, Clone)]
pub struct RecordedStream {
    items: Vec<Transition>,
    pos: usize,
}

impl RecordedStream {
    pub fn new(items: Vec<Transition>) -> Self {
        Self { items, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.items.len() - self.pos
    }
}

impl TransitionSource for RecordedStream {
    fn next_transition(&mut self, _k: usize) -> Result<Transition> {
        let t = self
            .items
            .get(self.pos)
            .copied()
            .ok_or(Error::StreamExhausted(self.pos))?;
        self.pos += 1;
        Ok(t)
    }
}
