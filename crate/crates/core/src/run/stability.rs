use std::collections::BTreeSet;

use crate::model::{range_of, AxiomId, Token};

/// Per-position history needed to estimate limits, updated as a run advances.
///
/// Stages recorded here are the index `t` of the first string `sigma_t`
/// showing the new value, so an event at stage `s` records `s + 1`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StabilityTracker {
    last_change: Vec<u64>,
    last_revision: Vec<Option<u64>>,
}

impl StabilityTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn expanded(&mut self, stage: u64) {
        self.last_change.push(stage + 1);
        self.last_revision.push(None);
    }

    /// Entry `k - 1` was rewritten and everything after it dropped.
    pub fn revised(&mut self, k: usize, stage: u64) {
        self.last_change.truncate(k);
        self.last_revision.truncate(k);
        self.last_change[k - 1] = stage + 1;
        self.last_revision[k - 1] = Some(stage + 1);
    }

    pub fn len(&self) -> usize {
        self.last_change.len()
    }

    pub fn is_empty(&self) -> bool {
        self.last_change.is_empty()
    }

    /// Builds the report for a run of `horizon` stages ending in `tokens`.
    pub fn report<T: Clone>(&self, tokens: &[T], horizon: u64, window: u64) -> Stability<T> {
        debug_assert_eq!(tokens.len(), self.len());
        let window = window.min(horizon);
        let cutoff = horizon - window;
        let positions: Vec<PositionHistory<T>> = tokens
            .iter()
            .zip(&self.last_change)
            .zip(&self.last_revision)
            .map(|((value, &last_change), &last_revision)| PositionHistory {
                value: value.clone(),
                last_change,
                last_revision,
            })
            .collect();
        let stable_prefix_length = positions.iter().take_while(|p| p.last_change <= cutoff).count();
        let loop_suspects = positions
            .iter()
            .enumerate()
            .filter(|(_, p)| p.last_revision.is_some_and(|t| t > cutoff))
            .map(|(i, _)| i)
            .collect();
        Stability {
            positions,
            stable_prefix_length,
            window,
            horizon,
            loop_suspects,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PositionHistory<T> {
    pub value: T,
    pub last_change: u64,
    pub last_revision: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stability<T> {
    pub positions: Vec<PositionHistory<T>>,
    pub stable_prefix_length: usize,
    /// Window actually used, clamped to the horizon.
    pub window: u64,
    pub horizon: u64,
    pub loop_suspects: BTreeSet<usize>,
}

impl<T> Stability<T> {
    pub fn stable_values(&self) -> impl Iterator<Item = &T> {
        self.positions[..self.stable_prefix_length].iter().map(|p| &p.value)
    }
}

/// Stability of a run over axioms.
pub type StabilityReport = Stability<Token>;

impl StabilityReport {
    /// The limiting belief set estimate: axioms in the stable prefix.
    pub fn belief_estimate(&self) -> BTreeSet<AxiomId> {
        let prefix: Vec<Token> = self.stable_values().copied().collect();
        range_of(&prefix)
    }

    /// No suspects and every rule visible before the window opened. Under
    /// these conditions the table cannot fire on the stable prefix again.
    pub fn is_clean(&self, rule_horizon: u64) -> bool {
        self.loop_suspects.is_empty() && rule_horizon <= self.horizon - self.window
    }
}
