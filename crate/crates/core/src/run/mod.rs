//! The run recursion of q-dialectical systems.
//!
//! At stage `s` the agent looks for the least `k` such that `H(s, ran(σ↾k))`
//! contains `⊥` or `ce`. `⊥` wins at equal `k` and excises entry `k-1`; `ce`
//! replaces it by its `r`-image. Without a trigger, `a_{|σ|}` is appended.

mod replacement;
mod stability;
mod trace;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::consequence::{ConsequenceError, RuleTable, Symbol};
use crate::model::{AxiomId, BeliefString, Token};

pub use replacement::{ReplacementError, ReplacementMap, DEFAULT_CERTIFICATE_DEPTH};
pub use stability::{PositionHistory, Stability, StabilityReport, StabilityTracker};
pub use trace::{EventKind, Replay, RunTrace, TraceEvent};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("stage {stage}, position {k}: r({axiom}) is undefined")]
    MissingReplacement { stage: u64, k: usize, axiom: AxiomId },
    #[error(transparent)]
    Load(#[from] ConsequenceError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    D,
    P,
    Q,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::D => "d",
            Variant::P => "p",
            Variant::Q => "q",
        })
    }
}

/// Which restrictions a table satisfies: `(d, p)`.
pub fn variant_flags(table: &RuleTable) -> (bool, bool) {
    (
        !table.has_conclusion(Symbol::CounterExample),
        !table.has_conclusion(Symbol::Bottom),
    )
}

/// The most specific variant; `d` when both restrictions hold.
pub fn classify_variant(table: &RuleTable) -> Variant {
    match variant_flags(table) {
        (true, _) => Variant::D,
        (false, true) => Variant::P,
        (false, false) => Variant::Q,
    }
}

/// A q-dialectical system over the canonical axiom listing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QSystem {
    operator: RuleTable,
    pub replacement: ReplacementMap,
}

impl QSystem {
    pub fn new(operator: RuleTable, replacement: ReplacementMap) -> Result<Self, RunError> {
        operator.check_loadable()?;
        Ok(Self { operator, replacement })
    }

    pub fn operator(&self) -> &RuleTable {
        &self.operator
    }

    pub fn variant(&self) -> Variant {
        classify_variant(&self.operator)
    }

    pub fn run(&self, horizon: u64) -> Result<RunTrace, RunError> {
        let mut state = RunState::new();
        let mut events = Vec::with_capacity(horizon as usize);
        for s in 0..horizon {
            events.push(state.step(&self.operator, &self.replacement, s)?);
        }
        Ok(RunTrace {
            events,
            horizon,
            rule_horizon: self.operator.max_stage(),
            final_string: state.sigma,
        })
    }
}

/// One stage of the recursion, computed directly from the definition by
/// scanning every prefix.
pub fn step(system: &QSystem, sigma: &BeliefString, s: u64) -> Result<(BeliefString, TraceEvent), RunError> {
    let tokens = sigma.tokens();
    let mut seen = std::collections::BTreeSet::new();
    for k in 1..=tokens.len() {
        if let Token::Axiom(a) = tokens[k - 1] {
            seen.insert(a);
        }
        let (bottom, ce) = system.operator.triggers(s, |a| seen.contains(&a));
        if bottom || ce {
            let old = tokens[k - 1].axiom().expect("least k never lands on a gap");
            let kind = if bottom {
                EventKind::Excision { k, old }
            } else {
                let new = system.replacement.get(old).ok_or(RunError::MissingReplacement {
                    stage: s,
                    k,
                    axiom: old,
                })?;
                EventKind::Replacement { k, old, new }
            };
            let mut next = sigma.clone();
            kind.apply(&mut next);
            let len_after = next.len();
            return Ok((
                next,
                TraceEvent {
                    stage: s,
                    kind,
                    len_after,
                },
            ));
        }
    }
    let kind = EventKind::Expansion(AxiomId(tokens.len() as u64));
    let next = sigma.expansion();
    let len_after = next.len();
    Ok((
        next,
        TraceEvent {
            stage: s,
            kind,
            len_after,
        },
    ))
}

/// Incremental run state.
///
/// Keeps, for each axiom, the positions where it occurs, so the least trigger
/// index of a rule is one past the latest first occurrence among its premises.
/// Between calls the rule table may only grow by appending.
#[derive(Clone, Debug, Default)]
pub struct RunState {
    sigma: BeliefString,
    occurrences: HashMap<AxiomId, Vec<usize>>,
    tracker: StabilityTracker,
    /// Per rule, a premise that was absent at the last check. While it stays
    /// absent the rule cannot fire and is skipped without a full scan.
    watch: Vec<Option<AxiomId>>,
    /// Per rule, the least `k` with its premises in `ran(σ↾k)`, once known.
    /// Appends never move a first occurrence, so only revisions at or below
    /// the cached `k` invalidate it.
    cover: Vec<Option<usize>>,
}

impl RunState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sigma(&self) -> &BeliefString {
        &self.sigma
    }

    pub fn tracker(&self) -> &StabilityTracker {
        &self.tracker
    }

    fn first_position(&self, a: AxiomId) -> Option<usize> {
        self.occurrences.get(&a).and_then(|v| v.first().copied())
    }

    /// Least `k` with a trigger in `H(s, ran(σ↾k))`, and whether `⊥` fires there.
    pub fn least_trigger(&mut self, table: &RuleTable, s: u64) -> Option<(usize, bool)> {
        let mut best: Option<(usize, bool)> = None;
        self.watch.resize(table.len(), None);
        self.cover.resize(table.len(), None);
        for (i, rule) in table.rules().iter().enumerate() {
            if rule.stage > s || !rule.conclusion.is_trigger() {
                continue;
            }
            let bottom = rule.conclusion == Symbol::Bottom;
            if let Some(k) = self.cover[i] {
                best = match best {
                    Some((bk, bb)) if bk < k || (bk == k && bb) => Some((bk, bb)),
                    _ => Some((k, bottom)),
                };
                continue;
            }
            if let Some(w) = self.watch[i] {
                if !self.occurrences.contains_key(&w) {
                    continue;
                }
                self.watch[i] = None;
            }
            let mut k = 1;
            let mut missing = None;
            for &p in &rule.premises {
                match self.first_position(p) {
                    Some(pos) => k = k.max(pos + 1),
                    None => {
                        missing = Some(p);
                        break;
                    }
                }
            }
            if missing.is_some() {
                self.watch[i] = missing;
                continue;
            }
            self.cover[i] = Some(k);
            best = match best {
                Some((bk, bb)) if bk < k || (bk == k && bb) => Some((bk, bb)),
                _ => Some((k, bottom)),
            };
        }
        best
    }

    pub fn step(&mut self, table: &RuleTable, r: &ReplacementMap, s: u64) -> Result<TraceEvent, RunError> {
        let kind = match self.least_trigger(table, s) {
            None => EventKind::Expansion(AxiomId(self.sigma.len() as u64)),
            Some((k, bottom)) => {
                let old = self
                    .sigma
                    .get(k - 1)
                    .and_then(Token::axiom)
                    .expect("least k never lands on a gap");
                if bottom {
                    EventKind::Excision { k, old }
                } else {
                    let new = r.get(old).ok_or(RunError::MissingReplacement {
                        stage: s,
                        k,
                        axiom: old,
                    })?;
                    EventKind::Replacement { k, old, new }
                }
            }
        };
        self.apply(kind, s);
        Ok(TraceEvent {
            stage: s,
            kind,
            len_after: self.sigma.len(),
        })
    }

    fn apply(&mut self, kind: EventKind, s: u64) {
        match kind {
            EventKind::Expansion(a) => {
                self.push(Token::Axiom(a));
                self.tracker.expanded(s);
            }
            EventKind::Excision { k, .. } | EventKind::Replacement { k, .. } => {
                while self.sigma.len() >= k {
                    self.pop();
                }
                for c in &mut self.cover {
                    if c.is_some_and(|c| c >= k) {
                        *c = None;
                    }
                }
                let token = match kind {
                    EventKind::Replacement { new, .. } => Token::Axiom(new),
                    _ => Token::Gap,
                };
                self.push(token);
                self.tracker.revised(k, s);
            }
        }
    }

    fn push(&mut self, token: Token) {
        if let Token::Axiom(a) = token {
            self.occurrences.entry(a).or_default().push(self.sigma.len());
        }
        self.sigma.push(token);
    }

    fn pop(&mut self) {
        let n = self.sigma.len() - 1;
        if let Some(Token::Axiom(a)) = self.sigma.get(n) {
            let positions = self.occurrences.get_mut(&a).expect("tracked");
            positions.pop();
            if positions.is_empty() {
                self.occurrences.remove(&a);
            }
        }
        self.sigma.truncate(n);
    }
}

/// Stability of every position at the end of a trace.
pub fn estimate_beliefs(trace: &RunTrace, window: u64) -> StabilityReport {
    let mut tracker = StabilityTracker::new();
    for event in &trace.events {
        match event.kind.k() {
            None => tracker.expanded(event.stage),
            Some(k) => tracker.revised(k, event.stage),
        }
    }
    tracker.report(trace.final_string.tokens(), trace.horizon, window)
}
