//! Knowledge-base repair and revision by running a dialectical system.
//!
//! Entrenchment is the listing order: when a conflict appears, the run
//! rejects the least entrenched item of the first inconsistent prefix.

mod kb;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::consequence::{ConsequenceError, Rule, RuleTable, Symbol};
use crate::model::AxiomId;
use crate::parse::ParseError;
use crate::run::{estimate_beliefs, QSystem, ReplacementError, ReplacementMap, RunError, RunTrace, StabilityReport};

pub use kb::{Incoming, KnowledgeBase};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApplicationError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Consequence(#[from] ConsequenceError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("bad replacement hint: {0}")]
    Hint(#[from] ReplacementError),
    #[error("horizon {horizon} is shorter than the {needed} items")]
    HorizonTooSmall { horizon: u64, needed: usize },
    #[error("the new items are inconsistent on their own: {}", .0.join(" "))]
    InconsistentInput(Vec<String>),
    #[error("revise takes exactly one new item, got {0}")]
    NotSingle(usize),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RepairMode {
    /// Conflicts excise.
    #[default]
    D,
    /// A conflict whose least entrenched member has a hint replaces it.
    Q,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepairResult {
    pub kept: BTreeSet<AxiomId>,
    pub removed: BTreeSet<AxiomId>,
    pub stability: StabilityReport,
    pub trace: RunTrace,
    /// Not every item is in a clean stable prefix by the horizon.
    pub partial: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RevisionResult {
    pub repair: RepairResult,
    /// The externally given items, all accepted.
    pub accepted: Vec<AxiomId>,
}

fn run_over(
    table: RuleTable,
    r: ReplacementMap,
    items: usize,
    horizon: u64,
    window: u64,
) -> Result<RepairResult, ApplicationError> {
    if horizon < items as u64 {
        return Err(ApplicationError::HorizonTooSmall { horizon, needed: items });
    }
    let system = QSystem::new(table, r)?;
    let trace = system.run(horizon)?;
    let stability = estimate_beliefs(&trace, window);
    let universe: BTreeSet<AxiomId> = (0..items as u64).map(AxiomId).collect();
    let kept: BTreeSet<AxiomId> = stability.belief_estimate().intersection(&universe).copied().collect();
    let removed = universe.difference(&kept).copied().collect();
    let partial = stability.stable_prefix_length < items || !stability.is_clean(trace.rule_horizon);
    Ok(RepairResult {
        kept,
        removed,
        stability,
        trace,
        partial,
    })
}

/// The consequence table of a knowledge base.
pub fn kb_table(kb: &KnowledgeBase) -> Result<RuleTable, ApplicationError> {
    Ok(RuleTable::from_horn(&kb.ids(), &kb.rules, &kb.conflicts)?)
}

pub fn repair(
    kb: &KnowledgeBase,
    horizon: u64,
    window: u64,
    mode: RepairMode,
) -> Result<RepairResult, ApplicationError> {
    let table = kb_table(kb)?;
    let (table, r) = match mode {
        RepairMode::D => (table, ReplacementMap::new()),
        RepairMode::Q => {
            let mut r = ReplacementMap::new();
            for &(from, to) in &kb.hints {
                r.insert(from, to)?;
            }
            let rules = table
                .rules()
                .iter()
                .map(|rule| {
                    let target = rule.premises.iter().next_back().copied();
                    match (rule.conclusion, target) {
                        (Symbol::Bottom, Some(t)) if r.contains(t) => {
                            Rule::new(rule.stage, rule.premises.iter().copied(), Symbol::CounterExample)
                        }
                        _ => rule.clone(),
                    }
                })
                .collect();
            (RuleTable::from_rules(rules), r)
        }
    };
    run_over(table, r, kb.items.len(), horizon, window)
}

/// Revision by a single externally given item.
pub fn revise(
    kb: &KnowledgeBase,
    input: &Incoming,
    horizon: u64,
    window: u64,
) -> Result<RevisionResult, ApplicationError> {
    if input.items.len() != 1 {
        return Err(ApplicationError::NotSingle(input.items.len()));
    }
    revise_stream(kb, input, horizon, window)
}

/// Revision by a sequence of externally given items; the `i`-th becomes
/// visible at stage `i`.
pub fn revise_stream(
    kb: &KnowledgeBase,
    input: &Incoming,
    horizon: u64,
    window: u64,
) -> Result<RevisionResult, ApplicationError> {
    let base = kb.items.len();
    let stream = input.ids(base);
    let all: Vec<AxiomId> = (0..(base + stream.len()) as u64).map(AxiomId).collect();
    let rules: Vec<_> = kb.rules.iter().chain(&input.rules).cloned().collect();
    let conflicts: Vec<_> = kb.conflicts.iter().chain(&input.conflicts).cloned().collect();
    let table = RuleTable::from_horn(&all, &rules, &conflicts)?;
    let injected: BTreeSet<AxiomId> = stream.iter().copied().collect();
    if table.limit_closure(&injected).contains(&Symbol::Bottom) {
        return Err(ApplicationError::InconsistentInput(input.items.clone()));
    }
    let kept_universe: BTreeSet<AxiomId> = kb.ids().into_iter().collect();
    let revised = table.stream_revision_operator(&kept_universe, &stream);
    let repair = run_over(revised, ReplacementMap::new(), base, horizon, window)?;
    Ok(RevisionResult {
        repair,
        accepted: stream,
    })
}

impl RepairResult {
    pub fn write_report(&self, kb: &KnowledgeBase, f: &mut impl fmt::Write) -> fmt::Result {
        writeln!(f, "kept: {}", kb.names(&self.kept).join(" "))?;
        writeln!(f, "removed: {}", kb.names(&self.removed).join(" "))?;
        writeln!(
            f,
            "stable: {} of {} positions, window {}{}",
            self.stability.stable_prefix_length,
            self.trace.final_string.len(),
            self.stability.window,
            if self.partial { " (partial)" } else { "" }
        )?;
        let revisions: Vec<String> = self
            .trace
            .events
            .iter()
            .filter(|e| e.kind.is_revision())
            .map(|e| format!("{}:{e}", e.stage))
            .collect();
        writeln!(f, "revisions: {}", revisions.join(", "))
    }
}

impl RevisionResult {
    pub fn write_report(&self, kb: &KnowledgeBase, input: &Incoming, f: &mut impl fmt::Write) -> fmt::Result {
        writeln!(f, "accepted: {}", input.items.join(" "))?;
        self.repair.write_report(kb, f)
    }
}
