//! Finitely presented approximated consequence operators.
//!
//! An operator `H(n, F)` is given by a table of timed rules. A rule
//! `(stage, premises, conclusion)` contributes its conclusion to `H(n, F)`
//! whenever `stage <= n` and `premises ⊆ F`; every `F` is also included in its
//! own consequences. This makes `H` monotone in both arguments by
//! construction. Whether the limit operator satisfies Iteration depends on the
//! table and is checked by [`RuleTable::validate`].

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::AxiomId;
use crate::parse::{source_lines, ParseError};

/// A member of `H(n, F)`: an axiom, a contradiction or a counterexample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Axiom(AxiomId),
    Bottom,
    CounterExample,
}

impl Symbol {
    pub fn is_trigger(self) -> bool {
        !matches!(self, Symbol::Axiom(_))
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Axiom(a) => a.fmt(f),
            Symbol::Bottom => f.write_str("BOT"),
            Symbol::CounterExample => f.write_str("CE"),
        }
    }
}

impl FromStr for Symbol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "BOT" => Ok(Symbol::Bottom),
            "CE" => Ok(Symbol::CounterExample),
            other => other
                .parse()
                .map(Symbol::Axiom)
                .map_err(|_| format!("bad symbol `{other}` (expected `a<k>`, `BOT` or `CE`)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    pub stage: u64,
    pub premises: BTreeSet<AxiomId>,
    pub conclusion: Symbol,
}

impl Rule {
    pub fn new(stage: u64, premises: impl IntoIterator<Item = AxiomId>, conclusion: Symbol) -> Self {
        Self {
            stage,
            premises: premises.into_iter().collect(),
            conclusion,
        }
    }

    fn subsumes(&self, other: &Rule) -> bool {
        self.conclusion == other.conclusion && self.stage <= other.stage && self.premises.is_subset(&other.premises)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at {} :", self.stage)?;
        for p in &self.premises {
            write!(f, " {p}")?;
        }
        write!(f, " |- {}", self.conclusion)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConsequenceError {
    #[error("validation bound {bound} is below the largest mentioned axiom index {needed}")]
    ValidationScope { bound: u64, needed: u64 },
    #[error("{0} is referenced but not declared")]
    Undeclared(AxiomId),
    #[error("rule `{0}` derives a contradiction or counterexample from the empty set")]
    TriggerFromEmptySet(Rule),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Append-only list of timed rules.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RuleTable {
    rules: Vec<Rule>,
}

impl RuleTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_rules(rules: Vec<Rule>) -> Self {
        Self { rules }
    }

    pub fn push(&mut self, rule: Rule) {
        self.rules.push(rule);
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn max_stage(&self) -> u64 {
        self.rules.iter().map(|r| r.stage).max().unwrap_or(0)
    }

    /// Largest axiom index occurring in a premise or conclusion.
    pub fn max_axiom(&self) -> Option<u64> {
        self.rules
            .iter()
            .flat_map(|r| {
                let concl = match r.conclusion {
                    Symbol::Axiom(a) => Some(a.0),
                    _ => None,
                };
                r.premises.iter().map(|a| a.0).chain(concl)
            })
            .max()
    }

    pub fn has_conclusion(&self, symbol: Symbol) -> bool {
        self.rules.iter().any(|r| r.conclusion == symbol)
    }

    /// `H(n, F)`.
    pub fn evaluate(&self, n: u64, set: &BTreeSet<AxiomId>) -> BTreeSet<Symbol> {
        let mut out: BTreeSet<Symbol> = set.iter().copied().map(Symbol::Axiom).collect();
        out.extend(
            self.rules
                .iter()
                .filter(|r| r.stage <= n && r.premises.is_subset(set))
                .map(|r| r.conclusion),
        );
        out
    }

    /// `H^∞(F)`: the evaluation once every rule is visible.
    pub fn limit_closure(&self, set: &BTreeSet<AxiomId>) -> BTreeSet<Symbol> {
        self.evaluate(self.max_stage(), set)
    }

    /// Which triggers `H(n, ·)` produces on the set described by `contains`.
    pub(crate) fn triggers(&self, n: u64, contains: impl Fn(AxiomId) -> bool) -> (bool, bool) {
        let mut bottom = false;
        let mut ce = false;
        for r in &self.rules {
            if r.stage > n || !r.conclusion.is_trigger() {
                continue;
            }
            if (r.conclusion == Symbol::Bottom && bottom) || (r.conclusion == Symbol::CounterExample && ce) {
                continue;
            }
            if r.premises.iter().all(|&p| contains(p)) {
                match r.conclusion {
                    Symbol::Bottom => bottom = true,
                    Symbol::CounterExample => ce = true,
                    Symbol::Axiom(_) => {}
                }
            }
        }
        (bottom, ce)
    }

    /// Rejects tables that derive `⊥` or `ce` from the empty set at any stage.
    pub fn check_loadable(&self) -> Result<(), ConsequenceError> {
        match self
            .rules
            .iter()
            .find(|r| r.conclusion.is_trigger() && r.premises.is_empty())
        {
            Some(rule) => Err(ConsequenceError::TriggerFromEmptySet(rule.clone())),
            None => Ok(()),
        }
    }

    /// Closes the table under chaining of axiom-producing rules.
    ///
    /// Whenever `P ⊢ x` and `Q ⊢ y` with `x ∈ Q`, the rule
    /// `P ∪ (Q \ {x}) ⊢ y` is added (unless an existing rule subsumes it) at
    /// stage `combine(stage_P, stage_Q)`. The result satisfies Iteration.
    pub fn saturate_with(&mut self, combine: impl Fn(u64, u64) -> u64) {
        loop {
            let mut added = Vec::new();
            for producer in &self.rules {
                let Symbol::Axiom(x) = producer.conclusion else {
                    continue;
                };
                for consumer in &self.rules {
                    if !consumer.premises.contains(&x) {
                        continue;
                    }
                    let mut premises = producer.premises.clone();
                    premises.extend(consumer.premises.iter().copied().filter(|&p| p != x));
                    if let Symbol::Axiom(y) = consumer.conclusion {
                        if premises.contains(&y) {
                            continue;
                        }
                    }
                    let candidate = Rule {
                        stage: combine(producer.stage, consumer.stage),
                        premises,
                        conclusion: consumer.conclusion,
                    };
                    let subsumed = self
                        .rules
                        .iter()
                        .chain(added.iter())
                        .any(|r: &Rule| r.subsumes(&candidate));
                    if !subsumed {
                        added.push(candidate);
                    }
                }
            }
            if added.is_empty() {
                return;
            }
            self.rules.extend(added);
        }
    }

    /// Checks Inclusion, staging, Monotony and Iteration over every `F`
    /// drawn from `{a_0..a_bound}` with at most `width` elements.
    pub fn validate(&self, bound: u64, width: usize) -> Result<ValidationReport, ConsequenceError> {
        if let Some(needed) = self.max_axiom() {
            if bound < needed {
                return Err(ConsequenceError::ValidationScope { bound, needed });
            }
        }
        let universe: Vec<AxiomId> = (0..=bound).map(AxiomId).collect();
        let subsets = subsets_up_to(&universe, width);
        let last_stage = self.max_stage() + 1;
        let structural = self.rules.iter().all(|r| r.conclusion.is_trigger());
        let mut report = ValidationReport {
            bound,
            width,
            sets_checked: subsets.len(),
            structural_iteration: structural,
            violations: Vec::new(),
        };

        for set in &subsets {
            let mut previous: Option<BTreeSet<Symbol>> = None;
            for n in 0..=last_stage {
                let value = self.evaluate(n, set);
                if !set.iter().all(|a| value.contains(&Symbol::Axiom(*a))) {
                    report.record(ViolationKind::Inclusion, Some(n), set, None);
                }
                if let Some(prev) = &previous {
                    if !prev.is_subset(&value) {
                        report.record(ViolationKind::Staging, Some(n - 1), set, None);
                    }
                }
                if set.len() < width {
                    for extra in &universe {
                        if set.contains(extra) {
                            continue;
                        }
                        let mut bigger = set.clone();
                        bigger.insert(*extra);
                        if !value.is_subset(&self.evaluate(n, &bigger)) {
                            report.record(ViolationKind::Monotony, Some(n), set, Some(*extra));
                        }
                    }
                }
                previous = Some(value);
            }
            if !structural {
                let closure = self.limit_closure(set);
                let axioms: BTreeSet<AxiomId> = closure
                    .iter()
                    .filter_map(|s| match s {
                        Symbol::Axiom(a) => Some(*a),
                        _ => None,
                    })
                    .collect();
                if self.limit_closure(&axioms) != closure {
                    report.record(ViolationKind::Iteration, None, set, None);
                }
            }
        }
        Ok(report)
    }

    /// Builds a table from Horn rules and conflict sets over declared items.
    ///
    /// Direct Horn rules sit at stage 1 and conflicts at stage 0; chained
    /// derivations are materialized at the sum of the stages they chain, so a
    /// rule's stage is its derivation depth.
    pub fn from_horn(
        items: &[AxiomId],
        horn_rules: &[(Vec<AxiomId>, AxiomId)],
        conflicts: &[Vec<AxiomId>],
    ) -> Result<RuleTable, ConsequenceError> {
        let declared: BTreeSet<AxiomId> = items.iter().copied().collect();
        let check = |a: &AxiomId| {
            if declared.contains(a) {
                Ok(())
            } else {
                Err(ConsequenceError::Undeclared(*a))
            }
        };
        let mut table = RuleTable::new();
        for (premises, conclusion) in horn_rules {
            premises.iter().try_for_each(check)?;
            check(conclusion)?;
            if premises.contains(conclusion) {
                continue;
            }
            table.push(Rule::new(1, premises.iter().copied(), Symbol::Axiom(*conclusion)));
        }
        for conflict in conflicts {
            conflict.iter().try_for_each(check)?;
            table.push(Rule::new(0, conflict.iter().copied(), Symbol::Bottom));
        }
        table.saturate_with(|a, b| a + b);
        Ok(table)
    }

    /// The operator `F ↦ H(n, F ∪ {b}) ∩ (K ∪ {⊥})`, by premise rewriting.
    pub fn revision_operator(&self, kept: &BTreeSet<AxiomId>, input: AxiomId) -> RuleTable {
        self.stream_revision_operator(kept, &[input])
    }

    /// The operator `F ↦ H(n, F ∪ {b_i : i <= n}) ∩ (K ∪ {⊥})`.
    ///
    /// A rule whose premises use `b_i` becomes visible no earlier than stage `i`.
    pub fn stream_revision_operator(&self, kept: &BTreeSet<AxiomId>, stream: &[AxiomId]) -> RuleTable {
        let position_of = |a: AxiomId| stream.iter().position(|&b| b == a);
        let mut out = RuleTable::new();
        for rule in &self.rules {
            let keep_conclusion = match rule.conclusion {
                Symbol::Axiom(a) => kept.contains(&a),
                Symbol::Bottom => true,
                Symbol::CounterExample => false,
            };
            if !keep_conclusion {
                continue;
            }
            let mut stage = rule.stage;
            let mut premises = BTreeSet::new();
            let mut reachable = true;
            for &p in &rule.premises {
                match position_of(p) {
                    Some(i) => stage = stage.max(i as u64),
                    None if kept.contains(&p) => {
                        premises.insert(p);
                    }
                    None => reachable = false,
                }
            }
            if reachable {
                out.push(Rule {
                    stage,
                    premises,
                    conclusion: rule.conclusion,
                });
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<RuleTable, ConsequenceError> {
        let mut table = RuleTable::new();
        for line in source_lines(text) {
            table.push(parse_rule_line(&line)?);
        }
        Ok(table)
    }
}

pub(crate) fn parse_rule_line(line: &crate::parse::SourceLine<'_>) -> Result<Rule, ParseError> {
    let text = line.text;
    let rest = text
        .strip_prefix("at")
        .filter(|r| r.starts_with(char::is_whitespace))
        .ok_or_else(|| line.error("expected `at <stage> : <premises> |- <symbol>`"))?;
    let (stage_part, rest) = rest
        .split_once(':')
        .ok_or_else(|| line.error_at(rest, "missing `:` after the stage"))?;
    let stage_text = stage_part.trim();
    let stage = stage_text
        .parse()
        .map_err(|_| line.error_at(stage_text, format!("bad stage `{stage_text}`")))?;
    let (premise_part, symbol_part) = rest
        .split_once("|-")
        .ok_or_else(|| line.error_at(rest, "missing `|-`"))?;
    let mut premises = BTreeSet::new();
    for token in premise_part.split_whitespace() {
        let a: AxiomId = token
            .parse()
            .map_err(|_| line.error_at(token, format!("bad premise `{token}`")))?;
        premises.insert(a);
    }
    let symbol_text = symbol_part.trim();
    if symbol_text.is_empty() {
        return Err(line.error_at(symbol_part, "missing conclusion"));
    }
    let conclusion = symbol_text
        .parse()
        .map_err(|msg: String| line.error_at(symbol_text, msg))?;
    Ok(Rule {
        stage,
        premises,
        conclusion,
    })
}

impl fmt::Display for RuleTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for rule in &self.rules {
            writeln!(f, "{rule}")?;
        }
        Ok(())
    }
}

fn subsets_up_to(universe: &[AxiomId], width: usize) -> Vec<BTreeSet<AxiomId>> {
    fn go(
        universe: &[AxiomId],
        start: usize,
        width: usize,
        current: &mut Vec<AxiomId>,
        out: &mut Vec<BTreeSet<AxiomId>>,
    ) {
        out.push(current.iter().copied().collect());
        if current.len() == width {
            return;
        }
        for i in start..universe.len() {
            current.push(universe[i]);
            go(universe, i + 1, width, current, out);
            current.pop();
        }
    }
    let mut out = Vec::new();
    go(universe, 0, width, &mut Vec::new(), &mut out);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    Inclusion,
    Staging,
    Monotony,
    Iteration,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub stage: Option<u64>,
    pub witness: BTreeSet<AxiomId>,
    /// For monotony failures, the element whose addition lost a consequence.
    pub added: Option<AxiomId>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} violated for F = {{", self.kind)?;
        for (i, a) in self.witness.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            a.fmt(f)?;
        }
        f.write_str("}")?;
        if let Some(n) = self.stage {
            write!(f, " at stage {n}")?;
        }
        if let Some(a) = self.added {
            write!(f, " when adding {a}")?;
        }
        Ok(())
    }
}

const MAX_RECORDED_VIOLATIONS: usize = 32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub bound: u64,
    pub width: usize,
    pub sets_checked: usize,
    /// Iteration holds without checking: the table never derives an axiom.
    pub structural_iteration: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn record(&mut self, kind: ViolationKind, stage: Option<u64>, set: &BTreeSet<AxiomId>, added: Option<AxiomId>) {
        if self.violations.len() < MAX_RECORDED_VIOLATIONS {
            self.violations.push(Violation {
                kind,
                stage,
                witness: set.clone(),
                added,
            });
        }
    }
}
