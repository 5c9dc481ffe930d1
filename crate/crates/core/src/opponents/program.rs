//! The finite program registry standing in for `φ_e`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::consequence::{Rule, RuleTable, Symbol};
use crate::model::AxiomId;

use super::expr::{Eval, Expr, Fuel};

/// A staged clause set, usable only as an `H` program.
///
/// `φ(t, π⁻¹(X))` is `X` plus the conclusion of every rule with stage `≤ t`
/// whose premises lie in `X`. Evaluation diverges when a `diverge` clause with
/// stage `≤ t` applies.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Staged {
    pub rules: RuleTable,
    pub diverge: Vec<(u64, BTreeSet<AxiomId>)>,
}

impl Staged {
    /// Least `k` such that `H(s, ran(σ↾k))` diverges, where `first` gives the
    /// first position of an axiom in `σ`.
    pub(crate) fn least_divergence(&self, s: u64, first: impl Fn(AxiomId) -> Option<usize>) -> Option<usize> {
        self.diverge
            .iter()
            .filter(|(t, _)| *t <= s)
            .filter_map(|(_, premises)| least_cover(premises, &first))
            .min()
    }

    /// Least `k` such that `H(s, ran(σ↾k))` contains `symbol`.
    pub(crate) fn least_conclusion(
        &self,
        s: u64,
        symbol: Symbol,
        first: impl Fn(AxiomId) -> Option<usize>,
    ) -> Option<usize> {
        self.rules
            .rules()
            .iter()
            .filter(|r| r.stage <= s && r.conclusion == symbol)
            .filter_map(|r| least_cover(&r.premises, &first))
            .min()
    }

    fn diverges_on(&self, s: u64, set: &BTreeSet<AxiomId>) -> bool {
        self.diverge.iter().any(|(t, p)| *t <= s && p.is_subset(set))
    }
}

fn least_cover(premises: &BTreeSet<AxiomId>, first: &impl Fn(AxiomId) -> Option<usize>) -> Option<usize> {
    premises.iter().try_fold(1, |k, &p| first(p).map(|pos| k.max(pos + 1)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Body {
    /// Unary programs read `n`; binary programs read `t` and `x`.
    Expr(Expr),
    /// Finite lookup on `n` (or on `x` for binary calls); undefined elsewhere.
    Table(BTreeMap<u64, u64>),
    Staged(Staged),
    /// Nowhere defined.
    Loop,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub name: String,
    pub body: Body,
    /// Text the program was parsed from, kept for display.
    pub source: String,
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "program {} {}", self.name, self.source)
    }
}

/// Variables visible to expression programs, in environment order.
pub const EXPR_VARS: [&str; 3] = ["n", "t", "x"];

/// An immutable, indexed registry of programs.
///
/// Indices past the end name the nowhere-defined function.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProgramUniverse {
    programs: Vec<Program>,
}

impl ProgramUniverse {
    pub fn new(programs: Vec<Program>) -> Self {
        Self { programs }
    }

    pub fn programs(&self) -> &[Program] {
        &self.programs
    }

    pub fn get(&self, e: u64) -> Option<&Program> {
        usize::try_from(e).ok().and_then(|i| self.programs.get(i))
    }

    pub fn index_of(&self, name: &str) -> Option<u64> {
        self.programs.iter().position(|p| p.name == name).map(|i| i as u64)
    }

    /// `φ_e(n)`.
    pub fn call1(&self, e: u64, n: u64, fuel: &mut Fuel) -> Eval<u64> {
        let Some(p) = self.get(e) else {
            return Eval::OutOfFuel;
        };
        match &p.body {
            Body::Expr(expr) => expr.eval(&[n, 0, 0], fuel),
            Body::Table(map) => lookup(map, n, fuel),
            Body::Staged(_) | Body::Loop => Eval::OutOfFuel,
        }
    }

    /// `φ_e(t, x)`. Staged programs are evaluated through [`Self::call_set`].
    pub fn call2(&self, e: u64, t: u64, x: u64, fuel: &mut Fuel) -> Eval<u64> {
        let Some(p) = self.get(e) else {
            return Eval::OutOfFuel;
        };
        match &p.body {
            Body::Expr(expr) => expr.eval(&[0, t, x], fuel),
            Body::Table(map) => lookup(map, x, fuel),
            Body::Staged(staged) => match super::pi_decode_axioms(x) {
                Some(set) => match staged_eval(staged, t, &set, fuel) {
                    Eval::Converged(out) => Eval::Converged(super::pi_encode(&out).unwrap_or(u64::MAX)),
                    Eval::OutOfFuel => Eval::OutOfFuel,
                },
                None => Eval::OutOfFuel,
            },
            Body::Loop => Eval::OutOfFuel,
        }
    }

    pub fn staged(&self, e: u64) -> Option<&Staged> {
        match self.get(e).map(|p| &p.body) {
            Some(Body::Staged(s)) => Some(s),
            _ => None,
        }
    }
}

fn lookup(map: &BTreeMap<u64, u64>, key: u64, fuel: &mut Fuel) -> Eval<u64> {
    if fuel.0 == 0 {
        return Eval::OutOfFuel;
    }
    fuel.0 -= 1;
    match map.get(&key) {
        Some(&v) => Eval::Converged(v),
        None => {
            fuel.0 = 0;
            Eval::OutOfFuel
        }
    }
}

/// `⋃_{t' ≤ t} φ(t', X)` for a staged program, at unit cost.
pub(crate) fn staged_eval(staged: &Staged, t: u64, set: &BTreeSet<AxiomId>, fuel: &mut Fuel) -> Eval<BTreeSet<Symbol>> {
    if fuel.0 == 0 || staged.diverges_on(t, set) {
        fuel.0 = 0;
        return Eval::OutOfFuel;
    }
    fuel.0 -= 1;
    Eval::Converged(staged.rules.evaluate(t, set))
}

/// Parses a staged body: clauses separated by `;`, each
/// `at <t> : <premises> |- <symbol>` or `diverge at <t> : <premises>`.
pub fn parse_staged(text: &str) -> Result<Staged, String> {
    let mut staged = Staged::default();
    for clause in text.split(';').map(str::trim).filter(|c| !c.is_empty()) {
        if let Some(rest) = clause.strip_prefix("diverge") {
            let synthetic = format!("{} |- CE", rest.trim());
            let rule = parse_clause(&synthetic)?;
            staged.diverge.push((rule.stage, rule.premises));
        } else {
            staged.rules.push(parse_clause(clause)?);
        }
    }
    Ok(staged)
}

fn parse_clause(text: &str) -> Result<Rule, String> {
    let line = crate::parse::SourceLine {
        number: 1,
        text,
        offset: 0,
    };
    crate::consequence::parse_rule_line(&line).map_err(|e| format!("clause `{text}`: {}", e.message))
}
