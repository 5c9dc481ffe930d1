//! Partial p-dialectical systems built from indexed programs.
//!
//! An opponent `Θ` is assembled from three registry programs: `g_n =
//! a_{φ_{i0}(n)}` enumerates its axioms, `H(s, X) = ⋃_{t ≤ s} π(φ_{i1}(t,
//! π⁻¹(X)))` is its staged operator and `r(g_n) = g_{φ_{i2}(n)}` its
//! replacement. Every evaluation is fueled, so a partial program shows up as
//! [`Step::Diverged`] and the stage is simply retried later with more fuel.

mod expr;
mod family;
mod program;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::consequence::Symbol;
use crate::model::{AxiomId, BeliefString, Token};
use crate::run::{EventKind, StabilityReport, StabilityTracker, TraceEvent};

pub use expr::{parse_expr, BinOp, Eval, Expr, ExprError, Fuel};
pub use family::{FamilyError, OpponentFamily, OpponentSpec};
pub use program::{parse_staged, Body, Program, ProgramUniverse, Staged, EXPR_VARS};

/// `π⁻¹`: bit 0 is `ce`, bit `i + 1` is `a_i`. `None` for sets containing `⊥`
/// or an axiom past `a_62`.
pub fn pi_encode(set: &BTreeSet<Symbol>) -> Option<u64> {
    set.iter().try_fold(0u64, |code, s| {
        let bit = match s {
            Symbol::CounterExample => 0,
            Symbol::Axiom(a) if a.0 < 63 => a.0 + 1,
            _ => return None,
        };
        Some(code | 1 << bit)
    })
}

/// `π`.
pub fn pi_decode(m: u64) -> BTreeSet<Symbol> {
    (0..64)
        .filter(|bit| m >> bit & 1 == 1)
        .map(|bit| match bit {
            0 => Symbol::CounterExample,
            b => Symbol::Axiom(AxiomId(b - 1)),
        })
        .collect()
}

fn pi_encode_axioms(set: &BTreeSet<AxiomId>) -> Option<u64> {
    set.iter()
        .try_fold(0u64, |code, a| (a.0 < 63).then(|| code | 1 << (a.0 + 1)))
}

/// Decodes a code with bit 0 clear as a set of axioms.
pub(crate) fn pi_decode_axioms(x: u64) -> Option<BTreeSet<AxiomId>> {
    (x & 1 == 0).then(|| {
        pi_decode(x)
            .into_iter()
            .filter_map(|s| match s {
                Symbol::Axiom(a) => Some(a),
                _ => None,
            })
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("opponent index must be at least 1")]
pub struct ZeroIndex;

/// Exponents of 2, 3 and 5 in `m`.
pub fn decode_index(m: u64) -> Result<(u64, u64, u64), ZeroIndex> {
    if m == 0 {
        return Err(ZeroIndex);
    }
    let exp = |mut m: u64, p: u64| {
        let mut e = 0;
        while m.is_multiple_of(p) {
            m /= p;
            e += 1;
        }
        e
    };
    Ok((exp(m, 2), exp(m, 3), exp(m, 5)))
}

/// Which of the three programs ran out of fuel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    G,
    H,
    R,
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Component::G => "g",
            Component::H => "H",
            Component::R => "r",
        })
    }
}

/// Why an opponent cannot be a p-dialectical system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum Invalid {
    #[error("H({stage}, X) does not contain X for X = ran(sigma|{k})")]
    Inclusion { stage: u64, k: usize },
    #[error("H({stage}, X) contains BOT for X = ran(sigma|{k})")]
    Bottom { stage: u64, k: usize },
    #[error("axiom {0} has no code")]
    Unencodable(AxiomId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    /// One stage ran; the new string is available from [`PartialPSystem::sigma`].
    Progress(TraceEvent),
    Diverged(Component),
    Invalid(Invalid),
}

/// An opponent together with its own p-run.
#[derive(Clone, Debug)]
pub struct PartialPSystem {
    pub name: String,
    pub i0: u64,
    pub i1: u64,
    pub i2: u64,
    universe: Arc<ProgramUniverse>,
    g_cache: Vec<AxiomId>,
    stage: u64,
    /// `σ` as indices into the enumeration `g`.
    indices: Vec<u64>,
    sigma: BeliefString,
    first: HashMap<AxiomId, Vec<usize>>,
    tracker: StabilityTracker,
    invalid: Option<Invalid>,
}

impl PartialPSystem {
    pub fn new(name: impl Into<String>, universe: Arc<ProgramUniverse>, (i0, i1, i2): (u64, u64, u64)) -> Self {
        Self {
            name: name.into(),
            i0,
            i1,
            i2,
            universe,
            g_cache: Vec::new(),
            stage: 0,
            indices: Vec::new(),
            sigma: BeliefString::new(),
            first: HashMap::new(),
            tracker: StabilityTracker::default(),
            invalid: None,
        }
    }

    /// `Θ_m`.
    pub fn from_index(name: impl Into<String>, universe: Arc<ProgramUniverse>, m: u64) -> Result<Self, ZeroIndex> {
        Ok(Self::new(name, universe, decode_index(m)?))
    }

    /// Stage of the opponent's own run; `sigma` is `σ^Θ_stage`.
    pub fn stage(&self) -> u64 {
        self.stage
    }

    pub fn sigma(&self) -> &BeliefString {
        &self.sigma
    }

    /// `σ^Θ` as positions in the enumeration.
    pub fn indices(&self) -> &[u64] {
        &self.indices
    }

    pub fn invalid(&self) -> Option<Invalid> {
        self.invalid
    }

    pub fn stability(&self, window: u64) -> StabilityReport {
        self.tracker.report(self.sigma.tokens(), self.stage, window)
    }

    /// Values of `g` seen so far, in order.
    pub fn enumerated(&self) -> &[AxiomId] {
        &self.g_cache
    }

    /// `g_n`. Converged values are cached.
    pub fn g(&mut self, n: u64, fuel: u64) -> Eval<AxiomId> {
        while (self.g_cache.len() as u64) <= n {
            let next = self.g_cache.len() as u64;
            match self.universe.call1(self.i0, next, &mut Fuel(fuel)) {
                Eval::Converged(v) => self.g_cache.push(AxiomId(v)),
                Eval::OutOfFuel => return Eval::OutOfFuel,
            }
        }
        Eval::Converged(self.g_cache[n as usize])
    }

    /// Index `m` with `r(g_n) = g_m`.
    pub fn r_index(&self, n: u64, fuel: u64) -> Eval<u64> {
        self.universe.call1(self.i2, n, &mut Fuel(fuel))
    }

    /// `H^Θ(s, X)` evaluated with `fuel` per program call.
    pub fn evaluate_h(&self, s: u64, set: &BTreeSet<AxiomId>, fuel: u64) -> Result<Eval<BTreeSet<Symbol>>, Invalid> {
        if let Some(staged) = self.universe.staged(self.i1) {
            return Ok(program::staged_eval(staged, s, set, &mut Fuel(fuel)));
        }
        let x = match set.iter().find(|a| a.0 >= 63) {
            Some(&a) => return Err(Invalid::Unencodable(a)),
            None => pi_encode_axioms(set).expect("checked above"),
        };
        let mut out = BTreeSet::new();
        for t in 0..=s {
            match self.universe.call2(self.i1, t, x, &mut Fuel(fuel)) {
                Eval::Converged(code) => out.extend(pi_decode(code)),
                Eval::OutOfFuel => return Ok(Eval::OutOfFuel),
            }
        }
        Ok(Eval::Converged(out))
    }

    fn first_position(&self, a: AxiomId) -> Option<usize> {
        self.first.get(&a).and_then(|v| v.first().copied())
    }

    /// Least `k` with `ce ∈ H(s, ran(σ↾k))`, scanning prefixes in order.
    fn least_counterexample(&self, fuel: u64) -> Result<Option<usize>, Step> {
        let s = self.stage;
        let len = self.sigma.len();
        if let Some(staged) = self.universe.staged(self.i1) {
            if len == 0 {
                return Ok(None);
            }
            if fuel == 0 {
                return Err(Step::Diverged(Component::H));
            }
            let first = |a| self.first_position(a);
            let diverge = staged.least_divergence(s, first).unwrap_or(usize::MAX);
            let bottom = staged.least_conclusion(s, Symbol::Bottom, first).unwrap_or(usize::MAX);
            let ce = staged
                .least_conclusion(s, Symbol::CounterExample, first)
                .unwrap_or(usize::MAX);
            let k = diverge.min(bottom).min(ce);
            return if k > len {
                Ok(None)
            } else if k == diverge {
                Err(Step::Diverged(Component::H))
            } else if k == bottom {
                Err(Step::Invalid(Invalid::Bottom { stage: s, k }))
            } else {
                Ok(Some(k))
            };
        }
        let mut set = BTreeSet::new();
        for k in 1..=len {
            if let Some(a) = self.sigma.get(k - 1).and_then(Token::axiom) {
                set.insert(a);
            }
            let out = match self.evaluate_h(s, &set, fuel) {
                Err(e) => return Err(Step::Invalid(e)),
                Ok(Eval::OutOfFuel) => return Err(Step::Diverged(Component::H)),
                Ok(Eval::Converged(out)) => out,
            };
            if !set.iter().all(|a| out.contains(&Symbol::Axiom(*a))) {
                return Err(Step::Invalid(Invalid::Inclusion { stage: s, k }));
            }
            if out.contains(&Symbol::CounterExample) {
                return Ok(Some(k));
            }
        }
        Ok(None)
    }

    /// Runs one stage of the opponent's p-run. On `Diverged` the state is
    /// unchanged; `Invalid` is sticky.
    pub fn step(&mut self, fuel: u64) -> Step {
        if let Some(e) = self.invalid {
            return Step::Invalid(e);
        }
        let kind = match self.least_counterexample(fuel) {
            Err(Step::Invalid(e)) => {
                self.invalid = Some(e);
                return Step::Invalid(e);
            }
            Err(other) => return other,
            Ok(None) => {
                let n = self.indices.len() as u64;
                match self.g(n, fuel) {
                    Eval::Converged(a) => {
                        self.push(n, a);
                        EventKind::Expansion(a)
                    }
                    Eval::OutOfFuel => return Step::Diverged(Component::G),
                }
            }
            Ok(Some(k)) => {
                let old_index = self.indices[k - 1];
                let old = self.g_cache[old_index as usize];
                let new_index = match self.r_index(old_index, fuel) {
                    Eval::Converged(m) => m,
                    Eval::OutOfFuel => return Step::Diverged(Component::R),
                };
                let new = match self.g(new_index, fuel) {
                    Eval::Converged(a) => a,
                    Eval::OutOfFuel => return Step::Diverged(Component::G),
                };
                while self.indices.len() >= k {
                    self.pop();
                }
                self.push(new_index, new);
                EventKind::Replacement { k, old, new }
            }
        };
        let s = self.stage;
        match kind {
            EventKind::Replacement { k, .. } => self.tracker.revised(k, s),
            _ => self.tracker.expanded(s),
        }
        self.stage += 1;
        Step::Progress(TraceEvent {
            stage: s,
            kind,
            len_after: self.sigma.len(),
        })
    }

    fn push(&mut self, index: u64, a: AxiomId) {
        self.first.entry(a).or_default().push(self.indices.len());
        self.indices.push(index);
        self.sigma.push(Token::Axiom(a));
    }

    fn pop(&mut self) {
        let n = self.indices.len() - 1;
        let a = self.sigma.get(n).and_then(Token::axiom).expect("p-runs have no gaps");
        let positions = self.first.get_mut(&a).expect("tracked");
        positions.pop();
        if positions.is_empty() {
            self.first.remove(&a);
        }
        self.indices.pop();
        self.sigma.truncate(n);
    }

    /// Least `e` with `r^e(g_n) ∉ avoid`, and that value. `fuel` is shared by
    /// every call; a cycle inside `avoid` is reported as `OutOfFuel` at once.
    pub fn r_iterate(&mut self, n: u64, avoid: &BTreeSet<AxiomId>, fuel: u64) -> Eval<(AxiomId, u64)> {
        let mut budget = Fuel(fuel);
        let mut seen = BTreeSet::new();
        let mut index = n;
        for e in 0.. {
            let value = match self.g(index, budget.0) {
                Eval::Converged(a) => a,
                Eval::OutOfFuel => return Eval::OutOfFuel,
            };
            if !avoid.contains(&value) {
                return Eval::Converged((value, e));
            }
            if !seen.insert(index) {
                return Eval::OutOfFuel;
            }
            index = match self.universe.call1(self.i2, index, &mut budget) {
                Eval::Converged(m) => m,
                Eval::OutOfFuel => return Eval::OutOfFuel,
            };
        }
        unreachable!()
    }
}
