//! The quintuple formalism `⟨H^∞, f, f⁻, c, c⁻⟩` with per-position stacks.
//!
//! Arguments are natural numbers. `c` plays the role of a contradiction and
//! `c⁻` of a counterexample; the approximation `H_s` is a growing set of pairs
//! `⟨x, F⟩` read as "`x` follows from `F`".

mod align;
mod translate;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

pub use align::{check_alignment, AlignmentError, AlignmentReport, Direction, Mismatch};
pub use translate::{backward_translate, forward_translate, replacement_bound, TranslationError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LegacyError {
    #[error("stage {stage}: revision requested at position 0, which has no predecessor")]
    UndefinedPosition { stage: u64 },
    #[error("stage {stage}: f⁻({value}) is undefined")]
    MissingInverse { stage: u64, value: u64 },
    #[error("H_0 must be empty, but a pair enters at stage 0")]
    NonEmptyStageZero,
    #[error("f is not a permutation of its prefix 0..{0}")]
    NotPermutation(usize),
    #[error("c and c⁻ must differ")]
    SameTriggers,
    #[error("c⁻ = {0} is in the range of f⁻ outside the c/c⁻ pair")]
    CounterexampleInRange(u64),
    #[error("f⁻ has a cycle through {0}")]
    Cycle(u64),
}

/// `⟨x, F⟩` belongs to every `H_s` with `s >= stage`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pair {
    pub stage: u64,
    pub x: u64,
    pub premises: BTreeSet<u64>,
}

impl Pair {
    pub fn new(stage: u64, x: u64, premises: impl IntoIterator<Item = u64>) -> Self {
        Self {
            stage,
            x,
            premises: premises.into_iter().collect(),
        }
    }
}

/// Finite presentation of the approximation `H_s`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Approximation {
    pub pairs: Vec<Pair>,
    /// From this stage on, every `⟨x, {x}⟩` is in `H_s`.
    pub reflexive_from: Option<u64>,
}

impl Approximation {
    fn reflexive_at(&self, s: u64) -> bool {
        self.reflexive_from.is_some_and(|t| t <= s)
    }

    /// `H_s(Y)`.
    pub fn apply(&self, s: u64, set: &BTreeSet<u64>) -> BTreeSet<u64> {
        let mut out = if self.reflexive_at(s) {
            set.clone()
        } else {
            BTreeSet::new()
        };
        out.extend(
            self.pairs
                .iter()
                .filter(|p| p.stage <= s && p.premises.is_subset(set))
                .map(|p| p.x),
        );
        out
    }
}

/// A permutation of ℕ that is the identity beyond a finite prefix.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Permutation {
    forward: Vec<u64>,
    inverse: Vec<u64>,
}

impl Permutation {
    pub fn identity() -> Self {
        Self::default()
    }

    /// `prefix[i] = f_i`; must be a permutation of `0..prefix.len()`.
    pub fn from_prefix(prefix: Vec<u64>) -> Result<Self, LegacyError> {
        let n = prefix.len();
        let mut inverse = vec![u64::MAX; n];
        for (i, &v) in prefix.iter().enumerate() {
            if v as usize >= n || inverse[v as usize] != u64::MAX {
                return Err(LegacyError::NotPermutation(n));
            }
            inverse[v as usize] = i as u64;
        }
        Ok(Self {
            forward: prefix,
            inverse,
        })
    }

    pub fn prefix(&self) -> &[u64] {
        &self.forward
    }

    /// `f_i`.
    pub fn apply(&self, i: u64) -> u64 {
        self.forward.get(i as usize).copied().unwrap_or(i)
    }

    /// The `i` with `f_i = v`.
    pub fn invert(&self, v: u64) -> u64 {
        self.inverse.get(v as usize).copied().unwrap_or(v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LegacySystem {
    pub approximation: Approximation,
    pub f: Permutation,
    pub f_minus: BTreeMap<u64, u64>,
    pub c: u64,
    pub c_minus: u64,
}

impl LegacySystem {
    pub fn new(
        approximation: Approximation,
        f: Permutation,
        f_minus: BTreeMap<u64, u64>,
        c: u64,
        c_minus: u64,
    ) -> Result<Self, LegacyError> {
        if c == c_minus {
            return Err(LegacyError::SameTriggers);
        }
        if approximation.pairs.iter().any(|p| p.stage == 0) || approximation.reflexive_from == Some(0) {
            return Err(LegacyError::NonEmptyStageZero);
        }
        for (&k, &v) in &f_minus {
            if v == c_minus && k != c {
                return Err(LegacyError::CounterexampleInRange(c_minus));
            }
        }
        // the only permitted cycle is c -> c⁻ -> c
        for &start in f_minus.keys() {
            if start == c || start == c_minus {
                continue;
            }
            let mut seen = BTreeSet::from([start]);
            let mut current = start;
            while let Some(&next) = f_minus.get(&current) {
                if next == c || next == c_minus {
                    break;
                }
                if !seen.insert(next) {
                    return Err(LegacyError::Cycle(next));
                }
                current = next;
            }
        }
        Ok(Self {
            approximation,
            f,
            f_minus,
            c,
            c_minus,
        })
    }
}

/// Which clause of the recursion produced a state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Clause {
    Start,
    Expand,
    Excise { z: usize },
    Replace { z: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LegacyState {
    pub stage: u64,
    /// `r_s(x)` for `x <= p(s)`; higher positions are empty.
    pub stacks: Vec<Vec<u64>>,
    pub p: usize,
    pub h: usize,
    pub theses: BTreeSet<u64>,
    pub clause: Clause,
}

impl LegacyState {
    pub fn initial(system: &LegacySystem) -> Self {
        Self {
            stage: 0,
            stacks: vec![vec![system.f.apply(0)]],
            p: 0,
            h: 0,
            theses: BTreeSet::new(),
            clause: Clause::Start,
        }
    }

    /// `ρ_s(x)`.
    pub fn rho(&self, x: usize) -> Option<u64> {
        self.stacks.get(x).and_then(|s| s.last().copied())
    }

    /// `L_s(x)`.
    pub fn lower(&self, x: usize) -> BTreeSet<u64> {
        (0..x.min(self.stacks.len())).filter_map(|y| self.rho(y)).collect()
    }

    /// `χ_s(i)`.
    pub fn chi(&self, system: &LegacySystem, i: usize) -> BTreeSet<u64> {
        system.approximation.apply(self.stage, &self.lower(i))
    }
}

impl fmt::Display for LegacyState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (x, stack) in self.stacks.iter().enumerate() {
            write!(f, "{x}:")?;
            for v in stack {
                write!(f, " {v}")?;
            }
            writeln!(f)?;
        }
        write!(f, "p={}, h={}, A={{", self.p, self.h)?;
        for (i, v) in self.theses.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        writeln!(f, "}}")
    }
}

/// Switches that deliberately break the recursion, for mutation testing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Mutation {
    /// Let `c⁻` win over `c` at the same position.
    pub prefer_counterexample: bool,
}

/// Least `z <= p(s)` where `c` or `c⁻` is in `χ_s(z)`, and which of them.
fn least_trigger(system: &LegacySystem, state: &LegacyState, mutation: Mutation) -> Option<(usize, Clause)> {
    let mut first: HashMap<u64, usize> = HashMap::new();
    for y in 0..state.stacks.len() {
        if let Some(v) = state.rho(y) {
            first.entry(v).or_insert(y);
        }
    }
    let s = state.stage;
    let approx = &system.approximation;
    // least z with F ⊆ L_s(z), as long as z <= p(s)
    let least_z = |premises: &mut dyn Iterator<Item = u64>| -> Option<usize> {
        let mut z = 0;
        for v in premises {
            z = z.max(*first.get(&v)? + 1);
        }
        (z <= state.p).then_some(z)
    };
    let mut best_c: Option<usize> = None;
    let mut best_cm: Option<usize> = None;
    let mut consider = |x: u64, z: usize| {
        let slot = if x == system.c {
            &mut best_c
        } else if x == system.c_minus {
            &mut best_cm
        } else {
            return;
        };
        if slot.is_none_or(|b| z < b) {
            *slot = Some(z);
        }
    };
    for pair in approx.pairs.iter().filter(|p| p.stage <= s) {
        if pair.x != system.c && pair.x != system.c_minus {
            continue;
        }
        if let Some(z) = least_z(&mut pair.premises.iter().copied()) {
            consider(pair.x, z);
        }
    }
    if approx.reflexive_at(s) {
        for x in [system.c, system.c_minus] {
            if let Some(z) = least_z(&mut std::iter::once(x)) {
                consider(x, z);
            }
        }
    }
    match (best_c, best_cm) {
        (None, None) => None,
        (Some(z), None) => Some((z, Clause::Excise { z })),
        (None, Some(z)) => Some((z, Clause::Replace { z })),
        (Some(zc), Some(zm)) => {
            let prefer_c = if mutation.prefer_counterexample {
                zc < zm
            } else {
                zc <= zm
            };
            if prefer_c {
                Some((zc, Clause::Excise { z: zc }))
            } else {
                Some((zm, Clause::Replace { z: zm }))
            }
        }
    }
}

/// Computes the stage `s + 1` state from the stage `s` state.
pub fn legacy_step(system: &LegacySystem, state: &LegacyState) -> Result<LegacyState, LegacyError> {
    legacy_step_with(system, state, Mutation::default())
}

pub fn legacy_step_with(
    system: &LegacySystem,
    state: &LegacyState,
    mutation: Mutation,
) -> Result<LegacyState, LegacyError> {
    let s = state.stage;
    let m = state.p;
    let mut stacks = state.stacks.clone();
    let (p, clause) = match least_trigger(system, state, mutation) {
        None => {
            stacks.push(vec![system.f.apply(m as u64 + 1)]);
            (m + 1, Clause::Expand)
        }
        Some((0, _)) => return Err(LegacyError::UndefinedPosition { stage: s }),
        Some((z, clause)) => {
            stacks.truncate(z);
            match clause {
                Clause::Excise { .. } => stacks[z - 1].clear(),
                _ => {
                    let prev = state.rho(z - 1).expect("position below a trigger is occupied");
                    let image = *system
                        .f_minus
                        .get(&prev)
                        .ok_or(LegacyError::MissingInverse { stage: s, value: prev })?;
                    stacks[z - 1].push(image);
                }
            }
            stacks.push(vec![system.f.apply(z as u64)]);
            (z, clause)
        }
    };
    let h = match clause {
        Clause::Expand => p,
        _ => p - 1,
    };
    let mut next = LegacyState {
        stage: s + 1,
        stacks,
        p,
        h,
        theses: BTreeSet::new(),
        clause,
    };
    // χ is monotone in its argument, so the union over i < h is χ(h - 1)
    if h > 0 {
        next.theses = next.chi(system, h - 1);
    }
    Ok(next)
}

/// Iterates the states `0, 1, 2, ...` of a legacy run.
pub struct LegacyRun<'a> {
    system: &'a LegacySystem,
    next: Option<Result<LegacyState, LegacyError>>,
    mutation: Mutation,
}

impl<'a> LegacyRun<'a> {
    pub fn new(system: &'a LegacySystem) -> Self {
        Self::with_mutation(system, Mutation::default())
    }

    pub fn with_mutation(system: &'a LegacySystem, mutation: Mutation) -> Self {
        Self {
            system,
            next: Some(Ok(LegacyState::initial(system))),
            mutation,
        }
    }
}

impl Iterator for LegacyRun<'_> {
    type Item = Result<LegacyState, LegacyError>;

    fn next(&mut self) -> Option<Self::Item> {
        let current = self.next.take()?;
        if let Ok(state) = &current {
            self.next = Some(legacy_step_with(self.system, state, self.mutation));
        }
        Some(current)
    }
}
