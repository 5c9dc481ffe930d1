use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::{Approximation, LegacySystem, Pair, Permutation};
use crate::consequence::{Rule, RuleTable, Symbol};
use crate::model::AxiomId;
use crate::run::{QSystem, ReplacementError, ReplacementMap, RunError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslationError {
    #[error("replacement map: {0}")]
    Replacement(#[from] ReplacementError),
    #[error("translated system does not load: {0}")]
    Load(#[from] RunError),
}

/// Builds the q-system with `H(s, X) = E(H_s(X))`, identifying `a_i` with `f_i`.
///
/// `E` adjoins `⊥` when `c` is derived and `ce` when `c⁻` is. The reflexive
/// pairs on `c` and `c⁻` become singleton trigger rules; the remaining
/// reflexive pairs are the inclusion every rule table already has.
///
/// `r(a_i) = a_y` where `f_y = f⁻(f_i)`. The image of `c` is dropped: a
/// position holding `c` always derives `c` at the same index, so it is
/// excised and never replaced, and keeping it would close the `c`/`c⁻` cycle.
pub fn forward_translate(legacy: &LegacySystem) -> Result<QSystem, TranslationError> {
    let f = &legacy.f;
    let axiom = |v: u64| AxiomId(f.invert(v));
    let symbol = |x: u64| {
        if x == legacy.c {
            Symbol::Bottom
        } else if x == legacy.c_minus {
            Symbol::CounterExample
        } else {
            Symbol::Axiom(axiom(x))
        }
    };
    let mut table = RuleTable::new();
    for pair in &legacy.approximation.pairs {
        table.push(Rule::new(
            pair.stage,
            pair.premises.iter().map(|&v| axiom(v)),
            symbol(pair.x),
        ));
    }
    if let Some(t) = legacy.approximation.reflexive_from {
        table.push(Rule::new(t, [axiom(legacy.c)], Symbol::Bottom));
        table.push(Rule::new(t, [axiom(legacy.c_minus)], Symbol::CounterExample));
    }
    let mut r = ReplacementMap::new();
    for (&from, &to) in &legacy.f_minus {
        if from == legacy.c {
            continue;
        }
        r.insert(axiom(from), axiom(to))?;
    }
    Ok(QSystem::new(table, r)?)
}

/// `M(s)`: one more than every `r^t(a_x)` index with `x <= s` and `t <= s`.
pub fn replacement_bound(r: &ReplacementMap, s: u64) -> u64 {
    let mut best = 0;
    for x in 0..=s {
        let mut current = AxiomId(x);
        best = best.max(current.0);
        for _ in 0..s {
            match r.get(current) {
                Some(next) => {
                    current = next;
                    best = best.max(current.0);
                }
                None => break,
            }
        }
    }
    best + 1
}

/// Builds the quintuple with `c = 0`, `c⁻ = 1`, `f` the identity and `a_n`
/// represented by `n + 2`.
///
/// A rule of stage `t` becomes a pair at stage `s + 5`, where `s` is the
/// least stage `>= t` whose bound `M(s)` covers its premises. Reflexive pairs
/// start at stage 1; on `0` and `1` they supply the opening moves of the run.
pub fn backward_translate(system: &QSystem) -> LegacySystem {
    let shift = |a: AxiomId| a.0 + 2;
    let r = &system.replacement;
    let mut pairs = Vec::new();
    for rule in system.operator().rules() {
        let needed = rule.premises.iter().map(|a| a.0).max().unwrap_or(0);
        let mut s = rule.stage;
        // M(s) > s, so the search ends by s = needed
        while replacement_bound(r, s) < needed {
            s += 1;
        }
        let x = match rule.conclusion {
            Symbol::Bottom => 0,
            Symbol::CounterExample => 1,
            Symbol::Axiom(a) => shift(a),
        };
        pairs.push(Pair {
            stage: s + 5,
            x,
            premises: rule.premises.iter().map(|&a| shift(a)).collect::<BTreeSet<_>>(),
        });
    }
    let mut f_minus = BTreeMap::from([(0, 1), (1, 0)]);
    for (from, to) in r.iter() {
        f_minus.insert(shift(from), shift(to));
    }
    LegacySystem::new(
        Approximation {
            pairs,
            reflexive_from: Some(1),
        },
        Permutation::identity(),
        f_minus,
        0,
        1,
    )
    .expect("backward translation is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::legacy::LegacyRun;

    fn ids(xs: &[u64]) -> BTreeSet<u64> {
        xs.iter().copied().collect()
    }

    fn subsets(n: u64) -> Vec<BTreeSet<u64>> {
        (0u32..(1 << n))
            .map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect())
            .collect()
    }

    /// `E(H_s(X))` computed directly from the pairs, for comparison.
    fn legacy_side(legacy: &LegacySystem, s: u64, x: &BTreeSet<u64>) -> BTreeSet<Symbol> {
        let mut out: BTreeSet<Symbol> = x.iter().map(|&v| Symbol::Axiom(AxiomId(legacy.f.invert(v)))).collect();
        for v in legacy.approximation.apply(s, x) {
            out.insert(if v == legacy.c {
                Symbol::Bottom
            } else if v == legacy.c_minus {
                Symbol::CounterExample
            } else {
                Symbol::Axiom(AxiomId(legacy.f.invert(v)))
            });
        }
        out
    }

    fn native(pairs: Vec<Pair>) -> LegacySystem {
        LegacySystem::new(
            Approximation {
                pairs,
                reflexive_from: None,
            },
            Permutation::identity(),
            BTreeMap::new(),
            5,
            6,
        )
        .unwrap()
    }

    #[test]
    fn forward_empty() {
        let q = forward_translate(&native(vec![])).unwrap();
        assert!(q.operator().is_empty());
    }

    #[test]
    fn forward_images_agree_on_subsets() {
        let f = Permutation::from_prefix(vec![0, 1, 2, 3, 4, 5, 6]).unwrap();
        for (pair, rule) in [
            (Pair::new(2, 5, [3]), Rule::new(2, [AxiomId(3)], Symbol::Bottom)),
            (
                Pair::new(4, 6, [1, 2]),
                Rule::new(4, [AxiomId(1), AxiomId(2)], Symbol::CounterExample),
            ),
        ] {
            let legacy = LegacySystem::new(
                Approximation {
                    pairs: vec![pair],
                    reflexive_from: None,
                },
                f.clone(),
                BTreeMap::new(),
                5,
                6,
            )
            .unwrap();
            let q = forward_translate(&legacy).unwrap();
            assert_eq!(q.operator().rules(), &[rule]);
            for s in 0..6 {
                for x in subsets(5) {
                    let axioms = x.iter().map(|&v| AxiomId(v)).collect();
                    assert_eq!(q.operator().evaluate(s, &axioms), legacy_side(&legacy, s, &x));
                }
            }
        }
    }

    #[test]
    fn forward_uses_the_permutation() {
        let legacy = LegacySystem::new(
            Approximation {
                pairs: vec![Pair::new(1, 0, [4])],
                reflexive_from: Some(1),
            },
            Permutation::from_prefix(vec![3, 4, 0, 1, 2]).unwrap(),
            BTreeMap::from([(2, 3), (0, 1)]),
            0,
            1,
        )
        .unwrap();
        let q = forward_translate(&legacy).unwrap();
        // f_2 = 0 and f_1 = 4
        assert!(q
            .operator()
            .rules()
            .contains(&Rule::new(1, [AxiomId(1)], Symbol::Bottom)));
        assert!(q
            .operator()
            .rules()
            .contains(&Rule::new(1, [AxiomId(2)], Symbol::Bottom)));
        assert!(q
            .operator()
            .rules()
            .contains(&Rule::new(1, [AxiomId(3)], Symbol::CounterExample)));
        // f⁻(f_4) = f⁻(2) = 3 = f_0
        assert_eq!(q.replacement.get(AxiomId(4)), Some(AxiomId(0)));
        assert_eq!(q.replacement.get(AxiomId(2)), None);
    }

    #[test]
    fn bound_examples() {
        let mut r = ReplacementMap::new();
        assert_eq!(replacement_bound(&r, 0), 1);
        assert_eq!(replacement_bound(&r, 4), 5);
        r.insert(AxiomId(0), AxiomId(9)).unwrap();
        r.insert(AxiomId(9), AxiomId(20)).unwrap();
        assert_eq!(replacement_bound(&r, 0), 1);
        assert_eq!(replacement_bound(&r, 1), 10);
        assert_eq!(replacement_bound(&r, 2), 21);
    }

    #[test]
    fn backward_stage_offset() {
        let q = QSystem::new(
            RuleTable::from_rules(vec![Rule::new(3, [AxiomId(0)], Symbol::Bottom)]),
            ReplacementMap::new(),
        )
        .unwrap();
        let legacy = backward_translate(&q);
        assert_eq!(legacy.approximation.pairs, vec![Pair::new(8, 0, [2])]);
        assert!(legacy.approximation.apply(8, &ids(&[2])).contains(&0));
        assert!(!legacy.approximation.apply(7, &ids(&[2])).contains(&0));

        // premises beyond M(s) wait for the bound to catch up
        let q = QSystem::new(
            RuleTable::from_rules(vec![Rule::new(0, [AxiomId(6)], Symbol::Bottom)]),
            ReplacementMap::new(),
        )
        .unwrap();
        assert_eq!(backward_translate(&q).approximation.pairs[0].stage, 5 + 5);
    }

    #[test]
    fn backward_inverse_map() {
        let mut r = ReplacementMap::new();
        r.insert(AxiomId(0), AxiomId(2)).unwrap();
        let q = QSystem::new(RuleTable::new(), r).unwrap();
        let legacy = backward_translate(&q);
        assert_eq!(legacy.f_minus, BTreeMap::from([(0, 1), (1, 0), (2, 4)]));
    }

    #[test]
    fn backward_empty_grows_after_bootstrap() {
        let q = QSystem::new(RuleTable::new(), ReplacementMap::new()).unwrap();
        let legacy = backward_translate(&q);
        for state in LegacyRun::new(&legacy).skip(5).take(100) {
            let state = state.unwrap();
            let s = state.stage as usize;
            assert_eq!(state.p, s - 3);
            assert!(state.stacks[0].is_empty() && state.stacks[1].is_empty());
            for x in 2..=state.p {
                assert_eq!(state.stacks[x], vec![x as u64]);
            }
        }
    }
}
