//! Seeded random systems for fuzzing and differential checks.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::consequence::{Rule, RuleTable, Symbol};
use crate::legacy::{backward_translate, Approximation, LegacySystem, Pair, Permutation};
use crate::model::AxiomId;
use crate::run::{QSystem, ReplacementMap, Variant};

pub const MAX_AXIOMS: u64 = 12;
pub const MAX_RULES: usize = 10;
const MAX_RULE_STAGE: u64 = 20;

/// Variant drawn for corpus entry `seed`: d, p and q in rotation.
pub fn variant_for(seed: u64) -> Variant {
    match seed % 3 {
        0 => Variant::D,
        1 => Variant::P,
        _ => Variant::Q,
    }
}

/// A random system over `a_0..a_{n-1}` with `n <= 12` and at most ten base
/// rules, closed under chaining with stage `max`.
///
/// `r` sends each `a_i` with `i < n` a few places up, so it is increasing,
/// acyclic and defined on every axiom a rule can mention.
pub fn random_q_system(seed: u64, variant: Variant) -> QSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=MAX_AXIOMS);
    let triggers: &[Symbol] = match variant {
        Variant::D => &[Symbol::Bottom],
        Variant::P => &[Symbol::CounterExample],
        Variant::Q => &[Symbol::Bottom, Symbol::CounterExample],
    };
    let mut table = RuleTable::new();
    for _ in 0..rng.gen_range(0..=MAX_RULES) {
        let width = rng.gen_range(1..=3);
        let premises: BTreeSet<AxiomId> = (0..width).map(|_| AxiomId(rng.gen_range(0..n))).collect();
        let conclusion = if rng.gen_bool(0.3) {
            Symbol::Axiom(AxiomId(rng.gen_range(0..n)))
        } else {
            *triggers.choose(&mut rng).expect("nonempty")
        };
        table.push(Rule::new(rng.gen_range(0..=MAX_RULE_STAGE), premises, conclusion));
    }
    table.saturate_with(u64::max);
    let mut r = ReplacementMap::new();
    for i in 0..n {
        r.insert(AxiomId(i), AxiomId(i + rng.gen_range(1..=3)))
            .expect("increasing maps are acyclic");
    }
    QSystem::new(table, r).expect("every trigger rule has premises")
}

/// A legacy system with a scrambled listing `f`.
///
/// Starts from the backward translation of a random system and renames every
/// value through a random permutation of the values it mentions.
pub fn random_legacy_system(seed: u64) -> LegacySystem {
    let base = backward_translate(&random_q_system(seed, variant_for(seed)));
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut top = base.c.max(base.c_minus);
    for pair in &base.approximation.pairs {
        top = top.max(pair.x);
        top = top.max(pair.premises.iter().copied().max().unwrap_or(0));
    }
    for (&k, &v) in &base.f_minus {
        top = top.max(k.max(v));
    }
    let mut prefix: Vec<u64> = (0..=top).collect();
    prefix.shuffle(&mut rng);
    let f = Permutation::from_prefix(prefix).expect("shuffled range");
    let rename = |v: u64| f.apply(v);
    let pairs = base
        .approximation
        .pairs
        .iter()
        .map(|p| Pair {
            stage: p.stage,
            x: rename(p.x),
            premises: p.premises.iter().map(|&v| rename(v)).collect(),
        })
        .collect();
    let f_minus: BTreeMap<u64, u64> = base.f_minus.iter().map(|(&k, &v)| (rename(k), rename(v))).collect();
    let (c, c_minus) = (rename(base.c), rename(base.c_minus));
    LegacySystem::new(
        Approximation {
            pairs,
            reflexive_from: base.approximation.reflexive_from,
        },
        f,
        f_minus,
        c,
        c_minus,
    )
    .expect("renaming preserves well-formedness")
}
