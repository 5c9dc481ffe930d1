//! Verdicts and audits computed once the construction stops.

use std::collections::BTreeSet;
use std::fmt;

use crate::consequence::{RuleTable, Symbol};
use crate::model::AxiomId;
use crate::opponents::Invalid;
use crate::run::{ReplacementMap, RunTrace, StabilityReport};

use super::{Action, Phase, RuleOrigin, Scheduler, Status, StrategyState, TimelineEntry};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub opponent: usize,
    pub name: String,
    pub status: Status,
    pub witness: Option<AxiomId>,
    /// The strategy waits forever on a partial or cyclic `r`.
    pub not_p_system: bool,
    pub invalid: Option<Invalid>,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "opponent {}: {} witness=", self.opponent, self.status)?;
        match self.witness {
            Some(a) => write!(f, "{a}"),
            None => f.write_str("-"),
        }
    }
}

/// One audited property of the construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct DiagonalizationReport {
    pub horizon: u64,
    pub window: u64,
    pub strategies: Vec<StrategyState>,
    pub opponent_names: Vec<String>,
    pub timeline: Vec<TimelineEntry>,
    pub rules: RuleTable,
    pub origins: Vec<RuleOrigin>,
    pub replacement: ReplacementMap,
    pub trace: RunTrace,
    /// `(strategy, stage)` per deactivation.
    pub injuries: Vec<(usize, u64)>,
    pub gamma: StabilityReport,
    pub opponents: Vec<StabilityReport>,
    pub verdicts: Vec<Verdict>,
    pub checks: Vec<Check>,
}

/// Largest index in a belief estimate.
fn top(set: &BTreeSet<AxiomId>) -> Option<u64> {
    set.iter().next_back().map(|a| a.0)
}

impl DiagonalizationReport {
    pub(super) fn new(scheduler: &Scheduler, window: u64) -> Self {
        let horizon = scheduler.stage;
        let gamma = scheduler
            .run_state()
            .tracker()
            .report(scheduler.run_state().sigma().tokens(), horizon, window);
        let opponents: Vec<StabilityReport> = scheduler.opponents.iter().map(|t| t.stability(window)).collect();
        let b_gamma = gamma.belief_estimate();
        let verdicts = scheduler
            .strategies
            .iter()
            .zip(&scheduler.opponents)
            .zip(&opponents)
            .map(|((st, theta), est)| Verdict {
                opponent: st.index,
                name: theta.name.clone(),
                status: st.status,
                witness: witness(st, &b_gamma, &est.belief_estimate()),
                not_p_system: st.status == Status::Active(Phase::Po2Wait),
                invalid: theta.invalid(),
            })
            .collect();
        let injuries = scheduler
            .timeline
            .iter()
            .filter(|e| matches!(e.action, Action::Deactivated { .. }))
            .map(|e| (e.strategy, e.stage))
            .collect();
        let mut report = Self {
            horizon,
            window,
            strategies: scheduler.strategies.clone(),
            opponent_names: scheduler.opponents.iter().map(|t| t.name.clone()).collect(),
            timeline: scheduler.timeline.clone(),
            rules: scheduler.rules.clone(),
            origins: scheduler.origins.clone(),
            replacement: scheduler.replacement.clone(),
            trace: scheduler.trace(),
            injuries,
            gamma,
            opponents,
            verdicts,
            checks: Vec::new(),
        };
        report.checks = vec![
            report.hands_off(),
            report.es_are_right(),
            freshness(scheduler),
            report.finite_injury(),
            report.rule_discipline(),
        ];
        report
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Compares membership in the stable part of the constructed system's
    /// estimate with the expected `keep` predicate for indices `< bound`.
    fn compare_stable(&self, bound: u64, keep: impl Fn(AxiomId) -> Option<bool>) -> Result<usize, AxiomId> {
        let b = self.gamma.belief_estimate();
        let limit = bound.min(self.gamma.stable_prefix_length as u64);
        let mut checked = 0;
        for k in 0..limit {
            let a = AxiomId(k);
            if let Some(expected) = keep(a) {
                if b.contains(&a) != expected {
                    return Err(a);
                }
                checked += 1;
            }
        }
        Ok(checked)
    }

    fn hands_off(&self) -> Check {
        let mut checked = 0;
        for (i, st) in self.strategies.iter().enumerate() {
            if st.status == Status::Inactive {
                continue;
            }
            let protected: BTreeSet<AxiomId> = self.strategies[..i].iter().flat_map(|s| s.z.iter().copied()).collect();
            match self.compare_stable(st.n, |a| Some(!protected.contains(&a))) {
                Ok(n) => checked += n,
                Err(a) => {
                    return Check {
                        name: "hands-off",
                        passed: false,
                        detail: format!("R{i}: membership of {a} disagrees"),
                    }
                }
            }
        }
        Check {
            name: "hands-off",
            passed: true,
            detail: format!("{checked} positions"),
        }
    }

    fn es_are_right(&self) -> Check {
        let mut checked = 0;
        for (i, st) in self.strategies.iter().enumerate() {
            let (Status::Active(_), Some(m)) = (st.status, st.m_at_return) else {
                continue;
            };
            let skip = [st.axiom(1), st.axiom(2)];
            let keep = |a: AxiomId| (!skip.contains(&a)).then(|| !st.e_set.contains(&a));
            match self.compare_stable(m + 1, keep) {
                Ok(n) => checked += n,
                Err(a) => {
                    return Check {
                        name: "es-are-right",
                        passed: false,
                        detail: format!("R{i}: membership of {a} disagrees with E"),
                    }
                }
            }
        }
        Check {
            name: "es-are-right",
            passed: true,
            detail: format!("{checked} positions"),
        }
    }

    fn finite_injury(&self) -> Check {
        let last_action = |j: usize| {
            self.timeline
                .iter()
                .filter(|e| {
                    e.strategy == j && !matches!(e.action, Action::Deactivated { .. } | Action::Activated { .. })
                })
                .map(|e| e.stage)
                .max()
        };
        for e in &self.timeline {
            let Action::Deactivated { by } = e.action else {
                continue;
            };
            let bound = (0..e.strategy).filter_map(last_action).max();
            if by >= e.strategy || bound.is_none_or(|b| e.stage > b) {
                return Check {
                    name: "finite-injury",
                    passed: false,
                    detail: format!("R{} deactivated at {} by R{by}", e.strategy, e.stage),
                };
            }
        }
        Check {
            name: "finite-injury",
            passed: true,
            detail: format!("{} deactivations", self.injuries.len()),
        }
    }

    fn rule_discipline(&self) -> Check {
        for (k, (rule, origin)) in self.rules.rules().iter().zip(&self.origins).enumerate() {
            if rule.conclusion != Symbol::CounterExample {
                continue;
            }
            let mut expected = origin.s_set.clone();
            expected.insert(AxiomId(origin.n));
            if origin.step != 4 || rule.premises != expected {
                return Check {
                    name: "rule-discipline",
                    passed: false,
                    detail: format!("rule #{k} from R{} step {}", origin.strategy, origin.step),
                };
            }
        }
        let ce = self
            .rules
            .rules()
            .iter()
            .filter(|r| r.conclusion == Symbol::CounterExample)
            .count();
        Check {
            name: "rule-discipline",
            passed: true,
            detail: format!("{ce} CE rules"),
        }
    }
}

fn freshness(scheduler: &Scheduler) -> Check {
    for &(i, n, before) in &scheduler.activations {
        if let Some(m) = scheduler.mentions[..before].iter().find(|m| m.index >= n) {
            return Check {
                name: "freshness",
                passed: false,
                detail: format!("R{i} chose N={n} after index {} was mentioned", m.index),
            };
        }
    }
    Check {
        name: "freshness",
        passed: true,
        detail: format!("{} activations", scheduler.activations.len()),
    }
}

/// A witness in `B̂_Γ △ B̂_Θ` restricted to indices both estimates reach.
fn witness(st: &StrategyState, b_gamma: &BTreeSet<AxiomId>, b_theta: &BTreeSet<AxiomId>) -> Option<AxiomId> {
    let bound = top(b_gamma)?.min(top(b_theta)?);
    let differs = |a: &AxiomId| a.0 <= bound && (b_gamma.contains(a) != b_theta.contains(a));
    let candidate = match st.status {
        Status::Inactive | Status::Active(Phase::Po2Wait) => return None,
        Status::Active(Phase::S8Done | Phase::S7Wait) => st.a_i,
        Status::Active(Phase::S5Wait) => Some(st.axiom(0)),
        Status::Active(Phase::S2Wait) => (0..3)
            .map(|k| st.axiom(k))
            .find(|a| b_gamma.contains(a) && !b_theta.contains(a)),
    };
    candidate
        .filter(differs)
        .or_else(|| b_gamma.symmetric_difference(b_theta).copied().find(differs))
}

impl fmt::Display for DiagonalizationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "horizon {} window {}", self.horizon, self.window)?;
        writeln!(
            f,
            "constructed: |sigma|={} stable={} rules={}",
            self.trace.final_string.len(),
            self.gamma.stable_prefix_length,
            self.rules.len()
        )?;
        writeln!(f, "\n[strategies]")?;
        for (st, name) in self.strategies.iter().zip(&self.opponent_names) {
            write!(f, "R{} vs {name}: {}", st.index, st.status)?;
            if st.status != Status::Inactive {
                write!(f, " N={} Z={{", st.n)?;
                for (k, a) in st.z.iter().enumerate() {
                    write!(f, "{}{a}", if k > 0 { " " } else { "" })?;
                }
                f.write_str("}")?;
                if let (Some(i), Some(j)) = (st.a_i, st.a_j) {
                    write!(f, " I={i} J={j}")?;
                }
            }
            if st.status == Status::Active(Phase::Po2Wait) {
                f.write_str(" (opponent is not a p-system)")?;
            }
            writeln!(f)?;
        }
        for (v, est) in self.verdicts.iter().zip(&self.opponents) {
            write!(f, "  {}: stable={}", v.name, est.stable_prefix_length)?;
            if let Some(e) = v.invalid {
                write!(f, " invalid: {e}")?;
            }
            writeln!(f)?;
        }
        writeln!(f, "\n[timeline]")?;
        for e in &self.timeline {
            writeln!(f, "{}\tR{}\t{}", e.stage, e.strategy, e.action)?;
        }
        writeln!(f, "\n[rules]")?;
        for (rule, origin) in self.rules.rules().iter().zip(&self.origins) {
            let premises: Vec<String> = rule.premises.iter().map(|a| a.to_string()).collect();
            let shown = if premises.len() > 8 {
                format!(
                    "{} ... {} ({} premises)",
                    premises[..3].join(" "),
                    premises[premises.len() - 2..].join(" "),
                    premises.len()
                )
            } else {
                premises.join(" ")
            };
            writeln!(
                f,
                "at {} : {shown} |- {}\tR{} step {}",
                rule.stage, rule.conclusion, origin.strategy, origin.step
            )?;
        }
        writeln!(f, "\n[replacement]")?;
        let jumps: Vec<String> = self
            .replacement
            .iter()
            .filter(|(k, m)| m.0 != k.0 + 1)
            .map(|(k, m)| format!("{k} -> {m}"))
            .collect();
        writeln!(f, "{} entries; all others r(a_k) = a_(k+1)", self.replacement.len())?;
        for j in jumps {
            writeln!(f, "{j}")?;
        }
        writeln!(f, "\n[injuries]")?;
        for (i, s) in &self.injuries {
            writeln!(f, "R{i} at {s}")?;
        }
        writeln!(f, "\n[revisions]")?;
        for e in self.trace.events.iter().filter(|e| e.kind.is_revision()) {
            writeln!(f, "{}\t{e}", e.stage)?;
        }
        writeln!(f, "\n[checks]")?;
        for c in &self.checks {
            writeln!(
                f,
                "{}: {} ({})",
                c.name,
                if c.passed { "pass" } else { "FAIL" },
                c.detail
            )?;
        }
        writeln!(f, "\n[verdicts]")?;
        for v in &self.verdicts {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}
