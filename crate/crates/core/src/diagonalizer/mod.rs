//! The finite-injury construction of a loopless q-system whose limiting
//! belief set differs from that of every opponent in a family.
//!
//! Strategy `R_i` works against opponent `i`. At each stage the
//! highest-priority active strategy whose wait condition holds makes one
//! transition and deactivates every lower-priority strategy. On a stage where
//! no strategy acts, the highest-priority inactive strategy is activated and
//! `r` is extended at its least undefined argument. Then the constructed
//! system and every opponent advance one stage.

mod report;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::consequence::{Rule, RuleTable, Symbol};
use crate::model::{AxiomId, Token};
use crate::opponents::{Eval, PartialPSystem};
use crate::run::{EventKind, ReplacementError, ReplacementMap, RunError, RunState, RunTrace, TraceEvent};

pub use report::{Check, DiagonalizationReport, Verdict};

/// Where an active strategy is waiting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    S2Wait,
    Po2Wait,
    S5Wait,
    S7Wait,
    S8Done,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::S2Wait => "S2wait",
            Phase::Po2Wait => "PO2wait",
            Phase::S5Wait => "S5wait",
            Phase::S7Wait => "S7wait",
            Phase::S8Done => "S8done",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    Inactive,
    Active(Phase),
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Inactive => f.write_str("inactive"),
            Status::Active(p) => p.fmt(f),
        }
    }
}

/// Incremental search for the first occurrences of `a_N, a_{N+1}, a_{N+2}`
/// in the opponent's enumeration.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Scan {
    cursor: usize,
    first: [Option<usize>; 3],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrategyState {
    pub index: usize,
    pub status: Status,
    /// Fresh base index; meaningful once active.
    pub n: u64,
    pub z: BTreeSet<AxiomId>,
    pub s_set: BTreeSet<AxiomId>,
    /// `E` of PredictOrder.
    pub e_set: BTreeSet<AxiomId>,
    pub lmn: Option<(usize, usize, usize)>,
    pub rho: Option<Vec<AxiomId>>,
    pub a_i: Option<AxiomId>,
    pub a_j: Option<AxiomId>,
    /// Step 3 found `g_l != a_N` and skipped Part 1.
    pub skipped_part_one: bool,
    /// Largest index mentioned when PredictOrder returned.
    pub m_at_return: Option<u64>,
    pub activated_at: Option<u64>,
    scan: Scan,
    tau: Vec<Option<AxiomId>>,
}

impl StrategyState {
    fn new(index: usize) -> Self {
        Self {
            index,
            status: Status::Inactive,
            n: 0,
            z: BTreeSet::new(),
            s_set: BTreeSet::new(),
            e_set: BTreeSet::new(),
            lmn: None,
            rho: None,
            a_i: None,
            a_j: None,
            skipped_part_one: false,
            m_at_return: None,
            activated_at: None,
            scan: Scan::default(),
            tau: Vec::new(),
        }
    }

    fn axiom(&self, offset: u64) -> AxiomId {
        AxiomId(self.n + offset)
    }
}

/// Something a strategy did, for the timeline.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    Activated {
        n: u64,
    },
    /// Step 2 saw `l < m < n`.
    Found {
        l: usize,
        m: usize,
        n: usize,
    },
    SkipPartOne,
    PredictOrder {
        rho: Vec<AxiomId>,
    },
    AddRule {
        rule: usize,
        step: u8,
    },
    PrefixSeen,
    CounterexampleSeen,
    Completed,
    Deactivated {
        by: usize,
    },
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Activated { n } => write!(f, "activated N={n}"),
            Action::Found { l, m, n } => write!(f, "step 2 l={l} m={m} n={n}"),
            Action::SkipPartOne => f.write_str("step 3 g_l != a_N, part 2"),
            Action::PredictOrder { rho } => {
                f.write_str("predict-order rho=")?;
                write_axioms(f, rho)
            }
            Action::AddRule { rule, step } => write!(f, "step {step} rule #{rule}"),
            Action::PrefixSeen => f.write_str("step 5 rho is a prefix"),
            Action::CounterexampleSeen => f.write_str("step 7 CE in H(rho)"),
            Action::Completed => f.write_str("complete"),
            Action::Deactivated { by } => write!(f, "deactivated by R{by}"),
        }
    }
}

fn write_axioms(f: &mut fmt::Formatter<'_>, xs: &[AxiomId]) -> fmt::Result {
    f.write_str("<")?;
    for (i, a) in xs.iter().enumerate() {
        if i > 0 {
            f.write_str(" ")?;
        }
        write!(f, "{a}")?;
    }
    f.write_str(">")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimelineEntry {
    pub stage: u64,
    pub strategy: usize,
    pub action: Action,
}

/// Where an index entered the construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Rule,
    Replacement,
    Fresh,
    Observation,
    Expansion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mention {
    pub stage: u64,
    pub index: u64,
    pub source: Source,
}

/// Provenance of an appended rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleOrigin {
    pub strategy: usize,
    pub step: u8,
    pub n: u64,
    pub s_set: BTreeSet<AxiomId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagonalizeError {
    #[error("horizon must be at least 1")]
    EmptyHorizon,
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Replacement(#[from] ReplacementError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DiagonalizeConfig {
    pub horizon: u64,
    pub window: u64,
    /// Upper bound on the per-call fuel, which is otherwise the stage number.
    pub fuel_cap: u64,
}

impl Default for DiagonalizeConfig {
    fn default() -> Self {
        Self {
            horizon: 10_000,
            window: 100,
            fuel_cap: 10_000,
        }
    }
}

/// The scheduler and the system under construction.
pub struct Scheduler {
    pub stage: u64,
    pub strategies: Vec<StrategyState>,
    pub opponents: Vec<PartialPSystem>,
    pub rules: RuleTable,
    pub origins: Vec<RuleOrigin>,
    pub replacement: ReplacementMap,
    pub timeline: Vec<TimelineEntry>,
    pub mentions: Vec<Mention>,
    pub events: Vec<TraceEvent>,
    /// Per activation: strategy, chosen `N`, and how many mentions preceded it.
    pub activations: Vec<(usize, u64, usize)>,
    run: RunState,
    mentioned: u64,
    fuel_cap: u64,
}

impl Scheduler {
    pub fn new(opponents: Vec<PartialPSystem>, fuel_cap: u64) -> Self {
        Self {
            stage: 0,
            strategies: (0..opponents.len()).map(StrategyState::new).collect(),
            opponents,
            rules: RuleTable::new(),
            origins: Vec::new(),
            replacement: ReplacementMap::new(),
            timeline: Vec::new(),
            mentions: Vec::new(),
            events: Vec::new(),
            activations: Vec::new(),
            run: RunState::new(),
            mentioned: 0,
            fuel_cap,
        }
    }

    pub fn run_state(&self) -> &RunState {
        &self.run
    }

    /// Largest index mentioned so far.
    pub fn max_mentioned(&self) -> u64 {
        self.mentioned
    }

    fn mention(&mut self, index: u64, source: Source) {
        self.mentions.push(Mention {
            stage: self.stage,
            index,
            source,
        });
        self.mentioned = self.mentioned.max(index);
    }

    fn mention_all(&mut self, xs: impl IntoIterator<Item = AxiomId>, source: Source) {
        if let Some(max) = xs.into_iter().map(|a| a.0).max() {
            self.mention(max, source);
        }
    }

    fn log(&mut self, strategy: usize, action: Action) {
        self.timeline.push(TimelineEntry {
            stage: self.stage,
            strategy,
            action,
        });
    }

    fn fuel(&self) -> u64 {
        self.stage.min(self.fuel_cap)
    }

    /// Runs one stage of the construction.
    pub fn step(&mut self) -> Result<(), DiagonalizeError> {
        let mut acted = false;
        if self.stage >= 1 {
            for i in 0..self.strategies.len() {
                if self.poll(i) {
                    self.act(i)?;
                    self.deactivate_below(i);
                    acted = true;
                    break;
                }
            }
            if !acted {
                if let Some(i) = self.strategies.iter().position(|s| s.status == Status::Inactive) {
                    self.activate(i)?;
                }
                let k = self.replacement.extend_least_undefined()?;
                let to = self.replacement.get(k).expect("just defined");
                self.mention(to.0, Source::Replacement);
            }
        }
        let event = self.run.step(&self.rules, &self.replacement, self.stage)?;
        if let EventKind::Expansion(a) = event.kind {
            self.mention(a.0, Source::Expansion);
        }
        self.events.push(event);
        let fuel = self.fuel();
        for theta in &mut self.opponents {
            theta.step(fuel);
        }
        self.stage += 1;
        Ok(())
    }

    fn deactivate_below(&mut self, i: usize) {
        for j in i + 1..self.strategies.len() {
            if self.strategies[j].status != Status::Inactive {
                self.strategies[j] = StrategyState::new(j);
                self.log(j, Action::Deactivated { by: i });
            }
        }
    }

    fn protected(&self, i: usize) -> BTreeSet<AxiomId> {
        self.strategies[..i].iter().flat_map(|s| s.z.iter().copied()).collect()
    }

    /// Step 1.
    fn activate(&mut self, i: usize) -> Result<(), DiagonalizeError> {
        let n = self.mentioned + 3;
        self.activations.push((i, n, self.mentions.len()));
        let protected = self.protected(i);
        let s_set = (0..n).map(AxiomId).filter(|a| !protected.contains(a)).collect();
        self.replacement.insert(AxiomId(n), AxiomId(n + 2))?;
        self.mention(n + 2, Source::Fresh);
        let stage = self.stage;
        let st = &mut self.strategies[i];
        *st = StrategyState::new(i);
        st.status = Status::Active(Phase::S2Wait);
        st.n = n;
        st.s_set = s_set;
        st.activated_at = Some(stage);
        self.log(i, Action::Activated { n });
        Ok(())
    }

    /// Whether strategy `i` is active and its wait condition holds now.
    fn poll(&mut self, i: usize) -> bool {
        let fuel = self.fuel();
        let stage = self.stage;
        let st = &mut self.strategies[i];
        let theta = &mut self.opponents[i];
        match st.status {
            Status::Inactive | Status::Active(Phase::S8Done) => false,
            Status::Active(Phase::S2Wait) => {
                let targets = [st.axiom(0), st.axiom(1), st.axiom(2)];
                let seen = theta.enumerated();
                while st.scan.cursor < seen.len() {
                    if let Some(t) = targets.iter().position(|a| *a == seen[st.scan.cursor]) {
                        st.scan.first[t].get_or_insert(st.scan.cursor);
                    }
                    st.scan.cursor += 1;
                }
                let [Some(a), Some(b), Some(c)] = st.scan.first else {
                    return false;
                };
                let (l, n) = (a.min(b).min(c), a.max(b).max(c));
                if theta.sigma().len() <= n {
                    return false;
                }
                match theta.r_index(l as u64, fuel) {
                    Eval::Converged(m) => theta.g(m, fuel).converged().is_some(),
                    Eval::OutOfFuel => false,
                }
            }
            Status::Active(Phase::Po2Wait) => {
                let (_, _, n) = st.lmn.expect("set at step 2");
                st.tau.resize(n, None);
                for j in 0..n {
                    if st.tau[j].is_none() {
                        match theta.r_iterate(j as u64, &st.e_set, fuel) {
                            Eval::Converged((a, _)) => st.tau[j] = Some(a),
                            Eval::OutOfFuel => return false,
                        }
                    }
                }
                true
            }
            Status::Active(Phase::S5Wait) => {
                let rho = st.rho.as_ref().expect("set before step 5");
                let sigma = theta.sigma().tokens();
                sigma.len() >= rho.len() && rho.iter().zip(sigma).all(|(a, t)| *t == Token::Axiom(*a))
            }
            Status::Active(Phase::S7Wait) => {
                let rho: BTreeSet<AxiomId> = st.rho.as_ref().expect("set before step 5").iter().copied().collect();
                matches!(
                    theta.evaluate_h(stage, &rho, fuel),
                    Ok(Eval::Converged(out)) if out.contains(&Symbol::CounterExample)
                )
            }
        }
    }

    fn add_rule(&mut self, i: usize, step: u8, premises: BTreeSet<AxiomId>, conclusion: Symbol) {
        let st = &self.strategies[i];
        self.origins.push(RuleOrigin {
            strategy: i,
            step,
            n: st.n,
            s_set: st.s_set.clone(),
        });
        self.mention_all(premises.iter().copied(), Source::Rule);
        self.rules.push(Rule::new(self.stage, premises, conclusion));
        let rule = self.rules.len() - 1;
        self.log(i, Action::AddRule { rule, step });
    }

    /// Makes the one transition whose wait condition [`Self::poll`] saw hold.
    fn act(&mut self, i: usize) -> Result<(), DiagonalizeError> {
        let fuel = self.fuel();
        let Status::Active(phase) = self.strategies[i].status else {
            unreachable!("only active strategies act")
        };
        match phase {
            Phase::S2Wait => {
                let st = &self.strategies[i];
                let [Some(a), Some(b), Some(c)] = st.scan.first else {
                    unreachable!("poll saw all three")
                };
                let mut pos = [a, b, c];
                pos.sort_unstable();
                let [l, m, n] = pos;
                let theta = &mut self.opponents[i];
                let seen: Vec<AxiomId> = theta.enumerated()[..=n].to_vec();
                let r_l = theta
                    .r_index(l as u64, fuel)
                    .converged()
                    .and_then(|m| theta.g(m, fuel).converged())
                    .expect("poll saw convergence");
                let observed: Vec<AxiomId> = theta
                    .sigma()
                    .tokens()
                    .iter()
                    .filter_map(|t| t.axiom())
                    .chain(seen.iter().copied())
                    .chain([r_l])
                    .collect();
                self.mention_all(observed, Source::Observation);
                self.log(i, Action::Found { l, m, n });
                let protected = self.protected(i);
                let st = &mut self.strategies[i];
                st.lmn = Some((l, m, n));
                if seen[l] != st.axiom(0) {
                    st.skipped_part_one = true;
                    st.a_i = Some(seen[l]);
                    st.a_j = Some(st.axiom(0));
                    st.rho = Some(seen[..=l].to_vec());
                    st.status = Status::Active(Phase::S5Wait);
                    self.log(i, Action::SkipPartOne);
                } else {
                    st.e_set = protected;
                    st.e_set.insert(st.axiom(0));
                    st.status = Status::Active(Phase::Po2Wait);
                }
            }
            Phase::Po2Wait => {
                let st = &self.strategies[i];
                let (n1, n2) = (st.axiom(1), st.axiom(2));
                let tau: Vec<AxiomId> = st.tau.iter().map(|t| t.expect("poll filled tau")).collect();
                let end = tau
                    .iter()
                    .position(|a| *a == n1 || *a == n2)
                    .expect("tau(m) = g_m is a_{N+1} or a_{N+2}");
                let rho = tau[..=end].to_vec();
                self.mention_all(tau.iter().copied(), Source::Observation);
                let conclusion = if rho[end] == n1 {
                    Symbol::CounterExample
                } else {
                    Symbol::Bottom
                };
                let mentioned = self.mentioned;
                let st = &mut self.strategies[i];
                st.m_at_return = Some(mentioned);
                st.rho = Some(rho.clone());
                st.a_i = Some(rho[end]);
                st.a_j = Some(if rho[end] == n1 { n2 } else { n1 });
                let mut premises = st.s_set.clone();
                premises.insert(st.axiom(0));
                st.z = [st.axiom(0)].into_iter().collect();
                st.status = Status::Active(Phase::S5Wait);
                self.log(i, Action::PredictOrder { rho });
                self.add_rule(i, 4, premises, conclusion);
            }
            Phase::S5Wait => {
                self.log(i, Action::PrefixSeen);
                let st = &mut self.strategies[i];
                let (a_i, a_j) = (st.a_i.expect("chosen"), st.a_j.expect("chosen"));
                let mut premises = st.s_set.clone();
                premises.extend([a_i, a_j]);
                st.z = if st.skipped_part_one {
                    [a_i].into_iter().collect()
                } else {
                    [st.axiom(0), a_i].into_iter().collect()
                };
                st.status = Status::Active(Phase::S7Wait);
                self.add_rule(i, 6, premises, Symbol::Bottom);
            }
            Phase::S7Wait => {
                self.log(i, Action::CounterexampleSeen);
                let st = &mut self.strategies[i];
                let a_j = st.a_j.expect("chosen");
                let mut premises = st.s_set.clone();
                premises.insert(a_j);
                st.z = if st.skipped_part_one {
                    [st.axiom(0)].into_iter().collect()
                } else {
                    [st.axiom(0), a_j].into_iter().collect()
                };
                st.status = Status::Active(Phase::S8Done);
                self.add_rule(i, 8, premises, Symbol::Bottom);
                self.log(i, Action::Completed);
            }
            Phase::S8Done => unreachable!("completed strategies never act"),
        }
        Ok(())
    }

    /// The constructed system's run so far.
    pub fn trace(&self) -> RunTrace {
        RunTrace {
            events: self.events.clone(),
            horizon: self.stage,
            rule_horizon: self.rules.max_stage(),
            final_string: self.run.sigma().clone(),
        }
    }
}

/// Runs the construction against `opponents` for `config.horizon` stages.
pub fn diagonalize(
    opponents: Vec<PartialPSystem>,
    config: DiagonalizeConfig,
) -> Result<DiagonalizationReport, DiagonalizeError> {
    if config.horizon == 0 {
        return Err(DiagonalizeError::EmptyHorizon);
    }
    let mut scheduler = Scheduler::new(opponents, config.fuel_cap);
    while scheduler.stage < config.horizon {
        scheduler.step()?;
    }
    Ok(DiagonalizationReport::new(&scheduler, config.window))
}
