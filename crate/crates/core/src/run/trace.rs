use std::fmt;
use std::io::{self, Write};

use crate::model::{AxiomId, BeliefString, Token};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EventKind {
    /// Appended `a_{|sigma|}`.
    Expansion(AxiomId),
    /// Kept `k-1` entries and turned entry `k-1` into a gap.
    Excision { k: usize, old: AxiomId },
    /// Kept `k-1` entries and replaced entry `k-1` by `new`.
    Replacement { k: usize, old: AxiomId, new: AxiomId },
}

impl EventKind {
    pub fn tag(&self) -> &'static str {
        match self {
            EventKind::Expansion(_) => "EXP",
            EventKind::Excision { .. } => "EXC",
            EventKind::Replacement { .. } => "REP",
        }
    }

    /// 1-based index of the revised entry, if any.
    pub fn k(&self) -> Option<usize> {
        match *self {
            EventKind::Expansion(_) => None,
            EventKind::Excision { k, .. } | EventKind::Replacement { k, .. } => Some(k),
        }
    }

    pub fn is_revision(&self) -> bool {
        !matches!(self, EventKind::Expansion(_))
    }

    /// Applies the event to the string it was computed from.
    pub fn apply(&self, sigma: &mut BeliefString) {
        match *self {
            EventKind::Expansion(a) => sigma.push(Token::Axiom(a)),
            EventKind::Excision { k, .. } => {
                sigma.truncate(k - 1);
                sigma.push(Token::Gap);
            }
            EventKind::Replacement { k, new, .. } => {
                sigma.truncate(k - 1);
                sigma.push(Token::Axiom(new));
            }
        }
    }
}

/// One stage of a run. The resulting string is not stored; it is recovered by
/// replaying events from the empty string (see [`RunTrace::strings`]).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TraceEvent {
    pub stage: u64,
    pub kind: EventKind,
    pub len_after: usize,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.tag())?;
        match self.kind {
            EventKind::Expansion(a) => write!(f, " {a}"),
            EventKind::Excision { k, old } => write!(f, " k={k} {old}"),
            EventKind::Replacement { k, old, new } => write!(f, " k={k} {old}->{new}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunTrace {
    pub events: Vec<TraceEvent>,
    pub horizon: u64,
    /// Largest rule stage of the operator the run used.
    pub rule_horizon: u64,
    pub final_string: BeliefString,
}

impl RunTrace {
    /// Iterates `sigma_1, sigma_2, ...` alongside the event producing each.
    pub fn strings(&self) -> Replay<'_> {
        Replay {
            events: self.events.iter(),
            sigma: BeliefString::new(),
        }
    }

    /// `sigma_s` for `s <= horizon`.
    pub fn sigma_at(&self, s: u64) -> Option<BeliefString> {
        if s > self.horizon {
            return None;
        }
        let mut sigma = BeliefString::new();
        for event in &self.events[..s as usize] {
            event.kind.apply(&mut sigma);
        }
        Some(sigma)
    }

    /// Writes the tab-separated trace file, one line per stage.
    pub fn write_to(&self, mut out: impl Write) -> io::Result<()> {
        let mut replay = self.strings();
        while let Some((event, sigma)) = replay.next_ref() {
            write_line(&mut out, event, sigma)?;
        }
        Ok(())
    }

    pub fn to_trace_file(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("trace is ascii")
    }
}

pub(crate) fn write_line(out: &mut impl Write, event: &TraceEvent, sigma: &BeliefString) -> io::Result<()> {
    let (k, old, new) = match event.kind {
        EventKind::Expansion(a) => ("-".to_string(), "-".to_string(), a.to_string()),
        EventKind::Excision { k, old } => (k.to_string(), old.to_string(), "-".to_string()),
        EventKind::Replacement { k, old, new } => (k.to_string(), old.to_string(), new.to_string()),
    };
    writeln!(out, "{}\t{}\t{k}\t{old}\t{new}\t{sigma}", event.stage, event.kind.tag())
}

pub struct Replay<'a> {
    events: std::slice::Iter<'a, TraceEvent>,
    sigma: BeliefString,
}

impl Replay<'_> {
    /// Advances without cloning the string.
    pub fn next_ref(&mut self) -> Option<(&TraceEvent, &BeliefString)> {
        let event = self.events.next()?;
        event.kind.apply(&mut self.sigma);
        Some((event, &self.sigma))
    }
}

impl<'a> Iterator for Replay<'a> {
    type Item = (&'a TraceEvent, BeliefString);

    fn next(&mut self) -> Option<Self::Item> {
        let event = self.events.next()?;
        event.kind.apply(&mut self.sigma);
        Some((event, self.sigma.clone()))
    }
}
