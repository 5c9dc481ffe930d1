//! Knowledge-base files.
//!
//! ```text
//! item k0
//! item k1
//! rule k0 -> k1
//! conflict k1 k2
//! hint k2 -> k3
//! ```
//!
//! Items are listed most entrenched first; item `i` is the axiom `a_i`.
//! `hint` lines give replacement targets used only in q-mode repair.

use std::collections::BTreeSet;
use std::fmt;

use crate::model::AxiomId;
use crate::parse::{source_lines, ParseError, SourceLine};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KnowledgeBase {
    pub items: Vec<String>,
    pub rules: Vec<(Vec<AxiomId>, AxiomId)>,
    pub conflicts: Vec<Vec<AxiomId>>,
    pub hints: Vec<(AxiomId, AxiomId)>,
}

/// New items given as truths, with the rules and conflicts they bring.
/// Ids continue the numbering of the knowledge base they extend.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Incoming {
    pub items: Vec<String>,
    pub rules: Vec<(Vec<AxiomId>, AxiomId)>,
    pub conflicts: Vec<Vec<AxiomId>>,
}

impl Incoming {
    pub fn ids(&self, base: usize) -> Vec<AxiomId> {
        (base..base + self.items.len()).map(|i| AxiomId(i as u64)).collect()
    }
}

struct Sections {
    items: Vec<String>,
    rules: Vec<(Vec<AxiomId>, AxiomId)>,
    conflicts: Vec<Vec<AxiomId>>,
    hints: Vec<(AxiomId, AxiomId)>,
}

fn parse_sections(text: &str, known: &[String], allow_hints: bool) -> Result<Sections, ParseError> {
    let mut out = Sections {
        items: Vec::new(),
        rules: Vec::new(),
        conflicts: Vec::new(),
        hints: Vec::new(),
    };
    let lines: Vec<SourceLine<'_>> = source_lines(text).collect();
    // items first, so rules may mention items declared further down
    for line in &lines {
        let Some(rest) = line.text.strip_prefix("item ") else {
            continue;
        };
        let name = rest.trim();
        if name.split_whitespace().count() != 1 {
            return Err(line.error_at(rest, "expected `item <name>`"));
        }
        if known.iter().chain(&out.items).any(|n| n == name) {
            return Err(line.error_at(name, format!("item `{name}` declared twice")));
        }
        out.items.push(name.to_string());
    }
    let all: Vec<&String> = known.iter().chain(&out.items).collect();
    let lookup = |line: &SourceLine<'_>, name: &str| {
        all.iter()
            .position(|n| *n == name)
            .map(|i| AxiomId(i as u64))
            .ok_or_else(|| line.error_at(name, format!("unknown item `{name}`")))
    };
    let names = |line: &SourceLine<'_>, part: &str| -> Result<Vec<AxiomId>, ParseError> {
        part.split_whitespace().map(|n| lookup(line, n)).collect()
    };
    for line in &lines {
        let (keyword, rest) = line.text.split_once(char::is_whitespace).unwrap_or((line.text, ""));
        match keyword {
            "item" => {}
            "rule" | "hint" => {
                let (lhs, rhs) = rest
                    .split_once("->")
                    .ok_or_else(|| line.error(format!("expected `{keyword} <names> -> <name>`")))?;
                let premises = names(line, lhs)?;
                let rhs = rhs.trim();
                if premises.is_empty() || rhs.split_whitespace().count() != 1 {
                    return Err(line.error(format!("expected `{keyword} <names> -> <name>`")));
                }
                let conclusion = lookup(line, rhs)?;
                if keyword == "rule" {
                    out.rules.push((premises, conclusion));
                } else if !allow_hints || premises.len() != 1 {
                    return Err(
                        line.error("`hint` takes one item on each side and is only allowed in a knowledge base")
                    );
                } else {
                    out.hints.push((premises[0], conclusion));
                }
            }
            "conflict" => {
                let set = names(line, rest)?;
                if set.is_empty() {
                    return Err(line.error("a conflict needs at least one item"));
                }
                out.conflicts.push(set);
            }
            other => return Err(line.error(format!("unknown directive `{other}`"))),
        }
    }
    Ok(out)
}

impl KnowledgeBase {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let s = parse_sections(text, &[], true)?;
        Ok(Self {
            items: s.items,
            rules: s.rules,
            conflicts: s.conflicts,
            hints: s.hints,
        })
    }

    /// Parses new items whose rules may also mention this base's items.
    pub fn parse_incoming(&self, text: &str) -> Result<Incoming, ParseError> {
        let s = parse_sections(text, &self.items, false)?;
        Ok(Incoming {
            items: s.items,
            rules: s.rules,
            conflicts: s.conflicts,
        })
    }

    pub fn ids(&self) -> Vec<AxiomId> {
        (0..self.items.len() as u64).map(AxiomId).collect()
    }

    pub fn name(&self, a: AxiomId) -> Option<&str> {
        self.items.get(a.0 as usize).map(String::as_str)
    }

    pub fn names(&self, set: &BTreeSet<AxiomId>) -> Vec<String> {
        set.iter()
            .map(|&a| self.name(a).map_or_else(|| a.to_string(), str::to_string))
            .collect()
    }
}

impl fmt::Display for KnowledgeBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = |a: &AxiomId| self.items[a.0 as usize].as_str();
        let join = |xs: &[AxiomId]| xs.iter().map(name).collect::<Vec<_>>().join(" ");
        for item in &self.items {
            writeln!(f, "item {item}")?;
        }
        for (premises, conclusion) in &self.rules {
            writeln!(f, "rule {} -> {}", join(premises), name(conclusion))?;
        }
        for c in &self.conflicts {
            writeln!(f, "conflict {}", join(c))?;
        }
        for (from, to) in &self.hints {
            writeln!(f, "hint {} -> {}", name(from), name(to))?;
        }
        Ok(())
    }
}
