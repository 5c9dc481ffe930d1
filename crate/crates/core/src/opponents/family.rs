//! Opponent family files.
//!
//! ```text
//! program id expr n
//! program h staged at 3 : a4 |- CE; diverge at 9 : a7
//! program t table 0:5 1:6
//! program spin loop
//! opponent first g=id h=h r=t
//! opponent by-number index 2250
//! ```
//!
//! Programs are numbered in declaration order; `index m` selects
//! `(i0, i1, i2)` from the exponents of 2, 3 and 5 in `m`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::expr::parse_expr;
use super::program::{parse_staged, Body, Program, ProgramUniverse, EXPR_VARS};
use super::{decode_index, PartialPSystem};
use crate::parse::{source_lines, ParseError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FamilyError {
    #[error("{0}")]
    Parse(#[from] ParseError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpponentSpec {
    pub name: String,
    pub indices: (u64, u64, u64),
    /// The `index` the opponent was declared with, if any.
    pub number: Option<u64>,
}

#[derive(Clone, Debug, Default)]
pub struct OpponentFamily {
    pub universe: Arc<ProgramUniverse>,
    pub opponents: Vec<OpponentSpec>,
}

impl OpponentFamily {
    pub fn parse(text: &str) -> Result<Self, FamilyError> {
        let mut programs: Vec<Program> = Vec::new();
        let mut opponents = Vec::new();
        for line in source_lines(text) {
            let mut words = line.text.splitn(3, char::is_whitespace);
            let keyword = words.next().unwrap_or_default();
            let name = words.next().unwrap_or_default();
            let rest = words.next().unwrap_or_default().trim();
            if name.is_empty() {
                return Err(line.error("missing name").into());
            }
            match keyword {
                "program" => {
                    if programs.iter().any(|p| p.name == name) {
                        return Err(line.error_at(name, format!("program `{name}` defined twice")).into());
                    }
                    let (kind, body_text) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
                    let body_text = body_text.trim();
                    let body = match kind {
                        "expr" => Body::Expr(parse_expr(body_text, &EXPR_VARS).map_err(|e| {
                            let at = body_text.get(e.offset..).unwrap_or_default();
                            line.error_at(at, e.message)
                        })?),
                        "table" => Body::Table(parse_table(body_text).map_err(|m| line.error_at(body_text, m))?),
                        "staged" => Body::Staged(parse_staged(body_text).map_err(|m| line.error_at(body_text, m))?),
                        "loop" if body_text.is_empty() => Body::Loop,
                        _ => {
                            return Err(line
                                .error_at(
                                    rest,
                                    "expected `expr <e>`, `table k:v ...`, `staged <clauses>` or `loop`",
                                )
                                .into())
                        }
                    };
                    programs.push(Program {
                        name: name.to_string(),
                        body,
                        source: rest.to_string(),
                    });
                }
                "opponent" => {
                    let spec = if let Some(m) = rest.strip_prefix("index") {
                        let m = m.trim();
                        let number: u64 = m.parse().map_err(|_| line.error_at(m, format!("bad index `{m}`")))?;
                        let indices = decode_index(number).map_err(|e| line.error_at(m, e.to_string()))?;
                        OpponentSpec {
                            name: name.to_string(),
                            indices,
                            number: Some(number),
                        }
                    } else {
                        let mut refs = BTreeMap::new();
                        for part in rest.split_whitespace() {
                            let (key, id) = part
                                .split_once('=')
                                .filter(|(k, _)| ["g", "h", "r"].contains(k))
                                .ok_or_else(|| line.error_at(part, "expected `g=<id>`, `h=<id>` or `r=<id>`"))?;
                            let index = programs
                                .iter()
                                .position(|p| p.name == id)
                                .ok_or_else(|| line.error_at(id, format!("unknown program `{id}`")))?;
                            refs.insert(key, index as u64);
                        }
                        let get = |k: &str| {
                            refs.get(k)
                                .copied()
                                .ok_or_else(|| line.error(format!("opponent `{name}` needs `{k}=`")))
                        };
                        OpponentSpec {
                            name: name.to_string(),
                            indices: (get("g")?, get("h")?, get("r")?),
                            number: None,
                        }
                    };
                    opponents.push(spec);
                }
                other => return Err(line.error(format!("unknown directive `{other}`")).into()),
            }
        }
        Ok(Self {
            universe: Arc::new(ProgramUniverse::new(programs)),
            opponents,
        })
    }

    /// Fresh opponents at stage 0.
    pub fn systems(&self) -> Vec<PartialPSystem> {
        self.opponents
            .iter()
            .map(|o| PartialPSystem::new(o.name.clone(), Arc::clone(&self.universe), o.indices))
            .collect()
    }
}

fn parse_table(text: &str) -> Result<BTreeMap<u64, u64>, String> {
    text.split_whitespace()
        .map(|pair| {
            pair.split_once(':')
                .and_then(|(k, v)| Some((k.parse().ok()?, v.parse().ok()?)))
                .ok_or_else(|| format!("bad table entry `{pair}`"))
        })
        .collect()
}

impl fmt::Display for OpponentFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in self.universe.programs() {
            writeln!(f, "{p}")?;
        }
        for o in &self.opponents {
            match o.number {
                Some(m) => writeln!(f, "opponent {} index {m}", o.name)?,
                None => {
                    let name = |i: u64| self.universe.get(i).map_or("?", |p| p.name.as_str());
                    let (g, h, r) = o.indices;
                    writeln!(f, "opponent {} g={} h={} r={}", o.name, name(g), name(h), name(r))?;
                }
            }
        }
        Ok(())
    }
}
