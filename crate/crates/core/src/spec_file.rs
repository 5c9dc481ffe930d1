//! The system-spec file: an optional header followed by a rule section and a
//! replacement section.
//!
//! ```text
//! variant p
//! axioms 4
//! [rules]
//! at 3 : a0 |- CE
//! [replacement]
//! a0 -> a2
//! ```
//!
//! `#` starts a comment. Comments and blank lines are not preserved; the
//! printed form is canonical and parses back to the same value.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::consequence::{parse_rule_line, Rule, RuleTable, Symbol};
use crate::model::AxiomId;
use crate::parse::{source_lines, ParseError, SourceLine};
use crate::run::{classify_variant, QSystem, ReplacementMap, RunError, Variant};

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "d" => Ok(Variant::D),
            "p" => Ok(Variant::P),
            "q" => Ok(Variant::Q),
            other => Err(format!("unknown variant `{other}` (expected d, p or q)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Load(#[from] RunError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemSpec {
    pub variant: Option<Variant>,
    /// Every mentioned axiom index lies below this.
    pub axioms: Option<u64>,
    pub rules: RuleTable,
    pub replacement: ReplacementMap,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Header,
    Rules,
    Replacement,
}

impl SystemSpec {
    pub fn empty() -> Self {
        Self {
            variant: None,
            axioms: None,
            rules: RuleTable::new(),
            replacement: ReplacementMap::new(),
        }
    }

    pub fn from_system(system: &QSystem) -> Self {
        Self {
            variant: Some(system.variant()),
            axioms: None,
            rules: system.operator().clone(),
            replacement: system.replacement.clone(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut spec = Self::empty();
        let mut section = Section::Header;
        let mut seen_rules = false;
        let mut seen_replacement = false;
        for line in source_lines(text) {
            match line.text {
                "[rules]" => {
                    if seen_rules || seen_replacement {
                        return Err(line.error("`[rules]` must appear once, before `[replacement]`"));
                    }
                    seen_rules = true;
                    section = Section::Rules;
                    continue;
                }
                "[replacement]" => {
                    if seen_replacement {
                        return Err(line.error("duplicate `[replacement]` section"));
                    }
                    seen_replacement = true;
                    section = Section::Replacement;
                    continue;
                }
                _ => {}
            }
            match section {
                Section::Header => spec.header_line(&line)?,
                Section::Rules => {
                    let rule = parse_rule_line(&line)?;
                    spec.check_rule(&line, &rule)?;
                    spec.rules.push(rule);
                }
                Section::Replacement => spec.replacement_line(&line)?,
            }
        }
        Ok(spec)
    }

    fn header_line(&mut self, line: &SourceLine<'_>) -> Result<(), ParseError> {
        let (key, value) = line
            .text
            .split_once(char::is_whitespace)
            .ok_or_else(|| line.error("expected `variant <d|p|q>`, `axioms <n>` or a section header"))?;
        let value = value.trim();
        match key {
            "variant" if self.variant.is_none() => {
                self.variant = Some(value.parse().map_err(|m: String| line.error_at(value, m))?);
            }
            "axioms" if self.axioms.is_none() => {
                let n = value
                    .parse()
                    .map_err(|_| line.error_at(value, format!("bad axiom count `{value}`")))?;
                self.axioms = Some(n);
            }
            "variant" | "axioms" => return Err(line.error(format!("duplicate `{key}` line"))),
            _ => return Err(line.error(format!("unknown header key `{key}`"))),
        }
        Ok(())
    }

    fn check_axiom(&self, line: &SourceLine<'_>, a: AxiomId) -> Result<(), ParseError> {
        match self.axioms {
            Some(n) if a.0 >= n => Err(line.error(format!("{a} is outside the declared {n} axioms"))),
            _ => Ok(()),
        }
    }

    fn check_rule(&self, line: &SourceLine<'_>, rule: &Rule) -> Result<(), ParseError> {
        for &p in &rule.premises {
            self.check_axiom(line, p)?;
        }
        if let Symbol::Axiom(a) = rule.conclusion {
            self.check_axiom(line, a)?;
        }
        let refused = matches!(
            (self.variant, rule.conclusion),
            (Some(Variant::D), Symbol::CounterExample) | (Some(Variant::P), Symbol::Bottom)
        );
        if refused {
            let variant = self.variant.expect("checked");
            return Err(line.error(format!("a {variant}-system may not conclude {}", rule.conclusion)));
        }
        Ok(())
    }

    fn replacement_line(&mut self, line: &SourceLine<'_>) -> Result<(), ParseError> {
        let (from, to) = line
            .text
            .split_once("->")
            .ok_or_else(|| line.error("expected `a<k> -> a<m>`"))?;
        let parse = |part: &str| -> Result<AxiomId, ParseError> {
            let t = part.trim();
            t.parse().map_err(|_| line.error_at(t, format!("bad axiom `{t}`")))
        };
        let (from, to) = (parse(from)?, parse(to)?);
        self.check_axiom(line, from)?;
        self.check_axiom(line, to)?;
        self.replacement.insert(from, to).map_err(|e| line.error(e.to_string()))
    }

    /// The declared variant, or the classified one when none is declared.
    pub fn variant(&self) -> Variant {
        self.variant.unwrap_or_else(|| classify_variant(&self.rules))
    }

    pub fn system(&self) -> Result<QSystem, SpecError> {
        Ok(QSystem::new(self.rules.clone(), self.replacement.clone())?)
    }
}

impl fmt::Display for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(v) = self.variant {
            writeln!(f, "variant {v}")?;
        }
        if let Some(n) = self.axioms {
            writeln!(f, "axioms {n}")?;
        }
        writeln!(f, "[rules]")?;
        write!(f, "{}", self.rules)?;
        writeln!(f, "[replacement]")?;
        write!(f, "{}", self.replacement)
    }
}
