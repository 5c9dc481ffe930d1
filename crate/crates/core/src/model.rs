//! Axioms, belief strings and the four primitive string revisions.
//!
//! A belief string is the agent's state at one stage: a finite sequence whose
//! entries are either axioms or the gap marker `*`, which records a position
//! whose axiom was rejected. Positions are 0-based.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Index of an axiom `a_k` in the canonical listing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AxiomId(pub u64);

impl AxiomId {
    pub fn index(self) -> u64 {
        self.0
    }
}

impl fmt::Display for AxiomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

impl FromStr for AxiomId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.strip_prefix('a')
            .filter(|digits| !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|digits| digits.parse().ok())
            .map(AxiomId)
            .ok_or_else(|| ModelError::BadToken(s.to_string()))
    }
}

/// One entry of a belief string.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Token {
    Axiom(AxiomId),
    Gap,
}

impl Token {
    pub fn axiom(self) -> Option<AxiomId> {
        match self {
            Token::Axiom(a) => Some(a),
            Token::Gap => None,
        }
    }
}

impl From<AxiomId> for Token {
    fn from(a: AxiomId) -> Self {
        Token::Axiom(a)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Axiom(a) => a.fmt(f),
            Token::Gap => f.write_str("*"),
        }
    }
}

impl FromStr for Token {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "*" {
            Ok(Token::Gap)
        } else {
            s.parse().map(Token::Axiom)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("contraction to length {k} needs k < |sigma| = {len}")]
    ContractionOutOfRange { k: usize, len: usize },
    #[error("invalid replacement: {0}")]
    InvalidReplacement(&'static str),
    #[error("invalid excision: {0}")]
    InvalidExcision(&'static str),
    #[error("bad token `{0}` (expected `a<k>` or `*`)")]
    BadToken(String),
}

/// A finite string over axioms and the gap marker.
///
/// The same axiom may occupy several positions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct BeliefString {
    entries: Vec<Token>,
}

impl BeliefString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_tokens(entries: Vec<Token>) -> Self {
        Self { entries }
    }

    /// Builds a gap-free string from axiom indices.
    pub fn from_indices<I: IntoIterator<Item = u64>>(indices: I) -> Self {
        Self {
            entries: indices.into_iter().map(|i| Token::Axiom(AxiomId(i))).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, n: usize) -> Option<Token> {
        self.entries.get(n).copied()
    }

    pub fn last(&self) -> Option<Token> {
        self.entries.last().copied()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.entries
    }

    /// The first `k` tokens, if `k <= |sigma|`.
    pub fn prefix(&self, k: usize) -> Option<&[Token]> {
        self.entries.get(..k)
    }

    pub fn is_prefix_of(&self, other: &BeliefString) -> bool {
        other.entries.starts_with(&self.entries)
    }

    /// The set of axioms occurring in the string.
    pub fn range(&self) -> BTreeSet<AxiomId> {
        range_of(&self.entries)
    }

    pub fn contraction(&self, k: usize) -> Result<BeliefString, ModelError> {
        if k >= self.len() {
            return Err(ModelError::ContractionOutOfRange { k, len: self.len() });
        }
        Ok(Self::from_tokens(self.entries[..k].to_vec()))
    }

    /// Appends `a_{|sigma|}`.
    pub fn expansion(&self) -> BeliefString {
        let mut entries = self.entries.clone();
        entries.push(Token::Axiom(AxiomId(self.len() as u64)));
        Self { entries }
    }

    pub fn replacement(&self, new_axiom: AxiomId) -> Result<BeliefString, ModelError> {
        match self.last() {
            None => Err(ModelError::InvalidReplacement("empty string")),
            Some(Token::Gap) => Err(ModelError::InvalidReplacement("last entry is a gap")),
            Some(Token::Axiom(old)) if old == new_axiom => {
                Err(ModelError::InvalidReplacement("replacement must change the axiom"))
            }
            Some(Token::Axiom(_)) => {
                let mut entries = self.entries.clone();
                *entries.last_mut().expect("nonempty") = Token::Axiom(new_axiom);
                Ok(Self { entries })
            }
        }
    }

    pub fn excision(&self) -> Result<BeliefString, ModelError> {
        match self.last() {
            None => Err(ModelError::InvalidExcision("empty string")),
            Some(Token::Gap) => Err(ModelError::InvalidExcision("last entry is already a gap")),
            Some(Token::Axiom(_)) => {
                let mut entries = self.entries.clone();
                *entries.last_mut().expect("nonempty") = Token::Gap;
                Ok(Self { entries })
            }
        }
    }

    pub(crate) fn truncate(&mut self, k: usize) {
        self.entries.truncate(k);
    }

    pub(crate) fn push(&mut self, token: Token) {
        self.entries.push(token);
    }
}

/// Axioms occurring in a token slice.
pub fn range_of(tokens: &[Token]) -> BTreeSet<AxiomId> {
    tokens.iter().filter_map(|t| t.axiom()).collect()
}

impl fmt::Display for BeliefString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, token) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            token.fmt(f)?;
        }
        Ok(())
    }
}

impl FromStr for BeliefString {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split_whitespace()
            .map(str::parse)
            .collect::<Result<Vec<_>, _>>()
            .map(Self::from_tokens)
    }
}

impl FromIterator<Token> for BeliefString {
    fn from_iter<I: IntoIterator<Item = Token>>(iter: I) -> Self {
        Self::from_tokens(iter.into_iter().collect())
    }
}
