use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::model::AxiomId;

pub const DEFAULT_CERTIFICATE_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplacementError {
    #[error("r({0}) = {0} is a fixed point")]
    FixedPoint(AxiomId),
    #[error("inserting r({from}) = {to} closes a cycle of length {length}")]
    Cycle { from: AxiomId, to: AxiomId, length: usize },
    #[error("r({0}) is already defined")]
    AlreadyDefined(AxiomId),
}

/// A partial, extendable replacement map with a bounded acyclicity check.
///
/// Every insert verifies `r^n(x) != x` for `1 <= n <= depth`, starting from the
/// inserted key. Any new cycle must pass through that key, so this keeps the
/// whole map free of cycles up to the depth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplacementMap {
    map: BTreeMap<AxiomId, AxiomId>,
    depth: usize,
    /// Every `k` below this has `r(a_k)` defined.
    defined_below: u64,
}

impl Default for ReplacementMap {
    fn default() -> Self {
        Self::with_depth(DEFAULT_CERTIFICATE_DEPTH)
    }
}

impl ReplacementMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_depth(depth: usize) -> Self {
        Self {
            map: BTreeMap::new(),
            depth,
            defined_below: 0,
        }
    }

    /// Builds a map from `(k, m)` pairs meaning `r(a_k) = a_m`.
    pub fn from_pairs(pairs: &[(u64, u64)]) -> Result<Self, ReplacementError> {
        let mut r = Self::new();
        for &(k, m) in pairs {
            r.insert(AxiomId(k), AxiomId(m))?;
        }
        Ok(r)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn get(&self, x: AxiomId) -> Option<AxiomId> {
        self.map.get(&x).copied()
    }

    pub fn contains(&self, x: AxiomId) -> bool {
        self.map.contains_key(&x)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (AxiomId, AxiomId)> + '_ {
        self.map.iter().map(|(&k, &v)| (k, v))
    }

    /// Defines `r(from) = to`. Redefinition is refused.
    pub fn insert(&mut self, from: AxiomId, to: AxiomId) -> Result<(), ReplacementError> {
        if self.map.contains_key(&from) {
            return Err(ReplacementError::AlreadyDefined(from));
        }
        if from == to {
            return Err(ReplacementError::FixedPoint(from));
        }
        let mut current = to;
        for length in 2..=self.depth {
            match self.map.get(&current) {
                Some(&next) if next == from => {
                    return Err(ReplacementError::Cycle { from, to, length });
                }
                Some(&next) => current = next,
                None => break,
            }
        }
        self.map.insert(from, to);
        while self.map.contains_key(&AxiomId(self.defined_below)) {
            self.defined_below += 1;
        }
        Ok(())
    }

    /// Least `k` with `r(a_k)` undefined.
    pub fn least_undefined(&self) -> AxiomId {
        AxiomId(self.defined_below)
    }

    /// Sets `r(a_k) = a_{k+1}` at the least undefined `k` and returns `a_k`.
    pub fn extend_least_undefined(&mut self) -> Result<AxiomId, ReplacementError> {
        let k = self.least_undefined();
        self.insert(k, AxiomId(k.0 + 1))?;
        Ok(k)
    }

    pub fn max_mentioned(&self) -> Option<u64> {
        self.map.iter().map(|(k, v)| k.0.max(v.0)).max()
    }
}

impl fmt::Display for ReplacementMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.map {
            writeln!(f, "{k} -> {v}")?;
        }
        Ok(())
    }
}
