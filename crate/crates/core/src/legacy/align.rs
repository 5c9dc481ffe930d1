use std::fmt;

use thiserror::Error;

use super::{LegacyError, LegacyState, Permutation};
use crate::model::{AxiomId, BeliefString, Token};
use crate::run::RunTrace;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Direction {
    /// The q-system was obtained from the legacy one; `a_i` is `f_i`.
    Forward(Permutation),
    /// The legacy system was obtained from the q-system; `a_n` is `n + 2`
    /// and the legacy run is five stages ahead.
    Backward,
}

impl Direction {
    const BACKWARD_OFFSET: u64 = 5;

    fn offset(&self) -> u64 {
        match self {
            Direction::Forward(_) => 0,
            Direction::Backward => Self::BACKWARD_OFFSET,
        }
    }

    fn shift(&self) -> usize {
        match self {
            Direction::Forward(_) => 0,
            Direction::Backward => 2,
        }
    }

    fn token_of(&self, value: u64) -> Token {
        match self {
            Direction::Forward(f) => Token::Axiom(AxiomId(f.invert(value))),
            Direction::Backward => match value.checked_sub(2) {
                Some(n) => Token::Axiom(AxiomId(n)),
                // 0 and 1 stand for the triggers; no axiom matches them
                None => Token::Gap,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlignmentError {
    #[error("legacy run ended at stage {available}, but stage {needed} is needed")]
    Scope { needed: u64, available: u64 },
    #[error(transparent)]
    Legacy(#[from] LegacyError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    pub q_stage: u64,
    pub legacy_stage: u64,
    /// Position in the q-string, or `None` for a length disagreement.
    pub position: Option<usize>,
    pub expected: String,
    pub found: String,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.position {
            None => write!(
                f,
                "length mismatch at q-stage {} / legacy stage {}: legacy implies {}, q-run has {}",
                self.q_stage, self.legacy_stage, self.expected, self.found
            ),
            Some(n) => write!(
                f,
                "position {n} differs at q-stage {} / legacy stage {}: legacy implies {}, q-run has {}",
                self.q_stage, self.legacy_stage, self.expected, self.found
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlignmentReport {
    pub stages_checked: u64,
    pub first_mismatch: Option<Mismatch>,
}

impl AlignmentReport {
    pub fn agrees(&self) -> bool {
        self.first_mismatch.is_none()
    }
}

fn compare(direction: &Direction, q_stage: u64, sigma: &BeliefString, state: &LegacyState) -> Option<Mismatch> {
    let shift = direction.shift();
    let mismatch = |position, expected: String, found: String| Mismatch {
        q_stage,
        legacy_stage: state.stage,
        position,
        expected,
        found,
    };
    let expected_len = state.p.saturating_sub(shift);
    if sigma.len() != expected_len || state.p < shift {
        return Some(mismatch(
            None,
            format!("length {expected_len}"),
            format!("length {}", sigma.len()),
        ));
    }
    for (n, &token) in sigma.tokens().iter().enumerate() {
        let expected = match state.rho(n + shift) {
            Some(v) => direction.token_of(v),
            None => Token::Gap,
        };
        if expected != token {
            return Some(mismatch(Some(n), expected.to_string(), token.to_string()));
        }
    }
    None
}

/// Compares a q-run against a legacy run, stage by stage.
///
/// Forward: `|σ_s| = p(s)` and `σ_s(x)` is `ρ_s(x)`, or `*` where the stack
/// is empty. Backward: the same with `σ_{s-5}`, positions shifted by two.
pub fn check_alignment<I>(trace: &RunTrace, legacy: I, direction: &Direction) -> Result<AlignmentReport, AlignmentError>
where
    I: IntoIterator<Item = Result<LegacyState, LegacyError>>,
{
    let offset = direction.offset();
    let mut legacy = legacy.into_iter();
    let mut next_state = |needed: u64| -> Result<LegacyState, AlignmentError> {
        loop {
            match legacy.next() {
                None => {
                    return Err(AlignmentError::Scope {
                        needed,
                        available: needed.saturating_sub(1),
                    })
                }
                Some(state) => {
                    let state = state?;
                    if state.stage == needed {
                        return Ok(state);
                    }
                }
            }
        }
    };
    let mut sigma = BeliefString::new();
    let mut events = trace.events.iter();
    let mut checked = 0;
    for q_stage in 0..=trace.horizon {
        if q_stage > 0 {
            let event = events.next().expect("trace covers its horizon");
            event.kind.apply(&mut sigma);
        }
        let state = next_state(q_stage + offset)?;
        checked += 1;
        if let Some(m) = compare(direction, q_stage, &sigma, &state) {
            return Ok(AlignmentReport {
                stages_checked: checked,
                first_mismatch: Some(m),
            });
        }
    }
    Ok(AlignmentReport {
        stages_checked: checked,
        first_mismatch: None,
    })
}
