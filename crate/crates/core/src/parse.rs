//! Shared helpers for the line-oriented text formats.

use std::fmt;

use thiserror::Error;

/// A parse failure with a 1-based source location.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

/// A meaningful source line: comments stripped, blank lines skipped.
pub(crate) struct SourceLine<'a> {
    pub number: usize,
    pub text: &'a str,
    /// Byte offset of `text` within the raw line.
    pub offset: usize,
}

impl SourceLine<'_> {
    /// Location of `part`, which must be a subslice of `self.text`.
    pub fn error_at(&self, part: &str, message: impl Into<String>) -> ParseError {
        let base = self.text.as_ptr() as usize;
        let at = (part.as_ptr() as usize).saturating_sub(base).min(self.text.len());
        ParseError::new(self.number, self.offset + at + 1, message)
    }

    pub fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::new(self.number, self.offset + 1, message)
    }
}

pub(crate) fn source_lines(input: &str) -> impl Iterator<Item = SourceLine<'_>> {
    input.lines().enumerate().filter_map(|(i, raw)| {
        let uncommented = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let trimmed = uncommented.trim();
        if trimmed.is_empty() {
            return None;
        }
        let offset = uncommented.len() - uncommented.trim_start().len();
        Some(SourceLine {
            number: i + 1,
            text: trimmed,
            offset,
        })
    })
}
