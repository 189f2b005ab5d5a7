use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ErrorCategory {
    ParseError,
    UnknownFunction,
    RuntimeError,
    StepLimitExceeded,
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ErrorCategory::ParseError => "ParseError",
            ErrorCategory::UnknownFunction => "UnknownFunction",
            ErrorCategory::RuntimeError => "RuntimeError",
            ErrorCategory::StepLimitExceeded => "StepLimitExceeded",
        };
        f.write_str(s)
    }
}

/// Failure of parsing or running a SkillScript program.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecError {
    pub category: ErrorCategory,
    pub message: String,
    /// 1-based `(line, column)`; column is 0 when only the line is known.
    pub location: Option<(usize, usize)>,
}

impl ExecError {
    pub fn new(category: ErrorCategory, message: impl Into<String>) -> Self {
        ExecError { category, message: message.into(), location: None }
    }

    pub fn parse(message: impl Into<String>, line: usize, col: usize) -> Self {
        ExecError::new(ErrorCategory::ParseError, message).at(line, col)
    }

    pub fn unknown_function(name: &str) -> Self {
        ExecError::new(ErrorCategory::UnknownFunction, format!("unknown function `{name}`"))
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        ExecError::new(ErrorCategory::RuntimeError, message)
    }

    pub fn at(mut self, line: usize, col: usize) -> Self {
        self.location = Some((line, col));
        self
    }

    pub(crate) fn at_line_if_unset(mut self, line: usize) -> Self {
        if self.location.is_none() && line > 0 {
            self.location = Some((line, 0));
        }
        self
    }
}

impl fmt::Display for ExecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.location {
            Some((line, 0)) => write!(f, "{} at line {}: {}", self.category, line, self.message),
            Some((line, col)) => write!(f, "{} at {}:{}: {}", self.category, line, col, self.message),
            None => write!(f, "{}: {}", self.category, self.message),
        }
    }
}

impl std::error::Error for ExecError {}
