//! Lexing, parsing and name/arity resolution of `.rml` model sources.

mod lexer;
mod parser;
mod resolve;

pub use lexer::{tokenize, Token, TokenKind};
pub use parser::parse;
pub use resolve::resolve;

use crate::ast::{Model, SourceSpan};
use serde::Serialize;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub span: SourceSpan,
}

impl Diagnostic {
    pub fn error(message: impl Into<String>, span: SourceSpan) -> Self {
        Diagnostic { severity: Severity::Error, message: message.into(), span }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}: {tag}: {}", self.span, self.message)
    }
}

/// Tokenize, parse and resolve a model source in one step.
pub fn load_model(file: &str, source: &str) -> Result<Model, Vec<Diagnostic>> {
    let tokens = tokenize(file, source).map_err(|d| vec![d])?;
    let unresolved = parse(file, &tokens)?;
    resolve(unresolved)
}
