//! Source positions and compiler diagnostics.

use std::fmt;

use thiserror::Error;

/// A 1-based line/column position.
///
/// Spans never take part in equality, so trees that differ only in where they
/// came from compare equal. This is what the print/parse round trip relies on.
#[derive(Debug, Clone, Copy, Default, Eq, Hash)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    LexError,
    ParseError,
    TypeError,
    RaiseDisciplineError,
    GlobalShapeError,
    UnsupportedConstruct,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A located error, optionally naming the language rule it violates.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct CompileError {
    pub kind: ErrorKind,
    pub rule: Option<&'static str>,
    pub span: Span,
    pub message: String,
}

impl fmt::Display for CompileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.kind)?;
        if let Some(rule) = self.rule {
            write!(f, "[{rule}]")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl CompileError {
    pub fn new(kind: ErrorKind, span: Span, message: impl Into<String>) -> Self {
        CompileError { kind, rule: None, span, message: message.into() }
    }

    pub fn rule(kind: ErrorKind, rule: &'static str, span: Span, message: impl Into<String>) -> Self {
        CompileError { kind, rule: Some(rule), span, message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, CompileError>;

/// Names of the subset rules that rejections cite.
pub mod rules {
    pub const NO_TRY: &str = "no-try-with";
    pub const NO_CLOSURES: &str = "no-closures";
    pub const NO_FOR: &str = "no-for-loops";
    pub const NO_REFS: &str = "no-references";
    pub const NO_STRINGS: &str = "no-strings";
    pub const NO_FLOATS: &str = "no-floats";
    pub const NO_POLYMORPHISM: &str = "monomorphic-types";
    pub const NO_MODULES: &str = "no-modules";
    pub const NON_NESTED: &str = "non-nested-patterns";
    pub const EXCEPTION_PAYLOAD: &str = "exceptions-without-payload";
    pub const RAISE_IN_PRIVATE: &str = "raise-only-in-public";
    pub const RAISE_AFTER_MUTATION: &str = "raise-before-mutation";
    pub const GLOBAL_FIELDS: &str = "global-integer-fields";
    pub const EXHAUSTIVE: &str = "exhaustive-match";
    pub const KIND_MATCH: &str = "matching-integer-kinds";
    pub const SPEC_ONLY: &str = "specification-only";
    pub const ADD_GAS_CONSTANT: &str = "constant-add-gas";
    pub const PUBLIC_SIGNATURE: &str = "word-typed-public-signature";
}
