//! Readers and writers for the ontology DSL, the structured (JSON) ontology
//! format and situation files.
//!
//! The DSL grammar:
//!
//! ```text
//! file      := stmt*
//! stmt      := role_decl | desc_decl
//! role_decl := "role" NAME ("<" NAME ("," NAME)*)?
//! desc_decl := "description" NAME ("<" NAME ("," NAME)*)? "{" NAME ("," NAME)* "}"
//! ```
//!
//! `<` lists subsumption parents and `#` starts a line comment.

mod dsl;
mod situation;
mod structured;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use dsl::{parse_ontology_text, to_dsl};
pub use situation::{parse_situation, situation_to_json, Entity, Situation};
pub use structured::{parse_ontology_structured, to_structured};

use crate::ontology::Declaration;

/// 1-based location of a token in source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Token locations of one DSL declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeclSpans {
    pub name: SourceSpan,
    pub parents: Vec<SourceSpan>,
    pub components: Vec<SourceSpan>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {span}: expected {expected}, found {found}")]
    Syntax { expected: String, found: String, span: SourceSpan },
    #[error("schema error at `{path}`{}: {message}", .span.map(|s| format!(" ({s})")).unwrap_or_default())]
    Schema { path: String, message: String, span: Option<SourceSpan> },
    #[error("duplicate entity id `{id}` at `{path}`")]
    DuplicateEntityId { id: String, path: String },
    #[error("duplicate situation id `{id}` at `{path}`")]
    DuplicateSituationId { id: String, path: String },
}

impl ParseError {
    pub fn span(&self) -> Option<SourceSpan> {
        match self {
            ParseError::Syntax { span, .. } => Some(*span),
            ParseError::Schema { span, .. } => *span,
            _ => None,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ParseError::Syntax { .. } => "SyntaxError",
            ParseError::Schema { .. } => "SchemaError",
            ParseError::DuplicateEntityId { .. } => "DuplicateEntityId",
            ParseError::DuplicateSituationId { .. } => "DuplicateSituationId",
        }
    }
}

/// Which ontology format a document is in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OntologyFormat {
    Dsl,
    Structured,
}

impl OntologyFormat {
    /// Structured documents are JSON objects; everything else is DSL.
    pub fn sniff(src: &str) -> Self {
        if src.trim_start().starts_with('{') {
            OntologyFormat::Structured
        } else {
            OntologyFormat::Dsl
        }
    }
}

/// Parses either ontology format, detected from the content.
pub fn parse_ontology(src: &str) -> Result<Vec<Declaration>, ParseError> {
    match OntologyFormat::sniff(src) {
        OntologyFormat::Dsl => parse_ontology_text(src),
        OntologyFormat::Structured => parse_ontology_structured(src),
    }
}

fn json_error_span(e: &serde_json::Error) -> Option<SourceSpan> {
    (e.line() > 0).then(|| SourceSpan { line: e.line(), column: e.column().max(1), length: 1 })
}

/// Reads a JSON document into `T`, reporting the failing path.
fn from_json<T: serde::de::DeserializeOwned>(src: &str) -> Result<T, ParseError> {
    let mut de = serde_json::Deserializer::from_str(src);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let span = json_error_span(&inner);
        ParseError::Schema { path, message: strip_position(&inner.to_string()), span }
    })?;
    de.end().map_err(|e| ParseError::Schema {
        path: ".".into(),
        message: strip_position(&e.to_string()),
        span: json_error_span(&e),
    })?;
    Ok(value)
}

/// serde_json appends " at line L column C"; the span carries that already.
fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}
