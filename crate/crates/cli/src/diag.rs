use std::fmt;

use dnspace::parser::SourceSpan;
use dnspace::{EncodeError, OntologyError, ParseError, ReasonerError};
use serde::Serialize;

/// One user-facing error, positioned where possible.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostic {
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
    /// Location inside a JSON document, e.g. `entities[1].id`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

impl Diagnostic {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self { code, message: message.into(), file: None, line: None, column: None, path: None }
    }

    pub fn in_file(mut self, file: &str) -> Self {
        self.file = Some(file.to_string());
        self
    }

    fn at(mut self, span: Option<SourceSpan>) -> Self {
        if let Some(s) = span {
            self.line = Some(s.line);
            self.column = Some(s.column);
        }
        self
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(file) = &self.file {
            write!(f, "{file}")?;
            if let (Some(l), Some(c)) = (self.line, self.column) {
                write!(f, ":{l}:{c}")?;
            }
            write!(f, ": ")?;
        }
        write!(f, "error[{}]: {}", self.code, self.message)
    }
}

impl From<&ParseError> for Diagnostic {
    fn from(e: &ParseError) -> Self {
        let mut d = Diagnostic::new(e.code(), e.to_string()).at(e.span());
        d.path = match e {
            ParseError::Schema { path, .. }
            | ParseError::DuplicateEntityId { path, .. }
            | ParseError::DuplicateSituationId { path, .. } => Some(path.clone()),
            ParseError::Syntax { .. } => None,
        };
        d
    }
}

impl From<&OntologyError> for Diagnostic {
    fn from(e: &OntologyError) -> Self {
        Diagnostic::new(e.code(), e.to_string()).at(e.span())
    }
}

impl From<&EncodeError> for Diagnostic {
    fn from(e: &EncodeError) -> Self {
        match e {
            EncodeError::Ontology(o) => o.into(),
            other => Diagnostic::new(other.code(), other.to_string()),
        }
    }
}

impl From<&ReasonerError> for Diagnostic {
    fn from(e: &ReasonerError) -> Self {
        match e {
            ReasonerError::Encode(e) => e.into(),
            ReasonerError::Ontology(e) => e.into(),
            ReasonerError::MissingBasis(_) => Diagnostic::new("MissingBasis", e.to_string()),
            ReasonerError::Numerics(_) => Diagnostic::new("Numerics", e.to_string()),
        }
    }
}

/// Why a command did not succeed; decides the exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad invocation or unreadable input (exit 2).
    Usage(Diagnostic),
    /// Input read fine but did not validate (exit 1).
    Invalid(Vec<Diagnostic>),
}

impl Failure {
    pub fn invalid(d: Diagnostic) -> Self {
        Failure::Invalid(vec![d])
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Invalid(_) => 1,
        }
    }

    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            Failure::Usage(d) => std::slice::from_ref(d),
            Failure::Invalid(ds) => ds,
        }
    }
}
