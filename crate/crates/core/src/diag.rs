//! Source positions and checker diagnostics.

use std::fmt;

/// A source position (1-based line and column, counted in characters).
///
/// Spans are carried by AST nodes as metadata only: two nodes that differ
/// solely in position compare equal, so structural comparisons of parsed
/// trees (round-trips, lexical equivalences) work out of the box.
#[derive(Debug, Clone, Copy, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

// Spans are metadata, not structure.
impl PartialEq for Span {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}
impl Eq for Span {}

impl std::hash::Hash for Span {
    fn hash<H: std::hash::Hasher>(&self, _state: &mut H) {}
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Classification of a well-formedness violation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DiagnosticCode {
    UndeclaredRole,
    UndeclaredMedium,
    UndeclaredOperation,
    DataLocality,
    ImportScope,
    KnowledgeOfChoice,
    StatefulInBody,
    DuplicateName,
    Syntax,
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DiagnosticCode::UndeclaredRole => "UndeclaredRole",
            DiagnosticCode::UndeclaredMedium => "UndeclaredMedium",
            DiagnosticCode::UndeclaredOperation => "UndeclaredOperation",
            DiagnosticCode::DataLocality => "DataLocality",
            DiagnosticCode::ImportScope => "ImportScope",
            DiagnosticCode::KnowledgeOfChoice => "KnowledgeOfChoice",
            DiagnosticCode::StatefulInBody => "StatefulInBody",
            DiagnosticCode::DuplicateName => "DuplicateName",
            DiagnosticCode::Syntax => "Syntax",
        };
        f.write_str(s)
    }
}

/// A single finding, positioned in the source text.
///
/// Line and column are stored as plain integers (not a [`Span`]) so that
/// diagnostics compare and sort by real position.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Diagnostic {
    pub line: u32,
    pub col: u32,
    pub code: DiagnosticCode,
    pub message: String,
}

impl Diagnostic {
    pub fn new(code: DiagnosticCode, span: Span, message: impl Into<String>) -> Self {
        Diagnostic {
            line: span.line,
            col: span.col,
            code,
            message: message.into(),
        }
    }

    /// Render as `<line>:<col>: <CODE>: <message>`. Callers prepend the
    /// file name when one is known.
    pub fn render(&self) -> String {
        format!("{}:{}: {}: {}", self.line, self.col, self.code, self.message)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Sort by position and drop exact `(code, position)` repeats.
pub(crate) fn normalize(mut diags: Vec<Diagnostic>) -> Vec<Diagnostic> {
    diags.sort_by(|a, b| {
        (a.line, a.col, a.code, &a.message).cmp(&(b.line, b.col, b.code, &b.message))
    });
    diags.dedup_by(|a, b| a.line == b.line && a.col == b.col && a.code == b.code);
    diags
}
