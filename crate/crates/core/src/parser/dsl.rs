use std::fmt::Write as _;
use std::iter::Peekable;
use std::str::Chars;

use super::{DeclSpans, ParseError, SourceSpan};
use crate::ontology::{Declaration, ElementKind};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Role,
    Description,
    Name(String),
    Lt,
    Comma,
    LBrace,
    RBrace,
    Unknown(char),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Role => "keyword `role`".into(),
            Tok::Description => "keyword `description`".into(),
            Tok::Name(n) => format!("name `{n}`"),
            Tok::Lt => "`<`".into(),
            Tok::Comma => "`,`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Unknown(c) => format!("character `{}`", c.escape_debug()),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn is_name_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

/// Returns true if `s` can be written as a bare DSL name.
pub(crate) fn is_valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if is_name_start(c)) && chars.all(is_name_char) && s != "role" && s != "description"
}

struct Lexer<'a> {
    chars: Peekable<Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self { chars: src.chars().peekable(), line: 1, column: 1 }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn next_token(&mut self) -> (Tok, SourceSpan) {
        loop {
            match self.chars.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('#') => {
                    while !matches!(self.chars.peek(), None | Some('\n')) {
                        self.bump();
                    }
                }
                _ => break,
            }
        }
        let (line, column) = (self.line, self.column);
        let span = |length| SourceSpan { line, column, length };
        let Some(c) = self.bump() else {
            return (Tok::Eof, span(1));
        };
        let tok = match c {
            '<' => Tok::Lt,
            ',' => Tok::Comma,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            c if is_name_start(c) => {
                let mut name = String::from(c);
                while let Some(&n) = self.chars.peek() {
                    if !is_name_char(n) {
                        break;
                    }
                    name.push(n);
                    self.bump();
                }
                let len = name.chars().count();
                let tok = match name.as_str() {
                    "role" => Tok::Role,
                    "description" => Tok::Description,
                    _ => Tok::Name(name),
                };
                return (tok, span(len));
            }
            other => Tok::Unknown(other),
        };
        (tok, span(1))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    current: (Tok, SourceSpan),
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        let mut lexer = Lexer::new(src);
        let current = lexer.next_token();
        Self { lexer, current }
    }

    fn advance(&mut self) -> (Tok, SourceSpan) {
        let next = self.lexer.next_token();
        std::mem::replace(&mut self.current, next)
    }

    fn error(&self, expected: &str) -> ParseError {
        ParseError::Syntax { expected: expected.into(), found: self.current.0.describe(), span: self.current.1 }
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), ParseError> {
        if self.current.0 == tok {
            self.advance();
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    fn name(&mut self) -> Result<(String, SourceSpan), ParseError> {
        match &self.current.0 {
            Tok::Name(_) => match self.advance() {
                (Tok::Name(n), span) => Ok((n, span)),
                _ => unreachable!(),
            },
            _ => Err(self.error("a name")),
        }
    }

    /// NAME ("," NAME)*
    fn name_list(&mut self) -> Result<(Vec<String>, Vec<SourceSpan>), ParseError> {
        let mut names = Vec::new();
        let mut spans = Vec::new();
        loop {
            let (n, s) = self.name()?;
            names.push(n);
            spans.push(s);
            if self.current.0 != Tok::Comma {
                return Ok((names, spans));
            }
            self.advance();
        }
    }

    fn statement(&mut self) -> Result<Declaration, ParseError> {
        let kind = match self.current.0 {
            Tok::Role => ElementKind::Role,
            Tok::Description => ElementKind::Description,
            _ => return Err(self.error("`role` or `description`")),
        };
        self.advance();
        let (name, name_span) = self.name()?;
        let (parents, parent_spans) = if self.current.0 == Tok::Lt {
            self.advance();
            self.name_list()?
        } else {
            (Vec::new(), Vec::new())
        };
        let (components, component_spans) = if kind == ElementKind::Description {
            let expected = if parents.is_empty() { "`<` or `{`" } else { "`,` or `{`" };
            self.expect(Tok::LBrace, expected)?;
            let list = self.name_list()?;
            self.expect(Tok::RBrace, "`,` or `}`")?;
            list
        } else {
            (Vec::new(), Vec::new())
        };
        Ok(Declaration {
            kind,
            name,
            parents,
            components,
            spans: Some(DeclSpans { name: name_span, parents: parent_spans, components: component_spans }),
        })
    }
}

/// Parses DSL text into declarations, in source order. Stops at the first error.
pub fn parse_ontology_text(src: &str) -> Result<Vec<Declaration>, ParseError> {
    let mut parser = Parser::new(src);
    let mut decls = Vec::new();
    while parser.current.0 != Tok::Eof {
        decls.push(parser.statement()?);
    }
    Ok(decls)
}

/// Renders declarations as DSL, one statement per line.
pub fn to_dsl(decls: &[Declaration]) -> String {
    let mut out = String::new();
    for d in decls {
        let keyword = match d.kind {
            ElementKind::Role => "role",
            ElementKind::Description => "description",
        };
        write!(out, "{keyword} {}", d.name).unwrap();
        if !d.parents.is_empty() {
            write!(out, " < {}", d.parents.join(", ")).unwrap();
        }
        if d.kind == ElementKind::Description {
            write!(out, " {{ {} }}", d.components.join(", ")).unwrap();
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn syntax(src: &str) -> (String, String, SourceSpan) {
        match parse_ontology_text(src).unwrap_err() {
            ParseError::Syntax { expected, found, span } => (expected, found, span),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn role_with_parent() {
        let decls = parse_ontology_text("role Circle < Shape").unwrap();
        assert_eq!(decls, vec![Declaration::role("Circle", &["Shape"])]);
        let spans = decls[0].spans.as_ref().unwrap();
        assert_eq!(spans.name, SourceSpan { line: 1, column: 6, length: 6 });
        assert_eq!(spans.parents, vec![SourceSpan { line: 1, column: 15, length: 5 }]);
    }

    #[test]
    fn description_components_keep_order() {
        let decls = parse_ontology_text("description Fig { Shape, Color }").unwrap();
        assert_eq!(decls, vec![Declaration::description("Fig", &[], &["Shape", "Color"])]);
    }

    #[test]
    fn panel_mixes_roles_and_descriptions() {
        let src = "# panel axioms\nrole hasNumber\ndescription Figure { hasNumber }\ndescription Panel { hasNumber, Figure }\n";
        let decls = parse_ontology_text(src).unwrap();
        assert_eq!(decls[2], Declaration::description("Panel", &[], &["hasNumber", "Figure"]));
    }

    #[test]
    fn whitespace_insensitive() {
        let a = parse_ontology_text("role A role B<A description D<E{A,B}description E{A}").unwrap();
        let b = parse_ontology_text("role A\nrole B < A\n\ndescription D < E {\n  A,\n  B\n}\ndescription E { A }\n")
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_and_comment_only() {
        assert!(parse_ontology_text("").unwrap().is_empty());
        assert!(parse_ontology_text("  # nothing here\n# at all").unwrap().is_empty());
    }

    #[test]
    fn error_messages_and_positions() {
        let (e, f, s) = syntax("role\n");
        assert_eq!((e.as_str(), f.as_str()), ("a name", "end of input"));
        assert_eq!(s, SourceSpan { line: 2, column: 1, length: 1 });

        let (e, f, s) = syntax("role A\ndescription D { }");
        assert_eq!((e.as_str(), f.as_str()), ("a name", "`}`"));
        assert_eq!((s.line, s.column), (2, 17));

        let (e, f, _) = syntax("description D A");
        assert_eq!((e.as_str(), f.as_str()), ("`<` or `{`", "name `A`"));

        let (e, f, s) = syntax("role A\n  @");
        assert_eq!((e.as_str(), f.as_str()), ("`role` or `description`", "character `@`"));
        assert_eq!((s.line, s.column), (2, 3));

        let (e, f, _) = syntax("description D { A B }");
        assert_eq!((e.as_str(), f.as_str()), ("`,` or `}`", "name `B`"));

        let (_, f, _) = syntax("role role");
        assert_eq!(f, "keyword `role`");
    }

    #[test]
    fn display_matches_expected_found() {
        let err = parse_ontology_text("role <").unwrap_err();
        assert_eq!(err.to_string(), "syntax error at 1:6: expected a name, found `<`");
    }

    #[test]
    fn unicode_columns_count_chars() {
        let (_, _, s) = syntax("role Ünïcode <");
        assert_eq!((s.line, s.column), (1, 15));
    }

    #[test]
    fn serialize_then_parse() {
        let decls = vec![
            Declaration::role("Shape", &[]),
            Declaration::role("Circle", &["Shape"]),
            Declaration::description("Fig", &[], &["Shape", "Circle"]),
            Declaration::description("Sub", &["Fig"], &["Shape"]),
        ];
        assert_eq!(parse_ontology_text(&to_dsl(&decls)).unwrap(), decls);
    }

    #[test]
    fn name_validity() {
        assert!(is_valid_name("T-shirt_top"));
        assert!(!is_valid_name("role"));
        assert!(!is_valid_name("1abc"));
        assert!(!is_valid_name(""));
    }
}
