//! Tokenizer for choreography source text.
//!
//! Newlines are not significant: statement boundaries are decided by the
//! parser from the token stream alone. `#` starts a line comment; both LF
//! and CRLF line ends are accepted. The forward operator may be written
//! `|>` or `▶`.

use crate::diag::{Diagnostic, DiagnosticCode, Span};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Str(String),
    Num(String),
    Colon,
    DoubleColon,
    Comma,
    At,
    Dot,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Pipe,
    Forward,  // |> or ▶
    LArrow,   // <-
    RArrow,   // ->
    SvcArrow, // <->
    Dash,     // -
    Eof,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Str(_) => "string literal".to_string(),
            TokenKind::Num(n) => format!("number `{n}`"),
            TokenKind::Colon => "`:`".to_string(),
            TokenKind::DoubleColon => "`::`".to_string(),
            TokenKind::Comma => "`,`".to_string(),
            TokenKind::At => "`@`".to_string(),
            TokenKind::Dot => "`.`".to_string(),
            TokenKind::LParen => "`(`".to_string(),
            TokenKind::RParen => "`)`".to_string(),
            TokenKind::LBrace => "`{`".to_string(),
            TokenKind::RBrace => "`}`".to_string(),
            TokenKind::Pipe => "`|`".to_string(),
            TokenKind::Forward => "`|>`".to_string(),
            TokenKind::LArrow => "`<-`".to_string(),
            TokenKind::RArrow => "`->`".to_string(),
            TokenKind::SvcArrow => "`<->`".to_string(),
            TokenKind::Dash => "`-`".to_string(),
            TokenKind::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

/// Words with grammatical meaning; rejected as identifiers.
pub const RESERVED: &[&str] = &[
    "stateful", "stateless", "services", "import", "as", "def", "do", "end", "with", "for", "in",
    "if", "then", "else",
];

pub fn is_reserved(word: &str) -> bool {
    RESERVED.contains(&word)
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(source: &'a str) -> Self {
        Lexer {
            chars: source.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn pos(&self) -> Span {
        Span::new(self.line, self.col)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn error(&self, span: Span, message: impl Into<String>) -> Diagnostic {
        Diagnostic::new(DiagnosticCode::Syntax, span, message)
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            match c {
                ' ' | '\t' | '\r' | '\n' => {
                    self.bump();
                }
                '#' => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn lex_string(&mut self, start: Span) -> Result<Token, Diagnostic> {
        self.bump(); // opening quote
        let mut value = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error(start, "unterminated string literal")),
                Some('\n') => return Err(self.error(start, "unterminated string literal")),
                Some('"') => break,
                Some('\\') => match self.bump() {
                    Some('"') => value.push('"'),
                    Some('\\') => value.push('\\'),
                    Some(c) => {
                        return Err(self.error(start, format!("unknown escape `\\{c}` in string")))
                    }
                    None => return Err(self.error(start, "unterminated string literal")),
                },
                Some(c) => value.push(c),
            }
        }
        Ok(Token {
            kind: TokenKind::Str(value),
            span: start,
        })
    }

    fn next_token(&mut self) -> Result<Token, Diagnostic> {
        self.skip_trivia();
        let span = self.pos();
        let Some(c) = self.peek() else {
            return Ok(Token {
                kind: TokenKind::Eof,
                span,
            });
        };

        let simple = |kind: TokenKind| Token { kind, span };

        match c {
            'a'..='z' | 'A'..='Z' => {
                let mut word = String::new();
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        word.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                Ok(Token {
                    kind: TokenKind::Ident(word),
                    span,
                })
            }
            '0'..='9' => {
                let mut num = String::new();
                while let Some(c) = self.peek() {
                    if c.is_ascii_digit() {
                        num.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                // Fractional part only when a digit follows the dot, so
                // field access on numbers stays unambiguous.
                if self.peek() == Some('.') {
                    let mut lookahead = self.chars.clone();
                    lookahead.next();
                    if lookahead.peek().is_some_and(|c| c.is_ascii_digit()) {
                        num.push('.');
                        self.bump();
                        while let Some(c) = self.peek() {
                            if c.is_ascii_digit() {
                                num.push(c);
                                self.bump();
                            } else {
                                break;
                            }
                        }
                    }
                }
                Ok(Token {
                    kind: TokenKind::Num(num),
                    span,
                })
            }
            '"' => self.lex_string(span),
            ':' => {
                self.bump();
                if self.peek() == Some(':') {
                    self.bump();
                    Ok(simple(TokenKind::DoubleColon))
                } else {
                    Ok(simple(TokenKind::Colon))
                }
            }
            ',' => {
                self.bump();
                Ok(simple(TokenKind::Comma))
            }
            '@' => {
                self.bump();
                Ok(simple(TokenKind::At))
            }
            '.' => {
                self.bump();
                Ok(simple(TokenKind::Dot))
            }
            '(' => {
                self.bump();
                Ok(simple(TokenKind::LParen))
            }
            ')' => {
                self.bump();
                Ok(simple(TokenKind::RParen))
            }
            '{' => {
                self.bump();
                Ok(simple(TokenKind::LBrace))
            }
            '}' => {
                self.bump();
                Ok(simple(TokenKind::RBrace))
            }
            '▶' => {
                self.bump();
                Ok(simple(TokenKind::Forward))
            }
            '|' => {
                self.bump();
                if self.peek() == Some('>') {
                    self.bump();
                    Ok(simple(TokenKind::Forward))
                } else {
                    Ok(simple(TokenKind::Pipe))
                }
            }
            '<' => {
                self.bump();
                if self.peek() == Some('-') {
                    self.bump();
                    if self.peek() == Some('>') {
                        self.bump();
                        Ok(simple(TokenKind::SvcArrow))
                    } else {
                        Ok(simple(TokenKind::LArrow))
                    }
                } else {
                    Err(self.error(span, "unexpected character `<`"))
                }
            }
            '-' => {
                self.bump();
                if self.peek() == Some('>') {
                    self.bump();
                    Ok(simple(TokenKind::RArrow))
                } else {
                    Ok(simple(TokenKind::Dash))
                }
            }
            other => Err(self.error(span, format!("unexpected character `{other}`"))),
        }
    }
}

/// Tokenize the whole input, ending with an [`TokenKind::Eof`] token.
pub fn tokenize(source: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut lexer = Lexer::new(source);
    let mut tokens = Vec::new();
    loop {
        let token = lexer.next_token()?;
        let done = token.kind == TokenKind::Eof;
        tokens.push(token);
        if done {
            return Ok(tokens);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn arrows_lex_distinctly() {
        assert_eq!(
            kinds("<-Gateway-> <-> -> -SNS->"),
            vec![
                TokenKind::LArrow,
                TokenKind::Ident("Gateway".into()),
                TokenKind::RArrow,
                TokenKind::SvcArrow,
                TokenKind::RArrow,
                TokenKind::Dash,
                TokenKind::Ident("SNS".into()),
                TokenKind::RArrow,
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn forward_operator_spellings_agree() {
        assert_eq!(kinds("a@f ▶ fit"), kinds("a@f |> fit"));
    }

    #[test]
    fn pipe_and_forward_are_distinct() {
        assert_eq!(
            kinds("| x |> y |"),
            vec![
                TokenKind::Pipe,
                TokenKind::Ident("x".into()),
                TokenKind::Forward,
                TokenKind::Ident("y".into()),
                TokenKind::Pipe,
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn comments_and_crlf_are_trivia() {
        assert_eq!(kinds("a # comment\r\nb"), kinds("a\nb"));
    }

    #[test]
    fn string_escapes() {
        assert_eq!(
            kinds(r#""a\"b\\c""#),
            vec![TokenKind::Str("a\"b\\c".into()), TokenKind::Eof]
        );
    }

    #[test]
    fn unterminated_string_is_an_error() {
        let err = tokenize("\"abc").unwrap_err();
        assert_eq!(err.code, DiagnosticCode::Syntax);
    }

    #[test]
    fn field_access_on_number_stays_dot() {
        assert_eq!(
            kinds("1.5 200.body"),
            vec![
                TokenKind::Num("1.5".into()),
                TokenKind::Num("200".into()),
                TokenKind::Dot,
                TokenKind::Ident("body".into()),
                TokenKind::Eof,
            ]
        );
    }
}
