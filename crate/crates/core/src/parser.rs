//! Recursive-descent parser producing a [`Choreography`].
//!
//! The grammar is newline-insensitive; `end` closes every block. Parsing
//! stops at the first error and reports it with a source position. Name
//! resolution is not done here: unknown roles, media, and aliases are the
//! checker's business, so a parse can succeed and still be rejected later.

use crate::ast::*;
use crate::diag::{Diagnostic, DiagnosticCode, Span};
use crate::lexer::{is_reserved, tokenize, Token, TokenKind};

/// Parse a whole choreography source text.
pub fn parse(source: &str) -> Result<Choreography, Diagnostic> {
    let tokens = tokenize(source)?;
    Parser { tokens, pos: 0 }.choreography()
}

const SECTIONS: [&str; 3] = ["stateful", "stateless", "services"];

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, span: Span, message: impl Into<String>) -> Diagnostic {
        Diagnostic::new(DiagnosticCode::Syntax, span, message)
    }

    fn at_word(&self, word: &str) -> bool {
        matches!(&self.peek().kind, TokenKind::Ident(w) if w == word)
    }

    fn at_kind(&self, kind: &TokenKind) -> bool {
        &self.peek().kind == kind
    }

    fn expect(&mut self, kind: TokenKind, ctx: &str) -> Result<Token, Diagnostic> {
        if self.at_kind(&kind) {
            Ok(self.bump())
        } else {
            let found = self.peek();
            Err(self.err(
                found.span,
                format!(
                    "expected {} {ctx}, found {}",
                    kind.describe(),
                    found.kind.describe()
                ),
            ))
        }
    }

    fn keyword(&mut self, word: &str) -> Result<Token, Diagnostic> {
        if self.at_word(word) {
            Ok(self.bump())
        } else {
            let found = self.peek();
            Err(self.err(
                found.span,
                format!("expected `{word}`, found {}", found.kind.describe()),
            ))
        }
    }

    /// A non-reserved identifier; `what` names the grammatical slot.
    fn ident(&mut self, what: &str) -> Result<(String, Span), Diagnostic> {
        match &self.peek().kind {
            TokenKind::Ident(w) if is_reserved(w) => {
                let span = self.peek().span;
                let w = w.clone();
                Err(self.err(
                    span,
                    format!("expected {what}, found reserved word `{w}`"),
                ))
            }
            TokenKind::Ident(_) => {
                let t = self.bump();
                match t.kind {
                    TokenKind::Ident(w) => Ok((w, t.span)),
                    _ => unreachable!(),
                }
            }
            other => {
                let span = self.peek().span;
                let found = other.describe();
                Err(self.err(span, format!("expected {what}, found {found}")))
            }
        }
    }

    // -- top level ----------------------------------------------------------

    fn choreography(&mut self) -> Result<Choreography, Diagnostic> {
        let roles = self.preamble()?;
        let mut imports = Vec::new();
        while self.at_word("import") {
            imports.push(self.import()?);
        }
        let main = self.main_def()?;
        if !self.at_kind(&TokenKind::Eof) {
            let found = self.peek();
            return Err(self.err(
                found.span,
                format!(
                    "expected end of input after `main`, found {}",
                    found.kind.describe()
                ),
            ));
        }
        Ok(Choreography {
            roles,
            imports,
            main,
        })
    }

    fn preamble(&mut self) -> Result<Vec<RoleDecl>, Diagnostic> {
        let mut roles = Vec::new();
        let mut any = false;

        if self.at_word("stateful") {
            self.bump();
            self.expect(TokenKind::Colon, "after `stateful`")?;
            loop {
                let (name, span) = self.ident("role name")?;
                roles.push(RoleDecl {
                    name,
                    kind: RoleKind::Stateful,
                    span,
                });
                if !self.at_kind(&TokenKind::Comma) {
                    break;
                }
                self.bump();
            }
            any = true;
        }

        if self.at_word("stateless") {
            self.bump();
            self.expect(TokenKind::Colon, "after `stateless`")?;
            loop {
                let (name, span) = self.ident("function name")?;
                self.expect(TokenKind::LBrace, "after function name")?;
                let mut media = Vec::new();
                loop {
                    let (medium, _) = self.ident("medium name")?;
                    let endpoint = if self.at_kind(&TokenKind::Colon) {
                        self.bump();
                        match self.bump() {
                            Token {
                                kind: TokenKind::Str(s),
                                ..
                            } => Some(s),
                            t => {
                                return Err(self.err(
                                    t.span,
                                    format!(
                                        "expected endpoint string after `:`, found {}",
                                        t.kind.describe()
                                    ),
                                ))
                            }
                        }
                    } else {
                        None
                    };
                    media.push(MediumDecl {
                        name: medium,
                        endpoint,
                    });
                    if !self.at_kind(&TokenKind::Comma) {
                        break;
                    }
                    self.bump();
                }
                self.expect(TokenKind::RBrace, "after media list")?;
                roles.push(RoleDecl {
                    name,
                    kind: RoleKind::Stateless { media },
                    span,
                });
                if !self.at_kind(&TokenKind::Comma) {
                    break;
                }
                self.bump();
            }
            any = true;
        }

        if self.at_word("services") {
            self.bump();
            self.expect(TokenKind::Colon, "after `services`")?;
            loop {
                let (name, span) = self.ident("service name")?;
                self.expect(TokenKind::LBrace, "after service name")?;
                let mut operations = Vec::new();
                loop {
                    let (op, _) = self.ident("operation name")?;
                    operations.push(op);
                    if !self.at_kind(&TokenKind::Comma) {
                        break;
                    }
                    self.bump();
                }
                self.expect(TokenKind::RBrace, "after operation list")?;
                roles.push(RoleDecl {
                    name,
                    kind: RoleKind::Service { operations },
                    span,
                });
                if !self.at_kind(&TokenKind::Comma) {
                    break;
                }
                self.bump();
            }
            any = true;
        }

        if let TokenKind::Ident(w) = &self.peek().kind {
            if SECTIONS.contains(&w.as_str()) {
                let span = self.peek().span;
                return Err(self.err(
                    span,
                    format!("duplicate or out-of-order `{w}` section"),
                ));
            }
        }
        if !any {
            let span = self.peek().span;
            return Err(self.err(span, "missing preamble"));
        }
        Ok(roles)
    }

    fn import(&mut self) -> Result<Import, Diagnostic> {
        let kw = self.keyword("import")?;
        let (module, _) = self.ident("module name")?;
        self.expect(TokenKind::DoubleColon, "after module name")?;
        let (operation, _) = self.ident("operation name")?;
        self.keyword("as")?;
        let (alias, _) = self.ident("alias")?;
        self.expect(TokenKind::At, "after alias")?;
        let (target, _) = self.ident("role name")?;
        Ok(Import {
            module,
            operation,
            alias,
            target,
            span: kw.span,
        })
    }

    fn main_def(&mut self) -> Result<MainDef, Diagnostic> {
        self.keyword("def")?;
        let (name, span) = self.ident("entry point name")?;
        if name != "main" {
            return Err(self.err(span, format!("entry point must be named `main`, found `{name}`")));
        }
        self.expect(TokenKind::LParen, "after `main`")?;
        let mut params = Vec::new();
        if !self.at_kind(&TokenKind::RParen) {
            loop {
                params.push(self.param()?);
                if !self.at_kind(&TokenKind::Comma) {
                    break;
                }
                self.bump();
            }
        }
        self.expect(TokenKind::RParen, "after parameter list")?;
        let body = self.body(&["end"])?;
        self.keyword("end")?;
        Ok(MainDef { params, body })
    }

    fn param(&mut self) -> Result<Param, Diagnostic> {
        let (name, span) = self.ident("parameter name")?;
        self.expect(TokenKind::At, "after parameter name")?;
        let (role, _) = self.ident("role name")?;
        Ok(Param { name, role, span })
    }

    // -- statements ---------------------------------------------------------

    fn body(&mut self, terminators: &[&str]) -> Result<Vec<Stmt>, Diagnostic> {
        let mut stmts = Vec::new();
        loop {
            if terminators.iter().any(|t| self.at_word(t)) {
                return Ok(stmts);
            }
            if self.at_kind(&TokenKind::Eof) {
                let span = self.peek().span;
                return Err(self.err(span, "unexpected end of input, expected `end`"));
            }
            stmts.push(self.stmt()?);
        }
    }

    fn stmt(&mut self) -> Result<Stmt, Diagnostic> {
        if self.at_word("for") {
            let kw = self.bump();
            let var = self.param()?;
            self.keyword("in")?;
            let iterable = self.expr()?;
            self.keyword("do")?;
            let body = self.body(&["end"])?;
            self.keyword("end")?;
            return Ok(Stmt::ForEach(ForEach {
                var,
                iterable,
                body,
                span: kw.span,
            }));
        }

        if self.at_word("if") {
            let kw = self.bump();
            let guard = self.expr()?;
            self.keyword("then")?;
            let then_body = self.body(&["else", "end"])?;
            let else_body = if self.at_word("else") {
                self.bump();
                Some(self.body(&["end"])?)
            } else {
                None
            };
            self.keyword("end")?;
            return Ok(Stmt::If(IfStmt {
                guard,
                then_body,
                else_body,
                span: kw.span,
            }));
        }

        let head = self.expr()?;

        if self.at_kind(&TokenKind::LArrow) {
            self.bump();
            let (medium, medium_span) = self.ident("medium name")?;
            self.expect(TokenKind::RArrow, "after medium name")?;
            let (target, _) = self.ident("function name")?;
            self.keyword("do")?;
            let bind = if self.at_kind(&TokenKind::Pipe) {
                self.bump();
                let p = self.param()?;
                self.expect(TokenKind::Pipe, "after binder")?;
                Some(p)
            } else {
                None
            };
            let body = self.body(&["end"])?;
            self.keyword("end")?;
            let with_expr = if self.at_word("with") {
                self.bump();
                Some(self.expr()?)
            } else {
                None
            };
            return Ok(Stmt::RRTrigger(RRTrigger {
                payload: head,
                medium,
                target,
                bind,
                body,
                with_expr,
                span: medium_span,
            }));
        }

        let head = if self.at_kind(&TokenKind::SvcArrow) {
            self.bump();
            let (service, svc_span) = self.ident("service name")?;
            self.expect(TokenKind::Colon, "after service name")?;
            let (operation, _) = self.ident("operation name")?;
            Expr::ServiceRR {
                arg: Box::new(head),
                service,
                operation,
                span: svc_span,
            }
        } else {
            head
        };

        let mut steps = Vec::new();
        while self.at_kind(&TokenKind::Forward) {
            self.bump();
            steps.push(self.chain_step()?);
        }
        Ok(Stmt::Chain(Chain { head, steps }))
    }

    fn chain_step(&mut self) -> Result<ChainStep, Diagnostic> {
        if self.at_kind(&TokenKind::Dash) {
            self.bump();
            let (medium, span) = self.ident("medium name")?;
            self.expect(TokenKind::RArrow, "after medium name")?;
            let (target, _) = self.ident("function name")?;
            return Ok(ChainStep::OneWayTrigger {
                medium,
                target,
                span,
            });
        }
        if self.at_kind(&TokenKind::RArrow) {
            self.bump();
            let (service, span) = self.ident("service name")?;
            self.expect(TokenKind::Colon, "after service name")?;
            let (operation, _) = self.ident("operation name")?;
            return Ok(ChainStep::OneWayService {
                service,
                operation,
                span,
            });
        }
        if matches!(&self.peek().kind, TokenKind::Ident(w) if !is_reserved(w)) {
            let (name, span) = self.ident("name")?;
            if self.at_kind(&TokenKind::At) {
                self.bump();
                let (role, _) = self.ident("role name")?;
                return Ok(ChainStep::BindVar { name, role, span });
            }
            return Ok(ChainStep::LocalCall { alias: name, span });
        }
        let found = self.peek();
        Err(self.err(
            found.span,
            format!("expected chain step after `|>`, found {}", found.kind.describe()),
        ))
    }

    // -- expressions --------------------------------------------------------

    fn expr(&mut self) -> Result<Expr, Diagnostic> {
        let mut e = self.primary()?;
        while self.at_kind(&TokenKind::Dot) {
            self.bump();
            let (label, span) = self.ident("field label")?;
            e = Expr::Field {
                base: Box::new(e),
                label,
                span,
            };
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr, Diagnostic> {
        match &self.peek().kind {
            TokenKind::Str(_) | TokenKind::Num(_) => {
                let t = self.bump();
                let value = match t.kind {
                    TokenKind::Str(s) => Literal::Str(s),
                    TokenKind::Num(n) => Literal::Num(n),
                    _ => unreachable!(),
                };
                self.expect(TokenKind::At, "after literal")?;
                let (role, _) = self.ident("role name")?;
                Ok(Expr::Literal {
                    value,
                    role,
                    span: t.span,
                })
            }
            TokenKind::Ident(w) if !is_reserved(w) => {
                let (name, span) = self.ident("name")?;
                if self.at_kind(&TokenKind::LParen) {
                    self.bump();
                    if self.at_kind(&TokenKind::RParen) {
                        let rp = self.peek().span;
                        return Err(self.err(
                            rp,
                            format!("call to `{name}` needs at least one argument"),
                        ));
                    }
                    let mut args = Vec::new();
                    loop {
                        args.push(self.expr()?);
                        if !self.at_kind(&TokenKind::Comma) {
                            break;
                        }
                        self.bump();
                    }
                    self.expect(TokenKind::RParen, "after arguments")?;
                    return Ok(Expr::Call {
                        alias: name,
                        args,
                        span,
                    });
                }
                self.expect(TokenKind::At, "after variable name")?;
                let (role, _) = self.ident("role name")?;
                Ok(Expr::Var { name, role, span })
            }
            other => {
                let span = self.peek().span;
                let found = other.describe();
                Err(self.err(span, format!("expected expression, found {found}")))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRAINING: &str = include_str!("../../../testdata/training.chor");

    fn parse_ok(src: &str) -> Choreography {
        match parse(src) {
            Ok(c) => c,
            Err(d) => panic!("parse failed: {}", d.render()),
        }
    }

    #[test]
    fn training_example_structure() {
        let c = parse_ok(TRAINING);

        assert_eq!(c.stateful_names(), ["user"]);
        assert_eq!(c.stateless_names(), ["f", "g", "h"]);
        assert_eq!(c.service_names(), ["DB1", "DB2", "DB3"]);
        assert_eq!(c.endpoint_of("g", "SNS"), Some("aws:sns"));
        assert_eq!(c.endpoint_of("f", "Gateway"), None);

        assert_eq!(c.imports.len(), 3);
        let fit = c.find_import("fit", "g").unwrap();
        assert_eq!((fit.module.as_str(), fit.operation.as_str()), ("Model", "fit"));
        assert!(c.find_import("fit", "h").is_none());

        assert_eq!(c.main.params.len(), 1);
        assert_eq!(c.main.params[0].name, "queries");
        assert_eq!(c.main.params[0].role, "user");

        let [Stmt::RRTrigger(t)] = &c.main.body[..] else {
            panic!("main body should be a single trigger");
        };
        assert_eq!(t.medium, "Gateway");
        assert_eq!(t.target, "f");
        assert_eq!(t.bind.as_ref().map(|b| (b.name.as_str(), b.role.as_str())), Some(("queries", "f")));
        assert!(matches!(
            t.with_expr,
            Some(Expr::Literal { value: Literal::Str(_), .. })
        ));
        assert_eq!(t.body.len(), 3);

        let Stmt::Chain(labels) = &t.body[0] else {
            panic!("expected a chain")
        };
        assert!(matches!(
            &labels.head,
            Expr::ServiceRR { service, operation, arg, .. }
                if service == "DB1" && operation == "getData"
                    && matches!(&**arg, Expr::Field { label, .. } if label == "labels")
        ));
        assert!(matches!(
            &labels.steps[..],
            [ChainStep::BindVar { name, role, .. }] if name == "labels" && role == "f"
        ));

        let Stmt::ForEach(fe) = &t.body[2] else {
            panic!("expected a loop")
        };
        assert_eq!(fe.var.name, "pair");
        assert!(matches!(&fe.iterable, Expr::Call { alias, args, .. } if alias == "zip" && args.len() == 2));
        let [Stmt::Chain(chain)] = &fe.body[..] else {
            panic!("loop body should be a single chain");
        };
        let shape: Vec<String> = chain.steps.iter().map(|s| s.to_string()).collect();
        assert_eq!(
            shape,
            ["-SNS-> g", "fit", "-SNS-> h", "int", "-> DB3: storeData"]
        );
    }

    #[test]
    fn empty_input_reports_missing_preamble_at_origin() {
        let err = parse("").unwrap_err();
        assert_eq!(err.code, DiagnosticCode::Syntax);
        assert_eq!((err.line, err.col), (1, 1));
        assert_eq!(err.message, "missing preamble");
    }

    #[test]
    fn forward_operator_spellings_parse_identically() {
        let ascii = TRAINING.to_string();
        let arrow = TRAINING.replace("|>", "▶");
        assert_ne!(ascii, arrow);
        let a = parse_ok(&ascii);
        let b = parse_ok(&arrow);
        assert_eq!(a, b);
        assert_eq!(a.to_string(), b.to_string());
    }

    #[test]
    fn crlf_and_comments_do_not_change_the_tree() {
        let crlf = TRAINING.replace('\n', "\r\n");
        let commented = TRAINING.replace(
            "def main( queries@user )",
            "# entry\ndef main( queries@user ) # params\n",
        );
        assert_eq!(parse_ok(&crlf), parse_ok(TRAINING));
        assert_eq!(parse_ok(&commented), parse_ok(TRAINING));
    }

    #[test]
    fn pretty_print_round_trips() {
        let c = parse_ok(TRAINING);
        let printed = c.to_string();
        let reparsed = parse_ok(&printed);
        assert_eq!(reparsed, c);
        assert_eq!(reparsed.to_string(), printed);
    }

    #[test]
    fn unterminated_body_reports_missing_end() {
        let src = "stateful: user\ndef main( x@user )\n  x@user <-G-> f do\n";
        let err = parse(src).unwrap_err();
        assert_eq!(err.code, DiagnosticCode::Syntax);
        assert!(err.message.contains("`end`"), "{}", err.message);
    }

    #[test]
    fn reserved_words_are_not_names() {
        let err = parse("stateful: end\ndef main() end").unwrap_err();
        assert!(err.message.contains("reserved word `end`"), "{}", err.message);

        let err = parse("stateful: u\ndef main( for@u ) end").unwrap_err();
        assert_eq!(err.code, DiagnosticCode::Syntax);
    }

    #[test]
    fn zero_argument_calls_are_rejected() {
        let src = "stateful: u\nimport M::f as f@u\ndef main( x@u )\n  f()\nend";
        let err = parse(src).unwrap_err();
        assert!(err.message.contains("at least one argument"), "{}", err.message);
    }

    #[test]
    fn duplicate_section_is_rejected() {
        let err = parse("stateful: a stateful: b\ndef main() end").unwrap_err();
        assert!(err.message.contains("out-of-order"), "{}", err.message);
        let err = parse("services: S{ op } stateless: f{ G }\ndef main() end").unwrap_err();
        assert!(err.message.contains("`stateless`"), "{}", err.message);
    }

    #[test]
    fn empty_main_and_empty_params_parse() {
        let c = parse_ok("stateless: f{ G }\ndef main()\nend");
        assert!(c.main.params.is_empty());
        assert!(c.main.body.is_empty());
        assert_eq!(parse_ok(&c.to_string()), c);
    }

    #[test]
    fn conditional_statement_parses() {
        let src = "stateful: u\nstateless: f{ G }, g{ S }, h{ S }\ndef main( d@u )\n  d@u <-G-> f do | x@f |\n    if x@f then\n      x@f |> -S-> g\n    else\n      x@f |> -S-> h\n    end\n  end\nend";
        let c = parse_ok(src);
        let [Stmt::RRTrigger(t)] = &c.main.body[..] else {
            panic!()
        };
        let [Stmt::If(i)] = &t.body[..] else { panic!() };
        assert_eq!(i.then_body.len(), 1);
        assert_eq!(i.else_body.as_ref().map(|b| b.len()), Some(1));
        assert_eq!(parse_ok(&c.to_string()), c);
    }

    #[test]
    fn trailing_tokens_after_main_are_rejected() {
        let err = parse("stateful: u\ndef main() end end").unwrap_err();
        assert!(err.message.contains("end of input"), "{}", err.message);
    }

    #[test]
    fn bare_expression_is_a_chain_without_steps() {
        let c = parse_ok("stateful: u\ndef main( x@u )\n  x@u\nend");
        let [Stmt::Chain(chain)] = &c.main.body[..] else {
            panic!()
        };
        assert!(chain.steps.is_empty());
    }
}
