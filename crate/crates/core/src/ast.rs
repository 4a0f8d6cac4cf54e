//! Abstract syntax of choreographies.
//!
//! A choreography is a preamble of role declarations and imports followed by
//! a single `main` definition whose body is a statement tree. Every variable
//! and literal leaf is annotated with the role that owns it.

use std::fmt;

use crate::diag::Span;

/// Kind of a declared participant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RoleKind {
    /// Long-running process; may initiate interactions at any point.
    Stateful,
    /// Function instantiated on demand through one of its media.
    Stateless { media: Vec<MediumDecl> },
    /// Passive entity exposing named request-response operations.
    Service { operations: Vec<String> },
}

/// A medium through which a stateless function can be triggered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MediumDecl {
    pub name: String,
    pub endpoint: Option<String>,
}

/// One entry of the preamble.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleDecl {
    pub name: String,
    pub kind: RoleKind,
    pub span: Span,
}

impl RoleDecl {
    pub fn is_stateful(&self) -> bool {
        matches!(self.kind, RoleKind::Stateful)
    }
    pub fn is_stateless(&self) -> bool {
        matches!(self.kind, RoleKind::Stateless { .. })
    }
    pub fn is_service(&self) -> bool {
        matches!(self.kind, RoleKind::Service { .. })
    }
}

/// `import Module::operation as alias@target`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Import {
    pub module: String,
    pub operation: String,
    pub alias: String,
    pub target: String,
    pub span: Span,
}

/// A literal payload value. Numbers keep their source lexeme so that
/// re-emission is exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Literal {
    Str(String),
    Num(String),
}

/// An expression; every leaf carries the role where the data lives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Var {
        name: String,
        role: String,
        span: Span,
    },
    Literal {
        value: Literal,
        role: String,
        span: Span,
    },
    Field {
        base: Box<Expr>,
        label: String,
        span: Span,
    },
    Call {
        alias: String,
        args: Vec<Expr>,
        span: Span,
    },
    /// Request-response to a service: `arg <-> Service: operation`.
    /// Only valid as a statement or chain head.
    ServiceRR {
        arg: Box<Expr>,
        service: String,
        operation: String,
        span: Span,
    },
}

impl Expr {
    pub fn span(&self) -> Span {
        match self {
            Expr::Var { span, .. }
            | Expr::Literal { span, .. }
            | Expr::Field { span, .. }
            | Expr::Call { span, .. }
            | Expr::ServiceRR { span, .. } => *span,
        }
    }

    /// The role of the first leaf, if any. The checker separately verifies
    /// that all leaves agree.
    pub fn first_role(&self) -> Option<&str> {
        match self {
            Expr::Var { role, .. } | Expr::Literal { role, .. } => Some(role),
            Expr::Field { base, .. } => base.first_role(),
            Expr::Call { args, .. } => args.iter().find_map(|a| a.first_role()),
            Expr::ServiceRR { arg, .. } => arg.first_role(),
        }
    }

    /// All `(role, span)` leaf annotations, left to right.
    pub fn leaf_roles(&self) -> Vec<(&str, Span)> {
        let mut out = Vec::new();
        self.collect_leaf_roles(&mut out);
        out
    }

    fn collect_leaf_roles<'a>(&'a self, out: &mut Vec<(&'a str, Span)>) {
        match self {
            Expr::Var { role, span, .. } | Expr::Literal { role, span, .. } => {
                out.push((role, *span))
            }
            Expr::Field { base, .. } => base.collect_leaf_roles(out),
            Expr::Call { args, .. } => {
                for a in args {
                    a.collect_leaf_roles(out);
                }
            }
            Expr::ServiceRR { arg, .. } => arg.collect_leaf_roles(out),
        }
    }
}

/// A name bound at a role, as in `queries@user`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub role: String,
    pub span: Span,
}

/// One step of a forward chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChainStep {
    /// `|> name@role`: bind the current value.
    BindVar { name: String, role: String, span: Span },
    /// `|> alias`: apply an imported unary operation.
    LocalCall { alias: String, span: Span },
    /// `|> -MEDIUM-> fn`: trigger a function with the current value;
    /// the chain continues inside the new instance.
    OneWayTrigger { medium: String, target: String, span: Span },
    /// `|> -> Service: op`: fire-and-forget service request.
    OneWayService { service: String, operation: String, span: Span },
}

impl ChainStep {
    pub fn span(&self) -> Span {
        match self {
            ChainStep::BindVar { span, .. }
            | ChainStep::LocalCall { span, .. }
            | ChainStep::OneWayTrigger { span, .. }
            | ChainStep::OneWayService { span, .. } => *span,
        }
    }
}

/// A head expression threaded through forward steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    pub head: Expr,
    pub steps: Vec<ChainStep>,
}

/// `payload <-MEDIUM-> fn do |bind| body end with expr`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RRTrigger {
    pub payload: Expr,
    pub medium: String,
    pub target: String,
    pub bind: Option<Param>,
    pub body: Vec<Stmt>,
    pub with_expr: Option<Expr>,
    pub span: Span,
}

/// `for var@role in iterable do body end`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForEach {
    pub var: Param,
    pub iterable: Expr,
    pub body: Vec<Stmt>,
    pub span: Span,
}

/// `if guard then ... [else ...] end`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IfStmt {
    pub guard: Expr,
    pub then_body: Vec<Stmt>,
    pub else_body: Option<Vec<Stmt>>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    RRTrigger(RRTrigger),
    Chain(Chain),
    ForEach(ForEach),
    If(IfStmt),
}

/// The `def main(...)` entry point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MainDef {
    pub params: Vec<Param>,
    pub body: Vec<Stmt>,
}

/// A parsed choreography.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Choreography {
    pub roles: Vec<RoleDecl>,
    pub imports: Vec<Import>,
    pub main: MainDef,
}

impl Choreography {
    pub fn role(&self, name: &str) -> Option<&RoleDecl> {
        self.roles.iter().find(|r| r.name == name)
    }

    /// Stateless function names in declaration order.
    pub fn stateless_names(&self) -> Vec<String> {
        self.roles
            .iter()
            .filter(|r| r.is_stateless())
            .map(|r| r.name.clone())
            .collect()
    }

    pub fn stateful_names(&self) -> Vec<String> {
        self.roles
            .iter()
            .filter(|r| r.is_stateful())
            .map(|r| r.name.clone())
            .collect()
    }

    pub fn service_names(&self) -> Vec<String> {
        self.roles
            .iter()
            .filter(|r| r.is_service())
            .map(|r| r.name.clone())
            .collect()
    }

    /// Media declared by a stateless function.
    pub fn media_of(&self, name: &str) -> &[MediumDecl] {
        match self.role(name).map(|r| &r.kind) {
            Some(RoleKind::Stateless { media }) => media,
            _ => &[],
        }
    }

    /// Endpoint annotation of `medium` as declared by `name`, when present.
    pub fn endpoint_of(&self, name: &str, medium: &str) -> Option<&str> {
        self.media_of(name)
            .iter()
            .find(|m| m.name == medium)
            .and_then(|m| m.endpoint.as_deref())
    }

    pub fn imports_for(&self, role: &str) -> impl Iterator<Item = &Import> {
        let role = role.to_owned();
        self.imports.iter().filter(move |i| i.target == role)
    }

    pub fn find_import(&self, alias: &str, role: &str) -> Option<&Import> {
        self.imports
            .iter()
            .find(|i| i.alias == alias && i.target == role)
    }
}

// ---------------------------------------------------------------------------
// Canonical re-emission. `parse(format!("{chor}"))` yields an equal tree.
// ---------------------------------------------------------------------------

fn escape_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            _ => out.push(c),
        }
    }
    out
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Str(s) => write!(f, "\"{}\"", escape_str(s)),
            Literal::Num(n) => f.write_str(n),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var { name, role, .. } => write!(f, "{name}@{role}"),
            Expr::Literal { value, role, .. } => write!(f, "{value}@{role}"),
            Expr::Field { base, label, .. } => write!(f, "{base}.{label}"),
            Expr::Call { alias, args, .. } => {
                write!(f, "{alias}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Expr::ServiceRR {
                arg,
                service,
                operation,
                ..
            } => write!(f, "{arg} <-> {service}: {operation}"),
        }
    }
}

impl fmt::Display for ChainStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChainStep::BindVar { name, role, .. } => write!(f, "{name}@{role}"),
            ChainStep::LocalCall { alias, .. } => f.write_str(alias),
            ChainStep::OneWayTrigger { medium, target, .. } => write!(f, "-{medium}-> {target}"),
            ChainStep::OneWayService {
                service, operation, ..
            } => write!(f, "-> {service}: {operation}"),
        }
    }
}

fn write_body(f: &mut fmt::Formatter<'_>, body: &[Stmt], indent: usize) -> fmt::Result {
    for stmt in body {
        write_stmt(f, stmt, indent)?;
    }
    Ok(())
}

fn write_stmt(f: &mut fmt::Formatter<'_>, stmt: &Stmt, indent: usize) -> fmt::Result {
    let pad = "  ".repeat(indent);
    match stmt {
        Stmt::Chain(c) => {
            write!(f, "{pad}{}", c.head)?;
            for step in &c.steps {
                write!(f, " |> {step}")?;
            }
            writeln!(f)
        }
        Stmt::RRTrigger(t) => {
            write!(f, "{pad}{} <-{}-> {} do", t.payload, t.medium, t.target)?;
            if let Some(bind) = &t.bind {
                write!(f, " | {}@{} |", bind.name, bind.role)?;
            }
            writeln!(f)?;
            write_body(f, &t.body, indent + 1)?;
            match &t.with_expr {
                Some(w) => writeln!(f, "{pad}end with {w}"),
                None => writeln!(f, "{pad}end"),
            }
        }
        Stmt::ForEach(fe) => {
            writeln!(
                f,
                "{pad}for {}@{} in {} do",
                fe.var.name, fe.var.role, fe.iterable
            )?;
            write_body(f, &fe.body, indent + 1)?;
            writeln!(f, "{pad}end")
        }
        Stmt::If(i) => {
            writeln!(f, "{pad}if {} then", i.guard)?;
            write_body(f, &i.then_body, indent + 1)?;
            if let Some(else_body) = &i.else_body {
                writeln!(f, "{pad}else")?;
                write_body(f, else_body, indent + 1)?;
            }
            writeln!(f, "{pad}end")
        }
    }
}

impl fmt::Display for Choreography {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.roles.iter().any(|r| r.is_stateful()) {
            f.write_str("stateful:")?;
            let mut first = true;
            for r in self.roles.iter().filter(|r| r.is_stateful()) {
                f.write_str(if first { " " } else { ", " })?;
                f.write_str(&r.name)?;
                first = false;
            }
            writeln!(f)?;
        }

        if self.roles.iter().any(|r| r.is_stateless()) {
            f.write_str("stateless:")?;
            let mut first = true;
            for r in &self.roles {
                if let RoleKind::Stateless { media } = &r.kind {
                    f.write_str(if first { " " } else { ", " })?;
                    write!(f, "{}{{ ", r.name)?;
                    for (i, m) in media.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        match &m.endpoint {
                            Some(ep) => write!(f, "{}:\"{}\"", m.name, escape_str(ep))?,
                            None => f.write_str(&m.name)?,
                        }
                    }
                    f.write_str(" }")?;
                    first = false;
                }
            }
            writeln!(f)?;
        }

        if self.roles.iter().any(|r| r.is_service()) {
            f.write_str("services:")?;
            let mut first = true;
            for r in &self.roles {
                if let RoleKind::Service { operations } = &r.kind {
                    f.write_str(if first { " " } else { ", " })?;
                    write!(f, "{}{{ {} }}", r.name, operations.join(", "))?;
                    first = false;
                }
            }
            writeln!(f)?;
        }

        for i in &self.imports {
            writeln!(
                f,
                "import {}::{} as {}@{}",
                i.module, i.operation, i.alias, i.target
            )?;
        }

        if self.main.params.is_empty() {
            writeln!(f, "def main()")?;
        } else {
            let params: Vec<String> = self
                .main
                .params
                .iter()
                .map(|p| format!("{}@{}", p.name, p.role))
                .collect();
            writeln!(f, "def main( {} )", params.join(", "))?;
        }
        write_body(f, &self.main.body, 1)?;
        writeln!(f, "end")
    }
}
