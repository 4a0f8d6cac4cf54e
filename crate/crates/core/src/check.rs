//! Well-formedness checks over a parsed choreography.
//!
//! The checker verifies name resolution (roles, media, operations, import
//! aliases), data-locality agreement inside expressions and across chain
//! steps, the stateful-participant discipline (stateful roles interact only
//! at the top level), and knowledge of choice (a stateful role may not act
//! inside a branch or loop decided by somebody else).
//!
//! All diagnostics are collected; nothing aborts early. The result is
//! sorted by source position and deduplicated.

use crate::ast::*;
use crate::diag::{normalize, Diagnostic, DiagnosticCode, Span};

/// The role at which each step of a chain executes, given the location of
/// the chain head. A one-way trigger moves execution into the target
/// function; every other step stays where the previous one ran.
pub fn chain_locations<'a>(chain: &'a Chain, start: &str) -> Vec<(&'a ChainStep, String)> {
    let mut loc = start.to_string();
    chain
        .steps
        .iter()
        .map(|step| {
            if let ChainStep::OneWayTrigger { target, .. } = step {
                loc = target.clone();
            }
            (step, loc.clone())
        })
        .collect()
}

/// Check a choreography and return its diagnostics, sorted by position.
/// An empty result means the choreography is projectable.
pub fn check(chor: &Choreography) -> Vec<Diagnostic> {
    let mut checker = Checker {
        chor,
        diags: Vec::new(),
        choice_owners: Vec::new(),
        trigger_depth: 0,
    };
    checker.preamble();
    checker.imports();
    checker.main();
    normalize(checker.diags)
}

struct Checker<'a> {
    chor: &'a Choreography,
    diags: Vec<Diagnostic>,
    /// Roles owning the enclosing branch guards and loop collections.
    choice_owners: Vec<String>,
    /// How many trigger bodies enclose the current statement.
    trigger_depth: u32,
}

impl<'a> Checker<'a> {
    fn report(&mut self, code: DiagnosticCode, span: Span, message: impl Into<String>) {
        self.diags.push(Diagnostic::new(code, span, message));
    }

    // -- declarations ---------------------------------------------------

    fn preamble(&mut self) {
        let mut seen: Vec<&str> = Vec::new();
        for role in &self.chor.roles {
            if seen.contains(&role.name.as_str()) {
                self.report(
                    DiagnosticCode::DuplicateName,
                    role.span,
                    format!("role `{}` is declared more than once", role.name),
                );
            }
            seen.push(&role.name);

            match &role.kind {
                RoleKind::Stateless { media } => {
                    let mut names: Vec<&str> = Vec::new();
                    for m in media {
                        if names.contains(&m.name.as_str()) {
                            self.report(
                                DiagnosticCode::DuplicateName,
                                role.span,
                                format!(
                                    "function `{}` declares medium `{}` twice",
                                    role.name, m.name
                                ),
                            );
                        }
                        names.push(&m.name);
                    }
                }
                RoleKind::Service { operations } => {
                    let mut names: Vec<&str> = Vec::new();
                    for op in operations {
                        if names.contains(&op.as_str()) {
                            self.report(
                                DiagnosticCode::DuplicateName,
                                role.span,
                                format!(
                                    "service `{}` declares operation `{}` twice",
                                    role.name, op
                                ),
                            );
                        }
                        names.push(op);
                    }
                }
                RoleKind::Stateful => {}
            }
        }
    }

    fn imports(&mut self) {
        let mut seen: Vec<(&str, &str)> = Vec::new();
        for import in &self.chor.imports {
            match self.chor.role(&import.target) {
                None => self.report(
                    DiagnosticCode::UndeclaredRole,
                    import.span,
                    format!("unknown role `{}` in import", import.target),
                ),
                Some(decl) if !decl.is_stateless() => self.report(
                    DiagnosticCode::ImportScope,
                    import.span,
                    format!(
                        "import target `{}` is not a stateless function",
                        import.target
                    ),
                ),
                Some(_) => {}
            }
            let key = (import.alias.as_str(), import.target.as_str());
            if seen.contains(&key) {
                self.report(
                    DiagnosticCode::DuplicateName,
                    import.span,
                    format!(
                        "alias `{}` is already imported at `{}`",
                        import.alias, import.target
                    ),
                );
            }
            seen.push(key);
        }
    }

    fn main(&mut self) {
        let mut seen: Vec<&str> = Vec::new();
        for param in &self.chor.main.params {
            if seen.contains(&param.name.as_str()) {
                self.report(
                    DiagnosticCode::DuplicateName,
                    param.span,
                    format!("parameter `{}` is declared twice", param.name),
                );
            }
            seen.push(&param.name);
        }
        let params: Vec<(String, Span)> = self
            .chor
            .main
            .params
            .iter()
            .map(|p| (p.role.clone(), p.span))
            .collect();
        for (role, span) in params {
            self.data_occurrence(&role, span);
        }
        let body = &self.chor.main.body;
        self.body(body);
    }

    // -- role occurrences -------------------------------------------------

    /// Check one occurrence of a role owning data (a leaf annotation or a
    /// binder). Returns true when a diagnostic was reported, so callers
    /// skip checks that would only add noise.
    fn data_occurrence(&mut self, role: &str, span: Span) -> bool {
        match self.chor.role(role) {
            None => {
                self.report(
                    DiagnosticCode::UndeclaredRole,
                    span,
                    format!("unknown role `{role}`"),
                );
                true
            }
            Some(decl) if decl.is_service() => {
                self.report(
                    DiagnosticCode::UndeclaredRole,
                    span,
                    format!("`{role}` is a service and cannot hold data"),
                );
                true
            }
            Some(decl) if decl.is_stateful() => self.stateful_occurrence(role, span),
            Some(_) => false,
        }
    }

    /// A stateful role showing up below the top level: first a violation of
    /// knowledge of choice, otherwise of the trigger-once discipline.
    fn stateful_occurrence(&mut self, role: &str, span: Span) -> bool {
        if let Some(owner) = self.choice_owners.iter().find(|o| o.as_str() != role) {
            let owner = owner.clone();
            self.report(
                DiagnosticCode::KnowledgeOfChoice,
                span,
                format!("stateful role `{role}` cannot observe the choice made by `{owner}`"),
            );
            return true;
        }
        if self.trigger_depth > 0 {
            self.report(
                DiagnosticCode::StatefulInBody,
                span,
                format!("stateful role `{role}` cannot take part inside a function body"),
            );
            return true;
        }
        false
    }

    /// Check the target and medium of a trigger. Returns true when a
    /// diagnostic was reported.
    fn trigger_target(&mut self, medium: &str, target: &str, span: Span) -> bool {
        match self.chor.role(target) {
            None => {
                self.report(
                    DiagnosticCode::UndeclaredRole,
                    span,
                    format!("unknown function `{target}`"),
                );
                true
            }
            Some(decl) if decl.is_service() => {
                self.report(
                    DiagnosticCode::UndeclaredRole,
                    span,
                    format!("`{target}` is a service, not a stateless function"),
                );
                true
            }
            Some(decl) if decl.is_stateful() => {
                if !self.stateful_occurrence(target, span) {
                    self.report(
                        DiagnosticCode::StatefulInBody,
                        span,
                        format!("cannot trigger stateful role `{target}`"),
                    );
                }
                true
            }
            Some(_) => {
                if !self.chor.media_of(target).iter().any(|m| m.name == medium) {
                    self.report(
                        DiagnosticCode::UndeclaredMedium,
                        span,
                        format!("function `{target}` does not declare medium `{medium}`"),
                    );
                    true
                } else {
                    false
                }
            }
        }
    }

    fn service_op(&mut self, service: &str, operation: &str, span: Span) {
        match self.chor.role(service) {
            None => self.report(
                DiagnosticCode::UndeclaredRole,
                span,
                format!("unknown service `{service}`"),
            ),
            Some(RoleDecl {
                kind: RoleKind::Service { operations },
                ..
            }) => {
                if !operations.iter().any(|op| op == operation) {
                    self.report(
                        DiagnosticCode::UndeclaredOperation,
                        span,
                        format!("service `{service}` has no operation `{operation}`"),
                    );
                }
            }
            Some(_) => self.report(
                DiagnosticCode::UndeclaredRole,
                span,
                format!("`{service}` is not a service"),
            ),
        }
    }

    // -- expressions ------------------------------------------------------

    /// Check a whole statement-level expression: every leaf occurrence,
    /// agreement of all leaves on one location, import scope of calls, and
    /// service operations. Returns the expression's location when one
    /// could be established.
    fn top_expr(&mut self, e: &Expr) -> Option<String> {
        let mut expected: Option<String> = None;
        self.expr(e, &mut expected);
        expected
    }

    fn expr(&mut self, e: &Expr, expected: &mut Option<String>) {
        match e {
            Expr::Var { role, span, .. } | Expr::Literal { role, span, .. } => {
                let reported = self.data_occurrence(role, *span);
                if reported {
                    return;
                }
                match expected {
                    None => *expected = Some(role.clone()),
                    Some(exp) if exp != role => {
                        let exp = exp.clone();
                        self.report(
                            DiagnosticCode::DataLocality,
                            *span,
                            format!("data at `{role}` mixed into an expression at `{exp}`"),
                        );
                    }
                    Some(_) => {}
                }
            }
            Expr::Field { base, .. } => self.expr(base, expected),
            Expr::Call { alias, args, span } => {
                for arg in args {
                    self.expr(arg, expected);
                }
                if let Some(loc) = e.first_role() {
                    if self.chor.role(loc).is_some()
                        && self.chor.find_import(alias, loc).is_none()
                    {
                        self.report(
                            DiagnosticCode::ImportScope,
                            *span,
                            format!("`{alias}` is not imported at `{loc}`"),
                        );
                    }
                }
            }
            Expr::ServiceRR {
                arg,
                service,
                operation,
                span,
            } => {
                self.expr(arg, expected);
                self.service_op(service, operation, *span);
            }
        }
    }

    // -- statements ---------------------------------------------------------

    fn body(&mut self, body: &[Stmt]) {
        for stmt in body {
            self.stmt(stmt);
        }
    }

    fn stmt(&mut self, stmt: &Stmt) {
        match stmt {
            Stmt::Chain(chain) => self.chain(chain),
            Stmt::RRTrigger(t) => self.rr_trigger(t),
            Stmt::ForEach(fe) => self.for_each(fe),
            Stmt::If(i) => self.if_stmt(i),
        }
    }

    fn chain(&mut self, chain: &Chain) {
        // None means the location is unknown because an earlier problem was
        // already reported; location-sensitive checks are then skipped.
        let mut loc = self.top_expr(&chain.head);
        for step in &chain.steps {
            match step {
                ChainStep::OneWayTrigger {
                    medium,
                    target,
                    span,
                } => {
                    let reported = self.trigger_target(medium, target, *span);
                    loc = if reported { None } else { Some(target.clone()) };
                }
                ChainStep::LocalCall { alias, span } => {
                    if let Some(l) = &loc {
                        if self.chor.find_import(alias, l).is_none() {
                            let l = l.clone();
                            self.report(
                                DiagnosticCode::ImportScope,
                                *span,
                                format!("`{alias}` is not imported at `{l}`"),
                            );
                        }
                    }
                }
                ChainStep::BindVar { name, role, span } => {
                    let reported = self.data_occurrence(role, *span);
                    if !reported {
                        if let Some(l) = &loc {
                            if l != role {
                                let l = l.clone();
                                self.report(
                                    DiagnosticCode::DataLocality,
                                    *span,
                                    format!("`{name}` binds at `{role}` but the value is at `{l}`"),
                                );
                            }
                        }
                    }
                }
                ChainStep::OneWayService {
                    service,
                    operation,
                    span,
                } => self.service_op(service, operation, *span),
            }
        }
    }

    fn rr_trigger(&mut self, t: &RRTrigger) {
        self.top_expr(&t.payload);
        let target_reported = self.trigger_target(&t.medium, &t.target, t.span);

        if let Some(bind) = &t.bind {
            let reported = self.data_occurrence(&bind.role, bind.span);
            if !reported && !target_reported && bind.role != t.target {
                self.report(
                    DiagnosticCode::DataLocality,
                    bind.span,
                    format!(
                        "binder `{}` is at `{}` but the function is `{}`",
                        bind.name, bind.role, t.target
                    ),
                );
            }
        }

        self.trigger_depth += 1;
        self.body(&t.body);
        self.trigger_depth -= 1;

        if let Some(with) = &t.with_expr {
            let loc = self.top_expr(with);
            if !target_reported {
                if let Some(l) = loc {
                    if l != t.target {
                        self.report(
                            DiagnosticCode::DataLocality,
                            with.span(),
                            format!("response is at `{l}` but must be at `{}`", t.target),
                        );
                    }
                }
            }
        }
    }

    fn for_each(&mut self, fe: &ForEach) {
        let loc = self.top_expr(&fe.iterable);
        let var_reported = self.data_occurrence(&fe.var.role, fe.var.span);
        if !var_reported {
            if let Some(l) = &loc {
                if *l != fe.var.role {
                    self.report(
                        DiagnosticCode::DataLocality,
                        fe.var.span,
                        format!(
                            "loop variable is at `{}` but the collection is at `{l}`",
                            fe.var.role
                        ),
                    );
                }
            }
        }
        let owner = loc.unwrap_or_else(|| fe.var.role.clone());
        self.choice_owners.push(owner);
        self.body(&fe.body);
        self.choice_owners.pop();
    }

    fn if_stmt(&mut self, i: &IfStmt) {
        let owner = self.top_expr(&i.guard);
        let pushed = owner.is_some();
        if let Some(owner) = owner {
            self.choice_owners.push(owner);
        }
        self.body(&i.then_body);
        if let Some(else_body) = &i.else_body {
            self.body(else_body);
        }
        if pushed {
            self.choice_owners.pop();
        }
    }
}
