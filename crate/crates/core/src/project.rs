//! Endpoint projection: one local code unit per active role.
//!
//! Services are passive and get no unit. Stateful participants keep their
//! statements as ordinary code; stateless functions receive the pieces of
//! the choreography that run inside them, starting from their trigger.
//! Chains are cut at one-way triggers: the prefix stays with the sender,
//! which ends in a `triggerFn` call, and the suffix becomes the body of the
//! target function with the received value as its parameter.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::ast::*;
use crate::check::{chain_locations, check};
use crate::diag::Diagnostic;

#[derive(Debug, Error)]
pub enum ProjectError {
    #[error("choreography has {} diagnostic(s); fix them before projecting", .0.len())]
    IllFormed(Vec<Diagnostic>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnitKind {
    Stateful,
    /// How the platform exposes the function: the medium it is triggered
    /// through and the endpoint senders address it by.
    Stateless { medium: String, endpoint: String },
}

/// The projected code of one role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalUnit {
    pub role: String,
    pub kind: UnitKind,
    pub params: Vec<String>,
    pub imports: Vec<Import>,
    pub body: Vec<LocalStmt>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CallMode {
    RR,
    OneWay,
}

/// Role-local expressions; role annotations are gone after projection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PExpr {
    Var(String),
    Str(String),
    Num(String),
    Field(Box<PExpr>, String),
    Call(String, Vec<PExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LocalStmt {
    ServiceCall {
        service: String,
        op: String,
        arg: PExpr,
        bind: Option<String>,
        mode: CallMode,
    },
    TriggerFn {
        target: String,
        endpoint: String,
        payload: PExpr,
        mode: CallMode,
    },
    LocalCall {
        alias: String,
        arg: PExpr,
        bind: Option<String>,
    },
    Assign {
        name: String,
        value: PExpr,
    },
    /// A computed value kept for its result position (e.g. a chain that
    /// ends in a pure call).
    Value(PExpr),
    ForEach {
        var: String,
        iterable: PExpr,
        body: Vec<LocalStmt>,
    },
    If {
        guard: PExpr,
        then_body: Vec<LocalStmt>,
        else_body: Option<Vec<LocalStmt>>,
    },
    /// The response of a request-response trigger; rendered as a `return`
    /// of a response record.
    Respond(PExpr),
    /// A stateful participant invoking a function through a medium.
    InvokeGateway {
        target: String,
        medium: String,
        payload: PExpr,
    },
}

/// Project a well-formed choreography into one unit per stateful
/// participant and per stateless function, keyed by role name.
pub fn project(chor: &Choreography) -> Result<BTreeMap<String, LocalUnit>, ProjectError> {
    let diags = check(chor);
    if !diags.is_empty() {
        return Err(ProjectError::IllFormed(diags));
    }

    let projector = Projector { chor };
    let mut units = BTreeMap::new();
    for role in &chor.roles {
        if role.is_service() {
            continue;
        }
        let unit = projector.unit(role);
        units.insert(role.name.clone(), unit);
    }
    Ok(units)
}

/// First trigger reaching `target`, in source order: the medium used and
/// the name the received payload is bound to.
fn first_trigger<'a>(body: &'a [Stmt], target: &str) -> Option<(&'a str, Option<&'a str>)> {
    for stmt in body {
        let found = match stmt {
            Stmt::RRTrigger(t) => {
                if t.target == target {
                    Some((
                        t.medium.as_str(),
                        t.bind.as_ref().map(|b| b.name.as_str()),
                    ))
                } else {
                    first_trigger(&t.body, target)
                }
            }
            Stmt::Chain(chain) => chain
                .steps
                .iter()
                .find_map(|s| match s {
                    ChainStep::OneWayTrigger { medium, target: t, .. } if t == target => {
                        Some((medium.as_str(), None))
                    }
                    _ => None,
                }),
            Stmt::ForEach(fe) => first_trigger(&fe.body, target),
            Stmt::If(i) => first_trigger(&i.then_body, target).or_else(|| {
                i.else_body
                    .as_deref()
                    .and_then(|b| first_trigger(b, target))
            }),
        };
        if found.is_some() {
            return found;
        }
    }
    None
}

struct Projector<'a> {
    chor: &'a Choreography,
}

/// The value flowing through a chain at one role: either an expression or
/// the result of the statement just emitted.
enum Pipe {
    Val(PExpr),
    FromStmt,
}

impl<'a> Projector<'a> {
    fn unit(&self, role: &RoleDecl) -> LocalUnit {
        let name = &role.name;
        let (kind, params) = match &role.kind {
            RoleKind::Stateful => {
                let params = self
                    .chor
                    .main
                    .params
                    .iter()
                    .filter(|p| p.role == *name)
                    .map(|p| p.name.clone())
                    .collect();
                (UnitKind::Stateful, params)
            }
            RoleKind::Stateless { media } => {
                let trigger = first_trigger(&self.chor.main.body, name);
                let medium = trigger
                    .map(|(m, _)| m.to_string())
                    .or_else(|| media.first().map(|m| m.name.clone()))
                    .unwrap_or_default();
                let endpoint = self
                    .chor
                    .endpoint_of(name, &medium)
                    .unwrap_or(&medium)
                    .to_string();
                let params = match trigger {
                    Some((_, bind)) => vec![bind.unwrap_or("_").to_string()],
                    None => Vec::new(),
                };
                (UnitKind::Stateless { medium, endpoint }, params)
            }
            RoleKind::Service { .. } => unreachable!("services are not projected"),
        };

        let mut body = self.view(name, &self.chor.main.body);
        finalize_respond(&mut body);

        LocalUnit {
            role: name.clone(),
            kind,
            params,
            imports: self.chor.imports_for(name).cloned().collect(),
            body,
        }
    }

    /// `role`'s view of a statement list.
    fn view(&self, role: &str, stmts: &[Stmt]) -> Vec<LocalStmt> {
        let mut out = Vec::new();
        for stmt in stmts {
            match stmt {
                Stmt::Chain(chain) => self.chain_view(role, chain, &mut out),
                Stmt::RRTrigger(t) => {
                    let sender = t.payload.first_role().unwrap_or_default();
                    if sender == role {
                        let payload = translate(&t.payload);
                        if self.chor.role(role).is_some_and(|r| r.is_stateful()) {
                            out.push(LocalStmt::InvokeGateway {
                                target: t.target.clone(),
                                medium: t.medium.clone(),
                                payload,
                            });
                        } else {
                            out.push(LocalStmt::TriggerFn {
                                target: t.target.clone(),
                                endpoint: self.endpoint(&t.target, &t.medium),
                                payload,
                                mode: CallMode::RR,
                            });
                        }
                    }
                    out.extend(self.view(role, &t.body));
                    if t.target == role {
                        if let Some(with) = &t.with_expr {
                            out.push(LocalStmt::Respond(translate(with)));
                        }
                    }
                }
                Stmt::ForEach(fe) => {
                    let owner = fe.iterable.first_role().unwrap_or_default();
                    let inner = self.view(role, &fe.body);
                    if owner == role {
                        out.push(LocalStmt::ForEach {
                            var: fe.var.name.clone(),
                            iterable: translate(&fe.iterable),
                            body: inner,
                        });
                    } else {
                        // A fresh activation per iteration; the loop itself
                        // lives with the owner of the collection.
                        out.extend(inner);
                    }
                }
                Stmt::If(i) => {
                    let owner = i.guard.first_role().unwrap_or_default();
                    let then_body = self.view(role, &i.then_body);
                    let else_body = i.else_body.as_deref().map(|b| self.view(role, b));
                    if owner == role {
                        out.push(LocalStmt::If {
                            guard: translate(&i.guard),
                            then_body,
                            else_body,
                        });
                    } else {
                        out.extend(then_body);
                        out.extend(else_body.into_iter().flatten());
                    }
                }
            }
        }
        out
    }

    fn endpoint(&self, target: &str, medium: &str) -> String {
        self.chor
            .endpoint_of(target, medium)
            .unwrap_or(medium)
            .to_string()
    }

    /// Project one chain into `role`'s statements: the sender prefix when
    /// the head lives here, plus a segment for every trigger that lands
    /// here.
    fn chain_view(&self, role: &str, chain: &Chain, out: &mut Vec<LocalStmt>) {
        let Some(head_loc) = chain.head.first_role() else {
            return;
        };
        let locs = chain_locations(chain, head_loc);

        if head_loc == role {
            let pipe = match &chain.head {
                Expr::ServiceRR {
                    arg,
                    service,
                    operation,
                    ..
                } => {
                    out.push(LocalStmt::ServiceCall {
                        service: service.clone(),
                        op: operation.clone(),
                        arg: translate(arg),
                        bind: None,
                        mode: CallMode::RR,
                    });
                    Pipe::FromStmt
                }
                head => Pipe::Val(translate(head)),
            };
            self.segment(&chain.steps, 0, pipe, out);
        }

        for (i, (step, _)) in locs.iter().enumerate() {
            if let ChainStep::OneWayTrigger { target, .. } = step {
                if target == role {
                    let param = self.param_name(role);
                    self.segment(&chain.steps, i + 1, Pipe::Val(PExpr::Var(param)), out);
                }
            }
        }
    }

    fn param_name(&self, role: &str) -> String {
        match first_trigger(&self.chor.main.body, role) {
            Some((_, bind)) => bind.unwrap_or("_").to_string(),
            None => "_".to_string(),
        }
    }

    /// Translate steps starting at `start` until the chain leaves the
    /// current role; a one-way trigger sends the pipeline value onward and
    /// ends the segment.
    fn segment(&self, steps: &[ChainStep], start: usize, mut pipe: Pipe, out: &mut Vec<LocalStmt>) {
        for step in &steps[start..] {
            match step {
                ChainStep::BindVar { name, .. } => {
                    match pipe {
                        Pipe::FromStmt => bind_last(out, name),
                        Pipe::Val(e) => out.push(LocalStmt::Assign {
                            name: name.clone(),
                            value: e,
                        }),
                    }
                    pipe = Pipe::Val(PExpr::Var(name.clone()));
                }
                ChainStep::LocalCall { alias, .. } => {
                    let arg = as_expr(pipe, out);
                    pipe = Pipe::Val(PExpr::Call(alias.clone(), vec![arg]));
                }
                ChainStep::OneWayService {
                    service, operation, ..
                } => {
                    let arg = as_expr(pipe, out);
                    out.push(LocalStmt::ServiceCall {
                        service: service.clone(),
                        op: operation.clone(),
                        arg,
                        bind: None,
                        mode: CallMode::OneWay,
                    });
                    pipe = Pipe::FromStmt;
                }
                ChainStep::OneWayTrigger { medium, target, .. } => {
                    let payload = as_expr(pipe, out);
                    out.push(LocalStmt::TriggerFn {
                        target: target.clone(),
                        endpoint: self.endpoint(target, medium),
                        payload,
                        mode: CallMode::OneWay,
                    });
                    return;
                }
            }
        }
        // A pure computation left at the end of the chain keeps its result
        // position; plain variables and literals are no-ops.
        if let Pipe::Val(e @ PExpr::Call(..)) = pipe {
            out.push(LocalStmt::Value(e));
        }
    }
}

/// Fold a binder into the statement that produced the value.
fn bind_last(out: &mut [LocalStmt], name: &str) {
    match out.last_mut() {
        Some(LocalStmt::ServiceCall { bind, .. }) | Some(LocalStmt::LocalCall { bind, .. }) => {
            *bind = Some(name.to_string());
        }
        _ => {}
    }
}

/// Turn the pipeline into an expression, materializing a temporary when
/// the value only exists as the last statement's result.
fn as_expr(pipe: Pipe, out: &mut [LocalStmt]) -> PExpr {
    match pipe {
        Pipe::Val(e) => e,
        Pipe::FromStmt => {
            bind_last(out, "tmp");
            PExpr::Var("tmp".to_string())
        }
    }
}

fn translate(e: &Expr) -> PExpr {
    match e {
        Expr::Var { name, .. } => PExpr::Var(name.clone()),
        Expr::Literal { value, .. } => match value {
            Literal::Str(s) => PExpr::Str(s.clone()),
            Literal::Num(n) => PExpr::Num(n.clone()),
        },
        Expr::Field { base, label, .. } => PExpr::Field(Box::new(translate(base)), label.clone()),
        Expr::Call { alias, args, .. } => {
            PExpr::Call(alias.clone(), args.iter().map(translate).collect())
        }
        Expr::ServiceRR { arg, .. } => translate(arg),
    }
}

/// Keep at most one response per unit, as its last statement.
fn finalize_respond(body: &mut Vec<LocalStmt>) {
    let mut respond = None;
    body.retain(|s| match s {
        LocalStmt::Respond(_) => {
            if respond.is_none() {
                respond = Some(s.clone());
            }
            false
        }
        _ => true,
    });
    if let Some(r) = respond {
        body.push(r);
    }
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

impl fmt::Display for PExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PExpr::Var(name) => f.write_str(name),
            PExpr::Str(s) => write!(f, "\"{s}\""),
            PExpr::Num(n) => f.write_str(n),
            PExpr::Field(base, label) => write!(f, "{base}.{label}"),
            PExpr::Call(alias, args) => {
                let rendered: Vec<String> = args.iter().map(|a| a.to_string()).collect();
                write!(f, "{alias}( {} )", rendered.join(", "))
            }
        }
    }
}

/// Render a unit as pseudocode: a deployment header comment, the import
/// lines, and a `def main` whose last produced value is returned for
/// stateless functions.
pub fn emit_unit(unit: &LocalUnit) -> String {
    let mut out = String::new();
    match &unit.kind {
        UnitKind::Stateful => out.push_str(&format!("# {} code\n", unit.role)),
        UnitKind::Stateless { medium, .. } => out.push_str(&format!(
            "# deploy as {}, trigger {}\n",
            unit.role,
            medium.to_uppercase()
        )),
    }
    for import in &unit.imports {
        out.push_str(&format!(
            "import {}::{} as {}\n",
            import.module, import.operation, import.alias
        ));
    }
    if !unit.imports.is_empty() {
        out.push('\n');
    }
    if unit.params.is_empty() {
        out.push_str("def main()\n");
    } else {
        out.push_str(&format!("def main( {} )\n", unit.params.join(", ")));
    }
    let stateless = matches!(unit.kind, UnitKind::Stateless { .. });
    for (i, stmt) in unit.body.iter().enumerate() {
        let last = i + 1 == unit.body.len();
        emit_stmt(&mut out, stmt, 1, stateless && last);
    }
    out.push_str("end\n");
    out
}

fn returns_value(stmt: &LocalStmt) -> bool {
    match stmt {
        LocalStmt::TriggerFn { .. } | LocalStmt::Value(_) => true,
        LocalStmt::ServiceCall { bind, .. } | LocalStmt::LocalCall { bind, .. } => bind.is_none(),
        _ => false,
    }
}

fn emit_stmt(out: &mut String, stmt: &LocalStmt, indent: usize, tail: bool) {
    let pad = "  ".repeat(indent);
    let ret = if tail && returns_value(stmt) { "return " } else { "" };
    match stmt {
        LocalStmt::ServiceCall {
            service,
            op,
            arg,
            bind,
            ..
        } => {
            let call = format!("{service}.{op}( {arg} )");
            match bind {
                Some(b) => out.push_str(&format!("{pad}{b} = {call}\n")),
                None => out.push_str(&format!("{pad}{ret}{call}\n")),
            }
        }
        LocalStmt::TriggerFn {
            target,
            endpoint,
            payload,
            ..
        } => {
            out.push_str(&format!(
                "{pad}{ret}triggerFn( \"{target}\", \"{endpoint}\", {payload} )\n"
            ));
        }
        LocalStmt::LocalCall { alias, arg, bind } => {
            let call = format!("{alias}( {arg} )");
            match bind {
                Some(b) => out.push_str(&format!("{pad}{b} = {call}\n")),
                None => out.push_str(&format!("{pad}{ret}{call}\n")),
            }
        }
        LocalStmt::Assign { name, value } => {
            out.push_str(&format!("{pad}{name} = {value}\n"));
        }
        LocalStmt::Value(e) => out.push_str(&format!("{pad}{ret}{e}\n")),
        LocalStmt::ForEach {
            var,
            iterable,
            body,
        } => {
            out.push_str(&format!("{pad}for {var} in {iterable} do\n"));
            for stmt in body {
                emit_stmt(out, stmt, indent + 1, false);
            }
            out.push_str(&format!("{pad}end\n"));
        }
        LocalStmt::If {
            guard,
            then_body,
            else_body,
        } => {
            out.push_str(&format!("{pad}if {guard} then\n"));
            for stmt in then_body {
                emit_stmt(out, stmt, indent + 1, false);
            }
            if let Some(else_body) = else_body {
                out.push_str(&format!("{pad}else\n"));
                for stmt in else_body {
                    emit_stmt(out, stmt, indent + 1, false);
                }
            }
            out.push_str(&format!("{pad}end\n"));
        }
        LocalStmt::Respond(e) => {
            out.push_str(&format!("{pad}return {{ code: 200, body: {e} }}\n"));
        }
        LocalStmt::InvokeGateway {
            target,
            medium,
            payload,
        } => {
            out.push_str(&format!("{pad}{medium}.invoke( \"{target}\", {payload} )\n"));
        }
    }
}
