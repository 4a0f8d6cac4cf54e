//! Extraction of locality principles from a well-formed choreography.
//!
//! Three kinds are computed. Data locality: which services each stateless
//! function talks to. Call locality: which functions trigger which other
//! functions, through which medium, and whether one activation of the
//! caller can produce many activations of the callee. Code locality: pairs
//! of functions importing operations from the same module, which therefore
//! benefit from sharing a warm worker.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ast::*;
use crate::diag::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Multiplicity {
    OneToOne,
    OneToMany,
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Multiplicity::OneToOne => "1:1",
            Multiplicity::OneToMany => "1:n",
        })
    }
}

/// One function-to-function (or participant-to-function) trigger in the
/// choreography, with the loop context it sits in.
#[derive(Debug, Clone)]
pub struct TriggerSite {
    pub caller: String,
    pub callee: String,
    pub medium: String,
    pub multiplicity: Multiplicity,
    pub span: Span,
    /// Innermost loop crossed between the caller's activation and the
    /// trigger, kept for reporting.
    pub loop_span: Option<Span>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CallLocality {
    pub caller: String,
    pub callee: String,
    pub medium: String,
    pub multiplicity: Multiplicity,
}

/// The localities of one choreography. `fn_order` preserves the order in
/// which stateless functions are declared; reports and downstream synthesis
/// follow it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalitySet {
    pub data: BTreeSet<(String, String)>,
    pub call: BTreeSet<CallLocality>,
    pub code: BTreeSet<(String, String)>,
    /// Modules shared by each code pair, for reporting.
    pub code_modules: BTreeMap<(String, String), BTreeSet<String>>,
    pub fn_order: Vec<String>,
}

/// All trigger sites of the choreography, in source order.
pub fn trigger_sites(chor: &Choreography) -> Vec<TriggerSite> {
    let mut walker = Walker {
        chor,
        loop_depth: 0,
        loop_stack: Vec::new(),
        activation: HashMap::new(),
        sites: Vec::new(),
        data: BTreeSet::new(),
    };
    walker.body(&chor.main.body);
    walker.sites
}

/// Multiplicity of the trigger at source position `trigger` performed by
/// `caller`: one activation of the caller reaches the callee once or many
/// times. Panics when no such trigger exists.
pub fn multiplicity(chor: &Choreography, trigger: Span, caller: &str) -> Multiplicity {
    trigger_sites(chor)
        .into_iter()
        .find(|s| {
            s.caller == caller && s.span.line == trigger.line && s.span.col == trigger.col
        })
        .unwrap_or_else(|| {
            panic!("no trigger by `{caller}` at {}:{}", trigger.line, trigger.col)
        })
        .multiplicity
}

/// Extract the locality sets. Expects a choreography that passed the
/// checker; on ill-formed input the result is best-effort.
pub fn extract(chor: &Choreography) -> LocalitySet {
    let mut walker = Walker {
        chor,
        loop_depth: 0,
        loop_stack: Vec::new(),
        activation: HashMap::new(),
        sites: Vec::new(),
        data: BTreeSet::new(),
    };
    walker.body(&chor.main.body);

    let is_stateless = |name: &str| chor.role(name).is_some_and(|r| r.is_stateless());

    let call: BTreeSet<CallLocality> = walker
        .sites
        .iter()
        .filter(|s| is_stateless(&s.caller) && is_stateless(&s.callee))
        .map(|s| CallLocality {
            caller: s.caller.clone(),
            callee: s.callee.clone(),
            medium: s.medium.clone(),
            multiplicity: s.multiplicity,
        })
        .collect();

    let fn_order = chor.stateless_names();
    let decl_idx = |name: &str| fn_order.iter().position(|n| n == name).unwrap_or(usize::MAX);

    let mut by_module: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for import in &chor.imports {
        if is_stateless(&import.target) {
            by_module
                .entry(&import.module)
                .or_default()
                .insert(&import.target);
        }
    }
    let mut code = BTreeSet::new();
    let mut code_modules: BTreeMap<(String, String), BTreeSet<String>> = BTreeMap::new();
    for (module, fns) in &by_module {
        for a in fns {
            for b in fns {
                if decl_idx(a) < decl_idx(b) {
                    let pair = (a.to_string(), b.to_string());
                    code.insert(pair.clone());
                    code_modules
                        .entry(pair)
                        .or_default()
                        .insert(module.to_string());
                }
            }
        }
    }

    LocalitySet {
        data: walker.data,
        call,
        code,
        code_modules,
        fn_order,
    }
}

impl LocalitySet {
    fn decl_idx(&self, name: &str) -> usize {
        self.fn_order
            .iter()
            .position(|n| n == name)
            .unwrap_or(usize::MAX)
    }

    /// Services a function needs to reach.
    pub fn data_services_of(&self, fn_name: &str) -> BTreeSet<&str> {
        self.data
            .iter()
            .filter(|(f, _)| f == fn_name)
            .map(|(_, s)| s.as_str())
            .collect()
    }

    /// Media over which a function sends or receives triggers.
    pub fn media_of(&self, fn_name: &str) -> BTreeSet<&str> {
        self.call
            .iter()
            .filter(|c| c.caller == fn_name || c.callee == fn_name)
            .map(|c| c.medium.as_str())
            .collect()
    }

    /// Code-locality partners of a function.
    pub fn code_partners_of(&self, fn_name: &str) -> BTreeSet<&str> {
        self.code
            .iter()
            .filter_map(|(a, b)| {
                if a == fn_name {
                    Some(b.as_str())
                } else if b == fn_name {
                    Some(a.as_str())
                } else {
                    None
                }
            })
            .collect()
    }

    /// Human-readable report, ordered by function declaration.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("data locality:\n");
        let mut data: Vec<&(String, String)> = self.data.iter().collect();
        data.sort_by_key(|(f, s)| (self.decl_idx(f), s.clone()));
        for (f, s) in data {
            out.push_str(&format!("  ( {f}, {s} ),\n"));
        }
        out.push_str("call locality:\n");
        let mut call: Vec<&CallLocality> = self.call.iter().collect();
        call.sort_by_key(|c| (self.decl_idx(&c.caller), self.decl_idx(&c.callee)));
        for c in call {
            out.push_str(&format!(
                "  ( {}, {}, {}, {} )\n",
                c.caller, c.callee, c.medium, c.multiplicity
            ));
        }
        out.push_str("code locality:\n");
        let mut code: Vec<&(String, String)> = self.code.iter().collect();
        code.sort_by_key(|(a, b)| (self.decl_idx(a), self.decl_idx(b)));
        for pair in code {
            let (a, b) = pair;
            match self.code_modules.get(pair) {
                Some(modules) if !modules.is_empty() => {
                    let list: Vec<&str> = modules.iter().map(String::as_str).collect();
                    out.push_str(&format!("  ( {a}, {b} ) # {}\n", list.join(", ")));
                }
                _ => out.push_str(&format!("  ( {a}, {b} )\n")),
            }
        }
        out
    }
}

struct Walker<'a> {
    chor: &'a Choreography,
    loop_depth: u32,
    loop_stack: Vec<Span>,
    /// Loop depth at which each role was (last) activated. Roles absent
    /// from the map were active from the start.
    activation: HashMap<String, u32>,
    sites: Vec<TriggerSite>,
    data: BTreeSet<(String, String)>,
}

impl<'a> Walker<'a> {
    fn body(&mut self, body: &[Stmt]) {
        for stmt in body {
            self.stmt(stmt);
        }
    }

    fn trigger(&mut self, caller: &str, callee: &str, medium: &str, span: Span) {
        let activated_at = self.activation.get(caller).copied().unwrap_or(0);
        let multiplicity = if self.loop_depth > activated_at {
            Multiplicity::OneToMany
        } else {
            Multiplicity::OneToOne
        };
        self.sites.push(TriggerSite {
            caller: caller.to_string(),
            callee: callee.to_string(),
            medium: medium.to_string(),
            multiplicity,
            span,
            loop_span: self.loop_stack.last().copied(),
        });
        self.activation.insert(callee.to_string(), self.loop_depth);
    }

    fn service_use(&mut self, location: Option<&str>, service: &str) {
        if let Some(loc) = location {
            if self.chor.role(loc).is_some_and(|r| r.is_stateless()) {
                self.data.insert((loc.to_string(), service.to_string()));
            }
        }
    }

    fn stmt(&mut self, stmt: &Stmt) {
        match stmt {
            Stmt::Chain(chain) => {
                let mut loc = chain.head.first_role().map(str::to_owned);
                if let Expr::ServiceRR { service, .. } = &chain.head {
                    self.service_use(loc.as_deref(), service);
                }
                for step in &chain.steps {
                    match step {
                        ChainStep::OneWayTrigger {
                            medium,
                            target,
                            span,
                        } => {
                            if let Some(caller) = &loc {
                                let caller = caller.clone();
                                self.trigger(&caller, target, medium, *span);
                            }
                            loc = Some(target.clone());
                        }
                        ChainStep::OneWayService { service, .. } => {
                            self.service_use(loc.as_deref(), service);
                        }
                        ChainStep::LocalCall { .. } | ChainStep::BindVar { .. } => {}
                    }
                }
            }
            Stmt::RRTrigger(t) => {
                if let Some(caller) = t.payload.first_role() {
                    let caller = caller.to_owned();
                    self.trigger(&caller, &t.target, &t.medium, t.span);
                }
                self.body(&t.body);
            }
            Stmt::ForEach(fe) => {
                self.loop_depth += 1;
                self.loop_stack.push(fe.span);
                self.body(&fe.body);
                self.loop_stack.pop();
                self.loop_depth -= 1;
            }
            Stmt::If(i) => {
                self.body(&i.then_body);
                if let Some(else_body) = &i.else_body {
                    self.body(else_body);
                }
            }
        }
    }
}
