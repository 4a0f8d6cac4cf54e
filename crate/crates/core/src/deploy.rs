//! Deployment inputs: infrastructure topology with connection speeds,
//! user anti-affinity constraints, cluster descriptions, and invocation
//! traces. All file formats are line-based UTF-8 with `#` comments.
//!
//! Times and durations are integer ticks; speeds are abstract positive
//! ratios where higher means faster. A missing (endpoint, group) entry in
//! the topology means that group cannot reach the endpoint at all.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::ast::*;
use crate::check::chain_locations;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DeployError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T, DeployError> {
    Err(DeployError::Parse {
        line,
        msg: msg.into(),
    })
}

/// Connection speeds between endpoints (services and media) and worker
/// groups. Absence of a pair means the group cannot reach the endpoint.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Topology {
    pub speeds: BTreeMap<(String, String), f64>,
}

impl Topology {
    pub fn speed(&self, endpoint: &str, group: &str) -> Option<f64> {
        self.speeds
            .get(&(endpoint.to_string(), group.to_string()))
            .copied()
    }

    /// All group names mentioned in the topology.
    pub fn groups(&self) -> BTreeSet<&str> {
        self.speeds.keys().map(|(_, g)| g.as_str()).collect()
    }
}

/// Anti-affinity constraints between functions; pairs are unordered and
/// self-pairs like (g, g) forbid co-locating two instances of the same
/// function.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Constraints {
    /// Stored with members in lexicographic order.
    pub anti_affine: BTreeSet<(String, String)>,
}

impl Constraints {
    fn canonical(a: &str, b: &str) -> (String, String) {
        if a <= b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        }
    }

    pub fn insert(&mut self, a: &str, b: &str) {
        self.anti_affine.insert(Self::canonical(a, b));
    }

    pub fn contains(&self, a: &str, b: &str) -> bool {
        self.anti_affine.contains(&Self::canonical(a, b))
    }

    /// Functions that must not share a worker with `name` (including
    /// `name` itself for self-pairs).
    pub fn partners_of(&self, name: &str) -> BTreeSet<&str> {
        self.anti_affine
            .iter()
            .filter_map(|(a, b)| {
                if a == name {
                    Some(b.as_str())
                } else if b == name {
                    Some(a.as_str())
                } else {
                    None
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Worker {
    pub id: String,
    pub group: String,
}

/// A set of named workers, each belonging to a labelled group, with an
/// optional per-worker cap on concurrent function instances.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cluster {
    pub workers: Vec<Worker>,
    pub capacity: Option<u32>,
}

impl Cluster {
    pub fn group_of(&self, worker_id: &str) -> Option<&str> {
        self.workers
            .iter()
            .find(|w| w.id == worker_id)
            .map(|w| w.group.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub time: u64,
    pub fn_name: String,
    pub duration: u64,
}

/// Function invocations to schedule, sorted by time (stable on ties).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

/// Lines with comments stripped, keeping 1-based numbers; blank lines are
/// dropped.
fn meaningful_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            None
        } else {
            Some((i + 1, line))
        }
    })
}

/// Parse `( A, B )` into its two members.
fn parse_pair(s: &str, line: usize) -> Result<(String, String), DeployError> {
    let inner = s
        .trim()
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or(DeployError::Parse {
            line,
            msg: format!("expected `( a, b )`, found `{s}`"),
        })?;
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    match parts[..] {
        [a, b] if !a.is_empty() && !b.is_empty() => Ok((a.to_string(), b.to_string())),
        _ => err(line, format!("expected two names in `( a, b )`, found `{s}`")),
    }
}

/// Parse a comma-separated list of pairs: `( a, b ), ( c, d )`.
fn parse_pair_list(s: &str, line: usize) -> Result<Vec<(String, String)>, DeployError> {
    let mut pairs = Vec::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        let close = match rest.find(')') {
            Some(i) => i,
            None => return err(line, format!("unterminated pair in `{s}`")),
        };
        pairs.push(parse_pair(&rest[..=close], line)?);
        rest = rest[close + 1..].trim_start();
        if let Some(r) = rest.strip_prefix(',') {
            rest = r.trim_start();
            if rest.is_empty() {
                return err(line, "trailing comma in pair list");
            }
        } else if !rest.is_empty() {
            return err(line, format!("expected `,` between pairs in `{s}`"));
        }
    }
    if pairs.is_empty() {
        return err(line, "expected at least one pair");
    }
    Ok(pairs)
}

/// Parse a deployment file: a `topology:` section of `( endpoint, group ): speed`
/// lines and an optional `anti-affine:` section of pairs.
pub fn parse_deployment(text: &str) -> Result<(Topology, Constraints), DeployError> {
    #[derive(PartialEq)]
    enum Section {
        None,
        Topology,
        AntiAffine,
    }
    let mut section = Section::None;
    let mut seen_topology = false;
    let mut topo = Topology::default();
    let mut cons = Constraints::default();

    for (line_no, line) in meaningful_lines(text) {
        if line == "topology:" {
            if seen_topology {
                return err(line_no, "duplicate `topology:` section");
            }
            seen_topology = true;
            section = Section::Topology;
            continue;
        }
        if let Some(rest) = line.strip_prefix("anti-affine:") {
            section = Section::AntiAffine;
            let rest = rest.trim();
            if !rest.is_empty() {
                for (a, b) in parse_pair_list(rest, line_no)? {
                    cons.insert(&a, &b);
                }
            }
            continue;
        }
        match section {
            Section::None => {
                return err(line_no, format!("expected `topology:`, found `{line}`"))
            }
            Section::Topology => {
                let close = match line.find("):") {
                    Some(i) => i,
                    None => {
                        return err(
                            line_no,
                            format!("expected `( endpoint, group ): speed`, found `{line}`"),
                        )
                    }
                };
                let (endpoint, group) = parse_pair(&line[..=close], line_no)?;
                let num = line[close + 2..].trim();
                let speed: f64 = match num.parse() {
                    Ok(v) => v,
                    Err(_) => return err(line_no, format!("invalid speed `{num}`")),
                };
                if !speed.is_finite() || speed <= 0.0 {
                    return err(line_no, format!("non-positive speed `{num}`"));
                }
                let key = (endpoint, group);
                if let Some(prev) = topo.speeds.get(&key) {
                    if *prev != speed {
                        return err(
                            line_no,
                            format!(
                                "conflicting speeds for ( {}, {} ): {prev} and {speed}",
                                key.0, key.1
                            ),
                        );
                    }
                }
                topo.speeds.insert(key, speed);
            }
            Section::AntiAffine => {
                for (a, b) in parse_pair_list(line, line_no)? {
                    cons.insert(&a, &b);
                }
            }
        }
    }

    if !seen_topology {
        return err(0, "missing `topology:` section");
    }
    Ok((topo, cons))
}

fn format_speed(speed: f64) -> String {
    if speed.fract() == 0.0 && speed.abs() < 1e15 {
        format!("{}", speed as i64)
    } else {
        format!("{speed}")
    }
}

/// Deterministic re-serialization; `parse_deployment` reads it back to an
/// equal model.
pub fn emit_deployment(topo: &Topology, cons: &Constraints) -> String {
    let mut out = String::from("topology:\n");
    for ((endpoint, group), speed) in &topo.speeds {
        out.push_str(&format!(
            "  ( {endpoint}, {group} ): {}\n",
            format_speed(*speed)
        ));
    }
    if !cons.anti_affine.is_empty() {
        let pairs: Vec<String> = cons
            .anti_affine
            .iter()
            .map(|(a, b)| format!("( {a}, {b} )"))
            .collect();
        out.push_str(&format!("anti-affine: {}\n", pairs.join(", ")));
    }
    out
}

/// Parse a cluster file: a `workers:` section of `<id>: <group>` lines and
/// an optional `capacity: <n>` line.
pub fn parse_cluster(text: &str) -> Result<Cluster, DeployError> {
    let mut cluster = Cluster::default();
    let mut in_workers = false;

    for (line_no, line) in meaningful_lines(text) {
        if line == "workers:" {
            if in_workers {
                return err(line_no, "duplicate `workers:` section");
            }
            in_workers = true;
            continue;
        }
        if let Some(rest) = line.strip_prefix("capacity:") {
            if cluster.capacity.is_some() {
                return err(line_no, "duplicate `capacity:` line");
            }
            let n: u32 = match rest.trim().parse() {
                Ok(v) => v,
                Err(_) => return err(line_no, format!("invalid capacity `{}`", rest.trim())),
            };
            if n < 1 {
                return err(line_no, "capacity must be at least 1");
            }
            cluster.capacity = Some(n);
            continue;
        }
        if !in_workers {
            return err(line_no, format!("expected `workers:`, found `{line}`"));
        }
        let Some((id, group)) = line.split_once(':') else {
            return err(line_no, format!("expected `<id>: <group>`, found `{line}`"));
        };
        let (id, group) = (id.trim(), group.trim());
        if id.is_empty() || group.is_empty() || group.split_whitespace().count() != 1 {
            return err(line_no, format!("expected `<id>: <group>`, found `{line}`"));
        }
        if cluster.workers.iter().any(|w| w.id == id) {
            return err(line_no, format!("duplicate worker id `{id}`"));
        }
        cluster.workers.push(Worker {
            id: id.to_string(),
            group: group.to_string(),
        });
    }
    if !in_workers {
        return err(0, "missing `workers:` section");
    }
    Ok(cluster)
}

pub fn emit_cluster(cluster: &Cluster) -> String {
    let mut out = String::from("workers:\n");
    for w in &cluster.workers {
        out.push_str(&format!("  {}: {}\n", w.id, w.group));
    }
    if let Some(n) = cluster.capacity {
        out.push_str(&format!("capacity: {n}\n"));
    }
    out
}

/// Parse a trace file of `<time> <fn> <duration>` lines; times must be
/// non-decreasing and durations positive.
pub fn parse_trace(text: &str) -> Result<Trace, DeployError> {
    let mut trace = Trace::default();
    for (line_no, line) in meaningful_lines(text) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [time, fn_name, duration] = fields[..] else {
            return err(
                line_no,
                format!("expected `<time> <fn> <duration>`, found `{line}`"),
            );
        };
        let time: u64 = match time.parse() {
            Ok(v) => v,
            Err(_) => return err(line_no, format!("invalid time `{time}`")),
        };
        let duration: u64 = match duration.parse() {
            Ok(v) => v,
            Err(_) => return err(line_no, format!("invalid duration `{duration}`")),
        };
        if duration == 0 {
            return err(line_no, "duration must be positive");
        }
        if let Some(last) = trace.events.last() {
            if time < last.time {
                return err(line_no, format!("event times must be non-decreasing ({time} after {})", last.time));
            }
        }
        trace.events.push(TraceEvent {
            time,
            fn_name: fn_name.to_string(),
            duration,
        });
    }
    Ok(trace)
}

pub fn emit_trace(trace: &Trace) -> String {
    let mut out = String::new();
    for e in &trace.events {
        out.push_str(&format!("{} {} {}\n", e.time, e.fn_name, e.duration));
    }
    out
}

// ---------------------------------------------------------------------------
// Trace generation
// ---------------------------------------------------------------------------

/// Generate the invocation trace implied by a choreography: every loop is
/// unrolled `loop_count` times, conditionals take their then branch, each
/// triggered instance runs for `base_duration`, and a trigger sent by a
/// stateless function lands `trigger_delay` after that function's own
/// activation. Stateful participants are active from time 0 and their
/// triggers incur no delay.
pub fn generate_trace(
    chor: &Choreography,
    loop_count: u64,
    base_duration: u64,
    trigger_delay: u64,
) -> Trace {
    let mut gen = TraceGen {
        chor,
        loop_count,
        base_duration,
        trigger_delay,
        activation: BTreeMap::new(),
        events: Vec::new(),
    };
    gen.body(&chor.main.body);
    let mut events = gen.events;
    events.sort_by_key(|e| e.time);
    Trace { events }
}

struct TraceGen<'a> {
    chor: &'a Choreography,
    loop_count: u64,
    base_duration: u64,
    trigger_delay: u64,
    activation: BTreeMap<String, u64>,
    events: Vec<TraceEvent>,
}

impl<'a> TraceGen<'a> {
    fn trigger(&mut self, sender: &str, target: &str) {
        let sender_time = self.activation.get(sender).copied().unwrap_or(0);
        let stateless = self
            .chor
            .role(sender)
            .is_some_and(|r| r.is_stateless());
        let time = if stateless {
            sender_time + self.trigger_delay
        } else {
            sender_time
        };
        self.events.push(TraceEvent {
            time,
            fn_name: target.to_string(),
            duration: self.base_duration,
        });
        self.activation.insert(target.to_string(), time);
    }

    fn body(&mut self, stmts: &[Stmt]) {
        for stmt in stmts {
            match stmt {
                Stmt::RRTrigger(t) => {
                    if let Some(sender) = t.payload.first_role() {
                        let sender = sender.to_owned();
                        self.trigger(&sender, &t.target);
                    }
                    self.body(&t.body);
                }
                Stmt::Chain(chain) => {
                    let Some(start) = chain.head.first_role() else {
                        continue;
                    };
                    let mut sender = start.to_owned();
                    for (step, loc) in chain_locations(chain, &sender.clone()) {
                        if let ChainStep::OneWayTrigger { target, .. } = step {
                            self.trigger(&sender, target);
                        }
                        sender = loc;
                    }
                }
                Stmt::ForEach(fe) => {
                    for _ in 0..self.loop_count {
                        self.body(&fe.body);
                    }
                }
                Stmt::If(i) => self.body(&i.then_body),
            }
        }
    }
}
