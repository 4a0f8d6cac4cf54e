//! Discrete-event validation of policy scripts against a cluster.
//!
//! The simulator replays a trace of function invocations, scheduling each
//! onto a worker by walking the function's policy blocks in order: a block
//! applies when some worker matches its target group, hosts at least one
//! running instance of every affine tag, hosts none of the anti-affine
//! tags, and has spare capacity. Exhausting all blocks fails the
//! invocation. Completed instances free their slots at their completion
//! time, before any placement at that instant.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::app::{AppScript, Block, Polarity, WorkerTarget};
use crate::deploy::{Cluster, Topology, Trace};
use crate::locality::LocalitySet;

/// How to pick among equally eligible workers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Lowest worker id first; fully deterministic.
    FirstFit,
    /// Uniform choice driven by a seeded generator; reproducible per seed.
    SeededRandom(u64),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("trace references `{0}`, which has no policy entry")]
    UnknownFunction(String),
}

/// Running instances per worker plus the queue of pending completions.
#[derive(Debug, Default)]
pub struct SchedulerState {
    running: BTreeMap<String, BTreeMap<String, u32>>,
    completions: BinaryHeap<Reverse<(u64, String, String)>>,
}

impl SchedulerState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Running instances of `tag` on `worker`.
    pub fn count(&self, worker: &str, tag: &str) -> u32 {
        self.running
            .get(worker)
            .and_then(|tags| tags.get(tag))
            .copied()
            .unwrap_or(0)
    }

    /// All running instances on `worker`.
    pub fn total_running(&self, worker: &str) -> u32 {
        self.running
            .get(worker)
            .map(|tags| tags.values().sum())
            .unwrap_or(0)
    }

    /// Running instances across the whole cluster.
    pub fn total_live(&self) -> u64 {
        self.running
            .values()
            .flat_map(|tags| tags.values())
            .map(|&c| u64::from(c))
            .sum()
    }

    /// Start an instance of `tag` on `worker`, to finish at `completes_at`.
    pub fn place(&mut self, worker: &str, tag: &str, completes_at: u64) {
        *self
            .running
            .entry(worker.to_owned())
            .or_default()
            .entry(tag.to_owned())
            .or_insert(0) += 1;
        self.completions
            .push(Reverse((completes_at, worker.to_owned(), tag.to_owned())));
    }

    /// Release every instance whose completion time is at or before `time`.
    pub fn release_until(&mut self, time: u64) {
        while let Some(Reverse((due, _, _))) = self.completions.peek() {
            if *due > time {
                break;
            }
            let Reverse((_, worker, tag)) = self.completions.pop().unwrap();
            if let Some(tags) = self.running.get_mut(&worker) {
                if let Some(count) = tags.get_mut(&tag) {
                    *count -= 1;
                    if *count == 0 {
                        tags.remove(&tag);
                    }
                }
                if tags.is_empty() {
                    self.running.remove(&worker);
                }
            }
        }
    }
}

/// Workers on which `block` allows a placement right now, sorted by id.
pub fn eligible_workers(
    block: &Block,
    state: &SchedulerState,
    cluster: &Cluster,
) -> Vec<String> {
    let mut ids: Vec<String> = cluster
        .workers
        .iter()
        .filter(|w| match &block.workers {
            WorkerTarget::Any => true,
            WorkerTarget::Group(g) => &w.group == g,
        })
        .filter(|w| match cluster.capacity {
            Some(cap) => state.total_running(&w.id) < cap,
            None => true,
        })
        .filter(|w| {
            block.affinity.iter().all(|rule| match rule.polarity {
                Polarity::Affine => state.count(&w.id, &rule.tag) >= 1,
                Polarity::AntiAffine => state.count(&w.id, &rule.tag) == 0,
            })
        })
        .map(|w| w.id.clone())
        .collect();
    ids.sort();
    ids
}

/// Latency proxy for running `fn_name` on a worker of `group`: the sum of
/// 100/speed over the function's data-locality services and call-locality
/// media. Media missing from the topology are skipped; a missing service
/// makes the placement infinitely expensive.
pub fn placement_cost(
    fn_name: &str,
    group: &str,
    loc: &LocalitySet,
    topo: &Topology,
) -> f64 {
    let services = loc.data_services_of(fn_name);
    let media = loc.media_of(fn_name);
    let endpoints: BTreeSet<&str> = services.iter().chain(media.iter()).copied().collect();

    let mut cost = 0.0;
    for endpoint in endpoints {
        match topo.speed(endpoint, group) {
            Some(speed) => cost += 100.0 / speed,
            None if services.contains(endpoint) => return f64::INFINITY,
            None => {}
        }
    }
    cost
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Placement {
    /// Index of the trace event this placement answers.
    pub seq: usize,
    pub time: u64,
    #[serde(rename = "fn")]
    pub fn_name: String,
    pub worker: String,
    pub block: usize,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub seq: usize,
    pub time: u64,
    #[serde(rename = "fn")]
    pub fn_name: String,
    pub reason: String,
}

/// Everything a simulation run produced.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimReport {
    pub placements: Vec<Placement>,
    pub failures: Vec<Failure>,
    /// Placements that re-evaluation of their block found ineligible.
    /// Always zero unless the scheduler itself is broken.
    pub violations: u64,
    pub total_cost: f64,
    pub mean_cost: f64,
    /// Highest concurrent instance count seen per worker.
    pub peak: BTreeMap<String, u32>,
}

fn format_cost(cost: f64) -> String {
    if cost.is_infinite() {
        return "inf".to_owned();
    }
    let text = format!("{cost:.4}");
    text.trim_end_matches('0').trim_end_matches('.').to_owned()
}

impl SimReport {
    /// Line-oriented text: one `PLACE`/`FAIL` line per trace event in
    /// order, then a summary and per-worker peaks.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut placements = self.placements.iter().peekable();
        let mut failures = self.failures.iter().peekable();
        loop {
            let next_place = placements.peek().map(|p| p.seq);
            let next_fail = failures.peek().map(|f| f.seq);
            match (next_place, next_fail) {
                (None, None) => break,
                (Some(_), None) => {
                    let p = placements.next().unwrap();
                    out.push_str(&format!(
                        "PLACE {} {} {} {} {}\n",
                        p.time,
                        p.fn_name,
                        p.worker,
                        p.block,
                        format_cost(p.cost)
                    ));
                }
                (None, Some(_)) => {
                    let f = failures.next().unwrap();
                    out.push_str(&format!("FAIL {} {} {}\n", f.time, f.fn_name, f.reason));
                }
                (Some(ps), Some(fs)) => {
                    if ps < fs {
                        let p = placements.next().unwrap();
                        out.push_str(&format!(
                            "PLACE {} {} {} {} {}\n",
                            p.time,
                            p.fn_name,
                            p.worker,
                            p.block,
                            format_cost(p.cost)
                        ));
                    } else {
                        let f = failures.next().unwrap();
                        out.push_str(&format!("FAIL {} {} {}\n", f.time, f.fn_name, f.reason));
                    }
                }
            }
        }
        out.push_str(&format!(
            "SUMMARY placements={} failures={} violations={} total_cost={} mean_cost={}\n",
            self.placements.len(),
            self.failures.len(),
            self.violations,
            format_cost(self.total_cost),
            format_cost(self.mean_cost)
        ));
        for (worker, peak) in &self.peak {
            out.push_str(&format!("PEAK {worker} {peak}\n"));
        }
        out
    }

    pub fn render_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Replay `trace` against `cluster` under `script`, costing placements
/// with `loc` and `topo`. Fails fast if the trace names a function the
/// script has no entry for.
pub fn simulate(
    script: &AppScript,
    cluster: &Cluster,
    trace: &Trace,
    topo: &Topology,
    loc: &LocalitySet,
    strategy: Strategy,
) -> Result<SimReport, SimError> {
    for event in &trace.events {
        if script.blocks_for(&event.fn_name).is_none() {
            return Err(SimError::UnknownFunction(event.fn_name.clone()));
        }
    }

    let mut rng = match strategy {
        Strategy::FirstFit => None,
        Strategy::SeededRandom(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
    };
    let mut state = SchedulerState::new();
    let mut peak: BTreeMap<String, u32> =
        cluster.workers.iter().map(|w| (w.id.clone(), 0)).collect();
    let mut placements = Vec::new();
    let mut failures = Vec::new();
    let mut violations = 0u64;

    for (seq, event) in trace.events.iter().enumerate() {
        state.release_until(event.time);
        let blocks = script.blocks_for(&event.fn_name).unwrap();

        let mut chosen = None;
        for (block_idx, block) in blocks.iter().enumerate() {
            let eligible = eligible_workers(block, &state, cluster);
            if eligible.is_empty() {
                continue;
            }
            let worker = match rng.as_mut() {
                None => eligible[0].clone(),
                Some(r) => eligible[r.gen_range(0..eligible.len())].clone(),
            };
            chosen = Some((block_idx, worker));
            break;
        }

        match chosen {
            None => failures.push(Failure {
                seq,
                time: event.time,
                fn_name: event.fn_name.clone(),
                reason: "blocks-exhausted".to_owned(),
            }),
            Some((block_idx, worker)) => {
                if !eligible_workers(&blocks[block_idx], &state, cluster)
                    .contains(&worker)
                {
                    violations += 1;
                }
                let group = cluster
                    .group_of(&worker)
                    .expect("chosen worker belongs to the cluster");
                let cost = placement_cost(&event.fn_name, group, loc, topo);
                state.place(&worker, &event.fn_name, event.time + event.duration);
                let running = state.total_running(&worker);
                let entry = peak.entry(worker.clone()).or_insert(0);
                if running > *entry {
                    *entry = running;
                }
                placements.push(Placement {
                    seq,
                    time: event.time,
                    fn_name: event.fn_name.clone(),
                    worker,
                    block: block_idx,
                    cost,
                });
            }
        }
    }

    let total_cost: f64 = placements.iter().map(|p| p.cost).sum();
    let mean_cost = if placements.is_empty() {
        0.0
    } else {
        total_cost / placements.len() as f64
    };
    Ok(SimReport {
        placements,
        failures,
        violations,
        total_cost,
        mean_cost,
        peak,
    })
}
