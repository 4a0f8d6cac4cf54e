//! End-to-end acceptance checks for the toolchain, one per shipped
//! guarantee. Each check prints a single PASS/FAIL line; run with
//! `cargo test --test acceptance -- --nocapture` to see them all.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use faaschal_core::deploy::{generate_trace, Trace, TraceEvent, Worker};
use faaschal_core::locality::{CallLocality, Multiplicity};
use faaschal_core::project::{CallMode, LocalStmt, PExpr};
use faaschal_core::{
    check, emit_app, emit_deployment, extract, parse, parse_app, parse_cluster, parse_deployment,
    parse_trace, simulate, synthesize, AffinityRule, AppScript, Block, Cluster, Constraints,
    DiagnosticCode, SimReport, Strategy, Topology, WorkerTarget,
};

const TRAINING: &str = include_str!("../../../testdata/training.chor");
const TRAINING_DEP: &str = include_str!("../../../testdata/training.dep");
const TWO_GROUPS: &str = include_str!("../../../testdata/two-groups.cluster");

const CONDITIONAL: &str = "\
stateful: user
stateless: f{ Gateway }, g{ SNS }, h{ SNS }
def main( data@user )
  data@user <-Gateway-> f do | exp@f |
    if exp@f then
      exp@f |> -SNS-> g
    else
      exp@f |> -SNS-> h
    end
  end
end
";

type CheckResult = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($why:tt)+) => {
        if !$cond {
            return Err(format!($($why)+));
        }
    };
}

// ---------------------------------------------------------------------------
// 1. The worked example parses and checks clean; breaking knowledge of
//    choice is reported exactly once.
// ---------------------------------------------------------------------------

fn golden_parse_check() -> CheckResult {
    let chor = parse(TRAINING).map_err(|d| format!("parse failed: {}", d.render()))?;
    let diags = check(&chor);
    ensure!(diags.is_empty(), "expected zero diagnostics, got {diags:?}");

    let conditional = parse(CONDITIONAL).map_err(|d| d.render())?;
    ensure!(check(&conditional).is_empty(), "conditional example should be clean");

    let mutated = CONDITIONAL
        .replace("stateful: user", "stateful: user, g")
        .replace(
            "stateless: f{ Gateway }, g{ SNS }, h{ SNS }",
            "stateless: f{ Gateway }, h{ SNS }",
        );
    let diags = check(&parse(&mutated).map_err(|d| d.render())?);
    ensure!(
        diags.len() == 1,
        "expected exactly one diagnostic for the stateful observer, got {diags:?}"
    );
    ensure!(
        diags[0].code == DiagnosticCode::KnowledgeOfChoice,
        "expected a knowledge-of-choice diagnostic, got {}",
        diags[0].render()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// 2. Locality extraction reproduces the reference sets exactly.
// ---------------------------------------------------------------------------

fn locality_extraction() -> CheckResult {
    let chor = parse(TRAINING).map_err(|d| d.render())?;
    let loc = extract(&chor);

    let want_data: BTreeSet<(String, String)> = [("f", "DB1"), ("f", "DB2"), ("h", "DB3")]
        .into_iter()
        .map(|(a, b)| (a.to_owned(), b.to_owned()))
        .collect();
    ensure!(loc.data == want_data, "data localities {:?}", loc.data);

    let call = |caller: &str, callee: &str, many: bool| CallLocality {
        caller: caller.to_owned(),
        callee: callee.to_owned(),
        medium: "SNS".to_owned(),
        multiplicity: if many { Multiplicity::OneToMany } else { Multiplicity::OneToOne },
    };
    let want_call: BTreeSet<CallLocality> =
        [call("f", "g", true), call("g", "h", false)].into_iter().collect();
    ensure!(loc.call == want_call, "call localities {:?}", loc.call);

    let want_code: BTreeSet<(String, String)> =
        [("g".to_owned(), "h".to_owned())].into_iter().collect();
    ensure!(loc.code == want_code, "code localities {:?}", loc.code);
    Ok(())
}

// ---------------------------------------------------------------------------
// 3. Policy synthesis reproduces the reference script.
// ---------------------------------------------------------------------------

fn block(target: &str, rules: &[(&str, bool)]) -> Block {
    Block {
        workers: if target == "*" {
            WorkerTarget::Any
        } else {
            WorkerTarget::Group(target.to_owned())
        },
        affinity: rules
            .iter()
            .map(|(tag, anti)| {
                if *anti {
                    AffinityRule::anti(tag)
                } else {
                    AffinityRule::affine(tag)
                }
            })
            .collect(),
    }
}

fn policy_synthesis() -> CheckResult {
    let chor = parse(TRAINING).map_err(|d| d.render())?;
    let loc = extract(&chor);
    let (topo, cons) = parse_deployment(TRAINING_DEP).map_err(|e| e.to_string())?;
    let script =
        synthesize(&loc, &topo, &cons, &loc.fn_order).map_err(|e| e.to_string())?;

    let want = AppScript {
        entries: vec![
            (
                "f".to_owned(),
                vec![
                    block("group1", &[("f", false), ("g", true)]),
                    block("group1", &[("g", true)]),
                ],
            ),
            (
                "g".to_owned(),
                vec![block("*", &[("f", true), ("g", true), ("h", true)])],
            ),
            (
                "h".to_owned(),
                vec![
                    block("group2", &[("h", false), ("g", true)]),
                    block("group2", &[("g", true)]),
                ],
            ),
        ],
    };
    ensure!(script == want, "synthesized script differs:\n{}", emit_app(&script));

    let reference = "f:\n\
                     \x20- workers:  group1\n\
                     \x20  affinity: f, !g\n\
                     \x20- workers:  group1\n\
                     \x20  affinity: !g\n\
                     g:\n\
                     \x20- workers:  *\n\
                     \x20  affinity: !f, !g, !h\n\
                     h:\n\
                     \x20- workers:  group2\n\
                     \x20  affinity: h, !g\n\
                     \x20- workers:  group2\n\
                     \x20  affinity: !g\n";
    let normalize = |s: &str| -> Vec<String> {
        s.lines()
            .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
            .filter(|l| !l.is_empty())
            .collect()
    };
    ensure!(
        normalize(&emit_app(&script)) == normalize(reference),
        "emitted text differs from the reference layout"
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// 4. Projection produces the expected per-role units.
// ---------------------------------------------------------------------------

fn walk<'a>(body: &'a [LocalStmt], hit: &mut impl FnMut(&'a LocalStmt)) {
    for stmt in body {
        hit(stmt);
        match stmt {
            LocalStmt::ForEach { body, .. } => walk(body, hit),
            LocalStmt::If { then_body, else_body, .. } => {
                walk(then_body, hit);
                if let Some(els) = else_body {
                    walk(els, hit);
                }
            }
            _ => {}
        }
    }
}

fn projection_shape() -> CheckResult {
    let chor = parse(TRAINING).map_err(|d| d.render())?;
    let units = faaschal_core::project(&chor).map_err(|e| e.to_string())?;

    ensure!(units.len() == 4, "expected 4 units, got {:?}", units.keys());
    for service in ["DB1", "DB2", "DB3"] {
        ensure!(!units.contains_key(service), "service `{service}` got a unit");
    }

    let f = &units["f"];
    let mut rr_calls = 0;
    let mut loops_triggering_g = 0;
    walk(&f.body, &mut |stmt| {
        if let LocalStmt::ServiceCall { mode: CallMode::RR, .. } = stmt {
            rr_calls += 1;
        }
        if let LocalStmt::ForEach { body, .. } = stmt {
            let mut triggers_g = false;
            walk(body, &mut |inner| {
                if let LocalStmt::TriggerFn { target, .. } = inner {
                    if target == "g" {
                        triggers_g = true;
                    }
                }
            });
            if triggers_g {
                loops_triggering_g += 1;
            }
        }
    });
    ensure!(rr_calls == 2, "expected 2 request-response service calls in f, got {rr_calls}");
    ensure!(loops_triggering_g == 1, "expected 1 loop triggering g, got {loops_triggering_g}");
    ensure!(
        matches!(
            f.body.last(),
            Some(LocalStmt::Respond(PExpr::Str(s))) if s == "All training jobs started"
        ),
        "f must end by responding with the declared reply"
    );

    let mut g_triggers_h = false;
    walk(&units["g"].body, &mut |stmt| {
        if let LocalStmt::TriggerFn { target, endpoint, .. } = stmt {
            if target == "h" && endpoint == "aws:sns" {
                g_triggers_h = true;
            }
        }
    });
    ensure!(g_triggers_h, "g must trigger h through endpoint \"aws:sns\"");

    let mut h_stores = false;
    walk(&units["h"].body, &mut |stmt| {
        if let LocalStmt::ServiceCall { service, op, .. } = stmt {
            if service == "DB3" && op == "storeData" {
                h_stores = true;
            }
        }
    });
    ensure!(h_stores, "h must call DB3.storeData");
    Ok(())
}

// ---------------------------------------------------------------------------
// 5. Scheduler safety over randomized instances, against a brute-force
//    oracle.
// ---------------------------------------------------------------------------

const TAGS: [&str; 3] = ["f1", "f2", "f3"];

fn rand_cluster(rng: &mut ChaCha8Rng) -> Cluster {
    let n = rng.gen_range(1..=4);
    let workers = (1..=n)
        .map(|i| Worker {
            id: format!("w{i}"),
            group: if rng.gen_bool(0.5) { "ga" } else { "gb" }.to_owned(),
        })
        .collect();
    let capacity = if rng.gen_bool(0.4) { Some(rng.gen_range(1..=3)) } else { None };
    Cluster { workers, capacity }
}

fn rand_script(rng: &mut ChaCha8Rng) -> AppScript {
    let entries = TAGS
        .iter()
        .map(|tag| {
            let blocks = (0..rng.gen_range(1..=3))
                .map(|_| {
                    let workers = match rng.gen_range(0..3) {
                        0 => WorkerTarget::Any,
                        1 => WorkerTarget::Group("ga".to_owned()),
                        _ => WorkerTarget::Group("gb".to_owned()),
                    };
                    let mut picked: Vec<&str> = TAGS.to_vec();
                    let keep = rng.gen_range(0..=2);
                    while picked.len() > keep {
                        picked.remove(rng.gen_range(0..picked.len()));
                    }
                    let affinity = picked
                        .into_iter()
                        .map(|t| {
                            if rng.gen_bool(0.5) {
                                AffinityRule::anti(t)
                            } else {
                                AffinityRule::affine(t)
                            }
                        })
                        .collect();
                    Block { workers, affinity }
                })
                .collect();
            (tag.to_string(), blocks)
        })
        .collect();
    AppScript { entries }
}

fn rand_trace(rng: &mut ChaCha8Rng) -> Trace {
    let mut time = 0;
    let events = (0..rng.gen_range(0..=10))
        .map(|_| {
            time += rng.gen_range(0..=3);
            TraceEvent {
                time,
                fn_name: TAGS[rng.gen_range(0..TAGS.len())].to_owned(),
                duration: rng.gen_range(1..=3),
            }
        })
        .collect();
    Trace { events }
}

/// Independent reference scheduler: plain list scans, nested loops over
/// blocks and lexicographically sorted workers.
fn oracle(script: &AppScript, cluster: &Cluster, trace: &Trace) -> (Vec<(u64, String, String, usize)>, Vec<(u64, String)>) {
    let mut order: Vec<&Worker> = cluster.workers.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));

    let admits = |block: &Block, worker: &Worker, live: &[(String, String, u64)]| -> bool {
        if let WorkerTarget::Group(g) = &block.workers {
            if g != &worker.group {
                return false;
            }
        }
        let here: Vec<&str> = live
            .iter()
            .filter(|(w, _, _)| w == &worker.id)
            .map(|(_, t, _)| t.as_str())
            .collect();
        if let Some(cap) = cluster.capacity {
            if here.len() as u32 >= cap {
                return false;
            }
        }
        block.affinity.iter().all(|rule| {
            let n = here.iter().filter(|t| **t == rule.tag).count();
            match rule.polarity {
                faaschal_core::Polarity::Affine => n >= 1,
                faaschal_core::Polarity::AntiAffine => n == 0,
            }
        })
    };

    let mut live: Vec<(String, String, u64)> = Vec::new();
    let mut places = Vec::new();
    let mut fails = Vec::new();
    for event in &trace.events {
        live.retain(|(_, _, end)| *end > event.time);
        let found = script
            .blocks_for(&event.fn_name)
            .unwrap()
            .iter()
            .enumerate()
            .find_map(|(idx, b)| {
                order
                    .iter()
                    .find(|w| admits(b, w, &live))
                    .map(|w| (idx, w.id.clone()))
            });
        match found {
            Some((idx, worker)) => {
                live.push((worker.clone(), event.fn_name.clone(), event.time + event.duration));
                places.push((event.time, event.fn_name.clone(), worker, idx));
            }
            None => fails.push((event.time, event.fn_name.clone())),
        }
    }
    (places, fails)
}

fn scheduler_oracle_safety() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    let topo = Topology::default();
    let loc = Default::default();
    for round in 0..1200 {
        let cluster = rand_cluster(&mut rng);
        let script = rand_script(&mut rng);
        let trace = rand_trace(&mut rng);
        let report = simulate(&script, &cluster, &trace, &topo, &loc, Strategy::FirstFit)
            .map_err(|e| e.to_string())?;
        ensure!(report.violations == 0, "round {round}: violations = {}", report.violations);
        ensure!(
            report.placements.len() + report.failures.len() == trace.events.len(),
            "round {round}: placements + failures != events"
        );
        let got_places: Vec<(u64, String, String, usize)> = report
            .placements
            .iter()
            .map(|p| (p.time, p.fn_name.clone(), p.worker.clone(), p.block))
            .collect();
        let got_fails: Vec<(u64, String)> = report
            .failures
            .iter()
            .map(|f| (f.time, f.fn_name.clone()))
            .collect();
        let (want_places, want_fails) = oracle(&script, &cluster, &trace);
        ensure!(
            got_places == want_places,
            "round {round}: scheduler placements diverge from the oracle\n got {got_places:?}\nwant {want_places:?}"
        );
        ensure!(got_fails == want_fails, "round {round}: failures diverge from the oracle");
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// 6. Simulating the synthesized policy respects groups and constraints
//    end to end.
// ---------------------------------------------------------------------------

fn assert_no_anti_affine_colocation(
    report: &SimReport,
    trace: &Trace,
    cons: &Constraints,
) -> CheckResult {
    let mut live: Vec<(String, String, u64)> = Vec::new();
    for p in &report.placements {
        let event = &trace.events[p.seq];
        live.retain(|(_, _, end)| *end > p.time);
        for (worker, tag, _) in &live {
            if worker == &p.worker {
                ensure!(
                    !cons.contains(&p.fn_name, tag),
                    "placed `{}` beside `{}` on {} at t={}",
                    p.fn_name,
                    tag,
                    p.worker,
                    p.time
                );
            }
        }
        live.push((p.worker.clone(), p.fn_name.clone(), p.time + event.duration));
    }
    Ok(())
}

fn end_to_end_policy_soundness() -> CheckResult {
    let chor = parse(TRAINING).map_err(|d| d.render())?;
    let loc = extract(&chor);
    let (topo, cons) = parse_deployment(TRAINING_DEP).map_err(|e| e.to_string())?;
    let script = synthesize(&loc, &topo, &cons, &loc.fn_order).map_err(|e| e.to_string())?;
    let cluster = parse_cluster(TWO_GROUPS).map_err(|e| e.to_string())?;

    for n in [0u64, 1, 2, 5] {
        let trace = generate_trace(&chor, n, 1, 1);
        let report = simulate(&script, &cluster, &trace, &topo, &loc, Strategy::FirstFit)
            .map_err(|e| e.to_string())?;
        let again = simulate(&script, &cluster, &trace, &topo, &loc, Strategy::FirstFit)
            .map_err(|e| e.to_string())?;
        ensure!(report == again, "n={n}: repeated run differs");
        ensure!(report.violations == 0, "n={n}: violations = {}", report.violations);
        for p in &report.placements {
            let group = cluster.group_of(&p.worker).unwrap_or("?");
            if p.fn_name == "f" {
                ensure!(group == "group1", "n={n}: f placed on {} ({group})", p.worker);
            }
            if p.fn_name == "h" {
                ensure!(group == "group2", "n={n}: h placed on {} ({group})", p.worker);
            }
        }
        assert_no_anti_affine_colocation(&report, &trace, &cons)
            .map_err(|e| format!("n={n}: {e}"))?;
    }

    let single = parse_cluster("workers:\n  w1: group1\n").map_err(|e| e.to_string())?;
    let trace = parse_trace("0 g 5\n1 g 5\n").map_err(|e| e.to_string())?;
    let report = simulate(&script, &single, &trace, &topo, &loc, Strategy::FirstFit)
        .map_err(|e| e.to_string())?;
    ensure!(report.placements.len() == 1, "first g must place");
    ensure!(
        report.failures.len() == 1
            && report.failures[0].time == 1
            && report.failures[0].fn_name == "g",
        "second concurrent g must fail, got {:?}",
        report.failures
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// 7. Emit/parse round-trips for every text format.
// ---------------------------------------------------------------------------

fn rand_topo_cons(rng: &mut ChaCha8Rng) -> (Topology, Constraints) {
    let endpoints = ["S1", "S2", "M1", "M2", "Gw"];
    let groups = ["ga", "gb", "gc"];
    let mut topo = Topology::default();
    for _ in 0..rng.gen_range(0..=8) {
        let e = endpoints[rng.gen_range(0..endpoints.len())].to_owned();
        let g = groups[rng.gen_range(0..groups.len())].to_owned();
        let speed = f64::from(rng.gen_range(1..=4000u32)) / 4.0;
        topo.speeds.insert((e, g), speed);
    }
    let mut cons = Constraints::default();
    for _ in 0..rng.gen_range(0..=4) {
        let a = TAGS[rng.gen_range(0..TAGS.len())];
        let b = TAGS[rng.gen_range(0..TAGS.len())];
        cons.insert(a, b);
    }
    (topo, cons)
}

fn format_round_trips() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0DD5);
    for round in 0..200 {
        let script = rand_script(&mut rng);
        let text = emit_app(&script);
        let reparsed = parse_app(&text).map_err(|e| format!("round {round}: {e}\n{text}"))?;
        ensure!(reparsed == script, "round {round}: policy round-trip changed the script");

        let (topo, cons) = rand_topo_cons(&mut rng);
        let text = emit_deployment(&topo, &cons);
        let (topo2, cons2) =
            parse_deployment(&text).map_err(|e| format!("round {round}: {e}\n{text}"))?;
        ensure!(
            topo2 == topo && cons2 == cons,
            "round {round}: deployment round-trip changed the model"
        );
    }

    let chor = parse(TRAINING).map_err(|d| d.render())?;
    let pretty = chor.to_string();
    let reparsed = parse(&pretty).map_err(|d| format!("pretty text failed: {}", d.render()))?;
    ensure!(reparsed == chor, "pretty-printed choreography parses differently");
    ensure!(reparsed.to_string() == pretty, "pretty-printing is not idempotent");
    Ok(())
}

// ---------------------------------------------------------------------------

#[test]
fn acceptance() {
    let checks: &[(&str, fn() -> CheckResult)] = &[
        ("golden-parse-check", golden_parse_check),
        ("locality-extraction", locality_extraction),
        ("policy-synthesis", policy_synthesis),
        ("projection-shape", projection_shape),
        ("scheduler-oracle-safety", scheduler_oracle_safety),
        ("end-to-end-policy-soundness", end_to_end_policy_soundness),
        ("format-round-trips", format_round_trips),
    ];
    let mut failed = Vec::new();
    for (name, run) in checks {
        match run() {
            Ok(()) => println!("PASS {name}"),
            Err(why) => {
                println!("FAIL {name}: {why}");
                failed.push(*name);
            }
        }
    }
    assert!(failed.is_empty(), "failed acceptance checks: {failed:?}");
}
