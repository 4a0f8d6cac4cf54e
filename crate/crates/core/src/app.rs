//! Scheduling-policy scripts: synthesis from localities, emission, parsing.
//!
//! A policy script maps each function tag to an ordered list of blocks.
//! Each block names a worker target (a group label or the wildcard `*`)
//! plus an affinity list: tags the scheduler must co-locate with (`f`) or
//! keep away from (`!f`). The scheduler tries blocks top to bottom, so
//! later blocks act as fallbacks when earlier ones cannot be satisfied.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::deploy::{Constraints, Topology};
use crate::locality::LocalitySet;

/// Where a block allows a function to run.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum WorkerTarget {
    /// A named worker group.
    Group(String),
    /// Any worker, regardless of group.
    Any,
}

impl fmt::Display for WorkerTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WorkerTarget::Group(name) => f.write_str(name),
            WorkerTarget::Any => f.write_str("*"),
        }
    }
}

/// Whether an affinity rule attracts or repels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Polarity {
    Affine,
    AntiAffine,
}

/// One entry of a block's affinity list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffinityRule {
    pub tag: String,
    pub polarity: Polarity,
}

impl AffinityRule {
    pub fn affine(tag: &str) -> Self {
        AffinityRule { tag: tag.to_owned(), polarity: Polarity::Affine }
    }

    pub fn anti(tag: &str) -> Self {
        AffinityRule { tag: tag.to_owned(), polarity: Polarity::AntiAffine }
    }
}

impl fmt::Display for AffinityRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.polarity {
            Polarity::Affine => write!(f, "{}", self.tag),
            Polarity::AntiAffine => write!(f, "!{}", self.tag),
        }
    }
}

/// A single scheduling alternative for one function tag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub workers: WorkerTarget,
    pub affinity: Vec<AffinityRule>,
}

/// A complete policy script, one entry per function tag, in order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AppScript {
    pub entries: Vec<(String, Vec<Block>)>,
}

impl AppScript {
    pub fn blocks_for(&self, tag: &str) -> Option<&[Block]> {
        self.entries
            .iter()
            .find(|(t, _)| t == tag)
            .map(|(_, blocks)| blocks.as_slice())
    }
}

/// Failure to synthesize a policy from the given inputs.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    /// No worker group reaches every service the function stores to or
    /// reads from. `missing` lists the absent (service, group) pairs.
    #[error("no worker group reaches all services of `{fn_name}`; missing {}", render_pairs(missing))]
    UnreachableService {
        fn_name: String,
        missing: Vec<(String, String)>,
    },
}

fn render_pairs(pairs: &[(String, String)]) -> String {
    if pairs.is_empty() {
        return "every pair: the topology declares no worker groups".to_owned();
    }
    let rendered: Vec<String> = pairs
        .iter()
        .map(|(a, b)| format!("( {a}, {b} )"))
        .collect();
    rendered.join(", ")
}

/// A malformed policy script.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {msg}")]
pub struct AppParseError {
    pub line: usize,
    pub msg: String,
}

fn media_score(fn_name: &str, loc: &LocalitySet, topo: &Topology, group: &str) -> f64 {
    loc.media_of(fn_name)
        .iter()
        .filter_map(|medium| topo.speed(medium, group))
        .sum()
}

/// Rank the worker groups a function should target, best first.
///
/// Functions with data localities only run where every one of their
/// services is reachable; groups are ordered by total service speed,
/// then total medium speed, then name. Functions without data localities
/// are ranked by medium speed alone, with the wildcard appended as a
/// final fallback; if no group stands out the wildcard is all they get.
pub fn candidate_groups(
    fn_name: &str,
    loc: &LocalitySet,
    topo: &Topology,
) -> Result<Vec<WorkerTarget>, SynthError> {
    let services = loc.data_services_of(fn_name);
    let groups = topo.groups();

    if !services.is_empty() {
        let mut viable: Vec<(f64, f64, String)> = Vec::new();
        for group in &groups {
            let speeds: Vec<Option<f64>> = services
                .iter()
                .map(|svc| topo.speed(svc, group))
                .collect();
            if speeds.iter().all(Option::is_some) {
                let data: f64 = speeds.into_iter().flatten().sum();
                let media = media_score(fn_name, loc, topo, group);
                viable.push((data, media, group.to_string()));
            }
        }
        if viable.is_empty() {
            let mut missing = Vec::new();
            for svc in &services {
                for group in &groups {
                    if topo.speed(svc, group).is_none() {
                        missing.push((svc.to_string(), group.to_string()));
                    }
                }
            }
            return Err(SynthError::UnreachableService {
                fn_name: fn_name.to_owned(),
                missing,
            });
        }
        viable.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap()
                .then(b.1.partial_cmp(&a.1).unwrap())
                .then_with(|| a.2.cmp(&b.2))
        });
        return Ok(viable
            .into_iter()
            .map(|(_, _, name)| WorkerTarget::Group(name))
            .collect());
    }

    let mut scored: Vec<(f64, String)> = groups
        .iter()
        .map(|group| (media_score(fn_name, loc, topo, group), group.to_string()))
        .collect();
    let uniform = scored
        .windows(2)
        .all(|pair| pair[0].0 == pair[1].0);
    if scored.is_empty() || uniform {
        return Ok(vec![WorkerTarget::Any]);
    }
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then_with(|| a.1.cmp(&b.1))
    });
    let mut targets: Vec<WorkerTarget> = scored
        .into_iter()
        .map(|(_, name)| WorkerTarget::Group(name))
        .collect();
    targets.push(WorkerTarget::Any);
    Ok(targets)
}

/// Split a function's co-location wishes into positives and negatives.
///
/// Negatives are its anti-affinity partners from the constraints.
/// Positives are itself (when it has data localities, so repeated runs
/// reuse warm connections) plus its code-locality partners, except any
/// partner the constraints forbid.
pub fn affinity_sets(
    fn_name: &str,
    loc: &LocalitySet,
    cons: &Constraints,
) -> (Vec<String>, Vec<String>) {
    let partners = cons.partners_of(fn_name);
    let negatives: Vec<String> = partners.iter().map(|p| p.to_string()).collect();

    let mut positives = Vec::new();
    if !loc.data_services_of(fn_name).is_empty() && !cons.contains(fn_name, fn_name) {
        positives.push(fn_name.to_owned());
    }
    for partner in loc.code_partners_of(fn_name) {
        if partner != fn_name && !partners.contains(partner) {
            positives.push(partner.to_owned());
        }
    }
    (positives, negatives)
}

/// Build a policy script for every function, in declaration order.
///
/// Each function gets one block per candidate target carrying its full
/// affinity list, followed by fallback blocks that drop the positive
/// rules so the function can always bootstrap onto an empty cluster.
pub fn synthesize(
    loc: &LocalitySet,
    topo: &Topology,
    cons: &Constraints,
    fn_order: &[String],
) -> Result<AppScript, SynthError> {
    let mut entries = Vec::new();
    for fn_name in fn_order {
        let targets = candidate_groups(fn_name, loc, topo)?;
        let (positives, negatives) = affinity_sets(fn_name, loc, cons);
        let anti: Vec<AffinityRule> =
            negatives.iter().map(|n| AffinityRule::anti(n)).collect();
        let full: Vec<AffinityRule> = positives
            .iter()
            .map(|p| AffinityRule::affine(p))
            .chain(anti.iter().cloned())
            .collect();

        let mut blocks = Vec::new();
        if !positives.is_empty() {
            for target in &targets {
                blocks.push(Block { workers: target.clone(), affinity: full.clone() });
            }
        }
        for target in &targets {
            blocks.push(Block { workers: target.clone(), affinity: anti.clone() });
        }
        entries.push((fn_name.clone(), blocks));
    }
    Ok(AppScript { entries })
}

/// Render a script in the canonical on-disk layout.
pub fn emit_app(script: &AppScript) -> String {
    let mut out = String::new();
    for (tag, blocks) in &script.entries {
        out.push_str(tag);
        out.push_str(":\n");
        for block in blocks {
            out.push_str(&format!("  - workers: {}\n", block.workers));
            if !block.affinity.is_empty() {
                let rules: Vec<String> =
                    block.affinity.iter().map(|r| r.to_string()).collect();
                out.push_str(&format!("    affinity: {}\n", rules.join(", ")));
            }
        }
    }
    out
}

fn parse_affinity_list(
    text: &str,
    line: usize,
) -> Result<Vec<AffinityRule>, AppParseError> {
    let mut rules = Vec::new();
    let mut seen = BTreeSet::new();
    for token in text.split(',') {
        let token = token.trim();
        let (polarity, tag) = match token.strip_prefix('!') {
            Some(rest) => (Polarity::AntiAffine, rest.trim()),
            None => (Polarity::Affine, token),
        };
        if tag.is_empty() || !tag.chars().all(|c| c.is_alphanumeric() || c == '_') {
            return Err(AppParseError {
                line,
                msg: format!("malformed affinity entry `{token}`"),
            });
        }
        if !seen.insert(tag.to_owned()) {
            return Err(AppParseError {
                line,
                msg: format!("`{tag}` listed twice in one affinity list"),
            });
        }
        rules.push(AffinityRule { tag: tag.to_owned(), polarity });
    }
    Ok(rules)
}

/// Parse a policy script. Accepts `#` comments and blank lines; rejects
/// unknown keys, duplicate tags, empty entries, and malformed affinity
/// lists.
pub fn parse_app(text: &str) -> Result<AppScript, AppParseError> {
    let mut entries: Vec<(String, Vec<Block>)> = Vec::new();
    let mut current: Option<(String, Vec<Block>, usize)> = None;

    let flush = |current: &mut Option<(String, Vec<Block>, usize)>,
                     entries: &mut Vec<(String, Vec<Block>)>|
     -> Result<(), AppParseError> {
        if let Some((tag, blocks, line)) = current.take() {
            if blocks.is_empty() {
                return Err(AppParseError {
                    line,
                    msg: format!("entry `{tag}` has no blocks"),
                });
            }
            entries.push((tag, blocks));
        }
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }

        if let Some(rest) = trimmed.strip_prefix("- ") {
            let rest = rest.trim();
            let (key, value) = rest.split_once(':').ok_or_else(|| AppParseError {
                line,
                msg: format!("expected `workers:` after `-`, found `{rest}`"),
            })?;
            if key.trim() != "workers" {
                return Err(AppParseError {
                    line,
                    msg: format!("unsupported key `{}`", key.trim()),
                });
            }
            let label = value.trim();
            if label.is_empty() {
                return Err(AppParseError { line, msg: "missing worker target".into() });
            }
            let workers = if label == "*" {
                WorkerTarget::Any
            } else {
                WorkerTarget::Group(label.to_owned())
            };
            match current.as_mut() {
                Some((_, blocks, _)) => {
                    blocks.push(Block { workers, affinity: Vec::new() })
                }
                None => {
                    return Err(AppParseError {
                        line,
                        msg: "block outside of any tag entry".into(),
                    })
                }
            }
            continue;
        }

        let (key, value) = match trimmed.split_once(':') {
            Some(parts) => parts,
            None => {
                return Err(AppParseError {
                    line,
                    msg: format!("expected `tag:`, `- workers:` or `affinity:`, found `{trimmed}`"),
                })
            }
        };
        let key = key.trim();
        let value = value.trim();

        if key == "affinity" {
            let (_, blocks, _) = current.as_mut().ok_or_else(|| AppParseError {
                line,
                msg: "affinity outside of any tag entry".into(),
            })?;
            let block = blocks.last_mut().ok_or_else(|| AppParseError {
                line,
                msg: "affinity before any `- workers:` block".into(),
            })?;
            if !block.affinity.is_empty() {
                return Err(AppParseError {
                    line,
                    msg: "block already has an affinity list".into(),
                });
            }
            if value.is_empty() {
                return Err(AppParseError { line, msg: "empty affinity list".into() });
            }
            block.affinity = parse_affinity_list(value, line)?;
            continue;
        }

        if value.is_empty() && key.chars().all(|c| c.is_alphanumeric() || c == '_') {
            if entries.iter().any(|(t, _)| t == key)
                || current.as_ref().is_some_and(|(t, _, _)| t == key)
            {
                return Err(AppParseError {
                    line,
                    msg: format!("duplicate entry for `{key}`"),
                });
            }
            flush(&mut current, &mut entries)?;
            current = Some((key.to_owned(), Vec::new(), line));
            continue;
        }

        return Err(AppParseError { line, msg: format!("unsupported key `{key}`") });
    }

    flush(&mut current, &mut entries)?;
    Ok(AppScript { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deploy::parse_deployment;
    use crate::locality::extract;
    use crate::parser::parse;

    const TRAINING: &str = include_str!("../../../testdata/training.chor");
    const TRAINING_DEP: &str = include_str!("../../../testdata/training.dep");
    const TRAINING_APP: &str = include_str!("../../../testdata/training.app");

    fn training_inputs() -> (LocalitySet, Topology, Constraints, Vec<String>) {
        let chor = parse(TRAINING).unwrap();
        let loc = extract(&chor);
        let (topo, cons) = parse_deployment(TRAINING_DEP).unwrap();
        let order = loc.fn_order.clone();
        (loc, topo, cons, order)
    }

    fn group(name: &str) -> WorkerTarget {
        WorkerTarget::Group(name.to_owned())
    }

    #[test]
    fn candidate_groups_for_training_pipeline() {
        let (loc, topo, _, _) = training_inputs();
        assert_eq!(candidate_groups("f", &loc, &topo).unwrap(), vec![group("group1")]);
        assert_eq!(candidate_groups("g", &loc, &topo).unwrap(), vec![WorkerTarget::Any]);
        assert_eq!(candidate_groups("h", &loc, &topo).unwrap(), vec![group("group2")]);
    }

    #[test]
    fn candidate_groups_order_by_data_speed_then_name() {
        let (topo, _) = parse_deployment(
            "topology:\n  ( S, ga ): 10\n  ( S, gb ): 30\n  ( S, gc ): 10\n",
        )
        .unwrap();
        let mut loc = LocalitySet::default();
        loc.data.insert(("f".into(), "S".into()));
        let got = candidate_groups("f", &loc, &topo).unwrap();
        assert_eq!(got, vec![group("gb"), group("ga"), group("gc")]);
    }

    #[test]
    fn candidate_groups_break_data_ties_by_media_speed() {
        let (topo, _) = parse_deployment(
            "topology:\n  ( S, ga ): 10\n  ( S, gb ): 10\n  ( M, gb ): 5\n",
        )
        .unwrap();
        let mut loc = LocalitySet::default();
        loc.data.insert(("f".into(), "S".into()));
        loc.call.insert(crate::locality::CallLocality {
            caller: "f".into(),
            callee: "g".into(),
            medium: "M".into(),
            multiplicity: crate::locality::Multiplicity::OneToOne,
        });
        let got = candidate_groups("f", &loc, &topo).unwrap();
        assert_eq!(got, vec![group("gb"), group("ga")]);
    }

    #[test]
    fn candidate_groups_without_data_rank_media_and_end_with_wildcard() {
        let (topo, _) = parse_deployment(
            "topology:\n  ( M, ga ): 10\n  ( M, gb ): 40\n",
        )
        .unwrap();
        let mut loc = LocalitySet::default();
        loc.call.insert(crate::locality::CallLocality {
            caller: "g".into(),
            callee: "h".into(),
            medium: "M".into(),
            multiplicity: crate::locality::Multiplicity::OneToOne,
        });
        let got = candidate_groups("g", &loc, &topo).unwrap();
        assert_eq!(got, vec![group("gb"), group("ga"), WorkerTarget::Any]);
    }

    #[test]
    fn unreachable_service_reports_missing_pairs() {
        let (topo, _) = parse_deployment("topology:\n  ( S, ga ): 10\n").unwrap();
        let mut loc = LocalitySet::default();
        loc.data.insert(("f".into(), "T".into()));
        let err = candidate_groups("f", &loc, &topo).unwrap_err();
        match &err {
            SynthError::UnreachableService { fn_name, missing } => {
                assert_eq!(fn_name, "f");
                assert_eq!(missing, &vec![("T".to_owned(), "ga".to_owned())]);
            }
        }
        let msg = err.to_string();
        assert!(msg.contains("`f`"), "{msg}");
        assert!(msg.contains("( T, ga )"), "{msg}");
    }

    #[test]
    fn affinity_sets_for_training_pipeline() {
        let (loc, _, cons, _) = training_inputs();
        assert_eq!(affinity_sets("f", &loc, &cons), (vec!["f".to_owned()], vec!["g".to_owned()]));
        assert_eq!(
            affinity_sets("g", &loc, &cons),
            (vec![], vec!["f".to_owned(), "g".to_owned(), "h".to_owned()])
        );
        assert_eq!(affinity_sets("h", &loc, &cons), (vec!["h".to_owned()], vec!["g".to_owned()]));
    }

    #[test]
    fn constraints_override_code_locality_positives() {
        let mut loc = LocalitySet::default();
        loc.code.insert(("g".into(), "h".into()));
        let mut cons = Constraints::default();
        cons.insert("g", "h");
        let (pos, neg) = affinity_sets("g", &loc, &cons);
        assert!(pos.is_empty());
        assert_eq!(neg, vec!["h".to_owned()]);
    }

    #[test]
    fn synthesized_training_policy_matches_golden_file() {
        let (loc, topo, cons, order) = training_inputs();
        let script = synthesize(&loc, &topo, &cons, &order).unwrap();
        assert_eq!(emit_app(&script), TRAINING_APP);
    }

    #[test]
    fn synthesized_training_policy_blocks() {
        let (loc, topo, cons, order) = training_inputs();
        let script = synthesize(&loc, &topo, &cons, &order).unwrap();
        assert_eq!(
            script.entries.iter().map(|(t, b)| (t.as_str(), b.len())).collect::<Vec<_>>(),
            vec![("f", 2), ("g", 1), ("h", 2)]
        );
        let f = script.blocks_for("f").unwrap();
        assert_eq!(f[0].workers, group("group1"));
        assert_eq!(f[0].affinity, vec![AffinityRule::affine("f"), AffinityRule::anti("g")]);
        assert_eq!(f[1].affinity, vec![AffinityRule::anti("g")]);
        let g = script.blocks_for("g").unwrap();
        assert_eq!(g[0].workers, WorkerTarget::Any);
        assert_eq!(
            g[0].affinity,
            vec![AffinityRule::anti("f"), AffinityRule::anti("g"), AffinityRule::anti("h")]
        );
        let h = script.blocks_for("h").unwrap();
        assert_eq!(h[0].workers, group("group2"));
        assert_eq!(h[0].affinity, vec![AffinityRule::affine("h"), AffinityRule::anti("g")]);
    }

    #[test]
    fn every_entry_keeps_a_bootstrap_block() {
        let (loc, topo, cons, order) = training_inputs();
        let script = synthesize(&loc, &topo, &cons, &order).unwrap();
        for (tag, blocks) in &script.entries {
            assert!(
                blocks.iter().any(|b| {
                    b.affinity.iter().all(|r| r.polarity == Polarity::AntiAffine)
                }),
                "entry `{tag}` has no block free of positive affinity"
            );
        }
    }

    #[test]
    fn function_without_localities_gets_wildcard_block() {
        let loc = LocalitySet::default();
        let (topo, cons) = parse_deployment("topology:\n  ( S, ga ): 10\n").unwrap();
        let script = synthesize(&loc, &topo, &cons, &["a".to_owned()]).unwrap();
        assert_eq!(emit_app(&script), "a:\n  - workers: *\n");
    }

    #[test]
    fn code_partners_become_positive_affinity_under_uniform_topology() {
        let mut loc = LocalitySet::default();
        loc.code.insert(("a".into(), "b".into()));
        let topo = Topology::default();
        let cons = Constraints::default();
        let script =
            synthesize(&loc, &topo, &cons, &["a".to_owned(), "b".to_owned()]).unwrap();
        let a = script.blocks_for("a").unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(a[0].workers, WorkerTarget::Any);
        assert_eq!(a[0].affinity, vec![AffinityRule::affine("b")]);
        assert_eq!(a[1].affinity, vec![]);
    }

    #[test]
    fn synthesis_ignores_constraint_listing_order() {
        let (loc, topo, _, order) = training_inputs();
        let reordered = "topology:\n\
                         \x20 ( DB1, group1 ): 100\n\
                         \x20 ( DB2, group1 ): 20\n\
                         \x20 ( DB3, group2 ): 50\n\
                         \x20 ( SNS, group1 ): 50\n\
                         \x20 ( SNS, group2 ): 50\n\
                         \x20 ( Gateway, group1 ): 100\n\
                         anti-affine: ( g, g ), ( h, g ), ( f, g )\n";
        let (_, cons) = parse_deployment(reordered).unwrap();
        let script = synthesize(&loc, &topo, &cons, &order).unwrap();
        assert_eq!(emit_app(&script), TRAINING_APP);
    }

    #[test]
    fn parse_accepts_emitted_script() {
        let script = parse_app(TRAINING_APP).unwrap();
        assert_eq!(emit_app(&script), TRAINING_APP);
        assert_eq!(
            script.entries.iter().map(|(t, b)| (t.as_str(), b.len())).collect::<Vec<_>>(),
            vec![("f", 2), ("g", 1), ("h", 2)]
        );
    }

    #[test]
    fn parse_tolerates_comments_and_loose_indentation() {
        let text = "# policy\nf:\n - workers:  group1   # primary\n   affinity: f, !g\n\n - workers: group1\n";
        let script = parse_app(text).unwrap();
        let f = script.blocks_for("f").unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f[0].workers, group("group1"));
        assert_eq!(f[0].affinity, vec![AffinityRule::affine("f"), AffinityRule::anti("g")]);
        assert!(f[1].affinity.is_empty());
    }

    #[test]
    fn parse_rejects_unsupported_keys() {
        let err = parse_app("f:\n  - workers: *\n    strategy: random\n").unwrap_err();
        assert_eq!(err.line, 3);
        assert!(err.msg.contains("unsupported key `strategy`"), "{}", err.msg);
        let err = parse_app("f:\n  - strategy: random\n").unwrap_err();
        assert!(err.msg.contains("unsupported key `strategy`"), "{}", err.msg);
    }

    #[test]
    fn parse_rejects_structural_mistakes() {
        let err = parse_app("  - workers: *\n").unwrap_err();
        assert!(err.msg.contains("outside of any tag entry"), "{}", err.msg);

        let err = parse_app("f:\n    affinity: g\n").unwrap_err();
        assert!(err.msg.contains("before any"), "{}", err.msg);

        let err = parse_app("f:\n  - workers: *\nf:\n  - workers: *\n").unwrap_err();
        assert!(err.msg.contains("duplicate entry for `f`"), "{}", err.msg);

        let err = parse_app("f:\ng:\n  - workers: *\n").unwrap_err();
        assert!(err.msg.contains("entry `f` has no blocks"), "{}", err.msg);

        let err = parse_app("f:\n  - workers: *\n").map(|s| s.entries.len());
        assert_eq!(err, Ok(1));

        let err = parse_app("f:\n  - workers:\n").unwrap_err();
        assert!(err.msg.contains("missing worker target"), "{}", err.msg);
    }

    #[test]
    fn parse_rejects_malformed_affinity_lists() {
        let err = parse_app("f:\n  - workers: *\n    affinity: f, !\n").unwrap_err();
        assert!(err.msg.contains("malformed affinity entry"), "{}", err.msg);

        let err = parse_app("f:\n  - workers: *\n    affinity: g, g\n").unwrap_err();
        assert!(err.msg.contains("listed twice"), "{}", err.msg);

        let err = parse_app("f:\n  - workers: *\n    affinity: g, !g\n").unwrap_err();
        assert!(err.msg.contains("listed twice"), "{}", err.msg);

        let err = parse_app("f:\n  - workers: *\n    affinity:\n").unwrap_err();
        assert!(err.msg.contains("empty affinity list"), "{}", err.msg);

        let err =
            parse_app("f:\n  - workers: *\n    affinity: g\n    affinity: h\n").unwrap_err();
        assert!(err.msg.contains("already has an affinity list"), "{}", err.msg);
    }

    #[test]
    fn golden_file_matches_reference_layout_modulo_whitespace() {
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
        let normalize = |s: &str| {
            s.lines()
                .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
                .filter(|l| !l.is_empty())
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(normalize(TRAINING_APP), normalize(reference));
        assert_eq!(parse_app(reference).unwrap(), parse_app(TRAINING_APP).unwrap());
    }
}
