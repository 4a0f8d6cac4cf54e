//! Scaled input builders for the benchmarks. Everything here produces
//! valid inputs; the unit tests below keep that true.

use faaschal_core::deploy::{Trace, TraceEvent, Worker};
use faaschal_core::locality::CallLocality;
use faaschal_core::{Cluster, Constraints, LocalitySet, Multiplicity, Topology};

/// A choreography that fans one request out through `stages` chained
/// stateless functions before storing the result.
pub fn pipeline_source(stages: usize) -> String {
    assert!(stages >= 1);
    let mut src = String::from("stateful: user\nstateless: ");
    for i in 1..=stages {
        if i > 1 {
            src.push_str(", ");
        }
        src.push_str(&format!("f{i}{{ Bus }}"));
    }
    src.push_str("\nservices: Store{ put }\n");
    src.push_str("def main( x@user )\n");
    src.push_str("  x@user <-Bus-> f1 do | y@f1 |\n");
    src.push_str("    y@f1");
    for i in 2..=stages {
        src.push_str(&format!(" |> -Bus-> f{i}"));
    }
    src.push_str(" |> -> Store: put\n");
    src.push_str("  end with \"queued\"@f1\nend\n");
    src
}

/// Localities, topology, and constraints for `n` functions spread over
/// two groups: even functions store to a service reachable from one
/// group, odd ones from the other; neighbours share code and each
/// function is anti-affine with itself.
pub fn scaled_inputs(n: usize) -> (LocalitySet, Topology, Constraints) {
    let mut loc = LocalitySet::default();
    let mut topo = Topology::default();
    let mut cons = Constraints::default();
    topo.speeds.insert(("Bus".into(), "east".into()), 80.0);
    topo.speeds.insert(("Bus".into(), "west".into()), 80.0);
    for i in 0..n {
        let f = format!("f{i}");
        let svc = format!("S{i}");
        let group = if i % 2 == 0 { "east" } else { "west" };
        loc.fn_order.push(f.clone());
        loc.data.insert((f.clone(), svc.clone()));
        topo.speeds.insert((svc, group.into()), 50.0 + i as f64);
        if i + 1 < n {
            loc.call.insert(CallLocality {
                caller: f.clone(),
                callee: format!("f{}", i + 1),
                medium: "Bus".into(),
                multiplicity: Multiplicity::OneToOne,
            });
            loc.code.insert((f.clone(), format!("f{}", i + 1)));
        }
        cons.insert(&f, &f);
    }
    (loc, topo, cons)
}

pub fn scaled_cluster(workers: usize) -> Cluster {
    Cluster {
        workers: (0..workers)
            .map(|i| Worker {
                id: format!("w{i:03}"),
                group: if i % 2 == 0 { "east" } else { "west" }.to_owned(),
            })
            .collect(),
        capacity: Some(8),
    }
}

pub fn scaled_trace(events: usize, tags: usize) -> Trace {
    Trace {
        events: (0..events)
            .map(|i| TraceEvent {
                time: (i / 4) as u64,
                fn_name: format!("f{}", i % tags),
                duration: 2 + (i % 3) as u64,
            })
            .collect(),
    }
}
