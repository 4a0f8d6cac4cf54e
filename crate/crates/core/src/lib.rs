//! Core library of the FaaSChal toolchain: choreography parsing and
//! checking, projection to per-role units, locality extraction, scheduling
//! policy synthesis, and policy validation against a simulated cluster.

pub mod app;
pub mod ast;
pub mod check;
pub mod deploy;
pub mod diag;
pub mod lexer;
pub mod locality;
pub mod parser;
pub mod project;
pub mod sim;

pub use app::{
    affinity_sets, candidate_groups, emit_app, parse_app, synthesize, AffinityRule, AppParseError,
    AppScript, Block, Polarity, SynthError, WorkerTarget,
};
pub use ast::Choreography;
pub use check::{chain_locations, check};
pub use deploy::{
    emit_cluster, emit_deployment, emit_trace, generate_trace, parse_cluster, parse_deployment,
    parse_trace, Cluster, Constraints, Topology, Trace,
};
pub use diag::{Diagnostic, DiagnosticCode, Span};
pub use locality::{extract, multiplicity, CallLocality, LocalitySet, Multiplicity};
pub use parser::parse;
pub use project::{emit_unit, project, LocalStmt, LocalUnit, ProjectError};
pub use sim::{
    eligible_workers, placement_cost, simulate, Failure, Placement, SchedulerState, SimError,
    SimReport, Strategy,
};
