//! `faaschal` wires the pipeline end to end: check a choreography,
//! project it to per-role pseudocode, extract localities, synthesize a
//! scheduling policy, and validate policies in the cluster simulator.
//!
//! Diagnostics and errors go to standard error; artifacts go to files
//! (or standard output when no output path is given). Exit codes: 0 on
//! success, 1 on diagnostics or domain errors, 2 on usage errors.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use faaschal_core::{
    check, emit_app, emit_unit, extract, parse, parse_app, parse_cluster, parse_deployment,
    parse_trace, project, simulate, synthesize, Choreography, LocalitySet, Strategy, Topology,
};

#[derive(Parser)]
#[command(name = "faaschal", version, about = "Choreography toolchain for serverless functions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and check a choreography, reporting diagnostics.
    Check {
        /// Choreography source file.
        chor: PathBuf,
    },
    /// Project a choreography into one pseudocode unit per role.
    Project {
        /// Choreography source file.
        chor: PathBuf,
        /// Directory receiving one `<role>.pseudo` file per unit.
        #[arg(short, long, value_name = "DIR")]
        output: PathBuf,
    },
    /// Extract data, call, and code localities.
    Extract {
        /// Choreography source file.
        chor: PathBuf,
        /// Write the report here instead of standard output.
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Synthesize a scheduling policy from localities and a deployment.
    Synth {
        /// Choreography source file.
        chor: PathBuf,
        /// Deployment file with the topology and anti-affinity constraints.
        #[arg(long, value_name = "FILE")]
        deployment: PathBuf,
        /// Policy file to write.
        #[arg(short, long, value_name = "FILE")]
        output: PathBuf,
    },
    /// Replay an invocation trace against a policy on a cluster.
    Simulate {
        /// Policy script to schedule under.
        #[arg(long, value_name = "FILE")]
        policy: PathBuf,
        /// Cluster description (workers, groups, optional capacity).
        #[arg(long, value_name = "FILE")]
        cluster: PathBuf,
        /// Trace file to replay. Mutually exclusive with --gen-trace.
        #[arg(long, value_name = "FILE")]
        trace: Option<PathBuf>,
        /// Choreography used to generate a trace and to cost placements.
        #[arg(long, value_name = "FILE")]
        chor: Option<PathBuf>,
        /// Generate a trace from the choreography: loop count, duration,
        /// and trigger delay.
        #[arg(long, num_args = 3, value_names = ["N", "DURATION", "DELAY"])]
        gen_trace: Option<Vec<u64>>,
        /// Deployment file; with --chor, placements are costed against
        /// its topology.
        #[arg(long, value_name = "FILE")]
        deployment: Option<PathBuf>,
        /// Worker selection strategy.
        #[arg(long, value_enum, default_value_t = StrategyArg::Firstfit)]
        strategy: StrategyArg,
        /// Seed for the random strategy.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the report here instead of standard output.
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
        /// Emit the report as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Firstfit,
    Random,
}

enum Failure {
    /// Something domain-level went wrong; already formatted.
    Domain(String),
    /// The invocation itself was malformed.
    Usage(String),
}

type RunResult = Result<(), Failure>;

fn domain(msg: impl Display) -> Failure {
    Failure::Domain(msg.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| domain(format_args!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, content: &str) -> RunResult {
    fs::write(path, content)
        .map_err(|e| domain(format_args!("cannot write {}: {e}", path.display())))
}

/// Parse and check a choreography; failures and diagnostics are printed
/// in `<file>:<line>:<col>: <CODE>: <message>` form.
fn load_checked(path: &Path) -> Result<Choreography, Failure> {
    let source = read(path)?;
    let chor = match parse(&source) {
        Ok(chor) => chor,
        Err(d) => {
            eprintln!("{}:{}", path.display(), d.render());
            return Err(Failure::Domain(String::new()));
        }
    };
    let diags = check(&chor);
    if !diags.is_empty() {
        for d in &diags {
            eprintln!("{}:{}", path.display(), d.render());
        }
        return Err(Failure::Domain(String::new()));
    }
    Ok(chor)
}

fn emit(output: Option<&Path>, content: &str) -> RunResult {
    match output {
        Some(path) => write(path, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn run(cmd: Cmd) -> RunResult {
    match cmd {
        Cmd::Check { chor } => {
            load_checked(&chor)?;
            Ok(())
        }
        Cmd::Project { chor, output } => {
            let chor_ast = load_checked(&chor)?;
            let units = project(&chor_ast).map_err(domain)?;
            fs::create_dir_all(&output)
                .map_err(|e| domain(format_args!("cannot create {}: {e}", output.display())))?;
            for (role, unit) in &units {
                let path = output.join(format!("{role}.pseudo"));
                write(&path, &emit_unit(unit))?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Cmd::Extract { chor, output } => {
            let chor_ast = load_checked(&chor)?;
            let loc = extract(&chor_ast);
            emit(output.as_deref(), &loc.render())
        }
        Cmd::Synth { chor, deployment, output } => {
            let chor_ast = load_checked(&chor)?;
            let loc = extract(&chor_ast);
            let text = read(&deployment)?;
            let (topo, cons) = parse_deployment(&text)
                .map_err(|e| domain(format_args!("{}: {e}", deployment.display())))?;
            let script = synthesize(&loc, &topo, &cons, &loc.fn_order).map_err(domain)?;
            write(&output, &emit_app(&script))
        }
        Cmd::Simulate {
            policy,
            cluster,
            trace,
            chor,
            gen_trace,
            deployment,
            strategy,
            seed,
            output,
            json,
        } => {
            let script = parse_app(&read(&policy)?)
                .map_err(|e| domain(format_args!("{}: {e}", policy.display())))?;
            let cluster_model = parse_cluster(&read(&cluster)?)
                .map_err(|e| domain(format_args!("{}: {e}", cluster.display())))?;

            let chor_ast = chor.as_deref().map(load_checked).transpose()?;
            let trace_model = match (&trace, &gen_trace) {
                (Some(path), None) => parse_trace(&read(path)?)
                    .map_err(|e| domain(format_args!("{}: {e}", path.display())))?,
                (None, Some(knobs)) => {
                    let chor_ast = chor_ast.as_ref().ok_or_else(|| {
                        Failure::Usage("--gen-trace needs --chor".to_owned())
                    })?;
                    faaschal_core::generate_trace(chor_ast, knobs[0], knobs[1], knobs[2])
                }
                _ => {
                    return Err(Failure::Usage(
                        "give exactly one of --trace or --gen-trace".to_owned(),
                    ))
                }
            };

            // Costs need both the localities and the topology; with either
            // missing every placement costs zero.
            let dep_model = deployment
                .as_deref()
                .map(|path| {
                    parse_deployment(&read(path)?)
                        .map_err(|e| domain(format_args!("{}: {e}", path.display())))
                })
                .transpose()?;
            let (topo, loc) = match (&chor_ast, dep_model) {
                (Some(chor_ast), Some((topo, _))) => (topo, extract(chor_ast)),
                _ => (Topology::default(), LocalitySet::default()),
            };

            let strategy = match strategy {
                StrategyArg::Firstfit => Strategy::FirstFit,
                StrategyArg::Random => Strategy::SeededRandom(seed),
            };
            let report = simulate(&script, &cluster_model, &trace_model, &topo, &loc, strategy)
                .map_err(domain)?;
            let rendered = if json { report.render_json() } else { report.render() };
            emit(output.as_deref(), &rendered)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse().cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(msg)) => {
            if !msg.is_empty() {
                eprintln!("error: {msg}");
            }
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}
