//! Command-line front end. Every command prints a [`RunReport`] to stdout
//! and maps its outcome to an exit code.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::files::{self, Instance};
use crate::par::Execution;
use crate::problems::{
    automorphism_count, decide_1qsci, decide_1qsd, decide_qsci, decide_qsd, distance_to_identity,
    Tomography, VerdictKind,
};
use crate::protocol::{
    acceptance_probability, honest_prover, numeric_cheat_search, optimal_cheat_bound, zk_audit,
};
use crate::qcore::{dim_cap, set_dim_cap};
use crate::random::seeded;
use crate::reductions::{
    amplified_distance_bound, amplify, bqp_to_1qsci, gna_to_qsci, protocol_to_qsci,
};
use crate::report::{sha256_hex, RunReport};

pub const EXIT_ACCEPT: i32 = 0;
pub const EXIT_REJECT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PROMISE_VIOLATED: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

/// Environment variable overriding the dense-simulation qubit cap.
pub const DIM_CAP_ENV: &str = "NIQZK_DIM_CAP";

#[derive(Debug, Parser)]
#[command(
    name = "niqzk",
    version,
    about = "Deciders, reductions and zero-knowledge protocol analysis for closeness-to-identity problems"
)]
struct Cli {
    /// Also write the report as JSON to this path.
    #[arg(long, global = true, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Print wall-clock time to stderr (never part of the report).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide a QSCI or QSD instance.
    Decide(DecideArgs),
    /// Apply a reduction and write the resulting instance.
    #[command(subcommand)]
    Reduce(ReduceCommand),
    /// Analyse a protocol specification.
    #[command(subcommand)]
    Protocol(ProtocolCommand),
}

#[derive(Debug, Args)]
struct DecideArgs {
    instance: PathBuf,
    /// Exact density-matrix decision (default).
    #[arg(long, conflicts_with = "sampled")]
    exact: bool,
    /// Single-qubit tomography with this many measurement shots.
    #[arg(long, value_name = "TRIALS")]
    sampled: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum ReduceCommand {
    /// Graph non-automorphism to closeness to identity.
    Gna {
        graph: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Simulator-driven channel of a protocol specification.
    Protocol {
        spec: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Accept probability of a circuit to single-qubit closeness.
    Bqp {
        circuit: PathBuf,
        #[arg(long, default_value_t = 0)]
        accept_qubit: usize,
        /// Number of copies combined by majority vote (a power of three).
        #[arg(long, default_value_t = 1)]
        copies: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Parallel repetition of a QSCI instance.
    Amplify {
        instance: PathBuf,
        #[arg(long)]
        copies: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Debug, Args)]
struct ProtocolFileArg {
    spec: PathBuf,
}

#[derive(Debug, Subcommand)]
enum ProtocolCommand {
    /// Acceptance probability of the honest prover.
    Run(ProtocolFileArg),
    /// Closed-form cheat bound and numerical search for a cheating prover.
    Cheat {
        spec: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 2000)]
        iters: usize,
    },
    /// Trace distance between the simulator and the honest verifier view.
    Zk(ProtocolFileArg),
}

fn exit_code_for(err: &Error) -> i32 {
    if err.is_resource_limit() {
        EXIT_RESOURCE
    } else {
        EXIT_USAGE
    }
}

fn verdict_exit(kind: VerdictKind) -> i32 {
    match kind {
        VerdictKind::Accept => EXIT_ACCEPT,
        VerdictKind::Reject => EXIT_REJECT,
        VerdictKind::PromiseViolated => EXIT_PROMISE_VIOLATED,
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    Ok(std::fs::read(path)?)
}

fn file_label(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Applies [`DIM_CAP_ENV`] if set.
pub fn apply_dim_cap_env() -> Result<()> {
    if let Ok(raw) = std::env::var(DIM_CAP_ENV) {
        let cap: usize = raw.trim().parse().map_err(|_| {
            Error::InvalidInstance(format!("{DIM_CAP_ENV} must be a qubit count, got `{raw}`"))
        })?;
        set_dim_cap(cap);
    }
    Ok(())
}

/// Parses `args`, runs the command, writes the report and returns the exit
/// code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_ACCEPT
            };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
            } else {
                let _ = stdout.write_all(text.as_bytes());
            }
            return code;
        }
    };
    if let Err(e) = apply_dim_cap_env() {
        let _ = writeln!(stderr, "error: {e}");
        return EXIT_USAGE;
    }
    let start = Instant::now();
    let outcome = match &cli.command {
        Command::Decide(a) => cmd_decide(a),
        Command::Reduce(r) => cmd_reduce(r).map(|rep| (rep, EXIT_ACCEPT)),
        Command::Protocol(p) => cmd_protocol(p).map(|rep| (rep, EXIT_ACCEPT)),
    };
    let (report, code) = match outcome {
        Ok(v) => v,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return exit_code_for(&e);
        }
    };
    if stdout.write_all(report.to_text().as_bytes()).is_err() {
        return EXIT_USAGE;
    }
    if let Some(path) = &cli.json {
        if let Err(e) = std::fs::write(path, report.to_json()) {
            let _ = writeln!(stderr, "error: writing {}: {e}", path.display());
            return EXIT_USAGE;
        }
    }
    if cli.timing {
        let _ = writeln!(
            stderr,
            "wall_time_seconds={:.3}",
            start.elapsed().as_secs_f64()
        );
    }
    code
}

fn cmd_decide(a: &DecideArgs) -> Result<(RunReport, i32)> {
    let bytes = read_bytes(&a.instance)?;
    let inst = files::load_instance(&a.instance)?;
    let mut rep = RunReport::new("decide");
    rep.digest("instance", &bytes);
    let mut rng = seeded(a.seed);
    let verdict = match (&inst, a.sampled) {
        (Instance::Qsci(i), None) => {
            rep.text("kind", "qsci").text("mode", "exact");
            rep.float("alpha", i.alpha()).float("beta", i.beta());
            decide_qsci(i)?
        }
        (Instance::Qsd(i), None) => {
            rep.text("kind", "qsd").text("mode", "exact");
            rep.float("alpha", i.alpha()).float("beta", i.beta());
            decide_qsd(i)?
        }
        (Instance::Qsci(i), Some(trials)) => {
            rep.text("kind", "qsci")
                .text("mode", "sampled")
                .int("trials", trials as u64)
                .int("seed", a.seed);
            rep.float("alpha", i.alpha()).float("beta", i.beta());
            decide_1qsci(i, Tomography::Sampled(trials), &mut rng)?
        }
        (Instance::Qsd(i), Some(trials)) => {
            rep.text("kind", "qsd")
                .text("mode", "sampled")
                .int("trials", trials as u64)
                .int("seed", a.seed);
            rep.float("alpha", i.alpha()).float("beta", i.beta());
            decide_1qsd(i, Tomography::Sampled(trials), &mut rng)?
        }
    };
    rep.float("distance", verdict.witness);
    rep.text("verdict", verdict.kind.as_str());
    Ok((rep, verdict_exit(verdict.kind)))
}

fn provenance(
    reduction: &str,
    input: &Path,
    bytes: &[u8],
    extra: &[(&str, String)],
) -> Vec<(String, String)> {
    let mut p = vec![
        ("reduction".to_string(), reduction.to_string()),
        ("source".to_string(), file_label(input)),
        ("source_sha256".to_string(), sha256_hex(bytes)),
    ];
    p.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
    p
}

fn cmd_reduce(cmd: &ReduceCommand) -> Result<RunReport> {
    match cmd {
        ReduceCommand::Gna { graph, output } => {
            let bytes = read_bytes(graph)?;
            let g = files::load_graph(graph)?;
            let red = gna_to_qsci(&g)?;
            let mut rep = RunReport::new("reduce gna");
            rep.digest("graph", &bytes);
            rep.int("n", g.n() as u64)
                .int("automorphisms", automorphism_count(&g)?)
                .int("q_l", red.summary.q_l as u64)
                .int("distinct_tags", red.summary.distinct_tags() as u64)
                .text(
                    "source",
                    if red.circuit.is_some() {
                        "circuit"
                    } else {
                        "state"
                    },
                )
                .float("alpha", red.instance.alpha())
                .float("beta", red.instance.beta())
                .float("distance", red.summary.distance);
            let prov = provenance(
                "gna",
                graph,
                &bytes,
                &[(
                    "distance",
                    crate::files::format_number(red.summary.distance),
                )],
            );
            files::write_qsci_instance(output, &red.instance, &prov)?;
            rep.text("output", output.display().to_string());
            Ok(rep)
        }
        ReduceCommand::Protocol { spec, output } => {
            let bytes = read_bytes(spec)?;
            let loaded = files::load_protocol(spec)?;
            let sim = match (&loaded.simulator, &loaded.qsci) {
                (Some(s), _) => s.clone(),
                (None, Some(q)) => q.simulator()?,
                (None, None) => {
                    return Err(Error::InvalidProtocol(
                        "an explicit verifier needs a simulator (`sim=` or `sim_density=`)".into(),
                    ))
                }
            };
            let inst = protocol_to_qsci(&loaded.spec, &sim)?;
            let d = distance_to_identity(&inst)?;
            let mut rep = RunReport::new("reduce protocol");
            rep.digest("spec", &bytes);
            rep.int("q_s", loaded.spec.q_s() as u64)
                .float("alpha", inst.alpha())
                .float("beta", inst.beta())
                .float("distance", d);
            let prov = provenance("protocol", spec, &bytes, &[]);
            files::write_qsci_instance(output, &inst, &prov)?;
            rep.text("output", output.display().to_string());
            Ok(rep)
        }
        ReduceCommand::Bqp {
            circuit,
            accept_qubit,
            copies,
            output,
        } => {
            let bytes = read_bytes(circuit)?;
            let c = files::load_circuit(circuit)?;
            let p = c.probability_of_one(*accept_qubit)?;
            let red = bqp_to_1qsci(&c, *accept_qubit, *copies)?;
            let d = distance_to_identity(&red.instance)?;
            let mut rep = RunReport::new("reduce bqp");
            rep.digest("circuit", &bytes);
            rep.int("accept_qubit", *accept_qubit as u64)
                .int("copies", *copies as u64)
                .float("accept_probability", p)
                .float("alpha", red.instance.alpha())
                .float("beta", red.instance.beta())
                .float("distance", d);
            let prov = provenance(
                "bqp",
                circuit,
                &bytes,
                &[
                    ("accept_qubit", accept_qubit.to_string()),
                    ("copies", copies.to_string()),
                ],
            );
            files::write_qsci_instance(output, &red.instance, &prov)?;
            rep.text("output", output.display().to_string());
            Ok(rep)
        }
        ReduceCommand::Amplify {
            instance,
            copies,
            output,
        } => {
            let bytes = read_bytes(instance)?;
            let inst = match files::load_instance(instance)? {
                Instance::Qsci(i) => i,
                Instance::Qsd(_) => {
                    return Err(Error::InvalidInstance(
                        "amplify takes a qsci instance".into(),
                    ))
                }
            };
            let before = distance_to_identity(&inst)?;
            let amplified = amplify(&inst, *copies)?;
            let after = distance_to_identity(&amplified)?;
            let mut rep = RunReport::new("reduce amplify");
            rep.digest("instance", &bytes);
            rep.int("copies", *copies as u64)
                .float("distance_before", before)
                .float(
                    "distance_lower_bound",
                    amplified_distance_bound(before, *copies),
                )
                .float("alpha", amplified.alpha())
                .float("beta", amplified.beta())
                .float("distance", after);
            let prov = provenance(
                "amplify",
                instance,
                &bytes,
                &[("copies", copies.to_string())],
            );
            files::write_qsci_instance(output, &amplified, &prov)?;
            rep.text("output", output.display().to_string());
            Ok(rep)
        }
    }
}

fn cmd_protocol(cmd: &ProtocolCommand) -> Result<RunReport> {
    let path = match cmd {
        ProtocolCommand::Run(a) | ProtocolCommand::Zk(a) => &a.spec,
        ProtocolCommand::Cheat { spec, .. } => spec,
    };
    let bytes = read_bytes(path)?;
    let loaded = files::load_protocol(path)?;
    let spec = &loaded.spec;
    let name = match cmd {
        ProtocolCommand::Run(_) => "protocol run",
        ProtocolCommand::Cheat { .. } => "protocol cheat",
        ProtocolCommand::Zk(_) => "protocol zk",
    };
    let mut rep = RunReport::new(name);
    rep.digest("spec", &bytes);
    rep.int("q_v", spec.q_v() as u64)
        .int("q_m", spec.q_m() as u64)
        .int("q_p", spec.q_p() as u64)
        .int("q_s", spec.q_s() as u64);
    let qsci = || {
        loaded.qsci.as_ref().ok_or_else(|| {
            Error::InvalidProtocol(format!("`{name}` needs a spec built from `qsci_circuit`"))
        })
    };
    match cmd {
        ProtocolCommand::Run(_) => {
            let prover = honest_prover(qsci()?)?;
            rep.float("acceptance", acceptance_probability(spec, &prover)?);
        }
        ProtocolCommand::Cheat {
            seed,
            restarts,
            iters,
            ..
        } => {
            if let Some(q) = &loaded.qsci {
                rep.float("bound", optimal_cheat_bound(q)?);
            }
            let search =
                numeric_cheat_search(spec, *restarts, *iters, *seed, Execution::default())?;
            rep.int("seed", *seed)
                .int("restarts", *restarts as u64)
                .int("iters", *iters as u64)
                .float("search_best", search.best_acceptance);
        }
        ProtocolCommand::Zk(_) => {
            let q = qsci()?;
            let prover = honest_prover(q)?;
            let (sim, which) = match &loaded.simulator {
                Some(s) => (s.clone(), "file"),
                None => (q.simulator()?, "prescribed"),
            };
            rep.text("simulator", which)
                .float("zk_distance", zk_audit(spec, &prover, &sim)?);
        }
    }
    rep.int("dim_cap", dim_cap() as u64);
    Ok(rep)
}
