//! `psieq`: approximate pure Nash equilibria in weighted congestion games
//! with polynomial latencies.
//!
//! Subcommands: `gen` (seeded instances), `solve` (phased best-response run
//! with report and optional move log), `verify` (best-deviation ratios of a
//! state), `oracle` (brute-force sweeps on enumerable games), `dynamics`
//! (improvement-move graph). Exit codes: 0 success, 1 verification or audit
//! failure, 2 input error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use psieq_core::dynamics::{verify_approx_equilibrium, CostRatio, Mode};
use psieq_core::format::{
    cost_ratio_json, move_log_lines, parse_instance, parse_state, rational_json,
    serialize_instance, serialize_state, solve_report,
};
use psieq_core::game::{Choice, Game, State, StrategySpace};
use psieq_core::generate::{generate, Family, GeneratorSpec};
use psieq_core::oracle::{
    check_partial_stretch, dynamics_graph, exact_equilibria, measure_stretch, min_potential_state,
    state_count, OracleOptions,
};
use psieq_core::scalar::{parse_rational, rational_string, Scalar};
use psieq_core::solver::{audit_log, derive_params, solve, MoverPolicy, SolveError, SolveOptions};
use serde_json::json;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_FAILED: u8 = 1;
const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(name = "psieq", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Psi,
    Weighted,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Psi => Mode::Psi,
            ModeArg::Weighted => Mode::Weighted,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Maxcost,
    Minid,
}

impl From<PolicyArg> for MoverPolicy {
    fn from(p: PolicyArg) -> MoverPolicy {
        match p {
            PolicyArg::Maxcost => MoverPolicy::MaxCost,
            PolicyArg::Minid => MoverPolicy::MinId,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Random,
    Parallel,
    Grid,
    Sp,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded instance (and optionally an initial state).
    Gen(GenArgs),
    /// Run the phased best-response solver and emit a report.
    Solve(SolveArgs),
    /// Verify the best-deviation ratios of a state.
    Verify(VerifyArgs),
    /// Brute-force sweeps over all states of an enumerable game.
    Oracle(OracleArgs),
    /// Improvement-move graph of an enumerable game.
    Dynamics(DynamicsArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "random")]
    family: FamilyArg,
    #[arg(long, default_value_t = 2)]
    players: usize,
    #[arg(long, default_value_t = 1)]
    degree: u32,
    /// Resource count (random family).
    #[arg(long, default_value_t = 4)]
    resources: usize,
    /// Strategies per player (random family).
    #[arg(long, default_value_t = 2)]
    strategies: usize,
    /// Link count (parallel family).
    #[arg(long, default_value_t = 3)]
    links: usize,
    #[arg(long, default_value_t = 3)]
    rows: usize,
    #[arg(long, default_value_t = 3)]
    cols: usize,
    /// Edge count (series-parallel family).
    #[arg(long, default_value_t = 6)]
    edges: usize,
    #[arg(long, default_value_t = 4)]
    wmax: u64,
    /// Weight denominators are uniform in 1..=wden (1 keeps weights integral).
    #[arg(long, default_value_t = 1)]
    wden: u64,
    #[arg(long, default_value_t = 3)]
    amax: u64,
    /// Percent chance that each latency coefficient is present.
    #[arg(long, default_value_t = 60)]
    density: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Instance file to write (stdout when omitted).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write the generated initial state.
    #[arg(long)]
    state_out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    input: PathBuf,
    /// Initial state file; defaults to first strategies / fewest-hop paths.
    #[arg(long)]
    state: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "psi")]
    mode: ModeArg,
    /// Rational step parameter, e.g. `1/10`.
    #[arg(long)]
    gamma: String,
    /// Report file (stdout when omitted).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write the final state here.
    #[arg(long)]
    state_out: Option<PathBuf>,
    /// Stream the move log here, one JSON object per line.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000_000)]
    move_cap: usize,
    /// Accept a gamma outside the admissible range (guarantees void).
    #[arg(long)]
    force: bool,
    #[arg(long, value_enum, default_value = "maxcost")]
    policy: PolicyArg,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    state: PathBuf,
    #[arg(long, value_enum, default_value = "psi")]
    mode: ModeArg,
    /// Fail (exit 1) when rho_achieved exceeds this rational bound.
    #[arg(long)]
    rho: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "psi")]
    mode: ModeArg,
    /// Approximation factor for the equilibrium and stretch sweeps.
    #[arg(long, default_value = "1")]
    rho: String,
    /// Enumeration cap.
    #[arg(long, default_value_t = 200_000)]
    cap: usize,
    /// Partial-stretch samples (0 disables the check).
    #[arg(long, default_value_t = 0)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct DynamicsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "psi")]
    mode: ModeArg,
    #[arg(long, default_value_t = 200_000)]
    cap: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Failure paired with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn run(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_FAILED,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Dynamics(args) => cmd_dynamics(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write_output(path: Option<&PathBuf>, content: &str) -> Result<(), Failure> {
    match path {
        Some(p) => {
            fs::write(p, content).map_err(|e| Failure::input(format!("{}: {e}", p.display())))
        }
        None => print_line(content),
    }
}

/// Prints to stdout, treating a closed pipe as a clean stop.
fn print_line(content: &str) -> Result<(), Failure> {
    use std::io::Write;
    let mut out = std::io::stdout();
    match out
        .write_all(content.as_bytes())
        .and_then(|_| out.write_all(b"\n"))
    {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(Failure::input(format!("stdout: {e}"))),
    }
}

fn load_game(path: &Path) -> Result<Game, Failure> {
    let text = read_file(path)?;
    let game = parse_instance(&text).map_err(|e| Failure::input(e.to_string()))?;
    let violations = game.validate();
    if !violations.is_empty() {
        let listing = violations
            .iter()
            .map(|v| format!("  {v}"))
            .collect::<Vec<_>>()
            .join("\n");
        return Err(Failure::input(format!("invalid instance:\n{listing}")));
    }
    Ok(game)
}

fn load_gamma(text: &str) -> Result<Scalar, Failure> {
    parse_rational(text).map_err(|e| Failure::input(format!("--gamma: {e}")))
}

fn default_state(game: &Game) -> Result<State, Failure> {
    let mut choices = Vec::with_capacity(game.player_count());
    for p in &game.players {
        let choice = match &p.strategies {
            StrategySpace::Explicit(_) => Choice::Strategy(0),
            StrategySpace::Network { source, target } => {
                let net = game.network.as_ref().expect("network player");
                let path = net
                    .shortest_hop_path(*source, *target)
                    .ok_or_else(|| Failure::input(format!("player {}: no path", p.id)))?;
                Choice::Path(path)
            }
        };
        choices.push(choice);
    }
    Ok(State::new(choices))
}

fn oracle_threads() -> usize {
    std::env::var("PSIEQ_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t >= 1)
        .unwrap_or(1)
}

fn cmd_gen(args: GenArgs) -> Result<u8, Failure> {
    let family = match args.family {
        FamilyArg::Random => Family::RandomExplicit {
            resources: args.resources,
            strategies_per_player: args.strategies,
        },
        FamilyArg::Parallel => Family::ParallelLinks { links: args.links },
        FamilyArg::Grid => Family::Grid {
            rows: args.rows,
            cols: args.cols,
        },
        FamilyArg::Sp => Family::SeriesParallel { edges: args.edges },
    };
    let spec = GeneratorSpec {
        family,
        players: args.players,
        degree: args.degree,
        weight_max: args.wmax,
        weight_den_max: args.wden,
        coeff_max: args.amax,
        coeff_density: args.density,
    };
    let (game, state) = generate(&spec, args.seed).map_err(|e| Failure::input(e.to_string()))?;
    write_output(args.output.as_ref(), &serialize_instance(&game))?;
    if let Some(path) = &args.state_out {
        fs::write(path, serialize_state(&game, &state))
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    }
    Ok(EXIT_OK)
}

fn cmd_solve(args: SolveArgs) -> Result<u8, Failure> {
    let game = load_game(&args.input)?;
    let initial = match &args.state {
        Some(path) => {
            let text = read_file(path)?;
            parse_state(&game, &text).map_err(|e| Failure::input(e.to_string()))?
        }
        None => default_state(&game)?,
    };
    let mode: Mode = args.mode.into();
    let gamma = load_gamma(&args.gamma)?;
    let opts = SolveOptions {
        force: args.force,
        move_cap: args.move_cap,
        policy: args.policy.into(),
    };
    let params = derive_params(&game, &initial, &gamma, mode, &opts)
        .map_err(|e| Failure::input(e.to_string()))?;
    let outcome = solve(&game, &initial, &params).map_err(|e| match e {
        SolveError::MoveCapExceeded { .. } => Failure::run(e.to_string()),
        other => Failure::input(other.to_string()),
    })?;
    let audit = audit_log(&game, &outcome.log, &params);
    let report = verify_approx_equilibrium(&game, &outcome.final_state, mode, None)
        .map_err(|e| Failure::run(e.to_string()))?;
    let bound_ok = match params.certified_rho_bound(game.degree) {
        Some(bound) => report.rho_achieved.at_most(&bound),
        None => true,
    };
    let envelope = solve_report(&game, &params, &outcome.log, &report.rho_achieved, &audit);
    write_output(
        args.output.as_ref(),
        &serde_json::to_string_pretty(&envelope).expect("report serialization"),
    )?;
    if let Some(path) = &args.state_out {
        fs::write(path, serialize_state(&game, &outcome.final_state))
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    }
    if let Some(path) = &args.log {
        fs::write(path, move_log_lines(&game, &outcome.log).join("\n") + "\n")
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    }
    if audit.passed && bound_ok {
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_FAILED)
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<u8, Failure> {
    let game = load_game(&args.input)?;
    let text = read_file(&args.state)?;
    let state = parse_state(&game, &text).map_err(|e| Failure::input(e.to_string()))?;
    let mode: Mode = args.mode.into();
    let report = verify_approx_equilibrium(&game, &state, mode, None)
        .map_err(|e| Failure::run(e.to_string()))?;
    let rho = args
        .rho
        .as_deref()
        .map(|r| parse_rational(r).map_err(|e| Failure::input(format!("--rho: {e}"))))
        .transpose()?;
    let verdicts: Vec<_> = report
        .verdicts
        .iter()
        .map(|v| {
            json!({
                "player": game.players[v.player].id.clone(),
                "cost": rational_json(&v.current_cost),
                "best_cost": rational_json(&v.best_cost),
                "ratio": cost_ratio_json(&v.ratio),
            })
        })
        .collect();
    let envelope = json!({
        "mode": mode.as_str(),
        "rho_achieved": cost_ratio_json(&report.rho_achieved),
        "rho_threshold": rho.as_ref().map(rational_json),
        "players": verdicts,
    });
    match &report.rho_achieved {
        CostRatio::Finite(r) => print_line(&format!("rho_achieved = {}", rational_string(r)))?,
        CostRatio::Unbounded => print_line("rho_achieved = unbounded")?,
    }
    if let Some(path) = &args.output {
        fs::write(path, serde_json::to_string_pretty(&envelope).expect("report"))
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    }
    match rho {
        Some(bound) if !report.rho_achieved.at_most(&bound) => Ok(EXIT_FAILED),
        _ => Ok(EXIT_OK),
    }
}

fn cmd_oracle(args: OracleArgs) -> Result<u8, Failure> {
    let game = load_game(&args.input)?;
    let mode: Mode = args.mode.into();
    let rho = parse_rational(&args.rho).map_err(|e| Failure::input(format!("--rho: {e}")))?;
    let opts = OracleOptions {
        cap: args.cap,
        threads: oracle_threads(),
    };
    let states = state_count(&game).map_err(|e| Failure::input(e.to_string()))?;
    let equilibria = exact_equilibria(&game, mode, &CostRatio::Finite(rho.clone()), &opts)
        .map_err(|e| Failure::input(e.to_string()))?;
    let (min_state, min_phi) =
        min_potential_state(&game, &opts).map_err(|e| Failure::input(e.to_string()))?;
    let stretch =
        measure_stretch(&game, &rho, &opts).map_err(|e| Failure::input(e.to_string()))?;
    let partial = if args.samples > 0 {
        Some(
            check_partial_stretch(&game, &rho, args.samples, args.seed, &opts)
                .map_err(|e| Failure::input(e.to_string()))?,
        )
    } else {
        None
    };
    let partial_ok = partial.as_ref().map(|r| r.passed()).unwrap_or(true);
    let envelope = json!({
        "mode": mode.as_str(),
        "rho": rational_json(&rho),
        "states": states.to_string(),
        "equilibria": equilibria.len(),
        "min_potential": rational_json(&min_phi),
        "min_potential_state": serde_json::from_str::<serde_json::Value>(
            &serialize_state(&game, &min_state)).expect("state json"),
        "stretch": rational_json(&stretch),
        "partial_stretch": partial.map(|r| json!({
            "samples": r.samples,
            "equilibria_checked": r.equilibria_checked,
            "comparisons": r.comparisons,
            "violations": r.violations,
        })),
    });
    write_output(
        args.output.as_ref(),
        &serde_json::to_string_pretty(&envelope).expect("report"),
    )?;
    Ok(if partial_ok { EXIT_OK } else { EXIT_FAILED })
}

fn cmd_dynamics(args: DynamicsArgs) -> Result<u8, Failure> {
    let game = load_game(&args.input)?;
    let mode: Mode = args.mode.into();
    let opts = OracleOptions {
        cap: args.cap,
        threads: oracle_threads(),
    };
    let graph = dynamics_graph(&game, mode, &opts).map_err(|e| Failure::input(e.to_string()))?;
    let witness = graph.cycle_witness.as_ref().map(|cycle| {
        cycle
            .iter()
            .map(|&ei| {
                let e = &graph.edges[ei];
                json!({
                    "player": game.players[e.player].id.clone(),
                    "from": serde_json::from_str::<serde_json::Value>(
                        &serialize_state(&game, &graph.states[e.from])).expect("state json"),
                    "to": serde_json::from_str::<serde_json::Value>(
                        &serialize_state(&game, &graph.states[e.to])).expect("state json"),
                })
            })
            .collect::<Vec<_>>()
    });
    let envelope = json!({
        "mode": mode.as_str(),
        "states": graph.states.len(),
        "edges": graph.edges.len(),
        "sinks": graph.sinks.len(),
        "acyclic": graph.acyclic,
        "cycle_witness": witness,
    });
    write_output(
        args.output.as_ref(),
        &serde_json::to_string_pretty(&envelope).expect("report"),
    )?;
    Ok(EXIT_OK)
}
