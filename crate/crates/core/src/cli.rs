//! Command-line front end.
//!
//! Exit codes: 0 success, 1 internal error, 2 parse or validation error,
//! 3 synthesis precondition not met, 4 simulation precondition not met.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::canonical::CanonicalQR;
use crate::controllability::{self, classify_with_system, ControllabilityReport, HamiltonianControlSystem};
use crate::demo;
use crate::error::Error;
use crate::matops::{self, ComplexMatrix, MatrixJson, ToleranceConfig};
use crate::quantum::{builtin, purity, random_density, DensityMatrix, Measurement, PureState};
use crate::simulate::{self, FeedbackLaw};
use crate::synthesis::{ddc_plan_for_measurement, FeedbackPlan};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_SYNTHESIS: i32 = 3;
pub const EXIT_SIMULATION: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "feedctl", version, about = "Discrete-time quantum feedback: classify, synthesize, simulate")]
pub struct Cli {
    /// Uniform override for all numerical tolerances.
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Controllability verdicts for a measurement.
    Classify(ClassifyArgs),
    /// Canonical QR factors of every measurement operator.
    Canonical(CanonicalArgs),
    /// Finite-time feedback plan taking rho0 to rhof.
    Synthesize(SynthesizeArgs),
    /// Averaged run and optional trajectory ensemble.
    Simulate(SimulateArgs),
    /// Worked examples with embedded checks.
    Demo(DemoArgs),
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Measurement JSON file or builtin name.
    #[arg(long)]
    pub measurement: String,
    /// JSON file with `drift`, `controls` and `sample_time` for the open-loop test.
    #[arg(long)]
    pub hamiltonians: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CanonicalArgs {
    #[arg(long)]
    pub measurement: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    #[arg(long)]
    pub measurement: String,
    /// Initial state: JSON file or builtin (`maximally-mixed(N)`, `basis(N,k)`, `plus(N)`, `random(N,rank,seed)`).
    #[arg(long)]
    pub rho0: String,
    /// Target state, same forms as `--rho0`.
    #[arg(long)]
    pub rhof: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub measurement: String,
    #[arg(long)]
    pub rho0: String,
    /// Feedback plan JSON; without it, identity controls are used unless `--greedy` is set.
    #[arg(long, conflicts_with = "greedy")]
    pub plan: Option<PathBuf>,
    /// Greedy stabilizing law towards the (pure) `--target` state.
    #[arg(long, requires = "target")]
    pub greedy: bool,
    /// Reference state for distances; for `--greedy` it must be pure.
    #[arg(long, alias = "rhof")]
    pub target: Option<String>,
    /// Number of steps (defaults to the plan length, or 20).
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of sampled trajectories.
    #[arg(long, default_value_t = 0)]
    pub ensemble: usize,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Format of the summary written to stdout.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Also write the full per-trajectory states as JSON.
    #[arg(long)]
    pub states: bool,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    /// One of example1, example2, example3.
    pub name: String,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
    /// Printed to stdout before exiting.
    payload: Option<String>,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            payload: None,
        }
    }
}

fn invalid(e: Error) -> Failure {
    let code = match e {
        Error::Internal(_) => EXIT_INTERNAL,
        _ => EXIT_INVALID,
    };
    Failure::new(code, e.to_string())
}

fn internal(e: Error) -> Failure {
    Failure::new(EXIT_INTERNAL, e.to_string())
}

type CmdResult = std::result::Result<(), Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            if let Some(p) = &f.payload {
                let _ = writeln!(stdout, "{p}");
            }
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> CmdResult {
    let tol = match cli.tol {
        Some(x) => ToleranceConfig::uniform(x).map_err(invalid)?,
        None => ToleranceConfig::default(),
    };
    match &cli.command {
        Command::Classify(a) => cmd_classify(a, &tol, stdout),
        Command::Canonical(a) => cmd_canonical(a, &tol, stdout),
        Command::Synthesize(a) => cmd_synthesize(a, &tol, stdout),
        Command::Simulate(a) => cmd_simulate(a, &tol, stdout),
        Command::Demo(a) => cmd_demo(a, &tol, stdout),
    }
}

fn read_file(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_INVALID, format!("cannot read {}: {e}", path.display())))
}

/// Loads a measurement from a JSON file, or resolves a builtin name.
pub fn load_measurement(input: &str, tol: &ToleranceConfig) -> crate::Result<Measurement> {
    let path = Path::new(input);
    if path.is_file() {
        Measurement::from_json_str(&fs::read_to_string(path)?, tol)
    } else {
        builtin::from_label(input, tol)
    }
}

fn split_call(input: &str) -> Option<(&str, Vec<&str>)> {
    let open = input.find('(')?;
    let inner = input[open + 1..].strip_suffix(')')?;
    Some((&input[..open], inner.split(',').map(str::trim).collect()))
}

/// Loads a density matrix from a JSON file, or one of the builtin forms
/// `maximally-mixed(N)`, `basis(N,k)` (0-based `k`), `plus(N)`, `random(N,rank,seed)`.
pub fn load_state(input: &str, tol: &ToleranceConfig) -> crate::Result<DensityMatrix> {
    let path = Path::new(input);
    if path.is_file() {
        let j: MatrixJson = serde_json::from_str(&fs::read_to_string(path)?)?;
        return DensityMatrix::new(ComplexMatrix::try_from(j)?, tol);
    }
    let bad = || Error::Parse(format!("'{input}' is neither a file nor a builtin state"));
    let (name, args) = split_call(input.trim()).ok_or_else(bad)?;
    let nums = args
        .iter()
        .map(|a| a.parse::<u64>().map_err(|e| Error::Parse(format!("'{a}': {e}"))))
        .collect::<crate::Result<Vec<u64>>>()?;
    let dim = |n: u64| {
        if n == 0 {
            Err(Error::InvalidArgument("dimension must be positive".into()))
        } else {
            Ok(n as usize)
        }
    };
    match (name, nums.as_slice()) {
        ("maximally-mixed", [n]) => Ok(DensityMatrix::maximally_mixed(dim(*n)?)),
        ("basis", [n, k]) => {
            let n = dim(*n)?;
            if *k as usize >= n {
                return Err(Error::InvalidArgument(format!("basis index {k} out of range for dimension {n}")));
            }
            Ok(PureState::basis(n, *k as usize).density())
        }
        ("plus", [n]) => {
            let n = dim(*n)?;
            let v = matops::ComplexVector::from_element(n, matops::ONE);
            Ok(PureState::normalized(v)?.density())
        }
        ("random", [n, rank, seed]) => random_density(dim(*n)?, *rank as usize, *seed),
        _ => Err(bad()),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct HamiltonianFile {
    drift: MatrixJson,
    controls: Vec<MatrixJson>,
    sample_time: f64,
}

fn load_system(path: &Path, tol: &ToleranceConfig) -> crate::Result<HamiltonianControlSystem> {
    let f: HamiltonianFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    let controls = f
        .controls
        .into_iter()
        .map(ComplexMatrix::try_from)
        .collect::<crate::Result<Vec<_>>>()?;
    HamiltonianControlSystem::new(ComplexMatrix::try_from(f.drift)?, controls, f.sample_time, tol)
}

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> CmdResult {
    match out {
        Some(path) => fs::write(path, format!("{text}\n"))
            .map_err(|e| Failure::new(EXIT_INTERNAL, format!("cannot write {}: {e}", path.display()))),
        None => writeln!(stdout, "{text}").map_err(|e| Failure::new(EXIT_INTERNAL, e.to_string())),
    }
}

fn to_json<T: Serialize>(value: &T) -> std::result::Result<String, Failure> {
    serde_json::to_string_pretty(value).map_err(|e| Failure::new(EXIT_INTERNAL, e.to_string()))
}

fn cmd_classify(a: &ClassifyArgs, tol: &ToleranceConfig, stdout: &mut dyn Write) -> CmdResult {
    let m = load_measurement(&a.measurement, tol).map_err(invalid)?;
    let system = match &a.hamiltonians {
        Some(p) => Some(load_system(p, tol).map_err(invalid)?),
        None => None,
    };
    let report = classify_with_system(&m, system.as_ref(), tol).map_err(invalid)?;
    emit(&to_json(&report)?, a.out.as_deref(), stdout)
}

#[derive(Serialize)]
struct CanonicalOutput {
    measurement_label: String,
    factors: Vec<CanonicalQR>,
}

fn cmd_canonical(a: &CanonicalArgs, tol: &ToleranceConfig, stdout: &mut dyn Write) -> CmdResult {
    let m = load_measurement(&a.measurement, tol).map_err(invalid)?;
    let factors = controllability::canonical_factors(&m, tol).map_err(internal)?;
    let out = CanonicalOutput {
        measurement_label: m.label().to_string(),
        factors,
    };
    emit(&to_json(&out)?, a.out.as_deref(), stdout)
}

/// Replays `plan` and returns the final averaged state.
fn replay(plan: &FeedbackPlan, m: &Measurement, rho0: &DensityMatrix, tol: &ToleranceConfig) -> crate::Result<DensityMatrix> {
    let states = simulate::run_averaged(rho0, m, &FeedbackLaw::FixedPlan(plan.clone()), plan.len(), tol)?;
    Ok(states.last().expect("non-empty").clone())
}

const REPLAY_TOL: f64 = 1e-9;

fn cmd_synthesize(a: &SynthesizeArgs, tol: &ToleranceConfig, stdout: &mut dyn Write) -> CmdResult {
    let m = load_measurement(&a.measurement, tol).map_err(invalid)?;
    let rho0 = load_state(&a.rho0, tol).map_err(invalid)?;
    let rhof = load_state(&a.rhof, tol).map_err(invalid)?;
    if rho0.dim() != m.dim() || rhof.dim() != m.dim() {
        return Err(Failure::new(
            EXIT_INVALID,
            format!(
                "states of dimension {} and {} for a measurement on {}",
                rho0.dim(),
                rhof.dim(),
                m.dim()
            ),
        ));
    }
    let report: ControllabilityReport = controllability::classify(&m, tol).map_err(invalid)?;
    if !report.finite_time_ddc {
        return Err(Failure {
            code: EXIT_SYNTHESIS,
            message: format!("{} does not admit finite-time synthesis", m.label()),
            payload: Some(to_json(&report)?),
        });
    }
    let plan = ddc_plan_for_measurement(&m, &rho0, &rhof, tol).map_err(internal)?;
    let reached = replay(&plan, &m, &rho0, tol).map_err(internal)?;
    let dist = reached.trace_distance(&rhof).map_err(internal)?;
    if dist > REPLAY_TOL {
        return Err(Failure::new(
            EXIT_INTERNAL,
            format!("synthesized plan misses the target by {dist:.3e}"),
        ));
    }
    log::info!("plan of {} steps, replay distance {dist:.3e}", plan.len());
    emit(&plan.to_json().map_err(internal)?, a.out.as_deref(), stdout)
}

#[derive(Serialize)]
struct SimulationSummary {
    measurement_label: String,
    law: String,
    steps: usize,
    seed: u64,
    ensemble: usize,
    final_state: DensityMatrix,
    final_purity: f64,
    convergence: Option<simulate::ConvergenceReport>,
    /// `outcome_counts[t][k]`: trajectories that saw outcome `k` at step `t + 1`.
    outcome_counts: Option<Vec<Vec<usize>>>,
}

fn simulation_failure(e: Error) -> Failure {
    match e {
        Error::Infeasible | Error::PlanExhausted { .. } | Error::Dimension(_) | Error::NotUnitary { .. } => {
            Failure::new(EXIT_SIMULATION, e.to_string())
        }
        Error::Internal(_) => internal(e),
        _ => Failure::new(EXIT_SIMULATION, e.to_string()),
    }
}

fn cmd_simulate(a: &SimulateArgs, tol: &ToleranceConfig, stdout: &mut dyn Write) -> CmdResult {
    let m = load_measurement(&a.measurement, tol).map_err(invalid)?;
    let rho0 = load_state(&a.rho0, tol).map_err(invalid)?;
    let target = match &a.target {
        Some(s) => Some(load_state(s, tol).map_err(invalid)?),
        None => None,
    };
    let (law, law_name, stationary) = if let Some(p) = &a.plan {
        let plan = FeedbackPlan::from_json(&read_file(p)?).map_err(invalid)?;
        (FeedbackLaw::FixedPlan(plan), "plan".to_string(), None)
    } else if a.greedy {
        let t = target.as_ref().expect("clap enforces --target");
        let top = t.spectrum()[0];
        if (top - 1.0).abs() > 10.0 * tol.eq_tol {
            return Err(Failure::new(
                EXIT_INVALID,
                format!("greedy target must be pure (largest eigenvalue {top})"),
            ));
        }
        let v = matops::eig_hermitian(t.matrix(), tol).map_err(invalid)?.principal_vector();
        let psi = PureState::normalized(v).map_err(invalid)?;
        let law = simulate::greedy_stabilizing_law(&m, &psi, tol).map_err(simulation_failure)?;
        let controls = simulate::greedy_asymptotic_controls(&m, &psi).map_err(simulation_failure)?;
        (law, "greedy".to_string(), Some(controls))
    } else {
        let ids = vec![matops::identity(m.dim()); m.len()];
        (FeedbackLaw::Stationary(ids.clone()), "identity".to_string(), Some(ids))
    };
    let steps = a.steps.or(law.horizon()).unwrap_or(20);

    let states = simulate::run_averaged(&rho0, &m, &law, steps, tol).map_err(simulation_failure)?;
    let convergence = match &target {
        Some(t) => Some(
            simulate::convergence_report(&states, t, stationary.as_deref().map(|c| (&m, c)), tol)
                .map_err(simulation_failure)?,
        ),
        None => None,
    };
    let records = if a.ensemble > 0 {
        Some(
            simulate::run_ensemble(&rho0, &m, &law, steps, a.seed, a.ensemble, tol)
                .map_err(simulation_failure)?,
        )
    } else {
        None
    };
    let outcome_counts = records.as_ref().map(|recs| {
        (0..steps)
            .map(|t| {
                let width = m.len().max(recs.iter().map(|r| r.outcomes[t] + 1).max().unwrap_or(0));
                let mut counts = vec![0usize; width];
                for r in recs {
                    counts[r.outcomes[t]] += 1;
                }
                counts
            })
            .collect()
    });

    let final_state = states.last().expect("non-empty").clone();
    let summary = SimulationSummary {
        measurement_label: m.label().to_string(),
        law: law_name,
        steps,
        seed: a.seed,
        ensemble: a.ensemble,
        final_purity: purity(&final_state),
        final_state,
        convergence,
        outcome_counts,
    };

    if let Some(dir) = &a.out {
        let io = |e: std::io::Error| Failure::new(EXIT_INTERNAL, format!("{}: {e}", dir.display()));
        fs::create_dir_all(dir).map_err(io)?;
        fs::write(dir.join("averaged.json"), to_json(&states)? + "\n").map_err(io)?;
        fs::write(dir.join("summary.json"), to_json(&summary)? + "\n").map_err(io)?;
        if let Some(c) = &summary.convergence {
            fs::write(dir.join("convergence.json"), to_json(c)? + "\n").map_err(io)?;
        }
        if let Some(recs) = &records {
            let f = fs::File::create(dir.join("trajectories.csv")).map_err(io)?;
            simulate::write_trajectories_csv(recs, target.as_ref(), f).map_err(internal)?;
            if a.states {
                let f = fs::File::create(dir.join("trajectories.json")).map_err(io)?;
                simulate::write_trajectories_json(recs, f).map_err(internal)?;
            }
        }
    }

    match a.format {
        Format::Json => emit(&to_json(&summary)?, None, stdout),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let err = |e: csv::Error| Failure::new(EXIT_INTERNAL, e.to_string());
            w.write_record(["step", "purity", "trace_distance_to_target"]).map_err(err)?;
            for (t, s) in states.iter().enumerate() {
                let d = match &target {
                    Some(tg) => format!("{:.12e}", s.trace_distance(tg).map_err(internal)?),
                    None => String::new(),
                };
                w.write_record([t.to_string(), format!("{:.12e}", purity(s)), d]).map_err(err)?;
            }
            let bytes = w.into_inner().map_err(|e| Failure::new(EXIT_INTERNAL, e.to_string()))?;
            stdout
                .write_all(&bytes)
                .map_err(|e| Failure::new(EXIT_INTERNAL, e.to_string()))
        }
    }
}

fn cmd_demo(a: &DemoArgs, tol: &ToleranceConfig, stdout: &mut dyn Write) -> CmdResult {
    let report = demo::run(&a.name, tol).map_err(invalid)?;
    write!(stdout, "{report}").map_err(|e| Failure::new(EXIT_INTERNAL, e.to_string()))?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::new(EXIT_INTERNAL, format!("demo {} failed its checks", a.name)))
    }
}
