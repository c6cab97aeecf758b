//! The `aoi-sched` command line interface.
//!
//! Subcommands map onto the library surface: `threshold` searches the
//! optimal threshold at a fixed energy price, `solve` bisects the price
//! to meet the energy budget and prints the mixture policy, `sweep`
//! tabulates either of those along a parameter grid as CSV, `simulate`
//! runs the Monte Carlo estimator, `oracle` cross-checks the closed form
//! against the numeric chain, and `validate` echoes a parsed config.
//!
//! All primary output is JSON (CSV for `sweep`) on stdout or `--out`.
//! Failures print one line, `error[<code>]: <message>`, to stderr and
//! exit nonzero. `AOI_SCHED_THREADS` caps the worker pool used for
//! sweeps.

use std::fs;
use std::io::Write as IoWrite;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::chain_oracle::{greedy_simulate, oracle_cost, simulate, SimPolicy, SimResult};
use crate::closed_form::{avg_lagrangian_cost, CostReport};
use crate::lagrange::{bisect, mixture_age, mixture_energy, BisectionTrace};
use crate::mdp_oracle::{extract_threshold, rvi, TruncatedMdp};
use crate::model::{pmf_from_erasures, Config, MixturePolicy, SystemParams, ThresholdPolicy};
use crate::threshold_search::optimal_threshold;
use crate::{invalid, Error};

#[derive(Parser)]
#[command(
    name = "aoi-sched",
    version,
    about = "Transmission scheduling that minimizes age of information under an energy budget"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal threshold policy for a fixed energy price.
    Threshold(ThresholdArgs),
    /// Budget-meeting mixture policy via bisection on the energy price.
    Solve(SolveArgs),
    /// CSV table of solutions along a parameter grid.
    Sweep(SweepArgs),
    /// Monte Carlo estimate of a threshold or mixture policy.
    Simulate(SimulateArgs),
    /// Closed form versus numeric chain, side by side.
    Oracle(OracleArgs),
    /// Parse a config, validate it, and echo the derived quantities.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the JSON system config.
    #[arg(long)]
    config: PathBuf,
    /// Write the output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ThresholdArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Energy price.
    #[arg(long)]
    beta: f64,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Override the config's energy budget.
    #[arg(long = "e-max")]
    e_max: Option<f64>,
    /// Bisection stops when the price bracket is this narrow.
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Parameter varied along the grid.
    #[arg(long, value_enum)]
    axis: Axis,
    /// Explicit grid values (comma separated).
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["from", "to", "steps"])]
    values: Option<Vec<f64>>,
    /// Inclusive grid start (with --to and --steps).
    #[arg(long, requires = "to", requires = "steps")]
    from: Option<f64>,
    /// Inclusive grid end.
    #[arg(long, requires = "from")]
    to: Option<f64>,
    /// Number of grid points.
    #[arg(long, requires = "from")]
    steps: Option<u64>,
    /// How each grid point is solved.
    #[arg(long, value_enum, default_value_t = Solver::ClosedForm)]
    solver: Solver,
    /// Fixed energy price; with it the sweep solves the priced problem,
    /// without it the budget-constrained one (not used on the beta axis).
    #[arg(long)]
    beta: Option<f64>,
    /// Override the config's energy budget.
    #[arg(long = "e-max")]
    e_max: Option<f64>,
    /// Bisection width for budget-constrained points.
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    /// Slots per simulation (simulate and greedy solvers).
    #[arg(long, default_value_t = 10_000_000)]
    horizon: u64,
    /// Base RNG seed; point i uses seed + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Age cap for the rvi solver (default 8 times the last breakpoint).
    #[arg(long)]
    cap: Option<u64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Simulate this fixed threshold; omit to solve for the budget-meeting
    /// mixture first and simulate that.
    #[arg(long)]
    k: Option<u64>,
    /// Energy price used for the predicted cost report with --k.
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    /// Override the config's energy budget (mixture mode).
    #[arg(long = "e-max")]
    e_max: Option<f64>,
    /// Bisection width (mixture mode).
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    #[arg(long, default_value_t = 10_000_000)]
    horizon: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Threshold to evaluate.
    #[arg(long)]
    k: u64,
    /// Energy price.
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Axis {
    Beta,
    P,
    /// Homogeneous sensor erasure probability.
    Q,
    /// Per-slot probability that the distortion requirement is met
    /// (replaces the sample pmf with mass W at M and 1-W at 0).
    W,
    #[value(name = "e_max", alias = "e-max")]
    EMax,
}

impl Axis {
    fn name(self) -> &'static str {
        match self {
            Axis::Beta => "beta",
            Axis::P => "p",
            Axis::Q => "q",
            Axis::W => "W",
            Axis::EMax => "e_max",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Solver {
    #[value(name = "closed_form", alias = "closed-form")]
    ClosedForm,
    Rvi,
    Simulate,
    Greedy,
}

impl Solver {
    fn name(self) -> &'static str {
        match self {
            Solver::ClosedForm => "closed_form",
            Solver::Rvi => "rvi",
            Solver::Simulate => "simulate",
            Solver::Greedy => "greedy",
        }
    }
}

/// Parses arguments, runs the selected subcommand, and maps failures to
/// a single stderr line plus a nonzero exit.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    let outcome = init_threads().and_then(|()| dispatch(cli));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.code(), e);
            ExitCode::FAILURE
        }
    }
}

fn init_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var("AOI_SCHED_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| invalid("AOI_SCHED_THREADS", format!("{raw:?} is not a positive integer")))?;
    // A second initialization in the same process is harmless.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Threshold(args) => run_threshold(args),
        Command::Solve(args) => run_solve(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Oracle(args) => run_oracle(args),
        Command::Validate(args) => run_validate(args),
    }
}

fn io_error(context: &str, path: &Path, err: std::io::Error) -> Error {
    Error::Io {
        context: format!("{context} {}", path.display()),
        message: err.to_string(),
    }
}

fn load_params(path: &Path) -> Result<SystemParams, Error> {
    let text = fs::read_to_string(path).map_err(|e| io_error("reading", path, e))?;
    Config::from_json(&text)?.to_params()
}

fn emit(common: &CommonArgs, value: &impl Serialize) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value).expect("output types serialize");
    text.push('\n');
    match &common.out {
        Some(path) => fs::write(path, text).map_err(|e| io_error("writing", path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Formats with 12 significant digits, the precision the CSV contract
/// promises.
fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

#[derive(Serialize)]
struct ThresholdOutput {
    k_star: u64,
    evaluations: u64,
    report: CostReport,
}

fn run_threshold(args: ThresholdArgs) -> Result<(), Error> {
    let params = load_params(&args.common.config)?;
    let result = optimal_threshold(&params, args.beta)?;
    let report = avg_lagrangian_cost(&params, result.k_star, args.beta)?;
    emit(
        &args.common,
        &ThresholdOutput {
            k_star: result.k_star,
            evaluations: result.evaluations,
            report,
        },
    )
}

#[derive(Serialize)]
struct SolveOutput {
    policy: MixturePolicy,
    predicted_avg_age: f64,
    predicted_avg_energy: f64,
    trace: BisectionTrace,
}

fn run_solve(args: SolveArgs) -> Result<(), Error> {
    let mut params = load_params(&args.common.config)?;
    if let Some(e_max) = args.e_max {
        params = params.with_e_max(e_max)?;
    }
    let (policy, trace) = bisect(&params, args.epsilon)?;
    emit(
        &args.common,
        &SolveOutput {
            predicted_avg_age: mixture_age(&params, &policy)?,
            predicted_avg_energy: mixture_energy(&params, &policy)?,
            policy,
            trace,
        },
    )
}

#[derive(Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
enum SimulateOutput {
    Threshold {
        threshold: u64,
        beta: f64,
        predicted: CostReport,
        result: SimResult,
    },
    Mixture {
        policy: MixturePolicy,
        predicted_avg_age: f64,
        predicted_avg_energy: f64,
        result: SimResult,
    },
}

fn run_simulate(args: SimulateArgs) -> Result<(), Error> {
    let mut params = load_params(&args.common.config)?;
    if let Some(e_max) = args.e_max {
        params = params.with_e_max(e_max)?;
    }
    let output = match args.k {
        Some(k) => {
            let policy = SimPolicy::from(ThresholdPolicy::new(k)?);
            SimulateOutput::Threshold {
                threshold: k,
                beta: args.beta,
                predicted: avg_lagrangian_cost(&params, k, args.beta)?,
                result: simulate(&params, &policy, args.horizon, args.seed)?,
            }
        }
        None => {
            let (policy, _) = bisect(&params, args.epsilon)?;
            let result = simulate(
                &params,
                &SimPolicy::Mixture(policy.clone()),
                args.horizon,
                args.seed,
            )?;
            SimulateOutput::Mixture {
                predicted_avg_age: mixture_age(&params, &policy)?,
                predicted_avg_energy: mixture_energy(&params, &policy)?,
                policy,
                result,
            }
        }
    };
    emit(&args.common, &output)
}

#[derive(Serialize)]
struct OracleOutput {
    closed_form: CostReport,
    chain_oracle: CostReport,
    relative_gap: f64,
}

fn run_oracle(args: OracleArgs) -> Result<(), Error> {
    let params = load_params(&args.common.config)?;
    let closed = avg_lagrangian_cost(&params, args.k, args.beta)?;
    let oracle = oracle_cost(&params, args.k, args.beta)?;
    let relative_gap = (closed.lagrangian_cost - oracle.lagrangian_cost).abs()
        / closed.lagrangian_cost.abs().max(1.0);
    emit(
        &args.common,
        &OracleOutput {
            closed_form: closed,
            chain_oracle: oracle,
            relative_gap,
        },
    )
}

#[derive(Serialize)]
struct ValidateOutput {
    sensor_count: usize,
    interval_count: usize,
    breakpoints: Vec<u64>,
    levels: Vec<usize>,
    p: f64,
    e_max: f64,
    pmf: Vec<f64>,
    /// `F(h_l)` per distortion level.
    level_tail_probs: Vec<f64>,
    /// `B_l` per distortion level.
    no_reset_probs: Vec<f64>,
}

fn run_validate(args: ValidateArgs) -> Result<(), Error> {
    let params = load_params(&args.common.config)?;
    let spec = params.distortion();
    let level_tail_probs: Vec<f64> = spec.levels().iter().map(|&h| params.tail_prob(h)).collect();
    let no_reset_probs: Vec<f64> = level_tail_probs
        .iter()
        .map(|&f| 1.0 - (1.0 - params.p()) * f)
        .collect();
    emit(
        &args.common,
        &ValidateOutput {
            sensor_count: spec.sensor_count(),
            interval_count: spec.interval_count(),
            breakpoints: spec.breakpoints().to_vec(),
            levels: spec.levels().to_vec(),
            p: params.p(),
            e_max: params.e_max(),
            pmf: params.pmf().to_vec(),
            level_tail_probs,
            no_reset_probs,
        },
    )
}

const SWEEP_HEADER: [&str; 10] = [
    "axis",
    "axis_value",
    "solver",
    "k_star",
    "mu",
    "beta",
    "lagrangian_cost",
    "avg_age",
    "avg_energy",
    "error",
];

struct SweepRow {
    axis_value: f64,
    k_star: Option<u64>,
    mu: Option<f64>,
    beta: Option<f64>,
    lagrangian_cost: Option<f64>,
    avg_age: Option<f64>,
    avg_energy: Option<f64>,
    error: Option<Error>,
}

impl SweepRow {
    fn empty(axis_value: f64) -> Self {
        SweepRow {
            axis_value,
            k_star: None,
            mu: None,
            beta: None,
            lagrangian_cost: None,
            avg_age: None,
            avg_energy: None,
            error: None,
        }
    }

    fn failed(axis_value: f64, error: Error) -> Self {
        SweepRow {
            error: Some(error),
            ..SweepRow::empty(axis_value)
        }
    }

    fn cells(&self, axis: Axis, solver: Solver) -> [String; 10] {
        let opt_u = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        let opt_f = |v: Option<f64>| v.map(fmt12).unwrap_or_default();
        [
            axis.name().to_string(),
            fmt12(self.axis_value),
            solver.name().to_string(),
            opt_u(self.k_star),
            opt_f(self.mu),
            opt_f(self.beta),
            opt_f(self.lagrangian_cost),
            opt_f(self.avg_age),
            opt_f(self.avg_energy),
            self.error
                .as_ref()
                .map(|e| format!("{}: {e}", e.code()))
                .unwrap_or_default(),
        ]
    }
}

fn grid(args: &SweepArgs) -> Result<Vec<f64>, Error> {
    if let Some(values) = &args.values {
        if values.is_empty() {
            return Err(invalid("values", "the grid needs at least one value"));
        }
        return Ok(values.clone());
    }
    match (args.from, args.to, args.steps) {
        (Some(from), Some(to), Some(steps)) => {
            if steps < 2 {
                return Err(invalid("steps", "a range grid needs at least 2 points"));
            }
            let span = to - from;
            Ok((0..steps)
                .map(|i| from + span * i as f64 / (steps - 1) as f64)
                .collect())
        }
        _ => Err(invalid(
            "values",
            "provide either --values or all of --from/--to/--steps",
        )),
    }
}

/// Instance for one grid point: the axis value replaces the matching
/// parameter, everything else comes from the base config.
fn apply_axis(base: &SystemParams, axis: Axis, v: f64) -> Result<SystemParams, Error> {
    let spec = base.distortion().clone();
    match axis {
        Axis::Beta => Ok(base.clone()),
        Axis::P => SystemParams::new(v, base.pmf().to_vec(), spec, base.e_max()),
        Axis::Q => {
            let q = vec![v; spec.sensor_count()];
            SystemParams::new(base.p(), pmf_from_erasures(&q)?, spec, base.e_max())
        }
        Axis::W => {
            if !(v > 0.0 && v <= 1.0) {
                return Err(invalid("W", format!("{v} is outside (0, 1]")));
            }
            let mut pmf = vec![0.0; spec.sensor_count() + 1];
            pmf[0] = 1.0 - v;
            *pmf.last_mut().expect("pmf is nonempty") = v;
            SystemParams::new(base.p(), pmf, spec, base.e_max())
        }
        Axis::EMax => base.with_e_max(v),
    }
}

fn sweep_point(args: &SweepArgs, base: &SystemParams, index: usize, v: f64) -> SweepRow {
    let params = match apply_axis(base, args.axis, v) {
        Ok(p) => p,
        Err(e) => return SweepRow::failed(v, e),
    };
    let beta = if args.axis == Axis::Beta {
        Some(v)
    } else {
        args.beta
    };
    let seed = args.seed.wrapping_add(index as u64);

    let outcome = match (args.solver, beta) {
        (Solver::ClosedForm, Some(beta)) => priced_point(&params, v, beta),
        (Solver::ClosedForm, None) => budget_point(&params, v, args.epsilon),
        (Solver::Rvi, Some(beta)) => rvi_point(&params, v, beta, args.cap),
        (Solver::Rvi, None) => Err(invalid("solver", "the rvi solver needs --beta")),
        (Solver::Simulate, Some(beta)) => {
            simulated_priced_point(&params, v, beta, args.horizon, seed)
        }
        (Solver::Simulate, None) => {
            simulated_budget_point(&params, v, args.epsilon, args.horizon, seed)
        }
        (Solver::Greedy, _) => greedy_point(&params, v, args.horizon, seed),
    };
    outcome.unwrap_or_else(|e| SweepRow::failed(v, e))
}

fn load_sweep_base(args: &SweepArgs) -> Result<SystemParams, Error> {
    let mut params = load_params(&args.common.config)?;
    if let Some(e_max) = args.e_max {
        params = params.with_e_max(e_max)?;
    }
    Ok(params)
}

fn priced_point(params: &SystemParams, v: f64, beta: f64) -> Result<SweepRow, Error> {
    let result = optimal_threshold(params, beta)?;
    let report = avg_lagrangian_cost(params, result.k_star, beta)?;
    Ok(SweepRow {
        k_star: Some(result.k_star),
        beta: Some(beta),
        lagrangian_cost: Some(report.lagrangian_cost),
        avg_age: Some(report.avg_age),
        avg_energy: Some(report.avg_energy),
        ..SweepRow::empty(v)
    })
}

fn budget_point(params: &SystemParams, v: f64, epsilon: f64) -> Result<SweepRow, Error> {
    let (policy, trace) = bisect(params, epsilon)?;
    Ok(SweepRow {
        k_star: Some(policy.low_policy.threshold),
        mu: Some(policy.mix_prob),
        beta: Some(trace.beta_plus),
        avg_age: Some(mixture_age(params, &policy)?),
        avg_energy: Some(mixture_energy(params, &policy)?),
        ..SweepRow::empty(v)
    })
}

const SWEEP_RVI_TOL: f64 = 1e-8;
const SWEEP_RVI_MAX_ITERATIONS: u64 = 5_000_000;

fn rvi_point(params: &SystemParams, v: f64, beta: f64, cap: Option<u64>) -> Result<SweepRow, Error> {
    let mdp = TruncatedMdp::new(params, beta, cap)?;
    let solution = rvi(&mdp, SWEEP_RVI_TOL, SWEEP_RVI_MAX_ITERATIONS)?;
    let k_star = extract_threshold(&mdp, &solution.policy).map_err(|violation| {
        invalid(
            "policy",
            format!(
                "rvi policy is not of threshold type: transmits at age {} but not at {}",
                violation.reference.age, violation.violator.age
            ),
        )
    })?;
    Ok(SweepRow {
        k_star: Some(k_star),
        beta: Some(beta),
        lagrangian_cost: Some(solution.average_cost),
        ..SweepRow::empty(v)
    })
}

fn simulated_priced_point(
    params: &SystemParams,
    v: f64,
    beta: f64,
    horizon: u64,
    seed: u64,
) -> Result<SweepRow, Error> {
    let result = optimal_threshold(params, beta)?;
    let policy = SimPolicy::from(ThresholdPolicy::new(result.k_star)?);
    let sim = simulate(params, &policy, horizon, seed)?;
    Ok(SweepRow {
        k_star: Some(result.k_star),
        beta: Some(beta),
        lagrangian_cost: Some(sim.empirical_avg_age + beta * sim.empirical_avg_energy),
        avg_age: Some(sim.empirical_avg_age),
        avg_energy: Some(sim.empirical_avg_energy),
        ..SweepRow::empty(v)
    })
}

fn simulated_budget_point(
    params: &SystemParams,
    v: f64,
    epsilon: f64,
    horizon: u64,
    seed: u64,
) -> Result<SweepRow, Error> {
    let (policy, trace) = bisect(params, epsilon)?;
    let sim = simulate(params, &SimPolicy::Mixture(policy.clone()), horizon, seed)?;
    Ok(SweepRow {
        k_star: Some(policy.low_policy.threshold),
        mu: Some(policy.mix_prob),
        beta: Some(trace.beta_plus),
        avg_age: Some(sim.empirical_avg_age),
        avg_energy: Some(sim.empirical_avg_energy),
        ..SweepRow::empty(v)
    })
}

fn greedy_point(params: &SystemParams, v: f64, horizon: u64, seed: u64) -> Result<SweepRow, Error> {
    let sim = greedy_simulate(params, horizon, seed)?;
    Ok(SweepRow {
        avg_age: Some(sim.empirical_avg_age),
        avg_energy: Some(sim.empirical_avg_energy),
        ..SweepRow::empty(v)
    })
}

fn run_sweep(args: SweepArgs) -> Result<(), Error> {
    let points = grid(&args)?;
    let base = load_sweep_base(&args)?;

    let rows: Vec<[String; 10]> = points
        .par_iter()
        .enumerate()
        .map(|(i, &v)| sweep_point(&args, &base, i, v).cells(args.axis, args.solver))
        .collect();

    let sink: Box<dyn IoWrite> = match &args.common.out {
        Some(path) => Box::new(
            fs::File::create(path).map_err(|e| io_error("writing", path, e))?,
        ),
        None => Box::new(std::io::stdout()),
    };
    let mut writer = csv::Writer::from_writer(sink);
    let io_err = |e: csv::Error| Error::Io {
        context: "writing sweep output".to_string(),
        message: e.to_string(),
    };
    writer.write_record(SWEEP_HEADER).map_err(io_err)?;
    for row in &rows {
        writer.write_record(row).map_err(io_err)?;
    }
    writer.flush().map_err(|e| Error::Io {
        context: "writing sweep output".to_string(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt12_produces_twelve_significant_digits() {
        assert_eq!(fmt12(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(fmt12(6.0), "6.00000000000e0");
    }

    #[test]
    fn range_grids_are_inclusive_and_evenly_spaced() {
        let args = Cli::parse_from([
            "aoi-sched", "sweep", "--config", "x.json", "--axis", "beta", "--from", "0",
            "--to", "10", "--steps", "5",
        ]);
        let Command::Sweep(sweep) = args.command else {
            panic!("expected sweep");
        };
        let g = grid(&sweep).unwrap();
        assert_eq!(g, vec![0.0, 2.5, 5.0, 7.5, 10.0]);
    }

    #[test]
    fn value_grids_pass_through_in_order() {
        let args = Cli::parse_from([
            "aoi-sched", "sweep", "--config", "x.json", "--axis", "q", "--values",
            "0.9,0.1,0.5",
        ]);
        let Command::Sweep(sweep) = args.command else {
            panic!("expected sweep");
        };
        assert_eq!(grid(&sweep).unwrap(), vec![0.9, 0.1, 0.5]);
    }

    #[test]
    fn w_axis_builds_a_two_point_pmf_with_matching_tail() {
        let spec = crate::model::DistortionSpec::new(vec![1, 5], vec![2, 4], 6).unwrap();
        let base = SystemParams::new(
            0.3,
            vec![0.1, 0.15, 0.15, 0.2, 0.2, 0.1, 0.1],
            spec,
            0.5,
        )
        .unwrap();
        let swapped = apply_axis(&base, Axis::W, 0.37).unwrap();
        assert!((swapped.tail_prob(2) - 0.37).abs() < 1e-15);
        assert!((swapped.tail_prob(4) - 0.37).abs() < 1e-15);
        assert_eq!(swapped.p(), 0.3);
    }
}
