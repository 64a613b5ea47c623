//! `bwmin`: minimum link bandwidth and ingress reshaping for deadline flows.
//!
//! Results go to stdout (JSON, or CSV for the evaluation commands). Errors go
//! to stderr as `{"error": kind, "detail": message}`. Exit codes: 0 success,
//! 1 verification failure, 2 input error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bwmin_core::eval_harness::{
    heatmap, reshaping_gain_cdf, run_scenario, stats_csv, Axis, DeadlineScenario, Metric,
};
use bwmin_core::oracle::{adversarial_search, analytic_bound, SimConfig};
use bwmin_core::packet_two_flow::{
    packet_high_priority_delay, packet_low_priority_delay, packet_sp_min_bw_shaped,
    packet_sp_min_bw_unshaped, PacketShaper,
};
use bwmin_core::solvers::{all_minima, solve};
use bwmin_core::{Error, Execution, FlowProfile, FlowSet, ReshapingPlan, Scheduler};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "bwmin", version, about)]
struct Cli {
    /// Run every data-parallel loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimum bandwidth, reshaping plan and delays for one scheduler.
    Solve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        scheduler: Scheduler,
        #[arg(long, value_enum, default_value_t = Model::Fluid)]
        model: Model,
    },
    /// Worst-case delay bounds at a given bandwidth.
    Delay {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        scheduler: Scheduler,
        #[arg(long)]
        r: f64,
        /// Reshaped bursts in input order; defaults to the solver's plan for
        /// shaped schedulers and to no reshaping otherwise.
        #[arg(long, value_delimiter = ',')]
        b_prime: Option<Vec<f64>>,
    },
    /// All five minima and their pairwise relative differences.
    Compare {
        #[arg(long)]
        input: PathBuf,
    },
    /// Checks the analytic bounds against the fluid simulation.
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        scheduler: Scheduler,
        /// Bandwidth to simulate; defaults to the scheduler's minimum.
        #[arg(long)]
        r: Option<f64>,
        /// Simulation step; defaults to the smallest deadline / 1000.
        #[arg(long)]
        dt: Option<f64>,
        /// Burst offsets tried per flow; 1 runs only synchronized bursts.
        #[arg(long, default_value_t = 1)]
        offsets: usize,
    },
    /// Monte Carlo statistics of the relative savings (CSV).
    Evaluate {
        #[command(flatten)]
        study: Study,
    },
    /// Two-flow metric over a (d1, d2) grid (CSV).
    Heatmap {
        #[arg(long, value_parser = parse_metric)]
        metric: Metric,
        #[arg(long, default_value_t = 4.0)]
        r1: f64,
        #[arg(long, default_value_t = 10.0)]
        b1: f64,
        #[arg(long, default_value_t = 10.0)]
        r2: f64,
        #[arg(long, default_value_t = 18.0)]
        b2: f64,
        /// Points per axis.
        #[arg(long, default_value_t = 100)]
        grid: usize,
        /// Upper end of both deadline axes; the lower end is 0 (excluded).
        #[arg(long, default_value_t = 4.0)]
        d_max: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sorted per-trial reshaping gains for static priority and FIFO (CSV).
    Cdf {
        #[command(flatten)]
        study: Study,
    },
}

#[derive(clap::Args)]
struct Study {
    /// Built-in scenario name (d11 .. d34), `all`, or a JSON file
    /// `{"name": .., "deadlines": [..]}`.
    #[arg(long, default_value = "all")]
    scenario: String,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Model {
    Fluid,
    Packet,
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Input(Error),
    Verification(Value),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e)
    }
}

type Outcome<T> = Result<T, Failure>;

fn io_error(path: &Path, e: std::io::Error) -> Failure {
    Failure::Input(Error::InvalidConfig(format!("{}: {e}", path.display())))
}

#[derive(Deserialize)]
struct FlowFile {
    flows: Vec<FlowProfile>,
}

/// A flow set plus the position of every input flow in deadline order.
struct Input {
    set: FlowSet,
    order: Vec<usize>,
}

impl Input {
    fn load(path: &Path) -> Outcome<Self> {
        let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        let file: FlowFile = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidProfile(format!("malformed flow-set JSON: {e}")))?;
        let set = FlowSet::new(file.flows.clone())?;
        let order = file
            .flows
            .iter()
            .map(|f| {
                set.flows()
                    .iter()
                    .position(|g| g.deadline == f.deadline)
                    .expect("every input flow is in the set")
            })
            .collect();
        Ok(Input { set, order })
    }

    /// Values in deadline order, rearranged into input order.
    fn to_input(&self, values: &[f64]) -> Vec<f64> {
        self.order.iter().map(|&i| values[i]).collect()
    }

    fn to_solver(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; values.len()];
        for (&i, &v) in self.order.iter().zip(values) {
            out[i] = v;
        }
        out
    }
}

fn print_json(value: &Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("values serialize")
    );
}

fn emit(text: &str, out: Option<&Path>) -> Outcome<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| io_error(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn solve_fluid(input: &Input, scheduler: Scheduler) -> Outcome<Value> {
    let sol = solve(&input.set, scheduler)?;
    let b_prime = sol
        .plan
        .as_ref()
        .map(|p| input.to_input(p.bursts()))
        .unwrap_or_else(|| input.to_input(&input.set.bursts().collect::<Vec<_>>()));
    Ok(json!({
        "scheduler": scheduler.name(),
        "r_min": sol.r_min,
        "b_prime": b_prime,
        "delays": input.to_input(&sol.delays),
    }))
}

fn solve_packet(input: &Input, scheduler: Scheduler) -> Outcome<Value> {
    let fs = &input.set;
    if fs.len() != 2 {
        return Err(Error::InvalidConfig(format!(
            "the packet model takes exactly 2 flows, got {}",
            fs.len()
        ))
        .into());
    }
    let (f1, f2) = (fs.flow(0), fs.flow(1));
    let (r_min, shaper, case) = match scheduler {
        Scheduler::StaticPriority => (
            packet_sp_min_bw_unshaped(f1, f2)?,
            PacketShaper::identity(f2),
            None,
        ),
        Scheduler::StaticPriorityShaped => {
            let sol = packet_sp_min_bw_shaped(f1, f2)?;
            (sol.bandwidth, sol.shaper, Some(sol.case))
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "the packet model supports sp and sp-shaped, not {}",
                other.name()
            ))
            .into())
        }
    };
    let delays = [
        packet_low_priority_delay(f1, f2, &shaper, r_min)?,
        packet_high_priority_delay(f2, &shaper, r_min, f1.max_packet)?,
    ];
    let mut out = json!({
        "scheduler": scheduler.name(),
        "model": "packet",
        "r_min": r_min,
        "b_prime": input.to_input(&[f1.burst, shaper.burst]),
        "r_prime": input.to_input(&[f1.rate, shaper.rate]),
        "delays": input.to_input(&delays),
    });
    if let Some(case) = case {
        out["case"] = serde_json::to_value(case).expect("cases serialize");
    }
    Ok(out)
}

/// The plan a shaped scheduler runs with: explicit bursts, or the solver's.
fn plan_for(
    input: &Input,
    scheduler: Scheduler,
    b_prime: Option<&[f64]>,
) -> Outcome<Option<ReshapingPlan>> {
    match b_prime {
        Some(bursts) => {
            if bursts.len() != input.set.len() {
                return Err(Error::InvalidPlan(format!(
                    "{} bursts for {} flows",
                    bursts.len(),
                    input.set.len()
                ))
                .into());
            }
            Ok(Some(ReshapingPlan::new(
                &input.set,
                input.to_solver(bursts),
            )?))
        }
        None if scheduler.is_shaped() => Ok(solve(&input.set, scheduler)?.plan),
        None => Ok(None),
    }
}

fn delay(input: &Input, scheduler: Scheduler, r: f64, b_prime: Option<&[f64]>) -> Outcome<Value> {
    let plan = plan_for(input, scheduler, b_prime)?;
    let delays = analytic_bound(&input.set, r, scheduler, plan.as_ref())?;
    let bursts = plan
        .as_ref()
        .map(|p| p.bursts().to_vec())
        .unwrap_or_else(|| input.set.bursts().collect());
    Ok(json!({
        "scheduler": scheduler.name(),
        "r": r,
        "b_prime": input.to_input(&bursts),
        "delays": input.to_input(&delays),
    }))
}

fn compare(input: &Input) -> Outcome<Value> {
    let m = all_minima(&input.set)?;
    let minima: serde_json::Map<String, Value> = Scheduler::ALL
        .iter()
        .map(|s| (s.name().to_string(), json!(m.get(*s))))
        .collect();
    let metrics: serde_json::Map<String, Value> = Metric::ALL
        .iter()
        .map(|k| (k.name().to_string(), json!(k.eval(&m))))
        .collect();
    let mut pairwise = Vec::new();
    for (i, a) in Scheduler::ALL.iter().enumerate() {
        for b in &Scheduler::ALL[i + 1..] {
            let (x, y) = (m.get(*a), m.get(*b));
            pairwise.push(json!({
                "a": a.name(),
                "b": b.name(),
                "relative": (y - x) / y,
            }));
        }
    }
    Ok(json!({ "minima": minima, "metrics": metrics, "pairwise": pairwise }))
}

#[derive(Serialize)]
struct FlowCheck {
    flow: usize,
    analytic: f64,
    simulated_max: f64,
    margin: f64,
}

fn verify(
    input: &Input,
    scheduler: Scheduler,
    r: Option<f64>,
    dt: Option<f64>,
    offsets: usize,
    exec: Execution,
) -> Outcome<Value> {
    let fs = &input.set;
    let sol = solve(fs, scheduler)?;
    let r = r.unwrap_or(sol.r_min);
    let mut cfg = SimConfig::new(scheduler).with_plan(sol.plan.clone());
    cfg.dt = dt;
    let bound = analytic_bound(fs, r, scheduler, sol.plan.as_ref())?;
    let rep = adversarial_search(fs, r, &cfg, offsets, exec)?;
    let step = cfg.step(fs);
    let analytic = input.to_input(&bound);
    let simulated = input.to_input(&rep.max_delay);
    let flows: Vec<FlowCheck> = analytic
        .iter()
        .zip(&simulated)
        .enumerate()
        .map(|(k, (&a, &s))| FlowCheck {
            flow: k,
            analytic: a,
            simulated_max: s,
            margin: a - s,
        })
        .collect();
    let sound = rep.conserved && !rep.truncated && flows.iter().all(|f| f.margin >= -2.0 * step);
    let report = json!({
        "scheduler": scheduler.name(),
        "r": r,
        "dt": step,
        "patterns": rep.patterns,
        "conserved": rep.conserved,
        "truncated": rep.truncated,
        "sound": sound,
        "flows": flows,
    });
    if sound {
        Ok(report)
    } else {
        Err(Failure::Verification(report))
    }
}

fn scenarios(name: &str) -> Outcome<Vec<DeadlineScenario>> {
    if name == "all" {
        return Ok(DeadlineScenario::all());
    }
    if let Some(s) = DeadlineScenario::builtin(name) {
        return Ok(vec![s]);
    }
    let path = Path::new(name);
    if path.exists() {
        let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        return Ok(vec![DeadlineScenario::from_json(&text)?]);
    }
    Err(Error::InvalidConfig(format!("unknown scenario '{name}'")).into())
}

fn evaluate(study: &Study, exec: Execution) -> Outcome<()> {
    let mut rows = Vec::new();
    for s in scenarios(&study.scenario)? {
        rows.extend(run_scenario(&s, study.trials, study.seed, exec)?);
    }
    emit(&stats_csv(&rows), study.out.as_deref())
}

fn cdf(study: &Study, exec: Execution) -> Outcome<()> {
    let list = scenarios(&study.scenario)?;
    if list.len() != 1 {
        return Err(Error::InvalidConfig("cdf takes a single scenario".into()).into());
    }
    let c = reshaping_gain_cdf(&list[0], study.trials, study.seed, exec)?;
    emit(&c.to_csv(), study.out.as_deref())
}

fn configure_threads() -> Outcome<()> {
    let Ok(raw) = std::env::var("BWMIN_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Error::InvalidConfig(format!(
            "BWMIN_THREADS must be a positive integer, got '{raw}'"
        ))
    })?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn run(cli: Cli) -> Outcome<()> {
    configure_threads()?;
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    match cli.command {
        Command::Solve {
            input,
            scheduler,
            model,
        } => {
            let input = Input::load(&input)?;
            let out = match model {
                Model::Fluid => solve_fluid(&input, scheduler)?,
                Model::Packet => solve_packet(&input, scheduler)?,
            };
            print_json(&out);
        }
        Command::Delay {
            input,
            scheduler,
            r,
            b_prime,
        } => {
            let input = Input::load(&input)?;
            print_json(&delay(&input, scheduler, r, b_prime.as_deref())?);
        }
        Command::Compare { input } => print_json(&compare(&Input::load(&input)?)?),
        Command::Verify {
            input,
            scheduler,
            r,
            dt,
            offsets,
        } => {
            let input = Input::load(&input)?;
            print_json(&verify(&input, scheduler, r, dt, offsets, exec)?);
        }
        Command::Evaluate { study } => evaluate(&study, exec)?,
        Command::Heatmap {
            metric,
            r1,
            b1,
            r2,
            b2,
            grid,
            d_max,
            out,
        } => {
            let axis = Axis::new(0.0, d_max, grid);
            let h = heatmap((r1, b1), (r2, b2), axis, axis, metric, exec)?;
            emit(&h.to_csv(), out.as_deref())?;
        }
        Command::Cdf { study } => cdf(&study, exec)?,
    }
    Ok(())
}

fn report_error(kind: &str, detail: &str) {
    eprintln!("{}", json!({ "error": kind, "detail": detail }));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report_error("Usage", e.to_string().trim());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            report_error(e.kind(), &e.to_string());
            ExitCode::from(2)
        }
        Err(Failure::Verification(report)) => {
            print_json(&report);
            report_error(
                "VerificationFailed",
                "simulated delay exceeds the analytic bound",
            );
            ExitCode::from(1)
        }
    }
}
