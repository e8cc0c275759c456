use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use seaplan_core::oracle::{verify_suite, VerifyOptions};
use seaplan_core::report::{write_file, write_plan_csv, write_sweep_csv, write_trace_csv};
use seaplan_core::sca::named_initialization;
use seaplan_core::sweep::inclusive_range;
use seaplan_core::{
    load_scenario, paper_scenario, plan, plan_best, run_sweep, toy_scenario, Error, Mode, PlanOptions, PlanOutcome,
    Scenario, SweepAxis,
};

const EXIT_FAILURE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_AUDIT: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "seaplan", version, about = "UAV relay trajectory and power planner for maritime users")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Plan one flight and write plan.csv and trace.csv.
    Plan(PlanArgs),
    /// Re-plan over a range of one parameter and write sweep.csv.
    Sweep(SweepArgs),
    /// Run the independent verification suite.
    Verify(VerifyArgs),
    /// Write a built-in scenario as JSON.
    Scenario(ScenarioArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Redraw the shadowing realisation from this seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Relative Q change that ends the outer loop.
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    #[arg(long = "max-iters", default_value_t = 50)]
    max_iters: usize,
    #[arg(long, default_value = "decoupled")]
    mode: Mode,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PlanArgs {
    #[command(flatten)]
    common: Common,
    /// `best` runs every initialization and keeps the preferred plan.
    #[arg(long, default_value = "best")]
    init: String,
    /// Add a wall_time_s column to trace.csv.
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// p_max (dBm), e0 (J), i0 (dBm) or k (linear).
    #[arg(long)]
    axis: SweepAxis,
    #[arg(long, allow_negative_numbers = true)]
    from: f64,
    #[arg(long, allow_negative_numbers = true)]
    to: f64,
    #[arg(long)]
    step: f64,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Restrict the Rician factors checked to this one.
    #[arg(long)]
    k: Option<f64>,
    #[arg(long = "mc-samples", default_value_t = 100_000)]
    mc_samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Builtin {
    Paper,
    Toy,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    #[arg(long, value_enum, default_value = "paper")]
    name: Builtin,
    /// Destination file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. }
        | Error::Parse(_)
        | Error::InvalidScenario { .. }
        | Error::InvalidArgument { .. }
        | Error::DegenerateGeometry(_) => EXIT_INPUT,
        Error::Infeasible(_) => EXIT_INFEASIBLE,
        _ => EXIT_FAILURE,
    }
}

fn load(common: &Common) -> Result<(Scenario, PlanOptions), Error> {
    let mut scenario = load_scenario(&common.scenario)?;
    if let Some(seed) = common.seed {
        scenario.resample_shadowing(seed);
    }
    if !(common.eps > 0.0) {
        return Err(Error::InvalidArgument {
            name: "eps",
            reason: format!("must be positive, got {}", common.eps),
        });
    }
    let options = PlanOptions {
        eps: common.eps,
        max_iterations: common.max_iters,
        mode: common.mode,
        ..PlanOptions::default()
    };
    std::fs::create_dir_all(&common.out).map_err(|source| Error::Io {
        path: common.out.clone(),
        source,
    })?;
    Ok((scenario, options))
}

fn print_summary(scenario: &Scenario, init: &str, outcome: &PlanOutcome) -> Result<(), Error> {
    println!("initialization      {init}");
    println!("outer iterations    {} ({})", outcome.trace.iterations(), if outcome.converged { "converged" } else { "iteration limit" });
    println!("initial Q           {:.6e}", outcome.trace.initial_q);
    println!("final Q             {:.6e}", outcome.plan.q_value);
    println!("min ergodic rate    {:.6} bit/s/Hz", outcome.plan.min_ergodic_rate(scenario)?);
    println!("energy              {:.3} J", outcome.plan.total_energy(scenario.dt));
    println!("audit (tolerance {:e}):", outcome.audit.tolerance);
    for c in &outcome.audit.checks {
        let slot = c.slot.map(|t| format!("slot {t}")).unwrap_or_else(|| "all".into());
        println!("  {:<20} {:>8}  {:+.3e}", c.name, slot, c.residual);
    }
    Ok(())
}

fn cmd_plan(args: &PlanArgs) -> Result<u8, Error> {
    let (scenario, options) = load(&args.common)?;
    let (init, outcome) = if args.init == "best" {
        let (name, o) = plan_best(&scenario, &options)?;
        (name.to_string(), o)
    } else {
        let init = named_initialization(&scenario, &args.init)?;
        (args.init.clone(), plan(&scenario, &init, &options)?)
    };
    let out = &args.common.out;
    write_file(&out.join("plan.csv"), |w| write_plan_csv(w, &scenario, &outcome.plan))?;
    write_file(&out.join("trace.csv"), |w| write_trace_csv(w, &outcome.trace, args.timing))?;
    print_summary(&scenario, &init, &outcome)?;
    if !outcome.audit.passed() {
        eprintln!("constraint audit failed");
        return Ok(EXIT_AUDIT);
    }
    Ok(0)
}

fn cmd_sweep(args: &SweepArgs) -> Result<u8, Error> {
    let (scenario, options) = load(&args.common)?;
    let values = inclusive_range(args.from, args.to, args.step)?;
    let rows = run_sweep(&scenario, args.axis, &values, &options);
    write_file(&args.common.out.join("sweep.csv"), |w| write_sweep_csv(w, &rows))?;

    println!("{:>12}  {:>14}  {:>10}  {:>5}  {}", args.axis.name(), "final Q", "min rate", "iters", "start");
    let mut code = 0;
    let mut failed = 0;
    for row in &rows {
        match &row.result {
            Ok(p) => {
                println!(
                    "{:>12}  {:>14.6e}  {:>10.6}  {:>5}  {}",
                    row.value,
                    p.outcome.plan.q_value,
                    p.min_ergodic_rate,
                    p.outcome.trace.iterations(),
                    p.origin
                );
                if !p.outcome.audit.passed() {
                    eprintln!("constraint audit failed at {} = {}", args.axis, row.value);
                    code = EXIT_AUDIT;
                }
            }
            Err(e) => {
                println!("{:>12}  failed: {e}", row.value);
                failed += 1;
            }
        }
    }
    if failed == rows.len() {
        return Ok(EXIT_INFEASIBLE);
    }
    Ok(code)
}

fn cmd_verify(args: &VerifyArgs) -> Result<u8, Error> {
    let mut options = VerifyOptions {
        mc_samples: args.mc_samples,
        seed: args.seed,
        ..VerifyOptions::default()
    };
    if let Some(k) = args.k {
        options.k_values = vec![k];
    }
    let checks = verify_suite(&options)?;
    let mut all = true;
    for c in &checks {
        println!("{}  {:<28} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        all &= c.passed;
    }
    Ok(if all { 0 } else { EXIT_AUDIT })
}

fn cmd_scenario(args: &ScenarioArgs) -> Result<u8, Error> {
    let scenario = match args.name {
        Builtin::Paper => paper_scenario(),
        Builtin::Toy => toy_scenario(),
    };
    match &args.out {
        Some(path) => scenario.save(Path::new(path))?,
        None => println!("{}", scenario.to_json_string()),
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SEAPLAN_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Plan(a) => cmd_plan(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Scenario(a) => cmd_scenario(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
