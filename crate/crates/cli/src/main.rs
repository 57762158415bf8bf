mod bench;
mod policy;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::mpsc;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use rmdp_core::baselines::{rrvi_with, rvi_with, BaselineOptions};
use rmdp_core::benchgen::{
    default_holes, gen_contamination, gen_frozen_lake, gen_random_tiny, gen_random_tiny_sparse, ContaminationSpec,
    FrozenLakeSpec, LakeVariant,
};
use rmdp_core::game::{rppi_with, verify_agent_policy, RppiOptions, MAX_OUTER, PPE_TOL};
use rmdp_core::oracle::{brute_force_solve, EnumerationBudget};
use rmdp_core::reduction::{reduce, Objective};
use rmdp_core::{Algorithm, Deadline, Error, Rmdp, SolveReport};

use bench::{BenchConfig, Family};

#[derive(Parser, Debug)]
#[command(name = "rmdp", version, about = "Polytopic robust MDP solver and benchmark harness")]
struct Cli {
    /// Seed for generators.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Wall-clock limit per solver call, in seconds.
    #[arg(long, global = true, default_value_t = 10800.0)]
    timeout: f64,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output file; standard output when omitted.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a benchmark instance as RMDP JSON.
    Gen {
        #[command(subcommand)]
        family: GenFamily,
    },
    /// Reduce an RMDP to a turn-based stochastic game.
    Reduce {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "lim-avg")]
        objective: ObjectiveArg,
    },
    /// Solve an RMDP and write a report.
    Solve(SolveArgs),
    /// Check that an agent policy guarantees a value (exit 0) or not (exit 1).
    Verify {
        input: PathBuf,
        /// JSON array of action indices or object from state label to action.
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        threshold: f64,
    },
    /// Run the benchmark families and write CSV.
    Bench(BenchArgs),
}

#[derive(Subcommand, Debug)]
enum GenFamily {
    Contamination {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.4)]
        contamination: f64,
    },
    FrozenLake {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value = "unichain")]
        variant: VariantArg,
        #[arg(long, default_value_t = 0.2)]
        d: f64,
        /// Holes as `row,col` pairs separated by `;`; the default layout when omitted.
        #[arg(long)]
        holes: Option<String>,
    },
    Tiny {
        #[arg(long)]
        states: usize,
        #[arg(long)]
        actions: usize,
        #[arg(long, default_value_t = 3)]
        vertices: usize,
        #[arg(long)]
        sparse: bool,
    },
}

#[derive(Args, Debug, Clone)]
struct SolveArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value = "rppi")]
    algorithm: AlgorithmArg,
    /// Stopping reference for RVI/RRVI: a number, or `auto` to use RPPI's value.
    #[arg(long, default_value = "auto")]
    reference: String,
    /// Baseline stopping gap.
    #[arg(long, default_value_t = 1e-3)]
    gap: f64,
    #[arg(long, default_value_t = PPE_TOL)]
    ppe_tol: f64,
    /// Discount rungs for RPPI and RVI.
    #[arg(long, default_value_t = MAX_OUTER)]
    max_outer: usize,
    /// Sweep cap for RRVI.
    #[arg(long, default_value_t = 10_000_000)]
    max_iterations: usize,
    /// Cap on enumerated policies per player for brute force.
    #[arg(long, default_value_t = 1e7)]
    budget: f64,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Family::Contamination, Family::FrozenLakeUnichain, Family::FrozenLakeMultichain])]
    family: Vec<Family>,
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    /// Seeds to run; the global seed when omitted.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [AlgorithmArg::Rppi, AlgorithmArg::Rvi, AlgorithmArg::Rrvi])]
    algorithms: Vec<AlgorithmArg>,
    #[arg(long, default_value_t = 0.4)]
    contamination: f64,
    #[arg(long, default_value_t = 0.2)]
    d: f64,
    #[arg(long, default_value_t = PPE_TOL)]
    ppe_tol: f64,
    #[arg(long, default_value_t = 1e-3)]
    gap: f64,
    #[arg(long, default_value_t = 10_000_000)]
    max_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ObjectiveArg {
    LimAvg,
    Discounted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Unichain,
    Multichain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgorithmArg {
    Rppi,
    Rvi,
    Rrvi,
    Brute,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Rppi => Algorithm::Rppi,
            AlgorithmArg::Rvi => Algorithm::Rvi,
            AlgorithmArg::Rrvi => Algorithm::Rrvi,
            AlgorithmArg::Brute => Algorithm::Brute,
        }
    }
}

/// Exit status for a failed command: 2 for bad input, 3 for timeouts,
/// 4 for solver failures.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Invalid(_) | Error::Parse(_) | Error::IllegalPolicy(_)) => 2,
        Some(Error::Timeout) => 3,
        Some(_) => 4,
        None => 2,
    }
}

fn read_model(path: &Path) -> anyhow::Result<Rmdp> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Rmdp::from_json(&text)?)
}

fn emit(output: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            println!("{}", text.trim_end());
            Ok(())
        }
    }
}

fn parse_holes(spec: &str) -> anyhow::Result<Vec<(usize, usize)>> {
    spec.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|cell| {
            let (r, c) = cell.split_once(',').ok_or_else(|| anyhow!("hole {cell:?} is not `row,col`"))?;
            Ok((r.trim().parse()?, c.trim().parse()?))
        })
        .collect()
}

fn cmd_gen(cli: &Cli, family: &GenFamily) -> anyhow::Result<()> {
    let m = match family {
        GenFamily::Contamination { n, contamination } => {
            gen_contamination(&ContaminationSpec { n: *n, r: *contamination, seed: cli.seed })?
        }
        GenFamily::FrozenLake { n, variant, d, holes } => {
            let holes = match holes {
                Some(h) => parse_holes(h).map_err(|e| Error::Parse(e.to_string()))?,
                None => default_holes(*n),
            };
            let variant = match variant {
                VariantArg::Unichain => LakeVariant::Unichain,
                VariantArg::Multichain => LakeVariant::Multichain,
            };
            gen_frozen_lake(&FrozenLakeSpec { n: *n, holes, d: *d, variant, seed: cli.seed })?
        }
        GenFamily::Tiny { states, actions, vertices, sparse } => {
            let generate = if *sparse { gen_random_tiny_sparse } else { gen_random_tiny };
            generate(*states, *actions, *vertices, cli.seed)?
        }
    };
    emit(cli.output.as_deref(), &m.to_json())
}

fn cmd_reduce(cli: &Cli, input: &Path, objective: ObjectiveArg) -> anyhow::Result<()> {
    let m = read_model(input)?;
    let objective = match objective {
        ObjectiveArg::LimAvg => Objective::LimAvg,
        ObjectiveArg::Discounted => Objective::Discounted,
    };
    let (g, _) = reduce(&m, objective)?;
    emit(cli.output.as_deref(), &g.to_json())
}

fn solve(m: &Rmdp, args: &SolveArgs, limit: Duration) -> rmdp_core::Result<SolveReport> {
    let rppi_opts = || RppiOptions { ppe_tol: args.ppe_tol, max_outer: args.max_outer, deadline: Deadline::after(limit) };
    let reference = || -> rmdp_core::Result<f64> {
        if args.reference == "auto" {
            Ok(rppi_with(m, &rppi_opts())?.report.value_at_initial)
        } else {
            args.reference.parse().map_err(|_| Error::Parse(format!("reference {:?} is not a number", args.reference)))
        }
    };
    match args.algorithm {
        AlgorithmArg::Rppi => Ok(rppi_with(m, &rppi_opts())?.report),
        AlgorithmArg::Rvi => rvi_with(
            m,
            &BaselineOptions {
                reference_value: reference()?,
                stop_gap: args.gap,
                max_iterations: args.max_outer,
                deadline: Deadline::after(limit),
            },
        ),
        AlgorithmArg::Rrvi => rrvi_with(
            m,
            &BaselineOptions {
                reference_value: reference()?,
                stop_gap: args.gap,
                max_iterations: args.max_iterations,
                deadline: Deadline::after(limit),
            },
        ),
        AlgorithmArg::Brute => {
            let cap = if args.budget.is_finite() && args.budget >= 1.0 { args.budget as u64 } else { 1 };
            brute_force_solve(m, EnumerationBudget::uniform(cap))
        }
    }
}

fn cmd_solve(cli: &Cli, args: SolveArgs, pool: rayon::ThreadPool) -> anyhow::Result<()> {
    let m = read_model(&args.input)?;
    let limit = Duration::from_secs_f64(cli.timeout);
    // the solvers poll their own deadlines; the channel bounds the rest
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let _ = tx.send(pool.install(|| solve(&m, &args, limit)));
    });
    let report = match rx.recv_timeout(limit) {
        Ok(result) => result?,
        Err(_) => return Err(Error::Timeout.into()),
    };
    emit(cli.output.as_deref(), &serde_json::to_string_pretty(&report)?)
}

fn cmd_verify(cli: &Cli, input: &Path, policy_path: &Path, threshold: f64) -> anyhow::Result<bool> {
    let m = read_model(input)?;
    let text = fs::read_to_string(policy_path).with_context(|| format!("reading {}", policy_path.display()))?;
    let sigma = policy::parse_policy(&text, &m)?;
    let v = verify_agent_policy(&m, &sigma, threshold)?;
    let out = serde_json::json!({ "holds": v.holds, "inf_value": v.inf_value });
    emit(cli.output.as_deref(), &out.to_string())?;
    Ok(v.holds)
}

fn cmd_bench(cli: &Cli, args: &BenchArgs, pool: &rayon::ThreadPool) -> anyhow::Result<bool> {
    let config = BenchConfig {
        families: args.family.clone(),
        sizes: args.sizes.clone(),
        seeds: if args.seeds.is_empty() { vec![cli.seed] } else { args.seeds.clone() },
        algorithms: args.algorithms.iter().map(|&a| a.into()).collect(),
        contamination: args.contamination,
        d: args.d,
        ppe_tol: args.ppe_tol,
        gap: args.gap,
        rrvi_max_iterations: args.max_iterations,
        timeout: Duration::from_secs_f64(cli.timeout),
    };
    if config.algorithms.contains(&Algorithm::Brute) {
        return Err(Error::Parse("bench runs rppi, rvi and rrvi only".into()).into());
    }
    let rows = pool.install(|| bench::run(&config));
    let mut buf = Vec::new();
    bench::write_csv(&rows, &mut buf)?;
    emit(cli.output.as_deref(), &String::from_utf8(buf)?)?;
    Ok(rows.iter().any(|r| r.status == bench::Status::Ok))
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    if !(cli.timeout > 0.0 && cli.timeout.is_finite()) {
        return Err(Error::Parse(format!("timeout must be positive, got {}", cli.timeout)).into());
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.jobs {
        builder = builder.num_threads(jobs.max(1));
    }
    let pool = builder.build()?;
    match &cli.command {
        Command::Gen { family } => cmd_gen(&cli, family).map(|_| 0),
        Command::Reduce { input, objective } => cmd_reduce(&cli, input, *objective).map(|_| 0),
        Command::Solve(args) => cmd_solve(&cli, args.clone(), pool).map(|_| 0),
        Command::Verify { input, policy, threshold } => {
            cmd_verify(&cli, input, policy, *threshold).map(|holds| if holds { 0 } else { 1 })
        }
        Command::Bench(args) => cmd_bench(&cli, args, &pool).map(|any_ok| if any_ok { 0 } else { 4 }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
