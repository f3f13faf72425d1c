use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use hybridbo::batch::{self, Arm, Method};
use hybridbo::exec::Rayon;
use hybridbo::problem::{self, ConfigError, LoadedProblem, RunFile};
use hybridbo::trace;
use hybridbo::verify::{self, Suite};
use hybridbo_core::optimizer::{self, RunHooks, Serial};
use hybridbo_core::tree::TreeDump;
use hybridbo_core::{Criterion, KernelSpec, MixedPoint, Strategy};
use log::info;

const OUT_ENV: &str = "HYBRIDBO_OUT";

#[derive(Parser)]
#[command(name = "hybridbo", version, about = "Mixed categorical/continuous Bayesian optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one problem with one seed.
    Run(RunArgs),
    /// Batch experiments over seeds.
    Bench {
        #[command(subcommand)]
        command: BenchCommand,
    },
    /// Print the category tree stored in a run directory or tree.json file.
    DumpTree { path: PathBuf },
    /// Run oracle and property checks.
    Verify {
        #[arg(long, default_value = "all", value_parser = parse_suite)]
        suite: Suite,
    },
}

#[derive(Subcommand)]
enum BenchCommand {
    Run(BenchArgs),
}

#[derive(Args, Default)]
struct Overrides {
    /// Total evaluations including pilots.
    #[arg(long)]
    budget: Option<usize>,
    /// Number of pilot samples.
    #[arg(long)]
    pilots: Option<usize>,
    #[arg(long, value_parser = parse_criterion)]
    criterion: Option<Criterion>,
    /// Comma-separated candidate kernels.
    #[arg(long, value_parser = parse_kernels)]
    kernels: Option<KernelList>,
    /// Tree policy: ucts or dirichlet.
    #[arg(long, value_parser = parse_strategy)]
    strategy: Option<Strategy>,
    #[arg(long)]
    c_ucb: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    /// Benchmark name or problem JSON file.
    #[arg(long)]
    problem: Option<String>,
    /// Run-configuration JSON file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: $HYBRIDBO_OUT or runs/<problem>-seed<seed>).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fit candidate kernels on all cores.
    #[arg(long)]
    parallel: bool,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    problem: String,
    /// hybridm, hybridd or random; repeat or comma-separate for several.
    #[arg(long, value_delimiter = ',', required = true, value_parser = parse_method)]
    method: Vec<Method>,
    /// Seeds as `a..b` (inclusive) or a comma list.
    #[arg(long, default_value = "0..9", value_parser = parse_seeds)]
    seeds: Seeds,
    /// Default: $HYBRIDBO_OUT or bench/<problem>.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse()
}

fn parse_criterion(s: &str) -> Result<Criterion, String> {
    s.parse().map_err(|e: hybridbo_core::selection::SelectionError| e.to_string())
}

// wrappers keep clap from treating the parsed lists as repeated arguments
#[derive(Clone)]
struct KernelList(Vec<KernelSpec>);

#[derive(Clone)]
struct Seeds(Vec<u64>);

fn parse_kernels(s: &str) -> Result<KernelList, String> {
    s.split(',').map(|k| k.trim().parse::<KernelSpec>().map_err(|e| e.to_string())).collect::<Result<_, _>>().map(KernelList)
}

fn parse_seeds(s: &str) -> Result<Seeds, String> {
    batch::parse_seeds(s).map(Seeds)
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    match s {
        "ucts" => Ok(Strategy::Ucts),
        "dirichlet" => Ok(Strategy::Dirichlet),
        _ => Err(format!("unknown strategy `{s}`; valid strategies are: ucts, dirichlet")),
    }
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

enum Failure {
    Config(String),
    Runtime(String),
    Verify,
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<trace::TraceError> for Failure {
    fn from(e: trace::TraceError) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Bench { command: BenchCommand::Run(args) } => cmd_bench(args),
        Command::DumpTree { path } => cmd_dump_tree(&path),
        Command::Verify { suite } => cmd_verify(suite),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Verify) => ExitCode::from(3),
    }
}

fn apply(file: &mut RunFile, o: &Overrides) {
    let r = &mut file.run;
    if let Some(v) = o.budget {
        r.budget = v;
    }
    if let Some(v) = o.pilots {
        r.n0 = v;
    }
    if let Some(v) = o.criterion {
        r.criterion = v;
    }
    if let Some(v) = &o.kernels {
        r.kernels = v.0.clone();
    }
    if let Some(v) = o.strategy {
        r.strategy = v;
    }
    if let Some(v) = o.c_ucb {
        r.c_ucb = v;
    }
    if let Some(v) = o.epsilon {
        r.epsilon = v;
    }
}

fn resolve(config: Option<&Path>, problem: Option<&str>, overrides: &Overrides) -> Result<(RunFile, LoadedProblem), Failure> {
    let mut file = match config {
        Some(p) => problem::load_run_file(p)?,
        None => RunFile::default(),
    };
    if let Some(p) = problem {
        file.problem = Some(problem::problem_source(p)?);
    }
    apply(&mut file, overrides);
    let source = file.problem.clone().ok_or(ConfigError::NoProblem)?;
    let loaded = LoadedProblem::load(&source)?;
    file.run.validate().map_err(ConfigError::from)?;
    Ok((file, loaded))
}

fn out_dir(arg: Option<PathBuf>, default: impl FnOnce() -> PathBuf) -> PathBuf {
    arg.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)).unwrap_or_else(default)
}

fn write_config(dir: &Path, file: &RunFile) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(e.to_string()))?;
    let text = serde_json::to_string_pretty(file).map_err(|e| Failure::Runtime(e.to_string()))?;
    std::fs::write(dir.join("config.json"), text + "\n").map_err(|e| Failure::Runtime(e.to_string()))
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let (mut file, problem) = resolve(args.config.as_deref(), args.problem.as_deref(), &args.overrides)?;
    if let Some(seed) = args.seed {
        file.run.seed = seed;
    }
    let dir = out_dir(args.out, || PathBuf::from(format!("runs/{}-seed{}", problem.name, file.run.seed)));
    write_config(&dir, &file)?;
    info!("running {} (budget {}, seed {}) into {}", problem.name, file.run.budget, file.run.seed, dir.display());

    let start = Instant::now();
    let clock = move || start.elapsed().as_secs_f64();
    let hooks = RunHooks { executor: if args.parallel { &Rayon } else { &Serial }, clock: Some(&clock) };
    let mut f = |x: &MixedPoint| problem.evaluate(x);
    let outcome = optimizer::run_with(&problem.spec, &mut f, &file.run, &hooks);
    let trace = match outcome {
        Ok(t) => t,
        Err(optimizer::RunError::Objective { iteration, message, partial }) => {
            trace::write_run_dir(&dir, &problem.name, &partial, &problem.space, problem.known_max)?;
            return Err(Failure::Runtime(format!(
                "objective failed at evaluation {iteration}: {message}; partial trace written to {}",
                dir.display()
            )));
        }
        Err(e) => return Err(Failure::Runtime(e.to_string())),
    };
    trace::write_run_dir(&dir, &problem.name, &trace, &problem.space, problem.known_max)?;
    if let Some(best) = trace.best() {
        let point = problem::point_json(&problem.space, &best.point);
        println!("best {} at evaluation {}: {point}", best.value, best.iter);
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    let (file, problem) = resolve(args.config.as_deref(), Some(&args.problem), &args.overrides)?;
    let arms: Vec<Arm> = args.method.iter().map(|&m| Arm::new(m, file.run.clone())).collect();
    let dir = out_dir(args.out, || PathBuf::from(format!("bench/{}", problem.name)));
    write_config(&dir, &file)?;
    info!("{} arm(s) x {} seed(s) on {}", arms.len(), args.seeds.0.len(), problem.name);
    let objective = |x: &MixedPoint| problem.evaluate(x);
    let result = batch::batch_experiment(&arms, &problem.spec, &objective, &args.seeds.0);
    batch::write_batch(&dir, &result, &arms, &problem.space)?;
    let mut failed = false;
    for s in &result.summaries {
        println!("{:<10} mean final best {:.6} over {} run(s)", s.label, s.final_mean, s.seeds.len());
        failed |= !s.failures.is_empty();
    }
    if failed {
        return Err(Failure::Runtime("some runs failed; see the log".into()));
    }
    Ok(())
}

fn cmd_dump_tree(path: &Path) -> Result<(), Failure> {
    let file = if path.is_dir() { path.join("tree.json") } else { path.to_path_buf() };
    let text = std::fs::read_to_string(&file).map_err(|e| Failure::Config(format!("cannot read {}: {e}", file.display())))?;
    let dump: TreeDump =
        serde_json::from_str(&text).map_err(|e| Failure::Config(format!("cannot parse {}: {e}", file.display())))?;
    println!("arity {:?}", dump.arity);
    for node in &dump.nodes {
        let indent = "  ".repeat(node.path.len());
        let label = node.path.last().map_or("root".to_string(), |c| c.to_string());
        print!("{indent}{label}: n={} r={:.6}", node.visits, node.mean_reward);
        if !node.alpha.is_empty() {
            print!(" alpha={:?}", node.alpha);
        }
        println!();
    }
    Ok(())
}

fn cmd_verify(suite: Suite) -> Result<(), Failure> {
    let checks = verify::run(suite);
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        Err(Failure::Verify)
    } else {
        Ok(())
    }
}
