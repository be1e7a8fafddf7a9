use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rulesched::harness::{
    parse_gen_spec, run_experiment, solve, write_comparison_csv, write_outcome, Algorithm,
    ExperimentConfig, InstanceSource,
};
use rulesched::problem::{enumerate_optimum, generate_instance, GenConfig, GenMode, DEFAULT_COMBO_BUDGET};
use rulesched::{BoaConfig, Error, HcConfig, Instance};

/// Rule-string nurse scheduling with model-building search.
///
/// Construction rules: 0 CostGreedy, 1 CoverGreedy, 2 Ratio, 3 RandomCheapest.
/// Algorithms: boa, boa+lcs, random, fixed:<rule>.
#[derive(Debug, Parser)]
#[command(name = "rulesched", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic instance document.
    Gen(GenArgs),
    /// Run one algorithm on one instance and write report.csv and solution.json.
    Solve(SolveArgs),
    /// Print the exhaustive optimum of a small instance.
    Enumerate(EnumerateArgs),
    /// Run a comparison and write a CSV table.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    nurses: usize,
    #[arg(long, default_value_t = 7)]
    days: usize,
    #[arg(long, default_value_t = 2)]
    shifts_per_day: usize,
    #[arg(long, default_value_t = 4)]
    patterns_per_nurse: usize,
    #[arg(long, default_value_t = 10)]
    cost_max: u32,
    /// random or planted
    #[arg(long, default_value = "random")]
    mode: GenMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BoaArgs {
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    elite_fraction: Option<f64>,
    #[arg(long)]
    offspring: Option<usize>,
    #[arg(long)]
    smoothing: Option<f64>,
    #[arg(long)]
    max_generations: Option<u32>,
    /// Generations without improvement before stopping (0 disables).
    #[arg(long)]
    stagnation: Option<u32>,
    #[arg(long)]
    hc_iterations: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
}

impl BoaArgs {
    fn config(&self) -> BoaConfig {
        let d = BoaConfig::default();
        BoaConfig {
            population_size: self.population.unwrap_or(d.population_size),
            elite_fraction: self.elite_fraction.unwrap_or(d.elite_fraction),
            offspring_count: self.offspring.or(d.offspring_count),
            smoothing: self.smoothing.unwrap_or(d.smoothing),
            max_generations: self.max_generations.unwrap_or(d.max_generations),
            stagnation_limit: self.stagnation.unwrap_or(d.stagnation_limit),
            hill_climb: HcConfig {
                iterations: self.hc_iterations.unwrap_or(d.hill_climb.iterations),
                delta: self.delta.unwrap_or(d.hill_climb.delta),
            },
            ..d
        }
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    /// boa, boa+lcs, random or fixed:<rule>
    #[arg(long)]
    algo: Algorithm,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Decode evaluations allowed (required for random and fixed:3).
    #[arg(long)]
    budget: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Also write the final strength table to strengths.txt (boa+lcs only).
    #[arg(long)]
    dump_strengths: bool,
    #[command(flatten)]
    boa: BoaArgs,
}

#[derive(Debug, Args)]
struct EnumerateArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Maximum number of assignments to enumerate.
    #[arg(long, default_value_t = DEFAULT_COMBO_BUDGET)]
    budget: u64,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// JSON experiment configuration; replaces the instance/algorithm flags.
    #[arg(long, conflicts_with_all = ["instance", "generate", "algos", "seeds", "budget"])]
    config: Option<PathBuf>,
    /// Instance document (repeatable).
    #[arg(long)]
    instance: Vec<PathBuf>,
    /// Generated instance, e.g. `nurses=5,patterns=4,mode=random,seed=3` (repeatable).
    #[arg(long)]
    generate: Vec<String>,
    /// Comma-separated algorithms.
    #[arg(long, value_delimiter = ',')]
    algos: Vec<Algorithm>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long)]
    budget: Option<u64>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Measure wall time instead of writing 0 in the wall_time_ms column.
    #[arg(long)]
    record_wall_time: bool,
    #[command(flatten)]
    boa: BoaArgs,
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Gen(args) => {
            let config = GenConfig {
                nurses: args.nurses,
                days: args.days,
                shifts_per_day: args.shifts_per_day,
                patterns_per_nurse: args.patterns_per_nurse,
                cost_max: args.cost_max,
                mode: args.mode,
                seed: args.seed,
            };
            let instance = generate_instance(&config)?;
            write_text(&args.out, instance.to_json() + "\n")?;
        }
        Command::Solve(args) => {
            let instance = Instance::from_path(&args.instance)?;
            let outcome = solve(&instance, args.algo, args.seed, args.budget, &args.boa.config())?;
            write_outcome(&outcome, &args.out, args.dump_strengths)?;
            println!("best {}", outcome.best.fitness);
        }
        Command::Enumerate(args) => {
            let instance = Instance::from_path(&args.instance)?;
            let (schedule, fitness) = enumerate_optimum(&instance, args.budget)?;
            println!("optimum {}", fitness.total);
            println!("preference_cost {}", fitness.preference_cost);
            println!("undercover_units {}", fitness.undercover_units);
            let assignment: Vec<String> = schedule.0.iter().map(ToString::to_string).collect();
            println!("schedule {}", assignment.join(","));
        }
        Command::Compare(args) => {
            let config = match &args.config {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                        path: path.clone(),
                        source: e,
                    })?;
                    let mut config: ExperimentConfig = serde_json::from_str(&text)
                        .map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))?;
                    config.record_wall_time |= args.record_wall_time;
                    config
                }
                None => {
                    let budget = args
                        .budget
                        .ok_or_else(|| Failure::Usage("--budget is required without --config".into()))?;
                    let mut instances: Vec<InstanceSource> =
                        args.instance.iter().cloned().map(InstanceSource::Path).collect();
                    for spec in &args.generate {
                        instances.push(InstanceSource::Generate(parse_gen_spec(spec)?));
                    }
                    if instances.is_empty() {
                        return Err(Failure::Usage("give --instance, --generate or --config".into()));
                    }
                    if args.algos.is_empty() || args.seeds.is_empty() {
                        return Err(Failure::Usage("--algos and --seeds are required without --config".into()));
                    }
                    ExperimentConfig {
                        instances,
                        algorithms: args.algos.clone(),
                        seeds: args.seeds.clone(),
                        budget,
                        boa: args.boa.config(),
                        record_wall_time: args.record_wall_time,
                    }
                }
            };
            let rows = run_experiment(&config)?;
            let file = File::create(&args.out).map_err(|e| Error::Io {
                path: args.out.clone(),
                source: e,
            })?;
            write_comparison_csv(&rows, BufWriter::new(file))?;
            println!("{} rows written to {}", rows.len(), args.out.display());
        }
    }
    Ok(())
}

fn write_text(path: &PathBuf, text: String) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })
}
