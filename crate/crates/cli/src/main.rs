use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use dso_core::benchmarks::{self, BenchmarkFunction, FunctionId};
use dso_core::fitness::{self, FitnessError, Population};
use dso_core::routing::{self, ReportFormat};
use dso_core::tsp::{self, AcoConfig, DistanceMatrix};
use dso_core::DEFAULT_SEED;

#[derive(Parser, Debug)]
#[command(name = "dso", version, about = "Donkey and smuggler optimization toolkit")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,

    /// Write the report to a file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Print wall-clock time to stderr.
    #[arg(long, global = true)]
    time: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Traveling salesman tours from a distance matrix CSV.
    Tsp {
        /// Matrix file: n rows of n comma-separated distances.
        matrix: PathBuf,
        #[command(subcommand)]
        mode: TspMode,
    },
    /// Random-population smuggler statistics on a benchmark function.
    Bench {
        /// F1..F8, F11, F13, or `all`.
        function: String,
        #[arg(long, default_value_t = 30)]
        runs: usize,
        #[arg(long, default_value_t = 1000)]
        pop: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Run a routing scenario; `bundled:<name>` selects a shipped scenario.
    Route { scenario: String },
    /// Rank a population table.
    Fitness { population: PathBuf },
}

#[derive(Subcommand, Debug)]
enum TspMode {
    /// Nearest-neighbor tour from every start city.
    AllStarts,
    /// Every first-hop alternative from one start city (1-based).
    Alternates { start: usize },
    /// Exhaustive optimum (up to 12 cities).
    Brute,
    /// Ant colony baseline.
    Aco {
        #[arg(long, default_value_t = 3)]
        ants: usize,
        #[arg(long, default_value_t = 100)]
        iterations: usize,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

enum CliError {
    Input(String),
    Degenerate(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Degenerate(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Degenerate(m) => m,
        }
    }
}

fn input<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> CliError {
    move |e| CliError::Input(format!("{context}: {e}"))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(input(path.display()))
}

fn cmd_tsp(matrix: &Path, mode: &TspMode, format: Format) -> Result<String, CliError> {
    let m = DistanceMatrix::from_csv(&read(matrix)?).map_err(input(matrix.display()))?;
    let csv = format == Format::Csv;
    let out = match mode {
        TspMode::AllStarts => {
            let all = tsp::smuggler_all_starts(&m);
            if csv {
                tsp::tours_to_csv(&all.tours)
            } else {
                let mut out = String::new();
                for t in &all.tours {
                    out.push_str(&format!("Path from city {}: {t}\n", t.start + 1));
                }
                let starts: Vec<String> = all.best_starts.iter().map(|s| (s + 1).to_string()).collect();
                out.push_str(&format!(
                    "Best weight {} from start cities {}\n",
                    all.best_weight,
                    starts.join(", ")
                ));
                out
            }
        }
        TspMode::Alternates { start } => {
            if *start == 0 {
                return Err(CliError::Input("start city is 1-based".into()));
            }
            let tours = tsp::alternate_paths(&m, start - 1).map_err(input("alternates"))?;
            if csv {
                tsp::tours_to_csv(&tours)
            } else {
                tours
                    .iter()
                    .enumerate()
                    .map(|(i, t)| format!("Path {} = {t}\n", i + 1))
                    .collect()
            }
        }
        TspMode::Brute => {
            let t = tsp::brute_force_optimum(&m).map_err(input("brute"))?;
            if csv {
                tsp::tours_to_csv(std::slice::from_ref(&t))
            } else {
                format!("Optimum: {t}\n")
            }
        }
        TspMode::Aco { ants, iterations, rho, seed } => {
            let cfg = AcoConfig { n_ants: *ants, iterations: *iterations, rho: *rho, seed: *seed };
            let t = tsp::aco_baseline(&m, &cfg).map_err(input("aco"))?;
            if csv {
                tsp::tours_to_csv(std::slice::from_ref(&t))
            } else {
                format!("Best route: {t}\n")
            }
        }
    };
    Ok(out)
}

fn cmd_bench(
    function: &str,
    runs: usize,
    pop: usize,
    seed: u64,
    format: Format,
) -> Result<String, CliError> {
    let ids: Vec<FunctionId> = if function.eq_ignore_ascii_case("all") {
        FunctionId::ALL.to_vec()
    } else {
        vec![function.parse().map_err(input("function"))?]
    };
    let rows = ids
        .iter()
        .map(|&id| benchmarks::run_statistics(&BenchmarkFunction::new(id), runs, pop, seed))
        .collect::<Result<Vec<_>, _>>()
        .map_err(input("bench"))?;
    Ok(match format {
        Format::Csv => benchmarks::statistics_to_csv(&rows),
        Format::Text => {
            let mut out = format!("runs = {runs}, population = {pop}, seed = {seed}\n");
            out.push_str(&benchmarks::statistics_to_text(&rows));
            for r in &rows {
                out.push_str(&format!("{} best overall = {}\n", r.function, r.best_overall));
            }
            out
        }
    })
}

fn cmd_route(scenario: &str, format: Format) -> Result<String, CliError> {
    let text = match scenario.strip_prefix("bundled:") {
        Some(name) => routing::bundled::by_name(name)
            .ok_or_else(|| {
                CliError::Input(format!(
                    "no bundled scenario `{name}` (available: {})",
                    routing::bundled::NAMES.join(", ")
                ))
            })?
            .to_string(),
        None => read(Path::new(scenario))?,
    };
    let s = routing::load_scenario(&text).map_err(input(scenario))?;
    let log = routing::run(&s).map_err(input(scenario))?;
    let format = match format {
        Format::Csv => ReportFormat::Csv,
        Format::Text => ReportFormat::Text,
    };
    Ok(routing::report(&log, format))
}

fn cmd_fitness(path: &Path, format: Format) -> Result<String, CliError> {
    let pop = Population::parse_table(&read(path)?).map_err(input(path.display()))?;
    let report = fitness::rank(&pop).map_err(|e| match e {
        FitnessError::AllParametersConstant => CliError::Degenerate(format!("{}: {e}", path.display())),
        other => CliError::Input(format!("{}: {other}", path.display())),
    })?;
    Ok(match format {
        Format::Csv => report.to_csv(),
        Format::Text => report.to_text(),
    })
}

fn execute(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Tsp { matrix, mode } => cmd_tsp(matrix, mode, cli.format),
        Command::Bench { function, runs, pop, seed } => cmd_bench(function, *runs, *pop, *seed, cli.format),
        Command::Route { scenario } => cmd_route(scenario, cli.format),
        Command::Fitness { population } => cmd_fitness(population, cli.format),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let result = execute(&cli).and_then(|out| match &cli.out {
        Some(path) => fs::write(path, out).map_err(input(path.display())),
        None => io::stdout()
            .write_all(out.as_bytes())
            .map_err(input("stdout")),
    });
    if cli.time {
        eprintln!("elapsed: {:.6} s", started.elapsed().as_secs_f64());
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
