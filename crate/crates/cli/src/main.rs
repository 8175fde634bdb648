use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use calrank::io::{parse_trial_csv, CovariateColumns, CsvSchema, StratumColumn};
use calrank::simulation::{write_report_csv, SimulationPlan};
use calrank::{analyze, logrank_test, AnalysisOptions, Error, SchemeConfig, SchemeKind};

const OUT_DIR_ENV: &str = "CALRANK_OUT_DIR";

#[derive(Parser)]
#[command(name = "calrank", version, about = "Covariate-calibrated log-rank tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a trial CSV with all four tests and hazard-ratio estimators.
    Analyze(AnalyzeArgs),
    /// Run Monte Carlo scenarios from a JSON plan and write CSV reports.
    Simulate(SimulateArgs),
    /// Assign arms to margin-level vectors read line by line from stdin.
    Randomize(RandomizeArgs),
}

#[derive(clap::Args)]
struct AnalyzeArgs {
    #[arg(long)]
    data: PathBuf,
    /// Design proportion of arm 1 (default: observed n1/n).
    #[arg(long)]
    pi: Option<f64>,
    /// Comma-separated covariate columns, `auto` (x1, x2, ...) or `none`.
    #[arg(long, default_value = "auto")]
    covariates: String,
    /// Stratum column (default: `stratum` when present).
    #[arg(long)]
    stratum_col: Option<String>,
    #[arg(long, default_value = "time")]
    time_col: String,
    #[arg(long, default_value = "event")]
    event_col: String,
    #[arg(long, default_value = "arm")]
    arm_col: String,
    /// Also analyze each stratum with Bonferroni-adjusted p-values.
    #[arg(long)]
    subgroups: bool,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Confidence level for hazard-ratio intervals.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Print the JSON report instead of the table.
    #[arg(long)]
    json: bool,
    /// Also write analysis.json into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: $CALRANK_OUT_DIR, then the working directory).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    replications: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Simple,
    PermutedBlock,
    Minimization,
}

#[derive(clap::Args)]
struct RandomizeArgs {
    #[arg(long, value_enum)]
    scheme: SchemeArg,
    #[arg(long, default_value_t = 0.5)]
    pi: f64,
    #[arg(long, default_value_t = 4)]
    block_size: usize,
    #[arg(long, default_value_t = 0.8)]
    p_prefer: f64,
    /// Number of levels of each margin, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "2,3")]
    margins: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

enum Failure {
    Usage(String),
    Calc(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Calc(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Calc(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Analyze(a) => run_analyze(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Randomize(a) => run_randomize(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Calc(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_degenerate() { 3 } else { 2 })
        }
    }
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn check_probability(name: &str, x: f64) -> Result<(), Failure> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Failure::Usage(format!("--{name} must lie in (0, 1), got {x}")))
    }
}

fn run_analyze(a: AnalyzeArgs) -> Result<(), Failure> {
    check_probability("alpha", a.alpha)?;
    check_probability("level", a.level)?;
    if let Some(pi) = a.pi {
        check_probability("pi", pi)?;
    }
    let covariates = match a.covariates.as_str() {
        "auto" => CovariateColumns::Auto,
        "none" | "" => CovariateColumns::None,
        list => CovariateColumns::Named(list.split(',').map(|s| s.trim().to_string()).collect()),
    };
    let schema = CsvSchema {
        time: a.time_col,
        event: a.event_col,
        arm: a.arm_col,
        stratum: a.stratum_col.map_or(StratumColumn::Auto, StratumColumn::Named),
        covariates,
    };
    let data = parse_trial_csv(&a.data, &schema)?;
    // Without a defined log-rank statistic there is nothing to report.
    logrank_test(&data)?;
    let report = analyze(
        &data,
        &AnalysisOptions {
            pi: a.pi,
            alpha: a.alpha,
            level: a.level,
            subgroups: a.subgroups,
        },
    );
    let json = report.to_json()?;
    if a.out.is_some() || std::env::var_os(OUT_DIR_ENV).is_some() {
        let dir = out_dir(a.out);
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("analysis.json"), &json)?;
    }
    let mut stdout = io::stdout().lock();
    if a.json {
        writeln!(stdout, "{json}")?;
    } else {
        write!(stdout, "{report}")?;
    }
    Ok(())
}

fn run_simulate(a: SimulateArgs) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&a.config)?;
    let mut plan = SimulationPlan::from_json(&text)?;
    if let Some(seed) = a.seed {
        plan.seed = seed;
    }
    if let Some(alpha) = a.alpha {
        plan.alpha = alpha;
    }
    if let Some(r) = a.replications {
        plan.replications = r;
    }
    if a.threads == Some(0) {
        return Err(Failure::Usage("--threads must be at least 1".into()));
    }
    let reports = plan.run_with_threads(a.threads)?;
    let dir = out_dir(a.out);
    std::fs::create_dir_all(&dir)?;
    let csv_path = dir.join("simulation.csv");
    write_report_csv(&reports, std::fs::File::create(&csv_path)?)?;
    std::fs::write(
        dir.join("simulation.json"),
        serde_json::to_string_pretty(&reports).map_err(Error::from)?,
    )?;
    let mut stdout = io::stdout().lock();
    for r in &reports {
        let c = &r.config;
        write!(
            stdout,
            "case {:<22} {:<15} theta {:<6}",
            c.case.label(),
            c.scheme.kind.label(),
            c.theta
        )?;
        for row in r.rows() {
            write!(stdout, " {} {:.4}", row.test, row.rate)?;
        }
        writeln!(stdout, " ({:.1}s)", r.runtime_secs)?;
    }
    writeln!(stdout, "wrote {}", csv_path.display())?;
    Ok(())
}

fn parse_levels(line: &str, lineno: usize) -> Result<Vec<usize>, Failure> {
    line.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse().map_err(|_| {
                Failure::Calc(Error::BadRow {
                    row: lineno,
                    msg: format!("`{s}` is not a level index"),
                })
            })
        })
        .collect()
}

fn run_randomize(a: RandomizeArgs) -> Result<(), Failure> {
    let kind = match a.scheme {
        SchemeArg::Simple => SchemeKind::Simple,
        SchemeArg::PermutedBlock => SchemeKind::PermutedBlock,
        SchemeArg::Minimization => SchemeKind::Minimization,
    };
    let config = SchemeConfig {
        kind,
        pi: a.pi,
        block_size: a.block_size,
        p_prefer: a.p_prefer,
        margins: a.margins,
    };
    config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let mut state = calrank::AssignmentState::new(
        config,
        calrank::rng::stream(a.seed, 0, calrank::rng::Purpose::Randomization),
    )?;
    let mut stdout = io::BufWriter::new(io::stdout().lock());
    for (i, line) in io::stdin().lock().lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let z = parse_levels(&line, i + 1)?;
        let arm = state.assign_next(&z)?;
        writeln!(stdout, "{arm}")?;
    }
    stdout.flush()?;
    Ok(())
}
