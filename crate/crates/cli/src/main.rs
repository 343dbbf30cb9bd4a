use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use epsaccel::harness::{
    self, Algorithm, AlgorithmSpec, Experiment, ExperimentFile, ExperimentSpec, FunctionalSpec, Metric, ReproduceOptions,
    RunReport, StopRule,
};
use epsaccel::sequences::{parse_sequence, SourceSpec};
use epsaccel::{Form, Shape};

#[derive(Parser, Debug)]
#[command(name = "epsaccel", version, about = "Accelerate sequences of scalars, vectors and matrices with ε-algorithms")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Accelerate the sequence stored in a text file.
    Accelerate {
        input: PathBuf,
        #[command(flatten)]
        algo: AlgoArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run one of the built-in experiment protocols.
    Reproduce {
        #[arg(value_parser = parse_experiment)]
        experiment: Experiment,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        p: Option<i32>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        jobs: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run the experiments of a TOML config file (`[[experiment]]` tables).
    Run {
        config: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(clap::Args, Debug)]
struct AlgoArgs {
    #[arg(long, default_value = "stea2", value_parser = parse_algo)]
    algo: Algorithm,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(1..=4))]
    form: u8,
    #[arg(long, default_value_t = 2)]
    kmax: usize,
    #[arg(long, default_value_t = 10)]
    p: i32,
    #[arg(long, value_enum, default_value_t = FunctionalArg::Dot)]
    functional: FunctionalArg,
    /// Text file holding y (dot), Y (trace-y), or u then v (bilinear).
    #[arg(long)]
    y_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(clap::Args, Debug)]
struct OutArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file (a directory for CSV output of several reports).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum FunctionalArg {
    Dot,
    Trace,
    TraceY,
    Bilinear,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Format {
    Csv,
    Json,
}

fn parse_algo(s: &str) -> Result<Algorithm, String> {
    s.parse()
}

fn parse_experiment(s: &str) -> Result<Experiment, String> {
    s.parse()
}

enum Failure {
    Usage(anyhow::Error),
    Breakdown(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

fn seed_override(seed: u64) -> anyhow::Result<u64> {
    match std::env::var("EPSACCEL_SEED") {
        Ok(v) => v.trim().parse().with_context(|| format!("EPSACCEL_SEED='{v}' is not an unsigned integer")),
        Err(_) => Ok(seed),
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn functional_spec(arg: FunctionalArg, y_file: Option<&Path>) -> anyhow::Result<FunctionalSpec> {
    let terms = match y_file {
        Some(p) => Some(parse_sequence(&read(p)?).with_context(|| format!("parsing {}", p.display()))?),
        None => None,
    };
    let first = |t: &Option<Vec<epsaccel::Element64>>| t.as_ref().map(|t| t[0].data().to_vec());
    Ok(match arg {
        FunctionalArg::Dot => FunctionalSpec::Dot { y: first(&terms) },
        FunctionalArg::Trace => {
            if terms.is_some() {
                bail!("--y-file is not used by the trace functional");
            }
            FunctionalSpec::Trace
        }
        FunctionalArg::TraceY => FunctionalSpec::TraceY { y: first(&terms) },
        FunctionalArg::Bilinear => match terms {
            None => FunctionalSpec::Bilinear { u: None, v: None },
            Some(t) if t.len() == 2 => {
                FunctionalSpec::Bilinear { u: Some(t[0].data().to_vec()), v: Some(t[1].data().to_vec()) }
            }
            Some(t) => bail!("bilinear --y-file needs two vectors u and v, found {} terms", t.len()),
        },
    })
}

fn accelerate(input: &Path, a: &AlgoArgs, out: &OutArgs) -> Result<(), Failure> {
    let text = read(input)?;
    let terms = parse_sequence(&text).with_context(|| format!("parsing {}", input.display()))?;
    let rows = match terms[0].shape() {
        Shape::Matrix(m, _) => Some(m),
        _ => None,
    };
    let n = terms.len();
    let source = SourceSpec::Literal { terms: terms.into_iter().map(|t| t.into_data()).collect(), rows, limit: None };
    let form = Form::try_from(a.form).map_err(|e| anyhow!(e))?;
    let spec = ExperimentSpec {
        name: input.display().to_string(),
        seed: seed_override(a.seed)?,
        source,
        algorithm: AlgorithmSpec { algo: a.algo, form, max_k: a.kmax, p: a.p, particular_rules: true },
        functional: functional_spec(a.functional, a.y_file.as_deref())?,
        metrics: vec![Metric::InfNormError],
        stop: StopRule::NTerms { n },
        keep_values: true,
    };
    let report = harness::run(&spec).context("running the table")?;
    write_reports(std::slice::from_ref(&report), out)?;
    let requested: Vec<_> = report.entries.iter().filter(|e| e.k >= 1).collect();
    if a.kmax >= 1 && !requested.is_empty() && requested.iter().all(|e| !e.valid) {
        return Err(Failure::Breakdown(format!("all columns 2..{} broke down", 2 * a.kmax)));
    }
    Ok(())
}

fn run_specs(specs: &[ExperimentSpec], jobs: Option<usize>) -> Result<Vec<RunReport>, Failure> {
    harness::run_all(specs, jobs)
        .into_iter()
        .zip(specs)
        .map(|(r, s)| r.with_context(|| format!("experiment '{}'", s.name)).map_err(Failure::Usage))
        .collect()
}

fn write_reports(reports: &[RunReport], out: &OutArgs) -> anyhow::Result<()> {
    match (out.format, &out.out) {
        (Format::Json, path) => {
            let text = if reports.len() == 1 {
                reports[0].to_json()
            } else {
                harness::reports_to_json(reports)
            };
            match path {
                Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
                None => println!("{text}"),
            }
        }
        (Format::Csv, None) => {
            for r in reports {
                if reports.len() > 1 {
                    println!("# {}", r.name);
                }
                print!("{}", r.to_csv());
            }
        }
        (Format::Csv, Some(p)) if reports.len() == 1 => {
            fs::write(p, reports[0].to_csv()).with_context(|| format!("writing {}", p.display()))?
        }
        (Format::Csv, Some(dir)) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            for r in reports {
                let file = dir.join(format!("{}.csv", r.name.replace('/', "_")));
                fs::write(&file, r.to_csv()).with_context(|| format!("writing {}", file.display()))?;
            }
        }
    }
    Ok(())
}

fn main_inner(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Accelerate { input, algo, out } => accelerate(&input, &algo, &out),
        Cmd::Reproduce { experiment, dim, p, seed, jobs, out } => {
            let opts = ReproduceOptions { dim, p, seed: seed_override(seed)? };
            let specs = harness::experiment_specs(experiment, opts);
            let reports = run_specs(&specs, jobs)?;
            print!("{}", harness::summarize(experiment, &reports));
            if out.out.is_some() {
                write_reports(&reports, &out)?;
            }
            Ok(())
        }
        Cmd::Run { config, jobs, out } => {
            let file = ExperimentFile::from_toml(&read(&config)?).with_context(|| format!("parsing {}", config.display()))?;
            let reports = run_specs(&file.experiment, jobs)?;
            write_reports(&reports, &out)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Breakdown(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
