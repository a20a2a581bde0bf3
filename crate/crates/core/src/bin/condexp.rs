use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use condexp::cli::{
    classify_instance, exit_code, inspect, render_batch, render_classify, render_inspect,
    render_spectrum, render_verify, spectrum_instance, verify, BatchReport, InstanceFile,
    EXIT_INVALID_INPUT, EXIT_OK,
};
use condexp::instance_factory::{
    degenerate_instance, product_space_example, proportional_instance, random_instance,
    symmetric_interval_example, Instance,
};
use condexp::tolerance::{LEVEL_TOL, PSD_TOL, SPEC_TOL, SUPPORT_TOL};
use condexp::{Error, Tolerances};

const AFTER_HELP: &str = "\
Exit codes:
  0  success; for verify, every gating check passed
  1  a gating check failed (the JSON report lists them under \"failures\")
  2  the instance could not be parsed or violates an invariant
  3  a numerical routine did not converge

Instance file (JSON, 0-based indices):
  {\"weights\": [m0, m1, ...],          positive and finite
   \"blocks\":  [[0, 2], [1], ...],     a partition of the points
   \"u\": [[re, im] | number, ...],
   \"w\": [[re, im] | number, ...]}

Reports are JSON on stdout with stable snake_case keys. verify emits
{instance, tolerances, norm, classes, spectrum, checks, failures, passed};
every entry of checks is {name, passed, gating, value, tolerance, detail?}.
With --count the output is {count, failed, passed, reports}.
Diagnostics go to stderr; set CONDEXP_LOG (e.g. CONDEXP_LOG=debug) for more.";

#[derive(Parser)]
#[command(
    name = "condexp",
    version,
    about = "Weighted conditional expectation operators on finite measure spaces",
    after_help = AFTER_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Conditional moments, supports and the Cauchy-Schwarz gap
    Inspect(Run),
    /// A-class, *-A-class and quasi-*-A-class verdicts
    Classify(Run),
    /// Closed-form and numeric spectrum
    Spectrum(Run),
    /// Check every closed form against the numerical oracle
    Verify(Run),
    /// Write an instance file
    Gen(Gen),
}

#[derive(Args)]
struct Run {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    tols: TolFlags,
    /// Human-readable tables instead of JSON
    #[arg(long)]
    pretty: bool,
}

#[derive(Args)]
struct Gen {
    #[command(flatten)]
    source: Source,
    /// Output path; stdout when omitted
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Example {
    Product,
    Symmetric,
}

#[derive(Args)]
struct Source {
    /// Read the instance from a JSON file
    #[arg(long, conflicts_with_all = ["example", "random", "proportional", "degenerate"])]
    file: Option<PathBuf>,
    /// One of the discretized worked examples
    #[arg(long, value_enum)]
    example: Option<Example>,
    /// Columns of the product example
    #[arg(long, default_value_t = 8)]
    nx: usize,
    /// Rows of the product example
    #[arg(long, default_value_t = 200)]
    ny: usize,
    /// Point pairs of the symmetric example
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Seeded random instance
    #[arg(long, conflicts_with_all = ["example", "proportional", "degenerate"])]
    random: bool,
    /// Seeded instance with w conditionally proportional to conj(u)
    #[arg(long, conflicts_with_all = ["example", "degenerate"])]
    proportional: bool,
    /// Seeded instance with u and w vanishing on some atoms
    #[arg(long, conflicts_with = "example")]
    degenerate: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    points: usize,
    #[arg(long, default_value_t = 3)]
    blocks: usize,
    /// Real-valued u and w for --random
    #[arg(long)]
    real: bool,
    /// Number of consecutive seeds starting at --seed (verify only)
    #[arg(long, default_value_t = 1)]
    count: u64,
}

impl Source {
    fn seeded(&self) -> bool {
        self.random || self.proportional || self.degenerate
    }

    fn build(&self, seed: u64) -> condexp::Result<Instance> {
        if let Some(path) = &self.file {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::InvalidParameter(format!("cannot read {}: {e}", path.display()))
            })?;
            return InstanceFile::parse(&text);
        }
        match self.example {
            Some(Example::Product) => return product_space_example(self.nx, self.ny),
            Some(Example::Symmetric) => return symmetric_interval_example(self.n),
            None => {}
        }
        if self.random {
            random_instance(seed, self.points, self.blocks, !self.real)
        } else if self.proportional {
            proportional_instance(seed, self.points, self.blocks)
        } else if self.degenerate {
            degenerate_instance(seed, self.points, self.blocks)
        } else {
            Err(Error::InvalidParameter(
                "no instance source; use --file, --example, --random, --proportional or --degenerate"
                    .into(),
            ))
        }
    }

    fn seeds(&self) -> condexp::Result<Vec<u64>> {
        if self.count == 0 {
            return Err(Error::InvalidParameter("--count must be at least 1".into()));
        }
        if self.count > 1 && !self.seeded() {
            return Err(Error::InvalidParameter(
                "--count needs a seeded source (--random, --proportional or --degenerate)".into(),
            ));
        }
        (0..self.count)
            .map(|k| {
                self.seed
                    .checked_add(k)
                    .ok_or_else(|| Error::InvalidParameter("seed range overflows u64".into()))
            })
            .collect()
    }
}

#[derive(Args)]
struct TolFlags {
    /// Loewner-order and partial-isometry tolerance
    #[arg(long, default_value_t = PSD_TOL)]
    tol_psd: f64,
    /// Spectral clustering and zero-eigenvalue tolerance (scaled by 1 + ||T||)
    #[arg(long, default_value_t = SPEC_TOL)]
    tol_spec: f64,
    /// Threshold below which E|u|^2, E|w|^2 and E(u) count as zero
    #[arg(long, default_value_t = SUPPORT_TOL)]
    tol_support: f64,
    /// Level-set and pointwise-criterion tolerance
    #[arg(long, default_value_t = LEVEL_TOL)]
    tol_level: f64,
}

impl TolFlags {
    fn tolerances(&self) -> condexp::Result<Tolerances> {
        let all = [
            ("--tol-psd", self.tol_psd),
            ("--tol-spec", self.tol_spec),
            ("--tol-support", self.tol_support),
            ("--tol-level", self.tol_level),
        ];
        for (flag, value) in all {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{flag} must be a finite nonnegative number"
                )));
            }
        }
        Ok(Tolerances {
            support: self.tol_support,
            level: self.tol_level,
            psd: self.tol_psd,
            spec: self.tol_spec,
        })
    }
}

fn emit<T: Serialize>(report: &T, pretty: bool, render: impl Fn(&T) -> String) {
    if pretty {
        print!("{}", render(report));
    } else {
        println!(
            "{}",
            serde_json::to_string(report).expect("reports contain only serializable data")
        );
    }
}

fn run(command: Command) -> condexp::Result<i32> {
    match command {
        Command::Gen(gen) => {
            let instance = gen.source.build(gen.source.seed)?;
            let text = InstanceFile::to_json(&instance);
            match &gen.output {
                Some(path) => std::fs::write(path, text + "\n").map_err(|e| {
                    Error::InvalidParameter(format!("cannot write {}: {e}", path.display()))
                })?,
                None => println!("{text}"),
            }
            Ok(EXIT_OK)
        }
        Command::Inspect(args) => {
            let tols = args.tols.tolerances()?;
            let report = inspect(&args.source.build(args.source.seed)?, &tols)?;
            emit(&report, args.pretty, render_inspect);
            Ok(EXIT_OK)
        }
        Command::Classify(args) => {
            let tols = args.tols.tolerances()?;
            let report = classify_instance(&args.source.build(args.source.seed)?, &tols)?;
            emit(&report, args.pretty, render_classify);
            Ok(EXIT_OK)
        }
        Command::Spectrum(args) => {
            let tols = args.tols.tolerances()?;
            let report = spectrum_instance(&args.source.build(args.source.seed)?, &tols)?;
            emit(&report, args.pretty, render_spectrum);
            Ok(EXIT_OK)
        }
        Command::Verify(args) => {
            let tols = args.tols.tolerances()?;
            let seeds = args.source.seeds()?;
            if seeds.len() == 1 {
                let report = verify(&args.source.build(seeds[0])?, &tols)?;
                emit(&report, args.pretty, render_verify);
                return Ok(report.exit_code());
            }
            log::info!("verifying {} instances", seeds.len());
            let reports = seeds
                .par_iter()
                .map(|&seed| verify(&args.source.build(seed)?, &tols))
                .collect::<condexp::Result<Vec<_>>>()?;
            let batch = BatchReport::new(reports);
            emit(&batch, args.pretty, render_batch);
            Ok(if batch.passed {
                EXIT_OK
            } else {
                condexp::cli::EXIT_CHECK_FAILED
            })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CONDEXP_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID_INPUT
            } else {
                EXIT_OK
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
