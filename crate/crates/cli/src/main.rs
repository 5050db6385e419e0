use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dmcalc::verify::Suite;

mod commands;

use commands::Failure;

#[derive(Debug, Parser)]
#[command(name = "dmcalc", version, about = "Probability calculus over density matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// A ⊙ B as matrix JSON; with --limit-n, also the residual against (A^{1/n} B^{1/n})^n.
    Odot {
        a: PathBuf,
        b: PathBuf,
        /// Power of two, at most 2^20.
        #[arg(long)]
        limit_n: Option<u64>,
    },
    /// Iterates Bayes with a fixed likelihood and prints per-step projections as CSV.
    BayesIterate {
        #[arg(long)]
        prior: PathBuf,
        #[arg(long)]
        likelihood: PathBuf,
        #[arg(long)]
        steps: usize,
        /// Diagonal (classical) update; inputs may be vectors or diagonal matrices.
        #[arg(long)]
        conventional: bool,
    },
    /// Conditions a joint density.
    Condition {
        joint: PathBuf,
        /// Factor dimensions as nA,nB.
        #[arg(long, value_parser = parse_dims)]
        dims: (usize, usize),
        #[arg(long, value_enum)]
        rule: Rule,
        /// Unit vector over A (CP3, CP4).
        #[arg(long)]
        a: Option<PathBuf>,
        /// Unit vector over B (CP2, CP4).
        #[arg(long)]
        b: Option<PathBuf>,
    },
    /// Recovers D(B) from a conditional D(A|B).
    EmRecover {
        conditional: PathBuf,
        #[arg(long, value_parser = parse_dims)]
        dims: (usize, usize),
        #[arg(long, default_value_t = dmcalc::conditional::EM_TOL)]
        tol: f64,
        #[arg(long, default_value_t = dmcalc::conditional::EM_MAX_ITER)]
        max_iter: usize,
    },
    /// Runs the seeded property suites, one report line per rule.
    Verify {
        /// Suite to run; all suites when omitted.
        #[arg(long)]
        suite: Option<Suite>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        dim_max: usize,
    },
    /// tr(W uuᵀ)·u for u around the unit circle, as CSV.
    FigureEight {
        w: PathBuf,
        #[arg(long, default_value_t = 360)]
        samples: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "UPPER")]
enum Rule {
    Cp1,
    Cp2,
    Cp3,
    Cp4,
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected nA,nB, got {s:?}"))?;
    let parse = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
    Ok((parse(a)?, parse(b)?))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let result = dispatch(cli.command, &mut out).and_then(|()| out.flush().map_err(Failure::from));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("dmcalc: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(command: Command, out: &mut impl Write) -> Result<(), Failure> {
    match command {
        Command::Odot { a, b, limit_n } => commands::odot(&a, &b, limit_n, out),
        Command::BayesIterate { prior, likelihood, steps, conventional } => {
            commands::bayes_iterate(&prior, &likelihood, steps, conventional, out)
        }
        Command::Condition { joint, dims, rule, a, b } => {
            let rule = match rule {
                Rule::Cp1 => "CP1",
                Rule::Cp2 => "CP2",
                Rule::Cp3 => "CP3",
                Rule::Cp4 => "CP4",
            };
            commands::condition(&joint, dims, rule, a.as_deref(), b.as_deref(), out)
        }
        Command::EmRecover { conditional, dims, tol, max_iter } => {
            commands::em_recover(&conditional, dims, tol, max_iter, out)
        }
        Command::Verify { suite, trials, seed, dim_max } => {
            let cfg = dmcalc::verify::Config { trials, seed, dim_max, ..Default::default() };
            commands::verify(suite, &cfg, out)
        }
        Command::FigureEight { w, samples } => commands::figure_eight(&w, samples, out),
    }
}
