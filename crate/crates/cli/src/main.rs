//! `mr3mix` command-line driver: matrix generation, solving, benchmarking and
//! verification of eigenpair files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mr3mix::harness::{
    generate, paper_suite, quick_suite, read_matrix, read_pairs, run_bench, write_csv, write_matrix, write_pairs,
    Family, HarnessError, MatrixSpec,
};
use mr3mix::verify::residual_and_orthogonality;
use mr3mix::{solve, DoubleQuad, Precision, PrecisionMode, SingleDouble, SolverConfig};

#[derive(Parser)]
#[command(name = "mr3mix", version, about = "Mixed-precision MRRR tridiagonal eigensolver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    SingleDouble,
    DoubleQuad,
}

impl From<Mode> for PrecisionMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::SingleDouble => PrecisionMode::SingleDouble,
            Mode::DoubleQuad => PrecisionMode::DoubleQuad,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Paper,
    Quick,
}

#[derive(Subcommand)]
enum Command {
    /// Write a test matrix.
    Gen {
        #[arg(long)]
        family: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Precision of the written entries.
        #[arg(long, value_enum, default_value = "double-quad")]
        mode: Mode,
    },
    /// Compute eigenpairs of a matrix file.
    Solve {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        gaptol: Option<f64>,
        /// One-based inclusive index range, e.g. `1:10`.
        #[arg(long, value_parser = parse_subset)]
        subset: Option<(usize, usize)>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a benchmark suite and write one CSV row per case.
    Bench {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Report residual and orthogonality of an eigenpair file.
    Verify {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long, value_enum, default_value = "double-quad")]
        mode: Mode,
    },
}

fn parse_subset(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or("expected IL:IU")?;
    let il: usize = a.trim().parse().map_err(|_| format!("bad lower index `{a}`"))?;
    let iu: usize = b.trim().parse().map_err(|_| format!("bad upper index `{b}`"))?;
    if il == 0 || il > iu {
        return Err(format!("need 1 <= IL <= IU, got {il}:{iu}"));
    }
    Ok((il - 1, iu - 1))
}

/// A failure and its exit status.
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn config(msg: impl ToString) -> Self {
        Failure {
            code: 2,
            msg: msg.to_string(),
        }
    }

    fn io(msg: impl ToString) -> Self {
        Failure {
            code: 1,
            msg: msg.to_string(),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::UnknownFamily(_) | HarnessError::EmptyMatrix | HarnessError::MissingPath | HarnessError::Config(_) => {
                Failure::config(e)
            }
            _ => Failure::io(e),
        }
    }
}

fn open(path: &Path) -> Result<File, Failure> {
    File::open(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool, Failure> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(p) = threads {
        if p == 0 {
            return Err(Failure::config("--threads must be positive"));
        }
        b = b.num_threads(p);
    }
    b.build().map_err(Failure::io)
}

fn gen<P: Precision>(spec: &MatrixSpec, out: &Path) -> Result<(), Failure> {
    let t = generate::<P>(spec)?;
    let mut w = create(out)?;
    write_matrix(&mut w, &t)?;
    w.flush().map_err(Failure::io)?;
    println!("wrote {} {} matrix of size {} to {}", spec.family, P::MODE, t.n(), out.display());
    Ok(())
}

fn solve_file<P: Precision>(input: &Path, config: &SolverConfig, threads: Option<usize>, out: Option<&Path>) -> Result<(), Failure> {
    let t = read_matrix::<P::Narrow>(open(input)?)?;
    if let Some((_, iu)) = config.subset {
        if iu >= t.n() {
            return Err(Failure::config(format!("subset upper index {} exceeds n = {}", iu + 1, t.n())));
        }
    }
    let res = pool(threads)?
        .install(|| solve::<P>(&t, config))
        .map_err(Failure::config)?;
    let acc = residual_and_orthogonality::<P>(&t, &res.pairs).map_err(Failure::io)?;
    let s = &res.stats;
    println!("n {} pairs {} blocks {} mode {}", t.n(), res.pairs.len(), s.blocks, P::MODE);
    println!("R {:e} O {:e}", acc.r, acc.o);
    println!(
        "d_max {} rho {} robustness_failures {} rqi_fallbacks {}",
        s.d_max, s.rho, s.robustness_failures, s.rqi_fallbacks
    );
    if let Some(path) = out {
        let mut w = create(path)?;
        write_pairs(&mut w, t.n(), &res.pairs)?;
        w.flush().map_err(Failure::io)?;
    }
    Ok(())
}

fn verify_files<P: Precision>(input: &Path, pairs: &Path) -> Result<(), Failure> {
    let t = read_matrix::<P::Narrow>(open(input)?)?;
    let (n, pairs) = read_pairs::<P::Narrow>(open(pairs)?)?;
    if n != t.n() {
        return Err(Failure::io(format!("pairs are for n = {n}, matrix has n = {}", t.n())));
    }
    let acc = residual_and_orthogonality::<P>(&t, &pairs).map_err(Failure::io)?;
    let bound = 20.0 * (n as f64).sqrt() * P::eps_narrow();
    println!("n {} pairs {}", n, pairs.len());
    println!("R {:e} O {:e} (20 sqrt(n) eps = {:e})", acc.r, acc.o, bound);
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Gen {
            family,
            n,
            seed,
            out,
            mode,
        } => {
            let family: Family = family.parse()?;
            if family == Family::File {
                return Err(Failure::config("family `file` cannot be generated"));
            }
            if n == 0 {
                return Err(Failure::config("--n must be positive"));
            }
            let spec = MatrixSpec::new(family, n, seed);
            match mode {
                Mode::SingleDouble => gen::<SingleDouble>(&spec, &out),
                Mode::DoubleQuad => gen::<DoubleQuad>(&spec, &out),
            }
        }
        Command::Solve {
            input,
            mode,
            gaptol,
            subset,
            threads,
            out,
        } => {
            let mut config = SolverConfig::new(mode.into());
            if let Some(g) = gaptol {
                config = config.with_gaptol(g);
            }
            config.subset = subset;
            config.validate().map_err(Failure::config)?;
            match mode {
                Mode::SingleDouble => solve_file::<SingleDouble>(&input, &config, threads, out.as_deref()),
                Mode::DoubleQuad => solve_file::<DoubleQuad>(&input, &config, threads, out.as_deref()),
            }
        }
        Command::Bench { suite, out, threads } => {
            if threads == Some(0) {
                return Err(Failure::config("--threads must be positive"));
            }
            let cases = match suite {
                Suite::Paper => paper_suite(),
                Suite::Quick => quick_suite(),
            };
            let records = run_bench(&cases, threads)?;
            let mut w = create(&out)?;
            write_csv(&mut w, &records)?;
            w.flush().map_err(Failure::io)?;
            let failed = records.iter().filter(|r| r.diagnostic.is_some()).count();
            println!("{} rows written to {} ({failed} failed)", records.len(), out.display());
            Ok(())
        }
        Command::Verify { input, pairs, mode } => match mode {
            Mode::SingleDouble => verify_files::<SingleDouble>(&input, &pairs),
            Mode::DoubleQuad => verify_files::<DoubleQuad>(&input, &pairs),
        },
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_syntax() {
        assert_eq!(parse_subset("1:10"), Ok((0, 9)));
        assert_eq!(parse_subset(" 3 : 3 "), Ok((2, 2)));
        assert!(parse_subset("0:4").is_err());
        assert!(parse_subset("5:4").is_err());
        assert!(parse_subset("7").is_err());
        assert!(parse_subset("a:b").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
