//! Command-line driver: `gen-matrices`, `solve`, `bench`.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 numerical failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::factorize::{OperatorForm, RootSet};
use crate::harness::{
    build_matrix_a_dim, build_matrix_b_dim, error_norms, prepare, run_cell, run_prepared, write_csv, Decomposition,
    ExperimentId, ExperimentSpec, InitialState,
};
use crate::itersplit::Scheme;
use crate::matkernel::RealMatrix;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "itsplit", version, about = "Iterative operator splitting for factored linear ODE systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the two benchmark matrices as CSV blocks separated by a blank line.
    GenMatrices {
        #[arg(long, default_value_t = 10)]
        dim: usize,
    },
    /// Integrate one configuration and report the error at the horizon.
    Solve {
        #[command(flatten)]
        spec: SpecArgs,
        /// Exit with status 2 when the max-norm error exceeds this.
        #[arg(long)]
        max_error: Option<f64>,
    },
    /// Run a scheme x step x sweep grid and write the CSV report.
    Bench {
        #[command(flatten)]
        spec: SpecArgs,
        /// CSV destination; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct SpecArgs {
    #[arg(long, default_value = "integro", value_parser = parse_from_str::<ExperimentId>)]
    example: ExperimentId,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    horizon: Option<f64>,
    /// Comma-separated step sizes.
    #[arg(long, value_delimiter = ',')]
    tau: Option<Vec<f64>>,
    /// Inclusive range `a:b` or comma-separated list.
    #[arg(long, value_parser = parse_sweeps)]
    sweeps: Option<SweepList>,
    #[arg(long, value_delimiter = ',', value_parser = parse_from_str::<Scheme>)]
    schemes: Option<Vec<Scheme>>,
    #[arg(long, value_parser = parse_from_str::<RootSet>)]
    root_set: Option<RootSet>,
    #[arg(long, value_parser = parse_from_str::<OperatorForm>)]
    operator_form: Option<OperatorForm>,
    /// Operator decomposition within each root.
    #[arg(long, value_parser = parse_from_str::<Decomposition>)]
    split: Option<Decomposition>,
    #[arg(long)]
    substeps: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_parser = parse_from_str::<InitialState>)]
    initial: Option<InitialState>,
    /// Print the resolved configuration as flags and exit.
    #[arg(long)]
    print_spec: bool,
}

#[derive(Debug, Clone, PartialEq)]
struct SweepList(Vec<usize>);

fn parse_from_str<T: std::str::FromStr<Err = Error>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_sweeps(s: &str) -> std::result::Result<SweepList, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad sweep count '{t}': {e}"));
    if let Some((a, b)) = s.split_once(':') {
        let (a, b) = (num(a)?, num(b)?);
        if a > b {
            return Err(format!("empty sweep range {a}:{b}"));
        }
        Ok(SweepList((a..=b).collect()))
    } else {
        Ok(SweepList(s.split(',').map(num).collect::<std::result::Result<_, _>>()?))
    }
}

impl SpecArgs {
    /// Applies the flags over `base`.
    fn resolve(&self, mut spec: ExperimentSpec) -> Result<ExperimentSpec> {
        spec.id = self.example;
        if let Some(v) = self.dim {
            spec.dim = v;
        }
        if let Some(v) = self.horizon {
            spec.horizon = v;
        }
        if let Some(v) = &self.tau {
            spec.taus = v.clone();
        }
        if let Some(v) = &self.sweeps {
            spec.sweeps = v.0.clone();
        }
        if let Some(v) = &self.schemes {
            spec.schemes = v.clone();
        }
        if let Some(v) = self.root_set {
            spec.root_set = v;
        }
        if let Some(v) = self.operator_form {
            spec.operator_form = v;
        }
        if let Some(v) = self.split {
            spec.decomposition = v;
        }
        if let Some(v) = self.substeps {
            spec.substeps = v;
        }
        if let Some(v) = self.epsilon {
            spec.epsilon = v;
        }
        if let Some(v) = self.initial {
            spec.initial = v;
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// Flags that reproduce `spec` when parsed again.
pub fn spec_to_flags(spec: &ExperimentSpec) -> Vec<String> {
    let pairs = [
        ("--example", spec.id.to_string()),
        ("--dim", spec.dim.to_string()),
        ("--horizon", spec.horizon.to_string()),
        ("--tau", join(&spec.taus)),
        ("--sweeps", join(&spec.sweeps)),
        ("--schemes", join(&spec.schemes)),
        ("--root-set", spec.root_set.to_string()),
        ("--operator-form", spec.operator_form.to_string()),
        ("--split", spec.decomposition.to_string()),
        ("--substeps", spec.substeps.to_string()),
        ("--epsilon", spec.epsilon.to_string()),
        ("--initial", spec.initial.to_string()),
    ];
    pairs.into_iter().flat_map(|(k, v)| [k.to_string(), v]).collect()
}

/// Parses `bench` flags (without the program and subcommand names).
pub fn parse_bench_spec<I, S>(flags: I) -> Result<ExperimentSpec>
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let argv = ["itsplit", "bench"].into_iter().map(OsString::from).chain(flags.into_iter().map(Into::into));
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    match cli.command {
        Command::Bench { spec, .. } => spec.resolve(ExperimentSpec::new(spec.example)),
        _ => unreachable!("parsed as bench"),
    }
}

fn write_matrix(out: &mut dyn Write, m: &RealMatrix) -> std::io::Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|x| x.to_string()).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

fn solve_defaults(id: ExperimentId) -> ExperimentSpec {
    ExperimentSpec { taus: vec![0.1], sweeps: vec![6], schemes: vec![Scheme::TwoSide], ..ExperimentSpec::new(id) }
}

fn single<T: Copy>(items: &[T], flag: &str) -> Result<T> {
    match items {
        [x] => Ok(*x),
        _ => Err(Error::InvalidConfig(format!("solve takes a single value for {flag}"))),
    }
}

enum Outcome {
    Done,
    BoundExceeded(f64, f64),
}

fn execute(command: Command, out: &mut dyn Write) -> Result<Outcome> {
    let io = |source| Error::Io { path: PathBuf::from("<stdout>"), source };
    match command {
        Command::GenMatrices { dim } => {
            write_matrix(out, &build_matrix_a_dim(dim)?).map_err(io)?;
            writeln!(out).map_err(io)?;
            write_matrix(out, &build_matrix_b_dim(dim)?).map_err(io)?;
            Ok(Outcome::Done)
        }
        Command::Solve { spec: args, max_error } => {
            let spec = args.resolve(solve_defaults(args.example))?;
            if args.print_spec {
                writeln!(out, "{}", spec_to_flags(&spec).join(" ")).map_err(io)?;
                return Ok(Outcome::Done);
            }
            let scheme = single(&spec.schemes, "--schemes")?;
            let tau = single(&spec.taus, "--tau")?;
            let sweeps = single(&spec.sweeps, "--sweeps")?;
            let exp = prepare(&spec)?;
            let (state, _) = run_cell(&exp, &spec.split_config(scheme, tau, sweeps))?;
            let (l2, inf) = error_norms(&state, &exp.reference);
            writeln!(out, "# {} {} tau={} sweeps={} t={}", spec.id, scheme, tau, sweeps, spec.horizon).map_err(io)?;
            for z in state.iter() {
                writeln!(out, "{:e},{:e}", z.re, z.im).map_err(io)?;
            }
            writeln!(out, "# oracle={} error_l2={:e} error_inf={:e}", exp.oracle, l2, inf).map_err(io)?;
            match max_error {
                Some(bound) if !(inf <= bound) => Ok(Outcome::BoundExceeded(inf, bound)),
                _ => Ok(Outcome::Done),
            }
        }
        Command::Bench { spec: args, out: path } => {
            let spec = args.resolve(ExperimentSpec::new(args.example))?;
            if args.print_spec {
                writeln!(out, "{}", spec_to_flags(&spec).join(" ")).map_err(io)?;
                return Ok(Outcome::Done);
            }
            let report = run_prepared(&prepare(&spec)?)?;
            match path {
                Some(p) => write_csv(&report, &p)?,
                None => out.write_all(report.to_csv().as_bytes()).map_err(io)?,
            }
            Ok(Outcome::Done)
        }
    }
}

/// Runs the command line `argv` (including the program name) and returns
/// the exit status.
pub fn run_cli<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command, out) {
        Ok(Outcome::Done) => EXIT_OK,
        Ok(Outcome::BoundExceeded(got, bound)) => {
            let _ = writeln!(err, "error: max-norm error {got:e} exceeds bound {bound:e}");
            EXIT_NUMERICAL
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_USAGE
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run_cli(std::iter::once("itsplit").chain(args.iter().copied()), &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn sweep_syntax() {
        assert_eq!(parse_sweeps("1:6").unwrap().0, vec![1, 2, 3, 4, 5, 6]);
        assert_eq!(parse_sweeps("2,4").unwrap().0, vec![2, 4]);
        assert!(parse_sweeps("3:1").is_err());
        assert!(parse_sweeps("a").is_err());
    }

    #[test]
    fn print_spec_round_trips() {
        let args = [
            "--example",
            "third-order",
            "--tau",
            "0.1,0.05",
            "--sweeps",
            "2:3",
            "--schemes",
            "twoside-fused",
            "--root-set",
            "paper-literal",
            "--epsilon",
            "1e-9",
            "--substeps",
            "4",
            "--initial",
            "ramp",
        ];
        let spec = parse_bench_spec(args).unwrap();
        let again = parse_bench_spec(spec_to_flags(&spec)).unwrap();
        assert_eq!(spec, again);
        let (code, out, _) = run(&[&["bench"], &args[..], &["--print-spec"]].concat());
        assert_eq!(code, 0);
        assert_eq!(out.trim(), spec_to_flags(&spec).join(" "));
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(&["bench", "--bogus"]).0, EXIT_USAGE);
        assert_eq!(run(&["bench", "--tau", "0.3"]).0, EXIT_USAGE);
        assert_eq!(run(&["solve", "--tau", "0.1,0.05"]).0, EXIT_USAGE);
        assert_eq!(run(&[]).0, EXIT_USAGE);
        assert_eq!(run(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn gen_matrices_blocks() {
        let (code, out, _) = run(&["gen-matrices"]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines.len(), 21);
        assert_eq!(lines[3], "0.01,0.01,0.01,-0.03,0,0,0,0,0,0");
        assert_eq!(lines[10], "");
    }
}
