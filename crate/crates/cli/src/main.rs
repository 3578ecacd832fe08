//! `trapdoor`: forge RSA-trapdoored instances, reduce them, solve them
//! through the trapdoor, and check the results.
//!
//! Exit status is 0 on verified success, 1 when a verifier rejects a
//! result, 2 for bad usage or unreadable input.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use trapdoor_core::fc::{brute_force_min_coloring, tau4, verify_coloring, Coloring, ColoringFile, FcInstance};
use trapdoor_core::ilp::{
    brute_force_ilp, parse_lp, tau5, verify_assignment, write_lp, AssignmentFile, IlpModel,
};
use trapdoor_core::instances::{generate_sample, LabeledSample, SampleFile};
use trapdoor_core::numtheory::{keygen, KeyFile, RsaKey};
use trapdoor_core::pipeline::{occam_sample_size, trapdoor_solve_fc, trapdoor_solve_ilp, OccamParams, PipelineError};
use trapdoor_core::qubo::{fc_to_hamiltonian, format_rational, ground_states, parse_rational, BinaryPolynomial};

#[derive(Parser)]
#[command(name = "trapdoor", version, about = "RSA-trapdoored coloring and ILP instances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a toy RSA key.
    Keygen {
        /// Bits per prime.
        #[arg(long)]
        bits: u32,
        #[arg(long)]
        seed: u64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Draw a labeled sample under a key.
    Sample {
        #[arg(long)]
        key: PathBuf,
        #[arg(short)]
        m: usize,
        #[arg(long)]
        seed: u64,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Drop the plaintexts.
        #[arg(long)]
        public: bool,
    },
    /// Reduce a sample to a coloring formula, or a formula to an ILP.
    #[command(subcommand)]
    Reduce(Reduce),
    /// Solve through the trapdoor.
    Solve {
        kind: Kind,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Check a solution against its instance.
    Verify {
        kind: Kind,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Exhaustive reference solvers for small instances.
    Oracle {
        kind: OracleKind,
        #[arg(long = "in")]
        input: PathBuf,
        /// Variable limit (color, qubo) or search-node limit (ilp).
        #[arg(long)]
        budget: u64,
    },
    /// Emit a penalty Hamiltonian.
    #[command(subcommand)]
    Emit(Emit),
    /// Occam sample size with unit constants.
    Occam {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
        #[arg(short)]
        n: u64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
    },
}

#[derive(Subcommand)]
enum Reduce {
    Fc {
        #[arg(long)]
        sample: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    Ilp {
        #[arg(long)]
        fc: PathBuf,
        /// `.lp` writes LP format, anything else JSON.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Emit {
    Qubo(QuboArgs),
}

#[derive(Args)]
struct QuboArgs {
    #[arg(long)]
    fc: PathBuf,
    #[arg(short)]
    k: usize,
    /// Penalty weight, `p` or `p/q`; defaults to k + 1.
    #[arg(long)]
    weight: Option<String>,
    #[arg(long)]
    ising: bool,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Fc,
    Ilp,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleKind {
    Color,
    Ilp,
    Qubo,
}

/// A verifier said no.
#[derive(Debug)]
struct Rejected(String);

impl std::fmt::Display for Rejected {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Rejected {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return ExitCode::from(if err.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<Rejected>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Keygen { bits, seed, out } => {
            let key = keygen(bits, seed)?;
            write_json(out.as_deref(), &key.to_file())
        }
        Command::Sample { key, m, seed, out, public } => {
            let key = read_key(&key)?;
            let sample = generate_sample(&key, m, seed)?;
            let sample = if public { sample.public() } else { sample };
            write_json(out.as_deref(), &sample.to_file())
        }
        Command::Reduce(Reduce::Fc { sample, out }) => {
            let sample = read_sample(&sample)?;
            write_json(out.as_deref(), &tau4(&sample)?)
        }
        Command::Reduce(Reduce::Ilp { fc, out }) => {
            let model = tau5(&read_fc(&fc)?)?;
            write_model(out.as_deref(), &model)
        }
        Command::Solve { kind, input, out, report } => solve(kind, &input, out.as_deref(), report.as_deref()),
        Command::Verify { kind, instance, solution } => verify(kind, &instance, &solution),
        Command::Oracle { kind, input, budget } => oracle(kind, &input, budget),
        Command::Emit(Emit::Qubo(args)) => emit_qubo(&args),
        Command::Occam { epsilon, delta, n, alpha, beta } => {
            let m = occam_sample_size(&OccamParams { epsilon, delta, n, alpha, beta })?;
            println!("{m}");
            Ok(())
        }
    }
}

fn pipeline_error(err: PipelineError) -> anyhow::Error {
    if err.is_verification() {
        Rejected(err.to_string()).into()
    } else {
        err.into()
    }
}

fn solve(kind: Kind, input: &Path, out: Option<&Path>, report_path: Option<&Path>) -> Result<()> {
    let report = match kind {
        Kind::Fc => {
            let f = read_fc(input)?;
            let (coloring, report) = trapdoor_solve_fc(&f).map_err(pipeline_error)?;
            write_json(out, &coloring.to_file(f.vars()))?;
            report
        }
        Kind::Ilp => {
            let model = read_model(input)?;
            let (a, report) = trapdoor_solve_ilp(&model).map_err(pipeline_error)?;
            write_json(out, &AssignmentFile::from_assignment(&model, &a))?;
            report
        }
    };
    match report_path {
        Some(path) => write_json(Some(path), &report),
        None => {
            eprintln!("k = {}, DFA states = {}", report.k, report.dfa_states);
            Ok(())
        }
    }
}

fn verify(kind: Kind, instance: &Path, solution: &Path) -> Result<()> {
    let verdict = match kind {
        Kind::Fc => {
            let f = read_fc(instance)?;
            let file: ColoringFile = read_json(solution)?;
            let p = Coloring::from_file(&file, f.vars())?;
            let verdict = verify_coloring(&f, &p)?;
            (!verdict.is_valid()).then(|| format!("{verdict:?}"))
        }
        Kind::Ilp => {
            let model = read_model(instance)?;
            let file: AssignmentFile = read_json(solution)?;
            let a = file.to_assignment(&model)?;
            let verdict = verify_assignment(&model, &a)?;
            if verdict.is_feasible() {
                println!("objective {}", model.objective(&a));
            }
            (!verdict.is_feasible()).then(|| format!("{verdict:?}"))
        }
    };
    match verdict {
        None => {
            println!("valid");
            Ok(())
        }
        Some(detail) => Err(Rejected(detail).into()),
    }
}

#[derive(Serialize)]
struct ColorOracle {
    k: u32,
    coloring: ColoringFile,
}

#[derive(Serialize)]
struct IlpOracle {
    objective: i64,
    nodes: u64,
    assignment: AssignmentFile,
}

#[derive(Serialize)]
struct QuboOracle {
    energy: String,
    states: Vec<String>,
}

fn oracle(kind: OracleKind, input: &Path, budget: u64) -> Result<()> {
    let limit = usize::try_from(budget).context("budget too large")?;
    match kind {
        OracleKind::Color => {
            let f = read_fc(input)?;
            let p = brute_force_min_coloring(&f, limit)?;
            write_json(None, &ColorOracle { k: p.k(), coloring: p.to_file(f.vars()) })
        }
        OracleKind::Ilp => {
            let model = read_model(input)?;
            let best = brute_force_ilp(&model, budget)?;
            let assignment = AssignmentFile::from_assignment(&model, &best.assignment);
            write_json(None, &IlpOracle { objective: best.objective, nodes: best.nodes, assignment })
        }
        OracleKind::Qubo => {
            let h: BinaryPolynomial = read_json(input)?;
            let gs = ground_states(&h, limit)?;
            let states = gs
                .states
                .iter()
                .map(|s| s.iter().map(|&b| if b { '1' } else { '0' }).collect())
                .collect();
            write_json(None, &QuboOracle { energy: format_rational(&gs.energy), states })
        }
    }
}

fn emit_qubo(args: &QuboArgs) -> Result<()> {
    let f = read_fc(&args.fc)?;
    let weight = match &args.weight {
        Some(text) => parse_rational(text)?,
        None => trapdoor_core::qubo::default_weight(args.k),
    };
    let h = fc_to_hamiltonian(&f, args.k, &weight)?;
    if args.ising {
        write_json(args.out.as_deref(), &h.to_ising())
    } else {
        write_json(args.out.as_deref(), &h)
    }
}

// ---------------------------------------------------------------------------
// Files

fn read_text(path: &Path) -> Result<String> {
    let mut text = String::new();
    if path == Path::new("-") {
        io::stdin().read_to_string(&mut text)?;
    } else {
        File::open(path)
            .with_context(|| format!("cannot open {}", path.display()))?
            .read_to_string(&mut text)?;
    }
    Ok(text)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).with_context(|| format!("cannot parse {}", path.display()))
}

fn read_key(path: &Path) -> Result<RsaKey> {
    Ok(RsaKey::from_file(&read_json::<KeyFile>(path)?)?)
}

fn read_sample(path: &Path) -> Result<LabeledSample> {
    Ok(LabeledSample::from_file(&read_json::<SampleFile>(path)?)?)
}

fn read_fc(path: &Path) -> Result<FcInstance> {
    read_json(path)
}

fn is_lp(path: &Path) -> bool {
    path.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("lp"))
}

fn read_model(path: &Path) -> Result<IlpModel> {
    if is_lp(path) {
        parse_lp(&read_text(path)?).with_context(|| format!("cannot parse {}", path.display()))
    } else {
        read_json(path)
    }
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) if p != Path::new("-") => {
            Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?))
        }
        _ => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut out = writer(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn write_model(path: Option<&Path>, model: &IlpModel) -> Result<()> {
    match path {
        Some(p) if is_lp(p) => {
            let mut out = writer(path)?;
            write_lp(model, &mut out)?;
            out.flush()?;
            Ok(())
        }
        Some(_) => write_json(path, model),
        None => bail!("reduce ilp needs -o model.lp or -o model.json"),
    }
}
