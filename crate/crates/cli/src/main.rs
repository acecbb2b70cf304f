//! `rpcsp`: generate planted instances, solve them, refute random ones, and
//! sweep recovery thresholds.
//!
//! Exit codes: 0 success, 1 usage error, 2 malformed input file, 3 solver
//! resource or convergence failure.

mod error;
mod mrule;
mod output;
mod sweep;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rpcsp::fourier::{fourier_table, verify_nontrivial, Subset};
use rpcsp::io;
use rpcsp::{
    distribution_complexity, kikuchi, sample_planted_csp, sample_planted_xor, Assignment, BackendChoice,
    CspPredicate, PlantingDistribution, SolverConfig,
};

use error::{CliError, CliResult};
use output::{read_input, resolve_seed, with_suffix, write_atomic, Manifest};

#[derive(Parser)]
#[command(name = "rpcsp", version, about = "Planted CSP and noisy k-XOR toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a planted instance.
    #[command(subcommand)]
    Generate(Generate),
    /// Recover an assignment from an instance file.
    Solve(SolveArgs),
    /// Certify an upper bound on the best XOR advantage of an even-arity instance.
    Refute(RefuteArgs),
    /// Run a grid of recovery trials and write one CSV row per cell.
    Sweep(sweep::SweepArgs),
    /// Print the Fourier table and distribution complexity of a planting.
    Fourier(FourierArgs),
}

#[derive(Subcommand)]
enum Generate {
    /// Noisy k-XOR: right-hand sides correct with probability 1/2 + eps.
    Xor(GenXorArgs),
    /// Planted CSP with literal negations drawn through a planting distribution.
    Csp(GenCspArgs),
}

#[derive(Args, Serialize)]
struct GenXorArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Output prefix; writes <out>.xor, <out>.planted and <out>.manifest.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct GenCspArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    m: usize,
    /// `sat`, `parity`, or a truth table in hex.
    #[arg(long, default_value = "sat")]
    predicate: String,
    /// Planting distribution file; default is uniform on the satisfying patterns.
    #[arg(long)]
    plant: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output prefix; writes <out>.csp, <out>.planted and <out>.manifest.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum BackendName {
    Brute,
    SdpBasic,
    KikuchiSpectral,
}

impl BackendName {
    pub fn choice(self) -> BackendChoice {
        match self {
            BackendName::Brute => BackendChoice::brute(),
            BackendName::SdpBasic => BackendChoice::sdp_basic(),
            BackendName::KikuchiSpectral => BackendChoice::kikuchi_spectral(),
        }
    }
}

#[derive(Args, Serialize)]
struct SolveArgs {
    /// An `xor` or `csp` instance file.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "sdp_basic")]
    backend: BackendName,
    /// Kikuchi level for the SDP and spectral backends (default k/2).
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long, default_value_t = 0.99)]
    agreement: f64,
    /// Planted assignment to score the output against.
    #[arg(long)]
    planted: Option<PathBuf>,
    /// Known planting distribution (CSP only): solve a single reduction.
    #[arg(long)]
    plant: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output prefix; writes <out>.assignment, <out>.report.json and <out>.manifest.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct RefuteArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    ell: usize,
    #[arg(long, default_value_t = 0.01)]
    tol: f64,
    #[arg(long, default_value_t = kikuchi::DEFAULT_VERTEX_CAP)]
    vertex_cap: u64,
    #[arg(long, default_value_t = kikuchi::DEFAULT_MAX_ITERS)]
    max_iters: usize,
    /// Also write the matrix to <out>.kik.
    #[arg(long)]
    dump_matrix: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Output prefix; writes <out>.refute.json and <out>.manifest.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct FourierArgs {
    #[arg(long)]
    plant: PathBuf,
    /// Write the table here (plus a manifest) instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if !matches!(cli.command, Command::Sweep(_)) {
        // only sweep runs concurrently
        let _ = rayon::ThreadPoolBuilder::new().num_threads(1).build_global();
    }
    let result = match cli.command {
        Command::Generate(Generate::Xor(a)) => generate_xor(&a),
        Command::Generate(Generate::Csp(a)) => generate_csp(&a),
        Command::Solve(a) => solve(&a),
        Command::Refute(a) => refute(&a),
        Command::Sweep(a) => sweep::run(&a),
        Command::Fourier(a) => fourier(&a),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn parse_with<T>(path: &Path, parse: impl FnOnce(&str) -> rpcsp::Result<T>) -> CliResult<T> {
    let text = read_input(path)?;
    parse(&text).map_err(|e| CliError::input(path.display(), e))
}

fn generate_xor(a: &GenXorArgs) -> CliResult<()> {
    let seed = resolve_seed(a.seed)?;
    let x = Assignment::random(a.n, rpcsp::rng::derive_seed(&[seed.0, 0]));
    let inst = sample_planted_xor(&x, a.m, a.k, a.eps, seed.0).map_err(|e| CliError::from_lib("generate", e))?;
    let files = [with_suffix(&a.out, ".xor"), with_suffix(&a.out, ".planted")];
    write_atomic(&files[0], io::write_xor(&inst).as_bytes())?;
    write_atomic(&files[1], io::write_assignment(&x).as_bytes())?;
    Manifest::new("generate xor", seed, a, &files).write(&with_suffix(&a.out, ".manifest.json"))
}

fn predicate(spec: &str, k: usize) -> CliResult<CspPredicate> {
    let p = match spec {
        "sat" => CspPredicate::k_sat(k),
        "parity" => CspPredicate::xor(k),
        hex => CspPredicate::from_hex(k, hex),
    };
    p.map_err(|e| CliError::usage(format!("--predicate {spec}: {e}")))
}

fn generate_csp(a: &GenCspArgs) -> CliResult<()> {
    let seed = resolve_seed(a.seed)?;
    let p = predicate(&a.predicate, a.k)?;
    let q = match &a.plant {
        Some(path) => parse_with(path, io::parse_plant)?,
        None => PlantingDistribution::uniform_satisfying(&p).map_err(|e| CliError::from_lib("generate", e))?,
    };
    if q.k() != a.k {
        return Err(CliError::usage(format!("planting has arity {}, expected {}", q.k(), a.k)));
    }
    if !q.is_planting_for(&p) {
        return Err(CliError::usage("planting puts mass on patterns the predicate rejects"));
    }
    let x = Assignment::random(a.n, rpcsp::rng::derive_seed(&[seed.0, 0]));
    let psi = sample_planted_csp(&x, a.m, &p, &q, seed.0).map_err(|e| CliError::from_lib("generate", e))?;
    let files = [with_suffix(&a.out, ".csp"), with_suffix(&a.out, ".planted")];
    write_atomic(&files[0], io::write_csp(&psi).as_bytes())?;
    write_atomic(&files[1], io::write_assignment(&x).as_bytes())?;
    Manifest::new("generate csp", seed, a, &files).write(&with_suffix(&a.out, ".manifest.json"))
}

fn solve(a: &SolveArgs) -> CliResult<()> {
    let seed = resolve_seed(a.seed)?;
    let text = read_input(&a.input)?;
    let config = SolverConfig {
        backend: a.backend.choice(),
        ell: a.ell,
        agreement_fraction: a.agreement,
    };
    let planted = a.planted.as_deref().map(|p| parse_with(p, io::parse_assignment)).transpose()?;
    let bad_input = |e| CliError::input(a.input.display(), e);
    let tag = text.split_whitespace().next().unwrap_or("");
    let (mut report, n, up_to_sign) = match tag {
        "xor" => {
            let inst = io::parse_xor(&text).map_err(bad_input)?;
            let report = rpcsp::solve_xor(&inst, &config, seed.0).map_err(|e| CliError::from_lib("solve_xor", e))?;
            (report, inst.n(), inst.k() % 2 == 0)
        }
        "csp" => {
            let psi = io::parse_csp(&text).map_err(bad_input)?;
            let report = match &a.plant {
                Some(path) => {
                    let q = parse_with(path, io::parse_plant)?;
                    rpcsp::solve_csp_known(&psi, &q, &config, seed.0)
                }
                None => rpcsp::solve_csp(&psi, &config, seed.0),
            }
            .map_err(|e| CliError::from_lib("solve_csp", e))?;
            (report, psi.n(), false)
        }
        _ => return Err(CliError::input(a.input.display(), "line 1: expected an `xor` or `csp` header")),
    };
    if let Some(x) = &planted {
        if x.len() != n {
            return Err(CliError::usage(format!("planted assignment has length {}, expected {n}", x.len())));
        }
        report.evaluate_against(x, up_to_sign);
    }
    let files = [with_suffix(&a.out, ".assignment"), with_suffix(&a.out, ".report.json")];
    write_atomic(&files[0], io::write_assignment(&report.output).as_bytes())?;
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    write_atomic(&files[1], json.as_bytes())?;
    if let Some(v) = report.stats.output_value {
        println!("value = {v}");
    }
    Manifest::new("solve", seed, a, &files).write(&with_suffix(&a.out, ".manifest.json"))
}

fn refute(a: &RefuteArgs) -> CliResult<()> {
    let seed = resolve_seed(a.seed)?;
    let inst = parse_with(&a.input, io::parse_xor)?;
    let matrix = kikuchi::build_kikuchi_capped(&inst, a.ell, a.vertex_cap).map_err(|e| CliError::from_lib("kikuchi", e))?;
    let cert = kikuchi::certify(&matrix, inst.m(), a.tol, a.max_iters, seed.0)
        .map_err(|e| CliError::from_lib("spectral norm", e))?;
    let mut files = vec![with_suffix(&a.out, ".refute.json")];
    let mut json = serde_json::to_string_pretty(&cert).expect("certificate serializes");
    json.push('\n');
    write_atomic(&files[0], json.as_bytes())?;
    if a.dump_matrix {
        let path = with_suffix(&a.out, ".kik");
        let mut bytes = Vec::new();
        matrix.write_binary(&mut bytes).expect("writing to memory");
        write_atomic(&path, &bytes)?;
        files.push(path);
    }
    println!("delta = {}", cert.delta);
    Manifest::new("refute", seed, a, &files).write(&with_suffix(&a.out, ".manifest.json"))
}

fn fourier(a: &FourierArgs) -> CliResult<()> {
    let q = parse_with(&a.plant, io::parse_plant)?;
    let table = fourier_table(&q);
    let mut text = String::new();
    for s in std::iter::once(Subset::EMPTY).chain(Subset::nonempty_by_size(q.k())) {
        text.push_str(&format!("{s} {:.17e}\n", table.get(s)));
    }
    let dc = distribution_complexity(&q);
    text.push_str(&format!("r = {}\n", dc.r));
    match dc.witness {
        Some(s) => text.push_str(&format!("witness = {s}\n")),
        None => text.push_str("witness = none\n"),
    }
    text.push_str(&format!("nontrivial = {}\n", verify_nontrivial(&q)));
    match &a.out {
        Some(path) => {
            write_atomic(path, text.as_bytes())?;
            let manifest = Manifest::new("fourier", (0, output::SeedSource::Default), a, std::slice::from_ref(path));
            manifest.write(&with_suffix(path, ".manifest.json"))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
