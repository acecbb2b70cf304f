//! Recovery-threshold sweeps over an (n, eps) grid.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use rpcsp::rng::derive_seed;
use rpcsp::{sample_planted_xor, solve_xor, Assignment, SolverConfig};

use crate::error::{CliError, CliResult};
use crate::mrule::MRule;
use crate::output::{resolve_seed, with_suffix, write_atomic, Manifest};
use crate::BackendName;

/// First line of every sweep CSV.
pub const SCHEMA_LINE: &str = "# rpcsp sweep v1";

#[derive(Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    k: usize,
    /// Comma-separated variable counts.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Comma-separated noise advantages in (0, 1/2].
    #[arg(long, value_delimiter = ',', required = true)]
    eps: Vec<f64>,
    /// Clause count as an expression in n, k, eps and l, e.g.
    /// `C*n*log(n)*(n/l)^(k/2-1)/eps^2`.
    #[arg(long)]
    m_rule: String,
    /// Constants for the m-rule, as NAME=VALUE; repeatable.
    #[arg(long = "const")]
    constants: Vec<String>,
    /// Kikuchi level; default k/2 (or k for odd k after pairing), at least 1.
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long, value_enum, default_value = "sdp_basic")]
    backend: BackendName,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Trials run concurrently; default is the number of CPUs.
    #[arg(long)]
    jobs: Option<usize>,
    /// CSV output path; a manifest goes to <out>.manifest.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Serialize)]
struct Row {
    n: usize,
    k: usize,
    eps: f64,
    m: usize,
    ell: usize,
    backend: &'static str,
    trials: usize,
    exact_recovery: usize,
    mean_stage1_corr: f64,
    mean_runtime_s: f64,
    errors: usize,
}

struct Trial {
    exact: bool,
    error: bool,
    stage1_corr: f64,
    seconds: f64,
}

/// Level reported in the CSV: the one the backend sees. Brute force keeps
/// odd k unpaired.
fn effective_level(k: usize, ell: Option<usize>, brute: bool) -> usize {
    let backend_k = if k % 2 == 1 && k > 1 && !brute { 2 * k } else { k };
    ell.unwrap_or((backend_k / 2).max(1))
}

pub fn run(a: &SweepArgs) -> CliResult<()> {
    let seed = resolve_seed(a.seed)?;
    if a.trials == 0 {
        return Err(CliError::usage("--trials must be at least 1"));
    }
    if a.k == 0 {
        return Err(CliError::usage("--k must be at least 1"));
    }
    if let Some(e) = a.eps.iter().find(|e| !(**e > 0.0 && **e <= 0.5)) {
        return Err(CliError::usage(format!("eps {e} outside (0, 1/2]")));
    }
    let rule = MRule::parse(&a.m_rule, &a.constants)?;
    let ell = effective_level(a.k, a.ell, matches!(a.backend, BackendName::Brute));
    let config = SolverConfig::new(a.backend.choice()).with_level(a.ell);

    let mut cells = Vec::new();
    for &n in &a.n {
        if n < a.k {
            return Err(CliError::usage(format!("n = {n} below k = {}", a.k)));
        }
        for &eps in &a.eps {
            cells.push((n, eps, rule.eval(n, a.k, eps, ell)?));
        }
    }

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = a.jobs {
        if jobs == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build().map_err(|e| CliError::usage(format!("thread pool: {e}")))?;

    let rows: Vec<Row> = pool.install(|| {
        cells
            .iter()
            .map(|&(n, eps, m)| {
                let trials: Vec<Trial> = (0..a.trials)
                    .into_par_iter()
                    .map(|t| {
                        let trial_seed = derive_seed(&[seed.0, n as u64, a.k as u64, eps.to_bits(), t as u64]);
                        run_trial(n, a.k, eps, m, &config, trial_seed)
                    })
                    .collect();
                let ok: Vec<&Trial> = trials.iter().filter(|t| !t.error).collect();
                let mean = |f: fn(&Trial) -> f64| {
                    if ok.is_empty() {
                        f64::NAN
                    } else {
                        ok.iter().map(|t| f(t)).sum::<f64>() / ok.len() as f64
                    }
                };
                Row {
                    n,
                    k: a.k,
                    eps,
                    m,
                    ell,
                    backend: config.backend.name(),
                    trials: a.trials,
                    exact_recovery: trials.iter().filter(|t| t.exact).count(),
                    mean_stage1_corr: mean(|t| t.stage1_corr),
                    mean_runtime_s: mean(|t| t.seconds),
                    errors: trials.len() - ok.len(),
                }
            })
            .collect()
    });

    let mut bytes = format!("{SCHEMA_LINE}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut bytes);
        for row in &rows {
            w.serialize(row)
                .map_err(|e| CliError::usage(format!("csv: {e}")))?;
        }
        w.flush().map_err(|e| CliError::Output {
            path: a.out.display().to_string(),
            source: e,
        })?;
    }
    write_atomic(&a.out, &bytes)?;
    Manifest::new("sweep", seed, a, std::slice::from_ref(&a.out)).write(&with_suffix(&a.out, ".manifest.json"))
}

fn run_trial(n: usize, k: usize, eps: f64, m: usize, config: &SolverConfig, seed: u64) -> Trial {
    let start = Instant::now();
    let x = Assignment::random(n, derive_seed(&[seed, 0]));
    let result = sample_planted_xor(&x, m, k, eps, seed).and_then(|inst| solve_xor(&inst, config, seed));
    let seconds = start.elapsed().as_secs_f64();
    match result {
        Ok(mut report) => {
            report.evaluate_against(&x, k.is_multiple_of(2));
            // k = 1 has no stage one; its output plays that role
            let stage1 = report.stage1.as_ref().unwrap_or(&report.output);
            Trial {
                exact: report.matched_planted == Some(true),
                error: false,
                stage1_corr: stage1.corr(&x).abs(),
                seconds,
            }
        }
        Err(_) => Trial {
            exact: false,
            error: true,
            stage1_corr: f64::NAN,
            seconds,
        },
    }
}
