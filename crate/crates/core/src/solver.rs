//! End-to-end recovery for noisy k-XOR and planted CSPs.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::approx_recovery::{round_even, round_odd, solve_pseudo_expectation, BackendChoice};
use crate::error::{Error, Result};
use crate::exact_rounding::{build_cohyperedges, MajorityStats};
use crate::fourier::{distribution_complexity_from_table, fourier_table, Subset};
use crate::instance::{clean, value, Assignment, CspInstance, PlantingDistribution, XorInstance};
use crate::reduction::{build_xor_side, Side};
use crate::rng::{self, derive_seed, streams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub backend: BackendChoice,
    /// Kikuchi level for the spectral and SDP backends; `None` means `k/2`
    /// of the instance the backend sees.
    pub ell: Option<usize>,
    pub agreement_fraction: f64,
}

impl SolverConfig {
    pub fn new(backend: BackendChoice) -> Self {
        SolverConfig {
            backend,
            ell: None,
            agreement_fraction: 0.99,
        }
    }

    pub fn with_level(mut self, ell: Option<usize>) -> Self {
        self.ell = ell;
        self
    }

    fn backend_for(&self) -> BackendChoice {
        match self.ell {
            Some(ell) => self.backend.clone().with_level(ell),
            None => self.backend.clone(),
        }
    }
}

/// How stage one was run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Path {
    /// `k = 1`: per-variable majority, no split.
    Majority,
    /// Brute force on odd `k`; the sign comes from the first moments.
    BruteOdd,
    /// Even `k`, or brute force on even `k`; both signs go to stage two.
    Even,
    /// Odd `k` paired into arity `2k`, then the even pipeline.
    PairedEven,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub path: Option<Path>,
    pub m: usize,
    pub h1: usize,
    pub h2: usize,
    /// Clauses handed to the backend after pairing.
    pub paired_clauses: Option<usize>,
    pub backend: Option<String>,
    pub backend_objective: Option<f64>,
    pub backend_iterations: Option<usize>,
    /// Smallest eigenvalue of the validated moment block.
    pub pe_min_eigenvalue: Option<f64>,
    pub round_even_row: Option<usize>,
    pub delta_i_star: Option<f64>,
    pub majority: Option<MajorityStats>,
    /// Fraction of stage-two clauses with repeated entries.
    pub h2_dropped_fraction: Option<f64>,
    /// Value on `H₂` of each stage-two result, in candidate order.
    pub h2_values: Vec<f64>,
    /// `|corr|` between the stage-one candidate and the output.
    pub stage1_output_agreement: Option<f64>,
    /// `|corr|` between the stage-one candidate and the planted assignment.
    pub stage1_planted_corr: Option<f64>,
    pub sub_solves: Vec<SubSolve>,
    pub no_perfect_candidate: bool,
    pub output_value: Option<f64>,
}

/// One `(S, side)` reduction attempted by [`solve_csp`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubSolve {
    pub subset: String,
    pub side: Side,
    /// Value on the CSP of the sub-solve output and of its negation.
    pub values: Option<[f64; 2]>,
    /// Smallest moment-block eigenvalue of the backend run, if there was one.
    pub pe_min_eigenvalue: Option<f64>,
    /// Why the reduction could not be solved, if it could not.
    pub skipped: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub output: Assignment,
    pub candidates: Vec<Assignment>,
    pub stage1: Option<Assignment>,
    pub stats: SolveStats,
    pub matched_planted: Option<bool>,
}

impl SolveReport {
    /// Records agreement with `x_star`; with `up_to_sign`, `-x_star` counts
    /// as a match.
    pub fn evaluate_against(&mut self, x_star: &Assignment, up_to_sign: bool) {
        let exact = self.output == *x_star;
        let flipped = up_to_sign && self.output == x_star.negated();
        self.matched_planted = Some(exact || flipped);
        self.stats.stage1_planted_corr = self.stage1.as_ref().map(|s| s.corr(x_star).abs());
    }
}

/// Noisy k-XOR: split the clauses, get an approximate solution from the
/// first half, then round it exactly by majority over the second half.
pub fn solve_xor(inst: &XorInstance, config: &SolverConfig, seed: u64) -> Result<SolveReport> {
    let (n, k, m) = (inst.n(), inst.k(), inst.m());
    if !(config.agreement_fraction > 0.0 && config.agreement_fraction <= 1.0) {
        return Err(Error::param("agreement fraction outside (0, 1]"));
    }
    let mut stats = SolveStats {
        m,
        ..SolveStats::default()
    };
    if k == 1 {
        stats.path = Some(Path::Majority);
        let mut tally = vec![0i64; n];
        for (scope, b) in inst.clauses() {
            tally[scope[0] as usize] += b as i64;
        }
        let output = Assignment::new(tally.iter().map(|&t| if t >= 0 { 1 } else { -1 }).collect())?;
        stats.output_value = Some(value(inst, &output));
        return Ok(SolveReport {
            output,
            candidates: Vec::new(),
            stage1: None,
            stats,
            matched_planted: None,
        });
    }

    let h1 = m.div_ceil(2);
    let (first, second) = (inst.slice(0..h1), inst.slice(h1..m));
    stats.h1 = h1;
    stats.h2 = m - h1;

    let backend = config.backend_for();
    let backend_seed = derive_seed(&[seed, 1]);
    let odd = k % 2 == 1;
    let (stage1, candidates) = if odd && backend.is_brute() {
        stats.path = Some(Path::BruteOdd);
        let run = solve_pseudo_expectation(&first, &backend, backend_seed)?;
        stats.backend_objective = Some(run.objective);
        stats.pe_min_eigenvalue = Some(run.min_eigenvalue);
        let x = round_odd(&run.pe);
        (x.clone(), vec![x])
    } else {
        let stage_inst = if odd {
            stats.path = Some(Path::PairedEven);
            let paired = pair_to_even(&first, derive_seed(&[seed, 2]))?;
            stats.paired_clauses = Some(paired.m());
            paired
        } else {
            stats.path = Some(Path::Even);
            first
        };
        let run = solve_pseudo_expectation(&stage_inst, &backend, backend_seed)?;
        stats.backend_objective = Some(run.objective);
        stats.backend_iterations = Some(run.iterations);
        stats.pe_min_eigenvalue = Some(run.min_eigenvalue);
        let rounded = round_even(&run.pe, config.agreement_fraction)?;
        stats.round_even_row = Some(rounded.row);
        stats.delta_i_star = Some(rounded.delta);
        let x = rounded.assignment;
        let neg = x.negated();
        (x.clone(), vec![x, neg])
    };
    stats.backend = Some(backend.name().to_string());

    let index = build_cohyperedges(&second);
    stats.h2_dropped_fraction = Some(clean(&second).1);
    let mut best: Option<(f64, usize)> = None;
    let mut rounded = Vec::with_capacity(candidates.len());
    for (c, cand) in candidates.iter().enumerate() {
        let outcome = index.majority_round(cand);
        let v = value(&second, &outcome.assignment);
        stats.h2_values.push(v);
        if best.is_none_or(|(bv, _)| v > bv) {
            best = Some((v, c));
        }
        rounded.push(outcome);
    }
    let (_, chosen) = best.expect("at least one candidate");
    let outcome = rounded.swap_remove(chosen);
    stats.majority = Some(outcome.stats);
    stats.stage1_output_agreement = Some(stage1.corr(&outcome.assignment).abs());
    stats.output_value = Some(value(inst, &outcome.assignment));
    Ok(SolveReport {
        output: outcome.assignment,
        candidates: Vec::new(),
        stage1: Some(stage1),
        stats,
        matched_planted: None,
    })
}

/// Multiplies disjoint clause pairs into clauses of arity `2k`.
///
/// Clauses are visited in a seeded random order; each one is paired with
/// the earliest waiting clause it shares no variable with, or else waits.
/// If each right-hand side is correct with probability `1/2 + ε`
/// independently, the product is correct with probability `1/2 + 2ε²`.
pub fn pair_to_even(inst: &XorInstance, seed: u64) -> Result<XorInstance> {
    let k = inst.k();
    if k.is_multiple_of(2) {
        return Err(Error::UnsupportedArity {
            arity: k,
            reason: "pairing is for odd arity".into(),
        });
    }
    if inst.m() < 2 {
        return Err(Error::param(format!("pairing needs at least 2 clauses, got {}", inst.m())));
    }
    let mut order: Vec<usize> = (0..inst.m()).collect();
    order.shuffle(&mut rng::stream(seed, streams::PAIRING));
    let mut out = XorInstance::with_capacity(inst.n(), 2 * k, inst.m() / 2);
    let mut waiting: Vec<usize> = Vec::new();
    let mut joined = Vec::with_capacity(2 * k);
    for &c in &order {
        let scope = inst.scope(c);
        let partner = waiting
            .iter()
            .position(|&w| inst.scope(w).iter().all(|v| !scope.contains(v)));
        match partner {
            Some(p) => {
                let w = waiting.remove(p);
                joined.clear();
                joined.extend_from_slice(inst.scope(w));
                joined.extend_from_slice(scope);
                out.push(&joined, inst.rhs(w) * inst.rhs(c));
            }
            None => waiting.push(c),
        }
    }
    Ok(out)
}

/// Planted CSP: reduce to XOR along every `(S, side)`, solve each, and
/// return the first candidate satisfying every clause. Reductions are tried
/// by `|S|`, then lexicographically, `+` before `-`, and enumeration stops
/// at the first satisfying candidate. When none satisfies, the candidate of
/// largest value is returned and `no_perfect_candidate` is set.
pub fn solve_csp(psi: &CspInstance, config: &SolverConfig, seed: u64) -> Result<SolveReport> {
    let order = (1..=psi.k())
        .flat_map(|r| Subset::of_size(psi.k(), r))
        .flat_map(|s| [(s, Side::Plus), (s, Side::Minus)])
        .collect();
    solve_csp_over(psi, config, seed, order)
}

/// Like [`solve_csp`], but only along `(S*, sgn Q̂(S*))` for the
/// distribution-complexity witness `S*` of the known planting `q`.
pub fn solve_csp_known(psi: &CspInstance, q: &PlantingDistribution, config: &SolverConfig, seed: u64) -> Result<SolveReport> {
    if q.k() != psi.k() {
        return Err(Error::param(format!("planting arity {} differs from predicate arity {}", q.k(), psi.k())));
    }
    let table = fourier_table(q);
    let order = match distribution_complexity_from_table(&table).witness {
        Some(s) => vec![(s, if table.get(s) >= 0.0 { Side::Plus } else { Side::Minus })],
        None => Vec::new(),
    };
    solve_csp_over(psi, config, seed, order)
}

fn solve_csp_over(psi: &CspInstance, config: &SolverConfig, seed: u64, order: Vec<(Subset, Side)>) -> Result<SolveReport> {
    let k = psi.k();
    let mut stats = SolveStats {
        m: psi.m(),
        ..SolveStats::default()
    };
    if psi.predicate().is_trivial() {
        let output = Assignment::ones(psi.n());
        stats.output_value = Some(1.0);
        return Ok(SolveReport {
            output,
            candidates: Vec::new(),
            stage1: None,
            stats,
            matched_planted: None,
        });
    }
    let cap = 1usize << (k + 2);
    let mut candidates: Vec<Assignment> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut found = None;
    for (s, side) in order {
        if candidates.len() + 2 > cap {
            break;
        }
        let xor = build_xor_side(psi, s, side);
        let sub_seed = derive_seed(&[seed, s.0 as u64, side.sign() as u64]);
        match solve_xor(&xor, config, sub_seed) {
            Ok(report) => {
                let pair = [report.output.clone(), report.output.negated()];
                let vals = [value(psi, &pair[0]), value(psi, &pair[1])];
                stats.sub_solves.push(SubSolve {
                    subset: s.to_string(),
                    side,
                    values: Some(vals),
                    pe_min_eigenvalue: report.stats.pe_min_eigenvalue,
                    skipped: None,
                });
                for (cand, v) in pair.into_iter().zip(vals) {
                    if found.is_none() && v == 1.0 {
                        found = Some(candidates.len());
                    }
                    candidates.push(cand);
                    values.push(v);
                }
                if found.is_some() {
                    break;
                }
            }
            Err(e @ (Error::UnsupportedConfig(_) | Error::UnsupportedArity { .. } | Error::Resource(_))) => {
                stats.sub_solves.push(SubSolve {
                    subset: s.to_string(),
                    side,
                    values: None,
                    pe_min_eigenvalue: None,
                    skipped: Some(e.to_string()),
                });
            }
            Err(e) => return Err(e),
        }
    }
    let chosen = found.or_else(|| {
        stats.no_perfect_candidate = true;
        values
            .iter()
            .enumerate()
            .fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
                Some((_, bv)) if bv >= v => best,
                _ => Some((i, v)),
            })
            .map(|(i, _)| i)
    });
    let output = match chosen {
        Some(i) => candidates[i].clone(),
        None => Assignment::ones(psi.n()),
    };
    stats.output_value = Some(value(psi, &output));
    Ok(SolveReport {
        output,
        candidates,
        stage1: None,
        stats,
        matched_planted: None,
    })
}
