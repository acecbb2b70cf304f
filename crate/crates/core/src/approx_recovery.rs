//! Approximate recovery: a degree-2 pseudo-expectation maximizing
//! `Σ_C b_C x_C`, and the sign roundings that turn it into an assignment.
//!
//! Three backends produce the moments. `brute` enumerates the hypercube and
//! returns the exact moments of the uniform distribution on the maximizers.
//! `sdp_basic` runs block-coordinate ascent on unit vectors (one per
//! Kikuchi vertex) for the basic SDP. `kikuchi_spectral` uses the top
//! eigenvector of the Kikuchi matrix. The last two are sign-symmetric and
//! always report `mu1 = 0`.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Assignment, XorInstance};
use crate::kikuchi::{build_kikuchi, KikuchiMatrix, SubsetRanker};
use crate::linalg::{self, SymmetricOperator};
use crate::rng::{self, streams};

/// Smallest eigenvalue accepted as positive semidefinite.
pub const PSD_TOLERANCE: f64 = -1e-8;

/// Largest `n` the brute backend will enumerate.
pub const BRUTE_HARD_CAP: usize = 26;

/// First and second moments of a degree-2 pseudo-expectation.
#[derive(Clone, Debug, PartialEq)]
pub struct PseudoExpectation {
    mu1: Vec<f64>,
    m2: DMatrix<f64>,
    degree_tag: String,
}

impl PseudoExpectation {
    /// Validates and wraps the moments.
    pub fn new(mu1: Vec<f64>, m2: DMatrix<f64>, degree_tag: impl Into<String>) -> Result<Self> {
        let pe = PseudoExpectation {
            mu1,
            m2,
            degree_tag: degree_tag.into(),
        };
        pe.validate()?;
        Ok(pe)
    }

    /// The point distribution on `x`.
    pub fn point(x: &Assignment) -> Self {
        let v = x.to_f64();
        let n = v.len();
        PseudoExpectation {
            m2: DMatrix::from_fn(n, n, |i, j| v[i] * v[j]),
            mu1: v,
            degree_tag: "point".into(),
        }
    }

    pub fn n(&self) -> usize {
        self.mu1.len()
    }

    pub fn mu1(&self) -> &[f64] {
        &self.mu1
    }

    pub fn m2(&self) -> &DMatrix<f64> {
        &self.m2
    }

    pub fn degree_tag(&self) -> &str {
        &self.degree_tag
    }

    /// Unit diagonal, entries in [-1, 1], and both `m2` and
    /// `[[1, mu1ᵀ], [mu1, m2]]` PSD up to [`PSD_TOLERANCE`]. Returns the
    /// smallest eigenvalue of the moment block.
    pub fn validate(&self) -> Result<f64> {
        let n = self.n();
        let bad = |msg: String| Err(Error::InvalidPseudoExpectation(msg));
        if self.m2.nrows() != n || self.m2.ncols() != n {
            return bad(format!("m2 is {}x{}, expected {n}x{n}", self.m2.nrows(), self.m2.ncols()));
        }
        if let Some(i) = (0..n).find(|&i| self.m2[(i, i)] != 1.0) {
            return bad(format!("m2[{i},{i}] = {}", self.m2[(i, i)]));
        }
        for (name, entries) in [("mu1", &self.mu1[..]), ("m2", self.m2.as_slice())] {
            if let Some(e) = entries.iter().find(|e| !(e.abs() <= 1.0)) {
                return bad(format!("{name} has entry {e} outside [-1, 1]"));
            }
        }
        for i in 0..n {
            for j in 0..i {
                if self.m2[(i, j)] != self.m2[(j, i)] {
                    return bad(format!("m2 is not symmetric at ({i},{j})"));
                }
            }
        }
        let low = linalg::min_eigenvalue(&self.m2);
        if low < PSD_TOLERANCE {
            return bad(format!("m2 has eigenvalue {low}"));
        }
        let block = DMatrix::from_fn(n + 1, n + 1, |i, j| match (i, j) {
            (0, 0) => 1.0,
            (0, j) => self.mu1[j - 1],
            (i, 0) => self.mu1[i - 1],
            (i, j) => self.m2[(i - 1, j - 1)],
        });
        let low = linalg::min_eigenvalue(&block);
        if low < PSD_TOLERANCE {
            return bad(format!("moment block has eigenvalue {low}"));
        }
        Ok(low)
    }

    /// `pe[Σ_C b_C x_C]` over the clauses of arity at most 2 that it can see:
    /// `k = 1` reads `mu1`, `k = 2` reads `m2` (repeated entries give 1).
    pub fn objective(&self, inst: &XorInstance) -> Option<f64> {
        let total = match inst.k() {
            1 => inst.clauses().map(|(s, b)| b as f64 * self.mu1[s[0] as usize]).sum(),
            2 => inst
                .clauses()
                .map(|(s, b)| b as f64 * self.m2[(s[0] as usize, s[1] as usize)])
                .sum(),
            _ => return None,
        };
        Some(total)
    }

    /// Text dump: `pexp <n>`, then `mu1`, then the rows of `m2`, with 17
    /// significant digits.
    pub fn to_text(&self) -> String {
        let n = self.n();
        let mut out = format!("pexp {n}\n");
        let row = |out: &mut String, vals: &mut dyn Iterator<Item = f64>| {
            let parts: Vec<String> = vals.map(|v| format!("{v:.16e}")).collect();
            out.push_str(&parts.join(" "));
            out.push('\n');
        };
        row(&mut out, &mut self.mu1.iter().copied());
        for i in 0..n {
            row(&mut out, &mut (0..n).map(|j| self.m2[(i, j)]));
        }
        out
    }

    /// Parses [`to_text`](Self::to_text) output and validates it.
    pub fn parse_text(text: &str, degree_tag: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty file"))?;
        let n = match header.split_whitespace().collect::<Vec<_>>()[..] {
            ["pexp", n] => n.parse::<usize>().map_err(|e| Error::parse(1, format!("`{n}`: {e}")))?,
            _ => return Err(Error::parse(1, "expected `pexp <n>`")),
        };
        let mut read_row = |what: &str| -> Result<Vec<f64>> {
            let (line, text) = lines
                .next()
                .ok_or_else(|| Error::parse(0, format!("missing {what}")))?;
            let vals = text
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| Error::parse(line, format!("`{t}`: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            if vals.len() != n {
                return Err(Error::parse(line, format!("{what} has {} values, expected {n}", vals.len())));
            }
            Ok(vals)
        };
        let mu1 = read_row("mu1")?;
        let mut m2 = DMatrix::zeros(n, n);
        for i in 0..n {
            let row = read_row(&format!("row {} of m2", i + 1))?;
            for (j, v) in row.into_iter().enumerate() {
                m2[(i, j)] = v;
            }
        }
        PseudoExpectation::new(mu1, m2, degree_tag)
    }
}

/// Which relaxation produces the moments, with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendChoice {
    /// Exhaustive search; `max_n` at most [`BRUTE_HARD_CAP`].
    Brute { max_n: usize },
    /// Basic SDP on the Kikuchi graph at `ell` (default `k/2`).
    SdpBasic {
        ell: Option<usize>,
        /// Vector dimension; default `min(⌈√(2N)⌉ + 1, 64)` for `N` vertices.
        rank: Option<usize>,
        max_sweeps: usize,
        /// Stop once a sweep improves the objective by less than this fraction.
        tol: f64,
    },
    /// Top eigenvector of the Kikuchi matrix at `ell` (default `k/2`).
    KikuchiSpectral {
        ell: Option<usize>,
        krylov_dim: usize,
        restarts: usize,
    },
}

impl BackendChoice {
    pub fn brute() -> Self {
        BackendChoice::Brute { max_n: 24 }
    }

    pub fn sdp_basic() -> Self {
        BackendChoice::SdpBasic {
            ell: None,
            rank: None,
            max_sweeps: 500,
            tol: 1e-7,
        }
    }

    pub fn kikuchi_spectral() -> Self {
        BackendChoice::KikuchiSpectral {
            ell: None,
            krylov_dim: 32,
            restarts: 30,
        }
    }

    /// Default parameters for `brute`, `sdp_basic` or `kikuchi_spectral`.
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "brute" => Some(Self::brute()),
            "sdp_basic" => Some(Self::sdp_basic()),
            "kikuchi_spectral" => Some(Self::kikuchi_spectral()),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BackendChoice::Brute { .. } => "brute",
            BackendChoice::SdpBasic { .. } => "sdp_basic",
            BackendChoice::KikuchiSpectral { .. } => "kikuchi_spectral",
        }
    }

    pub fn is_brute(&self) -> bool {
        matches!(self, BackendChoice::Brute { .. })
    }

    /// Sets the Kikuchi level; no effect on `brute`.
    pub fn with_level(mut self, level: usize) -> Self {
        match &mut self {
            BackendChoice::Brute { .. } => {}
            BackendChoice::SdpBasic { ell, .. } | BackendChoice::KikuchiSpectral { ell, .. } => *ell = Some(level),
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BackendChoice::Brute { max_n } if max_n == 0 || max_n > BRUTE_HARD_CAP => {
                Err(Error::param(format!("brute max_n = {max_n} outside [1, {BRUTE_HARD_CAP}]")))
            }
            BackendChoice::SdpBasic { rank, max_sweeps, tol, .. } => {
                if rank == Some(0) || max_sweeps == 0 || !(tol >= 0.0) {
                    Err(Error::param("sdp_basic needs rank >= 1, max_sweeps >= 1, tol >= 0"))
                } else {
                    Ok(())
                }
            }
            BackendChoice::KikuchiSpectral { krylov_dim, .. } if krylov_dim < 2 => {
                Err(Error::param("kikuchi_spectral needs krylov_dim >= 2"))
            }
            _ => Ok(()),
        }
    }
}

/// A backend result.
#[derive(Clone, Debug)]
pub struct BackendRun {
    pub pe: PseudoExpectation,
    /// The relaxation's value in instance units: `max_x Σ_C b_C x_C` for
    /// brute, and the Kikuchi quadratic form divided by `D` otherwise.
    pub objective: f64,
    /// Sweeps (sdp_basic) or 0.
    pub iterations: usize,
    /// Smallest eigenvalue of `[[1, mu1ᵀ], [mu1, m2]]`, from validation.
    pub min_eigenvalue: f64,
}

pub fn solve_pseudo_expectation(inst: &XorInstance, backend: &BackendChoice, seed: u64) -> Result<BackendRun> {
    backend.validate()?;
    let run = match *backend {
        BackendChoice::Brute { max_n } => {
            let dist = brute_maximizers(inst, max_n)?;
            BackendRun {
                objective: dist.objective as f64,
                pe: dist.moments(),
                iterations: 0,
                min_eigenvalue: 0.0,
            }
        }
        BackendChoice::SdpBasic { ell, rank, max_sweeps, tol } => {
            let a = lift(inst, ell, "sdp_basic")?;
            sdp_basic(&a, rank, max_sweeps, tol, seed)
        }
        BackendChoice::KikuchiSpectral { ell, krylov_dim, restarts } => {
            let a = lift(inst, ell, "kikuchi_spectral")?;
            kikuchi_spectral(&a, krylov_dim, restarts, seed)
        }
    };
    let mut run = run;
    run.min_eigenvalue = run.pe.validate()?;
    Ok(run)
}

fn lift(inst: &XorInstance, ell: Option<usize>, name: &str) -> Result<KikuchiMatrix> {
    let k = inst.k();
    if k == 0 || k % 2 == 1 {
        return Err(Error::UnsupportedConfig(format!(
            "{name} needs even arity, got k = {k}; pair clauses first"
        )));
    }
    let ell = ell.unwrap_or(k / 2);
    if ell < k / 2 {
        return Err(Error::UnsupportedConfig(format!("{name} level {ell} below k/2 = {}", k / 2)));
    }
    build_kikuchi(inst, ell)
}

/// The uniform distribution on the maximizers of `Σ_C b_C x_C`.
#[derive(Clone, Debug)]
pub struct BruteDistribution {
    pub n: usize,
    pub objective: i64,
    /// Maximizers as bit masks: bit `i` set iff `x_i = -1`.
    pub support: Vec<u32>,
}

impl BruteDistribution {
    pub fn assignment(&self, mask: u32) -> Assignment {
        Assignment::new((0..self.n).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect()).unwrap()
    }

    /// `E[f(x)]` over the support.
    pub fn expect(&self, f: impl Fn(&Assignment) -> f64) -> f64 {
        let total: f64 = self.support.iter().map(|&w| f(&self.assignment(w))).sum();
        total / self.support.len() as f64
    }

    pub fn moments(&self) -> PseudoExpectation {
        let n = self.n;
        let mut first = vec![0i64; n];
        let mut second = vec![0i64; n * n];
        let mut x = vec![0i64; n];
        for &w in &self.support {
            for (i, xi) in x.iter_mut().enumerate() {
                *xi = if w >> i & 1 == 1 { -1 } else { 1 };
                first[i] += *xi;
            }
            for i in 0..n {
                for j in i + 1..n {
                    second[i * n + j] += x[i] * x[j];
                }
            }
        }
        let count = self.support.len() as f64;
        let m2 = DMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Equal => 1.0,
            std::cmp::Ordering::Less => second[i * n + j] as f64 / count,
            std::cmp::Ordering::Greater => second[j * n + i] as f64 / count,
        });
        PseudoExpectation {
            mu1: first.iter().map(|&s| s as f64 / count).collect(),
            m2,
            degree_tag: "brute".into(),
        }
    }
}

/// Enumerates `{±1}^n` in Gray-code order, tracking `Σ_C b_C x_C`
/// incrementally.
pub fn brute_maximizers(inst: &XorInstance, max_n: usize) -> Result<BruteDistribution> {
    let n = inst.n();
    if n > max_n.min(BRUTE_HARD_CAP) {
        return Err(Error::UnsupportedConfig(format!("brute backend limited to n <= {max_n}, got {n}")));
    }
    // occurrence lists; a clause repeating a variable appears once per copy
    let mut occ: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (c, (scope, _)) in inst.clauses().enumerate() {
        for &v in scope {
            occ[v as usize].push(c as u32);
        }
    }
    let mut val: Vec<i8> = inst.clauses().map(|(_, b)| b).collect();
    let mut obj: i64 = val.iter().map(|&v| v as i64).sum();
    let mut best = obj;
    let mut support = vec![0u32];
    let mut mask = 0u32;
    for t in 1u64..1 << n {
        let i = t.trailing_zeros() as usize;
        mask ^= 1 << i;
        for &c in &occ[i] {
            let v = &mut val[c as usize];
            obj -= 2 * *v as i64;
            *v = -*v;
        }
        if obj > best {
            best = obj;
            support.clear();
            support.push(mask);
        } else if obj == best {
            support.push(mask);
        }
    }
    Ok(BruteDistribution {
        n,
        objective: best,
        support,
    })
}

/// Vectors per vertex, row-major `N × rank`.
struct VertexVectors {
    rank: usize,
    data: Vec<f64>,
}

impl VertexVectors {
    fn row(&self, s: usize) -> &[f64] {
        &self.data[s * self.rank..(s + 1) * self.rank]
    }
}

fn sdp_basic(a: &KikuchiMatrix, rank: Option<usize>, max_sweeps: usize, tol: f64, seed: u64) -> BackendRun {
    let dim = a.dim();
    let rank = rank
        .unwrap_or_else(|| (((2 * dim) as f64).sqrt().ceil() as usize + 1).min(64))
        .max(1);
    let mut rng = rng::stream(seed, streams::BACKEND);
    let mut data: Vec<f64> = (0..dim * rank).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    for row in data.chunks_mut(rank) {
        let len = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        row.iter_mut().for_each(|v| *v /= len);
    }
    let mut v = VertexVectors { rank, data };
    let mut g = vec![0.0; rank];
    let mut value = quadratic(a, &v);
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        // one Gauss-Seidel pass: v_S <- normalize(Σ_T A(S,T) v_T)
        for s in 0..dim {
            g.iter_mut().for_each(|x| *x = 0.0);
            for (t, w) in a.row(s) {
                g.iter_mut().zip(v.row(t)).for_each(|(x, y)| *x += w as f64 * y);
            }
            let len = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            if len > 0.0 {
                let vs = &mut v.data[s * rank..(s + 1) * rank];
                vs.iter_mut().zip(&g).for_each(|(x, y)| *x = y / len);
            }
        }
        let next = quadratic(a, &v);
        let gain = next - value;
        value = next;
        if gain <= tol * value.abs().max(1.0) {
            break;
        }
    }
    let vectors = v;
    let objective = value / a.edges_per_clause() as f64;
    let m2 = lift_moments(a, |s, t| dot(vectors.row(s), vectors.row(t)));
    BackendRun {
        pe: PseudoExpectation {
            mu1: vec![0.0; a.n()],
            m2: linalg::project_psd_unit_diagonal(&m2),
            degree_tag: format!("sdp_basic(level {}, rank {rank})", a.ell()),
        },
        objective,
        iterations: sweeps,
        min_eigenvalue: 0.0,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Σ_{(S,T)} A(S,T) <v_S, v_T>`.
fn quadratic(a: &KikuchiMatrix, v: &VertexVectors) -> f64 {
    (0..a.dim())
        .into_par_iter()
        .map(|s| a.row(s).map(|(t, w)| w as f64 * dot(v.row(s), v.row(t))).sum::<f64>())
        .collect::<Vec<f64>>()
        .iter()
        .sum()
}

fn kikuchi_spectral(a: &KikuchiMatrix, krylov_dim: usize, restarts: usize, seed: u64) -> BackendRun {
    let (theta, v) = linalg::top_eigenpair(a, krylov_dim, restarts, 1e-8, seed);
    let scale = a.dim() as f64;
    let m2 = lift_moments(a, |s, t| scale * v[s] * v[t]);
    BackendRun {
        pe: PseudoExpectation {
            mu1: vec![0.0; a.n()],
            m2: linalg::project_psd_unit_diagonal(&m2),
            degree_tag: format!("kikuchi_spectral(level {})", a.ell()),
        },
        objective: theta.max(0.0) * scale / a.edges_per_clause().max(1) as f64,
        iterations: 0,
        min_eigenvalue: 0.0,
    }
}

/// `m2(i, j)` = average over `(ℓ-1)`-sets `U` avoiding `i, j` of
/// `inner(U + i, U + j)`, clipped to [-1, 1], with unit diagonal.
fn lift_moments(a: &KikuchiMatrix, inner: impl Fn(usize, usize) -> f64 + Sync) -> DMatrix<f64> {
    let (n, ell) = (a.n(), a.ell());
    let ranker = a.ranker();
    let base = SubsetRanker::new(n, ell - 1);
    let mut acc = vec![0.0f64; n * n];
    let mut members = vec![u32::MAX; n];
    let mut buf = Vec::with_capacity(ell);
    for u_rank in 0..base.len() {
        let u = base.unrank(u_rank);
        // rank of U + i for each i outside U
        for (i, slot) in members.iter_mut().enumerate() {
            if u.binary_search(&(i as u32)).is_ok() {
                *slot = u32::MAX;
            } else {
                buf.clear();
                buf.extend_from_slice(&u);
                buf.push(i as u32);
                buf.sort_unstable();
                *slot = ranker.rank(&buf) as u32;
            }
        }
        acc.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            if members[i] == u32::MAX {
                return;
            }
            let si = members[i] as usize;
            for (j, r) in row.iter_mut().enumerate() {
                if j != i && members[j] != u32::MAX {
                    *r += inner(si, members[j] as usize);
                }
            }
        });
    }
    let count = crate::kikuchi::binomial(n as u64 - 2, ell as u64 - 1).max(1) as f64;
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            // average the two triangles so the result is exactly symmetric
            (0.5 * (acc[i * n + j] + acc[j * n + i]) / count).clamp(-1.0, 1.0)
        }
    })
}

/// `sgn(mu1)` with `sgn(0) = +1`.
pub fn round_odd(pe: &PseudoExpectation) -> Assignment {
    Assignment::sign_of(pe.mu1())
}

/// Outcome of [`round_even`].
#[derive(Clone, Debug, PartialEq)]
pub struct EvenRounding {
    pub assignment: Assignment,
    pub row: usize,
    pub delta: f64,
}

/// Picks the row sign vector `sgn(m2[i, ·])` whose `⌈af·n⌉`-th largest
/// `|corr|` with the other rows is largest (smallest `δ_i`, lowest index on
/// ties).
pub fn round_even(pe: &PseudoExpectation, agreement_fraction: f64) -> Result<EvenRounding> {
    let n = pe.n();
    if n < 2 {
        return Err(Error::param(format!("round_even needs n >= 2, got {n}")));
    }
    if !(agreement_fraction > 0.0 && agreement_fraction <= 1.0) {
        return Err(Error::param(format!("agreement fraction {agreement_fraction} outside (0, 1]")));
    }
    let words = n.div_ceil(64);
    let rows: Vec<Vec<u64>> = (0..n)
        .map(|i| {
            let mut bits = vec![0u64; words];
            for j in 0..n {
                if pe.m2[(i, j)] < 0.0 {
                    bits[j / 64] |= 1 << (j % 64);
                }
            }
            bits
        })
        .collect();
    let rank = ((agreement_fraction * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    let deltas: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut agree: Vec<usize> = rows
                .iter()
                .map(|r| {
                    let ham: u32 = r.iter().zip(&rows[i]).map(|(a, b)| (a ^ b).count_ones()).sum();
                    let ham = ham as usize;
                    // |n - 2·ham| / n, kept in integers until the end
                    n.abs_diff(2 * ham)
                })
                .collect();
            agree.sort_unstable_by(|a, b| b.cmp(a));
            1.0 - agree[rank - 1] as f64 / n as f64
        })
        .collect();
    let (row, &delta) = deltas
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .unwrap();
    let signs: Vec<f64> = (0..n).map(|j| pe.m2[(row, j)]).collect();
    Ok(EvenRounding {
        assignment: Assignment::sign_of(&signs),
        row,
        delta,
    })
}
