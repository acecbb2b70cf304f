//! Level-ℓ Kikuchi matrices of even-arity XOR instances.
//!
//! Vertices are the ℓ-subsets of `[n]`, ranked in colexicographic order. For a
//! clause set `C` with sign `b`, every ordered pair `(S, T)` with
//! `S △ T = C` gets `A(S, T) += b`. Writing `S = A ∪ R`, `T = (C \ A) ∪ R`
//! with `|A| = k/2` and `R` disjoint from `C`, there are
//! `D = C(k, k/2) · C(n - k, ℓ - k/2)` such ordered pairs per clause set, and
//! `zᵀ A z = D · Σ_C b_C x_C` for `z_S = Π_{i ∈ S} x_i`.

use std::collections::HashMap;
use std::io::{self, Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{clean, Assignment, XorInstance};
use crate::linalg::{self, SymmetricOperator};

/// Default bound on the number of vertices `C(n, ℓ)`.
pub const DEFAULT_VERTEX_CAP: u64 = 5_000_000;

/// Bound on stored entries, about 1.6 GB of CSR storage.
pub const NNZ_CAP: u64 = 100_000_000;

/// Default iteration budget for [`refutation_certificate`]; far above what
/// the stopping rule needs at any admissible size.
pub const DEFAULT_MAX_ITERS: usize = 1_000_000;

/// `C(n, k)`, saturating at `u64::MAX`.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Colexicographic ranking of the ℓ-subsets of `[n]`:
/// `rank({s_1 < ... < s_ℓ}) = Σ_i C(s_i, i)` with 0-based `s_i` and 1-based `i`.
#[derive(Clone, Debug)]
pub struct SubsetRanker {
    n: usize,
    ell: usize,
    table: Vec<u64>,
}

impl SubsetRanker {
    pub fn new(n: usize, ell: usize) -> Self {
        let mut table = vec![0u64; (n + 1) * (ell + 1)];
        for a in 0..=n {
            for b in 0..=ell {
                table[a * (ell + 1) + b] = binomial(a as u64, b as u64);
            }
        }
        SubsetRanker { n, ell, table }
    }

    fn c(&self, a: usize, b: usize) -> u64 {
        self.table[a * (self.ell + 1) + b]
    }

    /// Number of ℓ-subsets.
    pub fn len(&self) -> u64 {
        self.c(self.n, self.ell)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rank of a strictly increasing list of ℓ indices.
    pub fn rank(&self, sorted: &[u32]) -> u64 {
        debug_assert_eq!(sorted.len(), self.ell);
        debug_assert!(sorted.windows(2).all(|w| w[0] < w[1]));
        sorted
            .iter()
            .enumerate()
            .map(|(i, &s)| self.c(s as usize, i + 1))
            .sum()
    }

    pub fn unrank(&self, mut rank: u64) -> Vec<u32> {
        let mut out = vec![0u32; self.ell];
        let mut hi = self.n;
        for i in (1..=self.ell).rev() {
            // largest s with C(s, i) <= rank
            let mut s = hi - 1;
            while self.c(s, i) > rank {
                s -= 1;
            }
            out[i - 1] = s as u32;
            rank -= self.c(s, i);
            hi = s;
        }
        out
    }
}

/// Sparse symmetric Kikuchi matrix in CSR form.
#[derive(Clone, Debug, PartialEq)]
pub struct KikuchiMatrix {
    n: usize,
    k: usize,
    ell: usize,
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<i32>,
    edges_per_clause: u64,
    clause_sets: usize,
    kept_clauses: usize,
    dropped_clauses: usize,
}

pub fn build_kikuchi(inst: &XorInstance, ell: usize) -> Result<KikuchiMatrix> {
    build_kikuchi_capped(inst, ell, DEFAULT_VERTEX_CAP)
}

pub fn build_kikuchi_capped(inst: &XorInstance, ell: usize, vertex_cap: u64) -> Result<KikuchiMatrix> {
    let (n, k) = (inst.n(), inst.k());
    if k == 0 || k % 2 == 1 {
        return Err(Error::UnsupportedArity {
            arity: k,
            reason: "Kikuchi matrices need even arity".into(),
        });
    }
    let half = k / 2;
    if ell < half || ell > n {
        return Err(Error::param(format!("level {ell} outside [{half}, {n}]")));
    }
    let vertices = binomial(n as u64, ell as u64);
    if vertices > vertex_cap {
        return Err(Error::Resource(format!(
            "C({n}, {ell}) = {vertices} vertices exceeds the cap of {vertex_cap}"
        )));
    }
    let (kept, _) = clean(inst);
    let mut weights: HashMap<Vec<u32>, i32> = HashMap::with_capacity(kept.m());
    for (scope, b) in kept.clauses() {
        let mut set = scope.to_vec();
        set.sort_unstable();
        *weights.entry(set).or_insert(0) += b as i32;
    }
    let clause_sets = weights.len();
    let mut sets: Vec<(Vec<u32>, i32)> = weights.into_iter().filter(|&(_, w)| w != 0).collect();
    sets.sort_unstable();

    let edges_per_clause = binomial(k as u64, half as u64)
        .saturating_mul(binomial((n - k) as u64, (ell - half) as u64));
    let nnz = (sets.len() as u64).saturating_mul(edges_per_clause);
    if nnz > NNZ_CAP {
        return Err(Error::Resource(format!(
            "{nnz} stored entries exceeds the cap of {NNZ_CAP}"
        )));
    }

    let ranker = SubsetRanker::new(n, ell);
    let triples: Vec<(u32, u32, i32)> = sets
        .par_iter()
        .flat_map_iter(|(set, w)| clause_pairs(&ranker, n, set, ell).map(move |(s, t)| (s, t, *w)))
        .collect();
    let mut triples = triples;
    triples.par_sort_unstable_by_key(|&(s, t, _)| (s, t));

    let dim = vertices as usize;
    let mut row_ptr = vec![0usize; dim + 1];
    for &(s, _, _) in &triples {
        row_ptr[s as usize + 1] += 1;
    }
    for r in 0..dim {
        row_ptr[r + 1] += row_ptr[r];
    }
    let cols = triples.iter().map(|t| t.1).collect();
    let vals = triples.iter().map(|t| t.2).collect();
    Ok(KikuchiMatrix {
        n,
        k,
        ell,
        dim,
        row_ptr,
        cols,
        vals,
        edges_per_clause,
        clause_sets,
        kept_clauses: kept.m(),
        dropped_clauses: inst.m() - kept.m(),
    })
}

/// All ordered `(rank S, rank T)` with `S △ T = set`.
fn clause_pairs<'a>(
    ranker: &'a SubsetRanker,
    n: usize,
    set: &'a [u32],
    ell: usize,
) -> impl Iterator<Item = (u32, u32)> + 'a {
    let k = set.len();
    let half = k / 2;
    let outside: Vec<u32> = (0..n as u32).filter(|v| set.binary_search(v).is_err()).collect();
    let halves = combinations(k, half);
    let rests = combinations(outside.len(), ell - half);
    let mut s = Vec::with_capacity(ell);
    let mut t = Vec::with_capacity(ell);
    let mut out = Vec::with_capacity(halves.len() * rests.len());
    for rest in &rests {
        for a in &halves {
            s.clear();
            t.clear();
            let mut ai = 0;
            for (j, &v) in set.iter().enumerate() {
                if ai < a.len() && a[ai] == j {
                    s.push(v);
                    ai += 1;
                } else {
                    t.push(v);
                }
            }
            for &r in rest {
                s.push(outside[r]);
                t.push(outside[r]);
            }
            s.sort_unstable();
            t.sort_unstable();
            out.push((ranker.rank(&s) as u32, ranker.rank(&t) as u32));
        }
    }
    out.into_iter()
}

/// All `size`-subsets of `0..len` as increasing index lists.
fn combinations(len: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if size > len {
        return out;
    }
    let mut comb: Vec<usize> = (0..size).collect();
    loop {
        out.push(comb.clone());
        let Some(i) = (0..size).rev().find(|&i| comb[i] < len - size + i) else {
            return out;
        };
        comb[i] += 1;
        for t in i + 1..size {
            comb[t] = comb[t - 1] + 1;
        }
    }
}

impl KikuchiMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    /// Stored entries, counting `(S, T)` and `(T, S)` separately.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Ordered pairs `(S, T)` per clause set.
    pub fn edges_per_clause(&self) -> u64 {
        self.edges_per_clause
    }

    /// Distinct clause sets after cleaning, including ones whose signs cancel.
    pub fn clause_sets(&self) -> usize {
        self.clause_sets
    }

    pub fn kept_clauses(&self) -> usize {
        self.kept_clauses
    }

    pub fn dropped_clauses(&self) -> usize {
        self.dropped_clauses
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, i32)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[range.clone()]
            .iter()
            .zip(&self.vals[range])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, r: usize, c: usize) -> i32 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        let cols = &self.cols[range.clone()];
        match cols.binary_search(&(c as u32)) {
            Ok(pos) => self.vals[range.start + pos],
            Err(_) => 0,
        }
    }

    pub fn ranker(&self) -> SubsetRanker {
        SubsetRanker::new(self.n, self.ell)
    }

    /// Stored `(row, col, value)` triples in row-major order.
    pub fn triples(&self) -> Vec<(u64, u64, i32)> {
        (0..self.dim)
            .flat_map(|r| self.row(r).map(move |(c, v)| (r as u64, c as u64, v)))
            .collect()
    }

    /// `zᵀ A z` with `z_S = Π_{i ∈ S} x_i`.
    pub fn quadratic_form(&self, x: &Assignment) -> i64 {
        let ranker = self.ranker();
        let z: Vec<i64> = (0..self.dim as u64)
            .map(|r| ranker.unrank(r).iter().map(|&v| x[v as usize] as i64).product())
            .collect();
        (0..self.dim)
            .map(|r| self.row(r).map(|(c, v)| v as i64 * z[r] * z[c]).sum::<i64>())
            .sum()
    }

    pub fn spectral_norm(&self, tol: f64, max_iters: usize, seed: u64) -> Result<f64> {
        linalg::spectral_norm(self, tol, max_iters, seed)
    }

    /// Writes `kik <n> <ell> <nnz>\n` and little-endian (u64, u64, i32) triples.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "kik {} {} {}", self.n, self.ell, self.nnz())?;
        for (r, c, v) in self.triples() {
            w.write_all(&r.to_le_bytes())?;
            w.write_all(&c.to_le_bytes())?;
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()
    }
}

impl SymmetricOperator for KikuchiMatrix {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        // each row sums in a fixed order, so the result does not depend on scheduling
        y.par_iter_mut().with_min_len(1024).enumerate().for_each(|(r, yr)| {
            *yr = self.row(r).map(|(c, v)| v as f64 * x[c]).sum();
        });
    }
}

/// Contents of a binary matrix dump.
#[derive(Clone, Debug, PartialEq)]
pub struct KikuchiDump {
    pub n: usize,
    pub ell: usize,
    pub triples: Vec<(u64, u64, i32)>,
}

pub fn read_binary<R: Read>(mut r: R) -> Result<KikuchiDump> {
    let mut header = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        r.read_exact(&mut byte)?;
        if byte[0] == b'\n' {
            break;
        }
        header.push(byte[0]);
        if header.len() > 128 {
            return Err(Error::parse(1, "header line too long"));
        }
    }
    let header = String::from_utf8(header).map_err(|_| Error::parse(1, "header is not UTF-8"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [tag, n, ell, nnz] = fields[..] else {
        return Err(Error::parse(1, "expected `kik <n> <ell> <nnz>`"));
    };
    if tag != "kik" {
        return Err(Error::parse(1, format!("unknown tag `{tag}`")));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|e| Error::parse(1, format!("`{s}`: {e}")));
    let (n, ell, nnz) = (num(n)?, num(ell)?, num(nnz)?);
    let mut triples = Vec::with_capacity(nnz.min(1 << 20));
    let mut buf = [0u8; 20];
    for _ in 0..nnz {
        r.read_exact(&mut buf)?;
        let row = u64::from_le_bytes(buf[0..8].try_into().unwrap());
        let col = u64::from_le_bytes(buf[8..16].try_into().unwrap());
        let val = i32::from_le_bytes(buf[16..20].try_into().unwrap());
        triples.push((row, col, val));
    }
    Ok(KikuchiDump { n, ell, triples })
}

/// A certified bound on `max_x |E_{C ∼ H}[b_C x_C]|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefutationCertificate {
    pub delta: f64,
    /// Power-iteration estimate, a lower bound on `‖A‖`.
    pub lambda: f64,
    /// `lambda / (1 - tol)`, an upper bound on `‖A‖` with probability `1 - 2^-30`.
    pub lambda_upper: f64,
    pub n: usize,
    pub k: usize,
    pub ell: usize,
    pub m: usize,
    pub vertices: usize,
    pub nnz: usize,
    pub edges_per_clause: u64,
    pub clause_sets: usize,
    pub dropped_clauses: usize,
}

/// `δ̂ = λ_up · C(n, ℓ) / (m · D) + |H \ H′| / m`.
///
/// For every `x`, `|Σ_{C ∈ H′} b_C x_C| = |zᵀ A z| / D ≤ ‖A‖ · C(n, ℓ) / D`,
/// and each dropped clause contributes at most 1 in absolute value.
pub fn refutation_certificate(inst: &XorInstance, ell: usize, tol: f64, seed: u64) -> Result<RefutationCertificate> {
    let a = build_kikuchi(inst, ell)?;
    certify(&a, inst.m(), tol, DEFAULT_MAX_ITERS, seed)
}

pub fn certify(a: &KikuchiMatrix, m: usize, tol: f64, max_iters: usize, seed: u64) -> Result<RefutationCertificate> {
    let lambda = a.spectral_norm(tol, max_iters, seed)?;
    let lambda_upper = lambda / (1.0 - tol);
    let delta = if m == 0 {
        0.0
    } else {
        let m = m as f64;
        lambda_upper * a.dim as f64 / (m * a.edges_per_clause as f64) + a.dropped_clauses as f64 / m
    };
    Ok(RefutationCertificate {
        delta,
        lambda,
        lambda_upper,
        n: a.n,
        k: a.k,
        ell: a.ell,
        m,
        vertices: a.dim,
        nnz: a.nnz(),
        edges_per_clause: a.edges_per_clause,
        clause_sets: a.clause_sets,
        dropped_clauses: a.dropped_clauses,
    })
}
