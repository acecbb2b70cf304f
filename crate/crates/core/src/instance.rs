//! Assignments, XOR and CSP instances, planting distributions and the two
//! random planted samplers.
//!
//! Variables are 0-based in memory. The text formats in [`crate::io`] and all
//! `Display` output use 1-based indices.

use std::fmt;
use std::ops::Index;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, streams};

/// A point of the hypercube {-1, +1}^n.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct Assignment(Vec<i8>);

impl Assignment {
    pub fn new(entries: Vec<i8>) -> Result<Self> {
        if let Some(pos) = entries.iter().position(|&e| e != 1 && e != -1) {
            return Err(Error::param(format!(
                "assignment entry {} is {}, expected +1 or -1",
                pos + 1,
                entries[pos]
            )));
        }
        Ok(Assignment(entries))
    }

    pub fn ones(n: usize) -> Self {
        Assignment(vec![1; n])
    }

    /// Uniformly random assignment, a pure function of `seed`.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = rng::stream(seed, streams::ASSIGNMENT);
        Assignment((0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect())
    }

    /// Entrywise sign with sgn(0) = +1.
    pub fn sign_of(values: &[f64]) -> Self {
        Assignment(values.iter().map(|&v| if v >= 0.0 { 1 } else { -1 }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn negated(&self) -> Self {
        Assignment(self.0.iter().map(|&e| -e).collect())
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = -self.0[i];
    }

    /// `<x, y> / n`, which for sign vectors is their correlation.
    pub fn corr(&self, other: &Assignment) -> f64 {
        assert_eq!(self.len(), other.len(), "assignment lengths differ");
        if self.is_empty() {
            return 0.0;
        }
        let dot: i64 = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| i64::from(a * b))
            .sum();
        dot as f64 / self.len() as f64
    }

    pub fn hamming(&self, other: &Assignment) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    /// Product of the entries at `vars`; repeated indices cancel.
    pub fn parity(&self, vars: &[u32]) -> i8 {
        vars.iter().fold(1, |acc, &v| acc * self.0[v as usize])
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&e| f64::from(e)).collect()
    }
}

impl Index<usize> for Assignment {
    type Output = i8;

    fn index(&self, i: usize) -> &i8 {
        &self.0[i]
    }
}

impl TryFrom<Vec<i8>> for Assignment {
    type Error = Error;

    fn try_from(v: Vec<i8>) -> Result<Self> {
        Assignment::new(v)
    }
}

impl From<Assignment> for Vec<i8> {
    fn from(a: Assignment) -> Vec<i8> {
        a.0
    }
}

/// True iff all entries of the tuple are pairwise distinct.
pub fn all_distinct(vars: &[u32]) -> bool {
    vars.iter()
        .enumerate()
        .all(|(i, v)| !vars[..i].contains(v))
}

/// An ordered tuple of variable indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Scope(Vec<u32>);

impl Scope {
    pub fn new(vars: Vec<u32>) -> Self {
        Scope(vars)
    }

    /// Builds a scope from 1-based indices.
    pub fn from_one_based(vars: &[u32]) -> Result<Self> {
        vars.iter()
            .map(|&v| {
                v.checked_sub(1)
                    .ok_or_else(|| Error::param("variable indices are 1-based"))
            })
            .collect::<Result<Vec<_>>>()
            .map(Scope)
    }

    pub fn vars(&self) -> &[u32] {
        &self.0
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn is_distinct(&self) -> bool {
        all_distinct(&self.0)
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (j, v) in self.0.iter().enumerate() {
            if j > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", v + 1)?;
        }
        write!(f, ")")
    }
}

/// `x_C`: the product of `x` over the tuple.
pub fn evaluate_xor_clause(x: &Assignment, scope: &Scope) -> i8 {
    x.parity(scope.vars())
}

/// A multiset of parity equations `prod_{i in C} x_i = b_C`, stored flat and
/// in insertion order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XorInstance {
    n: usize,
    k: usize,
    vars: Vec<u32>,
    rhs: Vec<i8>,
}

impl XorInstance {
    pub fn new(n: usize, k: usize) -> Self {
        XorInstance {
            n,
            k,
            vars: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn with_capacity(n: usize, k: usize, m: usize) -> Self {
        XorInstance {
            n,
            k,
            vars: Vec::with_capacity(m * k),
            rhs: Vec::with_capacity(m),
        }
    }

    /// Appends a clause. Panics on arity, range or sign violations.
    pub fn push(&mut self, scope: &[u32], rhs: i8) {
        assert_eq!(scope.len(), self.k, "scope arity differs from instance arity");
        assert!(
            scope.iter().all(|&v| (v as usize) < self.n),
            "scope index out of range"
        );
        assert!(rhs == 1 || rhs == -1, "rhs must be +1 or -1");
        self.vars.extend_from_slice(scope);
        self.rhs.push(rhs);
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhs.is_empty()
    }

    pub fn scope(&self, c: usize) -> &[u32] {
        &self.vars[c * self.k..(c + 1) * self.k]
    }

    pub fn rhs(&self, c: usize) -> i8 {
        self.rhs[c]
    }

    pub fn clauses(&self) -> impl ExactSizeIterator<Item = (&[u32], i8)> + '_ {
        (0..self.m()).map(move |c| (self.scope(c), self.rhs[c]))
    }

    /// Clauses `range` as a new instance over the same variables.
    pub fn slice(&self, range: std::ops::Range<usize>) -> XorInstance {
        XorInstance {
            n: self.n,
            k: self.k,
            vars: self.vars[range.start * self.k..range.end * self.k].to_vec(),
            rhs: self.rhs[range].to_vec(),
        }
    }

    /// Same scopes with every right-hand side negated.
    pub fn negated(&self) -> XorInstance {
        XorInstance {
            rhs: self.rhs.iter().map(|&b| -b).collect(),
            ..self.clone()
        }
    }

    /// Number of clauses satisfied by `x`.
    pub fn satisfied(&self, x: &Assignment) -> usize {
        assert_eq!(x.len(), self.n, "assignment length differs from n");
        self.clauses().filter(|&(s, b)| x.parity(s) == b).count()
    }

    /// `sum_C b_C x_C`.
    pub fn objective(&self, x: &Assignment) -> i64 {
        let sat = self.satisfied(x) as i64;
        2 * sat - self.m() as i64
    }
}

/// Fraction of constraints satisfied.
pub trait Value {
    fn value(&self, x: &Assignment) -> f64;
}

impl Value for XorInstance {
    fn value(&self, x: &Assignment) -> f64 {
        if self.is_empty() {
            return 1.0;
        }
        self.satisfied(x) as f64 / self.m() as f64
    }
}

impl Value for CspInstance {
    fn value(&self, x: &Assignment) -> f64 {
        if self.is_empty() {
            return 1.0;
        }
        self.satisfied(x) as f64 / self.m() as f64
    }
}

/// Free-function form of [`Value::value`].
pub fn value<I: Value + ?Sized>(instance: &I, x: &Assignment) -> f64 {
    instance.value(x)
}

/// Keeps only clauses with pairwise distinct entries, preserving order and
/// multiplicity. Returns the filtered instance and the dropped fraction.
pub fn clean(instance: &XorInstance) -> (XorInstance, f64) {
    let mut kept = XorInstance::with_capacity(instance.n, instance.k, instance.m());
    for (scope, b) in instance.clauses() {
        if all_distinct(scope) {
            kept.vars.extend_from_slice(scope);
            kept.rhs.push(b);
        }
    }
    let dropped = instance.m() - kept.m();
    let fraction = if instance.is_empty() {
        0.0
    } else {
        dropped as f64 / instance.m() as f64
    };
    (kept, fraction)
}

/// Index of a sign pattern: bit `j` is set iff `y[j] == -1`.
pub fn pattern_index(y: &[i8]) -> usize {
    y.iter()
        .enumerate()
        .fold(0, |acc, (j, &s)| if s == -1 { acc | (1 << j) } else { acc })
}

/// Inverse of [`pattern_index`].
pub fn pattern(k: usize, index: usize) -> Vec<i8> {
    (0..k)
        .map(|j| if index >> j & 1 == 1 { -1 } else { 1 })
        .collect()
}

/// A predicate `P: {-1,+1}^k -> {0,1}` stored as a dense truth table indexed
/// by [`pattern_index`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CspPredicate {
    k: usize,
    table: Vec<bool>,
}

pub const MAX_ARITY: usize = 20;

impl CspPredicate {
    pub fn new(k: usize, table: Vec<bool>) -> Result<Self> {
        if k == 0 || k > MAX_ARITY {
            return Err(Error::param(format!("predicate arity {k} outside 1..={MAX_ARITY}")));
        }
        if table.len() != 1 << k {
            return Err(Error::param(format!(
                "truth table has {} entries, expected {}",
                table.len(),
                1usize << k
            )));
        }
        Ok(CspPredicate { k, table })
    }

    pub fn from_fn(k: usize, f: impl Fn(&[i8]) -> bool) -> Result<Self> {
        if k == 0 || k > MAX_ARITY {
            return Err(Error::param(format!("predicate arity {k} outside 1..={MAX_ARITY}")));
        }
        let table = (0..1usize << k).map(|idx| f(&pattern(k, idx))).collect();
        CspPredicate::new(k, table)
    }

    /// k-SAT with -1 read as "false": only the all-false pattern is rejected.
    pub fn k_sat(k: usize) -> Result<Self> {
        CspPredicate::from_fn(k, |y| y.contains(&1))
    }

    /// Parity predicate `prod_j y_j = +1`.
    pub fn xor(k: usize) -> Result<Self> {
        CspPredicate::from_fn(k, |y| y.iter().product::<i8>() == 1)
    }

    /// Parses the truth table from hex; bit `idx` of the big-endian number
    /// is `P(pattern(idx))`.
    pub fn from_hex(k: usize, hex: &str) -> Result<Self> {
        if k == 0 || k > MAX_ARITY {
            return Err(Error::param(format!("predicate arity {k} outside 1..={MAX_ARITY}")));
        }
        let hex = hex.strip_prefix("0x").unwrap_or(hex);
        let bits = 1usize << k;
        let digits = bits.div_ceil(4);
        if hex.len() != digits {
            return Err(Error::param(format!(
                "truth table hex has {} digits, expected {digits}",
                hex.len()
            )));
        }
        let mut table = vec![false; bits];
        for (pos, ch) in hex.chars().rev().enumerate() {
            let nibble = ch
                .to_digit(16)
                .ok_or_else(|| Error::param(format!("invalid hex digit {ch:?}")))?;
            for b in 0..4 {
                let idx = pos * 4 + b;
                let set = nibble >> b & 1 == 1;
                if idx < bits {
                    table[idx] = set;
                } else if set {
                    return Err(Error::param("truth table hex sets bits beyond 2^k"));
                }
            }
        }
        CspPredicate::new(k, table)
    }

    pub fn to_hex(&self) -> String {
        let digits = self.table.len().div_ceil(4);
        (0..digits)
            .rev()
            .map(|pos| {
                let nibble = (0..4).fold(0u32, |acc, b| {
                    let idx = pos * 4 + b;
                    if idx < self.table.len() && self.table[idx] {
                        acc | 1 << b
                    } else {
                        acc
                    }
                });
                char::from_digit(nibble, 16).unwrap()
            })
            .collect()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn eval(&self, y: &[i8]) -> bool {
        self.table[pattern_index(y)]
    }

    pub fn eval_index(&self, index: usize) -> bool {
        self.table[index]
    }

    /// True iff every pattern satisfies the predicate.
    pub fn is_trivial(&self) -> bool {
        self.table.iter().all(|&b| b)
    }
}

/// A probability mass function on {-1,+1}^k, dense over [`pattern_index`].
///
/// Masses are `f64`; dyadic rationals with small denominators are therefore
/// held exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantingDistribution {
    k: usize,
    mass: Vec<f64>,
}

pub const MASS_TOLERANCE: f64 = 1e-12;

impl PlantingDistribution {
    pub fn new(k: usize, mass: Vec<f64>) -> Result<Self> {
        if k == 0 || k > MAX_ARITY {
            return Err(Error::param(format!("planting arity {k} outside 1..={MAX_ARITY}")));
        }
        if mass.len() != 1 << k {
            return Err(Error::param(format!(
                "planting distribution has {} masses, expected {}",
                mass.len(),
                1usize << k
            )));
        }
        if let Some(&bad) = mass.iter().find(|&&p| !(p >= 0.0 && p.is_finite())) {
            return Err(Error::param(format!("mass {bad} is not a nonnegative number")));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::param(format!("masses sum to {total}, expected 1")));
        }
        Ok(PlantingDistribution { k, mass })
    }

    /// Uniform over the listed patterns (duplicates collapse).
    pub fn uniform_on(k: usize, patterns: &[Vec<i8>]) -> Result<Self> {
        let mut support = vec![false; 1 << k];
        for y in patterns {
            if y.len() != k {
                return Err(Error::param("pattern length differs from k"));
            }
            support[pattern_index(y)] = true;
        }
        let count = support.iter().filter(|&&s| s).count();
        if count == 0 {
            return Err(Error::param("empty support"));
        }
        let p = 1.0 / count as f64;
        PlantingDistribution::new(k, support.iter().map(|&s| if s { p } else { 0.0 }).collect())
    }

    /// Uniform over the satisfying patterns of `predicate`.
    pub fn uniform_satisfying(predicate: &CspPredicate) -> Result<Self> {
        let k = predicate.k();
        let sat: Vec<Vec<i8>> = (0..1usize << k)
            .filter(|&i| predicate.eval_index(i))
            .map(|i| pattern(k, i))
            .collect();
        PlantingDistribution::uniform_on(k, &sat)
    }

    pub fn uniform(k: usize) -> Result<Self> {
        let size = 1usize << k;
        PlantingDistribution::new(k, vec![1.0 / size as f64; size])
    }

    pub fn point_mass(y: &[i8]) -> Result<Self> {
        PlantingDistribution::uniform_on(y.len(), &[y.to_vec()])
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn prob(&self, y: &[i8]) -> f64 {
        self.mass[pattern_index(y)]
    }

    pub fn support_size(&self) -> usize {
        self.mass.iter().filter(|&&p| p > 0.0).count()
    }

    /// `supp(Q) ⊆ P^{-1}(1)`.
    pub fn is_planting_for(&self, predicate: &CspPredicate) -> bool {
        predicate.k() == self.k
            && self
                .mass
                .iter()
                .enumerate()
                .all(|(i, &p)| p == 0.0 || predicate.eval_index(i))
    }

    /// Pattern index drawn by inverse CDF from a uniform `u` in [0, 1).
    fn draw_index(&self, cumulative: &[f64], u: f64) -> usize {
        let pos = cumulative.partition_point(|&c| c <= u);
        if pos < cumulative.len() {
            return pos;
        }
        // u landed above the rounded total; fall back to the last supported pattern.
        self.mass.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }
}

/// A CSP with clauses `P(s_1 x_{i_1}, ..., s_k x_{i_k}) = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct CspInstance {
    n: usize,
    predicate: CspPredicate,
    vars: Vec<u32>,
    negations: Vec<i8>,
}

impl CspInstance {
    pub fn new(n: usize, predicate: CspPredicate) -> Self {
        CspInstance {
            n,
            predicate,
            vars: Vec::new(),
            negations: Vec::new(),
        }
    }

    pub fn push(&mut self, scope: &[u32], negations: &[i8]) {
        let k = self.predicate.k();
        assert_eq!(scope.len(), k, "scope arity differs from predicate arity");
        assert_eq!(negations.len(), k, "negation count differs from predicate arity");
        assert!(scope.iter().all(|&v| (v as usize) < self.n), "scope index out of range");
        assert!(negations.iter().all(|&s| s == 1 || s == -1), "negations must be +1 or -1");
        self.vars.extend_from_slice(scope);
        self.negations.extend_from_slice(negations);
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.predicate.k()
    }

    pub fn m(&self) -> usize {
        self.vars.len() / self.k()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn predicate(&self) -> &CspPredicate {
        &self.predicate
    }

    pub fn scope(&self, c: usize) -> &[u32] {
        let k = self.k();
        &self.vars[c * k..(c + 1) * k]
    }

    pub fn negations(&self, c: usize) -> &[i8] {
        let k = self.k();
        &self.negations[c * k..(c + 1) * k]
    }

    pub fn clauses(&self) -> impl ExactSizeIterator<Item = (&[u32], &[i8])> + '_ {
        (0..self.m()).map(move |c| (self.scope(c), self.negations(c)))
    }

    pub fn clause_satisfied(&self, c: usize, x: &Assignment) -> bool {
        let idx = self
            .scope(c)
            .iter()
            .zip(self.negations(c))
            .enumerate()
            .fold(0usize, |acc, (j, (&v, &s))| {
                if s * x[v as usize] == -1 {
                    acc | 1 << j
                } else {
                    acc
                }
            });
        self.predicate.eval_index(idx)
    }

    pub fn satisfied(&self, x: &Assignment) -> usize {
        assert_eq!(x.len(), self.n, "assignment length differs from n");
        (0..self.m()).filter(|&c| self.clause_satisfied(c, x)).count()
    }
}

fn draw_scope(rng: &mut impl Rng, n: usize, k: usize, out: &mut Vec<u32>) {
    for _ in 0..k {
        out.push(rng.random_range(0..n as u32));
    }
}

/// Draws from `LPN_k(x*, m, eps)`: `m` uniform tuples from [n]^k with
/// replacement, each right-hand side correct with probability 1/2 + eps.
///
/// Scopes and noise coins come from separate streams, so the hypergraph for
/// a given seed does not depend on `eps`.
pub fn sample_planted_xor(
    x_star: &Assignment,
    m: usize,
    k: usize,
    eps: f64,
    seed: u64,
) -> Result<XorInstance> {
    let n = x_star.len();
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::param(format!("eps = {eps} outside (0, 1/2]")));
    }
    if m == 0 {
        return Err(Error::param("m must be at least 1"));
    }
    if k == 0 || n < k {
        return Err(Error::param(format!("need n >= k >= 1, got n = {n}, k = {k}")));
    }
    let mut scopes = rng::stream(seed, streams::SCOPES);
    let mut noise = rng::stream(seed, streams::NOISE);
    let mut inst = XorInstance::with_capacity(n, k, m);
    for c in 0..m {
        draw_scope(&mut scopes, n, k, &mut inst.vars);
        let planted = x_star.parity(inst.scope(c));
        let correct = noise.random::<f64>() < 0.5 + eps;
        inst.rhs.push(if correct { planted } else { -planted });
    }
    Ok(inst)
}

/// Draws from `Psi(x*, m, Q)`: uniform tuples with replacement and literal
/// negations `y ⊙ x*_C` with `y ~ Q`, independently per clause occurrence.
pub fn sample_planted_csp(
    x_star: &Assignment,
    m: usize,
    predicate: &CspPredicate,
    q: &PlantingDistribution,
    seed: u64,
) -> Result<CspInstance> {
    let n = x_star.len();
    let k = q.k();
    if predicate.k() != k {
        return Err(Error::param("predicate and planting distribution arities differ"));
    }
    if !q.is_planting_for(predicate) {
        return Err(Error::param("planting distribution puts mass on unsatisfying patterns"));
    }
    if m == 0 {
        return Err(Error::param("m must be at least 1"));
    }
    if n < k {
        return Err(Error::param(format!("need n >= k, got n = {n}, k = {k}")));
    }
    let cumulative: Vec<f64> = q
        .mass
        .iter()
        .scan(0.0, |acc, &p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let mut scopes = rng::stream(seed, streams::SCOPES);
    let mut negs = rng::stream(seed, streams::NEGATIONS);
    let mut inst = CspInstance::new(n, predicate.clone());
    inst.vars.reserve(m * k);
    inst.negations.reserve(m * k);
    for c in 0..m {
        draw_scope(&mut scopes, n, k, &mut inst.vars);
        let y = q.draw_index(&cumulative, negs.random::<f64>());
        for j in 0..k {
            let yj: i8 = if y >> j & 1 == 1 { -1 } else { 1 };
            let v = inst.vars[c * k + j] as usize;
            inst.negations.push(yj * x_star[v]);
        }
    }
    Ok(inst)
}
