//! Fourier analysis of planting distributions over the uniform measure on
//! {-1,+1}^k.
//!
//! `Q^(S) = 2^-k * sum_y Q(y) * prod_{j in S} y_j`. With patterns indexed by
//! [`pattern_index`](crate::instance::pattern_index), the character of `S` at
//! pattern `idx` is `(-1)^popcount(S & idx)`, so the whole table is one
//! Walsh-Hadamard transform of the mass vector.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::instance::PlantingDistribution;

/// A subset of the clause positions `[k]`, as a bitmask over 0-based positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Subset(pub u32);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    /// Subset of 1-based positions.
    pub fn from_positions(positions: &[usize]) -> Subset {
        Subset(positions.iter().fold(0, |acc, &p| {
            assert!(p >= 1, "positions are 1-based");
            acc | 1 << (p - 1)
        }))
    }

    /// The full set `[k]`.
    pub fn full(k: usize) -> Subset {
        Subset(((1u64 << k) - 1) as u32)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, j: usize) -> bool {
        self.0 >> j & 1 == 1
    }

    /// 0-based positions in increasing order.
    pub fn positions(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |&j| self.contains(j))
    }

    /// `prod_{j in S} y_j`.
    pub fn character(self, y: &[i8]) -> i8 {
        self.positions().fold(1, |acc, j| acc * y[j])
    }

    /// All subsets of `[k]` with exactly `size` elements, in lexicographic
    /// order of their sorted position lists.
    pub fn of_size(k: usize, size: usize) -> Vec<Subset> {
        let mut out = Vec::new();
        if size > k {
            return out;
        }
        let mut comb: Vec<usize> = (0..size).collect();
        loop {
            out.push(Subset(comb.iter().fold(0, |acc, &p| acc | 1 << p)));
            // advance to the next combination in lexicographic order
            let mut i = size;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if comb[i] < k - size + i {
                    break;
                }
                if i == 0 {
                    return out;
                }
            }
            comb[i] += 1;
            for t in i + 1..size {
                comb[t] = comb[t - 1] + 1;
            }
        }
    }

    /// Nonempty subsets of `[k]` ordered by size, then lexicographically.
    pub fn nonempty_by_size(k: usize) -> Vec<Subset> {
        (1..=k).flat_map(|r| Subset::of_size(k, r)).collect()
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, j) in self.positions().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", j + 1)?;
        }
        write!(f, "}}")
    }
}

/// `Q^(S)` by direct summation over all 2^k patterns.
pub fn fourier_coefficient(q: &PlantingDistribution, s: Subset) -> f64 {
    let k = q.k();
    let sum: f64 = q
        .mass()
        .iter()
        .enumerate()
        .map(|(idx, &p)| {
            if (s.0 as usize & idx).count_ones().is_multiple_of(2) {
                p
            } else {
                -p
            }
        })
        .sum();
    sum / (1u64 << k) as f64
}

/// All coefficients, indexed by subset bitmask.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierTable {
    k: usize,
    coeffs: Vec<f64>,
}

impl FourierTable {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, s: Subset) -> f64 {
        self.coeffs[s.0 as usize]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `sum_S Q^(S)^2`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// Largest `|Q^(S)|` over nonempty `S`.
    pub fn max_nonempty(&self) -> f64 {
        self.coeffs[1..].iter().fold(0.0, |acc, c| acc.max(c.abs()))
    }
}

/// In-place unnormalized Walsh-Hadamard transform; `data.len()` must be a
/// power of two.
pub fn walsh_hadamard(data: &mut [f64]) {
    let len = data.len();
    assert!(len.is_power_of_two(), "length must be a power of two");
    let mut h = 1;
    while h < len {
        for block in data.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

pub fn fourier_table(q: &PlantingDistribution) -> FourierTable {
    let k = q.k();
    let mut coeffs = q.mass().to_vec();
    walsh_hadamard(&mut coeffs);
    let scale = 1.0 / (1u64 << k) as f64;
    coeffs.iter_mut().for_each(|c| *c *= scale);
    FourierTable { k, coeffs }
}

/// Absolute slack applied toward `>=` when comparing against `4^-k`.
pub const THRESHOLD_GUARD: f64 = 1e-14;

pub fn complexity_threshold(k: usize) -> f64 {
    0.25f64.powi(k as i32)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionComplexity {
    pub r: usize,
    /// Smallest-size, then lexicographically smallest, subset clearing the
    /// threshold; `None` when no nonempty subset does.
    pub witness: Option<Subset>,
}

pub fn distribution_complexity(q: &PlantingDistribution) -> DistributionComplexity {
    let table = fourier_table(q);
    distribution_complexity_from_table(&table)
}

pub fn distribution_complexity_from_table(table: &FourierTable) -> DistributionComplexity {
    let threshold = complexity_threshold(table.k) - THRESHOLD_GUARD;
    let witness = Subset::nonempty_by_size(table.k)
        .into_iter()
        .find(|&s| table.get(s).abs() >= threshold);
    match witness {
        Some(s) => DistributionComplexity {
            r: s.len(),
            witness: Some(s),
        },
        None => DistributionComplexity { r: 1, witness: None },
    }
}

/// True iff some nonempty coefficient strictly exceeds `4^-k`, which holds
/// for every distribution without full support.
pub fn verify_nontrivial(q: &PlantingDistribution) -> bool {
    fourier_table(q).max_nonempty() > complexity_threshold(q.k())
}
