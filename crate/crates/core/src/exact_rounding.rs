//! Exact rounding by per-variable majority over co-hyperedges.
//!
//! For `i` and a distinct-entry clause `C ∋ i`, the co-hyperedge `T = C \ {i}`
//! casts the vote `b_C · x̃_T`. If `x̃` is close to the planted `x*` and the
//! clauses are fresh, most votes equal `x*_i`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::instance::{clean, Assignment, XorInstance};

/// For each variable, the clauses of `H′ = clean(H)` that contain it.
#[derive(Clone, Debug)]
pub struct CoHyperedgeIndex {
    cleaned: XorInstance,
    offsets: Vec<usize>,
    /// (clause index into `H′`, position of the variable in the clause)
    entries: Vec<(u32, u8)>,
}

pub fn build_cohyperedges(inst: &XorInstance) -> CoHyperedgeIndex {
    assert!(inst.k() >= 2, "co-hyperedges need k >= 2");
    assert!(inst.k() <= u8::MAX as usize + 1);
    let (cleaned, _) = clean(inst);
    let n = cleaned.n();
    let mut offsets = vec![0usize; n + 1];
    for (scope, _) in cleaned.clauses() {
        for &v in scope {
            offsets[v as usize + 1] += 1;
        }
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut entries = vec![(0u32, 0u8); offsets[n]];
    for (c, (scope, _)) in cleaned.clauses().enumerate() {
        for (pos, &v) in scope.iter().enumerate() {
            let slot = &mut fill[v as usize];
            entries[*slot] = (c as u32, pos as u8);
            *slot += 1;
        }
    }
    CoHyperedgeIndex {
        cleaned,
        offsets,
        entries,
    }
}

impl CoHyperedgeIndex {
    pub fn n(&self) -> usize {
        self.cleaned.n()
    }

    /// The distinct-entry clauses the index was built over.
    pub fn cleaned(&self) -> &XorInstance {
        &self.cleaned
    }

    pub fn list_len(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// `(T, clause index)` for every co-hyperedge of `i`, in instance order.
    pub fn list(&self, i: usize) -> impl Iterator<Item = (Vec<u32>, usize)> + '_ {
        self.entries[self.offsets[i]..self.offsets[i + 1]]
            .iter()
            .map(move |&(c, pos)| {
                let mut t = self.cleaned.scope(c as usize).to_vec();
                t.remove(pos as usize);
                (t, c as usize)
            })
    }

    pub fn majority_round(&self, x_tilde: &Assignment) -> MajorityOutcome {
        let n = self.n();
        assert_eq!(x_tilde.len(), n, "assignment length differs from n");
        // b_C · x̃_C per clause; the vote of (C, i) is that times x̃_i
        let parity: Vec<i8> = self
            .cleaned
            .clauses()
            .map(|(scope, b)| b * x_tilde.parity(scope))
            .collect();
        let tallies: Vec<(usize, usize)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let list = &self.entries[self.offsets[i]..self.offsets[i + 1]];
                let plus = list
                    .iter()
                    .filter(|&&(c, _)| parity[c as usize] * x_tilde[i] == 1)
                    .count();
                (plus, list.len())
            })
            .collect();
        let mut stats = MajorityStats {
            empty_lists: 0,
            ties: 0,
            min_margin: f64::INFINITY,
            mean_margin: 0.0,
        };
        let mut out = Vec::with_capacity(n);
        let mut voted = 0usize;
        for &(plus, total) in &tallies {
            out.push(if 2 * plus >= total { 1 } else { -1 });
            if total == 0 {
                stats.empty_lists += 1;
                continue;
            }
            if 2 * plus == total {
                stats.ties += 1;
            }
            let margin = (2 * plus).abs_diff(total) as f64 / total as f64;
            stats.min_margin = stats.min_margin.min(margin);
            stats.mean_margin += margin;
            voted += 1;
        }
        if voted == 0 {
            stats.min_margin = 0.0;
        } else {
            stats.mean_margin /= voted as f64;
        }
        MajorityOutcome {
            assignment: Assignment::new(out).expect("votes are signs"),
            stats,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MajorityStats {
    /// Variables without co-hyperedges; they receive +1.
    pub empty_lists: usize,
    /// Variables whose vote split exactly in half; they receive +1.
    pub ties: usize,
    /// Smallest and mean `|plus - minus| / |S_i|` over nonempty lists.
    pub min_margin: f64,
    pub mean_margin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MajorityOutcome {
    pub assignment: Assignment,
    pub stats: MajorityStats,
}

/// Builds the index over `inst` and rounds `x_tilde`.
pub fn majority_round(inst: &XorInstance, x_tilde: &Assignment) -> MajorityOutcome {
    build_cohyperedges(inst).majority_round(x_tilde)
}
