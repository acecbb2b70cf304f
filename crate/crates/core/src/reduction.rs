//! CSP to XOR reduction: for a nonempty `S ⊆ [k]`, each CSP clause `C` with
//! literal negations `s` yields the parity equation
//! `prod_{j in S} x_{C_j} = ± prod_{j in S} s_j`.

use serde::{Deserialize, Serialize};

use crate::fourier::Subset;
use crate::instance::{CspInstance, Scope, XorInstance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> i8 {
        match self {
            Side::Plus => 1,
            Side::Minus => -1,
        }
    }
}

/// `C|_S`: the entries of `c` at the positions in `s`, in position order.
pub fn restrict(c: &Scope, s: Subset) -> Scope {
    assert!(!s.is_empty(), "restriction to the empty set");
    Scope::new(restrict_vars(c.vars(), s))
}

fn restrict_vars(vars: &[u32], s: Subset) -> Vec<u32> {
    s.positions()
        .map(|j| {
            *vars
                .get(j)
                .unwrap_or_else(|| panic!("position {} outside scope of arity {}", j + 1, vars.len()))
        })
        .collect()
}

/// Builds `psi^(S, side)`: one clause per CSP clause, in order.
pub fn build_xor_side(psi: &CspInstance, s: Subset, side: Side) -> XorInstance {
    assert!(!s.is_empty(), "restriction to the empty set");
    assert!(
        s.positions().all(|j| j < psi.k()),
        "subset {s} not contained in [{}]",
        psi.k()
    );
    let mut out = XorInstance::with_capacity(psi.n(), s.len(), psi.m());
    let mut scope = Vec::with_capacity(s.len());
    for (vars, negs) in psi.clauses() {
        scope.clear();
        let mut rhs = side.sign();
        for j in s.positions() {
            scope.push(vars[j]);
            rhs *= negs[j];
        }
        out.push(&scope, rhs);
    }
    out
}
