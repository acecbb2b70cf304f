use proptest::prelude::*;

use rpcsp::instance::{evaluate_xor_clause, pattern};
use rpcsp::io::{parse_assignment, parse_csp, parse_plant, parse_xor, write_assignment, write_csp, write_plant, write_xor};
use rpcsp::rng::derive_seed;
use rpcsp::*;

fn planting(k: usize, weights: &[u32], predicate: &CspPredicate) -> Option<PlantingDistribution> {
    let mut mass: Vec<f64> = (0..1usize << k)
        .map(|i| if predicate.eval_index(i) { weights[i % weights.len()] as f64 } else { 0.0 })
        .collect();
    let total: f64 = mass.iter().sum();
    if total == 0.0 {
        return None;
    }
    mass.iter_mut().for_each(|p| *p /= total);
    PlantingDistribution::new(k, mass).ok()
}

#[test]
fn same_seed_same_instance() {
    let x = Assignment::random(40, 1);
    let a = sample_planted_xor(&x, 300, 3, 0.2, 7).unwrap();
    let b = sample_planted_xor(&x, 300, 3, 0.2, 7).unwrap();
    assert_eq!(write_xor(&a), write_xor(&b));
    let c = sample_planted_xor(&x, 300, 3, 0.2, 8).unwrap();
    assert_ne!(write_xor(&a), write_xor(&c));

    let p = CspPredicate::k_sat(3).unwrap();
    let q = PlantingDistribution::uniform_satisfying(&p).unwrap();
    let a = sample_planted_csp(&x, 300, &p, &q, 7).unwrap();
    let b = sample_planted_csp(&x, 300, &p, &q, 7).unwrap();
    assert_eq!(write_csp(&a), write_csp(&b));
}

#[test]
fn hypergraph_does_not_depend_on_eps() {
    let x = Assignment::random(30, 2);
    let a = sample_planted_xor(&x, 200, 4, 0.1, 5).unwrap();
    let b = sample_planted_xor(&x, 200, 4, 0.4, 5).unwrap();
    for c in 0..200 {
        assert_eq!(a.scope(c), b.scope(c));
    }
}

#[test]
fn corruption_rate_concentrates() {
    let (n, m, draws, eps) = (50, 400, 200, 0.15);
    let mut corrupted = 0usize;
    for d in 0..draws {
        let x = Assignment::random(n, derive_seed(&[d]));
        let inst = sample_planted_xor(&x, m, 3, eps, d).unwrap();
        corrupted += m - inst.satisfied(&x);
    }
    let rate = corrupted as f64 / (m * draws as usize) as f64;
    let band = 4.0 * (0.25 / (m as f64 * draws as f64)).sqrt();
    assert!((rate - (0.5 - eps)).abs() <= band, "rate {rate}");
}

#[test]
fn clean_drops_few_clauses() {
    let (n, k) = (100, 3);
    let bound = 2.0 * (k * k) as f64 / n as f64;
    let failures = (0..200u64)
        .filter(|&s| {
            let x = Assignment::random(n, s);
            let inst = sample_planted_xor(&x, 2 * n, k, 0.5, s).unwrap();
            clean(&inst).1 > bound
        })
        .count();
    assert!(failures <= 2, "{failures} of 200 over the bound");
}

#[test]
fn three_sat_hex_roundtrip() {
    let p = CspPredicate::k_sat(3).unwrap();
    // only pattern index 7 (all -1) is rejected
    assert_eq!(p.to_hex(), "7f");
    assert_eq!(CspPredicate::from_hex(3, "7f").unwrap(), p);
    assert!(!p.eval(&[-1, -1, -1]));
}

proptest! {
    #[test]
    fn planted_assignment_satisfies_every_clause(
        k in 1usize..5,
        n in 5usize..30,
        m in 1usize..200,
        weights in prop::collection::vec(0u32..4, 1..16),
        table_bits in any::<u32>(),
        seed in any::<u64>(),
    ) {
        let table: Vec<bool> = (0..1usize << k).map(|i| table_bits >> i & 1 == 1).collect();
        prop_assume!(table.iter().any(|&t| t));
        let predicate = CspPredicate::new(k, table).unwrap();
        let Some(q) = planting(k, &weights, &predicate) else { return Ok(()) };
        let x = Assignment::random(n, seed);
        let psi = sample_planted_csp(&x, m, &predicate, &q, seed).unwrap();
        prop_assert_eq!(value(&psi, &x), 1.0);
    }

    #[test]
    fn squared_entries_cancel(vars in prop::collection::vec(0u32..10, 1..6), extra in 0usize..6, seed in any::<u64>()) {
        let x = Assignment::random(10, seed);
        let base = Scope::new(vars.clone());
        let mut padded = vars.clone();
        let dup = padded[extra % padded.len()];
        padded.push(dup);
        padded.push(dup);
        prop_assert_eq!(evaluate_xor_clause(&x, &base), evaluate_xor_clause(&x, &Scope::new(padded)));
    }

    #[test]
    fn xor_text_roundtrip(n in 3usize..20, m in 1usize..50, k in 1usize..4, eps in 0.01f64..0.5, seed in any::<u64>()) {
        prop_assume!(n >= k);
        let x = Assignment::random(n, seed);
        let inst = sample_planted_xor(&x, m, k, eps, seed).unwrap();
        let text = write_xor(&inst);
        prop_assert_eq!(write_xor(&parse_xor(&text).unwrap()), text);
        let a = write_assignment(&x);
        prop_assert_eq!(parse_assignment(&a).unwrap(), x.clone());

        let p = CspPredicate::k_sat(k).unwrap();
        let q = PlantingDistribution::uniform_satisfying(&p).unwrap();
        let psi = sample_planted_csp(&x, m, &p, &q, seed).unwrap();
        let text = write_csp(&psi);
        prop_assert_eq!(write_csp(&parse_csp(&text).unwrap()), text);
        prop_assert_eq!(parse_plant(&write_plant(&q)).unwrap(), q);
    }

    #[test]
    fn pattern_bits_match_signs(k in 1usize..8, index in 0usize..256) {
        let index = index % (1 << k);
        let y = pattern(k, index);
        for (j, &s) in y.iter().enumerate() {
            prop_assert_eq!(s == -1, index >> j & 1 == 1);
        }
    }
}
