use rand::seq::SliceRandom;

use rpcsp::rng::{derive_seed, stream};
use rpcsp::*;

fn shuffled_second_half(inst: &XorInstance, h1: usize, seed: u64) -> XorInstance {
    let mut tail: Vec<(Vec<u32>, i8)> = inst.clauses().skip(h1).map(|(s, b)| (s.to_vec(), b)).collect();
    tail.shuffle(&mut stream(seed, 60));
    let mut out = inst.slice(0..h1);
    for (s, b) in tail {
        out.push(&s, b);
    }
    out
}

#[test]
fn stage_one_ignores_second_half() {
    for (k, backend) in [
        (2, BackendChoice::sdp_basic()),
        (3, BackendChoice::brute()),
        (4, BackendChoice::kikuchi_spectral()),
        (3, BackendChoice::sdp_basic()),
    ] {
        let n = 14;
        let x = Assignment::random(n, k as u64);
        let inst = sample_planted_xor(&x, 400, k, 0.3, 3).unwrap();
        let config = SolverConfig::new(backend);
        let a = solve_xor(&inst, &config, 9).unwrap();
        let b = solve_xor(&shuffled_second_half(&inst, a.stats.h1, 4), &config, 9).unwrap();
        assert_eq!(a.stage1, b.stage1, "k = {k}");
        assert_eq!(a.stats.backend_objective, b.stats.backend_objective);
    }
}

#[test]
fn noiseless_instances_are_solved() {
    let trials = 40;
    let mut solved = 0;
    for t in 0..trials {
        let k = 2 + t as usize % 3;
        let n = 16;
        let x = Assignment::random(n, derive_seed(&[t, 0]));
        let inst = sample_planted_xor(&x, 40 * n, k, 0.5, t).unwrap();
        let report = solve_xor(&inst, &SolverConfig::new(BackendChoice::brute()), t).unwrap();
        if report.stats.output_value == Some(1.0) {
            solved += 1;
        }
    }
    assert!(solved as f64 >= 0.95 * trials as f64, "{solved}/{trials}");
}

#[test]
fn csp_candidates_come_in_sign_pairs() {
    let parity = CspPredicate::xor(3).unwrap();
    let q = PlantingDistribution::uniform_satisfying(&parity).unwrap();
    for seed in 0..4u64 {
        let x = Assignment::random(12, seed);
        let psi = sample_planted_csp(&x, 250, &parity, &q, seed).unwrap();
        let report = solve_csp(&psi, &SolverConfig::new(BackendChoice::brute()), seed).unwrap();
        assert!(report.candidates.len() <= 1 << 5);
        assert_eq!(report.candidates.len() % 2, 0);
        for pair in report.candidates.chunks(2) {
            assert_eq!(pair[1], pair[0].negated());
        }
        let best = report.candidates.iter().map(|c| value(&psi, c)).fold(0.0, f64::max);
        assert!(report.stats.output_value.unwrap() >= best);
        // singletons and pairs carry no signal here, so the search reaches S = [3]
        assert_eq!(report.stats.output_value, Some(1.0));
        assert!(report.stats.sub_solves.iter().any(|s| s.subset == "{1,2,3}"));
    }
}

#[test]
fn known_planting_takes_one_reduction() {
    let sat = CspPredicate::k_sat(3).unwrap();
    let q = PlantingDistribution::uniform_satisfying(&sat).unwrap();
    let n = 40;
    let x = Assignment::random(n, 1);
    let psi = sample_planted_csp(&x, 20_000, &sat, &q, 1).unwrap();
    let report = solve_csp_known(&psi, &q, &SolverConfig::new(BackendChoice::sdp_basic()), 1).unwrap();
    assert_eq!(report.stats.sub_solves.len(), 1);
    assert_eq!(report.stats.sub_solves[0].subset, "{1}");
    assert_eq!(report.stats.sub_solves[0].side, Side::Plus);
    assert_eq!(report.output, x);
}

#[test]
fn unsatisfied_search_returns_best_candidate() {
    // too few clauses to pin x* down; the output is still the best candidate
    let sat = CspPredicate::k_sat(3).unwrap();
    let q = PlantingDistribution::uniform_satisfying(&sat).unwrap();
    let x = Assignment::random(30, 2);
    let psi = sample_planted_csp(&x, 60, &sat, &q, 2).unwrap();
    let report = solve_csp(&psi, &SolverConfig::new(BackendChoice::brute()), 2).unwrap();
    let best = report.candidates.iter().map(|c| value(&psi, c)).fold(0.0, f64::max);
    assert_eq!(report.stats.output_value, Some(best));
    assert_eq!(report.stats.no_perfect_candidate, best < 1.0);
}

#[test]
fn solve_is_deterministic() {
    let x = Assignment::random(20, 3);
    let inst = sample_planted_xor(&x, 2000, 4, 0.4, 3).unwrap();
    let config = SolverConfig::new(BackendChoice::kikuchi_spectral());
    assert_eq!(solve_xor(&inst, &config, 5).unwrap(), solve_xor(&inst, &config, 5).unwrap());
}
