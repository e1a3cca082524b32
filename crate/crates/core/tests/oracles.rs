mod common;

use common::{brute_force_rho, power_iteration_pi, raw_rho, rel_err};
use infoflow_core::certify::{self, unsolvability_condition, unsolvability_in_expectation};
use infoflow_core::experiment::{self, exhaustive_stats, monte_carlo_reconstruction};
use infoflow_core::generators::{
    random_distribution, random_primitive_channel, random_reversible_channel, random_tree,
};
use infoflow_core::measures::{dependence_report, pi_norm};
use infoflow_core::pruning::{self, forward_sample, prune, prune_nodes, Prior};
use infoflow_core::tree::enumerate_patterns;
use infoflow_core::{Channel, ContractionMode, Error, TreeSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn pruning_matches_brute_force_on_random_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let k = rng.gen_range(2..=3);
        let pi = random_distribution(k, &mut rng);
        let tree = random_tree(&pi, 3, 3, &mut rng).unwrap();
        for pattern in enumerate_patterns(&tree).unwrap().take(200) {
            let oracle = brute_force_rho(&tree, &pattern);
            let state = prune(&tree, &pattern).unwrap();
            for (a, b) in state.rho.iter().zip(&oracle) {
                assert!(rel_err(*a, *b) < 1e-10, "{a} vs {b}");
            }
        }
    }
}

#[test]
fn stationary_distribution_matches_power_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let n = rng.gen_range(2..=5);
        let ch = random_primitive_channel(n, &mut rng).unwrap();
        let oracle = power_iteration_pi(&ch.rows());
        for (a, b) in ch.pi().iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

fn random_normalized(pi: &[f64], rng: &mut impl Rng) -> Vec<f64> {
    let raw: Vec<f64> = pi.iter().map(|_| rng.gen_range(0.0..1.0)).collect();
    let z: f64 = raw.iter().zip(pi).map(|(a, p)| a * p).sum();
    raw.iter().map(|a| a / z).collect()
}

fn contraction_ratio(ch: &Channel, x: &[f64]) -> Option<f64> {
    let pi = ch.pi();
    let m: Vec<f64> = x.iter().map(|v| v - 1.0).collect();
    let px: Vec<f64> = ch
        .apply_to_normalized(x)
        .unwrap()
        .iter()
        .map(|v| v - 1.0)
        .collect();
    let den = pi_norm(&m, pi).unwrap();
    (den > 1e-9).then(|| pi_norm(&px, pi).unwrap() / den)
}

#[test]
fn tight_constant_is_attained_but_never_exceeded() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let n = rng.gen_range(2..=4);
        let ch = random_primitive_channel(n, &mut rng).unwrap();
        let c = ch
            .contraction_constant(ContractionMode::TightPiOperator)
            .unwrap();
        let general = ch
            .contraction_constant(ContractionMode::GeneralSingular)
            .unwrap();
        assert!(c <= general + 1e-12);
        let mut best = 0.0_f64;
        for _ in 0..50_000 {
            let x = random_normalized(ch.pi(), &mut rng);
            if let Some(r) = contraction_ratio(&ch, &x) {
                assert!(r <= c + 1e-10, "ratio {r} above {c}");
                best = best.max(r);
            }
        }
        // random search should get reasonably close to the operator norm
        assert!(best > 0.5 * c, "best {best} vs {c}");
    }
}

#[test]
fn reversible_theta1_equals_tight() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let n = rng.gen_range(2..=5);
        let pi = random_distribution(n, &mut rng);
        let ch = random_reversible_channel(&pi, &mut rng).unwrap();
        let t = ch
            .contraction_constant(ContractionMode::ReversibleEig)
            .unwrap();
        let c = ch
            .contraction_constant(ContractionMode::TightPiOperator)
            .unwrap();
        assert!((t - c).abs() < 1e-9, "{t} vs {c}");
    }
}

#[test]
fn forward_sampling_frequency_matches_pattern_probability() {
    let tree = TreeSpec::complete_dary(2, 1, Channel::bsc(0.25).unwrap()).unwrap();
    let mu = Prior::uniform(2);
    let n = 40_000;
    let hits = (0..n)
        .filter(|&s| forward_sample(&tree, &mu, s).unwrap().1.states() == [0, 0])
        .count();
    let freq = hits as f64 / n as f64;
    let sigma = (0.3125 * 0.6875 / n as f64).sqrt();
    assert!((freq - 0.3125).abs() < 4.0 * sigma, "{freq}");
}

#[test]
fn expected_norm_two_ways() {
    for p in [0.25, 0.45] {
        let ch = Channel::bsc(p).unwrap();
        let tree = TreeSpec::complete_dary(2, 3, ch).unwrap();
        let pi = Prior::stationary(&tree);
        let row = exhaustive_stats(&tree, &pi, 1).unwrap();
        let mut by_probability = 0.0;
        for pattern in enumerate_patterns(&tree).unwrap() {
            let s = prune(&tree, &pattern).unwrap();
            by_probability +=
                pruning::pattern_probability(&s, &pi).unwrap() * s.memory_norm(tree.pi());
        }
        assert!(rel_err(row.expected_memory_norm_pi, by_probability) < 1e-10);
        assert!(rel_err(row.expected_memory_norm_pi, row.expected_memory_norm_mu) < 1e-10);
    }
}

#[test]
fn dependence_identity_against_raw_recursion() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..10 {
        let pi = random_distribution(3, &mut rng);
        let tree = random_tree(&pi, 2, 3, &mut rng).unwrap();
        for pattern in enumerate_patterns(&tree).unwrap().take(300) {
            let states = prune_nodes(&tree, &pattern).unwrap();
            let root = tree.root();
            let children: Vec<_> = tree
                .children(root)
                .iter()
                .map(|e| (&states[e.child], tree.channel(e)))
                .collect();
            let report = dependence_report(&children, tree.pi(), Some(&states[root])).unwrap();
            let raw = raw_rho(&tree, &pattern, root);
            let pr_pi: f64 = raw.iter().zip(tree.pi()).map(|(a, b)| a * b).sum();
            assert!(rel_err(report.d_factor * report.pr_independent, pr_pi) < 1e-10);
        }
    }
}

#[test]
fn condition_rhs_is_monotone_in_min_pi() {
    let mut prev = 0.0;
    for k in 1..=50 {
        let m = k as f64 / 100.0;
        let rhs = unsolvability_condition(0.01, 2, m, None)
            .unwrap()
            .threshold_rhs;
        assert!(rhs >= prev - 1e-15);
        prev = rhs;
    }
}

#[test]
fn patternwise_implies_expectation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..2000 {
        let c = rng.gen_range(0.0..0.5);
        let d = rng.gen_range(1..6);
        let m = rng.gen_range(0.01..0.5);
        let pw = unsolvability_condition(c, d, m, None).unwrap();
        let ex = unsolvability_in_expectation(c, d, m, None).unwrap();
        if pw.satisfied {
            assert!(ex.satisfied, "c={c} d={d} min_pi={m}");
        }
    }
}

#[test]
fn patternwise_certificate_bounds_hold_on_trees() {
    // every internal node of a BSC(0.45) tree satisfies the root/children bound
    let ch = Channel::bsc(0.45).unwrap();
    let tree = TreeSpec::complete_dary(2, 3, ch.clone()).unwrap();
    let c = ch
        .contraction_constant(ContractionMode::ReversibleEig)
        .unwrap();
    for pattern in enumerate_patterns(&tree).unwrap() {
        let states = prune_nodes(&tree, &pattern).unwrap();
        for v in 0..tree.node_count() {
            let edges = tree.children(v);
            if edges.is_empty() {
                continue;
            }
            let children: Vec<_> = edges
                .iter()
                .map(|e| (&states[e.child], tree.channel(e)))
                .collect();
            let rep = dependence_report(&children, tree.pi(), None).unwrap();
            let norms: Vec<f64> = edges
                .iter()
                .map(|e| states[e.child].memory_norm(tree.pi()))
                .collect();
            let cert = certify::root_children_check(
                &vec![c; edges.len()],
                tree.min_pi(),
                0.5,
                &norms,
                states[v].memory_norm(tree.pi()),
                rep.d_factor,
            )
            .unwrap();
            assert!(cert.satisfied);
            assert_eq!(cert.verdict, infoflow_core::Verdict::Certified);
        }
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let tree = TreeSpec::complete_dary(2, 4, Channel::bsc(0.3).unwrap()).unwrap();
    let mu = Prior::uniform(2);
    let serial = exhaustive_stats(&tree, &mu, 1).unwrap();
    let parallel = exhaustive_stats(&tree, &mu, 8).unwrap();
    assert_eq!(serial, parallel);
    let a = monte_carlo_reconstruction(&tree, &mu, 5000, 17, 1).unwrap();
    let b = monte_carlo_reconstruction(&tree, &mu, 5000, 17, 8).unwrap();
    assert_eq!(a, b);
    let e1 = experiment::equivalence_check(&tree, &mu, 1).unwrap();
    let e8 = experiment::equivalence_check(&tree, &mu, 8).unwrap();
    assert_eq!(e1, e8);
}

#[test]
fn enumeration_cap_is_reported() {
    let tree = TreeSpec::complete_dary(2, 5, Channel::bsc(0.3).unwrap()).unwrap();
    match exhaustive_stats(&tree, &Prior::uniform(2), 1) {
        Err(Error::EnumerationTooLarge { .. }) => {}
        other => panic!("expected EnumerationTooLarge, got {other:?}"),
    }
}
