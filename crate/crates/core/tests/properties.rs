mod common;

use common::{bare_operation, interaction, random_operation, random_schema};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use restpilot::input::{probability_match, random_value, InputGenerator};
use restpilot::intensifier::{applicable_mutations, apply_mutation, MutationKind};
use restpilot::interaction::Interaction;
use restpilot::metrics::{auc, fault_signature, operation_coverage, FaultRegistry};
use restpilot::oas::{validate_against_schema, ApiModel, HttpMethod};

fn api_of(n: usize, rng: &mut ChaCha8Rng) -> ApiModel {
    ApiModel {
        title: "t".into(),
        base_url: "http://localhost".into(),
        operations: (0..n)
            .map(|k| bare_operation(k, HttpMethod::ALL[rng.gen_range(0..HttpMethod::ALL.len())]))
            .collect(),
    }
}

fn random_log(api: &ApiModel, len: usize, rng: &mut ChaCha8Rng) -> Vec<Interaction> {
    (0..len)
        .map(|k| {
            let op = &api.operations[rng.gen_range(0..api.len())];
            let method = if rng.gen_bool(0.8) { op.method } else { HttpMethod::ALL[rng.gen_range(0..HttpMethod::ALL.len())] };
            let status = [200, 201, 204, 400, 404, 500, 503][rng.gen_range(0..7)];
            interaction(op, method, status, "boom", k as u64 + 1)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn random_values_satisfy_their_schema(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let schema = random_schema(&mut rng, 3);
        for _ in 0..10 {
            let v = random_value(&schema, &mut rng);
            let verdict = validate_against_schema(&v, &schema);
            prop_assert!(verdict.is_valid(), "{v} against {schema:?}: {:?}", verdict.violations);
        }
    }

    #[test]
    fn generated_requests_are_valid_when_every_source_is_random(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let op = random_operation(&mut rng);
        let mut generator = InputGenerator::new(0.1);
        for _ in 0..5 {
            let g = generator.generate_request(&op, &mut rng).unwrap();
            prop_assert!(op.validate_arguments(&g.arguments).is_empty());
            generator.reward_decisions(&g.trace, rng.gen_bool(0.5));
        }
    }

    #[test]
    fn greedy_matching_never_picks_an_unrewarded_option(
        tallies in proptest::collection::vec(0u64..5, 1..8),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let options: Vec<(usize, u64)> = tallies.iter().copied().enumerate().collect();
        let total: u64 = tallies.iter().sum();
        for _ in 0..50 {
            let k = *probability_match(&options, 0.0, &mut rng);
            prop_assert!(k < tallies.len());
            prop_assert!(total == 0 || tallies[k] > 0);
        }
    }

    #[test]
    fn coverage_matches_brute_force(seed in any::<u64>(), n in 1usize..6, len in 0usize..50) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let api = api_of(n, &mut rng);
        let log = random_log(&api, len, &mut rng);
        let got = operation_coverage(&log, &api);
        let expect = (0..n)
            .filter(|&k| {
                log.iter().any(|i| {
                    i.request.operation == k
                        && i.request.method == api.operations[k].method
                        && i.status.is_some_and(|s| (200..300).contains(&s))
                })
            })
            .count();
        prop_assert_eq!(got.covered, expect);
        prop_assert!((got.fraction - expect as f64 / n as f64).abs() < 1e-15);
    }

    #[test]
    fn auc_matches_riemann_sum(ys in proptest::collection::vec(0u32..20, 1..30), horizon in 1u32..40) {
        // integer abscissae 0, 1, ..: a unit-step Riemann sum is exact
        let points: Vec<(f64, f64)> = ys.iter().enumerate().map(|(k, y)| (k as f64, *y as f64)).collect();
        let value_at = |x: f64| points.iter().rev().find(|p| p.0 <= x).map_or(0.0, |p| p.1);
        let riemann: f64 = (0..horizon).map(|k| value_at(k as f64)).sum();
        prop_assert!((auc(&points, horizon as f64) - riemann).abs() < 1e-9);
    }

    #[test]
    fn auc_is_monotone_in_the_curve(ys in proptest::collection::vec(0u32..20, 1..30), bump in 0usize..30) {
        let points: Vec<(f64, f64)> = ys.iter().enumerate().map(|(k, y)| (k as f64, *y as f64)).collect();
        let mut higher = points.clone();
        let k = bump % higher.len();
        higher[k].1 += 1.0;
        let h = points.len() as f64;
        prop_assert!(auc(&higher, h) >= auc(&points, h));
    }

    #[test]
    fn unique_fault_count_ignores_log_order(seed in any::<u64>(), len in 0usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let op = bare_operation(0, HttpMethod::Get);
        let bodies = ["NullPointer at line 12", "timeout id 4411", "db 'alice' gone", "NullPointer at line 99"];
        let mut log: Vec<Interaction> = (0..len)
            .map(|k| interaction(&op, HttpMethod::Get, 500, bodies[rng.gen_range(0..bodies.len())], k as u64 + 1))
            .collect();
        let count = |log: &[Interaction]| {
            let mut reg = FaultRegistry::new();
            log.iter().for_each(|i| { reg.observe(i); });
            reg.len()
        };
        let before = count(&log);
        let expect = {
            let mut sigs: Vec<String> = log.iter().map(|i| fault_signature(&i.response_body)).collect();
            sigs.sort();
            sigs.dedup();
            sigs.len()
        };
        prop_assert_eq!(before, expect);
        for k in (1..log.len()).rev() {
            log.swap(k, rng.gen_range(0..=k));
        }
        prop_assert_eq!(count(&log), before);
    }
}

#[test]
fn mutants_keep_their_validity_promise() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut pairs = 0;
    let mut seen_nominal = 0;
    let mut seen_error = 0;
    while pairs < 1500 {
        let op = random_operation(&mut rng);
        let generator = InputGenerator::new(0.1);
        let base = generator.generate_request(&op, &mut rng).unwrap().arguments;
        assert!(op.validate_arguments(&base).is_empty());
        pairs += 1;
        for mutation in applicable_mutations(&base, &op) {
            let m = apply_mutation(&base, &op, mutation, &mut rng).unwrap();
            let valid = op.validate_arguments(&m.arguments).is_empty();
            match mutation.operator.kind() {
                MutationKind::Nominal => {
                    seen_nominal += 1;
                    assert!(valid && m.method == op.method, "{mutation:?} on {op:?}: {:?}", m.arguments);
                }
                MutationKind::Error => {
                    seen_error += 1;
                    assert!(!valid || m.method != op.method, "{mutation:?} on {op:?}: {:?}", m.arguments);
                }
            }
        }
    }
    assert!(seen_nominal > 1000 && seen_error > 1000);
}
