mod common;

use gesture_gate::hmm::{self, BaumWelchConfig, HmmModel, Topology};
use gesture_gate::quantize::{Symbol, SymbolSequence};
use proptest::prelude::*;
use rand::Rng;

fn symbols(values: &[usize]) -> Vec<Symbol> {
    values.iter().map(|&k| Symbol::new(k as u8 + 1).unwrap()).collect()
}

#[test]
fn forward_matches_enumeration() {
    let mut rng = common::rng(1);
    for _ in 0..200 {
        let n = rng.random_range(1..=4);
        let m = rng.random_range(1..=5);
        let t = rng.random_range(1..=6);
        let topology = if rng.random_bool(0.5) { Topology::Ergodic } else { Topology::LeftRight };
        let model = common::random_model(&mut rng, n, m, topology);
        let obs: Vec<usize> = (0..t).map(|_| rng.random_range(0..m)).collect();
        let exact = common::enumerate_likelihood(&model, &obs);
        let ll = model.log_likelihood(&symbols(&obs)).unwrap();
        assert!((ll.total.exp() - exact).abs() <= 1e-10 * exact, "{} vs {exact}", ll.total.exp());
        assert!((ll.per_symbol - ll.total / t as f64).abs() < 1e-15);
    }
}

#[test]
fn forward_on_long_sequences_stays_finite() {
    let mut rng = common::rng(2);
    let model = common::random_model(&mut rng, 5, 18, Topology::Ergodic);
    let obs: Vec<usize> = (0..2000).map(|_| rng.random_range(0..18)).collect();
    let ll = model.log_likelihood(&symbols(&obs)).unwrap();
    assert!(ll.total.is_finite() && ll.total < -1000.0);
}

fn training_set(seed: u64, count: usize, len: usize) -> Vec<SymbolSequence> {
    let mut rng = common::rng(seed);
    (0..count)
        .map(|_| {
            let peak = rng.random_range(8..=16);
            let values: Vec<u8> = (0..len)
                .map(|i| {
                    let s = (std::f64::consts::PI * i as f64 / (len - 1) as f64).sin();
                    let jitter: i32 = rng.random_range(-1..=1);
                    (1 + (peak as f64 * s) as i32 + jitter).clamp(1, 18) as u8
                })
                .collect();
            SymbolSequence::from_values(&values)
        })
        .collect()
}

#[test]
fn baum_welch_is_monotone_and_stochastic() {
    for set in 0..3 {
        let data = training_set(set, 12, 25);
        for init in 0..4 {
            let topology = if init % 2 == 0 { Topology::LeftRight } else { Topology::Ergodic };
            let config = BaumWelchConfig {
                n_states: 4,
                topology,
                seed: init,
                ..BaumWelchConfig::default()
            };
            let start = hmm::init_model(4, 18, topology, init);
            let fit = hmm::fit_from(start, &data, &config, |_, m, _| {
                assert!(common::is_row_stochastic(m.transition(), 4, 1e-9));
                assert!(common::is_row_stochastic(m.emission(), 18, 1e-9));
                assert!(common::is_row_stochastic(m.initial(), 4, 1e-9));
            })
            .unwrap();
            for w in fit.log_likelihoods.windows(2) {
                assert!(w[1] >= w[0] - 1e-9, "{} -> {}", w[0], w[1]);
            }
        }
    }
}

#[test]
fn training_respects_topology_and_floor() {
    let data = training_set(9, 10, 20);
    let fit = hmm::fit(&data, &BaumWelchConfig::default()).unwrap();
    let m = &fit.model;
    for i in 0..m.n_states() {
        for j in 0..m.n_states() {
            if Topology::LeftRight.allows(i, j) {
                assert!(m.a(i, j) >= hmm::DEFAULT_FLOOR_EPS * (1.0 - 1e-9));
            } else {
                assert_eq!(m.a(i, j), 0.0);
            }
        }
        for k in 0..m.n_symbols() {
            assert!(m.b(i, k) >= hmm::DEFAULT_FLOOR_EPS * (1.0 - 1e-9));
        }
    }
    assert_eq!(m.initial()[0], 1.0);
}

#[test]
fn unseen_symbol_scores_below_training() {
    let data = training_set(4, 15, 30);
    let seen: std::collections::BTreeSet<u8> =
        data.iter().flat_map(|s| s.symbols().iter().map(|x| x.value())).collect();
    let unseen = (1..=18u8).find(|v| !seen.contains(v)).expect("some symbol unused");
    let model = hmm::baum_welch(&data, 5, Topology::LeftRight, 0).unwrap();
    let worst_training = data
        .iter()
        .map(|s| hmm::forward(&model, s).unwrap().per_symbol)
        .fold(f64::INFINITY, f64::min);
    let probe = SymbolSequence::from_values(&[unseen; 30]);
    let score = hmm::forward(&model, &probe).unwrap().per_symbol;
    assert!(score < worst_training);
    assert!(score <= (2.0 * hmm::DEFAULT_FLOOR_EPS).ln());
}

fn model_strategy() -> impl Strategy<Value = (HmmModel, Vec<usize>)> {
    (1usize..=4, 2usize..=6, 1usize..=8, any::<u64>()).prop_map(|(n, m, t, seed)| {
        let mut rng = common::rng(seed);
        let model = common::random_model(&mut rng, n, m, Topology::Ergodic);
        let obs = (0..t).map(|_| rng.random_range(0..m)).collect();
        (model, obs)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loglik_is_non_positive((model, obs) in model_strategy()) {
        let ll = model.log_likelihood(&symbols(&obs)).unwrap();
        prop_assert!(ll.total <= 1e-12);
    }

    /// Every path pays each occurrence of symbol `v` at most `max_i b_i(v)`.
    #[test]
    fn rare_symbol_caps_likelihood((model, obs) in model_strategy(), v_raw in 0usize..6) {
        let v = v_raw % model.n_symbols();
        let k = obs.iter().filter(|&&o| o == v).count();
        let cap = (0..model.n_states()).map(|i| model.b(i, v)).fold(0.0, f64::max);
        let ll = model.log_likelihood(&symbols(&obs)).unwrap();
        prop_assert!(ll.per_symbol <= k as f64 / obs.len() as f64 * cap.ln() + 1e-9);
    }

    #[test]
    fn floored_mle_meets_constraints(
        counts in prop::collection::vec(0.0f64..50.0, 1..20),
        eps in 1e-10f64..1e-3,
    ) {
        let allowed = vec![true; counts.len()];
        prop_assume!(counts.iter().sum::<f64>() > 0.0);
        prop_assume!(eps * counts.len() as f64 <= 1.0);
        let p = hmm::floored_mle(&counts, &allowed, eps).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!(p.iter().all(|&x| x >= eps * (1.0 - 1e-12)));
        // Unfloored entries keep the count ratios.
        let free: Vec<usize> = (0..p.len()).filter(|&k| p[k] > eps * (1.0 + 1e-9)).collect();
        for w in free.windows(2) {
            let (a, b) = (w[0], w[1]);
            prop_assert!((p[a] * counts[b] - p[b] * counts[a]).abs() <= 1e-9);
        }
    }
}
