mod common;

use gesture_gate::dtw::{self, DtwNormalization, VectorSeries};
use gesture_gate::par::Execution;
use proptest::prelude::*;

fn series_strategy(max_len: usize) -> impl Strategy<Value = VectorSeries> {
    (1..=max_len).prop_flat_map(|len| {
        prop::collection::vec(-5.0f64..5.0, len * 3).prop_map(|v| VectorSeries::new(3, v).unwrap())
    })
}

#[test]
fn matches_path_enumeration() {
    let mut rng = common::rng(11);
    for _ in 0..100 {
        use rand::Rng;
        let (n, m) = (rng.random_range(1..=7), rng.random_range(1..=7));
        let x = common::random_series(&mut rng, n, 3);
        let y = common::random_series(&mut rng, m, 3);
        let (cost, len) = common::brute_force_dtw(&x, &y);
        let (dp_cost, dp_len) = dtw::dtw_cost_and_length(&x, &y).unwrap();
        assert!((dp_cost - cost).abs() <= 1e-9, "{dp_cost} vs {cost}");
        assert_eq!(dp_len, len);
        let d = dtw::mddtw_distance(&x, &y).unwrap();
        assert!((d - cost / len as f64).abs() <= 1e-9);
    }
}

#[test]
fn length_tie_break_prefers_shortest_path() {
    // x = [0, 0], y = [0, 0]: every path costs 0; the diagonal has length 2.
    let z = VectorSeries::from_rows(&[[0.0; 3], [0.0; 3]]).unwrap();
    assert_eq!(dtw::dtw_cost_and_length(&z, &z).unwrap(), (0.0, 2));
}

#[test]
fn matrix_is_independent_of_execution() {
    let mut rng = common::rng(3);
    let series: Vec<_> = (0..9).map(|i| common::random_series(&mut rng, 4 + i % 4, 3)).collect();
    let seq = dtw::distance_matrix(&series, DtwNormalization::PathLength, Execution::Sequential).unwrap();
    let par = dtw::distance_matrix(&series, DtwNormalization::PathLength, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
}

#[test]
fn template_minimizes_row_sums() {
    let mut rng = common::rng(5);
    let series: Vec<_> = (0..8).map(|_| common::random_series(&mut rng, 6, 3)).collect();
    let t = dtw::select_template(&series).unwrap();
    let sums: Vec<f64> = (0..series.len())
        .map(|i| {
            series
                .iter()
                .map(|s| dtw::mddtw_distance(&series[i], s).unwrap())
                .sum()
        })
        .collect();
    let min = sums.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(sums[t.index], min);
    assert_eq!(t.series, series[t.index]);
    assert_eq!(t.training_distances[t.index], 0.0);
}

proptest! {
    #[test]
    fn symmetric_and_zero_on_self(x in series_strategy(7), y in series_strategy(7)) {
        let xy = dtw::mddtw_distance(&x, &y).unwrap();
        let yx = dtw::mddtw_distance(&y, &x).unwrap();
        prop_assert_eq!(xy, yx);
        prop_assert_eq!(dtw::mddtw_distance(&x, &x).unwrap(), 0.0);
        prop_assert!(xy >= 0.0);
    }

    #[test]
    fn path_length_is_bounded(x in series_strategy(7), y in series_strategy(7)) {
        let (_, len) = dtw::dtw_cost_and_length(&x, &y).unwrap();
        prop_assert!(len >= x.len().max(y.len()));
        prop_assert!(len < x.len() + y.len());
    }

    #[test]
    fn normalized_distance_is_within_local_cost_range(x in series_strategy(6), y in series_strategy(6)) {
        let d = dtw::mddtw_distance(&x, &y).unwrap();
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for a in x.rows() {
            for b in y.rows() {
                let c = dtw::euclidean(a, b);
                lo = lo.min(c);
                hi = hi.max(c);
            }
        }
        prop_assert!(d >= lo - 1e-12 && d <= hi + 1e-12);
    }
}
