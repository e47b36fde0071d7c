// SPDX-License-Identifier: MIT OR Apache-2.0

use nsqcd::detectors::{Detector, FullCusum, WlCusum, WlGlr};
use nsqcd::grid::{ParamBox, ParamGrid};
use nsqcd::models::{BetaWaveParams, DecayParams, GemParams, Model};
use nsqcd::montecarlo::observations;
use nsqcd::rng::trial_rng;
use proptest::prelude::*;

fn model_strategy() -> impl Strategy<Value = Model> {
    prop_oneof![
        (0.05f64..2.0, 0.5f64..50.0, 0.05f64..0.6)
            .prop_map(|(m, s, t)| Model::Gem(GemParams::new(m, s, t).unwrap())),
        (0.2f64..3.0, 0.5f64..6.0, 0.05f64..0.45)
            .prop_map(|(m, s, t)| Model::Decay(DecayParams::new(m, s, t).unwrap())),
        (2.0f64..40.0, 100.0f64..1e5, 0.1f64..1.5, 1.0f64..8.0, 0.2f64..3.0).prop_map(
            |(a, b, t0, t1, t2)| Model::BetaWave(BetaWaveParams::new(a, b, [t0, t1, t2]).unwrap())
        ),
    ]
}

fn path(model: &Model, seed: u64, nu: u64, len: usize) -> Vec<f64> {
    let mut rng = trial_rng(seed, 0);
    observations(model, Some(nu), &mut rng).take(len).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn streamed_sums_match_direct(model in model_strategy(), seed in any::<u64>(),
                                  len in 1usize..40, window in 0u64..45, nu in 1u64..40) {
        let xs = path(&model, seed, nu, len);
        let mut det = WlCusum::new(model, f64::INFINITY, window);
        for (i, &x) in xs.iter().enumerate() {
            let out = det.step(x).unwrap();
            let n = i as u64 + 1;
            let mut best = 0.0f64;
            for (k, streamed) in det.hypotheses() {
                let direct: f64 = (k..=n)
                    .map(|j| model.log_likelihood_ratio(xs[j as usize - 1], j, k).unwrap())
                    .sum();
                prop_assert!((streamed - direct).abs() <= 1e-9 * direct.abs().max(1e-300) + 1e-300
                    || streamed == direct);
                best = best.max(direct);
            }
            prop_assert!((out.statistic - best).abs() <= 1e-9 * best.max(1.0));
            prop_assert_eq!(det.hypotheses().count() as u64, n - n.saturating_sub(window).max(1) + 1);
        }
    }

    #[test]
    fn full_history_dominates_window(model in model_strategy(), seed in any::<u64>(),
                                     window in 0u64..10, nu in 1u64..30) {
        let xs = path(&model, seed, nu, 60);
        let mut wl = WlCusum::new(model, f64::INFINITY, window);
        let mut full = FullCusum::new(model, f64::INFINITY);
        for &x in &xs {
            let a = wl.step(x).unwrap().statistic;
            let b = full.step(x).unwrap().statistic;
            prop_assert!(b >= a);
            prop_assert!(a >= 0.0);
        }
    }

    #[test]
    fn glr_dominates_each_grid_cusum(seed in any::<u64>(), window in 0u64..8, theta in 0.05f64..0.5) {
        let model = Model::Gem(GemParams::new(0.5, 4.0, theta).unwrap());
        let grid = ParamGrid::uniform(&ParamBox::new(vec![(0.0, 0.5)]).unwrap(), &[6]).unwrap();
        let mut glr = WlGlr::new(model, grid.clone(), f64::INFINITY, window).unwrap();
        let mut cusums: Vec<_> = grid.points().iter()
            .map(|p| WlCusum::new(model.with_post_param(p).unwrap(), f64::INFINITY, window))
            .collect();
        for x in path(&model, seed, 5, 30) {
            let g = glr.step(x).unwrap().statistic;
            for c in &mut cusums {
                prop_assert!(g + 1e-9 * g.abs().max(1.0) >= c.step(x).unwrap().statistic);
            }
        }
    }
}
