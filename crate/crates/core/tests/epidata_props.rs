// SPDX-License-Identifier: MIT OR Apache-2.0

use chrono::NaiveDate;
use nsqcd::epidata::{
    fit_beta_prechange, h_function, monitor, to_fraction_series, BetaFit, CaseSeries,
    FractionSeries, MonitorConfig,
};
use nsqcd::grid::ParamBox;
use nsqcd::models::Law;
use nsqcd::rng::trial_rng;
use proptest::prelude::*;

fn dates(n: usize) -> Vec<NaiveDate> {
    let d0 = NaiveDate::from_ymd_opt(2021, 5, 1).unwrap();
    (0..n).map(|i| d0 + chrono::Days::new(i as u64)).collect()
}

proptest! {
    #[test]
    fn h_is_at_least_one(t0 in 0.0f64..5.0, t1 in 0.0f64..20.0, t2 in 0.01f64..5.0, lag in 0.0f64..100.0) {
        prop_assert!(h_function(&[t0, t1, t2], lag).unwrap() >= 1.0);
    }

    #[test]
    fn moments_fit_is_exact(values in prop::collection::vec(1e-5f64..0.2, 3..60)) {
        let n = values.len();
        let series = FractionSeries { dates: dates(n), values: values.clone() };
        if let Ok(fit) = fit_beta_prechange(&series, n) {
            let mean = values.iter().sum::<f64>() / n as f64;
            let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            let s = fit.a0 + fit.b0;
            prop_assert!((fit.a0 / s / mean - 1.0).abs() < 1e-12);
            prop_assert!((fit.a0 * fit.b0 / (s * s * (s + 1.0)) / var - 1.0).abs() < 1e-11);
        }
    }

    #[test]
    fn fractions_stay_in_unit_interval(cases in prop::collection::vec(0u32..1000, 1..40), w in 1usize..6) {
        let series = CaseSeries {
            region: "r".into(),
            population: 1000,
            dates: dates(cases.len()),
            daily: cases.iter().map(|&c| c as f64).collect(),
        };
        match to_fraction_series(&series, w) {
            Ok(f) => {
                prop_assert_eq!(f.len(), cases.len() - w + 1);
                prop_assert!(f.values.iter().all(|v| (0.0..=1.0).contains(v)));
            }
            Err(_) => prop_assert!(cases.len() < w),
        }
    }
}

#[test]
fn prechange_statistic_stays_low() {
    let beta = BetaFit { a0: 20.6, b0: 2.94e5, start_date: None, length: 20 };
    let config = MonitorConfig {
        theta_box: ParamBox::new(vec![(0.1, 5.0), (1.0, 20.0), (0.1, 5.0)]).unwrap(),
        grid_counts: vec![8, 8, 8],
        alpha: 1e-3,
        window: 20,
        epsilon: 1.0,
        threshold: None,
    };
    let law = Law::Beta { a: beta.a0, b: beta.b0 };
    for seed in 0..20 {
        let mut rng = trial_rng(seed, 0);
        let values: Vec<f64> = (0..200).map(|_| law.sample(&mut rng)).collect();
        let series = FractionSeries { dates: dates(values.len()), values };
        let result = monitor(&series, &beta, &config).unwrap();
        let mut stats: Vec<f64> = result.trajectory.iter().map(|p| p.output.statistic).collect();
        stats.sort_by(f64::total_cmp);
        assert!(stats[stats.len() / 2] < result.threshold / 10.0);
    }
}

#[test]
fn monitoring_is_deterministic() {
    let beta = BetaFit { a0: 20.6, b0: 2.94e5, start_date: None, length: 20 };
    let config = MonitorConfig {
        theta_box: ParamBox::new(vec![(0.1, 5.0), (1.0, 20.0), (0.1, 5.0)]).unwrap(),
        grid_counts: vec![4, 4, 4],
        alpha: 1e-3,
        window: 20,
        epsilon: 1.0,
        threshold: None,
    };
    let law = Law::Beta { a: beta.a0, b: beta.b0 };
    let mut rng = trial_rng(1, 0);
    let values: Vec<f64> = (0..60).map(|_| law.sample(&mut rng)).collect();
    let series = FractionSeries { dates: dates(values.len()), values };
    assert_eq!(monitor(&series, &beta, &config).unwrap(), monitor(&series, &beta, &config).unwrap());
}
