use std::sync::Arc;

use proptest::prelude::*;
use simflow_core::calibration::sbc_pvalue;
use simflow_core::data::{Dataset, DrawSource, ParamDraws};
use simflow_core::diagnostics::{chi2_uniformity, ecdf_band, ks_uniformity, rank_histogram, PValueSet};
use simflow_core::elicitation::{
    elicitation_loss, minimize, model_implied_stats, BetaBinomialFamily, ElicitationProblem, NelderMeadConfig,
};
use simflow_core::model::{BetaBinomial, Model, NormalNormal, PoissonGamma, Transform};
use simflow_core::sensitivity::WeightedDraws;
use simflow_core::simtest::{CriticalValue, NullDistribution, Side};
use simflow_core::statistic::DataStatistic;
use simflow_core::{par, Seed};

fn finite() -> impl Strategy<Value = f64> {
    -1e3..1e3f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sbc_pvalue_is_a_probability(truth in finite(), draws in prop::collection::vec(finite(), 1..60), seed: u64) {
        let p = sbc_pvalue(truth, &draws, Seed(seed)).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
    }

    // A strictly increasing map of the target preserves every comparison,
    // ties included, so the p-value is unchanged.
    #[test]
    fn sbc_pvalue_is_invariant_under_monotone_maps(
        truth in -5.0..5.0f64,
        draws in prop::collection::vec(-5.0..5.0f64, 1..60),
        seed: u64,
    ) {
        let g = |x: f64| x.exp() + 3.0 * x;
        let mapped: Vec<f64> = draws.iter().map(|&x| g(x)).collect();
        prop_assert_eq!(
            sbc_pvalue(truth, &draws, Seed(seed)).unwrap(),
            sbc_pvalue(g(truth), &mapped, Seed(seed)).unwrap()
        );
    }

    #[test]
    fn sbc_pvalue_counts_draws_below_without_ties(
        truth in finite(),
        draws in prop::collection::vec(finite(), 1..60),
    ) {
        prop_assume!(draws.iter().all(|&d| d != truth));
        let below = draws.iter().filter(|&&d| d < truth).count();
        prop_assert_eq!(sbc_pvalue(truth, &draws, Seed(0)).unwrap(), below as f64 / draws.len() as f64);
    }

    #[test]
    fn histogram_counts_every_value(values in prop::collection::vec(0.0..=1.0f64, 1..300), bins in 2usize..30) {
        let p = PValueSet::continuous(values.clone()).unwrap();
        prop_assert_eq!(rank_histogram(&p, bins).unwrap().iter().sum::<usize>(), values.len());
        let (stat, _, pv) = chi2_uniformity(&p, bins).unwrap();
        prop_assert!(stat >= 0.0);
        prop_assert!((0.0..=1.0).contains(&pv));
        let (d, kp) = ks_uniformity(&p);
        prop_assert!((0.0..=1.0).contains(&d) && (0.0..=1.0).contains(&kp));
    }

    #[test]
    fn discrete_pvalues_fill_declared_support(m in 1usize..50, js in prop::collection::vec(0usize..1000, 10..200)) {
        let values: Vec<f64> = js.iter().map(|j| (j % (m + 1)) as f64 / m as f64).collect();
        let p = PValueSet::new(values.clone(), Some(m)).unwrap();
        prop_assert_eq!(rank_histogram(&p, 10).unwrap().iter().sum::<usize>(), values.len());
        let (_, _, pv) = chi2_uniformity(&p, 10).unwrap();
        prop_assert!((0.0..=1.0).contains(&pv));
    }

    #[test]
    fn null_pvalues_are_probabilities_and_tails_complement(
        samples in prop::collection::vec(finite(), 1..200),
        observed in finite(),
        seed: u64,
    ) {
        prop_assume!(samples.iter().all(|&s| s != observed));
        let null = NullDistribution::new(samples).unwrap();
        let lower = null.pvalue(observed, Side::Lower, Seed(seed));
        let upper = null.pvalue(observed, Side::Upper, Seed(seed));
        let two = null.pvalue(observed, Side::TwoSided, Seed(seed));
        prop_assert!((lower + upper - 1.0).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&two));
    }

    #[test]
    fn lower_critical_values_grow_with_alpha(samples in prop::collection::vec(finite(), 2..200), a in 0.001..0.5f64, b in 0.001..0.5f64) {
        let null = NullDistribution::new(samples).unwrap();
        let (small, large) = if a <= b { (a, b) } else { (b, a) };
        let threshold = |alpha| match null.critical_value(alpha, Side::Lower).unwrap() {
            CriticalValue::Lower(t) => t,
            other => panic!("lower side gave {other:?}"),
        };
        prop_assert!(threshold(small) <= threshold(large));
    }

    #[test]
    fn transforms_round_trip(z in -20.0..20.0f64) {
        for t in [Transform::Identity, Transform::Log, Transform::Logit] {
            let back = t.to_unconstrained(t.to_constrained(z));
            prop_assert!((back - z).abs() <= 1e-8 * (1.0 + z.abs()), "{t:?}: {z} -> {back}");
        }
    }

    #[test]
    fn weights_normalize_and_ess_is_bounded(raw in prop::collection::vec(-50.0..50.0f64, 1..100)) {
        let draws = ParamDraws::new(1, vec![0.0; raw.len()], DrawSource::Posterior).unwrap();
        let w = WeightedDraws::new(draws, raw.clone()).unwrap();
        let total: f64 = w.weights().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        prop_assert!(w.ess > 0.0 && w.ess <= raw.len() as f64 * (1.0 + 1e-12));
    }

    #[test]
    fn parallel_map_matches_sequential_order(n in 0usize..500, salt: u64) {
        let f = |i: usize| Seed(salt).child(i as u64).0;
        let expected: Vec<u64> = (0..n).map(f).collect();
        prop_assert_eq!(par::map_indexed(n, f), expected);
    }

    #[test]
    fn simulated_data_is_reproducible(seed: u64, theta in 0.01..0.99f64) {
        let models: Vec<(Box<dyn Model>, Vec<f64>)> = vec![
            (Box::new(NormalNormal::new(0.0, 1.0, 1.0, 5).unwrap()), vec![theta]),
            (Box::new(BetaBinomial::new(1.0, 1.0, 10, 5).unwrap()), vec![theta]),
            (Box::new(PoissonGamma::new(2.0, 1.0, 5).unwrap()), vec![theta]),
        ];
        for (m, th) in &models {
            let a = m.draw_data(th, 5, &mut Seed(seed).rng()).unwrap();
            let b = m.draw_data(th, 5, &mut Seed(seed).rng()).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(m.log_likelihood(th, &a).unwrap().is_finite());
        }
    }

    #[test]
    fn simplex_trace_never_increases(cx in -3.0..3.0f64, cy in -3.0..3.0f64, x0 in -3.0..3.0f64, y0 in -3.0..3.0f64) {
        let r = minimize(
            |x| (x[0] - cx).powi(2) + 4.0 * (x[1] - cy).powi(2) + (x[0] - cx) * (x[1] - cy),
            &[x0, y0],
            &NelderMeadConfig::default(),
        );
        prop_assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!((r.x[0] - cx).abs() < 1e-2 && (r.x[1] - cy).abs() < 1e-2);
    }

    #[test]
    fn ecdf_band_brackets_zero(s in 10usize..120, granular: bool, seed: u64) {
        let band = ecdf_band(s, granular.then_some(19), 0.95, Seed(seed)).unwrap();
        for (lo, hi) in band.lower.iter().zip(&band.upper) {
            prop_assert!(lo.is_finite() && hi.is_finite());
            prop_assert!(*lo <= 0.0 && 0.0 <= *hi);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn elicitation_loss_ignores_target_order(a in 1.0..10.0f64, b in 1.0..10.0f64, seed: u64) {
        let family = BetaBinomialFamily { trials: 20, n: 5 };
        let probes = vec![0.25, 0.5, 0.75];
        let targets = vec![DataStatistic::Mean, DataStatistic::Max];
        let stats = model_implied_stats(&family, &targets, &probes, &[2.0, 3.0], 200, Seed(1)).unwrap();
        let swapped_stats: Vec<f64> = stats[3..].iter().chain(&stats[..3]).copied().collect();
        let forward = ElicitationProblem::new(Arc::new(family), targets.clone(), probes.clone(), stats, 200).unwrap();
        let reversed = ElicitationProblem::new(
            Arc::new(family),
            targets.into_iter().rev().collect(),
            probes,
            swapped_stats,
            200,
        )
        .unwrap();
        let l1 = elicitation_loss(&forward, &[a, b], Seed(seed));
        let l2 = elicitation_loss(&reversed, &[a, b], Seed(seed));
        prop_assert!((l1 - l2).abs() <= 1e-9 * (1.0 + l1.abs()));
    }

    #[test]
    fn concatenation_adds_observations(xs in prop::collection::vec(finite(), 1..20), ys in prop::collection::vec(finite(), 1..20)) {
        let a = Dataset::from_values(xs.clone()).unwrap();
        let b = Dataset::from_values(ys.clone()).unwrap();
        let c = a.concat(&b).unwrap();
        prop_assert_eq!(c.n(), xs.len() + ys.len());
        prop_assert_eq!(&c.values()[..xs.len()], &xs[..]);
    }
}
