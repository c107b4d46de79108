//! Invariants checked over random inputs.

use mortality_slowdown::bootstrap::percentile_interval;
use mortality_slowdown::dataset::{read_dataset, standardise, LoadOptions};
use mortality_slowdown::domain::{cells, N_AGES, N_CAUSES};
use mortality_slowdown::format::sig6;
use mortality_slowdown::lifetable::{life_table, period_life_expectancy, survival_prob};
use mortality_slowdown::projection::{project_le_path, FutureScenario};
use mortality_slowdown::regression::{nb_glm_fit, nb_loglik};
use mortality_slowdown::scenarios::{contribution_ratio, scenario_rate};
use mortality_slowdown::surface::TrendGrid;
use mortality_slowdown::{
    observed_asmr, observed_rate, synthetic, AgeGroup, CauseSel, MortalityDataset, ScenarioSpec, Sex,
    StandardPopulation,
};
use proptest::prelude::*;

const YEARS: i32 = 6;

fn dataset() -> impl Strategy<Value = MortalityDataset> {
    (
        prop::collection::vec(0u64..5000, N_AGES * N_CAUSES * YEARS as usize),
        prop::collection::vec(1e3f64..1e6, N_AGES * YEARS as usize),
    )
        .prop_map(|(d, e)| MortalityDataset::from_grids(Sex::Male, 2001, 2000 + YEARS, d, e).unwrap())
}

fn rates() -> impl Strategy<Value = [f64; N_AGES]> {
    prop::array::uniform19(1e-5f64..0.5)
}

fn esp() -> StandardPopulation {
    StandardPopulation::esp2013()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cause_rates_add_to_all_cause(ds in dataset(), year in 2001..=2000 + YEARS) {
        for age in AgeGroup::all() {
            let total = observed_rate(&ds, age, CauseSel::All, year);
            let sum: f64 = mortality_slowdown::CauseGroup::ALL
                .iter()
                .map(|&c| observed_rate(&ds, age, CauseSel::Cause(c), year))
                .sum();
            prop_assert!((total - sum).abs() <= 1e-12 * total.max(1e-300));
        }
    }

    #[test]
    fn asmr_is_homogeneous_and_bounded(r in rates(), k in 0.01f64..100.0) {
        let a = standardise(&r, &esp());
        let scaled: [f64; N_AGES] = r.map(|m| k * m);
        prop_assert!((standardise(&scaled, &esp()) - k * a).abs() <= 1e-12 * k * a);
        let lo = r.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = r.iter().cloned().fold(0.0, f64::max);
        prop_assert!(a >= lo * (1.0 - 1e-12) && a <= hi * (1.0 + 1e-12));
    }

    #[test]
    fn observed_asmr_matches_standardised_rates(ds in dataset()) {
        let mut r = [0.0; N_AGES];
        for age in AgeGroup::all() {
            r[age.index()] = observed_rate(&ds, age, CauseSel::All, 2003);
        }
        prop_assert_eq!(observed_asmr(&ds, &esp(), 2003), standardise(&r, &esp()));
    }

    #[test]
    fn dataset_survives_a_csv_round_trip(ds in dataset()) {
        let mut d = Vec::new();
        let mut e = Vec::new();
        ds.write_deaths_csv(&mut d).unwrap();
        ds.write_exposures_csv(&mut e).unwrap();
        let opts = LoadOptions { first_year: 2001, last_year: 2000 + YEARS, ..LoadOptions::default() };
        let (back, report) = read_dataset(&d[..], "d", &e[..], "e", Sex::Male, opts);
        prop_assert!(report.is_clean());
        prop_assert_eq!(back.unwrap(), ds);
    }

    #[test]
    fn nb_loglik_is_concave_in_beta(
        counts in prop::collection::vec(0u64..500, 12),
        a in prop::array::uniform4(-0.1f64..0.1),
        b in prop::array::uniform4(-0.1f64..0.1),
        theta in 0.5f64..1e4,
    ) {
        let years: Vec<f64> = (2005..2017).map(f64::from).collect();
        let offsets = vec![(2e4f64).ln(); 12];
        // Centre near a plausible rate so the terms stay finite.
        let base = |d: [f64; 4]| [-4.0 - 2011.0 * d[1] + d[0], d[1], d[2], d[3]];
        let (x, y) = (base(a), base(b));
        let mid: [f64; 4] = std::array::from_fn(|i| 0.5 * (x[i] + y[i]));
        let l = |p: &[f64; 4]| nb_loglik(p, theta, &counts, &offsets, &years, 2011.0);
        prop_assert!(l(&mid) >= 0.5 * (l(&x) + l(&y)) - 1e-7 * l(&mid).abs());
    }

    #[test]
    fn exposure_scaling_only_moves_the_intercept(
        counts in prop::collection::vec(20u64..400, 14),
        k in 0.1f64..10.0,
    ) {
        let years: Vec<f64> = (2004..2018).map(f64::from).collect();
        let ex = vec![1e5; 14];
        let scaled: Vec<f64> = ex.iter().map(|e| e * k).collect();
        let f = nb_glm_fit(&counts, &ex, &years, 2011.0).unwrap();
        let g = nb_glm_fit(&counts, &scaled, &years, 2011.0).unwrap();
        let (bf, bg) = (f.beta.unwrap(), g.beta.unwrap());
        prop_assert!((bg[0] - (bf[0] - k.ln())).abs() < 1e-5 * (1.0 + bf[0].abs()));
        for i in 1..4 {
            prop_assert!((bg[i] - bf[i]).abs() < 1e-5);
        }
    }

    #[test]
    fn life_expectancy_falls_as_rates_rise(r in rates(), i in 0usize..N_AGES, bump in 1.001f64..3.0, h in 0u32..100) {
        let mut worse = r;
        worse[i] *= bump;
        let (e0, e1) = (period_life_expectancy(&r, h).unwrap(), period_life_expectancy(&worse, h).unwrap());
        prop_assert!(e1 <= e0 + 1e-12);
        prop_assert!(e0 >= 0.5);
    }

    #[test]
    fn survival_factorises(r in rates(), h in 0u32..90, n in 0u32..40, m in 0u32..40) {
        let whole = survival_prob(&r, h, n + m);
        let parts = survival_prob(&r, h, n) * survival_prob(&r, h + n, m);
        prop_assert!((whole - parts).abs() <= 1e-12 * whole.max(1e-300));
    }

    #[test]
    fn life_table_survival_is_monotone(r in rates(), h in 0u32..85) {
        let lt = life_table(&r, h, 2018).unwrap();
        prop_assert_eq!(lt.survival.len() as u32, 86 - h);
        prop_assert!(lt.survival.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn contribution_ratio_hits_its_anchors(obs in -0.05f64..0.05, gap in 1e-4f64..0.05) {
        let all = obs + gap;
        prop_assert_eq!(contribution_ratio(obs, obs, all).unwrap(), 0.0);
        prop_assert!((contribution_ratio(obs, all, all).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!(contribution_ratio(obs, obs, obs).is_err());
    }

    #[test]
    fn percentile_interval_is_ordered(v in prop::collection::vec(-1e3f64..1e3, 1..300), level in 0.5f64..0.999) {
        let (lo, hi) = percentile_interval(&v, level);
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(min <= lo && lo <= hi && hi <= max);
    }

    #[test]
    fn sig6_keeps_six_significant_digits(x in -1e12f64..1e12) {
        let back: f64 = sig6(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 5e-6 * x.abs());
    }
}

fn flat_surface(b1: f64, b2: f64) -> mortality_slowdown::FitSurface {
    let trends = TrendGrid::new(Sex::Female, vec![Some((b1, b2)); mortality_slowdown::domain::N_CELLS]).unwrap();
    let ex = synthetic::exposures(Sex::Female, 2001, 2018);
    synthetic::truth_surface(&trends, &ex, 2011, 500.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn removing_a_worsening_trend_lowers_rates(b1 in -0.04f64..0.0, b2 in 0.001f64..0.04, year in 2012..=2018) {
        let s = flat_surface(b1, b2);
        for age in AgeGroup::all() {
            let obs = scenario_rate(&s, ScenarioSpec::Unadjusted, age, year);
            let all = scenario_rate(&s, ScenarioSpec::AllAdjusted, age, year);
            prop_assert!(all < obs);
        }
    }

    #[test]
    fn extra_improvement_raises_projected_life_expectancy(z1 in 0.0f64..0.05, dz in 1e-4f64..0.05) {
        let s = flat_surface(-0.02, 0.01);
        let a = project_le_path(&s, &FutureScenario::Fs4(z1), 0, 2019..=2028).unwrap();
        let b = project_le_path(&s, &FutureScenario::Fs4(z1 + dz), 0, 2019..=2028).unwrap();
        prop_assert!(a.values.iter().zip(&b.values).all(|(x, y)| y > x));
    }
}

#[test]
fn every_cell_of_a_truth_surface_is_present() {
    let s = flat_surface(-0.02, 0.01);
    assert_eq!(cells().count(), s.cells().len());
}
