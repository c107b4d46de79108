//! Period life tables from band-constant rates.

use std::ops::RangeInclusive;

use serde::Serialize;

use crate::domain::{AgeGroup, CauseGroup, N_AGES};
use crate::error::ModelError;
use crate::scenarios::{
    check_window, contribution_ratio, contributions, scaled_slope, scenario_rates,
    ContributionTable, ImprovementSummary, ScenarioSpec, Series,
};
use crate::surface::FitSurface;

/// Age from which the open band's rate applies.
pub const OPEN_AGE: u32 = 85;

/// Rate at single year of age `age`.
pub fn single_age_rate(rates: &[f64; N_AGES], age: u32) -> f64 {
    rates[AgeGroup::containing(age).index()]
}

/// Probability that a person aged `h` survives `n` more years.
pub fn survival_prob(rates: &[f64; N_AGES], h: u32, n: u32) -> f64 {
    let mut cum = 0.0;
    for i in 0..n {
        cum += single_age_rate(rates, h + i);
    }
    (-cum).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LifeTableResult {
    pub age_start: u32,
    pub year: i32,
    pub e_complete: f64,
    /// `ₙp` for `n = 0..=max(85 − h, 0)`; beyond that survival decays geometrically.
    pub survival: Vec<f64>,
}

fn check_rates(rates: &[f64; N_AGES], h: u32) -> Result<(), ModelError> {
    let first = AgeGroup::containing(h).index();
    for (i, &m) in rates.iter().enumerate().skip(first) {
        if !(m > 0.0 && m.is_finite()) {
            let age = AgeGroup::new(i).unwrap().lower_age().max(h);
            return Err(ModelError::NonPositiveRate { age, rate: m });
        }
    }
    Ok(())
}

/// Period life table at age `h`.
pub fn life_table(rates: &[f64; N_AGES], h: u32, year: i32) -> Result<LifeTableResult, ModelError> {
    check_rates(rates, h)?;
    let closed = OPEN_AGE.saturating_sub(h);
    let mut survival = Vec::with_capacity(closed as usize + 1);
    let mut cum = 0.0;
    survival.push(1.0);
    for i in 0..closed {
        cum += single_age_rate(rates, h + i);
        survival.push((-cum).exp());
    }
    let s_open = *survival.last().unwrap();
    let m_open = rates[AgeGroup::OPEN.index()];
    let p = (-m_open).exp();
    let finite: f64 = survival[1..].iter().sum();
    let tail = s_open * p / -(-m_open).exp_m1();
    Ok(LifeTableResult {
        age_start: h,
        year,
        e_complete: finite + tail + 0.5,
        survival,
    })
}

/// Complete period expectation of life at age `h`.
pub fn period_life_expectancy(rates: &[f64; N_AGES], h: u32) -> Result<f64, ModelError> {
    Ok(life_table(rates, h, 0)?.e_complete)
}

/// Life expectancy at `h` per year under a scenario.
pub fn le_series(
    surface: &FitSurface,
    spec: ScenarioSpec,
    h: u32,
    window: RangeInclusive<i32>,
) -> Result<Series, ModelError> {
    check_window(surface, &window)?;
    Series::from_fn(window, |year| period_life_expectancy(&scenario_rates(surface, spec, year), h))
}

/// LE improvement in months per year: the OLS slope times 12.
pub fn le_slope(series: &Series, window: RangeInclusive<i32>) -> Result<ImprovementSummary, ModelError> {
    scaled_slope(series, window, 12.0)
}

/// Contribution of cause `k` to the slowdown in LE improvement.
pub fn contribution_le(v_obs: f64, v_k: f64, v_all: f64) -> Result<f64, ModelError> {
    contribution_ratio(v_obs, v_k, v_all)
}

/// LE improvement `v` of a scenario at age `h`.
pub fn scenario_le_improvement(
    surface: &FitSurface,
    spec: ScenarioSpec,
    h: u32,
    window: RangeInclusive<i32>,
) -> Result<f64, ModelError> {
    let series = le_series(surface, spec, h, window.clone())?;
    Ok(le_slope(&series, window)?.slope)
}

/// φ for every cause at age `h`.
pub fn le_contributions(
    surface: &FitSurface,
    h: u32,
    window: RangeInclusive<i32>,
) -> Result<ContributionTable, ModelError> {
    contributions(|spec| scenario_le_improvement(surface, spec, h, window.clone()))
}

/// Cause codes paired with φ at birth and at 65.
pub fn phi_table(surface: &FitSurface, window: RangeInclusive<i32>) -> Result<Vec<(CauseGroup, f64, f64)>, ModelError> {
    let birth = le_contributions(surface, 0, window.clone())?;
    let old = le_contributions(surface, 65, window)?;
    Ok(CauseGroup::ALL
        .iter()
        .map(|&c| (c, birth.get(c).1, old.get(c).1))
        .collect())
}
