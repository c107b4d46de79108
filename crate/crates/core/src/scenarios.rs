//! Counterfactual surfaces, scenario ASMR series, improvement slopes and
//! contribution ratios.

use std::fmt;
use std::io::Write;
use std::ops::RangeInclusive;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{standardise, StandardPopulation};
use crate::domain::{AgeGroup, CauseGroup, LAST_YEAR, BREAK_YEAR, N_AGES};
use crate::error::ModelError;
use crate::format::sig6;
use crate::regression::simple_slope;
use crate::surface::FitSurface;

/// Default window for improvement slopes.
pub const IMPROVEMENT_WINDOW: RangeInclusive<i32> = BREAK_YEAR..=LAST_YEAR;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioSpec {
    Unadjusted,
    /// Post-break trend change of one cause removed.
    CauseAdjusted(CauseGroup),
    /// Post-break trend change removed for every cause.
    AllAdjusted,
}

impl ScenarioSpec {
    pub fn adjusts(&self, cause: CauseGroup) -> bool {
        match self {
            ScenarioSpec::Unadjusted => false,
            ScenarioSpec::CauseAdjusted(k) => *k == cause,
            ScenarioSpec::AllAdjusted => true,
        }
    }

    /// The surface whose plain fitted rates are this scenario's rates.
    pub fn apply(&self, surface: &FitSurface) -> FitSurface {
        surface.without_trend_change(|c| self.adjusts(c))
    }
}

impl fmt::Display for ScenarioSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioSpec::Unadjusted => f.write_str("unadjusted"),
            ScenarioSpec::CauseAdjusted(k) => write!(f, "cause:{}", k.code()),
            ScenarioSpec::AllAdjusted => f.write_str("all"),
        }
    }
}

impl FromStr for ScenarioSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "unadjusted" | "obs" => Ok(ScenarioSpec::Unadjusted),
            "all" | "all_adjusted" => Ok(ScenarioSpec::AllAdjusted),
            other => {
                let code = other.strip_prefix("cause:").unwrap_or(other);
                code.parse()
                    .map(ScenarioSpec::CauseAdjusted)
                    .map_err(|_| format!("unknown scenario {s:?}; expected unadjusted, cause:<CODE> or all"))
            }
        }
    }
}

/// Fitted cause-specific rate.
pub fn fitted_rate(surface: &FitSurface, age: AgeGroup, cause: CauseGroup, year: i32) -> f64 {
    surface.fitted_rate(age, cause, year)
}

/// Cause-specific rate under a scenario.
pub fn scenario_cell_rate(
    surface: &FitSurface,
    spec: ScenarioSpec,
    age: AgeGroup,
    cause: CauseGroup,
    year: i32,
) -> f64 {
    let cell = surface.cell(age, cause);
    match cell.fit.beta {
        Some(mut beta) if !cell.fit.zeroed => {
            if spec.adjusts(cause) {
                beta[2] = 0.0;
            }
            crate::regression::linear_predictor(&beta, year as f64, surface.breakpoint() as f64).exp()
        }
        _ => 0.0,
    }
}

/// All-cause rate under a scenario: the sum of cause-specific scenario rates.
pub fn scenario_rate(surface: &FitSurface, spec: ScenarioSpec, age: AgeGroup, year: i32) -> f64 {
    CauseGroup::ALL
        .iter()
        .map(|&c| scenario_cell_rate(surface, spec, age, c, year))
        .sum()
}

/// All-cause scenario rates by age band for one year.
pub fn scenario_rates(surface: &FitSurface, spec: ScenarioSpec, year: i32) -> [f64; N_AGES] {
    let mut rates = [0.0; N_AGES];
    for age in AgeGroup::all() {
        rates[age.index()] = scenario_rate(surface, spec, age, year);
    }
    rates
}

/// Yearly values of some quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub years: Vec<i32>,
    pub values: Vec<f64>,
}

impl Series {
    pub fn from_fn<E>(
        window: RangeInclusive<i32>,
        mut f: impl FnMut(i32) -> Result<f64, E>,
    ) -> Result<Series, E> {
        let years: Vec<i32> = window.collect();
        let values = years.iter().map(|&y| f(y)).collect::<Result<_, _>>()?;
        Ok(Series { years, values })
    }

    pub fn get(&self, year: i32) -> Option<f64> {
        self.years.iter().position(|&y| y == year).map(|i| self.values[i])
    }

    /// CSV with columns `year,<value_name>`.
    pub fn write_csv<W: Write>(&self, out: W, value_name: &str) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["year", value_name])?;
        for (y, v) in self.years.iter().zip(&self.values) {
            w.write_record([y.to_string(), sig6(*v)])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn check_window(surface: &FitSurface, window: &RangeInclusive<i32>) -> Result<(), ModelError> {
    for y in [*window.start(), *window.end()] {
        if !surface.years().contains(&y) {
            return Err(ModelError::YearOutOfRange {
                year: y,
                first: surface.first_year(),
                last: surface.last_year(),
            });
        }
    }
    Ok(())
}

/// Log age-standardised all-cause rate under a scenario, year by year.
pub fn scenario_asmr_series(
    surface: &FitSurface,
    spec: ScenarioSpec,
    sp: &StandardPopulation,
    window: RangeInclusive<i32>,
) -> Result<Series, ModelError> {
    check_window(surface, &window)?;
    Series::from_fn(window, |year| {
        let asmr = standardise(&scenario_rates(surface, spec, year), sp);
        if asmr > 0.0 {
            Ok(asmr.ln())
        } else {
            Err(ModelError::DegenerateSeries { year })
        }
    })
}

/// Linear trend of a series over a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImprovementSummary {
    pub slope: f64,
    pub intercept: f64,
    pub window: (i32, i32),
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

fn window_slope(series: &Series, window: &RangeInclusive<i32>) -> Result<(f64, f64), ModelError> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for year in window.clone() {
        let v = series.get(year).ok_or(ModelError::YearOutOfRange {
            year,
            first: series.years.first().copied().unwrap_or(year),
            last: series.years.last().copied().unwrap_or(year),
        })?;
        x.push(year as f64);
        y.push(v);
    }
    if x.len() < 3 {
        return Err(ModelError::InvalidInput("slope window needs at least 3 years".into()));
    }
    simple_slope(&x, &y)
}

/// Improvement rate of a log-rate series: minus its OLS slope over `window`.
pub fn improvement_slope(series: &Series, window: RangeInclusive<i32>) -> Result<ImprovementSummary, ModelError> {
    let (slope, intercept) = window_slope(series, &window)?;
    Ok(ImprovementSummary {
        slope: -slope,
        intercept,
        window: (*window.start(), *window.end()),
        ci_low: None,
        ci_high: None,
    })
}

/// Plain OLS slope of a series over `window`, multiplied by `scale`.
pub(crate) fn scaled_slope(
    series: &Series,
    window: RangeInclusive<i32>,
    scale: f64,
) -> Result<ImprovementSummary, ModelError> {
    let (slope, intercept) = window_slope(series, &window)?;
    Ok(ImprovementSummary {
        slope: slope * scale,
        intercept,
        window: (*window.start(), *window.end()),
        ci_low: None,
        ci_high: None,
    })
}

/// Share of the all-adjusted improvement gap recovered by adjusting one cause.
pub fn contribution_ratio(obs: f64, single: f64, all: f64) -> Result<f64, ModelError> {
    let den = all - obs;
    if den == 0.0 || !den.is_finite() {
        return Err(ModelError::DegenerateDenominator);
    }
    Ok((single - obs) / den)
}

/// Contribution of cause `k` to the slowdown in ASMR improvement.
pub fn contribution_asmr(w_obs: f64, w_k: f64, w_all: f64) -> Result<f64, ModelError> {
    contribution_ratio(w_obs, w_k, w_all)
}

/// Improvement rate `w` of the scenario's log ASMR over `window`.
pub fn scenario_improvement(
    surface: &FitSurface,
    spec: ScenarioSpec,
    sp: &StandardPopulation,
    window: RangeInclusive<i32>,
) -> Result<f64, ModelError> {
    let series = scenario_asmr_series(surface, spec, sp, window.clone())?;
    Ok(improvement_slope(&series, window)?.slope)
}

/// Per-cause ASMR contributions with the reference improvements.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContributionTable {
    pub obs: f64,
    pub all: f64,
    pub by_cause: Vec<(CauseGroup, f64, f64)>,
}

impl ContributionTable {
    /// Improvement and ratio for cause `k`.
    pub fn get(&self, k: CauseGroup) -> (f64, f64) {
        let (_, w, r) = self.by_cause[k.index()];
        (w, r)
    }

    /// CSV `cause,<ratio_name>`.
    pub fn write_csv<W: Write>(&self, out: W, ratio_name: &str) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["cause", ratio_name])?;
        for (c, _, r) in &self.by_cause {
            w.write_record([c.code().to_string(), sig6(*r)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// ρ for every cause over `window`.
pub fn asmr_contributions(
    surface: &FitSurface,
    sp: &StandardPopulation,
    window: RangeInclusive<i32>,
) -> Result<ContributionTable, ModelError> {
    contributions(|spec| scenario_improvement(surface, spec, sp, window.clone()))
}

pub(crate) fn contributions(
    mut measure: impl FnMut(ScenarioSpec) -> Result<f64, ModelError>,
) -> Result<ContributionTable, ModelError> {
    let obs = measure(ScenarioSpec::Unadjusted)?;
    let all = measure(ScenarioSpec::AllAdjusted)?;
    let mut by_cause = Vec::with_capacity(CauseGroup::ALL.len());
    for k in CauseGroup::ALL {
        let v = measure(ScenarioSpec::CauseAdjusted(k))?;
        by_cause.push((k, v, contribution_ratio(obs, v, all)?));
    }
    Ok(ContributionTable { obs, all, by_cause })
}
