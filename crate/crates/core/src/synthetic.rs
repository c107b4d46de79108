//! Plausible synthetic populations with a known generating surface.
//!
//! Rates follow a Gompertz-like age curve split across causes by fixed
//! shares; trends come from any [`TrendGrid`]. Handy for examples, tests and
//! simulation studies where the truth must be known.

use crate::dataset::{Exposures, MortalityDataset};
use crate::domain::{cell_index, cells, AgeGroup, CauseGroup, Sex, N_AGES, N_CAUSES};
use crate::error::ModelError;
use crate::regression::NbFit;
use crate::surface::{CellFit, FitSurface, TrendGrid};

/// All-cause death rate per person-year by age band, near recent
/// England and Wales levels.
const ALL_CAUSE_RATE: [f64; N_AGES] = [
    4.0e-3, 1.2e-4, 8.0e-5, 9.0e-5, 2.8e-4, 4.5e-4, 5.5e-4, 7.0e-4, 1.0e-3, 1.5e-3, 2.3e-3, 3.5e-3, 5.5e-3,
    8.5e-3, 1.35e-2, 2.2e-2, 3.8e-2, 6.8e-2, 1.65e-1,
];

/// Cause shares of all-cause mortality in the code order of [`CauseGroup::ALL`].
const SHARE: [f64; N_CAUSES] = [0.28, 0.25, 0.05, 0.02, 0.04, 0.03, 0.015, 0.09, 0.01, 0.06, 0.13, 0.025];

/// Band population at the start of the period, in persons.
const POPULATION: [f64; N_AGES] = [
    3.3e5, 1.3e6, 1.7e6, 1.7e6, 1.8e6, 1.9e6, 1.8e6, 1.8e6, 1.9e6, 2.0e6, 1.9e6, 1.7e6, 1.5e6, 1.4e6, 1.2e6,
    1.0e6, 7.5e5, 5.0e5, 4.5e5,
];

/// Largest absolute yearly log-rate slope used by [`truth_surface`].
pub const MAX_SLOPE: f64 = 0.15;

/// Log death rate of a cell in the breakpoint year.
pub fn baseline_log_rate(sex: Sex, age: AgeGroup, cause: CauseGroup) -> f64 {
    let mut share = SHARE[cause.index()];
    // External causes dominate between childhood and middle age.
    if cause.code() == "EXT" && (3..=8).contains(&age.index()) {
        share *= 8.0;
    }
    // Dementia is rare before old age.
    if cause.code() == "MEN" && age.index() < 13 {
        share *= 0.02;
    }
    let sex_factor = if sex == Sex::Male { 1.25 } else { 0.85 };
    (ALL_CAUSE_RATE[age.index()] * share * sex_factor).ln()
}

/// Person-years growing 0.5% a year from a fixed age profile.
pub fn exposures(sex: Sex, first_year: i32, last_year: i32) -> Exposures {
    let n_years = (last_year - first_year + 1).max(0) as usize;
    let scale = if sex == Sex::Male { 0.98 } else { 1.02 };
    let mut values = Vec::with_capacity(N_AGES * n_years);
    for pop in POPULATION {
        for j in 0..n_years {
            values.push(pop * scale * 1.005f64.powi(j as i32));
        }
    }
    Exposures::new(first_year, last_year, values).expect("positive exposures")
}

/// A surface whose cell `(a, c)` has slope `β₁` before the break and gains
/// `β₂` after it, with the level of [`baseline_log_rate`] at the break.
/// Slopes are clipped to ±[`MAX_SLOPE`], since estimates from near-empty
/// cells can be wild. Cells whose expected count averages below one are
/// zeroed, as a fit would.
pub fn truth_surface(
    trends: &TrendGrid,
    exposures: &Exposures,
    breakpoint: i32,
    theta: f64,
) -> Result<FitSurface, ModelError> {
    let sex = trends.sex();
    let (first, last) = (exposures.first_year, exposures.last_year);
    let bp = breakpoint as f64;
    let fits = cells()
        .map(|(age, cause)| {
            let (b1, b2) = trends
                .get(age, cause)
                .ok_or(ModelError::MissingCoefficients { age, cause })?;
            let b1 = b1.clamp(-MAX_SLOPE, MAX_SLOPE);
            let b2 = (b1 + b2).clamp(-MAX_SLOPE, MAX_SLOPE) - b1;
            let beta = [baseline_log_rate(sex, age, cause) - b1 * bp, b1, b2, 0.0];
            let mean = (first..=last)
                .map(|y| {
                    exposures.get(age, y) * crate::regression::linear_predictor(&beta, y as f64, bp).exp()
                })
                .sum::<f64>()
                / exposures.n_years() as f64;
            let fit = if mean < 1.0 {
                NbFit::zeroed()
            } else {
                NbFit {
                    beta: Some(beta),
                    theta: Some(theta),
                    zeroed: false,
                    ..NbFit::zeroed()
                }
            };
            Ok(CellFit { age, cause, fit })
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    FitSurface::new(sex, first, last, breakpoint, fits)
}

/// Deaths set to the rounded expected counts of `surface`.
pub fn expected_dataset(surface: &FitSurface, exposures: &Exposures) -> MortalityDataset {
    let n_years = exposures.n_years();
    let mut deaths = vec![0u64; N_AGES * N_CAUSES * n_years];
    for (age, cause) in cells() {
        for (j, year) in surface.years().enumerate() {
            let mean = exposures.get(age, year) * surface.fitted_rate(age, cause, year);
            deaths[cell_index(age, cause) * n_years + j] = mean.round() as u64;
        }
    }
    MortalityDataset::from_grids(
        surface.sex(),
        exposures.first_year,
        exposures.last_year,
        deaths,
        exposures.values().to_vec(),
    )
    .expect("grids sized from exposures")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{FIRST_YEAR, LAST_YEAR};

    #[test]
    fn expected_counts_are_realistic() {
        let ex = exposures(Sex::Male, FIRST_YEAR, LAST_YEAR);
        let trends = TrendGrid::new(Sex::Male, vec![Some((-0.02, 0.015)); crate::domain::N_CELLS]).unwrap();
        let s = truth_surface(&trends, &ex, 2011, 500.0).unwrap();
        let ds = expected_dataset(&s, &ex);
        let total: u64 = AgeGroup::all().map(|a| ds.all_cause_deaths(a, 2011)).sum();
        assert!((200_000..320_000).contains(&total), "{total}");
        let rate = s.fitted_rate(AgeGroup::containing(70), CauseGroup::ALL[1], 2011);
        assert!((rate.ln() - baseline_log_rate(Sex::Male, AgeGroup::containing(70), CauseGroup::ALL[1])).abs() < 1e-12);
    }
}
