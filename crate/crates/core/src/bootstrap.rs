//! Parametric negative binomial bootstrap.
//!
//! Each iteration draws a fresh deaths grid from the fitted (or scenario)
//! surface, rebuilds observed rates with the original exposures and evaluates
//! a statistic on them. Draws for cell-year `j` of iteration `i` come from the
//! ChaCha stream `i` at block offset `j`, so results do not depend on thread
//! scheduling and different scenarios share random numbers.

use std::fmt;
use std::io::Write;
use std::ops::RangeInclusive;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{observed_rate, standardise, CauseSel, Exposures, MortalityDataset, StandardPopulation};
use crate::domain::{cells, AgeGroup, CauseGroup, N_AGES, N_CAUSES};
use crate::error::ModelError;
use crate::format::sig6;
use crate::lifetable::period_life_expectancy;
use crate::regression::simple_slope;
use crate::scenarios::{contribution_ratio, scenario_rates, ScenarioSpec, IMPROVEMENT_WINDOW};
use crate::surface::FitSurface;

/// One negative binomial draw as a gamma-mixed Poisson.
pub fn draw_nb<R: Rng + ?Sized>(rng: &mut R, mean: f64, theta: f64) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    let lambda = match Gamma::new(theta, mean / theta) {
        Ok(g) => g.sample(rng),
        Err(_) => mean,
    };
    if !(lambda > 0.0) {
        return 0;
    }
    match Poisson::new(lambda) {
        Ok(p) => {
            let v: f64 = p.sample(rng);
            v as u64
        }
        Err(_) => lambda.round() as u64,
    }
}

/// Simulated deaths drawn from `surface` with the given exposures.
/// Zeroed cells always yield zero deaths.
pub fn simulate_counts(
    surface: &FitSurface,
    exposures: &Exposures,
    seed: u64,
    iteration: u64,
) -> MortalityDataset {
    let first = exposures.first_year;
    let n_years = exposures.n_years();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(iteration);
    let mut deaths = vec![0u64; N_AGES * N_CAUSES * n_years];
    for (ci, (age, cause)) in cells().enumerate() {
        let cell = surface.cell(age, cause);
        let (Some(theta), false) = (cell.fit.theta, cell.fit.zeroed) else {
            continue;
        };
        for j in 0..n_years {
            let year = first + j as i32;
            let idx = ci * n_years + j;
            let mean = exposures.get(age, year) * surface.fitted_rate(age, cause, year);
            rng.set_word_pos((idx as u128) << 32);
            deaths[idx] = draw_nb(&mut rng, mean, theta);
        }
    }
    MortalityDataset::from_grids(
        surface.sex(),
        first,
        exposures.last_year,
        deaths,
        exposures.values().to_vec(),
    )
    .expect("exposures validated on construction")
}

/// Simulated deaths from the scenario surface, e.g. with one cause's trend
/// change removed.
pub fn simulate_scenario_counts(
    surface: &FitSurface,
    spec: ScenarioSpec,
    exposures: &Exposures,
    seed: u64,
    iteration: u64,
) -> MortalityDataset {
    simulate_counts(&spec.apply(surface), exposures, seed, iteration)
}

/// Scalar statistics available to the bootstrap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Statistic {
    /// `w`: minus the slope of log ASMR over the window.
    LogAsmrImprovement,
    /// `v`: LE slope at an age, months per year.
    LeImprovement { age: u32 },
    /// `ρ` for one cause.
    AsmrContribution(CauseGroup),
    /// `φ` for one cause at an age.
    LeContribution { cause: CauseGroup, age: u32 },
    Asmr { year: i32 },
    LifeExpectancy { age: u32, year: i32 },
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statistic::LogAsmrImprovement => f.write_str("w"),
            Statistic::LeImprovement { age } => write!(f, "v:{age}"),
            Statistic::AsmrContribution(c) => write!(f, "rho:{}", c.code()),
            Statistic::LeContribution { cause, age } => write!(f, "phi:{}:{age}", cause.code()),
            Statistic::Asmr { year } => write!(f, "asmr:{year}"),
            Statistic::LifeExpectancy { age, year } => write!(f, "le:{age}:{year}"),
        }
    }
}

impl FromStr for Statistic {
    type Err = String;

    /// `w`, `v:AGE`, `rho:CODE`, `phi:CODE:AGE`, `asmr:YEAR`, `le:AGE:YEAR`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("unknown statistic {s:?}; expected w, v:AGE, rho:CODE, phi:CODE:AGE, asmr:YEAR or le:AGE:YEAR");
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |p: &str| p.parse::<i64>().map_err(|_| bad());
        let cause = |p: &str| p.parse::<CauseGroup>().map_err(|_| bad());
        Ok(match parts.as_slice() {
            ["w"] => Statistic::LogAsmrImprovement,
            ["v"] => Statistic::LeImprovement { age: 0 },
            ["v", a] => Statistic::LeImprovement { age: num(a)? as u32 },
            ["rho", c] => Statistic::AsmrContribution(cause(c)?),
            ["phi", c] => Statistic::LeContribution { cause: cause(c)?, age: 0 },
            ["phi", c, a] => Statistic::LeContribution { cause: cause(c)?, age: num(a)? as u32 },
            ["asmr", y] => Statistic::Asmr { year: num(y)? as i32 },
            ["le", a, y] => Statistic::LifeExpectancy { age: num(a)? as u32, year: num(y)? as i32 },
            _ => return Err(bad()),
        })
    }
}

impl Statistic {
    /// Scenarios whose rates the statistic reads.
    pub fn scenarios(&self, base: ScenarioSpec) -> Vec<ScenarioSpec> {
        match self {
            Statistic::AsmrContribution(k) | Statistic::LeContribution { cause: k, .. } => vec![
                ScenarioSpec::Unadjusted,
                ScenarioSpec::CauseAdjusted(*k),
                ScenarioSpec::AllAdjusted,
            ],
            _ => vec![base],
        }
    }

    /// Evaluate given all-cause rates by (scenario index, year).
    fn evaluate(
        &self,
        rates: &dyn Fn(usize, i32) -> [f64; N_AGES],
        sp: &StandardPopulation,
        window: &RangeInclusive<i32>,
    ) -> Result<f64, ModelError> {
        let log_asmr_w = |s: usize| -> Result<f64, ModelError> {
            let (mut x, mut y) = (Vec::new(), Vec::new());
            for year in window.clone() {
                let a = standardise(&rates(s, year), sp);
                if !(a > 0.0) {
                    return Err(ModelError::DegenerateSeries { year });
                }
                x.push(year as f64);
                y.push(a.ln());
            }
            Ok(-simple_slope(&x, &y)?.0)
        };
        let le_v = |s: usize, age: u32| -> Result<f64, ModelError> {
            let (mut x, mut y) = (Vec::new(), Vec::new());
            for year in window.clone() {
                x.push(year as f64);
                y.push(period_life_expectancy(&rates(s, year), age)?);
            }
            Ok(12.0 * simple_slope(&x, &y)?.0)
        };
        match *self {
            Statistic::LogAsmrImprovement => log_asmr_w(0),
            Statistic::LeImprovement { age } => le_v(0, age),
            Statistic::AsmrContribution(_) => contribution_ratio(log_asmr_w(0)?, log_asmr_w(1)?, log_asmr_w(2)?),
            Statistic::LeContribution { age, .. } => contribution_ratio(le_v(0, age)?, le_v(1, age)?, le_v(2, age)?),
            Statistic::Asmr { year } => Ok(standardise(&rates(0, year), sp)),
            Statistic::LifeExpectancy { age, year } => period_life_expectancy(&rates(0, year), age),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapConfig {
    pub iterations: usize,
    pub level: f64,
    pub seed: u64,
    /// Scenario for single-scenario statistics; contributions always use
    /// the unadjusted, cause-adjusted and all-adjusted surfaces.
    pub scenario: ScenarioSpec,
    pub window: RangeInclusive<i32>,
    /// Keep every simulated deaths grid.
    pub retain_simulations: bool,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            iterations: 5000,
            level: 0.95,
            seed: 20180101,
            scenario: ScenarioSpec::Unadjusted,
            window: IMPROVEMENT_WINDOW,
            retain_simulations: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BootstrapResult {
    pub statistic: String,
    pub point: f64,
    pub level: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub iterations: usize,
    pub seed: u64,
    #[serde(skip)]
    pub replicates: Vec<f64>,
    /// Per iteration, one simulated grid per scenario read by the statistic.
    #[serde(skip)]
    pub simulations: Option<Vec<Vec<MortalityDataset>>>,
}

impl BootstrapResult {
    pub fn write_replicates_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iteration", "value"])?;
        for (i, v) in self.replicates.iter().enumerate() {
            w.write_record([i.to_string(), sig6(*v)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_summary_json<W: Write>(&self, out: W) -> serde_json::Result<()> {
        serde_json::to_writer_pretty(out, self)
    }
}

/// Percentile interval: order statistics at `(1−level)/2` and `(1+level)/2`.
pub fn percentile_interval(values: &[f64], level: f64) -> (f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let last = (sorted.len() - 1) as f64;
    let lo = ((1.0 - level) / 2.0 * last).round() as usize;
    let hi = ((1.0 + level) / 2.0 * last).round() as usize;
    (sorted[lo], sorted[hi])
}

fn observed_rates(ds: &MortalityDataset, year: i32) -> [f64; N_AGES] {
    let mut r = [0.0; N_AGES];
    for age in AgeGroup::all() {
        r[age.index()] = observed_rate(ds, age, CauseSel::All, year);
    }
    r
}

/// Bootstrap a statistic. The point estimate uses the fitted rates directly.
pub fn bootstrap_ci(
    surface: &FitSurface,
    exposures: &Exposures,
    sp: &StandardPopulation,
    statistic: Statistic,
    cfg: &BootstrapConfig,
) -> Result<BootstrapResult, ModelError> {
    if cfg.iterations == 0 {
        return Err(ModelError::InvalidInput("iterations must be at least 1".into()));
    }
    if !(cfg.level > 0.0 && cfg.level < 1.0) {
        return Err(ModelError::InvalidInput(format!("level {} outside (0, 1)", cfg.level)));
    }
    for y in [*cfg.window.start(), *cfg.window.end()] {
        if y < exposures.first_year || y > exposures.last_year {
            return Err(ModelError::YearOutOfRange {
                year: y,
                first: exposures.first_year,
                last: exposures.last_year,
            });
        }
    }
    let specs = statistic.scenarios(cfg.scenario);
    let surfaces: Vec<FitSurface> = specs.iter().map(|s| s.apply(surface)).collect();

    let fitted = |s: usize, year: i32| scenario_rates(&surfaces[s], ScenarioSpec::Unadjusted, year);
    let point = statistic.evaluate(&fitted, sp, &cfg.window)?;

    let outcomes: Vec<Result<(f64, Option<Vec<MortalityDataset>>), ModelError>> = (0..cfg.iterations)
        .into_par_iter()
        .map(|i| {
            let sims: Vec<MortalityDataset> = surfaces
                .iter()
                .map(|s| simulate_counts(s, exposures, cfg.seed, i as u64))
                .collect();
            let rates = |s: usize, year: i32| observed_rates(&sims[s], year);
            let value = statistic.evaluate(&rates, sp, &cfg.window)?;
            Ok((value, cfg.retain_simulations.then_some(sims)))
        })
        .collect();

    let mut replicates = Vec::with_capacity(cfg.iterations);
    let mut simulations = cfg.retain_simulations.then(Vec::new);
    for (i, o) in outcomes.into_iter().enumerate() {
        let (v, sims) = o.map_err(|e| ModelError::StatisticFailure {
            iteration: i,
            source: Box::new(e),
        })?;
        replicates.push(v);
        if let (Some(all), Some(s)) = (simulations.as_mut(), sims) {
            all.push(s);
        }
    }
    let (ci_low, ci_high) = percentile_interval(&replicates, cfg.level);
    Ok(BootstrapResult {
        statistic: statistic.to_string(),
        point,
        level: cfg.level,
        ci_low,
        ci_high,
        iterations: cfg.iterations,
        seed: cfg.seed,
        replicates,
        simulations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Sex;
    use crate::regression::{NbFit, THETA_CAP};
    use crate::surface::CellFit;

    fn surface(theta: f64, live: impl Fn(AgeGroup, CauseGroup) -> bool) -> FitSurface {
        let fits = cells()
            .map(|(age, cause)| CellFit {
                age,
                cause,
                fit: if live(age, cause) {
                    NbFit {
                        beta: Some([40.0 - 0.0002 * age.index() as f64, -0.022, 0.01, 0.0]),
                        theta: Some(theta),
                        zeroed: false,
                        ..NbFit::zeroed()
                    }
                } else {
                    NbFit::zeroed()
                },
            })
            .collect();
        FitSurface::new(Sex::Male, 2001, 2018, 2011, fits).unwrap()
    }

    fn exposures() -> Exposures {
        Exposures::new(2001, 2018, vec![2e5; N_AGES * 18]).unwrap()
    }

    #[test]
    fn zeroed_cells_stay_zero() {
        let s = surface(30.0, |_, c| c != CauseGroup::INF);
        for it in 0..5 {
            let ds = simulate_counts(&s, &exposures(), 9, it);
            for a in AgeGroup::all() {
                assert!(ds.cell_deaths(a, CauseGroup::INF).iter().all(|&d| d == 0));
            }
        }
    }

    #[test]
    fn repeatable_draws() {
        let s = surface(30.0, |_, _| true);
        let a = simulate_counts(&s, &exposures(), 3, 17);
        assert_eq!(a, simulate_counts(&s, &exposures(), 3, 17));
        assert_ne!(a, simulate_counts(&s, &exposures(), 3, 18));
    }

    #[test]
    fn poisson_regime_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mean = 37.5;
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| draw_nb(&mut rng, mean, THETA_CAP) as f64).collect();
        let m = draws.iter().sum::<f64>() / n as f64;
        let v = draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((m / mean - 1.0).abs() < 0.01);
        assert!((0.97..=1.03).contains(&(v / m)));
    }

    #[test]
    fn single_iteration_collapses() {
        let s = surface(50.0, |_, _| true);
        let cfg = BootstrapConfig { iterations: 1, ..Default::default() };
        let r = bootstrap_ci(&s, &exposures(), &StandardPopulation::esp2013(), Statistic::LogAsmrImprovement, &cfg).unwrap();
        assert_eq!(r.ci_low, r.ci_high);
        assert_eq!(r.ci_low, r.replicates[0]);
    }

    #[test]
    fn failure_reports_iteration() {
        let mut s = surface(50.0, |a, c| a.index() == 10 && c == CauseGroup::CAN);
        let fits: Vec<CellFit> = s
            .cells()
            .iter()
            .cloned()
            .map(|mut c| {
                if let Some(b) = c.fit.beta.as_mut() {
                    *b = [(1e-6f64).ln(), 0.0, 0.0, 0.0];
                }
                c
            })
            .collect();
        s = FitSurface::new(Sex::Male, 2001, 2018, 2011, fits).unwrap();
        let cfg = BootstrapConfig { iterations: 4, ..Default::default() };
        let sp = StandardPopulation::esp2013();
        // expected deaths of 0.2 a year: some simulated year has none
        let err = bootstrap_ci(&s, &exposures(), &sp, Statistic::LogAsmrImprovement, &cfg).unwrap_err();
        let ModelError::StatisticFailure { iteration, source } = err else { panic!("{err:?}") };
        assert_eq!(iteration, 0);
        assert!(matches!(*source, ModelError::DegenerateSeries { .. }));
    }

    #[test]
    fn percentile_order_statistics() {
        let v: Vec<f64> = (0..101).rev().map(|i| i as f64).collect();
        assert_eq!(percentile_interval(&v, 0.9), (5.0, 95.0));
        assert_eq!(percentile_interval(&[4.2], 0.95), (4.2, 4.2));
    }

    #[test]
    fn statistic_names_round_trip() {
        for s in [
            Statistic::LogAsmrImprovement,
            Statistic::LeImprovement { age: 65 },
            Statistic::AsmrContribution(CauseGroup::CIR),
            Statistic::LeContribution { cause: CauseGroup::MEN, age: 0 },
            Statistic::Asmr { year: 2015 },
            Statistic::LifeExpectancy { age: 0, year: 2018 },
        ] {
            assert_eq!(s.to_string().parse::<Statistic>().unwrap(), s);
        }
    }
}
