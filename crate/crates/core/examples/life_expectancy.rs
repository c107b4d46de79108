//! Period life tables from band-constant rates: life expectancy at birth
//! and at 65 per year, and its improvement in months per year.
//!
//! cargo run --example life_expectancy

use mortality_slowdown::lifetable::{le_series, le_slope, life_table};
use mortality_slowdown::fixtures::published_trend_grid;
use mortality_slowdown::scenarios::{scenario_rates, IMPROVEMENT_WINDOW};
use mortality_slowdown::{synthetic, ScenarioSpec, Sex};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ex = synthetic::exposures(Sex::Female, 2001, 2018);
    let surface = synthetic::truth_surface(&published_trend_grid(Sex::Female), &ex, 2011, 400.0)?;

    let lt = life_table(&scenario_rates(&surface, ScenarioSpec::Unadjusted, 2018), 0, 2018)?;
    println!("2018: e0 = {:.2}, survival to 65 = {:.3}", lt.e_complete, lt.survival[65]);

    for spec in [ScenarioSpec::Unadjusted, ScenarioSpec::AllAdjusted] {
        for h in [0, 65] {
            let s = le_series(&surface, spec, h, surface.years())?;
            let v = le_slope(&s, IMPROVEMENT_WINDOW)?;
            println!(
                "{spec:>10} age {h:>2}: {:.2} -> {:.2} years, {:+.2} months a year since 2011",
                s.values[0],
                s.values[s.values.len() - 1],
                v.slope
            );
        }
    }
    Ok(())
}
