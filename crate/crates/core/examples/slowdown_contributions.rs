//! Fit every cell, then ask how much of the post-2011 slowdown in ASMR
//! improvement each cause accounts for.
//!
//! cargo run --release --example slowdown_contributions

use mortality_slowdown::bootstrap::simulate_counts;
use mortality_slowdown::fixtures::published_trend_grid;
use mortality_slowdown::scenarios::{asmr_contributions, scenario_improvement, IMPROVEMENT_WINDOW};
use mortality_slowdown::{fit_surface, synthetic, ScenarioSpec, Sex, StandardPopulation};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ex = synthetic::exposures(Sex::Male, 2001, 2018);
    let truth = synthetic::truth_surface(&published_trend_grid(Sex::Male), &ex, 2011, 400.0)?;
    let ds = simulate_counts(&truth, &ex, 42, 0);
    let surface = fit_surface(&ds, 2011)?;
    let esp = StandardPopulation::esp2013();

    for spec in [ScenarioSpec::Unadjusted, ScenarioSpec::AllAdjusted] {
        let w = scenario_improvement(&surface, spec, &esp, IMPROVEMENT_WINDOW)?;
        println!("{spec:>10}: w = {:.3}% a year", 100.0 * w);
    }
    let table = asmr_contributions(&surface, &esp, IMPROVEMENT_WINDOW)?;
    println!("cause  w adjusted   share of slowdown");
    for (cause, w, rho) in &table.by_cause {
        println!("{:5}  {:>9.3}%   {:>7.1}%", cause.code(), 100.0 * w, 100.0 * rho);
    }
    let total: f64 = table.by_cause.iter().map(|r| r.2).sum();
    println!("sum of shares {:.1}% (not additive on the log scale)", 100.0 * total);
    Ok(())
}
