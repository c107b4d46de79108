//! Parametric bootstrap interval for the ASMR improvement rate and for one
//! cause's contribution. Results are identical for any thread count.
//!
//! cargo run --release --example bootstrap_interval -- [ITERATIONS]

use mortality_slowdown::bootstrap::{bootstrap_ci, BootstrapConfig, Statistic};
use mortality_slowdown::fixtures::published_trend_grid;
use mortality_slowdown::{synthetic, CauseGroup, Sex, StandardPopulation};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let iterations = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(500);
    let ex = synthetic::exposures(Sex::Male, 2001, 2018);
    let surface = synthetic::truth_surface(&published_trend_grid(Sex::Male), &ex, 2011, 400.0)?;
    let cfg = BootstrapConfig {
        iterations,
        ..BootstrapConfig::default()
    };
    let esp = StandardPopulation::esp2013();
    let cir: CauseGroup = "CIR".parse()?;
    for stat in [Statistic::LogAsmrImprovement, Statistic::AsmrContribution(cir)] {
        let r = bootstrap_ci(&surface, &ex, &esp, stat, &cfg)?;
        println!(
            "{:>8}: {:.5} ({:.0}% CI {:.5} to {:.5}, {} draws, seed {})",
            r.statistic,
            r.point,
            100.0 * r.level,
            r.ci_low,
            r.ci_high,
            r.iterations,
            r.seed
        );
    }
    Ok(())
}
