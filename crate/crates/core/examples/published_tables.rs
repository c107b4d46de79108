//! Browse the bundled reference tables: per-cell trend coefficients, WHO
//! projected trends and the reported improvement rates.
//!
//! cargo run --example published_tables -- [AGE] [CAUSE]

use mortality_slowdown::fixtures::{published_improvements, published_trend_grid, who_trends, Measure};
use mortality_slowdown::projection::{beta4_grid, FutureScenario};
use mortality_slowdown::{AgeGroup, CauseGroup, Sex};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let age = AgeGroup::containing(args.next().map(|s| s.parse()).transpose()?.unwrap_or(75));
    let cause: CauseGroup = args.next().as_deref().unwrap_or("MEN").parse()?;
    for sex in Sex::ALL {
        let trends = published_trend_grid(sex);
        let who = who_trends(sex);
        let (b1, b2) = trends.get(age, cause).expect("full grid");
        let fs5 = beta4_grid(&trends, &FutureScenario::Fs5(who.clone()))?;
        println!(
            "{sex} {} {}: before {b1:+.4}, after {:+.4}, WHO {:+.4}, extra future trend {:+.4}",
            age.label(),
            cause.code(),
            b1 + b2,
            who.get(age, cause).unwrap(),
            fs5.get(age, cause)
        );
    }
    println!("reported ASMR improvement (% a year):");
    for r in published_improvements().iter().filter(|r| r.measure == Measure::Asmr && (r.scenario == "obs" || r.scenario == "all")) {
        println!("  {} {:>3}: {:.2} ({:.2} to {:.2})", r.sex, r.scenario, 100.0 * r.value, 100.0 * r.ci_low, 100.0 * r.ci_high);
    }
    Ok(())
}
