//! Search for the year the all-cause log ASMR trend changes, printing the
//! BIC of every candidate model.
//!
//! cargo run --example breakpoint_search

use mortality_slowdown::breakpoint::{asmr_series, select_breakpoint, DEFAULT_GRID};
use mortality_slowdown::fixtures::published_trend_grid;
use mortality_slowdown::regression::BreakKind;
use mortality_slowdown::{synthetic, Sex, StandardPopulation};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ex = synthetic::exposures(Sex::Female, 2001, 2018);
    let truth = synthetic::truth_surface(&published_trend_grid(Sex::Female), &ex, 2011, 400.0)?;
    let ds = synthetic::expected_dataset(&truth, &ex);
    let series = asmr_series(&ds, &StandardPopulation::esp2013())?;
    let sel = select_breakpoint(&series.values, &series.years, DEFAULT_GRID)?;

    println!("no break: BIC {:.2}", sel.base_bic);
    for eps in DEFAULT_GRID {
        let c = sel.get(eps, BreakKind::Continuous).unwrap();
        let d = sel.get(eps, BreakKind::Discontinuous).unwrap();
        println!("{eps}: continuous {c:>9.2}  discontinuous {d:>9.2}");
    }
    match sel.best_epsilon {
        Some(y) => println!("best: {} break at {y}", sel.best_kind.as_str()),
        None => println!("best: no break"),
    }
    sel.write_csv(std::io::stdout())?;
    Ok(())
}
