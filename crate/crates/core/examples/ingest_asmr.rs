//! Write a synthetic deaths/exposures pair to disk, load it back with full
//! validation and print the observed age-standardised rate per year.
//!
//! cargo run --example ingest_asmr -- [OUT_DIR]

use std::fs::File;

use mortality_slowdown::dataset::{validate_dataset, LoadOptions};
use mortality_slowdown::fixtures::published_trend_grid;
use mortality_slowdown::synthetic;
use mortality_slowdown::{load_dataset, observed_asmr, Sex, StandardPopulation};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "target/mortslow-demo".into());
    std::fs::create_dir_all(&dir)?;
    let deaths = format!("{dir}/deaths.csv");
    let exposures = format!("{dir}/exposures.csv");

    let ex = synthetic::exposures(Sex::Male, 2001, 2018);
    let truth = synthetic::truth_surface(&published_trend_grid(Sex::Male), &ex, 2011, 400.0)?;
    let ds = synthetic::expected_dataset(&truth, &ex);
    ds.write_deaths_csv(File::create(&deaths)?)?;
    ds.write_exposures_csv(File::create(&exposures)?)?;

    let report = validate_dataset(deaths.as_ref(), exposures.as_ref(), Sex::Male, LoadOptions::default());
    println!("validation: {} errors, {} death rows", report.errors.len(), report.death_rows);

    let loaded = load_dataset(deaths.as_ref(), exposures.as_ref(), Sex::Male, LoadOptions::default())?;
    assert_eq!(loaded, ds);
    let esp = StandardPopulation::esp2013();
    println!("year  ASMR per 100k");
    for year in loaded.years() {
        println!("{year}  {:.1}", observed_asmr(&loaded, &esp, year) * 1e5);
    }
    println!("files in {dir}");
    Ok(())
}
