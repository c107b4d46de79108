//! Life expectancy at birth to 2028 under the five future scenarios.
//!
//! cargo run --example future_paths

use mortality_slowdown::fixtures::{published_trend_grid, who_trends};
use mortality_slowdown::projection::{project_le_path, write_projection_csv, FutureScenario, DEFAULT_HORIZON};
use mortality_slowdown::{synthetic, Sex};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sex = Sex::Female;
    let ex = synthetic::exposures(sex, 2001, 2018);
    let surface = synthetic::truth_surface(&published_trend_grid(sex), &ex, 2011, 400.0)?;
    let scenarios = [
        FutureScenario::Fs1,
        FutureScenario::Fs2("CIR".parse()?),
        FutureScenario::Fs3,
        FutureScenario::Fs4(0.01),
        FutureScenario::Fs5(who_trends(sex)),
    ];
    let mut paths = Vec::new();
    for fs in &scenarios {
        let path = project_le_path(&surface, fs, 0, DEFAULT_HORIZON)?;
        println!("{:>7}: e0 in 2028 = {:.2}", fs.label(), path.values[path.values.len() - 1]);
        paths.push((fs.label(), 0, path));
    }
    write_projection_csv(std::io::stdout(), &paths)?;
    Ok(())
}
