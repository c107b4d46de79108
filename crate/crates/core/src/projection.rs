//! Deterministic projections beyond the fit span with an extra trend `β₄`
//! switched on after the last fitted year.

use std::fmt;
use std::io::{Read, Write};
use std::ops::RangeInclusive;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use crate::dataset::io_error;
use crate::domain::{cell_index, cells, AgeGroup, CauseGroup, Sex, N_AGES, N_CELLS};
use crate::error::{InputError, ModelError};
use crate::format::sig6;
use crate::lifetable::period_life_expectancy;
use crate::scenarios::Series;
use crate::surface::{FitSurface, TrendGrid};

pub const DEFAULT_HORIZON: RangeInclusive<i32> = 2019..=2028;
pub const MAX_HORIZON_YEAR: i32 = 2040;

/// WHO projected annual change in log rates per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct WhoTrendTable {
    sex: Sex,
    trends: Vec<Option<f64>>,
}

#[derive(Deserialize)]
struct WhoRow {
    sex: Sex,
    age_group: AgeGroup,
    cause: CauseGroup,
    beta_who: f64,
}

impl WhoTrendTable {
    pub fn new(sex: Sex) -> WhoTrendTable {
        WhoTrendTable {
            sex,
            trends: vec![None; N_CELLS],
        }
    }

    pub fn set(&mut self, age: AgeGroup, cause: CauseGroup, beta_who: f64) {
        self.trends[cell_index(age, cause)] = Some(beta_who);
    }

    pub fn get(&self, age: AgeGroup, cause: CauseGroup) -> Option<f64> {
        self.trends[cell_index(age, cause)]
    }

    pub fn sex(&self) -> Sex {
        self.sex
    }

    /// Read rows for `sex` from CSV `sex,age_group,cause,beta_who`.
    pub fn from_csv_reader<R: Read>(reader: R, sex: Sex, name: &str) -> Result<WhoTrendTable, InputError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers().map_err(|e| csv_schema(name, 1, e))?.clone();
        if headers.iter().map(str::trim).collect::<Vec<_>>() != ["sex", "age_group", "cause", "beta_who"] {
            return Err(InputError::Schema {
                file: name.into(),
                line: 1,
                message: "expected header sex,age_group,cause,beta_who".into(),
            });
        }
        let mut table = WhoTrendTable::new(sex);
        for (i, row) in rdr.deserialize::<WhoRow>().enumerate() {
            let row = row.map_err(|e| csv_schema(name, i as u64 + 2, e))?;
            if row.sex == sex {
                table.set(row.age_group, row.cause, row.beta_who);
            }
        }
        Ok(table)
    }

    pub fn load(path: &Path, sex: Sex) -> Result<WhoTrendTable, InputError> {
        let f = std::fs::File::open(path).map_err(|e| io_error(path, e))?;
        WhoTrendTable::from_csv_reader(f, sex, &path.display().to_string())
    }
}

fn csv_schema(name: &str, line: u64, e: csv::Error) -> InputError {
    InputError::Schema {
        file: name.into(),
        line,
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FutureScenario {
    /// Fitted trends continue.
    Fs1,
    /// One cause reverts to its pre-break trend.
    Fs2(CauseGroup),
    /// Every cause reverts to its pre-break trend.
    Fs3,
    /// An additional uniform improvement `z` per year.
    Fs4(f64),
    /// WHO projected trends.
    Fs5(WhoTrendTable),
}

impl FutureScenario {
    /// Parse `1`, `2:CODE`, `3`, `4:z` or `5`; FS5 needs a WHO table.
    pub fn parse(s: &str, who: Option<WhoTrendTable>) -> Result<FutureScenario, String> {
        let bad = || format!("unknown future scenario {s:?}; expected 1, 2:CODE, 3, 4:z or 5");
        let mut parts = s.trim().splitn(2, ':');
        let head = parts.next().unwrap_or("").trim_start_matches(['F', 'S', 'f', 's']);
        let arg = parts.next();
        let fs = match (head, arg) {
            ("1", None) => FutureScenario::Fs1,
            ("2", Some(c)) => FutureScenario::Fs2(c.parse().map_err(|_| bad())?),
            ("3", None) => FutureScenario::Fs3,
            ("4", Some(z)) => {
                let z: f64 = z.parse().map_err(|_| bad())?;
                if !(0.0..1.0).contains(&z) {
                    return Err(format!("FS4 rate {z} outside [0, 1)"));
                }
                FutureScenario::Fs4(z)
            }
            ("5", None) => FutureScenario::Fs5(who.ok_or("FS5 needs a WHO trend table")?),
            _ => return Err(bad()),
        };
        Ok(fs)
    }

    pub fn label(&self) -> String {
        match self {
            FutureScenario::Fs1 => "FS1".into(),
            FutureScenario::Fs2(c) => format!("FS2:{}", c.code()),
            FutureScenario::Fs3 => "FS3".into(),
            FutureScenario::Fs4(z) if *z == 0.0 => "FS1".into(),
            FutureScenario::Fs4(z) => format!("FS4:{z}"),
            FutureScenario::Fs5(_) => "FS5".into(),
        }
    }
}

impl fmt::Display for FutureScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for FutureScenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FutureScenario::parse(s, None)
    }
}

/// Extra future trend per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Beta4Grid {
    values: Vec<f64>,
}

impl Beta4Grid {
    pub fn get(&self, age: AgeGroup, cause: CauseGroup) -> f64 {
        self.values[cell_index(age, cause)]
    }
}

/// `β₄` for every cell under a future scenario. Zeroed cells get 0.
pub fn beta4_grid(trends: &TrendGrid, fs: &FutureScenario) -> Result<Beta4Grid, ModelError> {
    let mut values = vec![0.0; N_CELLS];
    for (i, (age, cause)) in cells().enumerate() {
        let Some((b1, b2)) = trends.get(age, cause) else {
            continue;
        };
        values[i] = match fs {
            FutureScenario::Fs1 => 0.0,
            FutureScenario::Fs2(k) => {
                if *k == cause {
                    -b2
                } else {
                    0.0
                }
            }
            FutureScenario::Fs3 => -b2,
            FutureScenario::Fs4(z) => (-z).ln_1p(),
            FutureScenario::Fs5(who) => {
                let w = who.get(age, cause).ok_or(ModelError::MissingWhoCell { age, cause })?;
                w - (b1 + b2)
            }
        };
    }
    Ok(Beta4Grid { values })
}

/// Projected cause-specific rate in `year` (at or after the last fitted year).
pub fn project_rate(
    surface: &FitSurface,
    beta4: &Beta4Grid,
    age: AgeGroup,
    cause: CauseGroup,
    year: i32,
) -> Result<f64, ModelError> {
    let base = surface.last_year();
    if year < base {
        return Err(ModelError::YearOutOfRange {
            year,
            first: base,
            last: MAX_HORIZON_YEAR,
        });
    }
    let fitted = surface.fitted_rate(age, cause, year);
    Ok(fitted * (beta4.get(age, cause) * (year - base) as f64).exp())
}

/// Projected all-cause rates by age band.
pub fn projected_rates(surface: &FitSurface, beta4: &Beta4Grid, year: i32) -> Result<[f64; N_AGES], ModelError> {
    let mut rates = [0.0; N_AGES];
    for (age, cause) in cells() {
        rates[age.index()] += project_rate(surface, beta4, age, cause, year)?;
    }
    Ok(rates)
}

/// Period life expectancy at `h` for each projected year.
pub fn project_le_path(
    surface: &FitSurface,
    fs: &FutureScenario,
    h: u32,
    horizon: RangeInclusive<i32>,
) -> Result<Series, ModelError> {
    if *horizon.end() > MAX_HORIZON_YEAR || *horizon.start() <= surface.last_year() || horizon.is_empty() {
        return Err(ModelError::InvalidInput(format!(
            "horizon {}..={} must start after {} and end by {MAX_HORIZON_YEAR}",
            horizon.start(),
            horizon.end(),
            surface.last_year()
        )));
    }
    let beta4 = beta4_grid(&surface.trends(), fs)?;
    Series::from_fn(horizon, |year| {
        period_life_expectancy(&projected_rates(surface, &beta4, year)?, h)
    })
}

/// CSV `year,scenario,age_start,e_complete`.
pub fn write_projection_csv<W: Write>(
    out: W,
    paths: &[(String, u32, Series)],
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["year", "scenario", "age_start", "e_complete"])?;
    for (label, h, series) in paths {
        for (y, v) in series.years.iter().zip(&series.values) {
            w.write_record([y.to_string(), label.clone(), h.to_string(), sig6(*v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regression::NbFit;
    use crate::surface::CellFit;

    fn surface(b2: f64) -> FitSurface {
        let fits = cells()
            .map(|(age, cause)| CellFit {
                age,
                cause,
                fit: NbFit {
                    beta: Some([35.0 + 0.3 * age.index() as f64 - 8.0, -0.02, b2, 0.01]),
                    theta: Some(80.0),
                    zeroed: false,
                    ..NbFit::zeroed()
                },
            })
            .collect();
        FitSurface::new(Sex::Female, 2001, 2018, 2011, fits).unwrap()
    }

    #[test]
    fn fs4_is_log_of_one_minus_z() {
        let g = beta4_grid(&surface(0.01).trends(), &FutureScenario::Fs4(0.01)).unwrap();
        assert!((g.get(AgeGroup::OPEN, CauseGroup::CAN) - (-0.0100503)).abs() < 1e-7);
    }

    #[test]
    fn continuity_at_last_year() {
        let s = surface(0.012);
        let g = beta4_grid(&s.trends(), &FutureScenario::Fs3).unwrap();
        for (a, c) in cells() {
            assert_eq!(project_rate(&s, &g, a, c, 2018).unwrap(), s.fitted_rate(a, c, 2018));
        }
        assert!(project_rate(&s, &g, AgeGroup::OPEN, CauseGroup::CAN, 2017).is_err());
    }

    #[test]
    fn fs4_compounds() {
        let s = surface(0.0);
        let g1 = beta4_grid(&s.trends(), &FutureScenario::Fs1).unwrap();
        let g4 = beta4_grid(&s.trends(), &FutureScenario::Fs4(0.01)).unwrap();
        let a = AgeGroup::new(14).unwrap();
        let r1 = project_rate(&s, &g1, a, CauseGroup::RES, 2020).unwrap();
        let r4 = project_rate(&s, &g4, a, CauseGroup::RES, 2020).unwrap();
        assert!((r4 / r1 - 0.99f64.powi(2)).abs() < 1e-12);
    }

    #[test]
    fn missing_who_cell() {
        let mut who = WhoTrendTable::new(Sex::Female);
        for (a, c) in cells().skip(1) {
            who.set(a, c, -0.01);
        }
        let err = beta4_grid(&surface(0.0).trends(), &FutureScenario::Fs5(who)).unwrap_err();
        assert!(matches!(err, ModelError::MissingWhoCell { .. }));
    }

    #[test]
    fn reversion_raises_life_expectancy() {
        let s = surface(0.015);
        let fs1 = project_le_path(&s, &FutureScenario::Fs1, 0, DEFAULT_HORIZON).unwrap();
        let fs3 = project_le_path(&s, &FutureScenario::Fs3, 0, DEFAULT_HORIZON).unwrap();
        let fs4 = project_le_path(&s, &FutureScenario::Fs4(0.0), 0, DEFAULT_HORIZON).unwrap();
        assert_eq!(fs1, fs4);
        assert!(fs1.values.iter().zip(&fs3.values).all(|(a, b)| b >= a));
    }

    #[test]
    fn parse_scenarios() {
        assert_eq!("2:CIR".parse::<FutureScenario>().unwrap(), FutureScenario::Fs2(CauseGroup::CIR));
        assert_eq!("4:0.01".parse::<FutureScenario>().unwrap(), FutureScenario::Fs4(0.01));
        assert!("4:1.0".parse::<FutureScenario>().is_err());
        assert!("5".parse::<FutureScenario>().is_err());
        assert!("FS3".parse::<FutureScenario>().is_ok());
    }
}
