//! Deaths/exposure grids, the standard population and observed rates.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::domain::{
    parse_cause_code, AgeGroup, CauseGroup, Sex, FIRST_YEAR, LAST_YEAR, N_AGES, N_CAUSES,
};
use crate::error::InputError;

/// European Standard Population 2013 with the bands above 85 summed into 85+.
pub const ESP2013_CSV: &str = include_str!("../data/esp2013.csv");

/// How the `cause` column of a deaths file is coded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CauseCoding {
    /// Group codes such as `CIR`.
    #[default]
    Group,
    /// Raw ICD-10 codes, aggregated through [`parse_cause_code`].
    Icd10,
}

/// Deaths by (age, cause, year) and exposures by (age, year) for one sex.
#[derive(Debug, Clone, PartialEq)]
pub struct MortalityDataset {
    sex: Sex,
    first_year: i32,
    last_year: i32,
    deaths: Vec<u64>,
    exposures: Vec<f64>,
}

impl MortalityDataset {
    /// Build from dense grids. `deaths` is indexed `[age][cause][year]`,
    /// `exposures` `[age][year]`, both flattened row-major.
    pub fn from_grids(
        sex: Sex,
        first_year: i32,
        last_year: i32,
        deaths: Vec<u64>,
        exposures: Vec<f64>,
    ) -> Result<MortalityDataset, InputError> {
        let schema = |message: String| InputError::Schema {
            file: "<memory>".into(),
            line: 0,
            message,
        };
        if last_year < first_year {
            return Err(schema(format!("empty year span {first_year}..={last_year}")));
        }
        let n_years = (last_year - first_year + 1) as usize;
        if deaths.len() != N_AGES * N_CAUSES * n_years {
            return Err(schema(format!("deaths grid has {} cells", deaths.len())));
        }
        if exposures.len() != N_AGES * n_years {
            return Err(schema(format!("exposure grid has {} cells", exposures.len())));
        }
        if let Some(i) = exposures.iter().position(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(InputError::Gap {
                age: AgeGroup::new(i / n_years).unwrap(),
                year: first_year + (i % n_years) as i32,
            });
        }
        Ok(MortalityDataset {
            sex,
            first_year,
            last_year,
            deaths,
            exposures,
        })
    }

    pub fn sex(&self) -> Sex {
        self.sex
    }

    pub fn first_year(&self) -> i32 {
        self.first_year
    }

    pub fn last_year(&self) -> i32 {
        self.last_year
    }

    pub fn years(&self) -> std::ops::RangeInclusive<i32> {
        self.first_year..=self.last_year
    }

    pub fn n_years(&self) -> usize {
        (self.last_year - self.first_year + 1) as usize
    }

    fn year_offset(&self, year: i32) -> usize {
        assert!(
            self.years().contains(&year),
            "year {year} outside {}..={}",
            self.first_year,
            self.last_year
        );
        (year - self.first_year) as usize
    }

    pub fn deaths(&self, age: AgeGroup, cause: CauseGroup, year: i32) -> u64 {
        let n = self.n_years();
        self.deaths[(age.index() * N_CAUSES + cause.index()) * n + self.year_offset(year)]
    }

    pub fn all_cause_deaths(&self, age: AgeGroup, year: i32) -> u64 {
        CauseGroup::ALL
            .iter()
            .map(|&c| self.deaths(age, c, year))
            .sum()
    }

    pub fn exposure(&self, age: AgeGroup, year: i32) -> f64 {
        self.exposures[age.index() * self.n_years() + self.year_offset(year)]
    }

    /// Death counts for one cell across all years.
    pub fn cell_deaths(&self, age: AgeGroup, cause: CauseGroup) -> &[u64] {
        let n = self.n_years();
        let start = (age.index() * N_CAUSES + cause.index()) * n;
        &self.deaths[start..start + n]
    }

    pub fn age_exposures(&self, age: AgeGroup) -> &[f64] {
        let n = self.n_years();
        &self.exposures[age.index() * n..(age.index() + 1) * n]
    }

    pub fn exposures(&self) -> Exposures {
        Exposures {
            first_year: self.first_year,
            last_year: self.last_year,
            values: self.exposures.clone(),
        }
    }

    /// Write the deaths grid in the group-coded CSV schema.
    pub fn write_deaths_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["sex", "year", "age_group", "cause", "deaths"])?;
        for age in AgeGroup::all() {
            for cause in CauseGroup::ALL {
                for year in self.years() {
                    w.write_record([
                        self.sex.as_str(),
                        &year.to_string(),
                        age.label(),
                        cause.code(),
                        &self.deaths(age, cause, year).to_string(),
                    ])?;
                }
            }
        }
        w.flush()
    }

    pub fn write_exposures_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["sex", "year", "age_group", "population"])?;
        for age in AgeGroup::all() {
            for year in self.years() {
                w.write_record([
                    self.sex.as_str(),
                    &year.to_string(),
                    age.label(),
                    &self.exposure(age, year).to_string(),
                ])?;
            }
        }
        w.flush()
    }
}

/// Exposures `E[x,t]` detached from a dataset, as used by the bootstrap.
#[derive(Debug, Clone, PartialEq)]
pub struct Exposures {
    pub first_year: i32,
    pub last_year: i32,
    values: Vec<f64>,
}

impl Exposures {
    pub fn new(first_year: i32, last_year: i32, values: Vec<f64>) -> Option<Exposures> {
        let n = (last_year - first_year + 1).max(0) as usize;
        (values.len() == N_AGES * n && values.iter().all(|e| e.is_finite() && *e > 0.0)).then_some(
            Exposures {
                first_year,
                last_year,
                values,
            },
        )
    }

    pub fn n_years(&self) -> usize {
        (self.last_year - self.first_year + 1) as usize
    }

    pub fn get(&self, age: AgeGroup, year: i32) -> f64 {
        self.values[age.index() * self.n_years() + (year - self.first_year) as usize]
    }

    /// Values indexed `[age][year]`, flattened.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Standard population weights `E^S_x` for the 19 age bands.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StandardPopulation {
    weights: [f64; N_AGES],
}

impl StandardPopulation {
    pub fn new(weights: [f64; N_AGES]) -> Result<StandardPopulation, InputError> {
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(InputError::Schema {
                file: "<memory>".into(),
                line: 0,
                message: format!(
                    "standard population weight for {} must be positive",
                    AgeGroup::new(i).unwrap()
                ),
            });
        }
        Ok(StandardPopulation { weights })
    }

    /// The shipped ESP 2013 weights.
    pub fn esp2013() -> StandardPopulation {
        Self::from_csv_reader(ESP2013_CSV.as_bytes(), "esp2013.csv")
            .expect("shipped standard population is valid")
    }

    pub fn weight(&self, age: AgeGroup) -> f64 {
        self.weights[age.index()]
    }

    pub fn weights(&self) -> &[f64; N_AGES] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn load(path: &Path) -> Result<StandardPopulation, InputError> {
        let file = std::fs::File::open(path).map_err(|e| io_error(path, e))?;
        Self::from_csv_reader(file, &path.display().to_string())
    }

    pub fn from_csv_reader<R: Read>(reader: R, name: &str) -> Result<StandardPopulation, InputError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        expect_header(&mut rdr, name, &["age_group", "weight"])?;
        let mut weights = [f64::NAN; N_AGES];
        for (i, rec) in rdr.records().enumerate() {
            let line = i as u64 + 2;
            let rec = rec.map_err(|e| schema(name, line, e.to_string()))?;
            if rec.len() != 2 {
                return Err(schema(name, line, format!("expected 2 fields, found {}", rec.len())));
            }
            let age: AgeGroup = rec[0].parse().map_err(|e: String| schema(name, line, e))?;
            let w: f64 = rec[1]
                .parse()
                .map_err(|_| schema(name, line, format!("bad weight {:?}", &rec[1])))?;
            if !(w.is_finite() && w > 0.0) {
                return Err(schema(name, line, format!("weight must be positive, found {w}")));
            }
            if !weights[age.index()].is_nan() {
                return Err(schema(name, line, format!("duplicate age group {age}")));
            }
            weights[age.index()] = w;
        }
        if let Some(i) = weights.iter().position(|w| w.is_nan()) {
            return Err(schema(
                name,
                0,
                format!("missing weight for {}", AgeGroup::new(i).unwrap()),
            ));
        }
        Ok(StandardPopulation { weights })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["age_group", "weight"])?;
        for age in AgeGroup::all() {
            w.write_record([age.label(), &self.weight(age).to_string()])?;
        }
        w.flush()
    }
}

/// Options for [`load_dataset`].
#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    pub first_year: i32,
    pub last_year: i32,
    pub coding: CauseCoding,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            first_year: FIRST_YEAR,
            last_year: LAST_YEAR,
            coding: CauseCoding::Group,
        }
    }
}

/// Everything found while reading a deaths/exposures pair.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub errors: Vec<InputError>,
    /// Number of death rows folded into an already-seen (age, cause, year) cell.
    pub duplicate_merges: usize,
    pub death_rows: usize,
    pub exposure_rows: usize,
    /// Rows skipped because they belong to the other sex.
    pub other_sex_rows: usize,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Read a deaths/exposures CSV pair for `sex`, stopping at the first error.
pub fn load_dataset(
    deaths_path: &Path,
    exposures_path: &Path,
    sex: Sex,
    opts: LoadOptions,
) -> Result<MortalityDataset, InputError> {
    let deaths = std::fs::File::open(deaths_path).map_err(|e| io_error(deaths_path, e))?;
    let exposures = std::fs::File::open(exposures_path).map_err(|e| io_error(exposures_path, e))?;
    let (ds, report) = read_dataset(
        deaths,
        &deaths_path.display().to_string(),
        exposures,
        &exposures_path.display().to_string(),
        sex,
        opts,
    );
    match report.errors.into_iter().next() {
        Some(e) => Err(e),
        None => Ok(ds.expect("clean report implies a dataset")),
    }
}

/// Read a deaths/exposures pair collecting every problem instead of stopping.
pub fn validate_dataset(
    deaths_path: &Path,
    exposures_path: &Path,
    sex: Sex,
    opts: LoadOptions,
) -> ValidationReport {
    let open = |p: &Path| std::fs::File::open(p).map_err(|e| io_error(p, e));
    match (open(deaths_path), open(exposures_path)) {
        (Ok(d), Ok(e)) => {
            read_dataset(
                d,
                &deaths_path.display().to_string(),
                e,
                &exposures_path.display().to_string(),
                sex,
                opts,
            )
            .1
        }
        (d, e) => ValidationReport {
            errors: [d.err(), e.err()].into_iter().flatten().collect(),
            ..Default::default()
        },
    }
}

/// Core reader over arbitrary sources. Returns the dataset when the report is clean.
pub fn read_dataset<R1: Read, R2: Read>(
    deaths: R1,
    deaths_name: &str,
    exposures: R2,
    exposures_name: &str,
    sex: Sex,
    opts: LoadOptions,
) -> (Option<MortalityDataset>, ValidationReport) {
    let mut report = ValidationReport::default();
    let n_years = (opts.last_year - opts.first_year + 1).max(0) as usize;
    let mut death_grid = vec![0u64; N_AGES * N_CAUSES * n_years];
    let mut seen: HashMap<usize, u64> = HashMap::new();
    let mut exp_grid = vec![f64::NAN; N_AGES * n_years];

    // deaths
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(deaths);
    let coding = match rdr.headers() {
        Ok(h) => {
            let cols: Vec<&str> = h.iter().collect();
            match cols.as_slice() {
                ["sex", "year", "age_group", "cause", "deaths"] => Some(opts.coding),
                ["sex", "year", "age_group", "icd10", "deaths"] => Some(CauseCoding::Icd10),
                _ => {
                    report.errors.push(schema(
                        deaths_name,
                        1,
                        format!("expected header sex,year,age_group,cause,deaths, found {}", cols.join(",")),
                    ));
                    None
                }
            }
        }
        Err(e) => {
            report.errors.push(schema(deaths_name, 1, e.to_string()));
            None
        }
    };
    if let Some(coding) = coding {
        for (i, rec) in rdr.records().enumerate() {
            let line = i as u64 + 2;
            let rec = match rec {
                Ok(r) => r,
                Err(e) => {
                    report.errors.push(schema(deaths_name, line, e.to_string()));
                    continue;
                }
            };
            report.death_rows += 1;
            match parse_death_row(&rec, deaths_name, line, coding, sex, opts) {
                Ok(None) => report.other_sex_rows += 1,
                Ok(Some((age, cause, year, count))) => {
                    let idx = (age.index() * N_CAUSES + cause.index()) * n_years
                        + (year - opts.first_year) as usize;
                    let prior = seen.entry(idx).or_insert(0);
                    if *prior > 0 {
                        report.duplicate_merges += 1;
                    }
                    *prior += 1;
                    death_grid[idx] += count;
                }
                Err(e) => report.errors.push(e),
            }
        }
    }

    // exposures
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(exposures);
    match expect_header(&mut rdr, exposures_name, &["sex", "year", "age_group", "population"]) {
        Err(e) => report.errors.push(e),
        Ok(()) => {
            for (i, rec) in rdr.records().enumerate() {
                let line = i as u64 + 2;
                let rec = match rec {
                    Ok(r) => r,
                    Err(e) => {
                        report.errors.push(schema(exposures_name, line, e.to_string()));
                        continue;
                    }
                };
                report.exposure_rows += 1;
                match parse_exposure_row(&rec, exposures_name, line, sex, opts) {
                    Ok(None) => report.other_sex_rows += 1,
                    Ok(Some((age, year, pop))) => {
                        let idx = age.index() * n_years + (year - opts.first_year) as usize;
                        if !exp_grid[idx].is_nan() {
                            report.errors.push(schema(
                                exposures_name,
                                line,
                                format!("duplicate exposure for {age} {year}"),
                            ));
                        }
                        exp_grid[idx] = pop;
                    }
                    Err(e) => report.errors.push(e),
                }
            }
            for age in AgeGroup::all() {
                for (k, year) in (opts.first_year..=opts.last_year).enumerate() {
                    if exp_grid[age.index() * n_years + k].is_nan() {
                        report.errors.push(InputError::Gap { age, year });
                    }
                }
            }
        }
    }

    if !report.is_clean() {
        return (None, report);
    }
    let ds = MortalityDataset {
        sex,
        first_year: opts.first_year,
        last_year: opts.last_year,
        deaths: death_grid,
        exposures: exp_grid,
    };
    (Some(ds), report)
}

fn parse_death_row(
    rec: &csv::StringRecord,
    file: &str,
    line: u64,
    coding: CauseCoding,
    sex: Sex,
    opts: LoadOptions,
) -> Result<Option<(AgeGroup, CauseGroup, i32, u64)>, InputError> {
    if rec.len() != 5 {
        return Err(schema(file, line, format!("expected 5 fields, found {}", rec.len())));
    }
    let row_sex: Sex = rec[0].parse().map_err(|e: String| schema(file, line, e))?;
    let year = parse_year(&rec[1], file, line, opts)?;
    let age: AgeGroup = rec[2].parse().map_err(|e: String| schema(file, line, e))?;
    let cause = match coding {
        CauseCoding::Group => rec[3].parse().map_err(|e: String| schema(file, line, e))?,
        CauseCoding::Icd10 => parse_cause_code(&rec[3]).map_err(|e| schema(file, line, e.to_string()))?,
    };
    let count = parse_count(&rec[4], file, line)?;
    Ok((row_sex == sex).then_some((age, cause, year, count)))
}

fn parse_exposure_row(
    rec: &csv::StringRecord,
    file: &str,
    line: u64,
    sex: Sex,
    opts: LoadOptions,
) -> Result<Option<(AgeGroup, i32, f64)>, InputError> {
    if rec.len() != 4 {
        return Err(schema(file, line, format!("expected 4 fields, found {}", rec.len())));
    }
    let row_sex: Sex = rec[0].parse().map_err(|e: String| schema(file, line, e))?;
    let year = parse_year(&rec[1], file, line, opts)?;
    let age: AgeGroup = rec[2].parse().map_err(|e: String| schema(file, line, e))?;
    let pop: f64 = rec[3]
        .parse()
        .map_err(|_| schema(file, line, format!("bad population {:?}", &rec[3])))?;
    if !(pop.is_finite() && pop > 0.0) {
        return Err(schema(file, line, format!("population must be positive, found {pop}")));
    }
    Ok((row_sex == sex).then_some((age, year, pop)))
}

fn parse_year(s: &str, file: &str, line: u64, opts: LoadOptions) -> Result<i32, InputError> {
    let year: i32 = s
        .parse()
        .map_err(|_| schema(file, line, format!("bad year {s:?}")))?;
    if year < opts.first_year || year > opts.last_year {
        return Err(InputError::Range {
            file: file.to_string(),
            line,
            year,
            first: opts.first_year,
            last: opts.last_year,
        });
    }
    Ok(year)
}

fn parse_count(s: &str, file: &str, line: u64) -> Result<u64, InputError> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v < 9.0e15 => Ok(v as u64),
        Ok(v) if v < 0.0 => Err(schema(file, line, format!("negative death count {s}"))),
        Ok(_) => Err(schema(file, line, format!("death count must be an integer, found {s}"))),
        Err(_) => Err(schema(file, line, format!("bad death count {s:?}"))),
    }
}

fn expect_header<R: Read>(
    rdr: &mut csv::Reader<R>,
    name: &str,
    expected: &[&str],
) -> Result<(), InputError> {
    let header = rdr.headers().map_err(|e| schema(name, 1, e.to_string()))?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(schema(
            name,
            1,
            format!(
                "expected header {}, found {}",
                expected.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    Ok(())
}

fn schema(file: &str, line: u64, message: String) -> InputError {
    InputError::Schema {
        file: file.to_string(),
        line,
        message,
    }
}

pub(crate) fn io_error(path: &Path, e: std::io::Error) -> InputError {
    InputError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Cause selector for [`observed_rate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CauseSel {
    Cause(CauseGroup),
    All,
}

/// Observed central rate `d / E` for one cause or all causes.
pub fn observed_rate(ds: &MortalityDataset, age: AgeGroup, cause: CauseSel, year: i32) -> f64 {
    let e = ds.exposure(age, year);
    match cause {
        CauseSel::Cause(c) => ds.deaths(age, c, year) as f64 / e,
        CauseSel::All => CauseGroup::ALL
            .iter()
            .map(|&c| ds.deaths(age, c, year) as f64 / e)
            .sum(),
    }
}

/// Weighted mean of `rates` under the standard population.
pub fn standardise(rates: &[f64; N_AGES], sp: &StandardPopulation) -> f64 {
    let num: f64 = rates.iter().zip(sp.weights()).map(|(m, w)| m * w).sum();
    num / sp.total()
}

/// Age-standardised all-cause rate from observed rates in `year`.
pub fn observed_asmr(ds: &MortalityDataset, sp: &StandardPopulation, year: i32) -> f64 {
    let mut rates = [0.0; N_AGES];
    for age in AgeGroup::all() {
        rates[age.index()] = observed_rate(ds, age, CauseSel::All, year);
    }
    standardise(&rates, sp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(first: i32, last: i32, f: impl Fn(AgeGroup, CauseGroup, i32) -> u64) -> MortalityDataset {
        let n = (last - first + 1) as usize;
        let mut deaths = Vec::new();
        for a in AgeGroup::all() {
            for c in CauseGroup::ALL {
                for y in first..=last {
                    deaths.push(f(a, c, y));
                }
            }
        }
        let exposures = vec![10_000.0; N_AGES * n];
        MortalityDataset::from_grids(Sex::Male, first, last, deaths, exposures).unwrap()
    }

    #[test]
    fn esp_weights_sum_to_hundred_thousand() {
        let sp = StandardPopulation::esp2013();
        assert_eq!(sp.total(), 100_000.0);
        assert_eq!(sp.weight(AgeGroup::OPEN), 2_500.0);
        assert_eq!(sp.weight(AgeGroup::new(0).unwrap()), 1_000.0);
    }

    #[test]
    fn simple_quotient() {
        let ds = tiny(2001, 2003, |a, c, _| if a.index() == 3 && c == CauseGroup::CIR { 50 } else { 0 });
        let a = AgeGroup::new(3).unwrap();
        assert_eq!(observed_rate(&ds, a, CauseSel::Cause(CauseGroup::CIR), 2002), 0.005);
        assert_eq!(observed_rate(&ds, a, CauseSel::Cause(CauseGroup::CAN), 2002), 0.0);
    }

    #[test]
    fn two_age_weighted_mean() {
        let mut w = [1e-300; N_AGES];
        w[0] = 1.0;
        w[1] = 3.0;
        let sp = StandardPopulation::new(w).unwrap();
        let mut rates = [0.0; N_AGES];
        rates[0] = 0.01;
        rates[1] = 0.02;
        assert!((standardise(&rates, &sp) - 0.0175).abs() < 1e-15);
    }

    #[test]
    fn equal_rates_give_that_rate() {
        let ds = tiny(2001, 2002, |_, c, _| if c == CauseGroup::RES { 37 } else { 0 });
        let asmr = observed_asmr(&ds, &StandardPopulation::esp2013(), 2001);
        assert!((asmr - 0.0037).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_weights() {
        let mut w = [1.0; N_AGES];
        w[4] = 0.0;
        assert!(StandardPopulation::new(w).is_err());
    }

    #[test]
    fn counts_must_be_integral() {
        assert!(parse_count("12", "f", 2).is_ok());
        assert_eq!(parse_count("12.0", "f", 2).unwrap(), 12);
        assert!(parse_count("12.5", "f", 2).is_err());
        assert!(parse_count("-1", "f", 2).is_err());
        assert!(parse_count("abc", "f", 2).is_err());
    }
}
