//! The `mortslow` command line.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::bootstrap::{bootstrap_ci, BootstrapConfig, Statistic};
use crate::breakpoint::{asmr_series, select_breakpoint};
use crate::dataset::{load_dataset, validate_dataset, CauseCoding, LoadOptions, MortalityDataset, StandardPopulation};
use crate::domain::{Sex, BREAK_YEAR, FIRST_YEAR, LAST_YEAR};
use crate::error::{Error, InputError, ModelError};
use crate::format::sig6;
use crate::lifetable::{le_contributions, le_series, le_slope};
use crate::projection::{project_le_path, write_projection_csv, FutureScenario, WhoTrendTable, DEFAULT_HORIZON};
use crate::scenarios::{asmr_contributions, improvement_slope, scenario_asmr_series, ScenarioSpec, IMPROVEMENT_WINDOW};
use crate::surface::{fit_surface, FitSurface};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "MORTSLOW_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "mortslow", version, about = "Breakpoint mortality models, slowdown scenarios and projections")]
pub struct Cli {
    /// Plain `key = value` file; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub deaths: Option<PathBuf>,
    #[arg(long, global = true)]
    pub exposures: Option<PathBuf>,
    #[arg(long, global = true)]
    pub sex: Option<Sex>,
    /// Standard population CSV (default: bundled ESP 2013).
    #[arg(long, global = true)]
    pub std_pop: Option<PathBuf>,
    /// Deaths file carries raw ICD-10 codes in its cause column.
    #[arg(long, global = true)]
    pub icd10: bool,
    #[arg(long, global = true)]
    pub first_year: Option<i32>,
    #[arg(long, global = true)]
    pub last_year: Option<i32>,
    #[arg(long, global = true)]
    pub breakpoint: Option<i32>,
    /// Read cell fits from this JSON instead of fitting the data.
    #[arg(long, global = true)]
    pub fits: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Formats>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Formats {
    Csv,
    Json,
    Both,
}

impl Formats {
    fn csv(self) -> bool {
        self != Formats::Json
    }

    fn json(self) -> bool {
        self != Formats::Csv
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Measure {
    Asmr,
    Le,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the input files and report every problem found.
    Validate,
    /// Fit every (age, cause) cell and write the fits JSON.
    Fit,
    /// Search for the single breakpoint of the log ASMR trend.
    Breakpoint {
        #[arg(long, default_value_t = 2003)]
        grid_start: i32,
        #[arg(long, default_value_t = 2016)]
        grid_end: i32,
    },
    /// Scenario log ASMR series and its improvement rate.
    Asmr {
        #[arg(long, default_value = "unadjusted")]
        scenario: ScenarioSpec,
    },
    /// Scenario life expectancy series and its improvement rate.
    Le {
        #[arg(long, default_value_t = 0)]
        age: u32,
        #[arg(long, default_value = "unadjusted")]
        scenario: ScenarioSpec,
    },
    /// Cause contributions to the slowdown.
    Contrib {
        #[arg(long, value_enum, default_value = "asmr")]
        measure: Measure,
    },
    /// Parametric bootstrap of a statistic.
    Bootstrap {
        /// w, v:AGE, rho:CODE, phi:CODE:AGE, asmr:YEAR or le:AGE:YEAR
        #[arg(long)]
        stat: Statistic,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        level: Option<f64>,
        #[arg(long, default_value = "unadjusted")]
        scenario: ScenarioSpec,
    },
    /// Life expectancy paths under a future scenario.
    Project {
        /// 1, 2:CODE, 3, 4:z or 5
        #[arg(long)]
        fs: String,
        /// WHO trend CSV for scenario 5 (default: bundled table).
        #[arg(long)]
        who: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        age: u32,
        #[arg(long)]
        horizon_end: Option<i32>,
    },
}

/// Settings after merging flags, config file and environment.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub deaths: Option<PathBuf>,
    pub exposures: Option<PathBuf>,
    pub sex: Sex,
    pub std_pop: Option<PathBuf>,
    pub coding: CauseCoding,
    pub first_year: i32,
    pub last_year: i32,
    pub breakpoint: i32,
    pub fits: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub formats: Formats,
    pub bootstrap: BootstrapConfig,
}

fn config_error(path: &Path, line: usize, message: String) -> InputError {
    InputError::Schema {
        file: path.display().to_string(),
        line: line as u64,
        message,
    }
}

/// Parse a `key = value` file. Blank lines and `#` comments are ignored.
pub fn read_config_file(path: &Path) -> Result<HashMap<String, String>, InputError> {
    let text = std::fs::read_to_string(path).map_err(|e| crate::dataset::io_error(path, e))?;
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config_error(path, i + 1, format!("expected key = value, found {line:?}")))?;
        out.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(out)
}

impl RunConfig {
    pub fn resolve(cli: &Cli) -> Result<RunConfig, InputError> {
        let (file, base) = match &cli.config {
            Some(p) => (read_config_file(p)?, p.parent().map(Path::to_path_buf).unwrap_or_default()),
            None => (HashMap::new(), PathBuf::new()),
        };
        let cfg_path = cli.config.clone().unwrap_or_default();
        let get = |k: &str| file.get(k).map(String::as_str);
        let raw = |k: &str| get(k).map(str::to_string);
        fn typed<T: std::str::FromStr>(path: &Path, k: &str, v: Option<String>) -> Result<Option<T>, InputError> {
            v.map(|s| {
                s.parse::<T>()
                    .map_err(|_| config_error(path, 0, format!("bad value {s:?} for {k}")))
            })
            .transpose()
        }
        let path_of = |k: &str| get(k).map(|v| base.join(v));

        for key in file.keys() {
            const KNOWN: [&str; 14] = [
                "deaths", "exposures", "sex", "std_pop", "coding", "first_year", "last_year", "breakpoint",
                "fits", "out_dir", "format", "iterations", "seed", "level",
            ];
            if !KNOWN.contains(&key.as_str()) {
                return Err(config_error(&cfg_path, 0, format!("unknown key {key:?}")));
            }
        }

        let coding = if cli.icd10 {
            CauseCoding::Icd10
        } else {
            match get("coding") {
                None | Some("group") => CauseCoding::Group,
                Some("icd10") => CauseCoding::Icd10,
                Some(other) => return Err(config_error(&cfg_path, 0, format!("bad coding {other:?}"))),
            }
        };
        let formats = match cli.format {
            Some(f) => f,
            None => match get("format") {
                None | Some("both") => Formats::Both,
                Some("csv") => Formats::Csv,
                Some("json") => Formats::Json,
                Some(other) => return Err(config_error(&cfg_path, 0, format!("bad format {other:?}"))),
            },
        };
        let out_dir = cli
            .out_dir
            .clone()
            .or_else(|| path_of("out_dir"))
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        let defaults = BootstrapConfig::default();
        Ok(RunConfig {
            deaths: cli.deaths.clone().or_else(|| path_of("deaths")),
            exposures: cli.exposures.clone().or_else(|| path_of("exposures")),
            sex: match cli.sex {
                Some(s) => s,
                None => typed(&cfg_path, "sex", raw("sex"))?.unwrap_or(Sex::Male),
            },
            std_pop: cli.std_pop.clone().or_else(|| path_of("std_pop")),
            coding,
            first_year: cli.first_year.or(typed(&cfg_path, "first_year", raw("first_year"))?).unwrap_or(FIRST_YEAR),
            last_year: cli.last_year.or(typed(&cfg_path, "last_year", raw("last_year"))?).unwrap_or(LAST_YEAR),
            breakpoint: cli.breakpoint.or(typed(&cfg_path, "breakpoint", raw("breakpoint"))?).unwrap_or(BREAK_YEAR),
            fits: cli.fits.clone().or_else(|| path_of("fits")),
            out_dir,
            formats,
            bootstrap: BootstrapConfig {
                iterations: typed(&cfg_path, "iterations", raw("iterations"))?.unwrap_or(defaults.iterations),
                seed: typed(&cfg_path, "seed", raw("seed"))?.unwrap_or(defaults.seed),
                level: typed(&cfg_path, "level", raw("level"))?.unwrap_or(defaults.level),
                ..defaults
            },
        })
    }

    fn load_options(&self) -> LoadOptions {
        LoadOptions {
            first_year: self.first_year,
            last_year: self.last_year,
            coding: self.coding,
        }
    }

    fn data_paths(&self) -> Result<(&Path, &Path), InputError> {
        match (&self.deaths, &self.exposures) {
            (Some(d), Some(e)) => Ok((d, e)),
            _ => Err(InputError::Schema {
                file: "<config>".into(),
                line: 0,
                message: "both --deaths and --exposures are required".into(),
            }),
        }
    }

    fn dataset(&self) -> Result<MortalityDataset, InputError> {
        let (d, e) = self.data_paths()?;
        load_dataset(d, e, self.sex, self.load_options())
    }

    fn standard_population(&self) -> Result<StandardPopulation, InputError> {
        match &self.std_pop {
            Some(p) => StandardPopulation::load(p),
            None => Ok(StandardPopulation::esp2013()),
        }
    }

    /// Fits from `--fits` when given, otherwise fitted from the data.
    fn surface(&self) -> Result<FitSurface, Error> {
        match &self.fits {
            Some(p) => {
                let f = File::open(p).map_err(|e| crate::dataset::io_error(p, e))?;
                FitSurface::read_json(f, self.sex, &p.display().to_string())
            }
            None => Ok(fit_surface(&self.dataset()?, self.breakpoint)?),
        }
    }
}

struct Outputs<'a> {
    dir: &'a Path,
    written: Vec<String>,
}

impl Outputs<'_> {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>, InputError> {
        std::fs::create_dir_all(self.dir).map_err(|e| crate::dataset::io_error(self.dir, e))?;
        let path = self.dir.join(name);
        let f = File::create(&path).map_err(|e| crate::dataset::io_error(&path, e))?;
        self.written.push(path.display().to_string());
        Ok(BufWriter::new(f))
    }

    fn csv(&mut self, name: &str, write: impl FnOnce(&mut BufWriter<File>) -> csv::Result<()>) -> Result<(), InputError> {
        let mut w = self.create(name)?;
        write(&mut w).map_err(|e| write_error(name, e.to_string()))?;
        w.flush().map_err(|e| write_error(name, e.to_string()))
    }

    fn json(&mut self, name: &str, value: &serde_json::Value) -> Result<(), InputError> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| write_error(name, e.to_string()))?;
        writeln!(w).and_then(|_| w.flush()).map_err(|e| write_error(name, e.to_string()))
    }
}

fn write_error(name: &str, message: String) -> InputError {
    InputError::Io {
        path: name.into(),
        message,
    }
}

fn file_label(s: &str) -> String {
    s.replace(':', "-")
}

/// Run a parsed command line, printing a JSON summary on success.
pub fn run(cli: Cli) -> Result<serde_json::Value, Error> {
    let cfg = RunConfig::resolve(&cli)?;
    let sex = cfg.sex;
    let mut out = Outputs {
        dir: &cfg.out_dir,
        written: Vec::new(),
    };
    let mut summary = match &cli.command {
        Command::Validate => unreachable!("handled by main"),
        Command::Fit => {
            let surface = cfg.surface()?;
            let mut w = out.create(&format!("fits_{sex}.json"))?;
            surface
                .write_json(&mut w)
                .map_err(|e| write_error("fits", e.to_string()))?;
            w.flush().map_err(|e| write_error("fits", e.to_string()))?;
            let cells = surface.cells();
            json!({
                "cells": cells.len(),
                "zeroed": cells.iter().filter(|c| c.fit.zeroed).count(),
                "not_converged": cells.iter().filter(|c| !c.fit.converged).count(),
                "theta_capped": cells.iter().filter(|c| c.fit.theta_capped).count(),
            })
        }
        Command::Breakpoint { grid_start, grid_end } => {
            let ds = cfg.dataset()?;
            let series = asmr_series(&ds, &cfg.standard_population()?)?;
            let sel = select_breakpoint(&series.values, &series.years, *grid_start..=*grid_end)?;
            if cfg.formats.csv() {
                out.csv(&format!("bic_{sex}.csv"), |w| sel.write_csv(w))?;
            }
            let value = serde_json::to_value(&sel).expect("serialisable");
            if cfg.formats.json() {
                out.json(&format!("bic_{sex}.json"), &value)?;
            }
            json!({"best_epsilon": sel.best_epsilon, "best_kind": sel.best_kind, "best_bic": sel.best_bic})
        }
        Command::Asmr { scenario } => {
            let surface = cfg.surface()?;
            let sp = cfg.standard_population()?;
            let series = scenario_asmr_series(&surface, *scenario, &sp, surface.years())?;
            let w = improvement_slope(&series, IMPROVEMENT_WINDOW)?;
            let label = file_label(&scenario.to_string());
            if cfg.formats.csv() {
                out.csv(&format!("asmr_{label}_{sex}.csv"), |wr| series.write_csv(wr, "log_asmr"))?;
                out.csv(&format!("improvement_asmr_{label}_{sex}.csv"), |wr| {
                    let mut c = csv::Writer::from_writer(wr);
                    c.write_record(["scenario", "w", "ci_low", "ci_high"])?;
                    c.write_record([scenario.to_string(), sig6(w.slope), String::new(), String::new()])?;
                    c.flush()?;
                    Ok(())
                })?;
            }
            let value = json!({"scenario": scenario.to_string(), "series": series, "improvement": w});
            if cfg.formats.json() {
                out.json(&format!("asmr_{label}_{sex}.json"), &value)?;
            }
            json!({"scenario": scenario.to_string(), "w": w.slope})
        }
        Command::Le { age, scenario } => {
            let surface = cfg.surface()?;
            let series = le_series(&surface, *scenario, *age, surface.years())?;
            let v = le_slope(&series, IMPROVEMENT_WINDOW)?;
            let label = file_label(&scenario.to_string());
            if cfg.formats.csv() {
                out.csv(&format!("le_{age}_{label}_{sex}.csv"), |wr| {
                    let mut c = csv::Writer::from_writer(wr);
                    c.write_record(["year", "age_start", "scenario", "e_complete"])?;
                    for (y, e) in series.years.iter().zip(&series.values) {
                        c.write_record([y.to_string(), age.to_string(), scenario.to_string(), sig6(*e)])?;
                    }
                    c.flush()?;
                    Ok(())
                })?;
                out.csv(&format!("improvement_le_{age}_{label}_{sex}.csv"), |wr| {
                    let mut c = csv::Writer::from_writer(wr);
                    c.write_record(["scenario", "v", "ci_low", "ci_high"])?;
                    c.write_record([scenario.to_string(), sig6(v.slope), String::new(), String::new()])?;
                    c.flush()?;
                    Ok(())
                })?;
            }
            let value = json!({"scenario": scenario.to_string(), "age_start": age, "series": series, "improvement": v});
            if cfg.formats.json() {
                out.json(&format!("le_{age}_{label}_{sex}.json"), &value)?;
            }
            json!({"scenario": scenario.to_string(), "age_start": age, "v": v.slope})
        }
        Command::Contrib { measure } => {
            let surface = cfg.surface()?;
            match measure {
                Measure::Asmr => {
                    let t = asmr_contributions(&surface, &cfg.standard_population()?, IMPROVEMENT_WINDOW)?;
                    if cfg.formats.csv() {
                        out.csv(&format!("contrib_asmr_{sex}.csv"), |w| t.write_csv(w, "rho"))?;
                    }
                    let value = contribution_json(&t, "w", "rho");
                    if cfg.formats.json() {
                        out.json(&format!("contrib_asmr_{sex}.json"), &value)?;
                    }
                    value
                }
                Measure::Le => {
                    let birth = le_contributions(&surface, 0, IMPROVEMENT_WINDOW)?;
                    let old = le_contributions(&surface, 65, IMPROVEMENT_WINDOW)?;
                    if cfg.formats.csv() {
                        out.csv(&format!("contrib_le_{sex}.csv"), |wr| {
                            let mut c = csv::Writer::from_writer(wr);
                            c.write_record(["cause", "phi_birth", "phi_65"])?;
                            for ((k, _, p0), (_, _, p65)) in birth.by_cause.iter().zip(&old.by_cause) {
                                c.write_record([k.code().to_string(), sig6(*p0), sig6(*p65)])?;
                            }
                            c.flush()?;
                            Ok(())
                        })?;
                    }
                    let value = json!({
                        "birth": contribution_json(&birth, "v", "phi"),
                        "age_65": contribution_json(&old, "v", "phi"),
                    });
                    if cfg.formats.json() {
                        out.json(&format!("contrib_le_{sex}.json"), &value)?;
                    }
                    value
                }
            }
        }
        Command::Bootstrap {
            stat,
            iters,
            seed,
            level,
            scenario,
        } => {
            let ds = cfg.dataset()?;
            let surface = match &cfg.fits {
                Some(_) => cfg.surface()?,
                None => fit_surface(&ds, cfg.breakpoint)?,
            };
            let bc = BootstrapConfig {
                iterations: iters.unwrap_or(cfg.bootstrap.iterations),
                seed: seed.unwrap_or(cfg.bootstrap.seed),
                level: level.unwrap_or(cfg.bootstrap.level),
                scenario: *scenario,
                ..cfg.bootstrap.clone()
            };
            let r = bootstrap_ci(&surface, &ds.exposures(), &cfg.standard_population()?, *stat, &bc)?;
            let label = file_label(&r.statistic);
            if cfg.formats.csv() {
                out.csv(&format!("bootstrap_{label}_{sex}_replicates.csv"), |w| r.write_replicates_csv(w))?;
            }
            // The interval summary is always written; `--format` only governs the replicates table.
            let value = serde_json::to_value(&r).expect("serialisable");
            out.json(&format!("bootstrap_{label}_{sex}.json"), &value)?;
            value
        }
        Command::Project {
            fs,
            who,
            age,
            horizon_end,
        } => {
            let surface = cfg.surface()?;
            let table = if fs.trim_start_matches(['F', 'S', 'f', 's']).starts_with('5') {
                Some(match who {
                    Some(p) => WhoTrendTable::load(p, sex)?,
                    None => crate::fixtures::who_trends(sex),
                })
            } else {
                None
            };
            let scenario = FutureScenario::parse(fs, table).map_err(|m| {
                Error::Input(InputError::Schema {
                    file: "--fs".into(),
                    line: 0,
                    message: m,
                })
            })?;
            let horizon = *DEFAULT_HORIZON.start()..=horizon_end.unwrap_or(*DEFAULT_HORIZON.end());
            let path = project_le_path(&surface, &scenario, *age, horizon)?;
            let label = scenario.label();
            let paths = vec![(label.clone(), *age, path)];
            if cfg.formats.csv() {
                out.csv(&format!("projection_{}_{age}_{sex}.csv", file_label(&label)), |w| write_projection_csv(w, &paths))?;
            }
            let value = json!({"scenario": label, "age_start": age, "series": paths[0].2});
            if cfg.formats.json() {
                out.json(&format!("projection_{}_{age}_{sex}.json", file_label(&label)), &value)?;
            }
            value
        }
    };
    if let Some(obj) = summary.as_object_mut() {
        obj.insert("sex".into(), json!(sex));
        obj.insert("files".into(), json!(out.written));
    }
    Ok(summary)
}

fn contribution_json(t: &crate::scenarios::ContributionTable, value: &str, ratio: &str) -> serde_json::Value {
    let rows: Vec<_> = t
        .by_cause
        .iter()
        .map(|(c, v, r)| json!({"cause": c.code(), value: v, ratio: r}))
        .collect();
    json!({"obs": t.obs, "all": t.all, "causes": rows})
}

fn validate(cli: &Cli) -> Result<ExitCode, Error> {
    let cfg = RunConfig::resolve(cli)?;
    let (d, e) = cfg.data_paths()?;
    let report = validate_dataset(d, e, cfg.sex, cfg.load_options());
    println!("{} errors", report.errors.len());
    for err in &report.errors {
        println!("error: {err}");
    }
    if report.duplicate_merges > 0 {
        println!("warning: merged {} duplicate death rows", report.duplicate_merges);
    }
    Ok(if report.is_clean() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

/// Exit code for an error: 2 for input problems, 1 for computational ones.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Input(_) => 2,
        Error::Model(_) => 1,
    }
}

fn report_error(e: &Error) -> ExitCode {
    let code = exit_code(e);
    let detail = match e {
        Error::Model(ModelError::StatisticFailure { iteration, source }) => {
            json!({"iteration": iteration, "cause": source.kind()})
        }
        _ => serde_json::Value::Null,
    };
    eprintln!(
        "{}",
        json!({"error": e.kind(), "message": e.to_string(), "exit_code": code, "detail": detail})
    );
    ExitCode::from(code)
}

/// Entry point shared by the binary.
pub fn main_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if matches!(cli.command, Command::Validate) {
        return validate(&cli).unwrap_or_else(|e| report_error(&e));
    }
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => report_error(&e),
    }
}
