//! Cause-specific mortality trend models with a single structural break,
//! counterfactual slowdown scenarios, period life tables, a parametric
//! bootstrap and deterministic future projections.

pub mod bootstrap;
pub mod breakpoint;
pub mod cli;
pub mod dataset;
pub mod domain;
pub mod error;
pub mod fixtures;
pub mod format;
pub mod lifetable;
pub mod projection;
pub mod regression;
pub mod scenarios;
pub mod special;
pub mod surface;
pub mod synthetic;

pub use dataset::{load_dataset, observed_asmr, observed_rate, CauseSel, Exposures, MortalityDataset, StandardPopulation};
pub use domain::{parse_cause_code, AgeGroup, CauseGroup, Sex};
pub use error::{Error, InputError, ModelError, Result};
pub use scenarios::ScenarioSpec;
pub use surface::{fit_surface, CellFit, FitSurface, TrendGrid};
