//! Per-cell fits for one sex and the fitted mortality surface they define.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::MortalityDataset;
use crate::domain::{cell_index, cells, AgeGroup, CauseGroup, Sex, BREAK_YEAR, N_CELLS};
use crate::error::{InputError, ModelError};
use crate::regression::{linear_predictor, nb_glm_fit, NbFit};

/// Fit of one (age, cause) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFit {
    pub age: AgeGroup,
    pub cause: CauseGroup,
    #[serde(flatten)]
    pub fit: NbFit,
}

impl CellFit {
    /// Fitted rate in `year`, 0 for zeroed cells.
    pub fn rate(&self, year: i32, breakpoint: i32) -> f64 {
        match self.fit.beta {
            Some(beta) if !self.fit.zeroed => {
                linear_predictor(&beta, year as f64, breakpoint as f64).exp()
            }
            _ => 0.0,
        }
    }
}

/// Complete grid of cell fits for one sex.
#[derive(Debug, Clone, PartialEq)]
pub struct FitSurface {
    sex: Sex,
    first_year: i32,
    last_year: i32,
    breakpoint: i32,
    cells: Vec<CellFit>,
}

impl FitSurface {
    /// Assemble from cell fits in any order; every cell must appear once and
    /// carry coefficients unless zeroed.
    pub fn new(
        sex: Sex,
        first_year: i32,
        last_year: i32,
        breakpoint: i32,
        fits: Vec<CellFit>,
    ) -> Result<FitSurface, ModelError> {
        if last_year < first_year {
            return Err(ModelError::InvalidInput(format!(
                "empty year span {first_year}..={last_year}"
            )));
        }
        let mut slots: Vec<Option<CellFit>> = vec![None; N_CELLS];
        for f in fits {
            if !f.fit.zeroed {
                let ok = f.fit.beta.is_some_and(|b| b.iter().all(|v| v.is_finite()))
                    && f.fit.theta.is_some_and(|t| t > 0.0);
                if !ok {
                    return Err(ModelError::MissingCoefficients {
                        age: f.age,
                        cause: f.cause,
                    });
                }
            }
            let i = cell_index(f.age, f.cause);
            if slots[i].is_some() {
                return Err(ModelError::InvalidInput(format!(
                    "cell {} {} appears twice",
                    f.age, f.cause
                )));
            }
            slots[i] = Some(f);
        }
        let mut cells_out = Vec::with_capacity(N_CELLS);
        for ((age, cause), slot) in cells().zip(slots) {
            cells_out.push(slot.ok_or(ModelError::MissingCoefficients { age, cause })?);
        }
        Ok(FitSurface {
            sex,
            first_year,
            last_year,
            breakpoint,
            cells: cells_out,
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

    pub fn breakpoint(&self) -> i32 {
        self.breakpoint
    }

    pub fn cell(&self, age: AgeGroup, cause: CauseGroup) -> &CellFit {
        &self.cells[cell_index(age, cause)]
    }

    pub fn cells(&self) -> &[CellFit] {
        &self.cells
    }

    /// Fitted cause-specific rate; extrapolates the post-break trend outside the fit span.
    pub fn fitted_rate(&self, age: AgeGroup, cause: CauseGroup, year: i32) -> f64 {
        self.cell(age, cause).rate(year, self.breakpoint)
    }

    /// Copy of the surface with the post-break trend change removed for the
    /// causes selected by `adjust`. The level shift is kept.
    pub fn without_trend_change(&self, adjust: impl Fn(CauseGroup) -> bool) -> FitSurface {
        let mut out = self.clone();
        for c in &mut out.cells {
            if adjust(c.cause) {
                if let Some(b) = c.fit.beta.as_mut() {
                    b[2] = 0.0;
                }
            }
        }
        out
    }

    /// Post-break trend parameters `(β₁, β₂)` per cell.
    pub fn trends(&self) -> TrendGrid {
        TrendGrid {
            sex: self.sex,
            cells: self
                .cells
                .iter()
                .map(|c| match (c.fit.zeroed, c.fit.beta) {
                    (false, Some(b)) => Some((b[1], b[2])),
                    _ => None,
                })
                .collect(),
        }
    }

    /// Write the fits as a JSON document.
    pub fn write_json<W: Write>(&self, out: W) -> serde_json::Result<()> {
        let doc = FitsDocument {
            first_year: self.first_year,
            last_year: self.last_year,
            breakpoint: self.breakpoint,
            fits: self
                .cells
                .iter()
                .map(|c| FitRecord {
                    sex: self.sex,
                    cell: c.clone(),
                })
                .collect(),
        };
        serde_json::to_writer_pretty(out, &doc)
    }

    /// Read the surface for `sex` from a fits document. A document may hold
    /// both sexes, or be a bare array of records (default years and break).
    pub fn read_json<R: Read>(reader: R, sex: Sex, name: &str) -> Result<FitSurface, crate::Error> {
        let value: serde_json::Value = serde_json::from_reader(reader).map_err(|e| schema(name, e))?;
        let doc: FitsDocument = if value.is_array() {
            FitsDocument {
                first_year: crate::domain::FIRST_YEAR,
                last_year: crate::domain::LAST_YEAR,
                breakpoint: BREAK_YEAR,
                fits: serde_json::from_value(value).map_err(|e| schema(name, e))?,
            }
        } else {
            serde_json::from_value(value).map_err(|e| schema(name, e))?
        };
        let cells = doc
            .fits
            .into_iter()
            .filter(|r| r.sex == sex)
            .map(|r| r.cell)
            .collect();
        Ok(FitSurface::new(sex, doc.first_year, doc.last_year, doc.breakpoint, cells)?)
    }
}

fn schema(name: &str, e: serde_json::Error) -> InputError {
    InputError::Schema {
        file: name.to_string(),
        line: e.line() as u64,
        message: e.to_string(),
    }
}

#[derive(Serialize, Deserialize)]
struct FitsDocument {
    first_year: i32,
    last_year: i32,
    breakpoint: i32,
    fits: Vec<FitRecord>,
}

#[derive(Serialize, Deserialize)]
struct FitRecord {
    sex: Sex,
    #[serde(flatten)]
    cell: CellFit,
}

/// Fit every (age, cause) cell of a dataset in parallel.
pub fn fit_surface(ds: &MortalityDataset, breakpoint: i32) -> Result<FitSurface, ModelError> {
    let years: Vec<f64> = ds.years().map(|y| y as f64).collect();
    let all: Vec<(AgeGroup, CauseGroup)> = cells().collect();
    let fits = all
        .par_iter()
        .map(|&(age, cause)| {
            let counts = ds.cell_deaths(age, cause);
            let fit = nb_glm_fit(counts, ds.age_exposures(age), &years, breakpoint as f64)?;
            Ok(CellFit { age, cause, fit })
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    FitSurface::new(ds.sex(), ds.first_year(), ds.last_year(), breakpoint, fits)
}

/// Pre- and post-break slope parameters per cell, without intercepts.
/// `None` marks a zeroed cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendGrid {
    sex: Sex,
    cells: Vec<Option<(f64, f64)>>,
}

impl TrendGrid {
    pub fn new(sex: Sex, cells: Vec<Option<(f64, f64)>>) -> Result<TrendGrid, ModelError> {
        if cells.len() != N_CELLS {
            return Err(ModelError::InvalidInput(format!(
                "trend grid needs {N_CELLS} cells, got {}",
                cells.len()
            )));
        }
        Ok(TrendGrid { sex, cells })
    }

    pub fn sex(&self) -> Sex {
        self.sex
    }

    /// `(β₁, β₂)` or `None` when the cell is zeroed.
    pub fn get(&self, age: AgeGroup, cause: CauseGroup) -> Option<(f64, f64)> {
        self.cells[cell_index(age, cause)]
    }
}
