//! Single-breakpoint search on the all-cause log ASMR trend.

use std::io::Write;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{observed_asmr, MortalityDataset, StandardPopulation};
use crate::error::ModelError;
use crate::format::sig6;
use crate::regression::{ols_fit, BreakKind, DesignSpec};
use crate::scenarios::Series;

pub const DEFAULT_GRID: RangeInclusive<i32> = 2003..=2016;

/// Natural log of the observed ASMR for every year of the dataset.
pub fn asmr_series(ds: &MortalityDataset, sp: &StandardPopulation) -> Result<Series, ModelError> {
    Series::from_fn(ds.years(), |year| {
        let a = observed_asmr(ds, sp, year);
        if a > 0.0 {
            Ok(a.ln())
        } else {
            Err(ModelError::DegenerateSeries { year })
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BicEntry {
    pub epsilon: Option<i32>,
    pub kind: BreakKind,
    pub bic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakpointSelection {
    pub best_epsilon: Option<i32>,
    pub best_kind: BreakKind,
    pub best_bic: f64,
    pub base_bic: f64,
    /// Break models in grid order, continuous before discontinuous at each year.
    pub bic_table: Vec<BicEntry>,
}

impl BreakpointSelection {
    pub fn get(&self, epsilon: i32, kind: BreakKind) -> Option<f64> {
        self.bic_table
            .iter()
            .find(|e| e.epsilon == Some(epsilon) && e.kind == kind)
            .map(|e| e.bic)
    }

    /// CSV `epsilon,kind,bic` with the no-break row first.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epsilon", "kind", "bic"])?;
        w.write_record(["", "none", &sig6(self.base_bic)])?;
        for e in &self.bic_table {
            let eps = e.epsilon.map(|y| y.to_string()).unwrap_or_default();
            w.write_record([eps.as_str(), e.kind.as_str(), &sig6(e.bic)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fit the no-break model and both break models at every grid year and pick
/// the lowest BIC. Ties go to no break, then the earliest year, then the
/// continuous model.
pub fn select_breakpoint(
    series: &[f64],
    years: &[i32],
    grid: RangeInclusive<i32>,
) -> Result<BreakpointSelection, ModelError> {
    if series.len() != years.len() || years.is_empty() {
        return Err(ModelError::InvalidInput("series and years must align".into()));
    }
    let first = years[0];
    let last = years[years.len() - 1];
    if grid.is_empty() || *grid.start() - first < 2 || last - *grid.end() + 1 < 2 {
        return Err(ModelError::InvalidInput(format!(
            "grid {}..={} must leave two years on each side of {first}..={last}",
            grid.start(),
            grid.end()
        )));
    }
    let t: Vec<f64> = years.iter().map(|&y| y as f64).collect();
    let base_bic = ols_fit(series, &t, &DesignSpec::no_break())?.bic;
    let specs: Vec<DesignSpec> = grid
        .flat_map(|eps| [DesignSpec::continuous(eps), DesignSpec::discontinuous(eps)])
        .collect();
    let bic_table = specs
        .par_iter()
        .map(|spec| {
            Ok(BicEntry {
                epsilon: spec.epsilon(),
                kind: spec.kind(),
                bic: ols_fit(series, &t, spec)?.bic,
            })
        })
        .collect::<Result<Vec<_>, ModelError>>()?;

    let mut best = BicEntry {
        epsilon: None,
        kind: BreakKind::None,
        bic: base_bic,
    };
    for e in &bic_table {
        if e.bic < best.bic {
            best = *e;
        }
    }
    Ok(BreakpointSelection {
        best_epsilon: best.epsilon,
        best_kind: best.kind,
        best_bic: best.bic,
        base_bic,
        bic_table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn years() -> Vec<i32> {
        (2001..=2018).collect()
    }

    fn kinked(eps: i32) -> Vec<f64> {
        years()
            .iter()
            .map(|&y| -4.5 - 0.028 * (y - 2001) as f64 + if y >= eps { 0.023 * (y - eps) as f64 } else { 0.0 })
            .collect()
    }

    #[test]
    fn exact_kink_found() {
        let s = select_breakpoint(&kinked(2011), &years(), DEFAULT_GRID).unwrap();
        assert_eq!((s.best_epsilon, s.best_kind), (Some(2011), BreakKind::Continuous));
        assert_eq!(s.bic_table.len(), 28);
    }

    #[test]
    fn line_prefers_no_break() {
        let y: Vec<f64> = years().iter().map(|&y| 1.0 - 0.01 * y as f64).collect();
        let s = select_breakpoint(&y, &years(), DEFAULT_GRID).unwrap();
        assert_eq!(s.best_kind, BreakKind::None);
        assert_eq!(s.best_epsilon, None);
    }

    #[test]
    fn shift_invariant() {
        let y: Vec<f64> = kinked(2009).iter().enumerate().map(|(i, v)| v + 0.003 * ((i * 5) % 7) as f64).collect();
        let shifted: Vec<f64> = y.iter().map(|v| v + 2.5).collect();
        let a = select_breakpoint(&y, &years(), DEFAULT_GRID).unwrap();
        let b = select_breakpoint(&shifted, &years(), DEFAULT_GRID).unwrap();
        assert_eq!((a.best_epsilon, a.best_kind), (b.best_epsilon, b.best_kind));
        for (x, z) in a.bic_table.iter().zip(&b.bic_table) {
            assert!((x.bic - z.bic).abs() < 1e-8);
        }
    }

    #[test]
    fn grid_must_leave_room() {
        assert!(select_breakpoint(&kinked(2011), &years(), 2002..=2016).is_err());
        assert!(select_breakpoint(&kinked(2011), &years(), 2003..=2018).is_err());
    }
}
