//! Published reference tables for England and Wales 2001-2018, bundled as CSV.

use serde::Deserialize;

use crate::domain::{cell_index, AgeGroup, CauseGroup, Sex, N_CELLS};
use crate::projection::WhoTrendTable;
use crate::regression::BreakKind;
use crate::surface::TrendGrid;

/// `sex,age_group,cause,beta1,beta1_significant,beta2,beta2_significant`
pub const PUBLISHED_TRENDS_CSV: &str = include_str!("../data/published_trends.csv");
/// `sex,age_group,cause,beta_who`
pub const WHO_TRENDS_CSV: &str = include_str!("../data/who_trends.csv");
/// `sex,measure,scenario,value,ci_low,ci_high,additional`
pub const PUBLISHED_IMPROVEMENTS_CSV: &str = include_str!("../data/published_improvements.csv");
/// `sex,measure,cause,percent`
pub const PUBLISHED_CONTRIBUTIONS_CSV: &str = include_str!("../data/published_contributions.csv");
/// `sex,epsilon,kind,bic`
pub const PUBLISHED_BIC_CSV: &str = include_str!("../data/published_bic.csv");

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct PublishedTrend {
    pub sex: Sex,
    pub age_group: AgeGroup,
    pub cause: CauseGroup,
    pub beta1: f64,
    pub beta1_significant: bool,
    pub beta2: f64,
    pub beta2_significant: bool,
}

/// Improvement measure of the published tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    /// `w` for log ASMR.
    Asmr,
    /// `v` at birth.
    Le0,
    /// `v` at 65.
    Le65,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct PublishedImprovement {
    pub sex: Sex,
    pub measure: Measure,
    /// `obs`, `all` or a cause code.
    pub scenario: String,
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Difference from the unadjusted value, when printed.
    pub additional: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct PublishedContribution {
    pub sex: Sex,
    pub measure: Measure,
    pub cause: CauseGroup,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct PublishedBic {
    pub sex: Sex,
    pub epsilon: Option<i32>,
    pub kind: BreakKind,
    pub bic: f64,
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Vec<T> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<Result<_, _>>()
        .expect("bundled table parses")
}

pub fn published_trends() -> Vec<PublishedTrend> {
    parse(PUBLISHED_TRENDS_CSV)
}

/// Published `(β₁, β₂)` for every cell of one sex.
pub fn published_trend_grid(sex: Sex) -> TrendGrid {
    let mut cells = vec![None; N_CELLS];
    for t in published_trends().into_iter().filter(|t| t.sex == sex) {
        cells[cell_index(t.age_group, t.cause)] = Some((t.beta1, t.beta2));
    }
    TrendGrid::new(sex, cells).expect("full grid")
}

pub fn who_trends(sex: Sex) -> WhoTrendTable {
    WhoTrendTable::from_csv_reader(WHO_TRENDS_CSV.as_bytes(), sex, "who_trends.csv").expect("bundled table parses")
}

pub fn published_improvements() -> Vec<PublishedImprovement> {
    parse(PUBLISHED_IMPROVEMENTS_CSV)
}

pub fn published_contributions() -> Vec<PublishedContribution> {
    parse(PUBLISHED_CONTRIBUTIONS_CSV)
}

pub fn published_bic() -> Vec<PublishedBic> {
    parse(PUBLISHED_BIC_CSV)
}
