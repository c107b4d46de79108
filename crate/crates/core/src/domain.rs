//! Age bands, cause-of-death groups and sex.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::InputError;

/// First calendar year of the default observation window.
pub const FIRST_YEAR: i32 = 2001;
/// Last calendar year of the default observation window.
pub const LAST_YEAR: i32 = 2018;
/// Year of the trend break used by the cell models.
pub const BREAK_YEAR: i32 = 2011;

pub const N_AGES: usize = 19;
pub const N_CAUSES: usize = 12;
pub const N_CELLS: usize = N_AGES * N_CAUSES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sex {
    Male,
    Female,
}

impl Sex {
    pub const ALL: [Sex; 2] = [Sex::Male, Sex::Female];

    pub fn as_str(self) -> &'static str {
        match self {
            Sex::Male => "male",
            Sex::Female => "female",
        }
    }
}

impl fmt::Display for Sex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sex {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "male" | "m" | "males" => Ok(Sex::Male),
            "female" | "f" | "females" => Ok(Sex::Female),
            other => Err(format!("unknown sex {other:?}")),
        }
    }
}

const AGE_LABELS: [&str; N_AGES] = [
    "<1", "1-4", "5-9", "10-14", "15-19", "20-24", "25-29", "30-34", "35-39", "40-44", "45-49",
    "50-54", "55-59", "60-64", "65-69", "70-74", "75-79", "80-84", "85+",
];

/// One of the 19 contiguous age bands `<1, 1-4, 5-9, ..., 80-84, 85+`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgeGroup(u8);

impl AgeGroup {
    pub const OPEN: AgeGroup = AgeGroup(18);

    pub fn new(index: usize) -> Option<AgeGroup> {
        (index < N_AGES).then_some(AgeGroup(index as u8))
    }

    pub fn all() -> impl DoubleEndedIterator<Item = AgeGroup> + ExactSizeIterator + Clone {
        (0..N_AGES as u8).map(AgeGroup)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn label(self) -> &'static str {
        AGE_LABELS[self.index()]
    }

    pub fn lower_age(self) -> u32 {
        match self.0 {
            0 => 0,
            1 => 1,
            i => 5 * (i as u32 - 1),
        }
    }

    /// Band width in years; `None` for the open 85+ band.
    pub fn width(self) -> Option<u32> {
        match self.0 {
            0 => Some(1),
            1 => Some(4),
            18 => None,
            _ => Some(5),
        }
    }

    /// Band containing single year of age `age`.
    pub fn containing(age: u32) -> AgeGroup {
        match age {
            0 => AgeGroup(0),
            1..=4 => AgeGroup(1),
            a if a >= 85 => AgeGroup::OPEN,
            a => AgeGroup((a / 5 + 1) as u8),
        }
    }
}

impl fmt::Display for AgeGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for AgeGroup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let alias = match s {
            "0" | "<01" | "under 1" | "0-0" => "<1",
            "85-" | "85 and over" | "85plus" => "85+",
            other => other,
        };
        AGE_LABELS
            .iter()
            .position(|l| *l == alias)
            .map(|i| AgeGroup(i as u8))
            .ok_or_else(|| format!("unknown age group {s:?}"))
    }
}

impl Serialize for AgeGroup {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for AgeGroup {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Cause-of-death groups built from ICD-10 chapters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CauseGroup {
    CAN,
    CIR,
    DIG,
    END,
    EXT,
    GEN,
    INF,
    MEN,
    MUS,
    NER,
    RES,
    OTH,
}

/// Inclusive range of three-character ICD-10 categories, e.g. `C00..=D49`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IcdRange {
    pub first: (char, u8),
    pub last: (char, u8),
}

impl IcdRange {
    const fn new(a: char, lo: u8, b: char, hi: u8) -> IcdRange {
        IcdRange {
            first: (a, lo),
            last: (b, hi),
        }
    }

    pub fn contains(&self, letter: char, number: u8) -> bool {
        (letter, number) >= self.first && (letter, number) <= self.last
    }
}

impl fmt::Display for IcdRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{:02}-{}{:02}",
            self.first.0, self.first.1, self.last.0, self.last.1
        )
    }
}

// O00-O9A: the 9A suffix sorts after O99, so the range closes at O99.
const RANGES: [(CauseGroup, &[IcdRange]); N_CAUSES] = [
    (CauseGroup::CAN, &[IcdRange::new('C', 0, 'D', 49)]),
    (CauseGroup::CIR, &[IcdRange::new('I', 0, 'I', 99)]),
    (CauseGroup::DIG, &[IcdRange::new('K', 0, 'K', 95)]),
    (
        CauseGroup::END,
        &[IcdRange::new('D', 50, 'D', 89), IcdRange::new('E', 0, 'E', 89)],
    ),
    (CauseGroup::EXT, &[IcdRange::new('V', 0, 'Y', 99)]),
    (CauseGroup::GEN, &[IcdRange::new('N', 0, 'N', 99)]),
    (CauseGroup::INF, &[IcdRange::new('A', 0, 'B', 99)]),
    (CauseGroup::MEN, &[IcdRange::new('F', 1, 'F', 99)]),
    (
        CauseGroup::MUS,
        &[IcdRange::new('M', 0, 'M', 99), IcdRange::new('L', 0, 'L', 99)],
    ),
    (
        CauseGroup::NER,
        &[
            IcdRange::new('G', 0, 'G', 99),
            IcdRange::new('H', 0, 'H', 59),
            IcdRange::new('H', 60, 'H', 95),
        ],
    ),
    (CauseGroup::RES, &[IcdRange::new('J', 0, 'J', 99)]),
    (
        CauseGroup::OTH,
        &[
            IcdRange::new('O', 0, 'O', 99),
            IcdRange::new('P', 0, 'P', 96),
            IcdRange::new('Q', 0, 'Q', 99),
            IcdRange::new('R', 0, 'R', 99),
            IcdRange::new('S', 0, 'T', 88),
            IcdRange::new('Z', 0, 'Z', 99),
        ],
    ),
];

impl CauseGroup {
    pub const ALL: [CauseGroup; N_CAUSES] = [
        CauseGroup::CAN,
        CauseGroup::CIR,
        CauseGroup::DIG,
        CauseGroup::END,
        CauseGroup::EXT,
        CauseGroup::GEN,
        CauseGroup::INF,
        CauseGroup::MEN,
        CauseGroup::MUS,
        CauseGroup::NER,
        CauseGroup::RES,
        CauseGroup::OTH,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<CauseGroup> {
        Self::ALL.get(i).copied()
    }

    pub fn code(self) -> &'static str {
        match self {
            CauseGroup::CAN => "CAN",
            CauseGroup::CIR => "CIR",
            CauseGroup::DIG => "DIG",
            CauseGroup::END => "END",
            CauseGroup::EXT => "EXT",
            CauseGroup::GEN => "GEN",
            CauseGroup::INF => "INF",
            CauseGroup::MEN => "MEN",
            CauseGroup::MUS => "MUS",
            CauseGroup::NER => "NER",
            CauseGroup::RES => "RES",
            CauseGroup::OTH => "OTH",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CauseGroup::CAN => "Cancer",
            CauseGroup::CIR => "Circulatory",
            CauseGroup::DIG => "Digestive",
            CauseGroup::END => "Endocrine",
            CauseGroup::EXT => "External",
            CauseGroup::GEN => "Genitourinary",
            CauseGroup::INF => "Infectious",
            CauseGroup::MEN => "Mental",
            CauseGroup::MUS => "Musculoskeletal",
            CauseGroup::NER => "Nervous",
            CauseGroup::RES => "Respiratory",
            CauseGroup::OTH => "Other",
        }
    }

    pub fn icd10_ranges(self) -> &'static [IcdRange] {
        RANGES[self.index()].1
    }
}

impl fmt::Display for CauseGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for CauseGroup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        CauseGroup::ALL
            .iter()
            .copied()
            .find(|c| c.code().eq_ignore_ascii_case(s) || c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown cause group {s:?}"))
    }
}

/// Map an ICD-10 code such as `I25.1` or `C34` to its cause group.
pub fn parse_cause_code(icd10: &str) -> Result<CauseGroup, InputError> {
    let code = icd10.trim();
    let malformed = || InputError::MalformedCode(icd10.to_string());
    let mut chars = code.chars();
    let letter = chars
        .next()
        .filter(|c| c.is_ascii_alphabetic())
        .ok_or_else(malformed)?
        .to_ascii_uppercase();
    let digits: String = chars.by_ref().take(2).collect();
    if digits.len() != 2 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed());
    }
    let rest: String = chars.collect();
    if !rest.is_empty() {
        let suffix = rest.strip_prefix('.').unwrap_or(&rest);
        if suffix.is_empty() || suffix.len() > 4 || !suffix.chars().all(|c| c.is_ascii_alphanumeric()) {
            return Err(malformed());
        }
    }
    let number: u8 = digits.parse().map_err(|_| malformed())?;
    RANGES
        .iter()
        .find(|(_, ranges)| ranges.iter().any(|r| r.contains(letter, number)))
        .map(|(g, _)| *g)
        .ok_or_else(|| InputError::UnknownCode(icd10.to_string()))
}

/// Index of `(age, cause)` in the canonical cell order (age-major).
pub fn cell_index(age: AgeGroup, cause: CauseGroup) -> usize {
    age.index() * N_CAUSES + cause.index()
}

pub fn cells() -> impl Iterator<Item = (AgeGroup, CauseGroup)> + Clone {
    AgeGroup::all().flat_map(|a| CauseGroup::ALL.into_iter().map(move |c| (a, c)))
}
