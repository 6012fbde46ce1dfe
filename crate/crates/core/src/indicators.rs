//! Field-normalized citation scores and grouped output/impact indicators.
//!
//! Reference cells are keyed by (subject category, publication year,
//! document type). A record with several categories contributes its full
//! citation count to each of its cells. The expected citation rate of a
//! multi-category record is the arithmetic mean of its cell means by
//! default; the mean of per-cell ratios is available as an alternative.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{DocType, PublicationRecord};
use crate::country::CountryCode;
use crate::funders::FundingCategory;
use crate::par::Execution;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IndicatorError {
    #[error("reference corpus is empty")]
    EmptyCorpus,
    #[error("record {record_id}: no reference cell for {category}/{year}")]
    MissingReferenceCell { record_id: String, category: String, year: i32 },
    #[error("record {record_id} has no subject category")]
    NoSubjectCategory { record_id: String },
    #[error("record {record_id}: expected citation rate is zero")]
    ZeroExpected { record_id: String },
    #[error("MNCS of an empty group is undefined")]
    EmptyGroup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiFieldRule {
    /// Expected = mean of cell means; ncs = citations / expected.
    #[default]
    MeanOfExpected,
    /// ncs = mean over cells of citations / cell mean.
    MeanOfRatios,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalizationOptions {
    /// Include the document type in reference cells.
    pub doc_type_cells: bool,
    pub multi_field: MultiFieldRule,
}

impl Default for NormalizationOptions {
    fn default() -> Self {
        Self {
            doc_type_cells: true,
            multi_field: MultiFieldRule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    pub category: String,
    pub year: i32,
    pub doc_type: Option<DocType>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CellTally {
    pub citations: u64,
    pub count: u64,
}

impl CellTally {
    pub fn mean(&self) -> f64 {
        self.citations as f64 / self.count as f64
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReferenceStats {
    cells: BTreeMap<CellKey, CellTally>,
    options: NormalizationOptions,
}

type Cells = BTreeMap<CellKey, CellTally>;

fn tally_into(cells: &mut Cells, record: &PublicationRecord, options: NormalizationOptions) {
    let doc_type = options.doc_type_cells.then_some(record.doc_type);
    for category in &record.subject_categories {
        let t = cells
            .entry(CellKey {
                category: category.clone(),
                year: record.pub_year,
                doc_type,
            })
            .or_default();
        t.citations += record.citation_count;
        t.count += 1;
    }
}

#[cfg(feature = "parallel")]
fn merge(mut a: Cells, b: Cells) -> Cells {
    for (k, t) in b {
        let e = a.entry(k).or_default();
        e.citations += t.citations;
        e.count += t.count;
    }
    a
}

impl ReferenceStats {
    pub fn cell(&self, key: &CellKey) -> Option<&CellTally> {
        self.cells.get(key)
    }

    pub fn cells(&self) -> impl Iterator<Item = (&CellKey, &CellTally)> {
        self.cells.iter()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn options(&self) -> NormalizationOptions {
        self.options
    }

    pub fn key_for(&self, record: &PublicationRecord, category: &str) -> CellKey {
        CellKey {
            category: category.to_string(),
            year: record.pub_year,
            doc_type: self.options.doc_type_cells.then_some(record.doc_type),
        }
    }
}

/// Builds per-cell citation means over the reference ("world") records.
/// Integer tallies make the parallel reduction exact.
pub fn compute_reference_stats(
    records: &[PublicationRecord],
    options: NormalizationOptions,
    execution: Execution,
) -> Result<ReferenceStats, IndicatorError> {
    if records.is_empty() {
        return Err(IndicatorError::EmptyCorpus);
    }
    let cells = match execution {
        Execution::Sequential => sequential_cells(records, options),
        Execution::Parallel => parallel_cells(records, options),
    };
    Ok(ReferenceStats { cells, options })
}

fn sequential_cells(records: &[PublicationRecord], options: NormalizationOptions) -> Cells {
    let mut acc = Cells::new();
    for r in records {
        tally_into(&mut acc, r, options);
    }
    acc
}

#[cfg(feature = "parallel")]
fn parallel_cells(records: &[PublicationRecord], options: NormalizationOptions) -> Cells {
    use rayon::prelude::*;
    records
        .par_iter()
        .fold(Cells::new, |mut acc, r| {
            tally_into(&mut acc, r, options);
            acc
        })
        .reduce(Cells::new, merge)
}

#[cfg(not(feature = "parallel"))]
fn parallel_cells(records: &[PublicationRecord], options: NormalizationOptions) -> Cells {
    sequential_cells(records, options)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedScore {
    pub record_id: String,
    pub raw_citations: u64,
    pub expected: f64,
    pub ncs: f64,
}

pub fn normalized_score(record: &PublicationRecord, stats: &ReferenceStats) -> Result<NormalizedScore, IndicatorError> {
    if record.subject_categories.is_empty() {
        return Err(IndicatorError::NoSubjectCategory {
            record_id: record.record_id.clone(),
        });
    }
    let mut means = Vec::with_capacity(record.subject_categories.len());
    for category in &record.subject_categories {
        let key = stats.key_for(record, category);
        let tally = stats.cell(&key).ok_or_else(|| IndicatorError::MissingReferenceCell {
            record_id: record.record_id.clone(),
            category: category.clone(),
            year: record.pub_year,
        })?;
        means.push(tally.mean());
    }
    let n = means.len() as f64;
    let mut sum = 0.0;
    for m in &means {
        sum += m;
    }
    let expected = sum / n;
    let zero = || IndicatorError::ZeroExpected {
        record_id: record.record_id.clone(),
    };
    if expected <= 0.0 {
        return Err(zero());
    }
    let citations = record.citation_count as f64;
    let ncs = match stats.options.multi_field {
        MultiFieldRule::MeanOfExpected => citations / expected,
        MultiFieldRule::MeanOfRatios => {
            if means.iter().any(|&m| m <= 0.0) {
                return Err(zero());
            }
            let mut acc = 0.0;
            for m in &means {
                acc += citations / m;
            }
            acc / n
        }
    };
    Ok(NormalizedScore {
        record_id: record.record_id.clone(),
        raw_citations: record.citation_count,
        expected,
        ncs,
    })
}

/// Mean normalized citation score; summation runs in input order.
pub fn mncs(scores: &[NormalizedScore]) -> Result<f64, IndicatorError> {
    mean_of(scores.iter().map(|s| s.ncs)).ok_or(IndicatorError::EmptyGroup)
}

fn mean_of(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0u64;
    for v in values {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

/// One publication counted for one focal country.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredEntry {
    pub record_id: String,
    pub country: CountryCode,
    pub year: i32,
    pub category: FundingCategory,
    /// `None` when the normalized score is undefined.
    pub ncs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndicatorRow {
    pub country: CountryCode,
    pub year: i32,
    pub category: FundingCategory,
    pub p: u64,
    pub mncs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TotalRow {
    pub country: CountryCode,
    pub year: i32,
    pub p: u64,
    pub mncs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryTotal {
    pub country: CountryCode,
    pub category: FundingCategory,
    pub p: u64,
    pub mncs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct IndicatorReport {
    /// Non-empty (country, year, category) cells, sorted.
    pub rows: Vec<IndicatorRow>,
    /// Per (country, year) over all categories.
    pub totals: Vec<TotalRow>,
    /// Per (country, category) over all years.
    pub category_totals: Vec<CategoryTotal>,
}

impl IndicatorReport {
    pub fn row(&self, country: CountryCode, year: i32, category: FundingCategory) -> Option<&IndicatorRow> {
        self.rows
            .iter()
            .find(|r| r.country == country && r.year == year && r.category == category)
    }

    pub fn total(&self, country: CountryCode, year: i32) -> Option<&TotalRow> {
        self.totals.iter().find(|r| r.country == country && r.year == year)
    }

    pub fn category_total(&self, country: CountryCode, category: FundingCategory) -> Option<&CategoryTotal> {
        self.category_totals
            .iter()
            .find(|r| r.country == country && r.category == category)
    }
}

#[derive(Default)]
struct Acc {
    p: u64,
    sum: f64,
    undefined: bool,
}

impl Acc {
    fn add(&mut self, ncs: Option<f64>) {
        self.p += 1;
        match ncs {
            Some(v) => self.sum += v,
            None => self.undefined = true,
        }
    }

    fn mncs(&self) -> Option<f64> {
        (self.p > 0 && !self.undefined).then(|| self.sum / self.p as f64)
    }
}

/// Groups scored entries into cells. Sums within a cell follow input order,
/// so the same input always yields bit-identical means.
pub fn aggregate(entries: &[ScoredEntry]) -> IndicatorReport {
    let mut cells: BTreeMap<(CountryCode, i32, FundingCategory), Acc> = BTreeMap::new();
    let mut totals: BTreeMap<(CountryCode, i32), Acc> = BTreeMap::new();
    let mut by_category: BTreeMap<(CountryCode, FundingCategory), Acc> = BTreeMap::new();
    for e in entries {
        cells.entry((e.country, e.year, e.category)).or_default().add(e.ncs);
        totals.entry((e.country, e.year)).or_default().add(e.ncs);
        by_category.entry((e.country, e.category)).or_default().add(e.ncs);
    }
    IndicatorReport {
        rows: cells
            .into_iter()
            .map(|((country, year, category), a)| IndicatorRow {
                country,
                year,
                category,
                p: a.p,
                mncs: a.mncs(),
            })
            .collect(),
        totals: totals
            .into_iter()
            .map(|((country, year), a)| TotalRow {
                country,
                year,
                p: a.p,
                mncs: a.mncs(),
            })
            .collect(),
        category_totals: by_category
            .into_iter()
            .map(|((country, category), a)| CategoryTotal {
                country,
                category,
                p: a.p,
                mncs: a.mncs(),
            })
            .collect(),
    }
}
