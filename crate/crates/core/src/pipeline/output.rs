use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::country::CountryCode;
use crate::funders::{FunderClass, FundingCategory};
use crate::indicators::{IndicatorReport, ScoredEntry};
use crate::matcher::{MatchSpan, MatchedPublication};

use super::config::Period;
use super::PipelineError;

pub const MATCHES_FILE: &str = "matches.jsonl";
pub const CLASSIFICATIONS_FILE: &str = "classifications.jsonl";
pub const INDICATORS_FILE: &str = "indicators.csv";
pub const PLOT_FILE: &str = "plot_data.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchLine {
    pub record_id: String,
    pub disease_ids: Vec<String>,
    pub spans: Vec<MatchSpan>,
}

impl From<&MatchedPublication<'_>> for MatchLine {
    fn from(m: &MatchedPublication<'_>) -> Self {
        Self {
            record_id: m.record.record_id.clone(),
            disease_ids: m.disease_ids.iter().cloned().collect(),
            spans: m.spans.clone(),
        }
    }
}

/// One publication seen from one focal country.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub record_id: String,
    pub focal_country: CountryCode,
    pub year: i32,
    pub category: FundingCategory,
    pub ncs: Option<f64>,
    pub classes: Vec<FunderClass>,
}

impl Classification {
    pub fn entry(&self) -> ScoredEntry {
        ScoredEntry {
            record_id: self.record_id.clone(),
            country: self.focal_country,
            year: self.year,
            category: self.category,
            ncs: self.ncs,
        }
    }
}

pub fn to_jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(&item).expect("serializable line"));
        out.push('\n');
    }
    out
}

pub fn parse_classifications(jsonl: &str) -> Result<Vec<Classification>, String> {
    jsonl
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("line {}: {e}", i + 1)))
        .collect()
}

fn fixed(x: f64) -> String {
    format!("{x:.6}")
}

pub fn indicators_csv(report: &IndicatorReport) -> String {
    let mut out = String::from("country,year,category,p,mncs\n");
    for r in &report.rows {
        let mncs = r.mncs.map(fixed).unwrap_or_default();
        out.push_str(&format!("{},{},{},{},{}\n", r.country, r.year, r.category, r.p, mncs));
    }
    out
}

fn raw(text: String) -> Box<RawValue> {
    RawValue::from_string(text).expect("valid JSON number")
}

fn raw_opt(x: Option<f64>) -> Box<RawValue> {
    raw(x.map(fixed).unwrap_or_else(|| "null".into()))
}

#[derive(Serialize)]
struct YearP {
    year: i32,
    p: u64,
}

#[derive(Serialize)]
struct YearMncs {
    year: i32,
    mncs: Box<RawValue>,
}

#[derive(Serialize)]
struct Share {
    category: FundingCategory,
    p: u64,
    share: Box<RawValue>,
}

#[derive(Serialize)]
struct CategorySeries {
    category: FundingCategory,
    output: Vec<YearP>,
    impact: Vec<YearMncs>,
}

#[derive(Serialize)]
struct CountryPlot {
    country: CountryCode,
    output: Vec<YearP>,
    category_shares: Vec<Share>,
    impact: Vec<YearMncs>,
    by_category: Vec<CategorySeries>,
}

#[derive(Serialize)]
struct PlotData<'a> {
    period: &'a Period,
    categories: &'a [FundingCategory],
    countries: Vec<CountryPlot>,
}

/// Plot-ready series for every focal country and every year of the period,
/// with zero output and null impact where a cell is empty.
pub fn plot_data_json(report: &IndicatorReport, period: &Period, focal: &BTreeSet<CountryCode>) -> String {
    let countries = focal
        .iter()
        .map(|&country| {
            let output = period
                .years()
                .map(|year| YearP {
                    year,
                    p: report.total(country, year).map_or(0, |t| t.p),
                })
                .collect();
            let impact = period
                .years()
                .map(|year| YearMncs {
                    year,
                    mncs: raw_opt(report.total(country, year).and_then(|t| t.mncs)),
                })
                .collect();
            let all: u64 = period.years().map(|y| report.total(country, y).map_or(0, |t| t.p)).sum();
            let category_shares = FundingCategory::ALL
                .iter()
                .map(|&category| {
                    let p = report.category_total(country, category).map_or(0, |c| c.p);
                    let share = (all > 0).then(|| p as f64 / all as f64);
                    Share {
                        category,
                        p,
                        share: raw_opt(share),
                    }
                })
                .collect();
            let by_category = FundingCategory::ALL
                .iter()
                .map(|&category| CategorySeries {
                    category,
                    output: period
                        .years()
                        .map(|year| YearP {
                            year,
                            p: report.row(country, year, category).map_or(0, |r| r.p),
                        })
                        .collect(),
                    impact: period
                        .years()
                        .map(|year| YearMncs {
                            year,
                            mncs: raw_opt(report.row(country, year, category).and_then(|r| r.mncs)),
                        })
                        .collect(),
                })
                .collect();
            CountryPlot {
                country,
                output,
                category_shares,
                impact,
                by_category,
            }
        })
        .collect();
    let plot = PlotData {
        period,
        categories: &FundingCategory::ALL,
        countries,
    };
    let mut s = serde_json::to_string_pretty(&plot).expect("plot data serializes");
    s.push('\n');
    s
}

/// Publication counts per (country, year): matched, and per category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionRow {
    pub country: CountryCode,
    pub year: i32,
    pub matched: u64,
    pub categories: BTreeMap<FundingCategory, u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub loaded: usize,
    pub reference: usize,
    pub reference_cells: usize,
    pub filtered: usize,
    pub effective_terms: usize,
    pub matched: usize,
    pub classified: usize,
    pub undefined_ncs: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: serde_json::Value,
    counts: &'a StageCounts,
    partition: &'a [PartitionRow],
    outputs: [&'static str; 4],
}

pub fn manifest_json(config: serde_json::Value, counts: &StageCounts, partition: &[PartitionRow]) -> String {
    let m = Manifest {
        tool: "fundscape",
        version: env!("CARGO_PKG_VERSION"),
        config,
        counts,
        partition,
        outputs: [MATCHES_FILE, CLASSIFICATIONS_FILE, INDICATORS_FILE, PLOT_FILE],
    };
    let mut s = serde_json::to_string_pretty(&m).expect("manifest serializes");
    s.push('\n');
    s
}

/// Writes every file to a temporary sibling first and renames only once all
/// writes succeeded, so a failed run leaves no partial outputs behind.
pub fn write_atomically(dir: &Path, files: &[(&str, &str)]) -> Result<Vec<PathBuf>, PipelineError> {
    let io_err = |path: &Path, source| PipelineError::Output {
        path: path.to_path_buf(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut staged = Vec::with_capacity(files.len());
    for (name, content) in files {
        let target = dir.join(name);
        let mut tmp = tempfile::Builder::new()
            .prefix(&format!(".{name}."))
            .tempfile_in(dir)
            .map_err(|e| io_err(&target, e))?;
        tmp.write_all(content.as_bytes()).map_err(|e| io_err(&target, e))?;
        tmp.as_file().sync_all().map_err(|e| io_err(&target, e))?;
        staged.push((tmp, target));
    }
    let mut written = Vec::with_capacity(staged.len());
    for (tmp, target) in staged {
        tmp.persist(&target).map_err(|e| io_err(&target, e.error))?;
        written.push(target);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indicators::aggregate;

    fn cc(s: &str) -> CountryCode {
        s.parse().unwrap()
    }

    #[test]
    fn csv_formats_fixed_and_null() {
        let entries = vec![
            ScoredEntry {
                record_id: "a".into(),
                country: cc("FR"),
                year: 2010,
                category: FundingCategory::European,
                ncs: Some(1.0 / 3.0),
            },
            ScoredEntry {
                record_id: "b".into(),
                country: cc("FR"),
                year: 2010,
                category: FundingCategory::NonFunded,
                ncs: None,
            },
        ];
        let csv = indicators_csv(&aggregate(&entries));
        assert_eq!(
            csv,
            "country,year,category,p,mncs\nFR,2010,european,1,0.333333\nFR,2010,non_funded,1,\n"
        );
    }

    #[test]
    fn plot_fills_every_year_and_category() {
        let period = Period {
            start_year: 2009,
            end_year: 2011,
        };
        let focal: BTreeSet<_> = [cc("GB"), cc("ES")].into();
        let json = plot_data_json(&IndicatorReport::default(), &period, &focal);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let countries = v["countries"].as_array().unwrap();
        assert_eq!(countries[0]["country"], "ES");
        assert_eq!(countries[0]["output"].as_array().unwrap().len(), 3);
        assert_eq!(countries[0]["by_category"].as_array().unwrap().len(), 5);
        assert!(countries[1]["impact"][0]["mncs"].is_null());
    }

    #[test]
    fn atomic_write_replaces_files() {
        let dir = tempfile::tempdir().unwrap();
        write_atomically(dir.path(), &[("a.txt", "one")]).unwrap();
        write_atomically(dir.path(), &[("a.txt", "two"), ("b.txt", "x")]).unwrap();
        assert_eq!(std::fs::read_to_string(dir.path().join("a.txt")).unwrap(), "two");
        let names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 2);
    }
}
