//! End-to-end orchestration: load, filter, match, classify, score, aggregate
//! and write the run artifacts.

mod config;
mod output;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use crate::country::CountryCode;
use crate::corpus::{
    filter_corpus, load_category_whitelist, load_corpus, Corpus, CorpusError, CorpusFilter, DocType, IngestionOptions,
    PublicationRecord,
};
use crate::funders::{
    assign_funding_category, classify_mentions, load_funder_registry, parse_funding_text, FunderRegistry,
    RegistryError,
};
use crate::indicators::{aggregate, compute_reference_stats, normalized_score, IndicatorError, ReferenceStats};
use crate::lexicon::{effective_terms, load_lexicon, DiseaseLexicon, LexiconError};
use crate::matcher::{compile_matcher, tag_records, Matcher, MatcherError};
use crate::par::{map_ordered, with_workers, Execution};

pub use config::{Period, PipelineConfig};
pub use output::{
    indicators_csv, manifest_json, parse_classifications, plot_data_json, to_jsonl, write_atomically, Classification,
    MatchLine, PartitionRow, StageCounts, CLASSIFICATIONS_FILE, INDICATORS_FILE, MANIFEST_FILE, MATCHES_FILE,
    PLOT_FILE,
};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{0}")]
    Config(String),
    #[error("no {0} path configured")]
    MissingPath(&'static str),
    #[error("{0}")]
    Corpus(CorpusError),
    #[error("{0}")]
    Reference(CorpusError),
    #[error("{0}")]
    Whitelist(CorpusError),
    #[error("{path}: {source}")]
    Lexicon {
        path: PathBuf,
        #[source]
        source: LexiconError,
    },
    #[error(transparent)]
    Matcher(#[from] MatcherError),
    #[error("{path}: {source}")]
    Funders {
        path: PathBuf,
        #[source]
        source: RegistryError,
    },
    #[error(transparent)]
    Indicators(#[from] IndicatorError),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    pub fn stage(&self) -> &'static str {
        match self {
            PipelineError::Config(_) => "config",
            PipelineError::MissingPath(stage) => stage,
            PipelineError::Corpus(_) => "corpus",
            PipelineError::Reference(_) => "reference",
            PipelineError::Whitelist(_) => "whitelist",
            PipelineError::Lexicon { .. } => "lexicon",
            PipelineError::Matcher(_) => "matcher",
            PipelineError::Funders { .. } => "funders",
            PipelineError::Indicators(_) => "indicators",
            PipelineError::Output { .. } => "output",
        }
    }

    /// True when the failure is about the inputs rather than the run itself.
    pub fn is_validation(&self) -> bool {
        !matches!(self, PipelineError::Output { .. } | PipelineError::Indicators(_))
    }
}

/// A problem found by [`validate_inputs`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub stage: &'static str,
    pub path: Option<PathBuf>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.path {
            Some(p) => write!(f, "stage={} path={} {}", self.stage, p.display(), self.message),
            None => write!(f, "stage={} {}", self.stage, self.message),
        }
    }
}

impl From<&PipelineError> for Diagnostic {
    fn from(e: &PipelineError) -> Self {
        let path = match e {
            PipelineError::Corpus(c) | PipelineError::Reference(c) | PipelineError::Whitelist(c) => match c {
                CorpusError::Io { path, .. } => Some(path.clone()),
                _ => None,
            },
            PipelineError::Lexicon { path, .. } | PipelineError::Funders { path, .. } => Some(path.clone()),
            PipelineError::Output { path, .. } => Some(path.clone()),
            _ => None,
        };
        Diagnostic {
            stage: e.stage(),
            path,
            message: e.to_string(),
        }
    }
}

fn required<'a>(path: &'a Option<PathBuf>, stage: &'static str) -> Result<&'a Path, PipelineError> {
    path.as_deref().ok_or(PipelineError::MissingPath(stage))
}

fn ingestion(config: &PipelineConfig) -> IngestionOptions {
    IngestionOptions {
        census_year: config.census_year,
        ..Default::default()
    }
}

pub fn check_config(config: &PipelineConfig) -> Result<(), PipelineError> {
    match config.problems().into_iter().next() {
        Some(p) => Err(PipelineError::Config(p)),
        None => Ok(()),
    }
}

pub fn load_corpus_stage(config: &PipelineConfig) -> Result<Corpus, PipelineError> {
    let path = required(&config.corpus, "corpus")?;
    let corpus = load_corpus(path, &ingestion(config)).map_err(PipelineError::Corpus)?;
    log::info!(
        "stage=load records={} census_year={}",
        corpus.records.len(),
        corpus.census_year
    );
    Ok(corpus)
}

/// The reference corpus, or `None` when the loaded corpus serves as one.
pub fn load_reference_stage(config: &PipelineConfig) -> Result<Option<Corpus>, PipelineError> {
    match &config.reference_corpus {
        Some(path) => load_corpus(path, &ingestion(config))
            .map(Some)
            .map_err(PipelineError::Reference),
        None => Ok(None),
    }
}

pub fn load_whitelist_stage(config: &PipelineConfig) -> Result<Option<BTreeSet<String>>, PipelineError> {
    config
        .category_whitelist
        .as_deref()
        .map(load_category_whitelist)
        .transpose()
        .map_err(PipelineError::Whitelist)
}

pub fn load_lexicon_stage(config: &PipelineConfig) -> Result<DiseaseLexicon, PipelineError> {
    let path = required(&config.lexicon, "lexicon")?;
    load_lexicon(path)
        .map(|l| l.with_policy(config.match_policy))
        .map_err(|source| PipelineError::Lexicon {
            path: path.to_path_buf(),
            source,
        })
}

pub fn load_funders_stage(config: &PipelineConfig) -> Result<FunderRegistry, PipelineError> {
    let path = required(&config.funders, "funders")?;
    load_funder_registry(path).map_err(|source| PipelineError::Funders {
        path: path.to_path_buf(),
        source,
    })
}

pub fn build_matcher(config: &PipelineConfig, lexicon: &DiseaseLexicon) -> Result<(Matcher, usize), PipelineError> {
    let terms = effective_terms(lexicon);
    let n = terms.len();
    let matcher = compile_matcher(terms, config.matcher)?;
    log::info!("stage=lexicon effective_terms={n} patterns={}", matcher.pattern_count());
    Ok((matcher, n))
}

pub fn corpus_filter(config: &PipelineConfig, whitelist: Option<BTreeSet<String>>) -> CorpusFilter {
    CorpusFilter {
        years: Some((config.period.start_year, config.period.end_year)),
        countries: Some(config.focal_set()),
        subject_category_whitelist: whitelist,
        doc_types: Some([DocType::Article, DocType::Review].into()),
    }
}

/// Everything a run reads from disk.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub corpus: Corpus,
    pub reference: Option<Corpus>,
    pub whitelist: Option<BTreeSet<String>>,
    /// Without a lexicon every filtered record counts as matched.
    pub lexicon: Option<DiseaseLexicon>,
    pub funders: Option<FunderRegistry>,
}

impl Inputs {
    pub fn load(config: &PipelineConfig, lexicon: bool, funders: bool) -> Result<Self, PipelineError> {
        check_config(config)?;
        let corpus = load_corpus_stage(config)?;
        let reference = load_reference_stage(config)?;
        let whitelist = load_whitelist_stage(config)?;
        let lexicon = if lexicon { Some(load_lexicon_stage(config)?) } else { None };
        let funders = if funders { Some(load_funders_stage(config)?) } else { None };
        Ok(Self {
            corpus,
            reference,
            whitelist,
            lexicon,
            funders,
        })
    }

    pub fn reference_records(&self) -> &[PublicationRecord] {
        &self.reference.as_ref().unwrap_or(&self.corpus).records
    }
}

/// In-memory artifacts of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub matches: Vec<MatchLine>,
    pub classifications: Vec<Classification>,
    pub counts: StageCounts,
    pub partition: Vec<PartitionRow>,
    pub indicators_csv: String,
    pub plot_json: String,
}

impl Artifacts {
    pub fn matches_jsonl(&self) -> String {
        to_jsonl(&self.matches)
    }

    pub fn classifications_jsonl(&self) -> String {
        to_jsonl(&self.classifications)
    }
}

/// Runs the match stage only, over filtered records sorted by id.
pub fn match_stage(config: &PipelineConfig, inputs: &Inputs) -> Result<(Vec<MatchLine>, StageCounts), PipelineError> {
    let filtered = filtered(config, inputs)?;
    let lexicon = inputs
        .lexicon
        .as_ref()
        .ok_or_else(|| PipelineError::Config("no lexicon loaded".into()))?;
    let (matcher, n_terms) = build_matcher(config, lexicon)?;
    let execution = Execution::for_workers(config.workers);
    let matched = with_workers(config.workers, || tag_records(&filtered.records, &matcher, execution));
    let counts = StageCounts {
        loaded: inputs.corpus.records.len(),
        filtered: filtered.records.len(),
        effective_terms: n_terms,
        matched: matched.len(),
        ..Default::default()
    };
    log::info!("stage=match filtered={} matched={}", counts.filtered, counts.matched);
    Ok((matched.iter().map(MatchLine::from).collect(), counts))
}

fn filtered(config: &PipelineConfig, inputs: &Inputs) -> Result<Corpus, PipelineError> {
    let mut out = filter_corpus(&inputs.corpus, &corpus_filter(config, inputs.whitelist.clone()))
        .map_err(PipelineError::Whitelist)?;
    out.records.sort_by(|a, b| a.record_id.cmp(&b.record_id));
    log::info!("stage=filter kept={} of={}", out.records.len(), inputs.corpus.records.len());
    Ok(out)
}

fn classify_record(
    record: &PublicationRecord,
    config: &PipelineConfig,
    focal: &BTreeSet<CountryCode>,
    registry: &FunderRegistry,
    stats: &ReferenceStats,
) -> Vec<Classification> {
    let ncs = match normalized_score(record, stats) {
        Ok(s) => Some(s.ncs),
        Err(e) => {
            log::warn!("stage=score record={} undefined: {e}", record.record_id);
            None
        }
    };
    let parsed;
    let mentions = if !record.funder_mentions.is_empty() {
        &record.funder_mentions
    } else {
        parsed = record.fa_raw_text.as_deref().map(parse_funding_text).unwrap_or_default();
        &parsed
    };
    record
        .countries
        .intersection(focal)
        .map(|&country| {
            let classes = classify_mentions(mentions, registry, country, config.classify_options());
            Classification {
                record_id: record.record_id.clone(),
                focal_country: country,
                year: record.pub_year,
                category: assign_funding_category(&classes, record.fa_present),
                ncs,
                classes,
            }
        })
        .collect()
}

/// Runs every stage in memory.
pub fn execute(config: &PipelineConfig, inputs: &Inputs) -> Result<Artifacts, PipelineError> {
    check_config(config)?;
    let registry = inputs
        .funders
        .as_ref()
        .ok_or_else(|| PipelineError::Config("no funder registry loaded".into()))?;
    let execution = Execution::for_workers(config.workers);
    with_workers(config.workers, || {
        let filtered = filtered(config, inputs)?;
        let (records, matches, n_terms): (Vec<&PublicationRecord>, Vec<MatchLine>, usize) = match &inputs.lexicon {
            Some(lexicon) => {
                let (matcher, n) = build_matcher(config, lexicon)?;
                let matched = tag_records(&filtered.records, &matcher, execution);
                let lines = matched.iter().map(MatchLine::from).collect();
                (matched.iter().map(|m| m.record).collect(), lines, n)
            }
            None => (filtered.records.iter().collect(), Vec::new(), 0),
        };
        log::info!("stage=match filtered={} matched={}", filtered.records.len(), records.len());

        let reference = inputs.reference_records();
        let stats = compute_reference_stats(reference, config.normalization, execution)?;
        log::info!("stage=reference records={} cells={}", reference.len(), stats.len());

        let focal = config.focal_set();
        let classifications: Vec<Classification> = map_ordered(&records, execution, |r| {
            classify_record(r, config, &focal, registry, &stats)
        })
        .into_iter()
        .flatten()
        .collect();
        let undefined = classifications.iter().filter(|c| c.ncs.is_none()).count();
        log::info!("stage=classify entries={} undefined_ncs={undefined}", classifications.len());

        let entries: Vec<_> = classifications.iter().map(Classification::entry).collect();
        let report = aggregate(&entries);
        log::info!("stage=aggregate cells={}", report.rows.len());

        let mut partition: BTreeMap<(CountryCode, i32), PartitionRow> = BTreeMap::new();
        for r in &records {
            for &country in r.countries.intersection(&focal) {
                partition
                    .entry((country, r.pub_year))
                    .or_insert_with(|| PartitionRow {
                        country,
                        year: r.pub_year,
                        matched: 0,
                        categories: BTreeMap::new(),
                    })
                    .matched += 1;
            }
        }
        for row in &report.rows {
            if let Some(p) = partition.get_mut(&(row.country, row.year)) {
                p.categories.insert(row.category, row.p);
            }
        }

        let counts = StageCounts {
            loaded: inputs.corpus.records.len(),
            reference: reference.len(),
            reference_cells: stats.len(),
            filtered: filtered.records.len(),
            effective_terms: n_terms,
            matched: records.len(),
            classified: classifications.len(),
            undefined_ncs: undefined,
        };
        Ok(Artifacts {
            indicators_csv: indicators_csv(&report),
            plot_json: plot_data_json(&report, &config.period, &focal),
            matches,
            classifications,
            counts,
            partition: partition.into_values().collect(),
        })
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub counts: StageCounts,
    pub written: Vec<PathBuf>,
}

/// Loads, executes and writes all five artifacts atomically.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunSummary, PipelineError> {
    check_config(config)?;
    let out_dir = required(&config.output_dir, "output")?.to_path_buf();
    let inputs = Inputs::load(config, true, true)?;
    let artifacts = execute(config, &inputs)?;
    let manifest = manifest_json(config.echo(), &artifacts.counts, &artifacts.partition);
    let (matches, classifications) = (artifacts.matches_jsonl(), artifacts.classifications_jsonl());
    let written = write_atomically(
        &out_dir,
        &[
            (MATCHES_FILE, &matches),
            (CLASSIFICATIONS_FILE, &classifications),
            (INDICATORS_FILE, &artifacts.indicators_csv),
            (PLOT_FILE, &artifacts.plot_json),
            (MANIFEST_FILE, &manifest),
        ],
    )?;
    log::info!("stage=write dir={} files={}", out_dir.display(), written.len());
    Ok(RunSummary {
        counts: artifacts.counts,
        written,
    })
}

/// Rebuilds the plot data from a previous run directory.
pub fn report_from_dir(dir: &Path) -> Result<String, PipelineError> {
    let read = |name: &str| {
        let path = dir.join(name);
        std::fs::read_to_string(&path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
    };
    let manifest: serde_json::Value =
        serde_json::from_str(&read(MANIFEST_FILE)?).map_err(|e| PipelineError::Config(format!("manifest: {e}")))?;
    let config: PipelineConfig = serde_json::from_value(manifest["config"].clone())
        .map_err(|e| PipelineError::Config(format!("manifest config: {e}")))?;
    let classifications =
        parse_classifications(&read(CLASSIFICATIONS_FILE)?).map_err(|e| PipelineError::Config(format!("classifications {e}")))?;
    let entries: Vec<_> = classifications.iter().map(Classification::entry).collect();
    Ok(plot_data_json(&aggregate(&entries), &config.period, &config.focal_set()))
}

fn output_dir_problem(dir: &Path) -> Option<String> {
    if dir.exists() {
        return (!dir.is_dir()).then(|| "output path exists and is not a directory".to_string());
    }
    let mut ancestor = dir.parent();
    while let Some(a) = ancestor {
        if a.as_os_str().is_empty() || a.is_dir() {
            return None;
        }
        if a.exists() {
            return Some(format!("{} is not a directory", a.display()));
        }
        ancestor = a.parent();
    }
    None
}

/// Collects every input problem without running the pipeline. An empty
/// list means [`run_pipeline`] gets past loading.
pub fn validate_inputs(config: &PipelineConfig) -> Vec<Diagnostic> {
    let mut out: Vec<Diagnostic> = config
        .problems()
        .into_iter()
        .map(|message| Diagnostic {
            stage: "config",
            path: None,
            message,
        })
        .collect();
    let mut note = |r: Result<(), PipelineError>| {
        if let Err(e) = r {
            out.push(Diagnostic::from(&e));
        }
    };
    match &config.output_dir {
        None => note(Err(PipelineError::MissingPath("output"))),
        Some(dir) => {
            if let Some(message) = output_dir_problem(dir) {
                note(Err(PipelineError::Output {
                    path: dir.clone(),
                    source: std::io::Error::other(message),
                }));
            }
        }
    }
    let corpus = load_corpus_stage(config);
    let reference = load_reference_stage(config);
    match (&corpus, &reference) {
        (_, Ok(Some(r))) if r.records.is_empty() => note(Err(IndicatorError::EmptyCorpus.into())),
        (Ok(c), Ok(None)) if c.records.is_empty() => note(Err(IndicatorError::EmptyCorpus.into())),
        _ => {}
    }
    note(corpus.map(drop));
    note(reference.map(drop));
    note(load_whitelist_stage(config).map(drop));
    match load_lexicon_stage(config) {
        Ok(lexicon) => note(build_matcher(config, &lexicon).map(drop)),
        Err(e) => note(Err(e)),
    }
    note(load_funders_stage(config).map(drop));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_paths_are_diagnosed_by_stage() {
        let diags = validate_inputs(&PipelineConfig::default());
        let stages: Vec<_> = diags.iter().map(|d| d.stage).collect();
        assert_eq!(stages, ["output", "corpus", "lexicon", "funders"]);
    }

    #[test]
    fn bad_period_fails_before_loading() {
        let c = PipelineConfig {
            period: Period {
                start_year: 2015,
                end_year: 2009,
            },
            ..Default::default()
        };
        let err = run_pipeline(&c).unwrap_err();
        assert_eq!(err.stage(), "config");
        assert!(err.is_validation());
    }
}
