//! Deterministic synthetic corpora for fixtures, tests and benchmarks.
//!
//! Records are drawn from a seeded ChaCha stream, so a given
//! [`SynthConfig`] always produces the same corpus.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, DocType, FunderMention, PublicationRecord};
use crate::country::CountryCode;

/// Plain English filler; includes the words behind the classic ambiguous
/// synonyms so that suppression is exercised.
pub const FILLER: &[&str] = &[
    "the", "patients", "with", "were", "treated", "in", "a", "cohort", "study", "of", "clinical", "outcomes",
    "we", "report", "novel", "variants", "gene", "expression", "analysis", "showed", "significant", "increase",
    "mutation", "phenotype", "children", "adults", "therapy", "response", "trial", "registry", "data", "from",
    "and", "to", "get", "sperm", "motility", "get", "better", "results", "using", "sequencing", "whole", "exome",
    "diagnosis", "was", "delayed", "by", "years", "families", "affected", "by", "severe", "disease", "onset",
    "early", "late", "protein", "function", "loss", "model", "mouse", "cells", "enzyme", "replacement", "for",
    "long", "term", "follow", "up", "survival", "rate", "quality", "life", "cystic", "fibrosis", "syndrome",
];

pub const UNKNOWN_FUNDERS: &[&str] = &[
    "Fondation Inconnue",
    "Acme Biotech Ltd",
    "Private donor",
    "Local Hospital Fund",
    "Stichting Onbekend",
];

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub seed: u64,
    pub records: usize,
    /// Inclusive year range.
    pub years: (i32, i32),
    pub census_year: i32,
    pub countries: Vec<CountryCode>,
    pub categories: Vec<String>,
    /// Terms to plant in matched records.
    pub disease_terms: Vec<String>,
    /// Funder names (canonical names or aliases) to draw mentions from.
    pub funder_names: Vec<String>,
    /// Probability that a record mentions a disease term.
    pub match_rate: f64,
    /// Probability that a record carries a funding acknowledgement.
    pub funded_rate: f64,
    /// Of acknowledged records, the share given only as free text.
    pub free_text_rate: f64,
    pub funded_citation_mean: f64,
    pub unfunded_citation_mean: f64,
    /// Approximate abstract length in words.
    pub abstract_words: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let cc = |s: &str| s.parse::<CountryCode>().expect("static code");
        Self {
            seed: 7,
            records: 500,
            years: (2008, 2016),
            census_year: 2016,
            countries: ["GB", "FR", "NL", "ES", "US", "DE"].iter().map(|c| cc(c)).collect(),
            categories: ["GENETICS", "PEDIATRICS", "NEUROLOGY", "HEMATOLOGY", "IMMUNOLOGY", "ECONOMICS"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            disease_terms: vec!["cystic fibrosis".into(), "Fabry disease".into()],
            funder_names: vec!["Medical Research Council".into(), "FP7".into()],
            match_rate: 0.6,
            funded_rate: 0.6,
            free_text_rate: 0.3,
            funded_citation_mean: 12.0,
            unfunded_citation_mean: 6.0,
            abstract_words: 60,
        }
    }
}

/// Surface variants a real abstract might use for the same term.
fn vary_term(term: &str, rng: &mut ChaCha8Rng) -> String {
    match rng.random_range(0..5) {
        0 => term.to_uppercase(),
        1 => term.replace(' ', "-"),
        2 => {
            let mut c = term.chars();
            match c.next() {
                Some(f) => f.to_uppercase().chain(c).collect(),
                None => String::new(),
            }
        }
        _ => term.to_string(),
    }
}

fn words(rng: &mut ChaCha8Rng, n: usize) -> String {
    let mut out = String::new();
    for i in 0..n {
        if i > 0 {
            out.push(if rng.random_bool(0.05) { ',' } else { ' ' });
            if out.ends_with(',') {
                out.push(' ');
            }
        }
        out.push_str(FILLER.choose(rng).expect("non-empty filler"));
    }
    out
}

/// Geometric draw with the given mean.
fn citations(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    let u: f64 = rng.random_range(f64::EPSILON..1.0);
    (-u.ln() * mean).floor() as u64
}

fn insert_at_random(text: &str, term: &str, rng: &mut ChaCha8Rng) -> String {
    let cuts: Vec<usize> = text.match_indices(' ').map(|(i, _)| i).collect();
    match cuts.choose(rng) {
        Some(&at) => format!("{} {} {}", &text[..at], term, &text[at + 1..]),
        None => format!("{text} {term}"),
    }
}

pub fn generate_record(cfg: &SynthConfig, index: usize, rng: &mut ChaCha8Rng) -> PublicationRecord {
    let pub_year = rng.random_range(cfg.years.0..=cfg.years.1);
    let doc_type = if rng.random_bool(0.8) { DocType::Article } else { DocType::Review };
    let n_cat = rng.random_range(1..=2.min(cfg.categories.len()).max(1));
    let subject_categories: BTreeSet<String> = cfg.categories.choose_multiple(rng, n_cat).cloned().collect();
    let n_cty = if rng.random_bool(0.25) { 2 } else { 1 };
    let countries: BTreeSet<CountryCode> = cfg.countries.choose_multiple(rng, n_cty).copied().collect();

    let title_len = rng.random_range(5..10);
    let mut title = words(rng, title_len);
    let mut abstract_text = words(rng, cfg.abstract_words);
    let n_kw = rng.random_range(0..4);
    let mut keywords: Vec<String> = (0..n_kw).map(|_| words(rng, 2)).collect();
    if !cfg.disease_terms.is_empty() && rng.random_bool(cfg.match_rate) {
        let term = vary_term(cfg.disease_terms.choose(rng).expect("non-empty"), rng);
        match rng.random_range(0..3) {
            0 => title = insert_at_random(&title, &term, rng),
            1 => abstract_text = insert_at_random(&abstract_text, &term, rng),
            _ => keywords.push(term),
        }
    } else if rng.random_bool(0.2) {
        // Near misses that must not match.
        if let Some(term) = cfg.disease_terms.choose(rng) {
            let fused = format!("poly{}x", term.replace(' ', ""));
            abstract_text = insert_at_random(&abstract_text, &fused, rng);
        }
    }

    let funded = rng.random_bool(cfg.funded_rate);
    let (mut fa_present, mut funder_mentions, mut fa_raw_text) = (false, Vec::new(), None);
    if funded && !cfg.funder_names.is_empty() {
        let n = rng.random_range(1..=3);
        let mut mentions = Vec::with_capacity(n);
        for _ in 0..n {
            let org = if rng.random_bool(0.1) {
                UNKNOWN_FUNDERS.choose(rng).expect("non-empty").to_string()
            } else {
                cfg.funder_names.choose(rng).expect("non-empty").clone()
            };
            let grants = if rng.random_bool(0.5) {
                vec![format!("G{:07}", rng.random_range(0..10_000_000u32))]
            } else {
                Vec::new()
            };
            mentions.push(FunderMention {
                org_text: org,
                grant_numbers: grants,
            });
        }
        fa_present = true;
        if rng.random_bool(cfg.free_text_rate) {
            let text = mentions
                .iter()
                .map(|m| match m.grant_numbers.first() {
                    Some(g) => format!("{} ({g})", m.org_text),
                    None => m.org_text.clone(),
                })
                .collect::<Vec<_>>()
                .join("; ");
            fa_raw_text = Some(text);
        } else {
            funder_mentions = mentions;
        }
    }
    let mean = if fa_present {
        cfg.funded_citation_mean
    } else {
        cfg.unfunded_citation_mean
    };
    let cites = citations(rng, mean * (1.0 + 0.1 * f64::from(cfg.years.1 - pub_year).max(0.0)));

    PublicationRecord {
        record_id: format!("R{index:06}"),
        title,
        abstract_text,
        keywords,
        doc_type,
        pub_year,
        subject_categories,
        countries,
        citation_count: cites,
        fa_present,
        funder_mentions,
        fa_raw_text,
    }
}

pub fn generate_corpus(cfg: &SynthConfig) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let records = (0..cfg.records).map(|i| generate_record(cfg, i, &mut rng)).collect();
    Corpus {
        records,
        census_year: cfg.census_year.max(cfg.years.1),
    }
}

/// Streams `count` abstracts of roughly `words_per_abstract` words, planting
/// one of `terms` with probability `term_rate`. Used by throughput runs
/// where holding the whole corpus would dominate memory.
pub struct AbstractStream {
    rng: ChaCha8Rng,
    terms: Vec<String>,
    words_per_abstract: usize,
    term_rate: f64,
    remaining: usize,
}

impl AbstractStream {
    pub fn new(seed: u64, count: usize, words_per_abstract: usize, terms: Vec<String>, term_rate: f64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            terms,
            words_per_abstract,
            term_rate,
            remaining: count,
        }
    }

    /// Writes the next abstract into `buf`; false when exhausted.
    pub fn next_into(&mut self, buf: &mut String) -> bool {
        if self.remaining == 0 {
            return false;
        }
        self.remaining -= 1;
        buf.clear();
        let plant = if !self.terms.is_empty() && self.rng.random_bool(self.term_rate) {
            Some(self.rng.random_range(0..self.words_per_abstract))
        } else {
            None
        };
        for i in 0..self.words_per_abstract {
            if i > 0 {
                buf.push(' ');
            }
            if plant == Some(i) {
                buf.push_str(self.terms.choose(&mut self.rng).expect("non-empty"));
            } else {
                buf.push_str(FILLER.choose(&mut self.rng).expect("non-empty"));
            }
        }
        buf.push('.');
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let cfg = SynthConfig::default();
        assert_eq!(generate_corpus(&cfg), generate_corpus(&cfg));
        let other = SynthConfig { seed: 8, ..cfg.clone() };
        assert_ne!(generate_corpus(&cfg), generate_corpus(&other));
    }

    #[test]
    fn records_satisfy_invariants() {
        let corpus = generate_corpus(&SynthConfig::default());
        let ids: BTreeSet<_> = corpus.records.iter().map(|r| &r.record_id).collect();
        assert_eq!(ids.len(), corpus.records.len());
        for r in &corpus.records {
            assert!(r.pub_year <= corpus.census_year);
            assert!(!r.subject_categories.is_empty());
            if !r.fa_present {
                assert!(r.funder_mentions.is_empty() && r.fa_raw_text.is_none());
            }
        }
    }

    #[test]
    fn abstract_stream_yields_count() {
        let mut s = AbstractStream::new(1, 10, 20, vec!["fabry disease".into()], 0.5);
        let mut buf = String::new();
        let mut n = 0;
        while s.next_into(&mut buf) {
            n += 1;
            assert!(buf.ends_with('.'));
        }
        assert_eq!(n, 10);
    }
}
