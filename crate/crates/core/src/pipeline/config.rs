use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::country::CountryCode;
use crate::funders::ClassifyOptions;
use crate::indicators::NormalizationOptions;
use crate::lexicon::MatchPolicy;
use crate::matcher::MatcherOptions;

use super::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Period {
    pub start_year: i32,
    pub end_year: i32,
}

impl Default for Period {
    fn default() -> Self {
        Self {
            start_year: 2009,
            end_year: 2015,
        }
    }
}

impl Period {
    pub fn years(&self) -> std::ops::RangeInclusive<i32> {
        self.start_year..=self.end_year
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub funders: Option<PathBuf>,
    /// Defaults to the loaded corpus before filtering.
    pub reference_corpus: Option<PathBuf>,
    pub category_whitelist: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub period: Period,
    pub focal_countries: Vec<CountryCode>,
    pub census_year: Option<i32>,
    pub matcher: MatcherOptions,
    pub match_policy: MatchPolicy,
    pub embo_as_european: bool,
    pub token_subset_matching: bool,
    pub normalization: NormalizationOptions,
    pub workers: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let focal = ["FR", "GB", "NL", "ES"]
            .iter()
            .map(|c| c.parse().expect("static country code"))
            .collect();
        Self {
            corpus: None,
            lexicon: None,
            funders: None,
            reference_corpus: None,
            category_whitelist: None,
            output_dir: None,
            period: Period::default(),
            focal_countries: focal,
            census_year: None,
            matcher: MatcherOptions::default(),
            match_policy: MatchPolicy::default(),
            embo_as_european: false,
            token_subset_matching: false,
            normalization: NormalizationOptions::default(),
            workers: 1,
        }
    }
}

impl PipelineConfig {
    /// Reads a JSON config. Relative paths resolve against the file's directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut config: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.corpus,
            &mut self.lexicon,
            &mut self.funders,
            &mut self.reference_corpus,
            &mut self.category_whitelist,
            &mut self.output_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    /// Invariant violations, empty when the config itself is sound.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.period.start_year > self.period.end_year {
            out.push(format!(
                "period start {} is after end {}",
                self.period.start_year, self.period.end_year
            ));
        }
        if self.focal_countries.is_empty() {
            out.push("focal_countries is empty".to_string());
        }
        if self.workers == 0 {
            out.push("workers must be at least 1".to_string());
        }
        if let Some(census) = self.census_year {
            if census < self.period.end_year {
                out.push(format!("census year {census} precedes the period end {}", self.period.end_year));
            }
        }
        out
    }

    pub fn focal_set(&self) -> BTreeSet<CountryCode> {
        self.focal_countries.iter().copied().collect()
    }

    pub fn classify_options(&self) -> ClassifyOptions {
        ClassifyOptions {
            token_subset: self.token_subset_matching,
            embo_as_european: self.embo_as_european,
        }
    }

    /// The config as echoed into the manifest. Worker count and output
    /// directory are left out so they cannot change the artifacts.
    pub fn echo(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = v.as_object_mut() {
            map.remove("workers");
            map.remove("output_dir");
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_round_trip() {
        let c: PipelineConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, PipelineConfig::default());
        assert!(c.problems().is_empty());
        let back: PipelineConfig = serde_json::from_value(serde_json::to_value(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_invariants() {
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"corpuss":"x"}"#).is_err());
        let c: PipelineConfig =
            serde_json::from_str(r#"{"period":{"start_year":2015,"end_year":2009},"focal_countries":[],"workers":0}"#)
                .unwrap();
        assert_eq!(c.problems().len(), 3);
    }

    #[test]
    fn echo_omits_run_local_fields() {
        let c = PipelineConfig {
            workers: 8,
            output_dir: Some("out".into()),
            ..Default::default()
        };
        let echo = c.echo();
        assert!(echo.get("workers").is_none() && echo.get("output_dir").is_none());
        assert_eq!(echo, PipelineConfig::default().echo());
    }
}
