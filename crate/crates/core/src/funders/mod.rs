//! Funder registry, funding-acknowledgement parsing and the publication
//! funding typology.

mod classify;
mod parse;
mod registry;

pub use classify::{assign_funding_category, classify_funder, classify_mentions, ClassifyOptions};
pub use parse::parse_funding_text;
pub use registry::{
    load_funder_registry, parse_registry_csv, parse_registry_json, write_registry_csv, FunderEntry, FunderRegistry,
    RegistryError,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::FunderMention;
use crate::country::CountryCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrgType {
    NationalAgency,
    Charity,
    Company,
    #[serde(rename = "ec_framework_program")]
    ECFrameworkProgram,
    #[serde(rename = "pan_european_non_ec")]
    PanEuropeanNonEC,
    RegionalPublic,
    OtherPublic,
    Unknown,
}

impl OrgType {
    pub const ALL: [OrgType; 8] = [
        OrgType::NationalAgency,
        OrgType::Charity,
        OrgType::Company,
        OrgType::ECFrameworkProgram,
        OrgType::PanEuropeanNonEC,
        OrgType::RegionalPublic,
        OrgType::OtherPublic,
        OrgType::Unknown,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            OrgType::NationalAgency => "national_agency",
            OrgType::Charity => "charity",
            OrgType::Company => "company",
            OrgType::ECFrameworkProgram => "ec_framework_program",
            OrgType::PanEuropeanNonEC => "pan_european_non_ec",
            OrgType::RegionalPublic => "regional_public",
            OrgType::OtherPublic => "other_public",
            OrgType::Unknown => "unknown",
        }
    }

    pub fn is_public(&self) -> bool {
        matches!(self, OrgType::NationalAgency | OrgType::RegionalPublic | OrgType::OtherPublic)
    }
}

impl fmt::Display for OrgType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OrgType {
    type Err = String;

    /// Accepts `snake_case` or `CamelCase` spellings.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let squashed: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        OrgType::ALL
            .into_iter()
            .find(|t| t.as_str().replace('_', "") == squashed)
            .ok_or_else(|| s.to_string())
    }
}

/// Where a funder sits relative to the focal country.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    European,
    NationalFocal,
    ForeignPublic,
    OtherOrUnknown,
}

impl Scope {
    pub const ALL: [Scope; 4] = [Scope::European, Scope::NationalFocal, Scope::ForeignPublic, Scope::OtherOrUnknown];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchKind {
    Exact,
    /// Resolved by token-subset matching; lower confidence.
    TokenSubset,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunderClass {
    pub mention: FunderMention,
    pub resolved: Option<String>,
    pub match_kind: Option<MatchKind>,
    pub org_type: OrgType,
    pub country: Option<CountryCode>,
    pub scope: Scope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FundingCategory {
    European,
    National,
    NationalAndEuropean,
    Other,
    NonFunded,
}

impl FundingCategory {
    pub const ALL: [FundingCategory; 5] = [
        FundingCategory::European,
        FundingCategory::National,
        FundingCategory::NationalAndEuropean,
        FundingCategory::Other,
        FundingCategory::NonFunded,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FundingCategory::European => "european",
            FundingCategory::National => "national",
            FundingCategory::NationalAndEuropean => "national_and_european",
            FundingCategory::Other => "other",
            FundingCategory::NonFunded => "non_funded",
        }
    }
}

impl fmt::Display for FundingCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FundingCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FundingCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s.trim())
            .ok_or_else(|| s.to_string())
    }
}
