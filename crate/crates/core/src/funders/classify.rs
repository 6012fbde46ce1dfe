use serde::{Deserialize, Serialize};

use super::{FunderClass, FunderRegistry, FundingCategory, OrgType, Scope};
use crate::corpus::FunderMention;
use crate::country::CountryCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifyOptions {
    /// Fall back to token-subset alias matching when the exact key misses.
    pub token_subset: bool,
    /// Count pan-European non-EC funders (EMBO and the like) as European.
    pub embo_as_european: bool,
}

fn scope_of(org_type: OrgType, country: Option<CountryCode>, focal: CountryCode, options: ClassifyOptions) -> Scope {
    match org_type {
        OrgType::ECFrameworkProgram => Scope::European,
        OrgType::PanEuropeanNonEC if options.embo_as_european => Scope::European,
        OrgType::NationalAgency | OrgType::Charity | OrgType::RegionalPublic | OrgType::OtherPublic
            if country == Some(focal) =>
        {
            Scope::NationalFocal
        }
        t if t.is_public() && country.is_some() => Scope::ForeignPublic,
        _ => Scope::OtherOrUnknown,
    }
}

pub fn classify_funder(
    mention: &FunderMention,
    registry: &FunderRegistry,
    focal_country: CountryCode,
    options: ClassifyOptions,
) -> FunderClass {
    match registry.resolve(&mention.org_text, options.token_subset) {
        Some((entry, kind)) => FunderClass {
            mention: mention.clone(),
            resolved: Some(entry.funder_id.clone()),
            match_kind: Some(kind),
            org_type: entry.org_type,
            country: entry.country,
            scope: scope_of(entry.org_type, entry.country, focal_country, options),
        },
        None => FunderClass {
            mention: mention.clone(),
            resolved: None,
            match_kind: None,
            org_type: OrgType::Unknown,
            country: None,
            scope: Scope::OtherOrUnknown,
        },
    }
}

pub fn classify_mentions(
    mentions: &[FunderMention],
    registry: &FunderRegistry,
    focal_country: CountryCode,
    options: ClassifyOptions,
) -> Vec<FunderClass> {
    mentions
        .iter()
        .map(|m| classify_funder(m, registry, focal_country, options))
        .collect()
}

/// Publication-level category from the scopes of its funder mentions.
///
/// European and national-focal together win, then European, then
/// national-focal. Anything else acknowledged is Other; no acknowledgement
/// is NonFunded.
pub fn assign_funding_category(classes: &[FunderClass], fa_present: bool) -> FundingCategory {
    category_from_scopes(classes.iter().map(|c| c.scope), fa_present)
}

pub(crate) fn category_from_scopes(scopes: impl IntoIterator<Item = Scope>, fa_present: bool) -> FundingCategory {
    if !fa_present {
        return FundingCategory::NonFunded;
    }
    let mut any = false;
    let (mut european, mut national) = (false, false);
    for s in scopes {
        any = true;
        match s {
            Scope::European => european = true,
            Scope::NationalFocal => national = true,
            Scope::ForeignPublic | Scope::OtherOrUnknown => {}
        }
    }
    match (any, european, national) {
        (false, _, _) => FundingCategory::NonFunded,
        (_, true, true) => FundingCategory::NationalAndEuropean,
        (_, true, false) => FundingCategory::European,
        (_, false, true) => FundingCategory::National,
        _ => FundingCategory::Other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funders::parse_registry_csv;

    const REG: &str = "funder_id,canonical_name,aliases,country,org_type\n\
MRC,Medical Research Council,MRC,GB,NationalAgency\n\
WT,Wellcome Trust,,GB,Charity\n\
ANR,Agence Nationale de la Recherche,ANR,FR,NationalAgency\n\
FP7,Seventh Framework Programme,FP7|European Commission FP7,EU,ECFrameworkProgram\n\
EMBO,European Molecular Biology Organization,EMBO,,PanEuropeanNonEC\n\
PFIZER,Pfizer,Pfizer Inc,,Company\n\
NIH,National Institutes of Health,NIH,US,NationalAgency\n";

    fn cc(s: &str) -> CountryCode {
        s.parse().unwrap()
    }

    fn class(org: &str, focal: &str, opts: ClassifyOptions) -> FunderClass {
        let reg = parse_registry_csv(REG).unwrap();
        classify_funder(&FunderMention::new(org), &reg, cc(focal), opts)
    }

    #[test]
    fn typical_acknowledgements() {
        let o = ClassifyOptions::default();
        let c = class("Medical Research Council", "GB", o);
        assert_eq!((c.scope, c.org_type), (Scope::NationalFocal, OrgType::NationalAgency));
        for focal in ["GB", "FR", "NL", "ES"] {
            let c = class("Pfizer", focal, o);
            assert_eq!((c.scope, c.org_type), (Scope::OtherOrUnknown, OrgType::Company));
            let c = class("EMBO", focal, o);
            assert_eq!((c.scope, c.org_type), (Scope::OtherOrUnknown, OrgType::PanEuropeanNonEC));
        }
        assert_eq!(class("European Commission FP7", "FR", o).scope, Scope::European);
        let compat = ClassifyOptions {
            embo_as_european: true,
            ..o
        };
        assert_eq!(class("EMBO", "NL", compat).scope, Scope::European);
    }

    #[test]
    fn focal_relative_scopes() {
        let o = ClassifyOptions::default();
        assert_eq!(class("Wellcome Trust", "GB", o).scope, Scope::NationalFocal);
        assert_eq!(class("Wellcome Trust", "FR", o).scope, Scope::OtherOrUnknown);
        assert_eq!(class("MRC", "FR", o).scope, Scope::ForeignPublic);
        assert_eq!(class("NIH", "ES", o).scope, Scope::ForeignPublic);
        let unresolved = class("Fondation Inconnue", "FR", o);
        assert_eq!(unresolved.resolved, None);
        assert_eq!((unresolved.org_type, unresolved.scope), (OrgType::Unknown, Scope::OtherOrUnknown));
    }

    #[test]
    fn same_publication_differs_by_focal_country() {
        let reg = parse_registry_csv(REG).unwrap();
        let mentions = [FunderMention::new("MRC")];
        let gb = assign_funding_category(&classify_mentions(&mentions, &reg, cc("GB"), Default::default()), true);
        let fr = assign_funding_category(&classify_mentions(&mentions, &reg, cc("FR"), Default::default()), true);
        assert_eq!((gb, fr), (FundingCategory::National, FundingCategory::Other));
    }

    #[test]
    fn category_rules() {
        use FundingCategory::*;
        assert_eq!(category_from_scopes([], false), NonFunded);
        assert_eq!(category_from_scopes([Scope::European], false), NonFunded);
        assert_eq!(category_from_scopes([], true), NonFunded);
        assert_eq!(category_from_scopes([Scope::European, Scope::NationalFocal], true), NationalAndEuropean);
        assert_eq!(category_from_scopes([Scope::ForeignPublic], true), Other);
        assert_eq!(category_from_scopes([Scope::European, Scope::ForeignPublic], true), European);
    }

    #[test]
    fn acknowledged_but_unresolved_is_other() {
        let reg = parse_registry_csv(REG).unwrap();
        let classes = classify_mentions(&[FunderMention::new("Some Foundation")], &reg, cc("NL"), Default::default());
        assert_eq!(assign_funding_category(&classes, true), FundingCategory::Other);
    }
}
