use std::cmp::Ordering;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::format::parse_fraction;
use super::StoreError;
use crate::algebra::params_to_factorization;
use crate::group::HypergeometricCase;
use crate::verify::Regime;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Nature {
    Thin,
    Arithmetic,
    Unknown,
}

impl fmt::Display for Nature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Nature::Thin => "thin",
            Nature::Arithmetic => "arithmetic",
            Nature::Unknown => "unknown",
        })
    }
}

/// Classification metadata for one case of the bundled tables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseInfo {
    pub label: String,
    pub group: String,
    pub table: String,
    pub alpha: Vec<String>,
    pub beta: Vec<String>,
    pub nature: Nature,
    #[serde(default)]
    pub attribution: Option<String>,
    /// Name of the bundled certificate file, if the case has one.
    #[serde(default)]
    pub certificate: Option<String>,
    /// Order regime of `B` as annotated next to the bundled certificate.
    #[serde(default)]
    pub b_order: Option<Regime>,
}

impl CaseInfo {
    pub fn case(&self) -> Result<HypergeometricCase, StoreError> {
        let fac = |params: &[String]| -> Result<_, StoreError> {
            let rats = params
                .iter()
                .map(|s| parse_fraction(s))
                .collect::<Result<Vec<_>, _>>()?;
            params_to_factorization(&rats).map_err(|e| StoreError::Schema(e.to_string()))
        };
        HypergeometricCase::new(self.label.clone(), fac(&self.alpha)?, fac(&self.beta)?)
            .map_err(|e| StoreError::Schema(e.to_string()))
    }
}

#[derive(Deserialize)]
struct RegistryFile {
    cases: Vec<CaseInfo>,
}

const REGISTRY_JSON: &str = include_str!("../../fixtures/registry.json");

pub fn registry() -> &'static [CaseInfo] {
    static REGISTRY: OnceLock<Vec<CaseInfo>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        serde_json::from_str::<RegistryFile>(REGISTRY_JSON)
            .expect("bundled registry is valid")
            .cases
    })
}

/// Looks a case up by label, ignoring case; `Sp4-39` is accepted for `39`.
pub fn lookup(label: &str) -> Result<&'static CaseInfo, StoreError> {
    let wanted = label.trim();
    let stripped = wanted
        .strip_prefix("Sp4-")
        .or_else(|| wanted.strip_prefix("sp4-"))
        .unwrap_or(wanted);
    registry()
        .iter()
        .find(|c| c.label.eq_ignore_ascii_case(stripped))
        .ok_or_else(|| StoreError::UnknownCase(label.to_string()))
}

/// Natural ordering of labels: alphabetic prefix, then numeric suffix.
pub fn label_order(a: &str, b: &str) -> Ordering {
    fn split(s: &str) -> (&str, Option<u64>) {
        let digits = s.len() - s.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        let (head, tail) = s.split_at(s.len() - digits);
        (head, tail.parse().ok())
    }
    let (ha, na) = split(a);
    let (hb, nb) = split(b);
    ha.cmp(hb).then(na.cmp(&nb)).then(a.cmp(b))
}
