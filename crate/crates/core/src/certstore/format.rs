use std::fs;
use std::path::Path;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use super::StoreError;
use crate::algebra::{params_to_factorization, CycFactorization, IntVec, Rat};
use crate::group::HypergeometricCase;
use crate::verify::Certificate;

pub const SCHEMA_VERSION: u32 = 1;

const SAFE_INT_BITS: u64 = 53;

/// Integer stored as a JSON number below 2^53 in magnitude and as a decimal
/// string otherwise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JsonInt(pub BigInt);

impl Serialize for JsonInt {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.abs().bits() <= SAFE_INT_BITS {
            s.serialize_i64(self.0.to_i64().expect("fits in 53 bits"))
        } else {
            s.serialize_str(&self.0.to_string())
        }
    }
}

impl<'de> Deserialize<'de> for JsonInt {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(i64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(n) => Ok(JsonInt(BigInt::from(n))),
            Raw::Str(s) => s
                .trim()
                .parse::<BigInt>()
                .map(JsonInt)
                .map_err(|_| de::Error::custom(format!("invalid integer string {s:?}"))),
        }
    }
}

/// On-disk certificate. Matrices store rays as rows.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    pub v: u32,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<(u64, u32)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<(u64, u32)>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<JsonInt>>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<Vec<JsonInt>>>,
}

pub fn parse_fraction(s: &str) -> Result<Rat, StoreError> {
    let bad = || StoreError::Schema(format!("invalid fraction {s:?}"));
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s.trim(), "1"),
    };
    let p: BigInt = p.parse().map_err(|_| bad())?;
    let q: BigInt = q.parse().map_err(|_| bad())?;
    if !q.is_positive() {
        return Err(bad());
    }
    Ok(Rat::new(p, q))
}

pub fn format_fraction(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn factorization_from_params(params: &[String]) -> Result<CycFactorization, StoreError> {
    let rats = params
        .iter()
        .map(|s| parse_fraction(s))
        .collect::<Result<Vec<_>, _>>()?;
    params_to_factorization(&rats).map_err(|e| StoreError::Schema(e.to_string()))
}

fn resolve(
    label: &str,
    params: Option<&Vec<String>>,
    explicit: Option<&Vec<(u64, u32)>>,
    name: &str,
) -> Result<CycFactorization, StoreError> {
    let from_params = params.map(|p| factorization_from_params(p)).transpose()?;
    let from_explicit = explicit
        .map(|f| CycFactorization::new(f).map_err(|e| StoreError::Schema(e.to_string())))
        .transpose()?;
    match (from_params, from_explicit) {
        (Some(a), Some(b)) if a != b => Err(StoreError::InconsistentPolynomials(format!(
            "{label}: {name} parameters give {a}, explicit factors give {b}"
        ))),
        (Some(a), _) | (None, Some(a)) => Ok(a),
        (None, None) => Err(StoreError::Schema(format!(
            "{label}: missing {name} polynomial"
        ))),
    }
}

fn rows_to_rays(rows: &[Vec<JsonInt>], n: usize, what: &str) -> Result<Vec<IntVec>, StoreError> {
    if rows.is_empty() {
        return Err(StoreError::Schema(format!("{what} has no rays")));
    }
    rows.iter()
        .map(|row| {
            if row.len() != n {
                Err(StoreError::Schema(format!(
                    "{what} row has {} entries, expected {n}",
                    row.len()
                )))
            } else {
                Ok(row.iter().map(|x| x.0.clone()).collect())
            }
        })
        .collect()
}

fn rays_to_rows(rays: &[IntVec]) -> Vec<Vec<JsonInt>> {
    rays.iter()
        .map(|r| r.iter().map(|x| JsonInt(x.clone())).collect())
        .collect()
}

impl CertificateFile {
    pub fn from_json(text: &str) -> Result<Self, StoreError> {
        let file: CertificateFile =
            serde_json::from_str(text).map_err(|e| StoreError::Parse(e.to_string()))?;
        if file.v != SCHEMA_VERSION {
            return Err(StoreError::Schema(format!(
                "unsupported schema version {}",
                file.v
            )));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }

    pub fn to_certificate(&self) -> Result<Certificate, StoreError> {
        let alpha = resolve(&self.label, self.alpha.as_ref(), self.f.as_ref(), "f")?;
        let beta = resolve(&self.label, self.beta.as_ref(), self.g.as_ref(), "g")?;
        let case = HypergeometricCase::new(self.label.clone(), alpha, beta)
            .map_err(|e| StoreError::Schema(e.to_string()))?;
        let n = case.dimension();
        let c = rows_to_rays(&self.c, n, "C")?;
        let d = self
            .d
            .as_ref()
            .map(|d| rows_to_rays(d, n, "D"))
            .transpose()?;
        Certificate::new(case, c, d).map_err(|e| StoreError::Schema(e.to_string()))
    }

    pub fn from_certificate(cert: &Certificate) -> Self {
        let params = |f: &CycFactorization| f.params().iter().map(format_fraction).collect();
        Self {
            v: SCHEMA_VERSION,
            label: cert.label.clone(),
            alpha: Some(params(&cert.case.alpha)),
            beta: Some(params(&cert.case.beta)),
            f: Some(cert.case.alpha.factors().to_vec()),
            g: Some(cert.case.beta.factors().to_vec()),
            c: rays_to_rows(&cert.c_rays),
            d: cert.d_rays.as_deref().map(rays_to_rows),
        }
    }
}

pub fn load_certificate(path: impl AsRef<Path>) -> Result<Certificate, StoreError> {
    let path = path.as_ref();
    let text =
        fs::read_to_string(path).map_err(|e| StoreError::Io(format!("{}: {e}", path.display())))?;
    CertificateFile::from_json(&text)?.to_certificate()
}

pub fn save_certificate(path: impl AsRef<Path>, cert: &Certificate) -> Result<(), StoreError> {
    let path = path.as_ref();
    fs::write(path, CertificateFile::from_certificate(cert).to_json())
        .map_err(|e| StoreError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"{"v":1,"label":"toy","alpha":["0/1","0/1"],"beta":["1/2","1/2"],
        "C":[[1,0],[0,1]]}"#;

    #[test]
    fn parses_minimal_file() {
        let cert = CertificateFile::from_json(SMALL)
            .unwrap()
            .to_certificate()
            .unwrap();
        assert_eq!(cert.case.alpha, CycFactorization::new(&[(1, 2)]).unwrap());
        assert_eq!(cert.case.beta, CycFactorization::new(&[(2, 2)]).unwrap());
        assert_eq!(cert.c_rays.len(), 2);
    }

    #[test]
    fn short_row_is_schema_error() {
        let text = SMALL.replace("[[1,0],[0,1]]", "[[1,0],[0]]");
        let err = CertificateFile::from_json(&text)
            .unwrap()
            .to_certificate()
            .unwrap_err();
        assert!(matches!(err, StoreError::Schema(_)), "{err}");
    }

    #[test]
    fn disagreeing_polynomials() {
        let text = SMALL.replace(r#""label":"toy","#, r#""label":"toy","f":[[2,2]],"#);
        let err = CertificateFile::from_json(&text)
            .unwrap()
            .to_certificate()
            .unwrap_err();
        assert!(
            matches!(err, StoreError::InconsistentPolynomials(_)),
            "{err}"
        );
    }

    #[test]
    fn big_integers_become_strings() {
        let big = BigInt::from(1u64 << 60);
        let json = serde_json::to_string(&JsonInt(big.clone())).unwrap();
        assert_eq!(json, format!("\"{big}\""));
        assert_eq!(
            serde_json::to_string(&JsonInt(BigInt::from(-12))).unwrap(),
            "-12"
        );
        let edge = BigInt::from((1u64 << 53) - 1);
        assert_eq!(
            serde_json::to_string(&JsonInt(edge.clone())).unwrap(),
            edge.to_string()
        );
        let limit = BigInt::from(1u64 << 53);
        assert_eq!(
            serde_json::to_string(&JsonInt(limit.clone())).unwrap(),
            format!("\"{limit}\"")
        );
        let back: JsonInt = serde_json::from_str(&json).unwrap();
        assert_eq!(back.0, big);
    }

    #[test]
    fn garbage_is_parse_error() {
        assert!(matches!(
            CertificateFile::from_json("{"),
            Err(StoreError::Parse(_))
        ));
        let text = SMALL.replace(r#""v":1"#, r#""v":2"#);
        assert!(matches!(
            CertificateFile::from_json(&text),
            Err(StoreError::Schema(_))
        ));
    }
}
