//! Ping-pong table construction and exact checking of the table conditions.
//!
//! With `X+ = C ∪ -C` and `X- = E X+`, the finite-order table uses
//! `Y = ∪ B^k (X+ ∪ X-)` over `1 <= k < eta`, `B^k != -I`; the infinite-order
//! table uses `Y+ = ∪ ±B^k D` over `1 <= k <= eta` and `Y- = E Y+`.

use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{is_zero_vec, IntMatrix, IntVec};
use crate::cone::{
    first_overlap, union_contained_in, ConeError, ConeUnion, LinearMap, RationalCone,
};
use crate::group::{
    structure_report, GroupData, GroupError, HypergeometricCase, Order, StructureReport,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),
    #[error("ray of length {got} in a certificate of dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("default D is degenerate: every (B^eta - I)-image vanishes")]
    DegenerateD,
    #[error("certificate is for case {cert}, group data for {group}")]
    CaseMismatch { cert: String, group: String },
    #[error("table half Y is empty")]
    EmptyY,
}

/// Generating rays of the cone `C` and optionally `D`, rays as rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub label: String,
    pub case: HypergeometricCase,
    pub c_rays: Vec<IntVec>,
    pub d_rays: Option<Vec<IntVec>>,
}

impl Certificate {
    pub fn new(
        case: HypergeometricCase,
        c_rays: Vec<IntVec>,
        d_rays: Option<Vec<IntVec>>,
    ) -> Result<Self, VerifyError> {
        let n = case.dimension();
        if c_rays.is_empty() {
            return Err(ConeError::EmptyGenerators.into());
        }
        for r in c_rays.iter().chain(d_rays.iter().flatten()) {
            if r.len() != n {
                return Err(VerifyError::DimensionMismatch {
                    expected: n,
                    got: r.len(),
                });
            }
        }
        Ok(Self {
            label: case.label.clone(),
            case,
            c_rays,
            d_rays,
        })
    }

    pub fn ray_count(&self) -> usize {
        self.c_rays.len() + self.d_rays.as_ref().map_or(0, Vec::len)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Finite,
    Infinite,
}

impl Regime {
    pub fn of(gd: &GroupData) -> Self {
        if gd.order_b.is_finite() {
            Regime::Finite
        } else {
            Regime::Infinite
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Finite => "finite",
            Regime::Infinite => "infinite",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Condition {
    #[serde(rename = "1")]
    NonEmpty,
    #[serde(rename = "2")]
    Disjoint,
    #[serde(rename = "3")]
    BPowers,
    #[serde(rename = "3a")]
    BForward,
    #[serde(rename = "3b")]
    BBackward,
    #[serde(rename = "4a")]
    TInverse,
    #[serde(rename = "4b")]
    TForward,
}

impl Condition {
    pub const ALL: [Condition; 7] = [
        Condition::NonEmpty,
        Condition::Disjoint,
        Condition::BPowers,
        Condition::BForward,
        Condition::BBackward,
        Condition::TInverse,
        Condition::TForward,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Condition::NonEmpty => "1",
            Condition::Disjoint => "2",
            Condition::BPowers => "3",
            Condition::BForward => "3a",
            Condition::BBackward => "3b",
            Condition::TInverse => "4a",
            Condition::TForward => "4b",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Condition::NonEmpty => "C is solid",
            Condition::Disjoint => "X and Y are disjoint",
            Condition::BPowers => "B^i X ⊆ Y for B^i != ±I",
            Condition::BForward => "B (X ∪ Y+) ⊆ Y+",
            Condition::BBackward => "B^-1 (X ∪ Y-) ⊆ Y-",
            Condition::TInverse => "T^-1 (Y ∪ X+) ⊆ X+",
            Condition::TForward => "T (Y ∪ X-) ⊆ X-",
        }
    }

    fn applies_to(self, regime: Regime) -> bool {
        match self {
            Condition::BPowers => regime == Regime::Finite,
            Condition::BForward | Condition::BBackward => regime == Regime::Infinite,
            _ => true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
    /// Not evaluated because fast mode stopped at an earlier failure.
    Skipped,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerificationReport {
    pub case_label: String,
    pub regime: Regime,
    pub conditions: BTreeMap<Condition, Verdict>,
    pub overall: bool,
    pub structure: Option<StructureReport>,
    /// Index pair of the first overlapping cones of X and Y, if any.
    pub overlap_witness: Option<(usize, usize)>,
    #[serde(rename = "elapsed_ms", with = "duration_ms")]
    pub elapsed: Duration,
}

mod duration_ms {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64() * 1000.0)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_secs_f64(f64::deserialize(d)? / 1000.0))
    }
}

/// The two table halves. `y_plus`/`y_minus` are both `None` in the finite regime.
#[derive(Clone, Debug)]
pub struct PingPongTable {
    pub regime: Regime,
    pub c: RationalCone,
    pub x_plus: ConeUnion,
    pub x_minus: ConeUnion,
    /// Finite regime: the whole of Y. Infinite regime: `Y+ ∪ Y-`.
    pub y: ConeUnion,
    pub y_plus: Option<ConeUnion>,
    pub y_minus: Option<ConeUnion>,
}

impl PingPongTable {
    pub fn x(&self) -> ConeUnion {
        ConeUnion::concat(&[&self.x_plus, &self.x_minus]).expect("same dimension")
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct VerifyOptions {
    /// Stop at the first failing condition.
    pub fast: bool,
}

fn check_case(gd: &GroupData, cert: &Certificate) -> Result<(), VerifyError> {
    if gd.case.alpha != cert.case.alpha || gd.case.beta != cert.case.beta {
        return Err(VerifyError::CaseMismatch {
            cert: cert.label.clone(),
            group: gd.case.label.clone(),
        });
    }
    for r in cert.c_rays.iter().chain(cert.d_rays.iter().flatten()) {
        if r.len() != gd.n {
            return Err(VerifyError::DimensionMismatch {
                expected: gd.n,
                got: r.len(),
            });
        }
    }
    Ok(())
}

fn map(m: &IntMatrix) -> Result<LinearMap, VerifyError> {
    Ok(LinearMap::from_int(m)?)
}

fn x_halves(gd: &GroupData, c: &RationalCone) -> Result<(ConeUnion, ConeUnion), VerifyError> {
    c.hrep();
    let e = map(&gd.e)?;
    let ec = c.transform(&e)?;
    let x_plus = ConeUnion::new(vec![c.clone(), c.negate()])?;
    let neg_ec = ec.negate();
    let x_minus = ConeUnion::new(vec![ec, neg_ec])?;
    Ok((x_plus, x_minus))
}

/// Cone spanned by `C`, `EC`, `(B^eta - I) C` and `(B^eta - I) EC`; zero images are dropped.
pub fn default_d(gd: &GroupData, c: &RationalCone) -> Result<RationalCone, VerifyError> {
    if gd.order_b.is_finite() {
        return Err(VerifyError::RegimeMismatch(
            "default D needs B of infinite order".into(),
        ));
    }
    let nil = gd.b_power(gd.eta as i64).minus_identity();
    let ec: Vec<IntVec> = c.rays().iter().map(|r| gd.e.mul_vec(r)).collect();
    let mut rays: Vec<IntVec> = c.rays().to_vec();
    rays.extend(ec.iter().cloned());
    let images: Vec<IntVec> = c
        .rays()
        .iter()
        .chain(&ec)
        .map(|r| nil.mul_vec(r))
        .filter(|v| !is_zero_vec(v))
        .collect();
    if images.is_empty() {
        return Err(VerifyError::DegenerateD);
    }
    rays.extend(images);
    Ok(RationalCone::from_int_rays(&rays)?)
}

pub fn build_table_finite(
    gd: &GroupData,
    cert: &Certificate,
) -> Result<PingPongTable, VerifyError> {
    check_case(gd, cert)?;
    let Order::Finite(_) = gd.order_b else {
        return Err(VerifyError::RegimeMismatch("B has infinite order".into()));
    };
    finite_table(gd, RationalCone::from_int_rays(&cert.c_rays)?)
}

/// Finite-order table for a cone `C` whose facets are preferably cached.
pub(crate) fn finite_table(gd: &GroupData, c: RationalCone) -> Result<PingPongTable, VerifyError> {
    let (x_plus, x_minus) = x_halves(gd, &c)?;
    let x = ConeUnion::concat(&[&x_plus, &x_minus])?;
    let mut y = Vec::new();
    for k in 1..gd.eta {
        let bk = gd.b_power(k as i64);
        if bk.is_neg_identity() {
            continue;
        }
        y.extend(x.transform(&map(&bk)?)?.cones().iter().cloned());
    }
    if y.is_empty() {
        return Err(VerifyError::EmptyY);
    }
    Ok(PingPongTable {
        regime: Regime::Finite,
        c,
        x_plus,
        x_minus,
        y: ConeUnion::new(y)?,
        y_plus: None,
        y_minus: None,
    })
}

pub fn build_table_infinite(
    gd: &GroupData,
    cert: &Certificate,
) -> Result<PingPongTable, VerifyError> {
    check_case(gd, cert)?;
    if gd.order_b.is_finite() {
        return Err(VerifyError::RegimeMismatch("B has finite order".into()));
    }
    let c = RationalCone::from_int_rays(&cert.c_rays)?;
    let d = match &cert.d_rays {
        Some(rays) => RationalCone::from_int_rays(rays)?,
        None => default_d(gd, &c)?,
    };
    infinite_table(gd, c, d)
}

/// Infinite-order table for cones `C` and `D` whose facets are preferably cached.
pub(crate) fn infinite_table(
    gd: &GroupData,
    c: RationalCone,
    d: RationalCone,
) -> Result<PingPongTable, VerifyError> {
    let (x_plus, x_minus) = x_halves(gd, &c)?;
    d.hrep();
    let y_temp = ConeUnion::new(vec![d.clone(), d.negate()])?;
    let mut y_plus = Vec::new();
    for k in 1..=gd.eta {
        let bk = map(&gd.b_power(k as i64))?;
        y_plus.extend(y_temp.transform(&bk)?.cones().iter().cloned());
    }
    let y_plus = ConeUnion::new(y_plus)?;
    let y_minus = y_plus.transform(&map(&gd.e)?)?;
    Ok(PingPongTable {
        regime: Regime::Infinite,
        c,
        x_plus,
        x_minus,
        y: ConeUnion::concat(&[&y_plus, &y_minus])?,
        y_plus: Some(y_plus),
        y_minus: Some(y_minus),
    })
}

pub fn build_table(gd: &GroupData, cert: &Certificate) -> Result<PingPongTable, VerifyError> {
    match Regime::of(gd) {
        Regime::Finite => build_table_finite(gd, cert),
        Regime::Infinite => build_table_infinite(gd, cert),
    }
}

pub fn verify(gd: &GroupData, cert: &Certificate) -> Result<VerificationReport, VerifyError> {
    verify_with(gd, cert, VerifyOptions::default())
}

pub fn verify_with(
    gd: &GroupData,
    cert: &Certificate,
    opts: VerifyOptions,
) -> Result<VerificationReport, VerifyError> {
    let start = Instant::now();
    let table = build_table(gd, cert)?;
    let regime = table.regime;
    let x = table.x();

    let mut conditions = BTreeMap::new();
    let mut overlap_witness = None;
    let mut failed = false;
    for cond in Condition::ALL {
        if !cond.applies_to(regime) {
            conditions.insert(cond, Verdict::NotApplicable);
            continue;
        }
        if failed && opts.fast {
            conditions.insert(cond, Verdict::Skipped);
            continue;
        }
        let (ok, witness) = evaluate(gd, &table, &x, cond)?;
        if witness.is_some() {
            overlap_witness = witness;
        }
        failed |= !ok;
        conditions.insert(cond, if ok { Verdict::Pass } else { Verdict::Fail });
    }
    let overall = conditions
        .values()
        .all(|v| matches!(v, Verdict::Pass | Verdict::NotApplicable));
    let structure = overall.then(|| structure_report(gd, true)).transpose()?;
    Ok(VerificationReport {
        case_label: cert.label.clone(),
        regime,
        conditions,
        overall,
        structure,
        overlap_witness,
        elapsed: start.elapsed(),
    })
}

/// Outcome of one condition on a built table, with the overlapping pair when
/// disjointness fails.
fn evaluate(
    gd: &GroupData,
    table: &PingPongTable,
    x: &ConeUnion,
    cond: Condition,
) -> Result<(bool, Option<(usize, usize)>), VerifyError> {
    let ok = match cond {
        Condition::NonEmpty => table.c.is_solid(),
        Condition::Disjoint => {
            let witness = first_overlap(x, &table.y)?;
            return Ok((witness.is_none(), witness));
        }
        Condition::BPowers => {
            let mut ok = true;
            for i in 1..gd.eta {
                let bi = gd.b_power(i as i64);
                if bi.is_neg_identity() {
                    continue;
                }
                if !union_contained_in(&x.transform(&map(&bi)?)?, &table.y)? {
                    ok = false;
                    break;
                }
            }
            ok
        }
        Condition::BForward => {
            let y_plus = table.y_plus.as_ref().expect("infinite regime");
            let src = ConeUnion::concat(&[x, y_plus])?;
            union_contained_in(&src.transform(&map(&gd.b)?)?, y_plus)?
        }
        Condition::BBackward => {
            let y_minus = table.y_minus.as_ref().expect("infinite regime");
            let src = ConeUnion::concat(&[x, y_minus])?;
            union_contained_in(&src.transform(&map(&gd.b_inv)?)?, y_minus)?
        }
        Condition::TInverse => {
            let src = ConeUnion::concat(&[&table.y, &table.x_plus])?;
            union_contained_in(&src.transform(&map(&gd.t_inv)?)?, &table.x_plus)?
        }
        Condition::TForward => {
            let src = ConeUnion::concat(&[&table.y, &table.x_minus])?;
            union_contained_in(&src.transform(&map(&gd.t)?)?, &table.x_minus)?
        }
    };
    Ok((ok, None))
}

/// Every applicable condition except disjointness holds. Shrinking the cones
/// of a table that is already disjoint keeps it disjoint, so this is all a
/// simplification step that only removes rays needs to re-check.
pub(crate) fn closed_under_pingpong(
    gd: &GroupData,
    cert: &Certificate,
) -> Result<bool, VerifyError> {
    let table = build_table(gd, cert)?;
    let x = table.x();
    for cond in Condition::ALL {
        if cond == Condition::Disjoint || !cond.applies_to(table.regime) {
            continue;
        }
        if !evaluate(gd, &table, &x, cond)?.0 {
            return Ok(false);
        }
    }
    Ok(true)
}
