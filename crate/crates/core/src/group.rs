//! Group data of a hypergeometric case: the companion generators `A`, `B`,
//! the transvection `T = B A^-1`, the involution `E`, the unipotency
//! exponents and the invariant symplectic form.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{expand, AlgebraError, CycFactorization, IntMatrix, IntPoly, Rat, RatMatrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("invalid case: {0}")]
    InvalidCase(String),
    #[error("structural invariant violated: {0}")]
    StructuralInvariantViolated(String),
    #[error("no k <= {0} makes the matrix unipotent")]
    BoundExceeded(u64),
    #[error("no nonzero invariant antisymmetric form")]
    NoInvariantForm,
    #[error("every invariant antisymmetric form is degenerate")]
    DegenerateForm,
    #[error("structure report requested for an unverified certificate")]
    NotVerified,
}

/// A pair of cyclotomic products `f` (from alpha) and `g` (from beta).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HypergeometricCase {
    pub label: String,
    pub alpha: CycFactorization,
    pub beta: CycFactorization,
}

impl HypergeometricCase {
    pub fn new(
        label: impl Into<String>,
        alpha: CycFactorization,
        beta: CycFactorization,
    ) -> Result<Self, GroupError> {
        let label = label.into();
        if alpha.degree() != beta.degree() || alpha.degree() == 0 {
            return Err(GroupError::InvalidCase(format!(
                "{label}: deg f = {} but deg g = {}",
                alpha.degree(),
                beta.degree()
            )));
        }
        if alpha.shares_factor_with(&beta) {
            return Err(GroupError::InvalidCase(format!(
                "{label}: f and g have a common root"
            )));
        }
        Ok(Self { label, alpha, beta })
    }

    pub fn dimension(&self) -> usize {
        self.alpha.degree()
    }

    pub fn f(&self) -> IntPoly {
        expand(&self.alpha)
    }

    pub fn g(&self) -> IntPoly {
        expand(&self.beta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    Finite(u64),
    Infinite,
}

impl Order {
    pub fn is_finite(self) -> bool {
        matches!(self, Order::Finite(_))
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Finite(m) => write!(f, "{m}"),
            Order::Infinite => write!(f, "infinite"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GroupData {
    pub case: HypergeometricCase,
    pub n: usize,
    pub a: IntMatrix,
    pub b: IntMatrix,
    pub a_inv: IntMatrix,
    pub b_inv: IntMatrix,
    pub t: IntMatrix,
    pub t_inv: IntMatrix,
    pub e: IntMatrix,
    pub eta: u64,
    pub lambda: u64,
    pub order_b: Order,
    pub minus_i_in_b: bool,
    pub omega: RatMatrix,
}

/// Companion matrix with subdiagonal identity block and last column equal to
/// the negated coefficients of p (without the leading 1).
pub fn companion_matrix(p: &IntPoly) -> Result<IntMatrix, GroupError> {
    if !p.is_monic() || p.degree() == 0 {
        return Err(AlgebraError::NotMonic.into());
    }
    let n = p.degree();
    let mut m = IntMatrix::zeros(n, n);
    for i in 1..n {
        m.set(i, i - 1, BigInt::one());
    }
    for (i, c) in p.coeffs()[..n].iter().enumerate() {
        m.set(i, n - 1, -c);
    }
    Ok(m)
}

fn is_nilpotent_power(m: &IntMatrix, k: u64, n: usize) -> Result<bool, GroupError> {
    Ok(m.pow(k)?.minus_identity().pow(n as u64)?.is_zero())
}

/// Least `k >= 1` with `(M^k - I)^n = 0`, searched up to `bound`.
pub fn compute_eta(m: &IntMatrix, n: usize, bound: u64) -> Result<u64, GroupError> {
    let mut power = IntMatrix::identity(m.rows());
    for k in 1..=bound {
        power = power.mul(m)?;
        if power.minus_identity().pow(n as u64)?.is_zero() {
            return Ok(k);
        }
    }
    Err(GroupError::BoundExceeded(bound))
}

/// Order of `B` given its unipotency exponent, and whether `-I` is a power of `B`.
pub fn compute_order(b: &IntMatrix, eta: u64) -> Result<(Order, bool), GroupError> {
    if !b.pow(eta)?.is_identity() {
        return Ok((Order::Infinite, false));
    }
    let order = (1..=eta)
        .filter(|d| eta.is_multiple_of(*d))
        .find(|&d| b.pow(d).map(|p| p.is_identity()).unwrap_or(false))
        .expect("eta itself works");
    let mut power = IntMatrix::identity(b.rows());
    let mut minus_i = false;
    for _ in 1..=order {
        power = power.mul(b)?;
        if power.is_neg_identity() {
            minus_i = true;
            break;
        }
    }
    Ok((Order::Finite(order), minus_i))
}

/// Solves `A^T W A = W`, `B^T W B = W`, `W^T = -W` and returns the first
/// nondegenerate kernel element, normalized so its first nonzero entry
/// (row-major) is 1.
pub fn symplectic_form(a: &IntMatrix, b: &IntMatrix) -> Result<RatMatrix, GroupError> {
    let n = a.rows();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let basis = |idx: usize| {
        let (i, j) = pairs[idx];
        let mut w = RatMatrix::zeros(n, n);
        w.set(i, j, Rat::one());
        w.set(j, i, -Rat::one());
        w
    };
    let (ar, br) = (a.to_rat(), b.to_rat());
    let (at, bt) = (ar.transpose(), br.transpose());
    // each column holds the upper-triangular entries of g^T W g - W for both generators
    let mut system = RatMatrix::zeros(2 * pairs.len(), pairs.len());
    for col in 0..pairs.len() {
        let w = basis(col);
        for (block, (gt, g)) in [(&at, &ar), (&bt, &br)].into_iter().enumerate() {
            let image = gt.mul(&w)?.mul(g)?.sub(&w)?;
            for (row, &(i, j)) in pairs.iter().enumerate() {
                system.set(block * pairs.len() + row, col, image.get(i, j).clone());
            }
        }
    }
    let kernel = system.kernel();
    if kernel.is_empty() {
        return Err(GroupError::NoInvariantForm);
    }
    let assemble = |coords: &[Rat]| {
        let mut w = RatMatrix::zeros(n, n);
        for (c, &(i, j)) in coords.iter().zip(&pairs) {
            w.set(i, j, c.clone());
            w.set(j, i, -c.clone());
        }
        w
    };
    let mut candidates: Vec<Vec<Rat>> = kernel.clone();
    if kernel.len() > 1 {
        let sum = (0..pairs.len())
            .map(|k| kernel.iter().fold(Rat::zero(), |acc, v| acc + &v[k]))
            .collect();
        candidates.push(sum);
    }
    for coords in candidates {
        let w = assemble(&coords);
        if !w.det()?.is_zero() {
            let lead = w
                .entries()
                .iter()
                .find(|x| !x.is_zero())
                .expect("nonzero form")
                .clone();
            return Ok(w.map(|x| x / &lead));
        }
    }
    Err(GroupError::DegenerateForm)
}

pub fn build_group_data(case: &HypergeometricCase) -> Result<GroupData, GroupError> {
    let n = case.dimension();
    let a = companion_matrix(&case.f())?;
    let b = companion_matrix(&case.g())?;
    let violated =
        |what: &str| GroupError::StructuralInvariantViolated(format!("{}: {what}", case.label));

    let a_inv = a.inverse().map_err(|_| violated("A is not unimodular"))?;
    let b_inv = b.inverse().map_err(|_| violated("B is not unimodular"))?;
    let t = b.mul(&a_inv)?;
    let t_inv = a.mul(&b_inv)?;
    let e = b.mul(&IntMatrix::reversal(n))?;

    if t.minus_identity().rank() != 1 {
        return Err(violated("rank(T - I) != 1"));
    }
    if !e.mul(&e)?.is_identity() {
        return Err(violated("E^2 != I"));
    }
    // E is an involution, so E^-1 = E
    if e.mul(&b)?.mul(&e)? != b_inv {
        return Err(violated("E B E^-1 != B^-1"));
    }
    if e.mul(&t)?.mul(&e)? != t_inv {
        return Err(violated("E T E^-1 != T^-1"));
    }

    let eta = compute_eta(&b, n, case.beta.index_lcm())?;
    let lambda = compute_eta(&a, n, case.alpha.index_lcm())?;
    let (order_b, minus_i_in_b) = compute_order(&b, eta)?;
    let omega = symplectic_form(&a, &b)?;

    let gd = GroupData {
        case: case.clone(),
        n,
        a,
        b,
        a_inv,
        b_inv,
        t,
        t_inv,
        e,
        eta,
        lambda,
        order_b,
        minus_i_in_b,
        omega,
    };
    debug_assert!(is_nilpotent_power(&gd.b, gd.eta, n).unwrap_or(false));
    Ok(gd)
}

impl GroupData {
    /// `B^k` for any integer k.
    pub fn b_power(&self, k: i64) -> IntMatrix {
        let base = if k >= 0 { &self.b } else { &self.b_inv };
        base.pow(k.unsigned_abs()).expect("square matrix")
    }

    /// The primitive integer generator of `Im(T - I)`.
    pub fn transvection_ray(&self) -> Vec<BigInt> {
        let tm = self.t.minus_identity();
        let col = tm
            .columns()
            .into_iter()
            .find(|c| !crate::algebra::is_zero_vec(c))
            .expect("rank one");
        crate::algebra::make_primitive(col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureReport {
    /// `<T>` or `<±T>`
    pub g1: String,
    /// `<B>`: cyclic of order m or infinite cyclic
    pub g2: String,
    /// Amalgamated subgroup, trivial or `{±I}`
    pub h: String,
    pub iso_type: String,
}

impl fmt::Display for StructureReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.iso_type)
    }
}

/// The abstract group structure implied by a passing certificate.
pub fn structure_report(gd: &GroupData, verified: bool) -> Result<StructureReport, GroupError> {
    if !verified {
        return Err(GroupError::NotVerified);
    }
    let report = match gd.order_b {
        Order::Finite(m) if gd.minus_i_in_b => StructureReport {
            g1: "<±T> = Z x Z/2".into(),
            g2: format!("<B> = Z/{m}"),
            h: "{±I} = Z/2".into(),
            iso_type: format!("(Z x Z/2) *_{{Z/2}} Z/{m}"),
        },
        Order::Finite(m) => StructureReport {
            g1: "<T> = Z".into(),
            g2: format!("<B> = Z/{m}"),
            h: "trivial".into(),
            iso_type: format!("Z * Z/{m}"),
        },
        Order::Infinite => StructureReport {
            g1: "<T> = Z".into(),
            g2: "<B> = Z".into(),
            h: "trivial".into(),
            iso_type: "Z * Z".into(),
        },
    };
    Ok(report)
}
