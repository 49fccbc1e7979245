use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{AlgebraError, Rat};

/// Integer polynomial, coefficients stored lowest degree first with no
/// trailing zeros (the zero polynomial has no coefficients).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntPoly {
    coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn one() -> Self {
        Self::from_i64(&[1])
    }

    /// `x^n - 1`
    pub fn x_pow_minus_one(n: usize) -> Self {
        let mut c = vec![BigInt::zero(); n + 1];
        c[0] = BigInt::from(-1);
        c[n] = BigInt::one();
        Self::new(c)
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> Option<&BigInt> {
        self.coeffs.last()
    }

    pub fn is_monic(&self) -> bool {
        self.leading().is_some_and(One::is_one)
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::new(Vec::new());
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::one(), |acc, _| acc.mul(self))
    }

    /// Exact division by a monic divisor. Returns `None` if the remainder is nonzero.
    pub fn div_exact(&self, divisor: &Self) -> Option<Self> {
        if !divisor.is_monic() {
            return None;
        }
        let mut rem = self.coeffs.clone();
        let d = divisor.degree();
        if rem.len() < divisor.coeffs.len() {
            return if self.is_zero() {
                Some(self.clone())
            } else {
                None
            };
        }
        let mut quot = vec![BigInt::zero(); rem.len() - d];
        for k in (0..quot.len()).rev() {
            let c = rem[k + d].clone();
            if c.is_zero() {
                continue;
            }
            for (i, dc) in divisor.coeffs.iter().enumerate() {
                rem[k + i] -= &c * dc;
            }
            quot[k] = c;
        }
        rem.iter().all(Zero::is_zero).then(|| Self::new(quot))
    }

    pub fn eval(&self, x: &BigInt) -> BigInt {
        self.coeffs
            .iter()
            .rev()
            .fold(BigInt::zero(), |acc, c| acc * x + c)
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let abs = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if c.is_negative() { '-' } else { '+' })?;
            }
            first = false;
            let show_coeff = !abs.is_one() || k == 0;
            if show_coeff {
                write!(f, "{abs}")?;
            }
            match k {
                0 => {}
                1 => write!(f, "x")?,
                _ => write!(f, "x^{k}")?,
            }
        }
        Ok(())
    }
}

pub fn euler_phi(n: u64) -> u64 {
    let mut result = n;
    let mut m = n;
    let mut p = 2;
    while p * p <= m {
        if m.is_multiple_of(p) {
            while m.is_multiple_of(p) {
                m /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if m > 1 {
        result -= result / m;
    }
    result
}

fn cyclotomic_cache() -> &'static Mutex<HashMap<u64, IntPoly>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, IntPoly>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The n-th cyclotomic polynomial, obtained by dividing `x^n - 1` by the
/// cyclotomic polynomials of all proper divisors of n.
pub fn cyclotomic(n: u64) -> IntPoly {
    assert!(n >= 1, "cyclotomic index must be positive");
    if let Some(p) = cyclotomic_cache().lock().expect("cache poisoned").get(&n) {
        return p.clone();
    }
    let mut p = IntPoly::x_pow_minus_one(n as usize);
    for d in (1..n).filter(|d| n.is_multiple_of(*d)) {
        p = p
            .div_exact(&cyclotomic(d))
            .expect("cyclotomic divisor divides x^n - 1");
    }
    cyclotomic_cache()
        .lock()
        .expect("cache poisoned")
        .insert(n, p.clone());
    p
}

/// Product of cyclotomic polynomials `prod Phi_index^multiplicity`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct CycFactorization {
    factors: Vec<(u64, u32)>,
}

impl CycFactorization {
    /// Builds a factorization from `(index, multiplicity)` pairs, merging
    /// repeated indices and sorting.
    pub fn new(pairs: &[(u64, u32)]) -> Result<Self, AlgebraError> {
        let mut map = BTreeMap::new();
        for &(idx, mult) in pairs {
            if idx == 0 || mult == 0 {
                return Err(AlgebraError::InvalidParameter(format!(
                    "factor ({idx}, {mult})"
                )));
            }
            *map.entry(idx).or_insert(0) += mult;
        }
        Ok(Self {
            factors: map.into_iter().collect(),
        })
    }

    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    pub fn degree(&self) -> usize {
        self.factors
            .iter()
            .map(|&(i, m)| euler_phi(i) as usize * m as usize)
            .sum()
    }

    /// lcm of the indices: the order of every root of the product.
    pub fn index_lcm(&self) -> u64 {
        self.factors.iter().fold(1, |acc, &(i, _)| acc.lcm(&i))
    }

    pub fn shares_factor_with(&self, other: &Self) -> bool {
        self.factors
            .iter()
            .any(|(i, _)| other.factors.iter().any(|(j, _)| i == j))
    }

    /// The parameter vector: every primitive residue `p/q` repeated by multiplicity,
    /// sorted by denominator then numerator.
    pub fn params(&self) -> Vec<Rat> {
        let mut out = Vec::new();
        for &(q, m) in &self.factors {
            for p in (0..q).filter(|p| p.gcd(&q) == 1) {
                for _ in 0..m {
                    out.push(Rat::new(p.into(), q.into()));
                }
            }
        }
        out
    }
}

impl fmt::Display for CycFactorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|&(i, m)| {
                if m == 1 {
                    format!("Phi{i}")
                } else {
                    format!("Phi{i}^{m}")
                }
            })
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

pub fn expand(fac: &CycFactorization) -> IntPoly {
    fac.factors.iter().fold(IntPoly::one(), |acc, &(i, m)| {
        acc.mul(&cyclotomic(i).pow(m))
    })
}

/// Groups parameters `p/q in [0,1)` by denominator. Every residue coprime to
/// q must occur equally often for the product of `(x - e^{2 pi i p/q})` to
/// have integer coefficients.
pub fn params_to_factorization(params: &[Rat]) -> Result<CycFactorization, AlgebraError> {
    let mut by_den: BTreeMap<u64, BTreeMap<u64, u32>> = BTreeMap::new();
    for p in params {
        if p.is_negative() || *p >= Rat::one() {
            return Err(AlgebraError::InvalidParameter(p.to_string()));
        }
        let q = p
            .denom()
            .to_u64()
            .ok_or_else(|| AlgebraError::InvalidParameter(p.to_string()))?;
        let num = p
            .numer()
            .to_u64()
            .expect("non-negative numerator below denominator");
        *by_den.entry(q).or_default().entry(num).or_insert(0) += 1;
    }
    let mut pairs = Vec::new();
    for (q, counts) in by_den {
        let residues: Vec<u64> = (0..q).filter(|r| r.gcd(&q) == 1).collect();
        let m = counts.get(&residues[0]).copied().unwrap_or(0);
        if m == 0
            || residues
                .iter()
                .any(|r| counts.get(r).copied().unwrap_or(0) != m)
        {
            return Err(AlgebraError::NotGaloisStable(q));
        }
        pairs.push((q, m));
    }
    CycFactorization::new(&pairs)
}
