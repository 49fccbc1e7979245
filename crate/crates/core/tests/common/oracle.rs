//! Exact feasibility and rank oracles written independently of the cone
//! engine, plus plain dense integer matrix products.
//!
//! `v` lies in `cone(R)` iff the system `R lambda = v, lambda >= 0` is
//! feasible; by Caratheodory it is feasible iff it has a basic solution, so
//! `contains` enumerates linearly independent subsets of `R`, solves each
//! square system exactly and checks the signs.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use pingpong_core::algebra::{IntMatrix, IntVec, Rat};

fn rat(x: &BigInt) -> Rat {
    Rat::from_integer(x.clone())
}

/// Row reduction of the columns `cols` augmented with `rhs`; returns the
/// coefficients when `cols` are independent and `rhs` is in their span.
fn solve(cols: &[&IntVec], rhs: &[BigInt]) -> Option<Vec<Rat>> {
    let n = rhs.len();
    let k = cols.len();
    let mut m: Vec<Vec<Rat>> = (0..n)
        .map(|i| {
            let mut row: Vec<Rat> = cols.iter().map(|c| rat(&c[i])).collect();
            row.push(rat(&rhs[i]));
            row
        })
        .collect();
    let mut r = 0;
    for c in 0..k {
        let p = (r..n).find(|&i| !m[i][c].is_zero())?;
        m.swap(r, p);
        let piv = m[r][c].clone();
        for x in m[r].iter_mut() {
            *x = &*x / &piv;
        }
        for i in 0..n {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                let pivot_row = m[r].clone();
                for (x, p) in m[i].iter_mut().zip(&pivot_row) {
                    *x = &*x - &f * p;
                }
            }
        }
        r += 1;
    }
    if m[r..].iter().any(|row| !row[k].is_zero()) {
        return None;
    }
    Some((0..k).map(|i| m[i][k].clone()).collect())
}

fn subsets(len: usize, max: usize) -> Vec<Vec<usize>> {
    (1u32..(1 << len))
        .filter(|m| m.count_ones() as usize <= max)
        .map(|m| (0..len).filter(|i| m >> i & 1 == 1).collect())
        .collect()
}

pub fn contains(rays: &[IntVec], v: &[BigInt]) -> bool {
    if v.iter().all(Zero::is_zero) {
        return true;
    }
    subsets(rays.len(), v.len()).into_iter().any(|s| {
        let cols: Vec<&IntVec> = s.iter().map(|&i| &rays[i]).collect();
        solve(&cols, v).is_some_and(|lam| lam.iter().all(|x| !x.is_negative()))
    })
}

pub fn rank(rays: &[IntVec]) -> usize {
    let n = rays.first().map_or(0, Vec::len);
    let zero = vec![BigInt::zero(); n];
    // largest independent subset: a subset is independent iff the zero
    // right-hand side has the unique (zero) solution with full pivots
    subsets(rays.len(), n)
        .into_iter()
        .filter(|s| {
            let cols: Vec<&IntVec> = s.iter().map(|&i| &rays[i]).collect();
            solve(&cols, &zero).is_some()
        })
        .map(|s| s.len())
        .max()
        .unwrap_or(0)
}

pub fn int_vec(v: &[i64]) -> IntVec {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

pub type Dense = Vec<Vec<BigInt>>;

pub fn dense(m: &IntMatrix) -> Dense {
    m.row_vecs()
}

pub fn mul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| &a[i][k] * &b[k][j]).sum())
                .collect()
        })
        .collect()
}

pub fn ident(n: usize) -> Dense {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        BigInt::one()
                    } else {
                        BigInt::zero()
                    }
                })
                .collect()
        })
        .collect()
}

pub fn minus_ident(a: &Dense) -> Dense {
    let mut m = a.clone();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] -= 1;
    }
    m
}

pub fn is_zero(a: &Dense) -> bool {
    a.iter().flatten().all(Zero::is_zero)
}

/// Least k with (M^k - I)^n = 0, by repeated multiplication.
pub fn unipotent_exponent(m: &IntMatrix, limit: u64) -> Option<u64> {
    let m = dense(m);
    let n = m.len();
    let mut power = ident(n);
    for k in 1..=limit {
        power = mul(&power, &m);
        let nil = minus_ident(&power);
        let mut acc = ident(n);
        for _ in 0..n {
            acc = mul(&acc, &nil);
        }
        if is_zero(&acc) {
            return Some(k);
        }
    }
    None
}
