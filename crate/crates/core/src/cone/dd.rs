//! Double description conversion from constraints to generators.
//!
//! Input: equations `a.x = 0` and inequalities `a.x >= 0` in Q^n with
//! integer normals. Output: a lineality basis and the extreme rays of the
//! pointed part. Integer arithmetic throughout; every generated vector is
//! reduced to its primitive representative.

use std::time::Instant;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::algebra::{dot, make_primitive, IntVec};

#[derive(Clone, Debug, Default)]
pub(crate) struct Generators {
    pub lineality: Vec<IntVec>,
    pub rays: Vec<IntVec>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    fn new(bits: usize) -> Self {
        Self {
            words: vec![0; bits.div_ceil(64).max(1)],
        }
    }

    fn full(upto: usize, bits: usize) -> Self {
        let mut s = Self::new(bits);
        for i in 0..upto {
            s.insert(i);
        }
        s
    }

    fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn intersection(&self, other: &Self) -> Self {
        Self {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }

    fn is_superset_of(&self, other: &Self) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & b == *b)
    }

    fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

struct Ray {
    v: IntVec,
    zeros: BitSet,
}

/// Replaces `v` by the primitive vector of `(a.l) v - (a.v) l`, which lies in
/// the hyperplane `a.x = 0`.
fn eliminate(v: &IntVec, v_val: &BigInt, l: &IntVec, l_val: &BigInt) -> IntVec {
    let out = v
        .iter()
        .zip(l)
        .map(|(x, y)| l_val * x - v_val * y)
        .collect();
    make_primitive(out)
}

pub(crate) fn constraints_to_generators(
    n: usize,
    equations: &[IntVec],
    inequalities: &[IntVec],
) -> Generators {
    constraints_to_generators_until(n, equations, inequalities, None).expect("no deadline")
}

/// As [`constraints_to_generators`], giving up with `None` once `deadline`
/// has passed (checked per constraint and during pair enumeration).
pub(crate) fn constraints_to_generators_until(
    n: usize,
    equations: &[IntVec],
    inequalities: &[IntVec],
    deadline: Option<Instant>,
) -> Option<Generators> {
    let expired = || deadline.is_some_and(|d| Instant::now() >= d);
    // an equation is the pair of opposite inequalities
    let mut constraints: Vec<IntVec> = Vec::with_capacity(2 * equations.len() + inequalities.len());
    for e in equations {
        constraints.push(e.clone());
        constraints.push(e.iter().map(|x| -x).collect());
    }
    constraints.extend(inequalities.iter().cloned());
    let m = constraints.len();

    let mut lineality: Vec<IntVec> = (0..n)
        .map(|i| {
            let mut v = vec![BigInt::zero(); n];
            v[i] = BigInt::from(1);
            v
        })
        .collect();
    let mut rays: Vec<Ray> = Vec::new();

    for (idx, a) in constraints.iter().enumerate() {
        if expired() {
            return None;
        }
        let pivot = lineality.iter().position(|l| !dot(a, l).is_zero());
        if let Some(p) = pivot {
            let mut l = lineality.swap_remove(p);
            let mut l_val = dot(a, &l);
            if l_val.is_negative() {
                l = l.iter().map(|x| -x).collect();
                l_val = -l_val;
            }
            for other in lineality.iter_mut() {
                let val = dot(a, other);
                if !val.is_zero() {
                    *other = eliminate(other, &val, &l, &l_val);
                }
            }
            for r in rays.iter_mut() {
                let val = dot(a, &r.v);
                if !val.is_zero() {
                    r.v = eliminate(&r.v, &val, &l, &l_val);
                }
                r.zeros.insert(idx);
            }
            // the old line becomes a ray tight at every earlier constraint
            rays.push(Ray {
                v: l,
                zeros: BitSet::full(idx, m),
            });
            continue;
        }

        let values: Vec<BigInt> = rays.iter().map(|r| dot(a, &r.v)).collect();
        if values.iter().all(|v| !v.is_negative()) {
            for (r, v) in rays.iter_mut().zip(&values) {
                if v.is_zero() {
                    r.zeros.insert(idx);
                }
            }
            continue;
        }
        let pos: Vec<usize> = (0..rays.len())
            .filter(|&i| values[i].is_positive())
            .collect();
        let neg: Vec<usize> = (0..rays.len())
            .filter(|&i| values[i].is_negative())
            .collect();
        // two rays are adjacent iff the common tight set is contained in no
        // third ray's tight set; a 2-face needs at least d - 2 tight constraints
        let min_common = n.saturating_sub(lineality.len()).saturating_sub(2);
        let mut fresh = Vec::new();
        for (k, &p) in pos.iter().enumerate() {
            if k % 16 == 15 && expired() {
                return None;
            }
            for &q in &neg {
                let common = rays[p].zeros.intersection(&rays[q].zeros);
                if common.count() < min_common {
                    continue;
                }
                let adjacent = (0..rays.len())
                    .all(|r| r == p || r == q || !rays[r].zeros.is_superset_of(&common));
                if !adjacent {
                    continue;
                }
                let v = eliminate(&rays[q].v, &values[q], &rays[p].v, &values[p]);
                let mut zeros = common;
                zeros.insert(idx);
                fresh.push(Ray { v, zeros });
            }
        }
        let mut kept = Vec::with_capacity(rays.len() - neg.len() + fresh.len());
        for (mut r, v) in rays.into_iter().zip(values) {
            if v.is_negative() {
                continue;
            }
            if v.is_zero() {
                r.zeros.insert(idx);
            }
            kept.push(r);
        }
        kept.extend(fresh);
        rays = kept;
    }

    Some(Generators {
        lineality,
        rays: rays.into_iter().map(|r| r.v).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::int_vec;

    #[test]
    fn positive_quadrant() {
        let g = constraints_to_generators(2, &[], &[int_vec(&[1, 0]), int_vec(&[0, 1])]);
        assert!(g.lineality.is_empty());
        let mut rays = g.rays;
        rays.sort();
        assert_eq!(rays, vec![int_vec(&[0, 1]), int_vec(&[1, 0])]);
    }

    #[test]
    fn half_plane_keeps_a_line() {
        let g = constraints_to_generators(2, &[], &[int_vec(&[0, 1])]);
        assert_eq!(g.lineality.len(), 1);
        assert_eq!(g.rays.len(), 1);
    }

    #[test]
    fn infeasible_interior_gives_origin() {
        let g = constraints_to_generators(
            2,
            &[],
            &[int_vec(&[1, 0]), int_vec(&[0, 1]), int_vec(&[-1, -1])],
        );
        assert!(g.lineality.is_empty());
        assert!(g.rays.is_empty());
    }

    #[test]
    fn square_cone_in_three_space() {
        // cone over the square with vertices (±1, ±1, 1)
        let ineqs = [[1, 0, 1], [-1, 0, 1], [0, 1, 1], [0, -1, 1]].map(|r| int_vec(&r));
        let g = constraints_to_generators(3, &[], &ineqs);
        assert_eq!(g.rays.len(), 4);
        assert!(g.lineality.is_empty());
    }
}
