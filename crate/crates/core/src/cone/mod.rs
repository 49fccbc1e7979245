//! Exact rational polyhedral cones in Q^n.
//!
//! A cone is stored by its generating rays (primitive integer vectors). The
//! facet description is computed lazily with the double description method
//! and cached; all predicates use closed-cone semantics.

mod dd;

use std::collections::HashSet;
use std::sync::OnceLock;
use std::time::Instant;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::algebra::{
    clear_denominators, dot, is_zero_vec, make_primitive, neg_vec, IntMatrix, IntVec, Rat,
    RatMatrix,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConeError {
    #[error("a cone needs at least one generator")]
    EmptyGenerators,
    #[error("zero vector given as a generator")]
    ZeroRay,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("linear map is singular")]
    SingularTransform,
    #[error("deadline expired during a facet computation")]
    DeadlineExpired,
}

fn check_dim(expected: usize, got: usize) -> Result<(), ConeError> {
    if expected == got {
        Ok(())
    } else {
        Err(ConeError::DimensionMismatch { expected, got })
    }
}

/// Facet description: the closed cone is `{x : e.x = 0 for all equations, h.x >= 0 for all inequalities}`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Hrep {
    pub inequalities: Vec<IntVec>,
    pub equations: Vec<IntVec>,
}

impl Hrep {
    pub fn admits(&self, v: &[BigInt]) -> bool {
        self.equations.iter().all(|e| dot(e, v).is_zero())
            && self.inequalities.iter().all(|h| !dot(h, v).is_negative())
    }

    /// Every equation vanishes and every inequality is strictly positive.
    fn admits_strictly(&self, v: &[BigInt]) -> bool {
        self.equations.is_empty() && self.inequalities.iter().all(|h| dot(h, v).is_positive())
    }

    fn negated(&self) -> Self {
        Self {
            inequalities: self.inequalities.iter().map(|h| neg_vec(h)).collect(),
            equations: self.equations.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RationalCone {
    dim: usize,
    rays: Vec<IntVec>,
    hrep: OnceLock<Hrep>,
}

impl PartialEq for RationalCone {
    /// Equality of generator lists; use [`RationalCone::same_cone`] for set equality.
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.rays == other.rays
    }
}

impl RationalCone {
    /// Cone generated by rational vectors. Rays are scaled to primitive
    /// integer vectors and duplicates removed, keeping first occurrences.
    pub fn from_rays(rays: &[Vec<Rat>]) -> Result<Self, ConeError> {
        let ints: Vec<IntVec> = rays.iter().map(|r| clear_denominators(r)).collect();
        Self::from_int_rays(&ints)
    }

    pub fn from_int_rays(rays: &[IntVec]) -> Result<Self, ConeError> {
        let first = rays.first().ok_or(ConeError::EmptyGenerators)?;
        let dim = first.len();
        for r in rays {
            check_dim(dim, r.len())?;
            if is_zero_vec(r) {
                return Err(ConeError::ZeroRay);
            }
        }
        Ok(Self::from_normalized(
            dim,
            rays.iter().cloned().map(make_primitive).collect(),
        ))
    }

    /// Cone whose rays are the columns of `m`.
    pub fn from_columns(m: &IntMatrix) -> Result<Self, ConeError> {
        Self::from_int_rays(&m.columns())
    }

    /// The trivial cone `{0}`; only produced as an intersection result.
    pub fn trivial(dim: usize) -> Self {
        Self::from_normalized(dim, Vec::new())
    }

    fn from_normalized(dim: usize, rays: Vec<IntVec>) -> Self {
        let mut seen = HashSet::new();
        let rays = rays
            .into_iter()
            .filter(|r| seen.insert(r.clone()))
            .collect();
        Self {
            dim,
            rays,
            hrep: OnceLock::new(),
        }
    }

    fn with_hrep(dim: usize, rays: Vec<IntVec>, hrep: Option<Hrep>) -> Self {
        let cone = Self::from_normalized(dim, rays);
        if let Some(h) = hrep {
            let _ = cone.hrep.set(h);
        }
        cone
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rays(&self) -> &[IntVec] {
        &self.rays
    }

    pub fn is_trivial(&self) -> bool {
        self.rays.is_empty()
    }

    /// Facet description, computed on first use by dualizing the generators.
    pub fn hrep(&self) -> &Hrep {
        self.hrep_before(None).expect("no deadline")
    }

    /// [`hrep`](Self::hrep) that gives up once `deadline` has passed; nothing
    /// is cached in that case.
    pub fn hrep_before(&self, deadline: Option<Instant>) -> Result<&Hrep, ConeError> {
        if let Some(h) = self.hrep.get() {
            return Ok(h);
        }
        let dual = dd::constraints_to_generators_until(self.dim, &[], &self.rays, deadline)
            .ok_or(ConeError::DeadlineExpired)?;
        let h = Hrep {
            inequalities: dual.rays,
            equations: dual.lineality.into_iter().map(make_primitive).collect(),
        };
        // a concurrent computation may have won; both results are equal
        let _ = self.hrep.set(h);
        Ok(self.hrep.get().expect("just set"))
    }

    pub fn has_cached_hrep(&self) -> bool {
        self.hrep.get().is_some()
    }

    /// Membership of `v` in the closed cone.
    pub fn contains(&self, v: &[BigInt]) -> Result<bool, ConeError> {
        check_dim(self.dim, v.len())?;
        Ok(self.hrep().admits(v))
    }

    pub fn contains_rational(&self, v: &[Rat]) -> Result<bool, ConeError> {
        check_dim(self.dim, v.len())?;
        Ok(self.hrep().admits(&clear_denominators(v)))
    }

    /// Every generator of `other` lies in `self`.
    pub fn contains_cone(&self, other: &RationalCone) -> Result<bool, ConeError> {
        check_dim(self.dim, other.dim)?;
        let h = self.hrep();
        Ok(other.rays.iter().all(|r| h.admits(r)))
    }

    /// Mutual containment.
    pub fn same_cone(&self, other: &RationalCone) -> Result<bool, ConeError> {
        Ok(self.contains_cone(other)? && other.contains_cone(self)?)
    }

    /// Nonempty interior, i.e. the rays span Q^n.
    pub fn is_solid(&self) -> bool {
        if self.rays.len() < self.dim {
            return false;
        }
        if let Some(h) = self.hrep.get() {
            return h.equations.is_empty();
        }
        IntMatrix::from_rows(self.rays.clone())
            .expect("uniform ray length")
            .rank()
            == self.dim
    }

    /// Sum of the generators; an interior point when the cone is solid.
    fn ray_sum(&self) -> IntVec {
        let mut s = vec![BigInt::zero(); self.dim];
        for r in &self.rays {
            for (a, b) in s.iter_mut().zip(r) {
                *a += b;
            }
        }
        s
    }

    pub fn intersect(&self, other: &RationalCone) -> Result<RationalCone, ConeError> {
        check_dim(self.dim, other.dim)?;
        let (ha, hb) = (self.hrep(), other.hrep());
        let equations: Vec<IntVec> = ha.equations.iter().chain(&hb.equations).cloned().collect();
        let inequalities: Vec<IntVec> = ha
            .inequalities
            .iter()
            .chain(&hb.inequalities)
            .cloned()
            .collect();
        let gens = dd::constraints_to_generators(self.dim, &equations, &inequalities);
        let mut rays = gens.rays;
        for l in gens.lineality {
            let l = make_primitive(l);
            rays.push(neg_vec(&l));
            rays.push(l);
        }
        Ok(Self::from_normalized(self.dim, rays))
    }

    /// Same cone generated by its extreme rays only. A cone containing a
    /// line is re-generated from scratch (lines become pairs of opposite rays).
    pub fn reduced(&self) -> RationalCone {
        if self.rays.len() <= 1 {
            return self.clone();
        }
        let h = self.hrep();
        let normals: Vec<IntVec> = h.equations.iter().chain(&h.inequalities).cloned().collect();
        let rank = |rows: Vec<IntVec>| {
            if rows.is_empty() {
                0
            } else {
                IntMatrix::from_rows(rows).expect("uniform length").rank()
            }
        };
        if rank(normals) < self.dim {
            let gens = dd::constraints_to_generators(self.dim, &h.equations, &h.inequalities);
            let mut rays = gens.rays;
            for l in gens.lineality {
                let l = make_primitive(l);
                rays.push(neg_vec(&l));
                rays.push(l);
            }
            return Self::with_hrep(self.dim, rays, Some(h.clone()));
        }
        // in a pointed cone a generator is extreme iff no other generator is
        // tight on every facet it is tight on
        let words = h.inequalities.len().div_ceil(64).max(1);
        let zero_sets: Vec<Vec<u64>> = self
            .rays
            .iter()
            .map(|r| {
                let mut z = vec![0u64; words];
                for (i, a) in h.inequalities.iter().enumerate() {
                    if dot(a, r).is_zero() {
                        z[i / 64] |= 1 << (i % 64);
                    }
                }
                z
            })
            .collect();
        let subset = |a: &[u64], b: &[u64]| a.iter().zip(b).all(|(x, y)| x & !y == 0);
        let extreme: Vec<IntVec> = (0..self.rays.len())
            .into_par_iter()
            .filter(|&i| {
                (0..self.rays.len()).all(|j| j == i || !subset(&zero_sets[i], &zero_sets[j]))
            })
            .map(|i| self.rays[i].clone())
            .collect();
        Self::with_hrep(self.dim, extreme, Some(h.clone()))
    }

    /// `-C`; the cached facets carry over.
    pub fn negate(&self) -> RationalCone {
        Self::with_hrep(
            self.dim,
            self.rays.iter().map(|r| neg_vec(r)).collect(),
            self.hrep.get().map(Hrep::negated),
        )
    }

    /// Image under an invertible linear map. A cached facet description is
    /// mapped along by the inverse transpose instead of being recomputed.
    pub fn transform(&self, map: &LinearMap) -> Result<RationalCone, ConeError> {
        check_dim(self.dim, map.dim())?;
        let rays = self.rays.iter().map(|r| map.apply(r)).collect();
        let hrep = self.hrep.get().map(|h| Hrep {
            inequalities: h.inequalities.iter().map(|v| map.apply_dual(v)).collect(),
            equations: h.equations.iter().map(|v| map.apply_dual(v)).collect(),
        });
        Ok(Self::with_hrep(self.dim, rays, hrep))
    }

    /// Whether the closed intersection with `other` has full dimension.
    pub fn overlaps(&self, other: &RationalCone) -> Result<bool, ConeError> {
        check_dim(self.dim, other.dim)?;
        if !self.is_solid() || !other.is_solid() {
            return Ok(false);
        }
        let (ha, hb) = (self.hrep(), other.hrep());
        // a facet of one cone weakly separating the other's rays confines the
        // intersection to a hyperplane
        let separated = |h: &Hrep, rays: &[IntVec]| {
            h.inequalities
                .iter()
                .any(|n| rays.iter().all(|r| !dot(n, r).is_positive()))
        };
        if separated(ha, &other.rays) || separated(hb, &self.rays) {
            return Ok(false);
        }
        if hb.admits_strictly(&self.ray_sum()) || ha.admits_strictly(&other.ray_sum()) {
            return Ok(true);
        }
        Ok(self.intersect(other)?.is_solid())
    }
}

/// Invertible linear map together with its inverse transpose, which acts on
/// facet normals.
#[derive(Clone, Debug)]
pub struct LinearMap {
    forward: MapMatrix,
    dual: MapMatrix,
}

#[derive(Clone, Debug)]
enum MapMatrix {
    Int(IntMatrix),
    Rat(RatMatrix),
}

impl MapMatrix {
    fn new(m: RatMatrix) -> Self {
        match m.to_int() {
            Some(i) => MapMatrix::Int(i),
            None => MapMatrix::Rat(m),
        }
    }

    fn apply(&self, v: &[BigInt]) -> IntVec {
        match self {
            MapMatrix::Int(m) => make_primitive(m.mul_vec(v)),
            MapMatrix::Rat(m) => {
                let rv: Vec<Rat> = v.iter().map(|x| Rat::from_integer(x.clone())).collect();
                clear_denominators(&m.mul_vec(&rv))
            }
        }
    }

    fn dim(&self) -> usize {
        match self {
            MapMatrix::Int(m) => m.rows(),
            MapMatrix::Rat(m) => m.rows(),
        }
    }
}

impl LinearMap {
    pub fn new(m: &RatMatrix) -> Result<Self, ConeError> {
        if !m.is_square() {
            return Err(ConeError::DimensionMismatch {
                expected: m.rows(),
                got: m.cols(),
            });
        }
        let inv = m.inverse().map_err(|_| ConeError::SingularTransform)?;
        Ok(Self {
            forward: MapMatrix::new(m.clone()),
            dual: MapMatrix::new(inv.transpose()),
        })
    }

    pub fn from_int(m: &IntMatrix) -> Result<Self, ConeError> {
        Self::new(&m.to_rat())
    }

    pub fn dim(&self) -> usize {
        self.forward.dim()
    }

    pub fn apply(&self, v: &[BigInt]) -> IntVec {
        self.forward.apply(v)
    }

    fn apply_dual(&self, v: &[BigInt]) -> IntVec {
        self.dual.apply(v)
    }
}

/// A finite union of cones of one ambient dimension.
#[derive(Clone, Debug)]
pub struct ConeUnion {
    cones: Vec<RationalCone>,
}

impl ConeUnion {
    pub fn new(cones: Vec<RationalCone>) -> Result<Self, ConeError> {
        let first = cones.first().ok_or(ConeError::EmptyGenerators)?;
        let dim = first.dim();
        for c in &cones {
            check_dim(dim, c.dim())?;
        }
        Ok(Self { cones })
    }

    pub fn cones(&self) -> &[RationalCone] {
        &self.cones
    }

    pub fn len(&self) -> usize {
        self.cones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cones.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.cones[0].dim()
    }

    pub fn transform(&self, map: &LinearMap) -> Result<ConeUnion, ConeError> {
        let cones = self
            .cones
            .iter()
            .map(|c| c.transform(map))
            .collect::<Result<_, _>>()?;
        Ok(Self { cones })
    }

    pub fn concat(parts: &[&ConeUnion]) -> Result<ConeUnion, ConeError> {
        Self::new(parts.iter().flat_map(|p| p.cones.iter().cloned()).collect())
    }
}

/// Every cone of `cc` has all its rays inside one single cone of `dd`.
/// Stronger than set containment in the union.
pub fn union_contained_in(cc: &ConeUnion, dd: &ConeUnion) -> Result<bool, ConeError> {
    check_dim(cc.dim(), dd.dim())?;
    for c in &cc.cones {
        let mut found = false;
        for d in &dd.cones {
            if d.contains_cone(c)? {
                found = true;
                break;
            }
        }
        if !found {
            return Ok(false);
        }
    }
    Ok(true)
}

/// First pair `(i, j)` of cones whose closed intersection is full-dimensional.
pub fn first_overlap(cc: &ConeUnion, dd: &ConeUnion) -> Result<Option<(usize, usize)>, ConeError> {
    check_dim(cc.dim(), dd.dim())?;
    let pairs: Vec<(usize, usize)> = (0..cc.len())
        .flat_map(|i| (0..dd.len()).map(move |j| (i, j)))
        .collect();
    // facets are needed by every pair; fill the caches before fanning out
    cc.cones.iter().chain(&dd.cones).for_each(|c| {
        c.hrep();
    });
    let hits: Vec<bool> = pairs
        .par_iter()
        .map(|&(i, j)| cc.cones[i].overlaps(&dd.cones[j]))
        .collect::<Result<_, _>>()?;
    Ok(pairs
        .into_iter()
        .zip(hits)
        .find(|(_, hit)| *hit)
        .map(|(p, _)| p))
}

/// Every pairwise closed intersection has dimension below n.
pub fn unions_disjoint(cc: &ConeUnion, dd: &ConeUnion) -> Result<bool, ConeError> {
    Ok(first_overlap(cc, dd)?.is_none())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::int_vec;

    fn cone(rays: &[&[i64]]) -> RationalCone {
        RationalCone::from_int_rays(&rays.iter().map(|r| int_vec(r)).collect::<Vec<_>>()).unwrap()
    }

    fn union(cones: &[RationalCone]) -> ConeUnion {
        ConeUnion::new(cones.to_vec()).unwrap()
    }

    #[test]
    fn normalization_and_duplicates() {
        let c = cone(&[&[2, 0], &[0, 3]]);
        assert_eq!(c.rays(), &[int_vec(&[1, 0]), int_vec(&[0, 1])]);
        let c = cone(&[&[1, 1], &[2, 2]]);
        assert_eq!(c.rays(), &[int_vec(&[1, 1])]);
        assert_eq!(
            RationalCone::from_int_rays(&[]),
            Err(ConeError::EmptyGenerators)
        );
        assert_eq!(
            RationalCone::from_int_rays(&[int_vec(&[0, 0])]),
            Err(ConeError::ZeroRay)
        );
    }

    #[test]
    fn rational_generators() {
        let half = Rat::new(1.into(), 2.into());
        let c =
            RationalCone::from_rays(&[vec![half.clone(), Rat::zero()], vec![Rat::zero(), half]])
                .unwrap();
        assert_eq!(c.rays(), &[int_vec(&[1, 0]), int_vec(&[0, 1])]);
    }

    #[test]
    fn quadrant_facets() {
        let c = cone(&[&[1, 0], &[0, 1]]);
        let h = c.hrep();
        assert!(h.equations.is_empty());
        let mut ineq = h.inequalities.clone();
        ineq.sort();
        assert_eq!(ineq, vec![int_vec(&[0, 1]), int_vec(&[1, 0])]);
    }

    #[test]
    fn lower_dimensional_facets() {
        let c = cone(&[&[1, 0, 0], &[0, 1, 0]]);
        let h = c.hrep();
        assert_eq!(h.equations.len(), 1);
        assert_eq!(
            make_primitive(h.equations[0].iter().map(|x| x.abs()).collect()),
            int_vec(&[0, 0, 1])
        );
        assert_eq!(h.inequalities.len(), 2);
        assert!(c.contains(&int_vec(&[3, 4, 0])).unwrap());
        assert!(!c.contains(&int_vec(&[3, 4, 1])).unwrap());
    }

    #[test]
    fn membership() {
        let c = cone(&[&[1, 0], &[0, 1]]);
        assert!(c.contains(&int_vec(&[1, 1])).unwrap());
        assert!(!c.contains(&int_vec(&[1, -1])).unwrap());
        assert!(c.contains(&int_vec(&[0, 0])).unwrap());
        assert_eq!(
            c.contains(&int_vec(&[1, 1, 1])),
            Err(ConeError::DimensionMismatch {
                expected: 2,
                got: 3
            })
        );
    }

    #[test]
    fn solidity() {
        assert!(cone(&[&[1, 0], &[0, 1]]).is_solid());
        assert!(!cone(&[&[1, 0]]).is_solid());
        assert!(cone(&[&[1, 0], &[-1, 0], &[0, 1]]).is_solid());
        assert!(!RationalCone::trivial(2).is_solid());
    }

    #[test]
    fn intersections() {
        let q = cone(&[&[1, 0], &[0, 1]]);
        let r = q.intersect(&cone(&[&[0, 1], &[-1, 0]])).unwrap();
        assert_eq!(r.rays(), &[int_vec(&[0, 1])]);
        let t = q.intersect(&cone(&[&[-1, 0], &[0, -1]])).unwrap();
        assert!(t.is_trivial());
        assert!(q.intersect(&q).unwrap().same_cone(&q).unwrap());
    }

    #[test]
    fn facets_respect_a_deadline() {
        let q = cone(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]);
        let past = Instant::now();
        assert_eq!(
            q.hrep_before(Some(past)).unwrap_err(),
            ConeError::DeadlineExpired
        );
        assert!(!q.has_cached_hrep());
        assert_eq!(q.hrep_before(None).unwrap().inequalities.len(), 3);
        // cached facets need no time at all
        assert!(q.hrep_before(Some(past)).is_ok());
    }

    #[test]
    fn transforms() {
        let c = cone(&[&[1, 0]]);
        let p = LinearMap::from_int(&IntMatrix::reversal(2)).unwrap();
        assert_eq!(c.transform(&p).unwrap().rays(), &[int_vec(&[0, 1])]);
        let singular = IntMatrix::from_i64_rows(&[&[1, 1], &[1, 1]]);
        assert_eq!(
            LinearMap::from_int(&singular).unwrap_err(),
            ConeError::SingularTransform
        );
        let l = IntMatrix::from_i64_rows(&[&[2, 1], &[1, 1]]);
        let map = LinearMap::from_int(&l).unwrap();
        let back = LinearMap::new(&l.to_rat().inverse().unwrap()).unwrap();
        let q = cone(&[&[1, 0], &[1, 2]]);
        q.hrep();
        let moved = q.transform(&map).unwrap();
        assert!(moved.has_cached_hrep());
        let fresh = RationalCone::from_int_rays(moved.rays()).unwrap();
        assert!(fresh.same_cone(&moved).unwrap());
        assert_eq!(
            fresh.hrep().inequalities.len(),
            moved.hrep().inequalities.len()
        );
        assert!(moved.transform(&back).unwrap().same_cone(&q).unwrap());
    }

    #[test]
    fn union_containment_is_per_cone() {
        let q = cone(&[&[1, 0], &[0, 1]]);
        let other = cone(&[&[-1, 0]]);
        assert!(union_contained_in(
            &union(std::slice::from_ref(&q)),
            &union(&[q.clone(), other])
        )
        .unwrap());
        let split = union(&[cone(&[&[1, 0], &[1, 1]]), cone(&[&[1, 1], &[0, 1]])]);
        assert!(!union_contained_in(&union(std::slice::from_ref(&q)), &split).unwrap());
        assert!(union_contained_in(&split, &split).unwrap());
    }

    #[test]
    fn disjointness() {
        let q = union(&[cone(&[&[1, 0], &[0, 1]])]);
        assert!(unions_disjoint(&q, &union(&[cone(&[&[-1, 0], &[0, -1]])])).unwrap());
        assert!(unions_disjoint(&q, &union(&[cone(&[&[0, 1], &[-1, 0]])])).unwrap());
        assert!(!unions_disjoint(&q, &union(&[cone(&[&[1, 1], &[1, 0]])])).unwrap());
    }
}
