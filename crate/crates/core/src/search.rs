//! Heuristic construction of ping-pong cones.
//!
//! Starting from the transvection ray `t0`, the ray sets of `C` and `D` are
//! grown by exactly the images the ping-pong conditions force on them, until
//! they become stationary (a candidate certificate, re-checked by the
//! verifier) or the two table halves start to overlap (no certificate of this
//! shape exists for the chosen start).

use std::collections::HashSet;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{
    is_zero_vec, make_primitive, max_abs, neg_vec, IntMatrix, IntVec, Rat, RatMatrix,
};
use crate::cone::{first_overlap, ConeError, ConeUnion, RationalCone};
use crate::group::{GroupData, GroupError};
use crate::verify::{
    closed_under_pingpong, finite_table, infinite_table, verify, verify_with, Certificate, Regime,
    VerificationReport, VerifyError, VerifyOptions,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("T - I has rank {0}, expected a transvection")]
    NotTransvection(usize),
    #[error("certificate does not pass verification")]
    NotAPassingCertificate,
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Cone(#[from] ConeError),
}

/// How `D` is enlarged in the infinite-order regime.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DExpansion {
    /// `D` receives `C`, `EC` and the `B^eta` images of its own rays.
    #[default]
    Orbit,
    /// As `Orbit`, plus the `(B^eta - I)` images of `C` and `EC`.
    Nilpotent,
}

/// Which images of `C` are forced into `C` in the finite-order regime.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerRange {
    /// Only the images that condition (4a) requires: `T^-1 B^j C` and, for
    /// `j >= 1`, `T^-1 B^j E C`, skipping powers with `B^j = ±I`.
    #[default]
    Required,
    /// Both families for every `0 <= j <= eta`.
    All,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    pub max_expansion_rounds: usize,
    /// Weights of the seed combinations are powers of this base.
    pub weight_base: Rat,
    /// Whether the weighted combinations approaching `u0` are seeded at all.
    pub weighted_seeds: bool,
    /// Whether the flag rays `N^k t0` themselves are seeded (the limit of
    /// ever heavier weights).
    pub flag_seeds: bool,
    pub random_seed: u64,
    pub random_enlarge_count: usize,
    /// Radius of the sampling box around `t0`, relative to `|t0|_inf`.
    pub random_scale: Rat,
    pub timeout: Option<Duration>,
    pub simplify: bool,
    /// Wall-clock allowance for simplification; the best certificate found
    /// when it runs out is returned.
    pub simplify_budget: Option<Duration>,
    /// Upper bound on sign branches explored when dominant signs are ambiguous.
    pub max_branches: usize,
    pub d_expansion: DExpansion,
    pub power_range: PowerRange,
    /// Relative outward push applied to newly added rays; zero keeps the
    /// expansion to exactly the forced images.
    pub slack: Rat,
    /// Max-norm to which pushed rays are rounded.
    pub rounding_bound: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            max_expansion_rounds: 40,
            weight_base: Rat::from_integer(4.into()),
            weighted_seeds: true,
            flag_seeds: true,
            random_seed: 0,
            random_enlarge_count: 0,
            random_scale: Rat::new(1.into(), 4.into()),
            timeout: None,
            simplify: true,
            simplify_budget: Some(Duration::from_secs(60)),
            max_branches: 16,
            d_expansion: DExpansion::Orbit,
            power_range: PowerRange::Required,
            slack: Rat::new(1.into(), 100.into()),
            rounding_bound: 100_000,
        }
    }
}

impl SearchConfig {
    /// Start from the single ray `t0`: no weighted or random seeds.
    pub fn minimal() -> Self {
        Self {
            weighted_seeds: false,
            flag_seeds: false,
            random_enlarge_count: 0,
            simplify: false,
            slack: Rat::zero(),
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchState {
    pub t0: IntVec,
    pub u0_direction: IntVec,
    pub rc: Vec<IntVec>,
    pub rd: Vec<IntVec>,
    pub round: usize,
    /// `(|R_c|, |R_d|)` after each round, starting with the seeds.
    pub history: Vec<(usize, usize)>,
    pub stationary: bool,
    processed: Processed,
}

/// Rays whose images were already fed to each step; only new rays are
/// mapped again.
#[derive(Clone, Debug, Default)]
struct Processed {
    c_to_c: HashSet<IntVec>,
    d_to_c: HashSet<IntVec>,
    c_to_d: HashSet<IntVec>,
    d_to_d: HashSet<IntVec>,
}

fn frontier<'a>(rays: &'a [IntVec], done: &mut HashSet<IntVec>) -> Vec<&'a IntVec> {
    rays.iter().filter(|r| done.insert((*r).clone())).collect()
}

#[derive(Clone, Debug)]
pub enum SearchOutcome {
    FoundCertificate {
        certificate: Certificate,
        report: VerificationReport,
        round: usize,
    },
    DisjointnessViolated {
        round: usize,
        /// An overlapping pair: a cone of `X` and a cone of `Y`.
        witness: (RationalCone, RationalCone),
    },
    Exhausted {
        round: usize,
    },
    TimedOut {
        /// Rounds completed before the deadline.
        round: usize,
    },
}

impl SearchOutcome {
    pub fn kind(&self) -> &'static str {
        match self {
            SearchOutcome::FoundCertificate { .. } => "found",
            SearchOutcome::DisjointnessViolated { .. } => "disjointness-violated",
            SearchOutcome::Exhausted { .. } => "exhausted",
            SearchOutcome::TimedOut { .. } => "timed-out",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DominantSign {
    Plus,
    Minus,
    Ambiguous,
}

/// Sign of the real dominant eigenvalue, estimated by power iteration.
pub fn dominant_sign(m: &RatMatrix) -> DominantSign {
    const ITERATIONS: usize = 500;
    const TOLERANCE: f64 = 1e-9;
    let n = m.rows();
    let a: Vec<f64> = m
        .entries()
        .iter()
        .map(|x| x.to_f64().unwrap_or(0.0))
        .collect();
    let apply = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum())
            .collect()
    };
    let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
    // a fixed, generic start vector keeps the result deterministic
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.137 * i as f64 + 0.01 * (i * i) as f64)
        .collect();
    let mut rho_prev = f64::NAN;
    let mut tail = Vec::new();
    for it in 0..ITERATIONS {
        let nx = norm(&x);
        if nx == 0.0 || !nx.is_finite() {
            return DominantSign::Ambiguous;
        }
        x.iter_mut().for_each(|v| *v /= nx);
        let y = apply(&x);
        let rho: f64 = x.iter().zip(&y).map(|(p, q)| p * q).sum();
        let ny = norm(&y);
        if ny == 0.0 {
            return DominantSign::Ambiguous;
        }
        let cos = rho / ny;
        if (rho - rho_prev).abs() <= TOLERANCE * rho.abs().max(1.0) && cos.abs() > 1.0 - 1e-6 {
            return if rho > 0.0 {
                DominantSign::Plus
            } else {
                DominantSign::Minus
            };
        }
        if it >= ITERATIONS - 50 {
            tail.push(cos);
        }
        rho_prev = rho;
        x = y;
    }
    // slow convergence (non-trivial Jordan blocks): accept a stable alignment
    if tail.iter().all(|&c| c > 1.0 - 1e-3) {
        DominantSign::Plus
    } else if tail.iter().all(|&c| c < -1.0 + 1e-3) {
        DominantSign::Minus
    } else {
        DominantSign::Ambiguous
    }
}

fn neg_if(v: IntVec, negate: bool) -> IntVec {
    if negate {
        neg_vec(&v)
    } else {
        v
    }
}

fn nilpotent_powers(n_mat: &IntMatrix, t0: &[BigInt]) -> Vec<IntVec> {
    let mut out = vec![t0.to_vec()];
    loop {
        let next = n_mat.mul_vec(out.last().expect("nonempty"));
        if is_zero_vec(&next) || out.len() > t0.len() {
            return out;
        }
        out.push(next);
    }
}

/// Partial sums `sum_{k<=m} w^k N^k t0` for `m = 1..`, cleared to primitive
/// integer vectors.
fn weighted_combinations(powers: &[IntVec], weight: &Rat) -> Vec<IntVec> {
    let n = powers[0].len();
    let mut acc: Vec<Rat> = powers[0]
        .iter()
        .map(|x| Rat::from_integer(x.clone()))
        .collect();
    let mut mu = Rat::one();
    let mut out = Vec::new();
    for p in &powers[1..] {
        mu *= weight;
        for i in 0..n {
            acc[i] += &mu * Rat::from_integer(p[i].clone());
        }
        let v = crate::algebra::clear_denominators(&acc);
        if !is_zero_vec(&v) {
            out.push(v);
        }
    }
    out
}

fn random_near(t0: &[BigInt], cfg: &SearchConfig, rng: &mut ChaCha8Rng) -> Vec<IntVec> {
    let scaled = &cfg.random_scale * Rat::from_integer(max_abs(t0));
    let radius = scaled
        .floor()
        .to_integer()
        .max(BigInt::one())
        .to_i64()
        .unwrap_or(1);
    let mut out = Vec::new();
    while out.len() < cfg.random_enlarge_count {
        let v: IntVec = t0
            .iter()
            .map(|x| x + BigInt::from(rng.gen_range(-radius..=radius)))
            .collect();
        if !is_zero_vec(&v) {
            out.push(make_primitive(v));
        }
    }
    out
}

fn push_unique(rays: &mut Vec<IntVec>, v: IntVec) {
    if !rays.contains(&v) {
        rays.push(v);
    }
}

/// Seeds for the expansion: `t0`, the weighted combinations towards the
/// limit direction `u0`, and random vectors near `t0`.
pub fn initial_rays(gd: &GroupData, cfg: &SearchConfig) -> Result<SearchState, SearchError> {
    let rank = gd.t.minus_identity().rank();
    if rank != 1 {
        return Err(SearchError::NotTransvection(rank));
    }
    let t0 = gd.transvection_ray();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.random_seed);

    let n_a = gd.a.pow(gd.lambda).expect("square").minus_identity();
    let powers_a = nilpotent_powers(&n_a, &t0);
    let u0_direction = make_primitive(powers_a.last().expect("nonempty").clone());

    let mut rc = vec![t0.clone()];
    if cfg.flag_seeds {
        for v in &powers_a[1..] {
            push_unique(&mut rc, make_primitive(v.clone()));
        }
    }
    if cfg.weighted_seeds {
        for v in weighted_combinations(&powers_a, &cfg.weight_base) {
            push_unique(&mut rc, v);
        }
    }
    for v in random_near(&t0, cfg, &mut rng) {
        push_unique(&mut rc, v);
    }

    let rd = if Regime::of(gd) == Regime::Infinite {
        let n_b = gd.b_power(gd.eta as i64).minus_identity();
        let powers_b = nilpotent_powers(&n_b, &t0);
        let mut rd = vec![t0.clone()];
        if cfg.flag_seeds {
            for v in &powers_b[1..] {
                push_unique(&mut rd, make_primitive(v.clone()));
            }
        }
        if cfg.weighted_seeds {
            for v in weighted_combinations(&powers_b, &cfg.weight_base) {
                push_unique(&mut rd, v);
            }
        }
        for v in random_near(&t0, cfg, &mut rng) {
            push_unique(&mut rd, v);
        }
        rd
    } else {
        rc.clone()
    };
    let history = vec![(rc.len(), rd.len())];
    Ok(SearchState {
        t0,
        u0_direction,
        rc,
        rd,
        round: 0,
        history,
        stationary: false,
        processed: Processed::default(),
    })
}

/// One linear map applied during expansion, with its chosen sign.
#[derive(Clone, Debug)]
struct SignedMap {
    matrix: IntMatrix,
    negate: bool,
}

impl SignedMap {
    fn apply(&self, v: &[BigInt]) -> IntVec {
        neg_if(self.matrix.mul_vec(v), self.negate)
    }
}

/// Maps feeding `C`: applied to rays of `C` (finite regime) or of `D`
/// (infinite regime), plus `T^-1` on `C` itself. Ambiguous signs are listed
/// separately so the driver can branch on them.
struct ExpansionPlan {
    from_c: Vec<IntMatrix>,
    from_d: Vec<IntMatrix>,
    signs_c: Vec<DominantSign>,
    signs_d: Vec<DominantSign>,
}

fn expansion_plan(gd: &GroupData, range: PowerRange) -> ExpansionPlan {
    let t_inv = &gd.t_inv;
    let mul = |a: &IntMatrix, b: &IntMatrix| a.mul(b).expect("square");
    let (from_c, from_d) = match Regime::of(gd) {
        Regime::Finite => {
            let mut maps = Vec::new();
            let all = range == PowerRange::All;
            let top = if all { gd.eta } else { gd.eta - 1 };
            for j in 0..=top {
                let bj = gd.b_power(j as i64);
                let trivial = bj.is_identity() || bj.is_neg_identity();
                if !all && j > 0 && trivial {
                    continue;
                }
                maps.push(mul(t_inv, &bj));
                if all || j > 0 {
                    maps.push(mul(&mul(t_inv, &bj), &gd.e));
                }
            }
            (maps, Vec::new())
        }
        Regime::Infinite => {
            let mut maps = Vec::new();
            for k in 1..=gd.eta as i64 {
                maps.push(mul(t_inv, &gd.b_power(k)));
                maps.push(mul(&mul(t_inv, &gd.b_power(-k)), &gd.e));
            }
            (vec![t_inv.clone()], maps)
        }
    };
    let sign = |m: &IntMatrix| dominant_sign(&m.to_rat());
    ExpansionPlan {
        signs_c: from_c.iter().map(sign).collect(),
        signs_d: from_d.iter().map(sign).collect(),
        from_c,
        from_d,
    }
}

/// A fully signed plan, one per branch.
#[derive(Clone, Debug)]
struct Branch {
    from_c: Vec<SignedMap>,
    from_d: Vec<SignedMap>,
}

fn branches(plan: &ExpansionPlan, cfg: &SearchConfig) -> Vec<Branch> {
    let ambiguous: Vec<(bool, usize)> = plan
        .signs_c
        .iter()
        .enumerate()
        .filter(|(_, s)| **s == DominantSign::Ambiguous)
        .map(|(i, _)| (false, i))
        .chain(
            plan.signs_d
                .iter()
                .enumerate()
                .filter(|(_, s)| **s == DominantSign::Ambiguous)
                .map(|(i, _)| (true, i)),
        )
        .collect();
    let fixed = |signs: &[DominantSign], maps: &[IntMatrix]| -> Vec<SignedMap> {
        maps.iter()
            .zip(signs)
            .map(|(m, s)| SignedMap {
                matrix: m.clone(),
                negate: *s == DominantSign::Minus,
            })
            .collect()
    };
    let base_c = fixed(&plan.signs_c, &plan.from_c);
    let base_d = fixed(&plan.signs_d, &plan.from_d);
    // flipping every seed only negates the resulting cones, and X is
    // symmetric under negation, so the sign of t0 is not branched on
    let combos = 1usize
        .checked_shl(ambiguous.len() as u32)
        .unwrap_or(usize::MAX);
    let mut out = Vec::new();
    for mask in 0..combos.min(cfg.max_branches.max(1)) {
        let mut b = Branch {
            from_c: base_c.clone(),
            from_d: base_d.clone(),
        };
        for (bit, &(is_d, i)) in ambiguous.iter().enumerate() {
            let negate = mask >> bit & 1 == 1;
            if is_d {
                b.from_d[i].negate = negate;
            } else {
                b.from_c[i].negate = negate;
            }
        }
        out.push(b);
    }
    out
}

fn cone_of(rays: &[IntVec]) -> Result<RationalCone, SearchError> {
    Ok(RationalCone::from_int_rays(rays)?)
}

/// Direction `(1 + slack) m - slack c` for the normalized new ray `m` and the
/// normalized centre `c` of the current cone, rounded to an integer vector of
/// max-norm about `bound`. The new ray then lies between the pushed ray and
/// the centre, so the cone grows slightly past it.
fn pushed_ray(fresh: &[BigInt], centre: &[Rat], slack: &Rat, bound: u64) -> IntVec {
    let scale = Rat::from_integer(max_abs(fresh));
    let one_plus = Rat::one() + slack;
    let w: Vec<Rat> = fresh
        .iter()
        .zip(centre)
        .map(|(f, c)| &one_plus * Rat::from_integer(f.clone()) / &scale - slack * c)
        .collect();
    let wmax = w.iter().map(|x| x.abs()).max().expect("nonempty");
    if wmax.is_zero() {
        return fresh.to_vec();
    }
    let factor = Rat::from_integer(bound.into()) / wmax;
    make_primitive(
        w.iter()
            .map(|x| (x * &factor).round().to_integer())
            .collect(),
    )
}

fn centre_of(rays: &[IntVec]) -> Option<Vec<Rat>> {
    let n = rays.first()?.len();
    let mut c = vec![Rat::zero(); n];
    for r in rays {
        let m = Rat::from_integer(max_abs(r));
        for (ci, x) in c.iter_mut().zip(r) {
            *ci += Rat::from_integer(x.clone()) / &m;
        }
    }
    let cmax = c.iter().map(|x| x.abs()).max()?;
    if cmax.is_zero() {
        return None;
    }
    Some(c.into_iter().map(|x| x / &cmax).collect())
}

/// Adds the candidates not already in the cone; returns the reduced ray set
/// and whether anything was added. With positive slack the new rays are
/// pushed outwards first (the exact rays are still added if the pushed ones
/// miss them).
/// Adds the candidates not yet inside `cone(rays)` (pushed outward by the
/// slack) and reduces to extreme rays. Returns the new cone, with its facets
/// cached, and whether it grew.
fn grow(
    rays: &[IntVec],
    candidates: Vec<IntVec>,
    cfg: &SearchConfig,
    deadline: Option<Instant>,
) -> Result<(RationalCone, bool), SearchError> {
    let cone = cone_of(rays)?;
    cone.hrep_before(deadline)?;
    let mut fresh: Vec<IntVec> = Vec::new();
    for (k, v) in candidates.into_iter().enumerate() {
        if k % 256 == 255 && expired(deadline) {
            return Err(ConeError::DeadlineExpired.into());
        }
        if is_zero_vec(&v) {
            continue;
        }
        let v = make_primitive(v);
        if !cone.contains(&v)? && !fresh.contains(&v) {
            fresh.push(v);
        }
    }
    if fresh.is_empty() {
        return Ok((cone, false));
    }
    let mut all = rays.to_vec();
    match centre_of(rays).filter(|_| cfg.slack.is_positive()) {
        Some(centre) => {
            for f in &fresh {
                let w = pushed_ray(f, &centre, &cfg.slack, cfg.rounding_bound);
                if !is_zero_vec(&w) && !all.contains(&w) {
                    all.push(w);
                }
            }
            let widened = cone_of(&all)?;
            widened.hrep_before(deadline)?;
            let mut missed = Vec::new();
            for (k, f) in fresh.into_iter().enumerate() {
                if k % 256 == 255 && expired(deadline) {
                    return Err(ConeError::DeadlineExpired.into());
                }
                if !widened.contains(&f)? {
                    missed.push(f);
                }
            }
            all.extend(missed);
        }
        None => all.extend(fresh),
    }
    let grown = cone_of(&all)?;
    grown.hrep_before(deadline)?;
    Ok((grown.reduced(), true))
}

fn expired(deadline: Option<Instant>) -> bool {
    deadline.is_some_and(|d| Instant::now() >= d)
}

/// [`first_overlap`] that gives up (`None`) once the deadline passes.
fn overlap_before(
    x: &ConeUnion,
    y: &ConeUnion,
    deadline: Option<Instant>,
) -> Result<Option<Option<(usize, usize)>>, SearchError> {
    if deadline.is_none() {
        return Ok(Some(first_overlap(x, y)?));
    }
    let pairs: Vec<(usize, usize)> = (0..x.len())
        .flat_map(|i| (0..y.len()).map(move |j| (i, j)))
        .collect();
    let hits: Vec<Option<bool>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            if expired(deadline) {
                return Ok(None);
            }
            x.cones()[i].overlaps(&y.cones()[j]).map(Some)
        })
        .collect::<Result<_, ConeError>>()?;
    if hits.iter().any(Option::is_none) {
        return Ok(None);
    }
    Ok(Some(
        pairs
            .into_iter()
            .zip(hits)
            .find(|(_, h)| *h == Some(true))
            .map(|(p, _)| p),
    ))
}

fn certificate_of(gd: &GroupData, state: &SearchState) -> Result<Certificate, SearchError> {
    let d = (Regime::of(gd) == Regime::Infinite).then(|| state.rd.clone());
    Ok(Certificate::new(gd.case.clone(), state.rc.clone(), d)?)
}

enum RoundResult {
    Continue(SearchState),
    Stop(SearchOutcome),
}

fn expansion_round_with(
    gd: &GroupData,
    state: SearchState,
    branch: &Branch,
    cfg: &SearchConfig,
    deadline: Option<Instant>,
) -> Result<RoundResult, SearchError> {
    let round = state.round;
    match round_steps(gd, state, branch, cfg, deadline) {
        Err(SearchError::Cone(ConeError::DeadlineExpired)) => {
            Ok(RoundResult::Stop(SearchOutcome::TimedOut { round }))
        }
        other => other,
    }
}

fn round_steps(
    gd: &GroupData,
    mut state: SearchState,
    branch: &Branch,
    cfg: &SearchConfig,
    deadline: Option<Instant>,
) -> Result<RoundResult, SearchError> {
    let infinite = Regime::of(gd) == Regime::Infinite;
    let timed_out = RoundResult::Stop(SearchOutcome::TimedOut { round: state.round });

    let mut cand_c: Vec<IntVec> = Vec::new();
    for v in frontier(&state.rc, &mut state.processed.c_to_c) {
        cand_c.extend(branch.from_c.iter().map(|m| m.apply(v)));
    }
    if infinite {
        for w in frontier(&state.rd, &mut state.processed.d_to_c) {
            cand_c.extend(branch.from_d.iter().map(|m| m.apply(w)));
        }
    }
    let (c_cone, grew_c) = grow(&state.rc, cand_c, cfg, deadline)?;
    state.rc = c_cone.rays().to_vec();
    if expired(deadline) {
        return Ok(timed_out);
    }

    let mut grew_d = false;
    let mut d_cone = None;
    if infinite {
        let b_eta = gd.b_power(gd.eta as i64);
        let nil = b_eta.minus_identity();
        let mut cand_d: Vec<IntVec> = Vec::new();
        for v in frontier(&state.rc, &mut state.processed.c_to_d) {
            let ev = gd.e.mul_vec(v);
            if cfg.d_expansion == DExpansion::Nilpotent {
                cand_d.push(nil.mul_vec(v));
                cand_d.push(nil.mul_vec(&ev));
            }
            cand_d.push(v.clone());
            cand_d.push(ev);
        }
        for w in frontier(&state.rd, &mut state.processed.d_to_d) {
            cand_d.push(b_eta.mul_vec(w));
        }
        let (d, g) = grow(&state.rd, cand_d, cfg, deadline)?;
        state.rd = d.rays().to_vec();
        grew_d = g;
        d_cone = Some(d);
    } else {
        state.rd = state.rc.clone();
    }

    state.round += 1;
    state.history.push((state.rc.len(), state.rd.len()));
    if expired(deadline) {
        return Ok(timed_out);
    }

    let table = match d_cone {
        Some(d) => infinite_table(gd, c_cone, d)?,
        None => finite_table(gd, c_cone)?,
    };
    let x = table.x();
    match overlap_before(&x, &table.y, deadline)? {
        None => return Ok(timed_out),
        Some(Some((i, j))) => {
            return Ok(RoundResult::Stop(SearchOutcome::DisjointnessViolated {
                round: state.round,
                witness: (x.cones()[i].clone(), table.y.cones()[j].clone()),
            }))
        }
        Some(None) => {}
    }
    state.stationary = !grew_c && !grew_d;
    Ok(RoundResult::Continue(state))
}

/// One expansion round with the signs picked by [`dominant_sign`] (the first
/// branch when some sign is ambiguous). Returns the grown state, or an outcome
/// when the round ends the search.
pub fn expansion_round(
    gd: &GroupData,
    state: SearchState,
    cfg: &SearchConfig,
) -> Result<Result<SearchState, SearchOutcome>, SearchError> {
    let plan = expansion_plan(gd, cfg.power_range);
    let branch = branches(&plan, cfg)
        .into_iter()
        .next()
        .expect("at least one branch");
    let deadline = cfg.timeout.map(|t| Instant::now() + t);
    Ok(
        match expansion_round_with(gd, state, &branch, cfg, deadline)? {
            RoundResult::Continue(s) => Ok(s),
            RoundResult::Stop(o) => Err(o),
        },
    )
}

fn run_branch(
    gd: &GroupData,
    branch: &Branch,
    cfg: &SearchConfig,
    deadline: Option<Instant>,
) -> Result<SearchOutcome, SearchError> {
    let mut state = initial_rays(gd, cfg)?;
    while state.round < cfg.max_expansion_rounds {
        if expired(deadline) {
            return Ok(SearchOutcome::TimedOut { round: state.round });
        }
        state = match expansion_round_with(gd, state, branch, cfg, deadline)? {
            RoundResult::Continue(s) => s,
            RoundResult::Stop(outcome) => return Ok(outcome),
        };
        if state.stationary {
            let cert = certificate_of(gd, &state)?;
            let report = verify(gd, &cert)?;
            return Ok(if report.overall {
                SearchOutcome::FoundCertificate {
                    certificate: cert,
                    report,
                    round: state.round,
                }
            } else {
                SearchOutcome::Exhausted { round: state.round }
            });
        }
    }
    Ok(SearchOutcome::Exhausted { round: state.round })
}

/// Runs the expansion for every sign branch in parallel. A found certificate
/// wins; disjointness is reported only when it ends every branch.
pub fn search(gd: &GroupData, cfg: &SearchConfig) -> Result<SearchOutcome, SearchError> {
    let deadline = cfg.timeout.map(|t| Instant::now() + t);
    let plan = expansion_plan(gd, cfg.power_range);
    let branches = branches(&plan, cfg);
    let outcomes: Vec<SearchOutcome> = branches
        .par_iter()
        .map(|b| run_branch(gd, b, cfg, deadline))
        .collect::<Result<_, _>>()?;

    if let Some(found) = outcomes
        .iter()
        .find(|o| matches!(o, SearchOutcome::FoundCertificate { .. }))
    {
        let SearchOutcome::FoundCertificate {
            certificate,
            report,
            round,
        } = found.clone()
        else {
            unreachable!()
        };
        if !cfg.simplify {
            return Ok(SearchOutcome::FoundCertificate {
                certificate,
                report,
                round,
            });
        }
        let certificate = simplify_within(gd, &certificate, cfg.simplify_budget)?;
        let report = verify(gd, &certificate)?;
        return Ok(SearchOutcome::FoundCertificate {
            certificate,
            report,
            round,
        });
    }
    if outcomes
        .iter()
        .all(|o| matches!(o, SearchOutcome::DisjointnessViolated { .. }))
    {
        return Ok(outcomes.into_iter().next().expect("at least one branch"));
    }
    let timed_out = outcomes
        .iter()
        .filter_map(|o| match o {
            SearchOutcome::TimedOut { round } => Some(*round),
            _ => None,
        })
        .max();
    if let Some(round) = timed_out {
        return Ok(SearchOutcome::TimedOut { round });
    }
    let round = outcomes
        .iter()
        .map(|o| match o {
            SearchOutcome::Exhausted { round }
            | SearchOutcome::DisjointnessViolated { round, .. } => *round,
            _ => 0,
        })
        .max()
        .unwrap_or(0);
    Ok(SearchOutcome::Exhausted { round })
}

fn passes(gd: &GroupData, cert: &Certificate) -> bool {
    verify_with(gd, cert, VerifyOptions { fast: true }).is_ok_and(|r| r.overall)
}

/// Enough after removing rays from a passing certificate.
fn still_closed(gd: &GroupData, cert: &Certificate) -> bool {
    closed_under_pingpong(gd, cert).unwrap_or(false)
}

fn with_rays(cert: &Certificate, c: Vec<IntVec>, d: Option<Vec<IntVec>>) -> Option<Certificate> {
    Certificate::new(cert.case.clone(), c, d).ok()
}

/// Nearby rays with a smaller max-norm: halved, and with one extreme
/// coordinate moved towards zero.
fn smaller_neighbours(r: &[BigInt]) -> Vec<IntVec> {
    let m = max_abs(r);
    let mut out = Vec::new();
    let two = BigInt::from(2);
    let halved: IntVec = r
        .iter()
        .map(|x| {
            let q = BigRational::new(x.clone(), two.clone());
            q.round().to_integer()
        })
        .collect();
    if !is_zero_vec(&halved) {
        out.push(make_primitive(halved));
    }
    for i in 0..r.len() {
        if r[i].abs() == m && !m.is_zero() {
            let mut v = r.to_vec();
            v[i] -= r[i].signum();
            if !is_zero_vec(&v) {
                out.push(make_primitive(v));
            }
        }
    }
    out.retain(|v| max_abs(v) < m);
    out
}

/// Greedy simplification: drop rays, then shrink them, as long as the
/// certificate keeps passing.
pub fn simplify_certificate(
    gd: &GroupData,
    cert: &Certificate,
) -> Result<Certificate, SearchError> {
    simplify_within(gd, cert, None)
}

/// [`simplify_certificate`] that stops trying once `budget` has elapsed.
pub fn simplify_within(
    gd: &GroupData,
    cert: &Certificate,
    budget: Option<Duration>,
) -> Result<Certificate, SearchError> {
    let deadline = budget.map(|b| Instant::now() + b);
    if !passes(gd, cert) {
        return Err(SearchError::NotAPassingCertificate);
    }
    let mut best = cert.clone();

    // removal, C first, then D
    let mut i = 0;
    while i < best.c_rays.len() && !expired(deadline) {
        let mut c = best.c_rays.clone();
        c.remove(i);
        match (!c.is_empty())
            .then(|| with_rays(&best, c, best.d_rays.clone()))
            .flatten()
        {
            Some(cand) if still_closed(gd, &cand) => best = cand,
            _ => i += 1,
        }
    }
    if let Some(d0) = best.d_rays.clone() {
        let mut d = d0;
        let mut i = 0;
        while i < d.len() && !expired(deadline) {
            let mut trial = d.clone();
            trial.remove(i);
            match (!trial.is_empty())
                .then(|| with_rays(&best, best.c_rays.clone(), Some(trial.clone())))
                .flatten()
            {
                Some(cand) if still_closed(gd, &cand) => {
                    best = cand;
                    d = trial;
                }
                _ => i += 1,
            }
        }
    }

    // replacement by smaller neighbours, until nothing changes
    for _ in 0..4 {
        let mut changed = false;
        for i in 0..best.c_rays.len() {
            if expired(deadline) {
                return Ok(best);
            }
            for nb in smaller_neighbours(&best.c_rays[i]) {
                let mut c = best.c_rays.clone();
                c[i] = nb;
                if let Some(cand) = with_rays(&best, c, best.d_rays.clone()) {
                    if cand.c_rays.len() == best.c_rays.len() && passes(gd, &cand) {
                        best = cand;
                        changed = true;
                        break;
                    }
                }
            }
        }
        if let Some(d) = best.d_rays.clone() {
            for i in 0..d.len() {
                if expired(deadline) {
                    return Ok(best);
                }
                let current = best.d_rays.clone().expect("D present");
                for nb in smaller_neighbours(&current[i]) {
                    let mut trial = current.clone();
                    trial[i] = nb;
                    if let Some(cand) = with_rays(&best, best.c_rays.clone(), Some(trial)) {
                        if passes(gd, &cand) {
                            best = cand;
                            changed = true;
                            break;
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(best)
}
