//! Brute-force counterexample search over small function families, kept
//! independent of the decision procedures so the two can be cross-checked.

use std::ops::AddAssign;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::{convex_combination, union_support, DiscreteMeasure, FiniteMap, Point};
use crate::rational::Rational;
use crate::witness::{ConstraintKind, WitnessPair};

pub const DEFAULT_VALUE_COUNT: u32 = 3;
/// `3^6`: every map from six points into three values.
pub const DEFAULT_BUDGET: u128 = 729;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleVerdict {
    CounterexampleFound(Box<WitnessPair>),
    NoCounterexampleInFamily {
        family: String,
        /// Family members lying in the constraint set.
        members: usize,
        pairs_checked: u64,
    },
}

impl OracleVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            OracleVerdict::CounterexampleFound(_) => "counterexample_found",
            OracleVerdict::NoCounterexampleInFamily { .. } => "no_counterexample_in_family",
        }
    }

    pub fn found(&self) -> bool {
        matches!(self, OracleVerdict::CounterexampleFound(_))
    }

    pub fn witness(&self) -> Option<&WitnessPair> {
        match self {
            OracleVerdict::CounterexampleFound(w) => Some(w),
            _ => None,
        }
    }
}

fn checked_pow(base: u128, exp: usize) -> Option<u128> {
    (0..exp).try_fold(1u128, |acc, _| acc.checked_mul(base))
}

fn scaled_weights(mu: &DiscreteMeasure, support: &[Point], denom: &BigInt) -> Vec<BigInt> {
    support
        .iter()
        .map(|pt| {
            let w = mu.weight_at(pt.coords());
            w.numer() * (denom / w.denom())
        })
        .collect()
}

/// Decodes family index `idx` into exponents, first point most significant.
fn exponents(mut idx: u128, n: usize, k: u128) -> Vec<usize> {
    let mut e = vec![0usize; n];
    for slot in e.iter_mut().rev() {
        *slot = (idx % k) as usize;
        idx /= k;
    }
    e
}

fn pair_index(a: usize, b: usize, k: usize) -> usize {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    lo * k + hi
}

struct Family<T> {
    k: usize,
    wp: Vec<T>,
    wq: Vec<T>,
}

impl<T> Family<T>
where
    T: Clone + Zero + PartialEq + Send + Sync + for<'a> AddAssign<&'a T>,
{
    fn histogram(&self, weights: &[T], e: &[usize]) -> Vec<T> {
        let mut h = vec![T::zero(); self.k];
        for (w, &a) in weights.iter().zip(e) {
            h[a] += w;
        }
        h
    }

    fn equalizes(&self, e: &[usize]) -> bool {
        self.histogram(&self.wp, e) == self.histogram(&self.wq, e)
    }

    fn midpoint_equalizes(&self, e: &[usize], f: &[usize]) -> bool {
        let hist = |weights: &[T]| {
            let mut h = vec![T::zero(); self.k * self.k];
            for ((w, &a), &b) in weights.iter().zip(e).zip(f) {
                h[pair_index(a, b, self.k)] += w;
            }
            h
        };
        hist(&self.wp) == hist(&self.wq)
    }

    /// First violating pair `(i, j)`, `i < j`, in lexicographic order.
    fn search(&self, members: &[Vec<usize>]) -> Option<(usize, usize)> {
        (0..members.len()).into_par_iter().find_map_first(|i| {
            (i + 1..members.len()).find(|&j| !self.midpoint_equalizes(&members[i], &members[j])).map(|j| (i, j))
        })
    }
}

fn value_map(support: &[Point], e: &[usize]) -> Result<FiniteMap> {
    let mut map = FiniteMap::new(1);
    for (pt, &a) in support.iter().zip(e) {
        map.insert(pt.clone(), vec![Rational::integer(4i64.pow(a as u32))])?;
    }
    Ok(map)
}

fn run_family<T>(family: Family<T>, n: usize, total: u128) -> (Vec<Vec<usize>>, Option<(usize, usize)>)
where
    T: Clone + Zero + PartialEq + Send + Sync + for<'a> AddAssign<&'a T>,
{
    let k = family.k as u128;
    let members: Vec<Vec<usize>> =
        (0..total).into_par_iter().map(|idx| exponents(idx, n, k)).filter(|e| family.equalizes(e)).collect();
    let hit = family.search(&members);
    (members, hit)
}

/// Searches all maps from `supp(P) ∪ supp(Q)` into `{4^0, …, 4^(k-1)}` for
/// two equalizers whose midpoint does not equalize.
///
/// Sums of two powers of four are distinct for distinct pairs, so midpoint
/// values never collide by accident.
pub fn oracle_equalizer(
    p: &DiscreteMeasure,
    q: &DiscreteMeasure,
    value_count: u32,
    budget: u128,
) -> Result<OracleVerdict> {
    if p.dimension() != q.dimension() {
        return Err(Error::DimensionMismatch { expected: p.dimension(), found: q.dimension() });
    }
    p.require_probability()?;
    q.require_probability()?;
    if value_count == 0 {
        return Err(Error::InvalidParameter("value count must be positive".into()));
    }
    if value_count > 30 {
        return Err(Error::InvalidParameter("value count must be at most 30".into()));
    }
    let support = union_support(p, q);
    let n = support.len();
    let needed = checked_pow(value_count as u128, n).unwrap_or(u128::MAX);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let denom = p.atoms().iter().chain(q.atoms()).fold(BigInt::from(1), |acc, a| acc.lcm(a.weight.denom()));
    let wp = scaled_weights(p, &support, &denom);
    let wq = scaled_weights(q, &support, &denom);
    let k = value_count as usize;
    let small = |w: &[BigInt]| w.iter().map(|x| x.to_i64().map(i128::from)).collect::<Option<Vec<_>>>();
    let (members, hit) = match (small(&wp), small(&wq)) {
        (Some(wp), Some(wq)) => run_family(Family { k, wp, wq }, n, needed),
        _ => run_family(Family { k, wp, wq }, n, needed),
    };
    match hit {
        Some((i, j)) => {
            let f = value_map(&support, &members[i])?;
            let g = value_map(&support, &members[j])?;
            let witness = WitnessPair::new(ConstraintKind::Equalizer, p, q, f, g)?;
            Ok(OracleVerdict::CounterexampleFound(Box::new(witness)))
        }
        None => {
            let m = members.len() as u64;
            Ok(OracleVerdict::NoCounterexampleInFamily {
                family: format!("maps from {n} points into {{4^0..4^{}}}", k - 1),
                members: members.len(),
                pairs_checked: m * m.saturating_sub(1) / 2,
            })
        }
    }
}

/// Scans every map `supp(P) → supp(Q)`, keeps those with `f♯P = Q`, and
/// checks each pair's midpoint.
///
/// `budget` bounds the `m^n` candidate maps, `limit` the number of members.
pub fn oracle_transport(p: &DiscreteMeasure, q: &DiscreteMeasure, budget: u128, limit: usize) -> Result<OracleVerdict> {
    p.require_probability()?;
    q.require_probability()?;
    let (n, m) = (p.len(), q.len());
    let needed = checked_pow(m as u128, n).unwrap_or(u128::MAX);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let targets: Vec<&Point> = q.support().collect();
    let mut members = Vec::new();
    for idx in 0..needed {
        let choice = exponents(idx, n, m as u128);
        let mut map = FiniteMap::new(q.dimension());
        for (atom, &j) in p.atoms().iter().zip(&choice) {
            map.insert(atom.point.clone(), targets[j].coords().to_vec())?;
        }
        if ConstraintKind::Transport.contains(&map, p, q)? {
            if members.len() == limit {
                return Err(Error::LimitExceeded { limit });
            }
            members.push(map);
        }
    }
    for (i, f) in members.iter().enumerate() {
        for g in &members[i + 1..] {
            let mid = convex_combination(f, g, &Rational::half())?;
            if !ConstraintKind::Transport.contains(&mid, p, q)? {
                let witness = WitnessPair::new(ConstraintKind::Transport, p, q, f.clone(), g.clone())?;
                return Ok(OracleVerdict::CounterexampleFound(Box::new(witness)));
            }
        }
    }
    let k = members.len() as u64;
    Ok(OracleVerdict::NoCounterexampleInFamily {
        family: format!("all {needed} maps from {n} source atoms into {m} target atoms"),
        members: members.len(),
        pairs_checked: k * k.saturating_sub(1) / 2,
    })
}
