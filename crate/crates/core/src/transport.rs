//! Transport maps `f♯P = Q` between finitely supported measures: enumeration,
//! counting, the empty / singleton / nonconvex trichotomy, second-moment
//! membership and coupling primitives.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{push_forward, second_moment, DiscreteMeasure, FiniteMap, Point};
use crate::rational::Rational;
use crate::witness::{ConstraintKind, WitnessPair};

pub const DEFAULT_LIMIT: usize = 10_000;

/// A transport map recorded as target indices into `supp(Q)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransportMap {
    /// `targets[i]` is the index of the image of the `i`-th atom of `P`.
    pub targets: Vec<usize>,
    pub map: FiniteMap,
}

impl TransportMap {
    fn build(targets: Vec<usize>, p: &DiscreteMeasure, q: &DiscreteMeasure) -> Result<Self> {
        let mut map = FiniteMap::new(q.dimension());
        for (atom, &j) in p.atoms().iter().zip(&targets) {
            map.insert(atom.point.clone(), q.atoms()[j].point.coords().to_vec())?;
        }
        Ok(TransportMap { targets, map })
    }

    /// `(source id, target id)` pairs in source order.
    pub fn id_pairs<'a>(&self, p: &'a DiscreteMeasure, q: &'a DiscreteMeasure) -> Vec<(&'a str, &'a str)> {
        p.atoms().iter().zip(&self.targets).map(|(a, &j)| (a.point.id(), q.atoms()[j].point.id())).collect()
    }
}

/// Maps found by [`enumerate_transport_maps`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enumeration {
    pub maps: Vec<TransportMap>,
    /// True when the search stopped at the limit; `maps.len()` is then a lower bound.
    pub truncated: bool,
}

fn check_inputs(p: &DiscreteMeasure, q: &DiscreteMeasure) -> Result<()> {
    p.require_probability()?;
    q.require_probability()
}

fn search(
    alpha: &[Rational],
    remaining: &mut [Rational],
    prefix: &mut Vec<usize>,
    limit: usize,
    out: &mut Vec<Vec<usize>>,
) -> bool {
    if out.len() >= limit {
        return true;
    }
    let i = prefix.len();
    if i == alpha.len() {
        if remaining.iter().all(Rational::is_zero) {
            out.push(prefix.clone());
        }
        return false;
    }
    for j in 0..remaining.len() {
        if remaining[j] < alpha[i] {
            continue;
        }
        remaining[j] -= &alpha[i];
        prefix.push(j);
        let stop = search(alpha, remaining, prefix, limit, out);
        prefix.pop();
        remaining[j] += &alpha[i];
        if stop {
            return true;
        }
    }
    false
}

/// All maps `supp(P) → supp(Q)` whose fibres carry exactly the target
/// weights, in lexicographic order of target indices, stopping after `limit`.
pub fn enumerate_transport_maps(p: &DiscreteMeasure, q: &DiscreteMeasure, limit: usize) -> Result<Enumeration> {
    check_inputs(p, q)?;
    let alpha = p.weights();
    let beta = q.weights();
    // Each branch on the first atom's image is searched independently and
    // merged in branch order, so the result does not depend on scheduling.
    let branches: Vec<(Vec<Vec<usize>>, bool)> = (0..beta.len())
        .into_par_iter()
        .map(|j| {
            let mut found = Vec::new();
            if alpha.is_empty() || beta[j] < alpha[0] {
                return (found, false);
            }
            let mut remaining = beta.clone();
            remaining[j] -= &alpha[0];
            let mut prefix = vec![j];
            let stop = search(&alpha, &mut remaining, &mut prefix, limit.saturating_add(1), &mut found);
            (found, stop)
        })
        .collect();
    let mut assignments = Vec::new();
    let mut truncated = false;
    for (found, _) in branches {
        for a in found {
            if assignments.len() == limit {
                truncated = true;
                break;
            }
            assignments.push(a);
        }
        if truncated {
            break;
        }
    }
    let maps = assignments.into_iter().map(|t| TransportMap::build(t, p, q)).collect::<Result<Vec<_>>>()?;
    Ok(Enumeration { maps, truncated })
}

/// Number of transport maps, or a lower bound when enumeration was cut off.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TransportCount {
    Exact(BigUint),
    LowerBound(usize),
}

impl TransportCount {
    pub fn is_exact(&self) -> bool {
        matches!(self, TransportCount::Exact(_))
    }
}

impl std::fmt::Display for TransportCount {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TransportCount::Exact(n) => write!(f, "{n}"),
            TransportCount::LowerBound(k) => write!(f, ">= {k}"),
        }
    }
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

/// Transport-map count between uniform measures on `n` and `m` atoms:
/// zero unless `m` divides `n`, otherwise the multinomial `n! / ((n/m)!)^m`.
pub fn uniform_transport_count(n: usize, m: usize) -> BigUint {
    if m == 0 || n < m || !n.is_multiple_of(m) {
        return BigUint::zero();
    }
    let block = factorial(n / m);
    let mut denom = BigUint::one();
    for _ in 0..m {
        denom *= &block;
    }
    factorial(n) / denom
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportRule {
    UniformClosedForm,
    Enumeration,
}

impl TransportRule {
    pub fn as_str(self) -> &'static str {
        match self {
            TransportRule::UniformClosedForm => "uniform_closed_form",
            TransportRule::Enumeration => "enumeration",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TransportVerdict {
    Empty,
    /// The unique map up to equality on `supp(P)`.
    Singleton(TransportMap),
    Nonconvex(Box<WitnessPair>),
}

impl TransportVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            TransportVerdict::Empty => "empty",
            TransportVerdict::Singleton(_) => "singleton",
            TransportVerdict::Nonconvex(_) => "nonconvex",
        }
    }

    pub fn witness(&self) -> Option<&WitnessPair> {
        match self {
            TransportVerdict::Nonconvex(w) => Some(w),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransportReport {
    pub verdict: TransportVerdict,
    pub count: TransportCount,
    pub decided_by: TransportRule,
    /// The enumerated maps (possibly only a prefix).
    pub maps: Vec<TransportMap>,
}

fn find_witness(p: &DiscreteMeasure, q: &DiscreteMeasure, maps: &[TransportMap]) -> Result<WitnessPair> {
    for (a, f) in maps.iter().enumerate() {
        for g in &maps[a + 1..] {
            match WitnessPair::new(ConstraintKind::Transport, p, q, f.map.clone(), g.map.clone()) {
                Ok(w) => return Ok(w),
                Err(Error::InternalInconsistency(_)) => continue,
                Err(e) => return Err(e),
            }
        }
    }
    Err(Error::InternalInconsistency("no pair of distinct transport maps violates convexity".into()))
}

/// Classifies `T(P,Q)` as empty, a singleton, or nonconvex with a verified
/// midpoint witness.
pub fn classify_transport(p: &DiscreteMeasure, q: &DiscreteMeasure, limit: usize) -> Result<TransportReport> {
    check_inputs(p, q)?;
    let (n, m) = (p.len(), q.len());
    if p.is_uniform() && q.is_uniform() {
        let count = uniform_transport_count(n, m);
        let sample_limit = if n <= 5 { usize::MAX } else { limit.max(2) };
        let enumeration = if count.is_zero() {
            Enumeration { maps: Vec::new(), truncated: false }
        } else {
            enumerate_transport_maps(p, q, sample_limit)?
        };
        if n <= 5 && BigUint::from(enumeration.maps.len()) != count {
            return Err(Error::InternalInconsistency(format!(
                "closed-form count {count} disagrees with {} enumerated maps",
                enumeration.maps.len()
            )));
        }
        let verdict = verdict_from(p, q, &enumeration.maps)?;
        return Ok(TransportReport {
            verdict,
            count: TransportCount::Exact(count),
            decided_by: TransportRule::UniformClosedForm,
            maps: enumeration.maps,
        });
    }

    let enumeration = enumerate_transport_maps(p, q, limit)?;
    if enumeration.truncated && enumeration.maps.len() < 2 {
        return Err(Error::LimitExceeded { limit });
    }
    let count = if enumeration.truncated {
        TransportCount::LowerBound(enumeration.maps.len())
    } else {
        TransportCount::Exact(BigUint::from(enumeration.maps.len()))
    };
    let verdict = verdict_from(p, q, &enumeration.maps)?;
    Ok(TransportReport { verdict, count, decided_by: TransportRule::Enumeration, maps: enumeration.maps })
}

fn verdict_from(p: &DiscreteMeasure, q: &DiscreteMeasure, maps: &[TransportMap]) -> Result<TransportVerdict> {
    Ok(match maps {
        [] => TransportVerdict::Empty,
        [only] => TransportVerdict::Singleton(only.clone()),
        _ => TransportVerdict::Nonconvex(Box::new(find_witness(p, q, maps)?)),
    })
}

/// Whether `f` matches second moments: `∫ ‖f‖² dP = ∫ ‖·‖² dQ`.
pub fn m2_membership(f: &FiniteMap, p: &DiscreteMeasure, q: &DiscreteMeasure) -> Result<bool> {
    let pushed = push_forward(f, p)?;
    Ok(second_moment(&pushed) == second_moment(q))
}

/// A joint law on `supp(P) × supp(Q)`, rows indexed by `P`'s atoms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coupling {
    rows: Vec<Vec<Rational>>,
}

impl Coupling {
    pub fn new(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::ShapeMismatch("rows have different lengths".into()));
        }
        Ok(Coupling { rows })
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.rows
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.rows.first().map_or(0, Vec::len))
    }

    pub fn entry(&self, i: usize, j: usize) -> &Rational {
        &self.rows[i][j]
    }

    pub fn row_sums(&self) -> Vec<Rational> {
        self.rows.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<Rational> {
        let (_, m) = self.shape();
        (0..m).map(|j| self.rows.iter().map(|r| &r[j]).sum()).collect()
    }
}

fn check_shape(pi: &Coupling, n: usize, m: usize) -> Result<()> {
    if pi.shape() != (n, m) && !(n == 0 && pi.rows.is_empty()) {
        let (r, c) = pi.shape();
        return Err(Error::ShapeMismatch(format!("coupling is {r}x{c}, supports are {n}x{m}")));
    }
    Ok(())
}

/// The product coupling `α_i β_j`.
pub fn independent_coupling(p: &DiscreteMeasure, q: &DiscreteMeasure) -> Coupling {
    let beta = q.weights();
    let rows = p.atoms().iter().map(|a| beta.iter().map(|b| &a.weight * b).collect()).collect();
    Coupling { rows }
}

/// Exact marginal check.
pub fn is_coupling(pi: &Coupling, p: &DiscreteMeasure, q: &DiscreteMeasure) -> Result<bool> {
    check_shape(pi, p.len(), q.len())?;
    let nonnegative = pi.rows.iter().flatten().all(|x| !x.is_negative());
    Ok(nonnegative && pi.row_sums() == p.weights() && pi.column_sums() == q.weights())
}

/// `(1-t) π1 + t π2`.
pub fn coupling_mix(pi1: &Coupling, pi2: &Coupling, t: &Rational) -> Result<Coupling> {
    if pi1.shape() != pi2.shape() {
        return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", pi1.shape(), pi2.shape())));
    }
    if t.is_negative() || *t > Rational::one() {
        return Err(Error::OutOfDomain(format!("mixing weight {t} is outside [0, 1]")));
    }
    let s = Rational::one() - t;
    let rows =
        pi1.rows.iter().zip(&pi2.rows).map(|(a, b)| a.iter().zip(b).map(|(x, y)| &s * x + t * y).collect()).collect();
    Ok(Coupling { rows })
}

/// `π_ij = α_i` when `f(x_i) = y_j`, zero otherwise.
pub fn deterministic_coupling(f: &FiniteMap, p: &DiscreteMeasure, q: &DiscreteMeasure) -> Result<Coupling> {
    let targets: Vec<&Point> = q.support().collect();
    let mut rows = Vec::with_capacity(p.len());
    for atom in p.atoms() {
        let image = f.image(&atom.point)?;
        let j = targets.iter().position(|y| y.coords() == image).ok_or_else(|| {
            Error::NotInConstraintSet(format!("image of `{}` is outside the target support", atom.point.id()))
        })?;
        let mut row = vec![Rational::zero(); q.len()];
        row[j] = atom.weight.clone();
        rows.push(row);
    }
    Ok(Coupling { rows })
}
