//! Subset-sum tables and the three-condition convexity test for equalizing
//! maps between two measures with disjoint finite supports.
//!
//! Given weights `α` (first measure) and `β` (second measure) of equal total
//! mass, the set of equalizing maps is convex exactly when
//!
//! 1. every sum `γ` reachable by both sides is reached by a unique couple of
//!    index sets `(I_γ, J_γ)`,
//! 2. the families `{I_γ}` and `{J_γ}` are σ-algebras of their index sets,
//! 3. intersections carry matching labels: the sum labelling `I_γ ∩ I_γ'`
//!    equals the sum labelling `J_γ ∩ J_γ'`.
//!
//! All sums are exact; enumeration is over all `2^n` subsets.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::Add;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Default cap on the number of atoms per side.
pub const DEFAULT_ATOM_CAP: usize = 20;

/// Hard ceiling imposed by the bitset representation.
const MAX_BITS: usize = 63;

/// A subset of `{0, .., n-1}` stored as a bitset. Displayed one-based.
///
/// Ordering is lexicographic on the ascending member sequence, so `{1}`
/// sorts before `{1,2}`, which sorts before `{2}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct IndexSet(u64);

impl IndexSet {
    pub const EMPTY: IndexSet = IndexSet(0);

    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_BITS);
        IndexSet((1u64 << n) - 1)
    }

    pub fn from_bits(bits: u64) -> Self {
        IndexSet(bits)
    }

    /// From zero-based indices.
    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Self {
        IndexSet(indices.into_iter().fold(0u64, |acc, i| acc | (1u64 << i)))
    }

    /// From one-based indices, matching the display convention.
    pub fn from_one_based(indices: &[usize]) -> Self {
        IndexSet::from_indices(indices.iter().map(|i| i - 1))
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, index: usize) -> bool {
        self.0 >> index & 1 == 1
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Zero-based members in ascending order.
    pub fn members(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    pub fn intersection(self, other: IndexSet) -> IndexSet {
        IndexSet(self.0 & other.0)
    }

    pub fn union(self, other: IndexSet) -> IndexSet {
        IndexSet(self.0 | other.0)
    }

    pub fn complement(self, n: usize) -> IndexSet {
        IndexSet(!self.0 & IndexSet::full(n).0)
    }

    pub fn is_subset(self, other: IndexSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Sum of the selected weights.
    pub fn weight(self, weights: &[Rational]) -> Rational {
        self.members().map(|i| &weights[i]).sum()
    }
}

impl Ord for IndexSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.members().cmp(other.members())
    }
}

impl PartialOrd for IndexSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.members().map(|i| (i + 1).to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

impl fmt::Debug for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for IndexSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.members().map(|i| i + 1))
    }
}

/// Every subset of `[n]` grouped by its exact weight sum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SumTable {
    len: usize,
    total: Rational,
    groups: BTreeMap<Rational, Vec<IndexSet>>,
}

impl SumTable {
    /// Number of weights the table was built from.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn total(&self) -> &Rational {
        &self.total
    }

    /// Subsets reaching `gamma`, lexicographically sorted; empty if unreachable.
    pub fn subsets(&self, gamma: &Rational) -> &[IndexSet] {
        self.groups.get(gamma).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn sums(&self) -> impl Iterator<Item = &Rational> {
        self.groups.keys()
    }

    pub fn groups(&self) -> &BTreeMap<Rational, Vec<IndexSet>> {
        &self.groups
    }
}

fn group_by_sum<K>(scaled: &[K]) -> BTreeMap<K, Vec<IndexSet>>
where
    K: Ord + Clone + Zero + for<'a> Add<&'a K, Output = K>,
{
    let n = scaled.len();
    let count = 1usize << n;
    let mut sums: Vec<K> = Vec::with_capacity(count);
    sums.push(K::zero());
    for mask in 1..count {
        let low = mask.trailing_zeros() as usize;
        let prev = sums[mask & (mask - 1)].clone();
        sums.push(prev + &scaled[low]);
    }
    let mut groups: BTreeMap<K, Vec<IndexSet>> = BTreeMap::new();
    for (mask, sum) in sums.into_iter().enumerate() {
        groups.entry(sum).or_default().push(IndexSet(mask as u64));
    }
    for subsets in groups.values_mut() {
        subsets.sort();
    }
    groups
}

fn check_weights(weights: &[Rational], cap: usize) -> Result<()> {
    if weights.len() > cap.min(MAX_BITS) {
        return Err(Error::TooManyAtoms { n: weights.len(), cap: cap.min(MAX_BITS) });
    }
    if let Some(w) = weights.iter().find(|w| !w.is_positive()) {
        return Err(Error::InvalidParameter(format!("weights must be strictly positive, found {w}")));
    }
    Ok(())
}

/// Groups all `2^n` subsets of the weights by their exact sum.
///
/// Sums are computed on integer numerators over the common denominator, in
/// `u64` when every partial sum fits and in big integers otherwise.
pub fn enumerate_sums(weights: &[Rational], cap: usize) -> Result<SumTable> {
    check_weights(weights, cap)?;
    let total: Rational = weights.iter().sum();
    let denom = weights.iter().fold(BigInt::from(1), |acc, w| acc.lcm(w.denom()));
    let scaled: Vec<BigInt> = weights.iter().map(|w| w.numer() * (&denom / w.denom())).collect();
    let scaled_total: BigInt = scaled.iter().sum();

    let to_rational = |k: BigInt| Rational::from_bigints(k, denom.clone()).expect("nonzero denominator");
    let groups: BTreeMap<Rational, Vec<IndexSet>> = if scaled_total.to_u64().is_some() {
        let small: Vec<u64> = scaled.iter().map(|k| k.to_u64().expect("bounded by total")).collect();
        group_by_sum(&small).into_iter().map(|(k, v)| (to_rational(BigInt::from(k)), v)).collect()
    } else {
        group_by_sum(&scaled).into_iter().map(|(k, v)| (to_rational(k), v)).collect()
    };
    Ok(SumTable { len: weights.len(), total, groups })
}

/// Sums reachable from both tables, ascending.
pub fn common_sums(first: &SumTable, second: &SumTable) -> Vec<Rational> {
    first.sums().filter(|g| second.groups.contains_key(*g)).cloned().collect()
}

/// Which measure an index set refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    P,
    Q,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::P => Side::Q,
            Side::Q => Side::P,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::P => "P",
            Side::Q => "Q",
        })
    }
}

/// Index sets on both sides reaching the same sum `gamma`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LabelledCouple {
    pub gamma: Rational,
    pub p_set: IndexSet,
    pub q_set: IndexSet,
}

impl LabelledCouple {
    pub fn new(gamma: Rational, p_set: IndexSet, q_set: IndexSet) -> Self {
        LabelledCouple { gamma, p_set, q_set }
    }

    pub fn set(&self, side: Side) -> IndexSet {
        match side {
            Side::P => self.p_set,
            Side::Q => self.q_set,
        }
    }
}

/// The unique couple `(I_γ, J_γ)` for every common sum `γ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CommonSumAssignment {
    pub p_len: usize,
    pub q_len: usize,
    pub couples: Vec<LabelledCouple>,
}

impl CommonSumAssignment {
    pub fn new(p_len: usize, q_len: usize, couples: Vec<LabelledCouple>) -> Self {
        CommonSumAssignment { p_len, q_len, couples }
    }

    pub fn side_len(&self, side: Side) -> usize {
        match side {
            Side::P => self.p_len,
            Side::Q => self.q_len,
        }
    }

    pub fn gammas(&self) -> impl Iterator<Item = &Rational> {
        self.couples.iter().map(|c| &c.gamma)
    }

    pub fn couple(&self, gamma: &Rational) -> Option<&LabelledCouple> {
        self.couples.iter().find(|c| &c.gamma == gamma)
    }

    /// Label of each member of one side's family.
    pub fn labels(&self, side: Side) -> HashMap<IndexSet, &Rational> {
        self.couples.iter().map(|c| (c.set(side), &c.gamma)).collect()
    }

    /// True when only the empty and full sets are indexed.
    pub fn is_endpoints_only(&self) -> bool {
        self.couples.iter().all(|c| {
            c.p_set.is_empty() && c.q_set.is_empty()
                || c.p_set == IndexSet::full(self.p_len) && c.q_set == IndexSet::full(self.q_len)
        })
    }
}

/// How a family fails to be a σ-algebra.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "defect", rename_all = "snake_case")]
pub enum SigmaDefect {
    MissingEndpoint { set: IndexSet },
    MissingIntersection { first: LabelledCouple, second: LabelledCouple, intersection: IndexSet },
    MissingComplement { couple: LabelledCouple, complement: IndexSet },
}

/// The first condition that fails, with the data needed to build a
/// two-valued counterexample.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "condition", rename_all = "snake_case")]
pub enum ConditionViolation {
    /// Two different couples reach `gamma`; they differ on `side`.
    NonUniqueCouple {
        gamma: Rational,
        side: Side,
        first: LabelledCouple,
        second: LabelledCouple,
    },
    NotSigmaAlgebra {
        side: Side,
        defect: SigmaDefect,
    },
    /// `I_γ ∩ I_γ'` and `J_γ ∩ J_γ'` carry different labels.
    LabelMismatch {
        first: LabelledCouple,
        second: LabelledCouple,
        eta_p: Rational,
        eta_q: Rational,
    },
}

/// Which of the three conditions a violation belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    UniqueCouple,
    SigmaAlgebra,
    LabelConsistency,
}

impl ConditionViolation {
    pub fn condition(&self) -> Condition {
        match self {
            ConditionViolation::NonUniqueCouple { .. } => Condition::UniqueCouple,
            ConditionViolation::NotSigmaAlgebra { .. } => Condition::SigmaAlgebra,
            ConditionViolation::LabelMismatch { .. } => Condition::LabelConsistency,
        }
    }

    /// The two couples whose indicator maps form a counterexample, when the
    /// violation admits one.
    pub fn witness_couples(&self) -> Option<(&LabelledCouple, &LabelledCouple)> {
        match self {
            ConditionViolation::NonUniqueCouple { first, second, .. }
            | ConditionViolation::LabelMismatch { first, second, .. }
            | ConditionViolation::NotSigmaAlgebra {
                defect: SigmaDefect::MissingIntersection { first, second, .. },
                ..
            } => Some((first, second)),
            ConditionViolation::NotSigmaAlgebra { .. } => None,
        }
    }

    /// The same violation with the roles of the two measures exchanged.
    pub fn swapped(&self) -> ConditionViolation {
        fn swap(c: &LabelledCouple) -> LabelledCouple {
            LabelledCouple::new(c.gamma.clone(), c.q_set, c.p_set)
        }
        match self {
            ConditionViolation::NonUniqueCouple { gamma, side, first, second } => ConditionViolation::NonUniqueCouple {
                gamma: gamma.clone(),
                side: side.other(),
                first: swap(first),
                second: swap(second),
            },
            ConditionViolation::NotSigmaAlgebra { side, defect } => ConditionViolation::NotSigmaAlgebra {
                side: side.other(),
                defect: match defect {
                    SigmaDefect::MissingEndpoint { set } => SigmaDefect::MissingEndpoint { set: *set },
                    SigmaDefect::MissingIntersection { first, second, intersection } => {
                        SigmaDefect::MissingIntersection {
                            first: swap(first),
                            second: swap(second),
                            intersection: *intersection,
                        }
                    }
                    SigmaDefect::MissingComplement { couple, complement } => {
                        SigmaDefect::MissingComplement { couple: swap(couple), complement: *complement }
                    }
                },
            },
            ConditionViolation::LabelMismatch { first, second, eta_p, eta_q } => ConditionViolation::LabelMismatch {
                first: swap(first),
                second: swap(second),
                eta_p: eta_q.clone(),
                eta_q: eta_p.clone(),
            },
        }
    }
}

impl fmt::Display for ConditionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConditionViolation::NonUniqueCouple { gamma, side, first, second } => write!(
                f,
                "sum {gamma} is reached on side {side} by both {} and {}",
                first.set(*side),
                second.set(*side)
            ),
            ConditionViolation::NotSigmaAlgebra { side, defect } => match defect {
                SigmaDefect::MissingEndpoint { set } => {
                    write!(f, "family on side {side} lacks the set {set}")
                }
                SigmaDefect::MissingIntersection { first, second, intersection } => write!(
                    f,
                    "family on side {side} is not closed under intersection: {} ∩ {} = {intersection} is unindexed",
                    first.set(*side),
                    second.set(*side)
                ),
                SigmaDefect::MissingComplement { couple, complement } => {
                    write!(f, "family on side {side} lacks the complement {complement} of {}", couple.set(*side))
                }
            },
            ConditionViolation::LabelMismatch { first, second, eta_p, eta_q } => write!(
                f,
                "intersection of the sets labelled {} and {} is labelled {eta_p} on P but {eta_q} on Q",
                first.gamma, second.gamma
            ),
        }
    }
}

/// Condition 1: a unique couple for every common sum.
///
/// The first violation in increasing `γ` is reported. At that `γ` the `Q`
/// side is inspected first; the varying side's first two subsets (in
/// lexicographic order) are paired with the other side's first subset.
pub fn check_condition_i(
    p_table: &SumTable,
    q_table: &SumTable,
) -> std::result::Result<CommonSumAssignment, ConditionViolation> {
    let mut couples = Vec::new();
    for gamma in common_sums(p_table, q_table) {
        let ps = p_table.subsets(&gamma);
        let qs = q_table.subsets(&gamma);
        if qs.len() > 1 {
            return Err(ConditionViolation::NonUniqueCouple {
                gamma: gamma.clone(),
                side: Side::Q,
                first: LabelledCouple::new(gamma.clone(), ps[0], qs[0]),
                second: LabelledCouple::new(gamma, ps[0], qs[1]),
            });
        }
        if ps.len() > 1 {
            return Err(ConditionViolation::NonUniqueCouple {
                gamma: gamma.clone(),
                side: Side::P,
                first: LabelledCouple::new(gamma.clone(), ps[0], qs[0]),
                second: LabelledCouple::new(gamma, ps[1], qs[0]),
            });
        }
        couples.push(LabelledCouple::new(gamma, ps[0], qs[0]));
    }
    Ok(CommonSumAssignment::new(p_table.len(), q_table.len(), couples))
}

/// Condition 2: both families are σ-algebras.
///
/// Checks, in order, that the empty and full sets are present, that every
/// pairwise intersection is indexed (pairs in increasing label order, side
/// `P` before `Q`), and that every complement is indexed.
pub fn check_condition_ii(assignment: &CommonSumAssignment) -> std::result::Result<(), ConditionViolation> {
    for side in [Side::P, Side::Q] {
        let labels = assignment.labels(side);
        let n = assignment.side_len(side);
        for set in [IndexSet::EMPTY, IndexSet::full(n)] {
            if !labels.contains_key(&set) {
                return Err(ConditionViolation::NotSigmaAlgebra { side, defect: SigmaDefect::MissingEndpoint { set } });
            }
        }
    }
    let couples = &assignment.couples;
    for (i, first) in couples.iter().enumerate() {
        for second in &couples[i + 1..] {
            for side in [Side::P, Side::Q] {
                let intersection = first.set(side).intersection(second.set(side));
                if !assignment.couples.iter().any(|c| c.set(side) == intersection) {
                    return Err(ConditionViolation::NotSigmaAlgebra {
                        side,
                        defect: SigmaDefect::MissingIntersection {
                            first: first.clone(),
                            second: second.clone(),
                            intersection,
                        },
                    });
                }
            }
        }
    }
    for side in [Side::P, Side::Q] {
        let labels = assignment.labels(side);
        let n = assignment.side_len(side);
        for couple in couples {
            let complement = couple.set(side).complement(n);
            if !labels.contains_key(&complement) {
                return Err(ConditionViolation::NotSigmaAlgebra {
                    side,
                    defect: SigmaDefect::MissingComplement { couple: couple.clone(), complement },
                });
            }
        }
    }
    Ok(())
}

/// Condition 3: the label of `I_γ ∩ I_γ'` equals the label of `J_γ ∩ J_γ'`
/// for every pair of common sums.
pub fn check_condition_iii(assignment: &CommonSumAssignment) -> std::result::Result<(), ConditionViolation> {
    let p_labels = assignment.labels(Side::P);
    let q_labels = assignment.labels(Side::Q);
    let couples = &assignment.couples;
    for (i, first) in couples.iter().enumerate() {
        for second in &couples[i + 1..] {
            let p_meet = first.p_set.intersection(second.p_set);
            let q_meet = first.q_set.intersection(second.q_set);
            let missing = |side, intersection| ConditionViolation::NotSigmaAlgebra {
                side,
                defect: SigmaDefect::MissingIntersection { first: first.clone(), second: second.clone(), intersection },
            };
            let eta_p = p_labels.get(&p_meet).ok_or_else(|| missing(Side::P, p_meet))?;
            let eta_q = q_labels.get(&q_meet).ok_or_else(|| missing(Side::Q, q_meet))?;
            if eta_p != eta_q {
                return Err(ConditionViolation::LabelMismatch {
                    first: first.clone(),
                    second: second.clone(),
                    eta_p: (*eta_p).clone(),
                    eta_q: (*eta_q).clone(),
                });
            }
        }
    }
    Ok(())
}

/// Outcome of the three-condition test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DisjointDecision {
    Convex(CommonSumAssignment),
    Nonconvex(ConditionViolation),
}

impl DisjointDecision {
    pub fn is_convex(&self) -> bool {
        matches!(self, DisjointDecision::Convex(_))
    }
}

/// Decides convexity of the equalizing maps between two disjoint-support
/// measures given only their weights.
pub fn decide_disjoint(alpha: &[Rational], beta: &[Rational], cap: usize) -> Result<DisjointDecision> {
    check_weights(alpha, cap)?;
    check_weights(beta, cap)?;
    let (left, right): (Rational, Rational) = (alpha.iter().sum(), beta.iter().sum());
    if left != right {
        return Err(Error::UnequalMass { left, right });
    }
    let p_table = enumerate_sums(alpha, cap)?;
    let q_table = enumerate_sums(beta, cap)?;
    let assignment = match check_condition_i(&p_table, &q_table) {
        Ok(a) => a,
        Err(v) => return Ok(DisjointDecision::Nonconvex(v)),
    };
    if let Err(v) = check_condition_ii(&assignment) {
        return Ok(DisjointDecision::Nonconvex(v));
    }
    if let Err(v) = check_condition_iii(&assignment) {
        return Ok(DisjointDecision::Nonconvex(v));
    }
    Ok(DisjointDecision::Convex(assignment))
}
