//! End-to-end convexity analysis of the equalizing maps `{f : f♯P = f♯Q}`
//! between two finitely supported probability measures.
//!
//! The common part `min(P, Q)` is removed first; the residuals have disjoint
//! supports and equal mass, and the analysis continues on their weights
//! only. Nonconvex verdicts always carry a re-verified [`WitnessPair`] built
//! from two-valued indicator maps.

use num_integer::Integer;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{reduce_pair, union_support, DiscreteMeasure, FiniteMap, Point, Reduction};
use crate::rational::Rational;
use crate::subset_algebra::{
    decide_disjoint, CommonSumAssignment, Condition, ConditionViolation, DisjointDecision, IndexSet,
};
use crate::witness::{ConstraintKind, WitnessPair};

/// The rule that settled a verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecidedBy {
    /// `P = Q`, so every map equalizes.
    IdenticalMeasures,
    /// Uniform residuals with coprime support sizes.
    CoprimeUniform,
    /// A common sum is reached by two different couples.
    UniqueCouple,
    /// An index family is not a σ-algebra.
    SigmaAlgebra,
    /// Intersection labels disagree.
    LabelConsistency,
    /// All three subset-sum conditions hold.
    ThreeConditions,
}

impl DecidedBy {
    pub fn as_str(self) -> &'static str {
        match self {
            DecidedBy::IdenticalMeasures => "identical_measures",
            DecidedBy::CoprimeUniform => "coprime_uniform",
            DecidedBy::UniqueCouple => "unique_couple",
            DecidedBy::SigmaAlgebra => "sigma_algebra",
            DecidedBy::LabelConsistency => "label_consistency",
            DecidedBy::ThreeConditions => "three_conditions",
        }
    }
}

impl From<Condition> for DecidedBy {
    fn from(c: Condition) -> Self {
        match c {
            Condition::UniqueCouple => DecidedBy::UniqueCouple,
            Condition::SigmaAlgebra => DecidedBy::SigmaAlgebra,
            Condition::LabelConsistency => DecidedBy::LabelConsistency,
        }
    }
}

/// A minimal block of points that every equalizing map must send to a
/// single value, with its mass `gamma` under both residuals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub gamma: Rational,
    pub p_points: Vec<Point>,
    pub q_points: Vec<Point>,
}

/// Atom partition of a convex equalizer set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Structure {
    pub blocks: Vec<Block>,
    /// Shared points outside both residual supports; maps are unconstrained there.
    pub free_points: Vec<Point>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EqualizerVerdict {
    /// `P = Q`: every map equalizes.
    AllFunctions,
    /// Exactly the maps constant on the residual supports.
    ConvexTrivial {
        constant_on: Vec<Point>,
    },
    ConvexStructured {
        assignment: CommonSumAssignment,
        structure: Structure,
    },
    Nonconvex {
        violation: ConditionViolation,
        witness: Box<WitnessPair>,
    },
}

impl EqualizerVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            EqualizerVerdict::AllFunctions => "all_functions",
            EqualizerVerdict::ConvexTrivial { .. } => "convex_trivial",
            EqualizerVerdict::ConvexStructured { .. } => "convex_structured",
            EqualizerVerdict::Nonconvex { .. } => "nonconvex",
        }
    }

    pub fn is_convex(&self) -> bool {
        !matches!(self, EqualizerVerdict::Nonconvex { .. })
    }

    pub fn witness(&self) -> Option<&WitnessPair> {
        match self {
            EqualizerVerdict::Nonconvex { witness, .. } => Some(witness),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EqualizerReport {
    pub verdict: EqualizerVerdict,
    pub reduction: Reduction,
    pub decided_by: DecidedBy,
}

fn check_inputs(p: &DiscreteMeasure, q: &DiscreteMeasure) -> Result<()> {
    if p.dimension() != q.dimension() {
        return Err(Error::DimensionMismatch { expected: p.dimension(), found: q.dimension() });
    }
    p.require_probability()?;
    q.require_probability()
}

/// Decides the convexity of the equalizing maps between `p` and `q`.
///
/// `cap` bounds the number of residual atoms per side for the subset-sum
/// enumeration.
pub fn analyze_equalizers(p: &DiscreteMeasure, q: &DiscreteMeasure, cap: usize) -> Result<EqualizerReport> {
    check_inputs(p, q)?;
    let reduction = reduce_pair(p, q)?;
    if reduction.gamma.is_zero() {
        return Ok(EqualizerReport {
            verdict: EqualizerVerdict::AllFunctions,
            reduction,
            decided_by: DecidedBy::IdenticalMeasures,
        });
    }
    let (p_res, q_res) = (&reduction.p_residual, &reduction.q_residual);
    let residual_support = || -> Vec<Point> { union_support(p_res, q_res) };

    if p_res.is_uniform() && q_res.is_uniform() && p_res.len().gcd(&q_res.len()) == 1 {
        debug_assert!(
            p_res.len().max(q_res.len()) > cap
                || matches!(
                    decide_disjoint(&p_res.weights(), &q_res.weights(), cap),
                    Ok(DisjointDecision::Convex(ref a)) if a.is_endpoints_only()
                ),
            "coprime shortcut disagrees with the subset-sum decision"
        );
        return Ok(EqualizerReport {
            verdict: EqualizerVerdict::ConvexTrivial { constant_on: residual_support() },
            reduction,
            decided_by: DecidedBy::CoprimeUniform,
        });
    }

    match decide_disjoint(&p_res.weights(), &q_res.weights(), cap)? {
        DisjointDecision::Convex(assignment) => {
            let verdict = if assignment.is_endpoints_only() {
                EqualizerVerdict::ConvexTrivial { constant_on: residual_support() }
            } else {
                let structure = describe_structure(&assignment, &reduction, p, q);
                EqualizerVerdict::ConvexStructured { assignment, structure }
            };
            Ok(EqualizerReport { verdict, reduction, decided_by: DecidedBy::ThreeConditions })
        }
        DisjointDecision::Nonconvex(violation) => {
            let witness = build_witness(p, q, &violation)?;
            let decided_by = violation.condition().into();
            Ok(EqualizerReport {
                verdict: EqualizerVerdict::Nonconvex { violation, witness: Box::new(witness) },
                reduction,
                decided_by,
            })
        }
    }
}

fn indicator_map(
    support: &[Point],
    p_points: &[&Point],
    q_points: &[&Point],
    p_set: IndexSet,
    q_set: IndexSet,
) -> Result<FiniteMap> {
    let zero = vec![Rational::zero()];
    let one = vec![Rational::one()];
    let mut map = FiniteMap::new(1);
    for point in support {
        let p_index = p_points.iter().position(|x| *x == point);
        let q_index = q_points.iter().position(|y| *y == point);
        let value = match (p_index, q_index) {
            (Some(i), _) if !p_set.contains(i) => one.clone(),
            (_, Some(j)) if !q_set.contains(j) => one.clone(),
            _ => zero.clone(),
        };
        map.insert(point.clone(), value)?;
    }
    Ok(map)
}

/// Builds the two-valued counterexample for a violated condition.
///
/// Each map takes the value `0` on the residual points indexed by its couple
/// and `1` on the other residual points; points removed by the reduction map
/// to `0` under both. The result is re-verified by recomputation.
pub fn build_witness(p: &DiscreteMeasure, q: &DiscreteMeasure, violation: &ConditionViolation) -> Result<WitnessPair> {
    let reduction = reduce_pair(p, q)?;
    let (first, second) = violation
        .witness_couples()
        .ok_or_else(|| Error::InternalInconsistency(format!("violation `{violation}` does not determine a witness")))?;
    let p_points: Vec<&Point> = reduction.p_residual.support().collect();
    let q_points: Vec<&Point> = reduction.q_residual.support().collect();
    let support = union_support(p, q);
    let f = indicator_map(&support, &p_points, &q_points, first.p_set, first.q_set)?;
    let g = indicator_map(&support, &p_points, &q_points, second.p_set, second.q_set)?;
    WitnessPair::new(ConstraintKind::Equalizer, p, q, f, g)
        .map_err(|e| Error::InternalInconsistency(format!("witness for `{violation}` failed verification: {e}")))
}

fn minimal_members(family: &[IndexSet]) -> Vec<IndexSet> {
    family
        .iter()
        .copied()
        .filter(|s| !s.is_empty())
        .filter(|s| !family.iter().any(|t| !t.is_empty() && t != s && t.is_subset(*s)))
        .collect()
}

/// Minimal nonempty members of both σ-algebras, paired by label, mapped back
/// to the residual support points.
pub fn describe_structure(
    assignment: &CommonSumAssignment,
    reduction: &Reduction,
    p: &DiscreteMeasure,
    q: &DiscreteMeasure,
) -> Structure {
    let p_family: Vec<IndexSet> = assignment.couples.iter().map(|c| c.p_set).collect();
    let q_family: Vec<IndexSet> = assignment.couples.iter().map(|c| c.q_set).collect();
    let (p_min, q_min) = (minimal_members(&p_family), minimal_members(&q_family));
    let p_points: Vec<&Point> = reduction.p_residual.support().collect();
    let q_points: Vec<&Point> = reduction.q_residual.support().collect();
    let blocks = assignment
        .couples
        .iter()
        .filter(|c| p_min.contains(&c.p_set) || q_min.contains(&c.q_set))
        .map(|c| Block {
            gamma: c.gamma.clone(),
            p_points: c.p_set.members().map(|i| p_points[i].clone()).collect(),
            q_points: c.q_set.members().map(|j| q_points[j].clone()).collect(),
        })
        .collect();
    let free_points = union_support(p, q)
        .into_iter()
        .filter(|pt| !reduction.p_residual.contains(pt.coords()) && !reduction.q_residual.contains(pt.coords()))
        .collect();
    Structure { blocks, free_points }
}
