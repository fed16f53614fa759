//! Finitely supported measures, tabulated maps, and the push-forward calculus.
//!
//! Atoms are kept in lexicographic order of their coordinates, which makes
//! measure equality, serialization and every downstream enumeration
//! deterministic. Point identity is by coordinates; ids are labels only.

use std::borrow::Borrow;
use std::cmp::Ordering;
use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// A labelled point of `R^d` with exact coordinates.
#[derive(Clone, Debug)]
pub struct Point {
    id: String,
    coords: Vec<Rational>,
}

impl Point {
    pub fn new(id: impl Into<String>, coords: Vec<Rational>) -> Self {
        Point { id: id.into(), coords }
    }

    /// A point labelled by its own coordinates.
    pub fn anonymous(coords: Vec<Rational>) -> Self {
        Point { id: coords_label(&coords), coords }
    }

    pub fn scalar(value: Rational) -> Self {
        Point::anonymous(vec![value])
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn coords(&self) -> &[Rational] {
        &self.coords
    }

    pub fn dimension(&self) -> usize {
        self.coords.len()
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }
}

impl PartialEq for Point {
    fn eq(&self, other: &Self) -> bool {
        self.coords == other.coords
    }
}

impl Eq for Point {}

impl PartialOrd for Point {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Point {
    fn cmp(&self, other: &Self) -> Ordering {
        self.coords.cmp(&other.coords)
    }
}

impl Hash for Point {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.coords.hash(state);
    }
}

impl Borrow<[Rational]> for Point {
    fn borrow(&self) -> &[Rational] {
        &self.coords
    }
}

/// `"1/2"` for one coordinate, `"(0,1/2)"` otherwise.
pub fn coords_label(coords: &[Rational]) -> String {
    if coords.len() == 1 {
        coords[0].to_string()
    } else {
        let parts: Vec<String> = coords.iter().map(ToString::to_string).collect();
        format!("({})", parts.join(","))
    }
}

#[derive(Clone, Debug)]
pub struct Atom {
    pub point: Point,
    pub weight: Rational,
}

/// A finitely supported nonnegative measure on `R^d`.
///
/// Every stored weight is strictly positive and atom points are pairwise
/// distinct. The total mass is the exact sum of the weights.
#[derive(Clone, Debug)]
pub struct DiscreteMeasure {
    dimension: usize,
    atoms: Vec<Atom>,
}

impl DiscreteMeasure {
    /// Builds a measure, dropping zero-weight atoms.
    pub fn new(dimension: usize, atoms: impl IntoIterator<Item = (Point, Rational)>) -> Result<Self> {
        let mut sorted: BTreeMap<Point, Rational> = BTreeMap::new();
        for (point, weight) in atoms {
            if point.dimension() != dimension {
                return Err(Error::DimensionMismatch { expected: dimension, found: point.dimension() });
            }
            if weight.is_negative() {
                return Err(Error::NegativeWeight { id: point.id, weight });
            }
            match sorted.entry(point) {
                Entry::Occupied(e) => return Err(Error::DuplicatePoint(e.key().id.clone())),
                Entry::Vacant(e) => {
                    e.insert(weight);
                }
            }
        }
        let atoms =
            sorted.into_iter().filter(|(_, w)| !w.is_zero()).map(|(point, weight)| Atom { point, weight }).collect();
        Ok(DiscreteMeasure { dimension, atoms })
    }

    pub fn zero(dimension: usize) -> Self {
        DiscreteMeasure { dimension, atoms: Vec::new() }
    }

    pub fn dirac(point: Point) -> Self {
        DiscreteMeasure { dimension: point.dimension(), atoms: vec![Atom { point, weight: Rational::one() }] }
    }

    /// Equal weights `1/n` on the given distinct points.
    pub fn uniform(dimension: usize, points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("uniform measure needs at least one point".into()));
        }
        let w = Rational::new(1, points.len() as i64);
        DiscreteMeasure::new(dimension, points.into_iter().map(|p| (p, w.clone())))
    }

    /// Atoms `prefix1, prefix2, ...` at the integer points `offset, offset+1, ...`
    /// of the real line, carrying the given weights in order.
    pub fn on_line(prefix: &str, offset: i64, weights: &[Rational]) -> Result<Self> {
        DiscreteMeasure::new(
            1,
            weights.iter().enumerate().map(|(i, w)| {
                (Point::new(format!("{prefix}{}", i + 1), vec![Rational::integer(offset + i as i64)]), w.clone())
            }),
        )
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mass(&self) -> Rational {
        self.atoms.iter().map(|a| &a.weight).sum()
    }

    pub fn is_probability(&self) -> bool {
        self.mass() == Rational::one()
    }

    pub fn require_probability(&self) -> Result<()> {
        let mass = self.mass();
        if mass == Rational::one() {
            Ok(())
        } else {
            Err(Error::NotProbability(mass))
        }
    }

    pub fn support(&self) -> impl Iterator<Item = &Point> {
        self.atoms.iter().map(|a| &a.point)
    }

    pub fn weights(&self) -> Vec<Rational> {
        self.atoms.iter().map(|a| a.weight.clone()).collect()
    }

    pub fn atom_at(&self, coords: &[Rational]) -> Option<&Atom> {
        self.atoms.binary_search_by(|a| a.point.coords.as_slice().cmp(coords)).ok().map(|i| &self.atoms[i])
    }

    /// Weight at `coords`, zero off the support.
    pub fn weight_at(&self, coords: &[Rational]) -> Rational {
        self.atom_at(coords).map(|a| a.weight.clone()).unwrap_or_else(Rational::zero)
    }

    pub fn contains(&self, coords: &[Rational]) -> bool {
        self.atom_at(coords).is_some()
    }

    /// True when all weights are equal.
    pub fn is_uniform(&self) -> bool {
        self.atoms.windows(2).all(|w| w[0].weight == w[1].weight)
    }

    fn check_dimension(&self, other: &DiscreteMeasure) -> Result<()> {
        if self.dimension != other.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, found: other.dimension });
        }
        Ok(())
    }

    /// `self + other`; shared points keep the label from `self`.
    pub fn add(&self, other: &DiscreteMeasure) -> Result<DiscreteMeasure> {
        self.check_dimension(other)?;
        let mut merged: BTreeMap<Point, Rational> =
            self.atoms.iter().map(|a| (a.point.clone(), a.weight.clone())).collect();
        for atom in &other.atoms {
            *merged.entry(atom.point.clone()).or_insert_with(Rational::zero) += &atom.weight;
        }
        DiscreteMeasure::new(self.dimension, merged)
    }

    pub fn scale(&self, factor: &Rational) -> Result<DiscreteMeasure> {
        if factor.is_negative() {
            return Err(Error::InvalidParameter(format!("negative scale factor {factor}")));
        }
        DiscreteMeasure::new(self.dimension, self.atoms.iter().map(|a| (a.point.clone(), &a.weight * factor)))
    }

    /// `self - other`, defined only when the result stays nonnegative.
    pub fn checked_sub(&self, other: &DiscreteMeasure) -> Result<DiscreteMeasure> {
        self.check_dimension(other)?;
        let mut out: BTreeMap<Point, Rational> =
            self.atoms.iter().map(|a| (a.point.clone(), a.weight.clone())).collect();
        for atom in &other.atoms {
            let slot = out.entry(atom.point.clone()).or_insert_with(Rational::zero);
            *slot -= &atom.weight;
            if slot.is_negative() {
                return Err(Error::InvalidParameter(format!(
                    "subtraction leaves negative mass at `{}`",
                    atom.point.id
                )));
            }
        }
        DiscreteMeasure::new(self.dimension, out)
    }

    /// Rescales to a probability measure.
    pub fn normalized(&self) -> Result<DiscreteMeasure> {
        let mass = self.mass();
        let inv = mass.recip().ok_or_else(|| Error::InvalidParameter("cannot normalize the zero measure".into()))?;
        self.scale(&inv)
    }

    /// `Σ h(x) μ({x})` for a scalar-valued tabulated `h`.
    pub fn integrate(&self, h: &FiniteMap) -> Result<Rational> {
        if h.codomain_dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: h.codomain_dim() });
        }
        let mut total = Rational::zero();
        for atom in &self.atoms {
            let value = h.image(&atom.point)?;
            total += &value[0] * &atom.weight;
        }
        Ok(total)
    }
}

impl PartialEq for DiscreteMeasure {
    fn eq(&self, other: &Self) -> bool {
        self.dimension == other.dimension
            && self.atoms.len() == other.atoms.len()
            && self.atoms.iter().zip(&other.atoms).all(|(a, b)| a.point == b.point && a.weight == b.weight)
    }
}

impl Eq for DiscreteMeasure {}

/// An explicit function from a finite set of points to value vectors of a
/// common dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteMap {
    codomain_dim: usize,
    entries: BTreeMap<Point, Vec<Rational>>,
}

impl FiniteMap {
    pub fn new(codomain_dim: usize) -> Self {
        FiniteMap { codomain_dim, entries: BTreeMap::new() }
    }

    pub fn from_entries(
        codomain_dim: usize,
        entries: impl IntoIterator<Item = (Point, Vec<Rational>)>,
    ) -> Result<Self> {
        let mut map = FiniteMap::new(codomain_dim);
        for (point, value) in entries {
            map.insert(point, value)?;
        }
        Ok(map)
    }

    pub fn insert(&mut self, point: Point, value: Vec<Rational>) -> Result<()> {
        if value.len() != self.codomain_dim {
            return Err(Error::DimensionMismatch { expected: self.codomain_dim, found: value.len() });
        }
        match self.entries.entry(point) {
            Entry::Occupied(e) => Err(Error::DuplicatePoint(e.key().id.clone())),
            Entry::Vacant(e) => {
                e.insert(value);
                Ok(())
            }
        }
    }

    pub fn constant<'a>(points: impl IntoIterator<Item = &'a Point>, value: Vec<Rational>) -> Self {
        let codomain_dim = value.len();
        let entries = points.into_iter().map(|p| (p.clone(), value.clone())).collect();
        FiniteMap { codomain_dim, entries }
    }

    pub fn identity<'a>(points: impl IntoIterator<Item = &'a Point>) -> Result<Self> {
        let mut dim = None;
        let mut entries = BTreeMap::new();
        for p in points {
            match dim {
                None => dim = Some(p.dimension()),
                Some(d) if d != p.dimension() => {
                    return Err(Error::DimensionMismatch { expected: d, found: p.dimension() })
                }
                _ => {}
            }
            entries.insert(p.clone(), p.coords.clone());
        }
        Ok(FiniteMap { codomain_dim: dim.unwrap_or(0), entries })
    }

    pub fn codomain_dim(&self) -> usize {
        self.codomain_dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, coords: &[Rational]) -> Option<&[Rational]> {
        self.entries.get(coords).map(Vec::as_slice)
    }

    pub fn image(&self, point: &Point) -> Result<&[Rational]> {
        self.get(&point.coords).ok_or_else(|| Error::MissingMapping(point.id.clone()))
    }

    pub fn domain(&self) -> impl Iterator<Item = &Point> {
        self.entries.keys()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Point, &[Rational])> {
        self.entries.iter().map(|(p, v)| (p, v.as_slice()))
    }

    /// `outer ∘ self`; every image of `self` must be in the domain of `outer`.
    pub fn then(&self, outer: &FiniteMap) -> Result<FiniteMap> {
        let mut composed = FiniteMap::new(outer.codomain_dim);
        for (point, value) in &self.entries {
            let image = outer.get(value).ok_or_else(|| Error::MissingMapping(coords_label(value)))?;
            composed.entries.insert(point.clone(), image.to_vec());
        }
        Ok(composed)
    }

    /// Whether the two maps agree on every atom of `mu`.
    pub fn agrees_on(&self, other: &FiniteMap, mu: &DiscreteMeasure) -> Result<bool> {
        for point in mu.support() {
            if self.image(point)? != other.image(point)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Image measure `f♯μ`: the weights of atoms sharing an image are summed.
pub fn push_forward(f: &FiniteMap, mu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    let mut images: BTreeMap<Vec<Rational>, Rational> = BTreeMap::new();
    for atom in mu.atoms() {
        let value = f.image(&atom.point)?;
        match images.get_mut(value) {
            Some(w) => *w += &atom.weight,
            None => {
                images.insert(value.to_vec(), atom.weight.clone());
            }
        }
    }
    DiscreteMeasure::new(f.codomain_dim(), images.into_iter().map(|(coords, w)| (Point::anonymous(coords), w)))
}

/// The common part `Σ min(P{x}, Q{x}) δ_x` over shared support points.
pub fn min_measure(p: &DiscreteMeasure, q: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    p.check_dimension(q)?;
    let common = p
        .atoms()
        .iter()
        .filter_map(|a| q.atom_at(a.point.coords()).map(|b| (a.point.clone(), a.weight.clone().min(b.weight.clone()))));
    DiscreteMeasure::new(p.dimension(), common)
}

/// Residuals after removing the common part of two measures of equal mass.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reduction {
    pub p_residual: DiscreteMeasure,
    pub q_residual: DiscreteMeasure,
    pub common: DiscreteMeasure,
    /// Shared mass of the two residuals.
    pub gamma: Rational,
}

/// Splits `P = P' + min(P,Q)` and `Q = Q' + min(P,Q)`; the residuals have
/// disjoint supports and equal mass.
pub fn reduce_pair(p: &DiscreteMeasure, q: &DiscreteMeasure) -> Result<Reduction> {
    p.check_dimension(q)?;
    let (pm, qm) = (p.mass(), q.mass());
    if pm != qm {
        return Err(Error::UnequalMass { left: pm, right: qm });
    }
    let common = min_measure(p, q)?;
    let p_residual = p.checked_sub(&common)?;
    let q_residual = q.checked_sub(&common)?;
    let gamma = p_residual.mass();
    Ok(Reduction { p_residual, q_residual, common, gamma })
}

/// `Σ μ({x}) ‖x‖²`.
pub fn second_moment(mu: &DiscreteMeasure) -> Rational {
    mu.atoms()
        .iter()
        .map(|a| {
            let sq: Rational = a.point.coords().iter().map(|c| c * c).sum();
            sq * &a.weight
        })
        .sum()
}

/// `Σ P({x}) ⟨f(x), g(x)⟩`.
pub fn inner_product_integral(f: &FiniteMap, g: &FiniteMap, p: &DiscreteMeasure) -> Result<Rational> {
    if f.codomain_dim() != g.codomain_dim() {
        return Err(Error::DimensionMismatch { expected: f.codomain_dim(), found: g.codomain_dim() });
    }
    let mut total = Rational::zero();
    for atom in p.atoms() {
        let (u, v) = (f.image(&atom.point)?, g.image(&atom.point)?);
        let dot: Rational = u.iter().zip(v).map(|(a, b)| a * b).sum();
        total += dot * &atom.weight;
    }
    Ok(total)
}

/// Pointwise `(1 - t) f + t g`.
pub fn convex_combination(f: &FiniteMap, g: &FiniteMap, t: &Rational) -> Result<FiniteMap> {
    if f.codomain_dim() != g.codomain_dim() {
        return Err(Error::DimensionMismatch { expected: f.codomain_dim(), found: g.codomain_dim() });
    }
    if t.is_negative() || *t > Rational::one() {
        return Err(Error::OutOfDomain(format!("mixing weight {t} outside [0, 1]")));
    }
    let f_domain: BTreeSet<&Point> = f.domain().collect();
    let g_domain: BTreeSet<&Point> = g.domain().collect();
    if f_domain != g_domain {
        return Err(Error::DomainMismatch("maps are defined on different point sets".into()));
    }
    let s = Rational::one() - t;
    let mut out = FiniteMap::new(f.codomain_dim());
    for (point, u) in f.entries() {
        let v = g.image(point)?;
        let mixed = u.iter().zip(v).map(|(a, b)| &s * a + t * b).collect();
        out.entries.insert(point.clone(), mixed);
    }
    Ok(out)
}

/// Exact equality of measures, insensitive to atom order and labels.
pub fn measures_equal(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> bool {
    mu == nu
}

/// `supp(P) ∪ supp(Q)` in canonical order. Points only in `Q` whose label
/// clashes with a different point of `P` are relabelled `q:<id>`.
pub fn union_support(p: &DiscreteMeasure, q: &DiscreteMeasure) -> Vec<Point> {
    let mut points: BTreeMap<Point, ()> = p.support().map(|pt| (pt.clone(), ())).collect();
    let p_ids: BTreeSet<&str> = p.support().map(Point::id).collect();
    for pt in q.support() {
        if !points.contains_key(pt) {
            let relabelled =
                if p_ids.contains(pt.id()) { pt.clone().with_id(format!("q:{}", pt.id())) } else { pt.clone() };
            points.insert(relabelled, ());
        }
    }
    points.into_keys().collect()
}
