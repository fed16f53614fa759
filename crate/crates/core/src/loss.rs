//! Exact discrepancy losses built on push-forwards, nonconvexity
//! certificates, segment scans and the covariance penalty.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{convex_combination, DiscreteMeasure, FiniteMap, Point};
use crate::rational::Rational;
use crate::witness::{ConstraintKind, WitnessPair};

/// `½ Σ |μ{x} − ν{x}|` over the union of supports.
pub fn tv_distance(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Rational> {
    if mu.dimension() != nu.dimension() {
        return Err(Error::DimensionMismatch { expected: mu.dimension(), found: nu.dimension() });
    }
    let mut total = Rational::zero();
    for atom in mu.atoms() {
        total += (&atom.weight - nu.weight_at(atom.point.coords())).abs();
    }
    for atom in nu.atoms() {
        if !mu.contains(atom.point.coords()) {
            total += atom.weight.clone();
        }
    }
    Ok(total * Rational::half())
}

/// `∫ |F_μ − F_ν|` on the real line, summed exactly between breakpoints.
pub fn w1_line(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Rational> {
    for m in [mu, nu] {
        if m.dimension() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: m.dimension() });
        }
    }
    let (a, b) = (mu.mass(), nu.mass());
    if a != b {
        return Err(Error::UnequalMass { left: a, right: b });
    }
    let mut breaks: Vec<(&Rational, Rational)> = mu
        .atoms()
        .iter()
        .map(|x| (&x.point.coords()[0], x.weight.clone()))
        .chain(nu.atoms().iter().map(|y| (&y.point.coords()[0], -y.weight.clone())))
        .collect();
    breaks.sort_by(|x, y| x.0.cmp(y.0));
    let mut diff = Rational::zero();
    let mut total = Rational::zero();
    for pair in breaks.windows(2) {
        diff += &pair[0].1;
        total += diff.abs() * (pair[1].0 - pair[0].0);
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    Tv,
    W1Line,
}

impl Distance {
    pub fn between(self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Rational> {
        match self {
            Distance::Tv => tv_distance(mu, nu),
            Distance::W1Line => w1_line(mu, nu),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Distance::Tv => "tv",
            Distance::W1Line => "w1",
        }
    }
}

/// `D(f♯P, f♯Q)` for equalizers or `D(f♯P, Q)` for transport.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LossCandidate {
    pub distance: Distance,
    pub kind: ConstraintKind,
}

impl LossCandidate {
    pub fn new(distance: Distance, kind: ConstraintKind) -> Self {
        LossCandidate { distance, kind }
    }

    pub fn name(&self) -> String {
        let kind = match self.kind {
            ConstraintKind::Equalizer => "equalizer",
            ConstraintKind::Transport => "transport",
        };
        format!("{}_{kind}", self.distance.as_str())
    }

    pub fn evaluate(&self, f: &FiniteMap, p: &DiscreteMeasure, q: &DiscreteMeasure) -> Result<Rational> {
        let (left, right) = self.kind.sides(f, p, q)?;
        self.distance.between(&left, &right)
    }
}

/// Exact loss values at two constraint-set members and at their midpoint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NonconvexityCertificate {
    pub loss: LossCandidate,
    pub p: DiscreteMeasure,
    pub q: DiscreteMeasure,
    pub f: FiniteMap,
    pub g: FiniteMap,
    pub t: Rational,
    pub loss_f: Rational,
    pub loss_g: Rational,
    pub loss_mid: Rational,
}

impl NonconvexityCertificate {
    /// Recomputes the three loss values from the raw measures and maps.
    pub fn verify(&self) -> Result<()> {
        let mid = convex_combination(&self.f, &self.g, &self.t)?;
        let fresh = [
            self.loss.evaluate(&self.f, &self.p, &self.q)?,
            self.loss.evaluate(&self.g, &self.p, &self.q)?,
            self.loss.evaluate(&mid, &self.p, &self.q)?,
        ];
        if fresh != [self.loss_f.clone(), self.loss_g.clone(), self.loss_mid.clone()] {
            return Err(Error::InternalInconsistency("certificate values differ from recomputation".into()));
        }
        if !fresh[0].is_zero() || !fresh[1].is_zero() || !fresh[2].is_positive() {
            return Err(Error::InternalInconsistency("certificate does not exhibit nonconvexity".into()));
        }
        Ok(())
    }
}

/// Evaluates `loss` on a witness: zero at both ends, positive at the midpoint.
pub fn certify_nonconvexity(loss: LossCandidate, witness: &WitnessPair) -> Result<NonconvexityCertificate> {
    if loss.kind != witness.kind {
        return Err(Error::InvalidParameter(format!(
            "{} loss cannot certify a {:?} witness",
            loss.name(),
            witness.kind
        )));
    }
    let (p, q) = (&witness.p, &witness.q);
    let loss_f = loss.evaluate(&witness.f, p, q)?;
    if !loss_f.is_zero() {
        return Err(Error::NotInConstraintSet(format!("first map has loss {loss_f}")));
    }
    let loss_g = loss.evaluate(&witness.g, p, q)?;
    if !loss_g.is_zero() {
        return Err(Error::NotInConstraintSet(format!("second map has loss {loss_g}")));
    }
    let loss_mid = loss.evaluate(&witness.midpoint()?, p, q)?;
    let cert = NonconvexityCertificate {
        loss,
        p: p.clone(),
        q: q.clone(),
        f: witness.f.clone(),
        g: witness.g.clone(),
        t: witness.t.clone(),
        loss_f,
        loss_g,
        loss_mid,
    };
    cert.verify()?;
    Ok(cert)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScanPoint {
    pub t: Rational,
    pub loss: Rational,
    /// `(1-t) L(f) + t L(g)`.
    pub chord: Rational,
}

impl ScanPoint {
    /// Whether the loss lies strictly above the chord here.
    pub fn violates_chord(&self) -> bool {
        self.loss > self.chord
    }
}

/// Loss values along `(1-t) f + t g` at `t = k / grid_size`, `k = 0..=grid_size`.
pub fn segment_scan(
    loss: LossCandidate,
    f: &FiniteMap,
    g: &FiniteMap,
    p: &DiscreteMeasure,
    q: &DiscreteMeasure,
    grid_size: u32,
) -> Result<Vec<ScanPoint>> {
    if grid_size == 0 {
        return Err(Error::InvalidParameter("grid size must be positive".into()));
    }
    if !f.domain().eq(g.domain()) {
        return Err(Error::DomainMismatch("the two maps are defined on different points".into()));
    }
    let ends = (loss.evaluate(f, p, q)?, loss.evaluate(g, p, q)?);
    (0..=grid_size)
        .into_par_iter()
        .map(|k| {
            let t = Rational::new(k as i64, grid_size as i64);
            let h = convex_combination(f, g, &t)?;
            let value = loss.evaluate(&h, p, q)?;
            let chord = (Rational::one() - &t) * &ends.0 + &t * &ends.1;
            Ok(ScanPoint { t, loss: value, chord })
        })
        .collect()
}

/// CSV with header `t,loss`; decimals by default, `p/q` when `rational`.
pub fn scan_csv(points: &[ScanPoint], rational: bool) -> String {
    let render = |x: &Rational| if rational { x.to_string() } else { x.to_decimal_string(12) };
    let mut out = String::from("t,loss\n");
    for pt in points {
        out.push_str(&format!("{},{}\n", render(&pt.t), render(&pt.loss)));
    }
    out
}

/// `Cov(f(X,S), S)` for `S ~ Bernoulli(prior)`, `X | S=0 ~ P`, `X | S=1 ~ Q`.
pub fn covariance_penalty(
    f: &FiniteMap,
    p: &DiscreteMeasure,
    q: &DiscreteMeasure,
    prior: &Rational,
) -> Result<Rational> {
    if f.codomain_dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: f.codomain_dim() });
    }
    if !prior.is_positive() || *prior >= Rational::one() {
        return Err(Error::OutOfDomain(format!("group prior {prior} must lie strictly between 0 and 1")));
    }
    let ep = p.integrate(f)?;
    let eq = q.integrate(f)?;
    let rest = Rational::one() - prior;
    let e_fs = prior * &eq;
    let e_f = &rest * &ep + prior * &eq;
    Ok(e_fs - e_f * prior)
}

/// The coin construction: `P` is the law of two independent fair coins,
/// `Q` the law of one coin repeated, `f = x₁` and `g = −x₂`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearEqualizerDemo {
    pub witness: WitnessPair,
    pub certificate: NonconvexityCertificate,
}

pub fn linear_equalizer_demo() -> Result<LinearEqualizerDemo> {
    let bit = |b: i64| Rational::integer(b);
    let pt = |a: i64, b: i64| Point::new(format!("({a},{b})"), vec![bit(a), bit(b)]);
    let quarter = Rational::new(1, 4);
    let p = DiscreteMeasure::new(
        2,
        [(pt(0, 0), quarter.clone()), (pt(0, 1), quarter.clone()), (pt(1, 0), quarter.clone()), (pt(1, 1), quarter)],
    )?;
    let q = DiscreteMeasure::new(2, [(pt(0, 0), Rational::half()), (pt(1, 1), Rational::half())])?;
    let mut f = FiniteMap::new(1);
    let mut g = FiniteMap::new(1);
    for point in p.support() {
        f.insert(point.clone(), vec![point.coords()[0].clone()])?;
        g.insert(point.clone(), vec![-point.coords()[1].clone()])?;
    }
    let witness = WitnessPair::new(ConstraintKind::Equalizer, &p, &q, f, g)?;
    let certificate = certify_nonconvexity(LossCandidate::new(Distance::Tv, ConstraintKind::Equalizer), &witness)?;
    Ok(LinearEqualizerDemo { witness, certificate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equalizer::analyze_equalizers;
    use crate::rational::q;
    use crate::transport::{classify_transport, enumerate_transport_maps};

    fn pt(x: Rational) -> Point {
        Point::scalar(x)
    }

    fn crossing() -> WitnessPair {
        let p = DiscreteMeasure::on_line("x", 0, &[q(1, 2), q(1, 2)]).unwrap();
        let q_ = DiscreteMeasure::on_line("y", 2, &[q(1, 2), q(1, 2)]).unwrap();
        analyze_equalizers(&p, &q_, 20).unwrap().verdict.witness().unwrap().clone()
    }

    #[test]
    fn tv_examples() {
        let d0 = DiscreteMeasure::dirac(pt(q(0, 1)));
        let d1 = DiscreteMeasure::dirac(pt(q(1, 1)));
        assert_eq!(tv_distance(&d0, &d0).unwrap(), q(0, 1));
        assert_eq!(tv_distance(&d0, &d1).unwrap(), q(1, 1));
        let two = DiscreteMeasure::uniform(1, vec![pt(q(0, 1)), pt(q(1, 1))]).unwrap();
        let half = DiscreteMeasure::dirac(pt(q(1, 2)));
        assert_eq!(tv_distance(&two, &half).unwrap(), q(1, 1));
        let plane = DiscreteMeasure::dirac(Point::anonymous(vec![q(0, 1), q(0, 1)]));
        assert!(matches!(tv_distance(&d0, &plane), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn w1_examples() {
        let d0 = DiscreteMeasure::dirac(pt(q(0, 1)));
        let d1 = DiscreteMeasure::dirac(pt(q(1, 1)));
        assert_eq!(w1_line(&d0, &d0).unwrap(), q(0, 1));
        assert_eq!(w1_line(&d0, &d1).unwrap(), q(1, 1));
        let two = DiscreteMeasure::uniform(1, vec![pt(q(0, 1)), pt(q(1, 1))]).unwrap();
        let half = DiscreteMeasure::dirac(pt(q(1, 2)));
        assert_eq!(w1_line(&two, &half).unwrap(), q(1, 2));
        assert_eq!(w1_line(&half, &two).unwrap(), q(1, 2));
        let plane = DiscreteMeasure::dirac(Point::anonymous(vec![q(0, 1), q(0, 1)]));
        assert!(matches!(w1_line(&plane, &plane), Err(Error::DimensionMismatch { expected: 1, found: 2 })));
    }

    #[test]
    fn equalizer_certificates() {
        let w = crossing();
        let tv = certify_nonconvexity(LossCandidate::new(Distance::Tv, ConstraintKind::Equalizer), &w).unwrap();
        assert_eq!((tv.loss_f.clone(), tv.loss_g.clone(), tv.loss_mid.clone()), (q(0, 1), q(0, 1), q(1, 1)));
        let w1 = certify_nonconvexity(LossCandidate::new(Distance::W1Line, ConstraintKind::Equalizer), &w).unwrap();
        assert_eq!(w1.loss_mid, q(1, 2));
        let wrong = LossCandidate::new(Distance::Tv, ConstraintKind::Transport);
        assert!(matches!(certify_nonconvexity(wrong, &w), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn transport_certificate() {
        let p = DiscreteMeasure::on_line("x", 0, &[q(1, 2), q(1, 2)]).unwrap();
        let q_ = DiscreteMeasure::on_line("y", 5, &[q(1, 2), q(1, 2)]).unwrap();
        let r = classify_transport(&p, &q_, 100).unwrap();
        let cert = certify_nonconvexity(
            LossCandidate::new(Distance::Tv, ConstraintKind::Transport),
            r.verdict.witness().unwrap(),
        )
        .unwrap();
        assert_eq!(cert.loss_mid, q(1, 1));
    }

    #[test]
    fn non_member_is_rejected() {
        let mut w = crossing();
        let shifted = FiniteMap::identity(w.f.domain().cloned().collect::<Vec<_>>().iter()).unwrap();
        w.f = shifted;
        let loss = LossCandidate::new(Distance::Tv, ConstraintKind::Equalizer);
        assert!(matches!(certify_nonconvexity(loss, &w), Err(Error::NotInConstraintSet(_))));
    }

    #[test]
    fn scan_of_crossing_witness() {
        let w = crossing();
        let loss = LossCandidate::new(Distance::Tv, ConstraintKind::Equalizer);
        let pts = segment_scan(loss, &w.f, &w.g, &w.p, &w.q, 4).unwrap();
        let values: Vec<Rational> = pts.iter().map(|s| s.loss.clone()).collect();
        assert_eq!(values, vec![q(0, 1), q(1, 1), q(1, 1), q(1, 1), q(0, 1)]);
        assert_eq!(pts.iter().filter(|s| s.violates_chord()).count(), 3);
        let csv = scan_csv(&pts, false);
        assert_eq!(csv, "t,loss\n0,0\n0.25,1\n0.5,1\n0.75,1\n1,0\n");
        assert!(scan_csv(&pts, true).contains("1/4,1\n"));
        let same = segment_scan(loss, &w.f, &w.f, &w.p, &w.q, 3).unwrap();
        assert!(same.iter().all(|s| s.loss.is_zero()));
    }

    #[test]
    fn scan_rejects_mismatched_domains() {
        let w = crossing();
        let partial = FiniteMap::constant(w.p.support(), vec![q(0, 1)]);
        let loss = LossCandidate::new(Distance::Tv, ConstraintKind::Equalizer);
        assert!(matches!(segment_scan(loss, &w.f, &partial, &w.p, &w.q, 2), Err(Error::DomainMismatch(_))));
    }

    #[test]
    fn covariance_examples() {
        let w = crossing();
        let half = Rational::half();
        let constant = FiniteMap::constant(w.f.domain(), vec![q(3, 1)]);
        assert_eq!(covariance_penalty(&constant, &w.p, &w.q, &half).unwrap(), q(0, 1));
        assert_eq!(covariance_penalty(&w.f, &w.p, &w.q, &half).unwrap(), q(0, 1));
        let mut split = FiniteMap::new(1);
        for pt in w.p.support() {
            split.insert(pt.clone(), vec![q(0, 1)]).unwrap();
        }
        for pt in w.q.support() {
            split.insert(pt.clone(), vec![q(1, 1)]).unwrap();
        }
        assert_eq!(covariance_penalty(&split, &w.p, &w.q, &half).unwrap(), q(1, 4));
        assert_eq!(covariance_penalty(&split, &w.p, &w.q, &q(1, 3)).unwrap(), q(2, 9));
        assert!(matches!(covariance_penalty(&split, &w.p, &w.q, &q(1, 1)), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn coin_demo() {
        let demo = linear_equalizer_demo().unwrap();
        let w = &demo.witness;
        let two = |a: i64, b: i64| DiscreteMeasure::uniform(1, vec![pt(q(a, 1)), pt(q(b, 1))]).unwrap();
        assert_eq!(w.f_p, two(0, 1));
        assert_eq!(w.f_q, two(0, 1));
        assert_eq!(w.g_p, two(0, -1));
        assert_eq!(w.g_q, two(0, -1));
        let mid =
            DiscreteMeasure::new(1, [(pt(q(-1, 2)), q(1, 4)), (pt(q(0, 1)), q(1, 2)), (pt(q(1, 2)), q(1, 4))]).unwrap();
        assert_eq!(w.mid_p, mid);
        assert_eq!(w.mid_q, DiscreteMeasure::dirac(pt(q(0, 1))));
        demo.certificate.verify().unwrap();
    }

    #[test]
    fn losses_vanish_exactly_on_transport_maps() {
        let p = DiscreteMeasure::on_line("x", 0, &vec![q(1, 4); 4]).unwrap();
        let q_ = DiscreteMeasure::on_line("y", 5, &vec![q(1, 2); 2]).unwrap();
        let members = enumerate_transport_maps(&p, &q_, 100).unwrap().maps;
        for m in &members {
            for d in [Distance::Tv, Distance::W1Line] {
                assert!(LossCandidate::new(d, ConstraintKind::Transport).evaluate(&m.map, &p, &q_).unwrap().is_zero());
            }
        }
    }
}
