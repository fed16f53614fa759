//! Built-in fixture suite and the decision/oracle agreement grid.

use num_bigint::BigUint;
use rayon::prelude::*;

use crate::equalizer::analyze_equalizers;
use crate::error::Result;
use crate::loss::{certify_nonconvexity, linear_equalizer_demo, Distance, LossCandidate};
use crate::measure::{DiscreteMeasure, Point};
use crate::oracle::{oracle_equalizer, oracle_transport, DEFAULT_BUDGET, DEFAULT_VALUE_COUNT};
use crate::rational::Rational;
use crate::subset_algebra::{decide_disjoint, DEFAULT_ATOM_CAP};
use crate::transport::{classify_transport, TransportCount, DEFAULT_LIMIT};
use crate::witness::ConstraintKind;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelftestRow {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl SelftestRow {
    fn from_result(name: &str, outcome: Result<(bool, String)>) -> Self {
        let (pass, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        SelftestRow { name: name.to_string(), pass, detail }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelftestReport {
    pub rows: Vec<SelftestRow>,
}

impl SelftestReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &SelftestRow> {
        self.rows.iter().filter(|r| !r.pass)
    }
}

fn line(prefix: &str, offset: i64, weights: &[Rational]) -> DiscreteMeasure {
    DiscreteMeasure::on_line(prefix, offset, weights).expect("fixture weights are valid")
}

fn uniform(prefix: &str, offset: i64, n: usize) -> DiscreteMeasure {
    line(prefix, offset, &vec![Rational::new(1, n as i64); n])
}

fn point_mass(id: &str, x: i64) -> DiscreteMeasure {
    DiscreteMeasure::dirac(Point::new(id, vec![Rational::integer(x)]))
}

/// An equalizer instance with its expected verdict label.
#[derive(Clone, Debug)]
pub struct EqualizerFixture {
    pub name: String,
    pub p: DiscreteMeasure,
    pub q: DiscreteMeasure,
    pub expected: &'static str,
}

impl EqualizerFixture {
    pub fn check(&self) -> SelftestRow {
        let outcome = analyze_equalizers(&self.p, &self.q, DEFAULT_ATOM_CAP).and_then(|r| {
            if let Some(w) = r.verdict.witness() {
                w.verify()?;
            }
            let got = r.verdict.label();
            Ok((got == self.expected, format!("expected {}, got {got}", self.expected)))
        });
        SelftestRow::from_result(&self.name, outcome)
    }
}

/// A transport instance with its expected verdict label and count.
#[derive(Clone, Debug)]
pub struct TransportFixture {
    pub name: String,
    pub p: DiscreteMeasure,
    pub q: DiscreteMeasure,
    pub expected: &'static str,
    pub count: Option<u64>,
}

impl TransportFixture {
    pub fn check(&self) -> SelftestRow {
        let outcome = classify_transport(&self.p, &self.q, DEFAULT_LIMIT).and_then(|r| {
            if let Some(w) = r.verdict.witness() {
                w.verify()?;
            }
            let got = r.verdict.label();
            let count_ok = match self.count {
                Some(c) => r.count == TransportCount::Exact(BigUint::from(c)),
                None => true,
            };
            Ok((got == self.expected && count_ok, format!("expected {}, got {got} (count {})", self.expected, r.count)))
        });
        SelftestRow::from_result(&self.name, outcome)
    }
}

pub fn equalizer_fixtures() -> Vec<EqualizerFixture> {
    let h = Rational::half();
    let third = Rational::new(1, 3);
    let two_thirds = Rational::new(2, 3);
    let fx = |name: &str, p, q, expected| EqualizerFixture { name: name.into(), p, q, expected };
    vec![
        fx(
            "equalizer: crossing halves",
            line("x", 0, &[h.clone(), h.clone()]),
            line("y", 2, &[h.clone(), h.clone()]),
            "nonconvex",
        ),
        fx(
            "equalizer: halves against thirds",
            line("x", 0, &[h.clone(), h.clone()]),
            line("y", 2, &[third.clone(), two_thirds.clone()]),
            "convex_trivial",
        ),
        fx(
            "equalizer: matching thirds",
            line("x", 0, &[third.clone(), two_thirds.clone()]),
            line("y", 2, &[third, two_thirds]),
            "convex_structured",
        ),
        fx(
            "equalizer: identical measures",
            line("x", 0, &[h.clone(), h.clone()]),
            line("x", 0, &[h.clone(), h]),
            "all_functions",
        ),
    ]
}

pub fn transport_fixtures() -> Vec<TransportFixture> {
    let fx = |name: &str, p, q, expected, count| TransportFixture { name: name.into(), p, q, expected, count };
    vec![
        fx("transport: point mass onto two atoms", point_mass("x", 0), uniform("y", 5, 2), "empty", Some(0)),
        fx("transport: point mass onto point mass", point_mass("x", 0), point_mass("y", 5), "singleton", Some(1)),
        fx("transport: uniform 2 onto 2", uniform("x", 0, 2), uniform("y", 5, 2), "nonconvex", Some(2)),
        fx("transport: uniform 3 onto 2", uniform("x", 0, 3), uniform("y", 5, 2), "empty", Some(0)),
        fx("transport: uniform 3 onto 3", uniform("x", 0, 3), uniform("y", 5, 3), "nonconvex", Some(6)),
        fx("transport: uniform 4 onto 2", uniform("x", 0, 4), uniform("y", 5, 2), "nonconvex", Some(6)),
    ]
}

/// Ordered compositions of `total` into `parts` positive integers.
pub fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in 1..=total.saturating_sub(parts - 1) {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Disjoint-support pairs with weights in `{k/6}` summing to one and at most
/// six atoms in total.
pub fn sixths_grid() -> Vec<(DiscreteMeasure, DiscreteMeasure)> {
    let to_weights = |c: &[usize]| c.iter().map(|&k| Rational::new(k as i64, 6)).collect::<Vec<_>>();
    let mut pairs = Vec::new();
    for n in 1..=5 {
        for m in 1..=(6 - n) {
            for a in compositions(6, n) {
                for b in compositions(6, m) {
                    pairs.push((line("x", 0, &to_weights(&a)), line("y", 10, &to_weights(&b))));
                }
            }
        }
    }
    pairs
}

/// Agreement of the subset-sum decision with the oracle on one pair.
pub fn grid_agreement(p: &DiscreteMeasure, q: &DiscreteMeasure) -> Result<bool> {
    let decided_convex = decide_disjoint(&p.weights(), &q.weights(), DEFAULT_ATOM_CAP)?.is_convex();
    let analysed_convex = analyze_equalizers(p, q, DEFAULT_ATOM_CAP)?.verdict.is_convex();
    let found = oracle_equalizer(p, q, DEFAULT_VALUE_COUNT, DEFAULT_BUDGET)?.found();
    Ok(decided_convex == analysed_convex && decided_convex != found)
}

fn grid_row() -> SelftestRow {
    let grid = sixths_grid();
    let outcome: Result<Vec<bool>> = grid.par_iter().map(|(p, q)| grid_agreement(p, q)).collect();
    let outcome = outcome.map(|agree| {
        let ok = agree.iter().filter(|a| **a).count();
        (ok == agree.len(), format!("{ok}/{} pairs agree", agree.len()))
    });
    SelftestRow::from_result("oracle grid: sixths, at most 6 atoms", outcome)
}

fn coprime_row() -> SelftestRow {
    let outcome = (|| -> Result<(bool, String)> {
        let mut bad = Vec::new();
        for n in 1..=8usize {
            for m in 1..=8usize {
                let convex = analyze_equalizers(&uniform("x", 0, n), &uniform("y", 20, m), DEFAULT_ATOM_CAP)?
                    .verdict
                    .is_convex();
                if convex != (num_integer::gcd(n, m) == 1) {
                    bad.push(format!("({n},{m})"));
                }
            }
        }
        Ok((
            bad.is_empty(),
            if bad.is_empty() { "64/64 sizes".into() } else { format!("mismatch at {}", bad.join(" ")) },
        ))
    })();
    SelftestRow::from_result("uniform sizes: convex iff coprime", outcome)
}

fn oracle_rows() -> Vec<SelftestRow> {
    let h = Rational::half();
    let expect = |name: &str, found: Result<bool>, want: bool| {
        SelftestRow::from_result(name, found.map(|f| (f == want, format!("counterexample found: {f}"))))
    };
    vec![
        expect(
            "oracle: crossing halves",
            oracle_equalizer(&line("x", 0, &[h.clone(), h.clone()]), &line("y", 2, &[h.clone(), h]), 3, DEFAULT_BUDGET)
                .map(|v| v.found()),
            true,
        ),
        expect(
            "oracle: matching thirds",
            oracle_equalizer(
                &line("x", 0, &[Rational::new(1, 3), Rational::new(2, 3)]),
                &line("y", 2, &[Rational::new(1, 3), Rational::new(2, 3)]),
                3,
                DEFAULT_BUDGET,
            )
            .map(|v| v.found()),
            false,
        ),
        expect(
            "oracle: transport uniform 4 onto 2",
            oracle_transport(&uniform("x", 0, 4), &uniform("y", 5, 2), DEFAULT_BUDGET, DEFAULT_LIMIT)
                .map(|v| v.found()),
            true,
        ),
        expect(
            "oracle: transport point masses",
            oracle_transport(&point_mass("x", 0), &point_mass("y", 1), DEFAULT_BUDGET, DEFAULT_LIMIT)
                .map(|v| v.found()),
            false,
        ),
    ]
}

fn loss_rows() -> Vec<SelftestRow> {
    let h = Rational::half();
    let certs = (|| -> Result<(bool, String)> {
        let r = analyze_equalizers(
            &line("x", 0, &[h.clone(), h.clone()]),
            &line("y", 2, &[h.clone(), h.clone()]),
            DEFAULT_ATOM_CAP,
        )?;
        let w = r.verdict.witness().expect("crossing halves are nonconvex");
        let tv = certify_nonconvexity(LossCandidate::new(Distance::Tv, ConstraintKind::Equalizer), w)?;
        let w1 = certify_nonconvexity(LossCandidate::new(Distance::W1Line, ConstraintKind::Equalizer), w)?;
        let t = classify_transport(&uniform("x", 0, 2), &uniform("y", 5, 2), DEFAULT_LIMIT)?;
        let tw = t.verdict.witness().expect("uniform 2 onto 2 is nonconvex");
        let tt = certify_nonconvexity(LossCandidate::new(Distance::Tv, ConstraintKind::Transport), tw)?;
        let ok = tv.loss_mid == Rational::one() && w1.loss_mid == h && tt.loss_mid == Rational::one();
        Ok((ok, format!("tv {} / w1 {} / transport tv {}", tv.loss_mid, w1.loss_mid, tt.loss_mid)))
    })();
    let coins = linear_equalizer_demo().map(|d| {
        let w = &d.witness;
        (
            w.f_p == w.f_q && w.g_p == w.g_q && w.mid_p != w.mid_q,
            format!("midpoint laws {} vs {}", w.mid_p.len(), w.mid_q.len()),
        )
    });
    vec![
        SelftestRow::from_result("loss certificates on witnesses", certs),
        SelftestRow::from_result("linear equalizers on coin pairs", coins),
    ]
}

/// Runs every fixture and the agreement grid.
pub fn run() -> SelftestReport {
    let mut rows: Vec<SelftestRow> = equalizer_fixtures().iter().map(EqualizerFixture::check).collect();
    rows.extend(transport_fixtures().iter().map(TransportFixture::check));
    rows.extend(oracle_rows());
    rows.extend(loss_rows());
    rows.push(coprime_row());
    rows.push(grid_row());
    SelftestReport { rows }
}
