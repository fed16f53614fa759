#![allow(dead_code)]

use pushforward::measure::{DiscreteMeasure, FiniteMap, Point};
use pushforward::Rational;
use rand::Rng;

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

pub fn line(prefix: &str, offset: i64, weights: &[Rational]) -> DiscreteMeasure {
    DiscreteMeasure::on_line(prefix, offset, weights).unwrap()
}

pub fn uniform(prefix: &str, offset: i64, n: usize) -> DiscreteMeasure {
    line(prefix, offset, &vec![q(1, n as i64); n])
}

pub fn dirac(id: &str, x: i64) -> DiscreteMeasure {
    DiscreteMeasure::dirac(Point::new(id, vec![Rational::integer(x)]))
}

/// `n` positive integer weights in `1..=max`, normalized to sum to one.
pub fn random_weights(rng: &mut impl Rng, n: usize, max: i64) -> Vec<Rational> {
    let raw: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=max)).collect();
    let total: i64 = raw.iter().sum();
    raw.iter().map(|&w| q(w, total)).collect()
}

/// A probability measure on `n` distinct integer points drawn from `lo..hi`.
pub fn random_measure(rng: &mut impl Rng, prefix: &str, n: usize, lo: i64, hi: i64) -> DiscreteMeasure {
    let mut xs: Vec<i64> = Vec::new();
    while xs.len() < n {
        let x = rng.gen_range(lo..hi);
        if !xs.contains(&x) {
            xs.push(x);
        }
    }
    let w = random_weights(rng, n, 6);
    DiscreteMeasure::new(
        1,
        xs.iter()
            .zip(w)
            .enumerate()
            .map(|(i, (&x, w))| (Point::new(format!("{prefix}{}", i + 1), vec![Rational::integer(x)]), w)),
    )
    .unwrap()
}

/// A scalar map on `points` with values in `-span..=span`.
pub fn random_map<'a>(rng: &mut impl Rng, points: impl IntoIterator<Item = &'a Point>, span: i64) -> FiniteMap {
    let mut f = FiniteMap::new(1);
    for p in points {
        f.insert(p.clone(), vec![Rational::integer(rng.gen_range(-span..=span))]).unwrap();
    }
    f
}

/// Every map `supp(P) -> supp(Q)` checked by fibre sums, as target indices.
pub fn brute_force_transport(p: &DiscreteMeasure, q: &DiscreteMeasure) -> Vec<Vec<usize>> {
    let (n, m) = (p.len(), q.len());
    let total = (m as u64).pow(n as u32);
    let mut out = Vec::new();
    for mut code in 0..total {
        let mut t = vec![0usize; n];
        for slot in t.iter_mut().rev() {
            *slot = (code % m as u64) as usize;
            code /= m as u64;
        }
        let mut fibres = vec![Rational::zero(); m];
        for (atom, &j) in p.atoms().iter().zip(&t) {
            fibres[j] += &atom.weight;
        }
        if fibres == q.weights() {
            out.push(t);
        }
    }
    out
}

pub fn factorial(n: u64) -> u64 {
    (1..=n).product()
}
