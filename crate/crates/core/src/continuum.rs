//! Floating-point constructions for one-dimensional continuous measures,
//! checked by seeded Monte Carlo.
//!
//! Samples come from ChaCha8 streams: chunk `c` of a run with seed `s` uses
//! stream `c` of the generator seeded with `s`, so results are reproducible
//! for a fixed seed and chunk count regardless of thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::rational::Rational;

pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_CHUNKS: usize = 8;

/// A distribution on the real line with closed-form CDF and quantile.
#[derive(Clone, Debug, PartialEq)]
pub enum UnivariateDistribution {
    /// Atoms sorted by location with their cumulative masses.
    DiscreteLine {
        values: Vec<f64>,
        cumulative: Vec<f64>,
    },
    Uniform {
        a: f64,
        b: f64,
    },
    Exponential {
        rate: f64,
    },
    /// Support `[a, b]` with mode `c`.
    Triangular {
        a: f64,
        c: f64,
        b: f64,
    },
}

impl UnivariateDistribution {
    pub fn discrete(measure: &DiscreteMeasure) -> Result<Self> {
        if measure.dimension() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: measure.dimension() });
        }
        measure.require_probability()?;
        let mut running = Rational::zero();
        let mut values = Vec::with_capacity(measure.len());
        let mut cumulative = Vec::with_capacity(measure.len());
        for atom in measure.atoms() {
            running += &atom.weight;
            values.push(atom.point.coords()[0].to_f64());
            cumulative.push(running.to_f64());
        }
        Ok(UnivariateDistribution::DiscreteLine { values, cumulative })
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidParameter(format!("uniform({a}, {b}) needs finite a < b")));
        }
        Ok(UnivariateDistribution::Uniform { a, b })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidParameter(format!("exponential rate {rate} must be positive")));
        }
        Ok(UnivariateDistribution::Exponential { rate })
    }

    pub fn triangular(a: f64, c: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b && a <= c && c <= b) {
            return Err(Error::InvalidParameter(format!("triangular({a}, {c}, {b}) needs a <= c <= b, a < b")));
        }
        Ok(UnivariateDistribution::Triangular { a, c, b })
    }

    pub fn is_absolutely_continuous(&self) -> bool {
        !matches!(self, UnivariateDistribution::DiscreteLine { .. })
    }

    /// Smallest closed interval carrying all the mass.
    pub fn support_interval(&self) -> (f64, f64) {
        match self {
            UnivariateDistribution::DiscreteLine { values, .. } => {
                (values.first().copied().unwrap_or(0.0), values.last().copied().unwrap_or(0.0))
            }
            UnivariateDistribution::Uniform { a, b } | UnivariateDistribution::Triangular { a, b, .. } => (*a, *b),
            UnivariateDistribution::Exponential { .. } => (0.0, f64::INFINITY),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            UnivariateDistribution::DiscreteLine { ref values, ref cumulative } => {
                let k = values.partition_point(|v| *v <= x);
                if k == 0 {
                    0.0
                } else {
                    cumulative[k - 1]
                }
            }
            UnivariateDistribution::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            UnivariateDistribution::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            UnivariateDistribution::Triangular { a, c, b } => {
                if x <= a {
                    0.0
                } else if x >= b {
                    1.0
                } else if x <= c {
                    (x - a) * (x - a) / ((b - a) * (c - a))
                } else {
                    1.0 - (b - x) * (b - x) / ((b - a) * (b - c))
                }
            }
        }
    }

    /// `inf { t : F(t) >= u }` for `0 < u < 1`.
    pub fn inverse_cdf(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::OutOfDomain(format!("quantile level {u} must lie in (0, 1)")));
        }
        Ok(match *self {
            UnivariateDistribution::DiscreteLine { ref values, ref cumulative } => {
                let k = cumulative.partition_point(|c| *c < u);
                values[k.min(values.len() - 1)]
            }
            UnivariateDistribution::Uniform { a, b } => a + u * (b - a),
            UnivariateDistribution::Exponential { rate } => -(-u).ln_1p() / rate,
            UnivariateDistribution::Triangular { a, c, b } => {
                let split = (c - a) / (b - a);
                if u <= split {
                    a + (u * (b - a) * (c - a)).sqrt()
                } else {
                    b - ((1.0 - u) * (b - a) * (b - c)).sqrt()
                }
            }
        })
    }
}

/// `u + a` on `[0, 1-a)`, `u - 1 + a` above: a rotation of the unit interval.
pub fn xi_shift(a: f64, u: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&a) {
        return Err(Error::OutOfDomain(format!("shift {a} must lie in [0, 1)")));
    }
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::OutOfDomain(format!("argument {u} must lie in [0, 1]")));
    }
    Ok(if u < 1.0 - a { u + a } else { (u - 1.0 + a).max(0.0) })
}

pub fn generalized_inverse_cdf(q: &UnivariateDistribution, u: f64) -> Result<f64> {
    q.inverse_cdf(u)
}

/// `F_Q^{-1} ∘ F_P` evaluated at `x`.
pub fn monotone_transport_1d(p: &UnivariateDistribution, q: &UnivariateDistribution, x: f64) -> Result<f64> {
    if !p.is_absolutely_continuous() {
        return Err(Error::InvalidParameter("monotone transport needs a continuous source".into()));
    }
    q.inverse_cdf(p.cdf(x))
}

/// `n` uniforms on `(0, 1)` drawn in `chunks` independent streams.
pub fn uniform_samples(seed: u64, n: usize, chunks: usize) -> Result<Vec<f64>> {
    if chunks == 0 {
        return Err(Error::InvalidParameter("chunk count must be positive".into()));
    }
    let (base, extra) = (n / chunks, n % chunks);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = base + usize::from(c < extra);
            (0..len)
                .map(|_| loop {
                    let u: f64 = rng.gen();
                    if u > 0.0 {
                        break u;
                    }
                })
                .collect()
        })
        .collect();
    Ok(parts.concat())
}

/// Kolmogorov–Smirnov distance between the empirical law of `samples` and `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

pub fn ks_threshold(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// Kolmogorov–Smirnov distance to a continuous target.
    Ks,
    /// Largest gap between observed and target atom frequencies.
    AtomFrequency,
    /// Fraction of sample points where two maps agree.
    AgreementFraction,
    /// Number of order violations on an evaluation grid.
    OrderViolations,
    /// Number of distinct values beyond the first.
    ExtraValues,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Frequency {
    pub value: f64,
    pub target: f64,
    pub observed: f64,
}

/// One seeded check; `pass` iff `value <= threshold`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub name: String,
    pub n: usize,
    pub seed: u64,
    pub chunks: usize,
    pub statistic: Statistic,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub frequencies: Vec<Frequency>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SamplingPlan {
    pub n: usize,
    pub seed: u64,
    pub chunks: usize,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan { n: DEFAULT_SAMPLES, seed: DEFAULT_SEED, chunks: DEFAULT_CHUNKS }
    }
}

impl SamplingPlan {
    fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("sample size must be positive".into()));
        }
        if self.chunks == 0 {
            return Err(Error::InvalidParameter("chunk count must be positive".into()));
        }
        Ok(())
    }

    fn report(&self, name: &str, statistic: Statistic, value: f64, threshold: f64) -> MonteCarloReport {
        MonteCarloReport {
            name: name.to_string(),
            n: self.n,
            seed: self.seed,
            chunks: self.chunks,
            statistic,
            value,
            threshold,
            pass: value <= threshold,
            frequencies: Vec::new(),
        }
    }

    fn uniforms(&self) -> Result<Vec<f64>> {
        uniform_samples(self.seed, self.n, self.chunks)
    }

    /// Compares `samples` with `target`: KS for continuous targets, atom
    /// frequencies with binomial 3σ bounds for discrete ones.
    fn fit(&self, name: &str, samples: &[f64], target: &UnivariateDistribution) -> MonteCarloReport {
        match target {
            UnivariateDistribution::DiscreteLine { values, cumulative } => {
                let weights: Vec<f64> = cumulative
                    .iter()
                    .scan(0.0, |prev, &c| {
                        let w = c - *prev;
                        *prev = c;
                        Some(w)
                    })
                    .collect();
                frequency_report(self, name, samples, values, &weights)
            }
            _ => {
                let value = ks_statistic(samples, |x| target.cdf(x));
                self.report(name, Statistic::Ks, value, ks_threshold(samples.len()))
            }
        }
    }
}

fn frequency_report(
    plan: &SamplingPlan,
    name: &str,
    samples: &[f64],
    values: &[f64],
    weights: &[f64],
) -> MonteCarloReport {
    let n = samples.len() as f64;
    let mut counts = vec![0usize; values.len()];
    let mut stray = 0usize;
    for x in samples {
        match values.iter().position(|v| v == x) {
            Some(k) => counts[k] += 1,
            None => stray += 1,
        }
    }
    let frequencies: Vec<Frequency> = values
        .iter()
        .zip(weights)
        .zip(&counts)
        .map(|((&value, &target), &c)| Frequency { value, target, observed: c as f64 / n })
        .collect();
    let value = frequencies.iter().map(|f| (f.observed - f.target).abs()).fold(stray as f64 / n, f64::max);
    let threshold = weights.iter().map(|w| 3.0 * (w * (1.0 - w) / n).sqrt()).fold(0.0, f64::max);
    let mut report = plan.report(name, Statistic::AtomFrequency, value, threshold);
    report.frequencies = frequencies;
    report
}

/// Seeded checks for one construction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DemoReport {
    pub construction: String,
    pub n: usize,
    pub seed: u64,
    pub chunks: usize,
    pub checks: Vec<MonteCarloReport>,
    pub pass: bool,
}

impl DemoReport {
    fn new(construction: &str, plan: &SamplingPlan, checks: Vec<MonteCarloReport>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        DemoReport { construction: construction.into(), n: plan.n, seed: plan.seed, chunks: plan.chunks, checks, pass }
    }

    pub fn check(&self, name: &str) -> Option<&MonteCarloReport> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// `ξ_a` pushes the uniform law on `[0, 1]` to itself.
pub fn xi_demo(a: f64, plan: &SamplingPlan) -> Result<DemoReport> {
    plan.check()?;
    let pushed = plan.uniforms()?.into_iter().map(|u| xi_shift(a, u)).collect::<Result<Vec<_>>>()?;
    let uniform = UnivariateDistribution::uniform(0.0, 1.0)?;
    Ok(DemoReport::new("xi", plan, vec![plan.fit(&format!("xi_{a}"), &pushed, &uniform)]))
}

/// Pushes uniform samples through the generalized inverse of `q`.
pub fn inverse_cdf_demo(q: &UnivariateDistribution, plan: &SamplingPlan) -> Result<DemoReport> {
    plan.check()?;
    let pushed = plan.uniforms()?.into_iter().map(|u| q.inverse_cdf(u)).collect::<Result<Vec<_>>>()?;
    Ok(DemoReport::new("inverse_cdf", plan, vec![plan.fit("inverse_cdf", &pushed, q)]))
}

/// `f_a = F_Q^† ∘ ξ_a ∘ F_P` for each shift `a`: every `f_a` pushes `P` to
/// `Q`, and any two differ on a positive fraction of the sample.
pub fn uncountable_family_demo(
    p: &UnivariateDistribution,
    q: &UnivariateDistribution,
    a_values: &[f64],
    plan: &SamplingPlan,
) -> Result<DemoReport> {
    plan.check()?;
    if !p.is_absolutely_continuous() {
        return Err(Error::InvalidParameter("the source must be continuous".into()));
    }
    for (i, a) in a_values.iter().enumerate() {
        xi_shift(*a, 0.0)?;
        if a_values[..i].contains(a) {
            return Err(Error::InvalidParameter(format!("shift {a} is listed twice")));
        }
    }
    let xs = plan.uniforms()?.into_iter().map(|u| p.inverse_cdf(u)).collect::<Result<Vec<_>>>()?;
    let images = a_values
        .iter()
        .map(|&a| {
            xs.iter()
                .map(|&x| {
                    // F_P(x) can round to 0 or 1 in floating point; such points are measure zero.
                    let u = p.cdf(x).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
                    let shifted = xi_shift(a, u)?.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
                    q.inverse_cdf(shifted)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut checks: Vec<MonteCarloReport> =
        a_values.iter().zip(&images).map(|(a, img)| plan.fit(&format!("f_{a}"), img, q)).collect();
    let n = xs.len() as f64;
    for i in 0..a_values.len() {
        for j in i + 1..a_values.len() {
            let agree = images[i].iter().zip(&images[j]).filter(|(x, y)| x == y).count() as f64 / n;
            let name = format!("agreement_f_{}_f_{}", a_values[i], a_values[j]);
            checks.push(plan.report(&name, Statistic::AgreementFraction, agree, 1.0 - 1.0 / n));
        }
    }
    Ok(DemoReport::new("family", plan, checks))
}

/// Samples of `P` pushed by `F_Q^{-1} ∘ F_P`, plus a monotonicity check on a
/// 1000-point quantile grid of `P`.
pub fn monotone_demo(
    p: &UnivariateDistribution,
    q: &UnivariateDistribution,
    plan: &SamplingPlan,
) -> Result<DemoReport> {
    plan.check()?;
    let pushed = plan
        .uniforms()?
        .into_iter()
        .map(|u| monotone_transport_1d(p, q, p.inverse_cdf(u)?))
        .collect::<Result<Vec<_>>>()?;
    let grid = (0..1000)
        .map(|i| monotone_transport_1d(p, q, p.inverse_cdf((i as f64 + 0.5) / 1000.0)?))
        .collect::<Result<Vec<_>>>()?;
    let strict = q.is_absolutely_continuous();
    let violations = grid.windows(2).filter(|w| if strict { w[1] <= w[0] } else { w[1] < w[0] }).count();
    let checks = vec![
        plan.fit("pushed_sample", &pushed, q),
        plan.report("grid_monotone", Statistic::OrderViolations, violations as f64, 0.0),
    ];
    Ok(DemoReport::new("monotone", plan, checks))
}

/// Two-valued equalizers between continuous measures on disjoint intervals:
/// `f` and `g` both push `P` and `Q` to `½δ_z + ½δ_z'`, while their midpoint
/// sends all of `Q` to `(z + z')/2` and splits `P` between `z` and `z'`.
pub fn ac_equalizer_witness_demo(
    p: &UnivariateDistribution,
    q: &UnivariateDistribution,
    z: f64,
    z_prime: f64,
    plan: &SamplingPlan,
) -> Result<DemoReport> {
    plan.check()?;
    if !(p.is_absolutely_continuous() && q.is_absolutely_continuous()) {
        return Err(Error::InvalidParameter("both measures must be continuous".into()));
    }
    if z == z_prime {
        return Err(Error::InvalidParameter("the two values must differ".into()));
    }
    let ((p_lo, p_hi), (q_lo, q_hi)) = (p.support_interval(), q.support_interval());
    if p_hi > q_lo && q_hi > p_lo {
        return Err(Error::SupportsOverlap(format!("[{p_lo}, {p_hi}] and [{q_lo}, {q_hi}]")));
    }
    let psi1 = |u: f64| if u < 0.5 { z } else { z_prime };
    let psi2 = |u: f64| if u < 0.5 { z_prime } else { z };
    let seeds = |offset: u64| SamplingPlan { seed: plan.seed.wrapping_add(offset), ..*plan };
    let xs = seeds(0).uniforms()?.into_iter().map(|u| p.inverse_cdf(u)).collect::<Result<Vec<_>>>()?;
    let ys = seeds(1).uniforms()?.into_iter().map(|u| q.inverse_cdf(u)).collect::<Result<Vec<_>>>()?;
    let f_p: Vec<f64> = xs.iter().map(|&x| psi1(p.cdf(x))).collect();
    let f_q: Vec<f64> = ys.iter().map(|&y| psi1(q.cdf(y))).collect();
    let g_p = f_p.clone();
    let g_q: Vec<f64> = ys.iter().map(|&y| psi2(q.cdf(y))).collect();
    let mid_p: Vec<f64> = f_p.iter().zip(&g_p).map(|(a, b)| (a + b) / 2.0).collect();
    let mid_q: Vec<f64> = f_q.iter().zip(&g_q).map(|(a, b)| (a + b) / 2.0).collect();
    let (lo, hi) = if z < z_prime { (z, z_prime) } else { (z_prime, z) };
    let target = [lo, hi];
    let halves = [0.5, 0.5];
    let mut distinct = mid_q.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let checks = vec![
        frequency_report(plan, "f_push_p", &f_p, &target, &halves),
        frequency_report(plan, "f_push_q", &f_q, &target, &halves),
        frequency_report(plan, "g_push_p", &g_p, &target, &halves),
        frequency_report(plan, "g_push_q", &g_q, &target, &halves),
        frequency_report(plan, "mid_push_p", &mid_p, &target, &halves),
        plan.report("mid_push_q_degenerate", Statistic::ExtraValues, distinct.len().saturating_sub(1) as f64, 0.0),
    ];
    Ok(DemoReport::new("ac_witness", plan, checks))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Construction {
    Xi,
    InverseCdf,
    Family,
    Monotone,
    AcWitness,
}

/// Runs a construction on its standard fixture.
pub fn run_demo(construction: Construction, plan: &SamplingPlan) -> Result<DemoReport> {
    let unit = UnivariateDistribution::uniform(0.0, 1.0)?;
    let atoms = |w: &[Rational]| -> Result<UnivariateDistribution> {
        UnivariateDistribution::discrete(&DiscreteMeasure::on_line("q", 0, w)?)
    };
    match construction {
        Construction::Xi => xi_demo(0.3, plan),
        Construction::InverseCdf => {
            inverse_cdf_demo(&atoms(&[Rational::new(1, 4), Rational::new(1, 4), Rational::half()])?, plan)
        }
        Construction::Family => {
            uncountable_family_demo(&unit, &atoms(&[Rational::half(), Rational::half()])?, &[0.0, 0.5], plan)
        }
        Construction::Monotone => monotone_demo(&unit, &UnivariateDistribution::exponential(1.0)?, plan),
        Construction::AcWitness => {
            ac_equalizer_witness_demo(&unit, &UnivariateDistribution::uniform(2.0, 3.0)?, 0.0, 1.0, plan)
        }
    }
}
