#![allow(clippy::result_large_err)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use pushforward::continuum::{
    run_demo, Construction, DemoReport, SamplingPlan, DEFAULT_CHUNKS, DEFAULT_SAMPLES, DEFAULT_SEED,
};
use pushforward::equalizer::{analyze_equalizers, EqualizerReport, EqualizerVerdict};
use pushforward::io::{
    certificate_to_value, demo_report_to_value, equalizer_report_to_value, oracle_verdict_to_value, parse_measure,
    transport_report_to_value, witness_to_value, SCHEMA,
};
use pushforward::loss::{certify_nonconvexity, scan_csv, segment_scan, Distance, LossCandidate, ScanPoint};
use pushforward::measure::{coords_label, DiscreteMeasure, FiniteMap};
use pushforward::oracle::{oracle_equalizer, oracle_transport, OracleVerdict, DEFAULT_BUDGET, DEFAULT_VALUE_COUNT};
use pushforward::selftest;
use pushforward::subset_algebra::DEFAULT_ATOM_CAP;
use pushforward::transport::{classify_transport, TransportReport, TransportVerdict, DEFAULT_LIMIT};
use pushforward::witness::{ConstraintKind, WitnessPair};
use pushforward::{Error, Rational};

/// Convexity analysis of push-forward constraint sets between finite measures.
#[derive(Parser, Debug)]
#[command(name = "pushforward", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify the transport maps from P to Q.
    Transport {
        #[command(flatten)]
        pair: Pair,
        /// Stop enumerating after this many maps.
        #[arg(long, default_value_t = DEFAULT_LIMIT)]
        limit: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Decide convexity of the maps equalizing P and Q.
    Equalizer {
        #[command(flatten)]
        pair: Pair,
        /// Largest residual support size for subset-sum enumeration.
        #[arg(long, default_value_t = DEFAULT_ATOM_CAP)]
        cap: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Brute-force counterexample search over a small function family.
    Oracle {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, value_enum, default_value_t = Kind::Equalizer)]
        kind: Kind,
        /// Largest number of candidate maps to scan.
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u128,
        /// Size of the value set {4^0, ..., 4^(k-1)} for equalizer search.
        #[arg(long, default_value_t = DEFAULT_VALUE_COUNT)]
        values: u32,
        /// Largest number of transport maps to keep.
        #[arg(long, default_value_t = DEFAULT_LIMIT)]
        limit: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Print a midpoint witness and loss certificates for a nonconvex set.
    Witness {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, value_enum, default_value_t = Kind::Equalizer)]
        kind: Kind,
        #[command(flatten)]
        search: Search,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Loss values along the segment between the two witness maps.
    Scan {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, value_enum, default_value_t = Kind::Equalizer)]
        kind: Kind,
        #[arg(long, value_enum, default_value_t = LossName::Tv)]
        loss: LossName,
        /// Number of grid steps between t = 0 and t = 1.
        #[arg(long, default_value_t = 10)]
        grid: u32,
        /// Print exact fractions instead of decimals.
        #[arg(long)]
        rational: bool,
        #[command(flatten)]
        search: Search,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Seeded Monte Carlo constructions on the real line.
    Demo {
        #[arg(long, value_enum)]
        construction: ConstructionName,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_CHUNKS)]
        chunks: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Run the built-in fixture suite and the oracle agreement grid.
    Selftest {
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
    },
}

#[derive(Args, Debug)]
struct Pair {
    /// Measure P as JSON.
    p: PathBuf,
    /// Measure Q as JSON.
    q: PathBuf,
}

#[derive(Args, Debug)]
struct Search {
    #[arg(long, default_value_t = DEFAULT_LIMIT)]
    limit: usize,
    #[arg(long, default_value_t = DEFAULT_ATOM_CAP)]
    cap: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Human,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Equalizer,
    Transport,
}

impl From<Kind> for ConstraintKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Equalizer => ConstraintKind::Equalizer,
            Kind::Transport => ConstraintKind::Transport,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LossName {
    Tv,
    W1,
}

impl From<LossName> for Distance {
    fn from(l: LossName) -> Self {
        match l {
            LossName::Tv => Distance::Tv,
            LossName::W1 => Distance::W1Line,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ConstructionName {
    Xi,
    InverseCdf,
    Family,
    Monotone,
    AcWitness,
}

impl From<ConstructionName> for Construction {
    fn from(c: ConstructionName) -> Self {
        match c {
            ConstructionName::Xi => Construction::Xi,
            ConstructionName::InverseCdf => Construction::InverseCdf,
            ConstructionName::Family => Construction::Family,
            ConstructionName::Monotone => Construction::Monotone,
            ConstructionName::AcWitness => Construction::AcWitness,
        }
    }
}

/// Failures mapped to exit codes.
enum Failure {
    Input(String),
    Budget(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_budget_error() {
            Failure::Budget(e.to_string())
        } else if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Other(e.to_string())
        }
    }
}

fn read_measure(path: &Path) -> Result<DiscreteMeasure, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    parse_measure(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn read_pair(pair: &Pair) -> Result<(DiscreteMeasure, DiscreteMeasure), Failure> {
    Ok((read_measure(&pair.p)?, read_measure(&pair.q)?))
}

fn unsupported(format: Format, allowed: &[Format]) -> Result<(), Failure> {
    if allowed.contains(&format) {
        Ok(())
    } else {
        Err(Failure::Input(format!("output format {format:?} is not available for this command").to_lowercase()))
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_default();
    s.push('\n');
    s
}

fn map_line(f: &FiniteMap) -> String {
    f.entries()
        .map(|(p, v)| {
            let value = match v {
                [x] => x.to_string(),
                _ => format!("({})", v.iter().map(Rational::to_string).collect::<Vec<_>>().join(",")),
            };
            format!("{}->{value}", p.id())
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn law_line(mu: &DiscreteMeasure) -> String {
    mu.atoms().iter().map(|a| format!("{}:{}", coords_label(a.point.coords()), a.weight)).collect::<Vec<_>>().join(" ")
}

fn human_witness(out: &mut String, w: &WitnessPair) {
    let _ = writeln!(out, "witness.t: {}", w.t);
    let _ = writeln!(out, "witness.f: {}", map_line(&w.f));
    let _ = writeln!(out, "witness.g: {}", map_line(&w.g));
    for (name, mu) in [
        ("f_push_p", &w.f_p),
        ("f_push_q", &w.f_q),
        ("g_push_p", &w.g_p),
        ("g_push_q", &w.g_q),
        ("mid_push_p", &w.mid_p),
        ("mid_push_q", &w.mid_q),
    ] {
        let _ = writeln!(out, "witness.{name}: {}", law_line(mu));
    }
}

fn human_equalizer(r: &EqualizerReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "analysis: equalizer");
    let _ = writeln!(out, "verdict: {}", r.verdict.label());
    let _ = writeln!(out, "decided_by: {}", r.decided_by.as_str());
    let _ = writeln!(out, "gamma: {}", r.reduction.gamma);
    match &r.verdict {
        EqualizerVerdict::AllFunctions => {}
        EqualizerVerdict::ConvexTrivial { constant_on } => {
            let ids: Vec<&str> = constant_on.iter().map(|p| p.id()).collect();
            let _ = writeln!(out, "constant_on: {}", ids.join(" "));
        }
        EqualizerVerdict::ConvexStructured { structure, .. } => {
            for b in &structure.blocks {
                let p: Vec<&str> = b.p_points.iter().map(|x| x.id()).collect();
                let q: Vec<&str> = b.q_points.iter().map(|x| x.id()).collect();
                let _ = writeln!(out, "block: {{{}}} <-> {{{}}} mass {}", p.join(","), q.join(","), b.gamma);
            }
        }
        EqualizerVerdict::Nonconvex { violation, witness } => {
            let _ = writeln!(out, "violation: {violation}");
            human_witness(&mut out, witness);
        }
    }
    out
}

fn human_transport(r: &TransportReport, p: &DiscreteMeasure, q: &DiscreteMeasure) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "analysis: transport");
    let _ = writeln!(out, "verdict: {}", r.verdict.label());
    let _ = writeln!(out, "decided_by: {}", r.decided_by.as_str());
    let _ = writeln!(out, "count: {}", r.count);
    match &r.verdict {
        TransportVerdict::Empty => {}
        TransportVerdict::Singleton(m) => {
            let pairs: Vec<String> = m.id_pairs(p, q).iter().map(|(x, y)| format!("{x}->{y}")).collect();
            let _ = writeln!(out, "map: {}", pairs.join(" "));
        }
        TransportVerdict::Nonconvex(w) => human_witness(&mut out, w),
    }
    out
}

fn human_oracle(v: &OracleVerdict, kind: ConstraintKind) -> String {
    let mut out = String::new();
    let kind = match kind {
        ConstraintKind::Equalizer => "equalizer",
        ConstraintKind::Transport => "transport",
    };
    let _ = writeln!(out, "analysis: oracle_{kind}");
    let _ = writeln!(out, "verdict: {}", v.label());
    match v {
        OracleVerdict::CounterexampleFound(w) => human_witness(&mut out, w),
        OracleVerdict::NoCounterexampleInFamily { family, members, pairs_checked } => {
            let _ = writeln!(out, "family: {family}");
            let _ = writeln!(out, "members: {members}");
            let _ = writeln!(out, "pairs_checked: {pairs_checked}");
        }
    }
    out
}

fn human_demo(r: &DemoReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "construction: {}", r.construction);
    let _ = writeln!(out, "n: {}  seed: {}  chunks: {}", r.n, r.seed, r.chunks);
    for c in &r.checks {
        let _ = writeln!(
            out,
            "{} {}: {:?} = {:.6} (threshold {:.6})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.statistic,
            c.value,
            c.threshold
        );
    }
    let _ = writeln!(out, "pass: {}", r.pass);
    out
}

/// The witness for `kind`, or `None` when the constraint set is convex.
fn find_witness(
    p: &DiscreteMeasure,
    q: &DiscreteMeasure,
    kind: ConstraintKind,
    search: &Search,
) -> Result<(String, Option<WitnessPair>), Failure> {
    Ok(match kind {
        ConstraintKind::Equalizer => {
            let r = analyze_equalizers(p, q, search.cap)?;
            (r.verdict.label().to_string(), r.verdict.witness().cloned())
        }
        ConstraintKind::Transport => {
            let r = classify_transport(p, q, search.limit)?;
            (r.verdict.label().to_string(), r.verdict.witness().cloned())
        }
    })
}

fn scan_json(points: &[ScanPoint], loss: &LossCandidate, rational: bool) -> Value {
    let render = |x: &Rational| if rational { x.to_string() } else { x.to_decimal_string(12) };
    json!({
        "schema": SCHEMA,
        "analysis": "scan",
        "loss": loss.name(),
        "points": points.iter().map(|s| json!({
            "t": render(&s.t),
            "loss": render(&s.loss),
            "chord": render(&s.chord),
            "violates_chord": s.violates_chord(),
        })).collect::<Vec<_>>(),
    })
}

fn execute(command: Command) -> Result<(String, bool), Failure> {
    match command {
        Command::Equalizer { pair, cap, format } => {
            unsupported(format, &[Format::Json, Format::Human])?;
            let (p, q) = read_pair(&pair)?;
            let r = analyze_equalizers(&p, &q, cap)?;
            Ok((
                if format == Format::Json { pretty(&equalizer_report_to_value(&r)) } else { human_equalizer(&r) },
                true,
            ))
        }
        Command::Transport { pair, limit, format } => {
            unsupported(format, &[Format::Json, Format::Human])?;
            let (p, q) = read_pair(&pair)?;
            let r = classify_transport(&p, &q, limit)?;
            Ok((
                if format == Format::Json {
                    pretty(&transport_report_to_value(&r, &p, &q, 100))
                } else {
                    human_transport(&r, &p, &q)
                },
                true,
            ))
        }
        Command::Oracle { pair, kind, budget, values, limit, format } => {
            unsupported(format, &[Format::Json, Format::Human])?;
            let (p, q) = read_pair(&pair)?;
            let kind = ConstraintKind::from(kind);
            let v = match kind {
                ConstraintKind::Equalizer => oracle_equalizer(&p, &q, values, budget)?,
                ConstraintKind::Transport => oracle_transport(&p, &q, budget, limit)?,
            };
            Ok((
                if format == Format::Json {
                    pretty(&oracle_verdict_to_value(&v, kind))
                } else {
                    human_oracle(&v, kind)
                },
                true,
            ))
        }
        Command::Witness { pair, kind, search, format } => {
            unsupported(format, &[Format::Json, Format::Human])?;
            let (p, q) = read_pair(&pair)?;
            let kind = ConstraintKind::from(kind);
            let (verdict, witness) = find_witness(&p, &q, kind, &search)?;
            let certificates = match &witness {
                Some(w) => {
                    let distances: &[Distance] = if p.dimension() == 1 && q.dimension() == 1 {
                        &[Distance::Tv, Distance::W1Line]
                    } else {
                        &[Distance::Tv]
                    };
                    distances
                        .iter()
                        .map(|d| certify_nonconvexity(LossCandidate::new(*d, kind), w))
                        .collect::<Result<Vec<_>, _>>()?
                }
                None => Vec::new(),
            };
            if format == Format::Json {
                let mut v = json!({ "schema": SCHEMA, "analysis": "witness", "verdict": verdict });
                if let (Some(w), Value::Object(obj)) = (&witness, &mut v) {
                    obj.insert("witness".into(), witness_to_value(w));
                    obj.insert(
                        "certificates".into(),
                        Value::Array(certificates.iter().map(certificate_to_value).collect()),
                    );
                }
                Ok((pretty(&v), true))
            } else {
                let mut out = format!("analysis: witness\nverdict: {verdict}\n");
                match &witness {
                    Some(w) => {
                        human_witness(&mut out, w);
                        for c in &certificates {
                            let _ = writeln!(
                                out,
                                "certificate.{}: L(f)={} L(g)={} L(mid)={}",
                                c.loss.name(),
                                c.loss_f,
                                c.loss_g,
                                c.loss_mid
                            );
                        }
                    }
                    None => out.push_str("witness: none (the constraint set is convex)\n"),
                }
                Ok((out, true))
            }
        }
        Command::Scan { pair, kind, loss, grid, rational, search, format } => {
            unsupported(format, &[Format::Csv, Format::Json])?;
            let (p, q) = read_pair(&pair)?;
            let kind = ConstraintKind::from(kind);
            let loss = LossCandidate::new(loss.into(), kind);
            let (verdict, witness) = find_witness(&p, &q, kind, &search)?;
            let Some(w) = witness else {
                return Err(Failure::Input(format!("verdict is {verdict}: there is no witness segment to scan")));
            };
            let points = segment_scan(loss, &w.f, &w.g, &p, &q, grid)?;
            let violations = points.iter().filter(|s| s.violates_chord()).count();
            if violations > 0 {
                eprintln!("chord inequality violated at {violations} of {} grid points", points.len());
            }
            Ok((
                if format == Format::Csv {
                    scan_csv(&points, rational)
                } else {
                    pretty(&scan_json(&points, &loss, rational))
                },
                true,
            ))
        }
        Command::Demo { construction, n, seed, chunks, format } => {
            unsupported(format, &[Format::Json, Format::Human])?;
            let report = run_demo(construction.into(), &SamplingPlan { n, seed, chunks })?;
            if !report.pass {
                eprintln!("some Monte Carlo checks exceeded their thresholds");
            }
            Ok((
                if format == Format::Json { pretty(&demo_report_to_value(&report)) } else { human_demo(&report) },
                true,
            ))
        }
        Command::Selftest { format } => {
            unsupported(format, &[Format::Json, Format::Human])?;
            let report = selftest::run();
            let text = if format == Format::Json {
                pretty(&json!({
                    "schema": SCHEMA,
                    "analysis": "selftest",
                    "pass": report.pass(),
                    "rows": report.rows.iter().map(|r| json!({"name": r.name, "pass": r.pass, "detail": r.detail})).collect::<Vec<_>>(),
                }))
            } else {
                let mut out = String::new();
                for r in &report.rows {
                    let _ = writeln!(out, "{} {} ({})", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail);
                }
                let _ = writeln!(
                    out,
                    "{}/{} checks passed",
                    report.rows.iter().filter(|r| r.pass).count(),
                    report.rows.len()
                );
                out
            };
            Ok((text, report.pass()))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok((text, ok)) => {
            print!("{text}");
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Budget(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
