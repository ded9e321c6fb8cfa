//! Command-line front end. Every run writes one document: a header with the
//! schema version, the run configuration and the frozen-constant registry,
//! then the result as JSON or as CSV under `#` comment lines.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Number, Value};

use crate::arithmetic::sawtooth;
use crate::budgets;
use crate::counting::Counter;
use crate::error::{Error, Result};
use crate::geometry::Dilation;
use crate::moments::{moment_report, singular_series, singular_series_truncated, PREDICTION_M_MAX};
use crate::resonance::{omega_hunt, OmegaOptions, DEFAULT_X_CAP};
use crate::trig::{approx_error, bprocess_lhs, bprocess_normalizer, bprocess_rhs, ApproxMode, BKind, HPolicy, VaalerPoly};
use crate::verify::{run_all, Status, VerifyOptions};
use crate::Q;

pub const SCHEMA: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "ckcount", version, about = "Lattice points in Heisenberg dilates of the Cygan–Korányi ball")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "CKCOUNT_THREADS")]
    threads: Option<usize>,
    /// Output file, written atomically; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Seed for sampled checks.
    #[arg(long, global = true, default_value_t = 20_240_601)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact count, main term and error at one dilation.
    Count(CountArgs),
    /// Error terms over a range of x⁴.
    Scan(ScanArgs),
    /// Exact mean squares over [X, 2X] against the predicted constant.
    MeanSquare(MeanSquareArgs),
    /// The singular series of the mean-square constant.
    Series(SeriesArgs),
    /// An approximate expression for the error term at one point.
    Approx(ApproxArgs),
    /// Vaaler's polynomial against the sawtooth.
    Vaaler(VaalerArgs),
    /// Both sides of a B-process identity.
    Bprocess(BprocessArgs),
    /// The resonance lower-bound certificate.
    Omega(OmegaArgs),
    /// Runs the acceptance suite.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Serialize)]
struct CountArgs {
    #[arg(long, default_value_t = 3)]
    q: u32,
    /// The dilation x.
    #[arg(long, conflicts_with = "x4", required_unless_present = "x4")]
    x: Option<f64>,
    /// x⁴, as an exact integer.
    #[arg(long)]
    x4: Option<u64>,
}

#[derive(Args, Debug, Serialize)]
struct ScanArgs {
    #[arg(long, default_value_t = 3)]
    q: u32,
    #[arg(long, default_value_t = 1)]
    x4_min: u64,
    #[arg(long)]
    x4_max: u64,
    #[arg(long, default_value_t = 1)]
    step: u64,
}

#[derive(Args, Debug, Serialize)]
struct MeanSquareArgs {
    #[arg(long, default_value_t = 3)]
    q: u32,
    /// Ascending X values, comma separated.
    #[arg(long = "x-grid", value_delimiter = ',', required = true)]
    x_grid: Vec<f64>,
    /// Truncation of the singular series used for the prediction.
    #[arg(long, default_value_t = PREDICTION_M_MAX)]
    series_m_max: u64,
}

#[derive(Args, Debug, Serialize)]
struct SeriesArgs {
    #[arg(long, default_value_t = 3)]
    q: u32,
    /// Target for the rigorous tail bound.
    #[arg(long, conflicts_with = "m_max")]
    tol: Option<f64>,
    #[arg(long)]
    m_max: Option<u64>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Prop31,
    Thm1a,
    Prop32,
}

#[derive(Args, Debug, Serialize)]
struct ApproxArgs {
    #[arg(long, default_value_t = 3)]
    q: u32,
    #[arg(long)]
    x: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Prop31)]
    mode: ModeArg,
    /// Fixed H instead of the mode's default.
    #[arg(long)]
    h: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
struct VaalerArgs {
    #[arg(long)]
    h: f64,
    /// Points ω, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "samples")]
    omega: Vec<f64>,
    /// Number of seeded random points in [−50, 50).
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum KindArg {
    G,
    Ghat,
    GhatChi,
}

#[derive(Args, Debug, Serialize)]
struct BprocessArgs {
    #[arg(long, default_value_t = 3)]
    q: u32,
    /// x⁴ as an exact integer.
    #[arg(long)]
    x4: u128,
    #[arg(long)]
    d: u64,
    #[arg(long)]
    h: u64,
    #[arg(long, value_enum, default_value_t = KindArg::G)]
    kind: KindArg,
}

#[derive(Args, Debug, Serialize)]
struct OmegaArgs {
    #[arg(long, default_value_t = 3)]
    q: u32,
    #[arg(long)]
    p: u64,
    /// Override for D₀.
    #[arg(long)]
    d0: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_X_CAP)]
    x_cap: u64,
}

#[derive(Args, Debug, Serialize)]
struct VerifyArgs {
    #[arg(long, default_value_t = 3)]
    q: u32,
    /// Reduced grids for a quick health check.
    #[arg(long)]
    fast: bool,
}

/// The run configuration embedded in every header. Thread count and output
/// path are left out so that equal runs produce equal bytes.
#[derive(Serialize)]
struct RunConfig<'a> {
    command: &'static str,
    format: Format,
    seed: u64,
    args: &'a Value,
}

#[derive(Clone, Debug)]
enum Cell {
    Int(i128),
    Float(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Cell {
        Cell::Float(v)
    }
}
impl From<u64> for Cell {
    fn from(v: u64) -> Cell {
        Cell::Int(v as i128)
    }
}
impl From<u32> for Cell {
    fn from(v: u32) -> Cell {
        Cell::Int(v as i128)
    }
}
impl From<u128> for Cell {
    fn from(v: u128) -> Cell {
        Cell::Int(v as i128)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Cell {
        Cell::Text(v.to_string())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Cell {
        Cell::Text(v)
    }
}

struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

struct Outcome {
    result: Value,
    table: Table,
    exit: i32,
}

/// A float with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let f = n.as_f64().expect("f64 number");
            fmt17(f).parse::<Number>().map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(normalize).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, normalize(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with every float written to 17 significant digits.
pub fn render_json(v: &Value) -> String {
    serde_json::to_string_pretty(&normalize(v.clone())).expect("JSON values serialize")
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("result types serialize")
}

fn render_csv(header: &Value, table: &Table) -> Result<String> {
    let mut out = String::new();
    for (k, v) in header.as_object().expect("header object") {
        out.push_str(&format!("# {k}: {}\n", serde_json::to_string(&normalize(v.clone())).expect("JSON")));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.columns).map_err(csv_err)?;
    for row in &table.rows {
        let rec: Vec<String> = row
            .iter()
            .map(|c| match c {
                Cell::Int(i) => i.to_string(),
                Cell::Float(f) => fmt17(*f),
                Cell::Text(s) => s.clone(),
            })
            .collect();
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    out.push_str(&String::from_utf8(bytes).expect("CSV of UTF-8 cells"));
    Ok(out)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn q_arg(q: u32) -> Result<Q> {
    Q::new(q)
}

fn ascending(v: &[f64], what: &str) -> Result<()> {
    if v.is_empty() || v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(format!("{what} must be non-empty and ascending")));
    }
    Ok(())
}

fn count(a: &CountArgs) -> Result<Outcome> {
    let q = q_arg(a.q)?;
    let dil = match (a.x, a.x4) {
        (_, Some(t)) => Dilation::from_quartic(t),
        (Some(x), None) => Dilation::from_real(x)?,
        (None, None) => return Err(Error::InvalidArgument("one of --x or --x4 is required".into())),
    };
    let counter = Counter::new(q, dil.x())?;
    let s = counter.error_term(dil)?;
    Ok(Outcome {
        result: to_value(&s),
        table: Table {
            columns: vec!["q", "x", "quartic", "count", "main", "err"],
            rows: vec![vec![s.q.into(), s.x.into(), s.quartic.into(), s.count.into(), s.main.into(), s.err.into()]],
        },
        exit: 0,
    })
}

fn scan(a: &ScanArgs) -> Result<Outcome> {
    let q = q_arg(a.q)?;
    if a.x4_min == 0 || a.x4_max < a.x4_min || a.step == 0 {
        return Err(Error::InvalidArgument("need 1 ≤ x4-min ≤ x4-max and step ≥ 1".into()));
    }
    let quartics: Vec<u64> = (a.x4_min..=a.x4_max).step_by(a.step as usize).collect();
    let counter = Counter::new(q, Dilation::from_quartic(a.x4_max).x())?;
    let samples = counter.scan(&quartics)?;
    let expo = 2.0 * a.q as f64 - 2.0 / 3.0;
    let rows = samples
        .iter()
        .map(|s| vec![s.q.into(), s.x.into(), s.count.into(), s.main.into(), s.err.into(), (s.err / s.x.powf(expo)).into()])
        .collect();
    Ok(Outcome {
        result: json!({ "samples": samples, "err_over_x_pow_exponent": expo }),
        table: Table { columns: vec!["q", "x", "count", "main", "err", "err_over_x_pow"], rows },
        exit: 0,
    })
}

fn mean_square(a: &MeanSquareArgs) -> Result<Outcome> {
    let q = q_arg(a.q)?;
    ascending(&a.x_grid, "--x-grid")?;
    let r = moment_report(q, &a.x_grid, a.series_m_max)?;
    let rows = r
        .rows
        .iter()
        .map(|row| vec![row.q.into(), row.big_x.into(), row.mean_square.into(), row.prediction.into(), row.ratio.into()])
        .collect();
    Ok(Outcome {
        result: to_value(&r),
        table: Table { columns: vec!["q", "X", "mean_square", "prediction", "ratio"], rows },
        exit: 0,
    })
}

fn series(a: &SeriesArgs) -> Result<Outcome> {
    let q = q_arg(a.q)?;
    let v = match a.tol {
        Some(tol) if tol > 0.0 => singular_series(q, tol)?,
        Some(_) => return Err(Error::InvalidArgument("--tol must be positive".into())),
        None => singular_series_truncated(q, a.m_max.unwrap_or(PREDICTION_M_MAX))?,
    };
    Ok(Outcome {
        result: to_value(&v),
        table: Table {
            columns: vec!["q", "value", "value_d_major", "m_max", "d_split", "tail_bound"],
            rows: vec![vec![
                v.q.into(),
                v.value.into(),
                v.value_d_major.into(),
                v.m_max.into(),
                v.d_split.into(),
                v.tail_bound.into(),
            ]],
        },
        exit: 0,
    })
}

fn approx(a: &ApproxArgs) -> Result<Outcome> {
    let q = q_arg(a.q)?;
    let mode = match a.mode {
        ModeArg::Prop31 => ApproxMode::Prop31,
        ModeArg::Thm1a => ApproxMode::Thm1A,
        ModeArg::Prop32 => ApproxMode::Prop32,
    };
    let policy = a.h.map_or(HPolicy::Default, HPolicy::Fixed);
    let ap = approx_error(q, a.x, policy, mode)?;
    // Δ_q lives at dilation √x; the other two modes at x itself.
    let target = if mode == ApproxMode::Prop32 {
        Counter::new(q, a.x.sqrt() + 1.0)?.normalized_delta(a.x)?
    } else {
        Counter::new(q, a.x)?.error_term(Dilation::from_real(a.x)?)?.err
    };
    let ratio = ap.residual_ratio(target);
    Ok(Outcome {
        result: json!({ "approximation": ap, "target": target, "residual_ratio": ratio }),
        table: Table {
            columns: vec!["q", "x", "h", "target", "leading", "envelope", "remainder_scale", "residual_ratio"],
            rows: vec![vec![
                a.q.into(),
                a.x.into(),
                ap.h.into(),
                target.into(),
                ap.leading.into(),
                ap.envelope.into(),
                ap.remainder_scale.into(),
                ratio.into(),
            ]],
        },
        exit: 0,
    })
}

fn vaaler(a: &VaalerArgs, seed: u64) -> Result<Outcome> {
    let poly = VaalerPoly::new(a.h)?;
    let points: Vec<f64> = match a.samples {
        Some(n) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect()
        }
        None if a.omega.is_empty() => (0..=20).map(|i| i as f64 / 20.0).collect(),
        None => a.omega.clone(),
    };
    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut violations = 0usize;
    for &w in &points {
        let (psi, ph, ps) = (sawtooth(w), poly.psi(w), poly.psi_star(w));
        let excess = (psi - ph).abs() - ps - poly.slack();
        violations += usize::from(excess > 1e-12);
        rows.push(vec![w.into(), psi.into(), ph.into(), ps.into(), poly.slack().into(), excess.into()]);
        records.push(json!({ "omega": w, "psi": psi, "psi_h": ph, "psi_star": ps, "excess": excess }));
    }
    Ok(Outcome {
        result: json!({ "h": a.h, "slack": poly.slack(), "violations": violations, "points": records }),
        table: Table { columns: vec!["omega", "psi", "psi_h", "psi_star", "slack", "excess"], rows },
        exit: 0,
    })
}

fn bprocess(a: &BprocessArgs) -> Result<Outcome> {
    let q = q_arg(a.q)?;
    let kind = match a.kind {
        KindArg::G => BKind::G,
        KindArg::Ghat => BKind::GHat,
        KindArg::GhatChi => BKind::GHatChi,
    };
    let l = bprocess_lhs(q, a.x4, a.d, a.h, kind)?;
    let r = bprocess_rhs(q, a.x4, a.d, a.h, kind)?;
    let gap = (l - r).norm();
    let norm = gap / bprocess_normalizer(a.x4, a.d, a.h);
    let kind_name = to_value(&a.kind);
    Ok(Outcome {
        result: json!({
            "lhs": [l.re, l.im], "rhs": [r.re, r.im], "gap": gap, "normalized_gap": norm,
            "budget": budgets::BPROCESS,
        }),
        table: Table {
            columns: vec!["q", "x4", "d", "h", "kind", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "gap", "normalized_gap"],
            rows: vec![vec![
                a.q.into(),
                a.x4.into(),
                a.d.into(),
                a.h.into(),
                kind_name.as_str().unwrap_or_default().into(),
                l.re.into(),
                l.im.into(),
                r.re.into(),
                r.im.into(),
                gap.into(),
                norm.into(),
            ]],
        },
        exit: 0,
    })
}

fn omega(a: &OmegaArgs) -> Result<Outcome> {
    let q = q_arg(a.q)?;
    let cert = omega_hunt(q, a.p, OmegaOptions { d0: a.d0, x_cap: a.x_cap })?;
    let status = to_value(&cert.status);
    Ok(Outcome {
        table: Table {
            columns: vec!["q", "p", "d0", "x", "threshold", "achieved", "max_distance", "witness_x", "witness_delta", "median_delta", "status"],
            rows: vec![vec![
                cert.q.into(),
                cert.p.into(),
                cert.d0.into(),
                cert.x.into(),
                cert.threshold.into(),
                cert.achieved.into(),
                cert.max_distance.into(),
                cert.witness_x.into(),
                cert.witness_delta.into(),
                cert.median_delta.into(),
                status.as_str().unwrap_or_default().into(),
            ]],
        },
        result: to_value(&cert),
        exit: 0,
    })
}

fn verify(a: &VerifyArgs, seed: u64) -> Result<Outcome> {
    let opts = VerifyOptions { q: a.q, fast: a.fast, seed };
    let report = run_all(&opts, |c| eprintln!("{}", c.line()))?;
    let rows = report
        .criteria
        .iter()
        .map(|c| {
            let status = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
            };
            vec![Cell::Int(c.id as i128), c.name.into(), status.into(), c.known_issue.unwrap_or("").into(), c.summary.clone().into()]
        })
        .collect();
    Ok(Outcome {
        exit: if report.all_passed() { 0 } else { 1 },
        result: to_value(&report),
        table: Table { columns: vec!["id", "name", "status", "known_issue", "summary"], rows },
    })
}

fn execute(cli: &Cli) -> Result<(String, i32)> {
    let (name, args, outcome) = match &cli.command {
        Command::Count(a) => ("count", to_value(a), count(a)),
        Command::Scan(a) => ("scan", to_value(a), scan(a)),
        Command::MeanSquare(a) => ("mean-square", to_value(a), mean_square(a)),
        Command::Series(a) => ("series", to_value(a), series(a)),
        Command::Approx(a) => ("approx", to_value(a), approx(a)),
        Command::Vaaler(a) => ("vaaler", to_value(a), vaaler(a, cli.seed)),
        Command::Bprocess(a) => ("bprocess", to_value(a), bprocess(a)),
        Command::Omega(a) => ("omega", to_value(a), omega(a)),
        Command::Verify(a) => ("verify", to_value(a), verify(a, cli.seed)),
    };
    let outcome = outcome?;
    let config = RunConfig { command: name, format: cli.format, seed: cli.seed, args: &args };
    let header = json!({
        "schema": SCHEMA,
        "config": config,
        "budgets": budgets::registry(),
    });
    let text = match cli.format {
        Format::Json => {
            let mut doc = header;
            doc["result"] = outcome.result;
            render_json(&doc) + "\n"
        }
        Format::Csv => render_csv(&header, &outcome.table)?,
    };
    Ok((text, outcome.exit))
}

/// Parses `args` (including the program name) and runs the command.
/// Returns 0 on success, 1 on a computation failure or a failed
/// verification, and 2 on a usage error.
pub fn run<I: IntoIterator<Item = OsString>>(args: I) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return 2;
        }
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let result = pool.install(|| execute(&cli)).and_then(|(text, exit)| {
        match &cli.out {
            Some(path) => write_atomic(path, &text)?,
            None => std::io::stdout().write_all(text.as_bytes())?,
        }
        Ok(exit)
    });
    match result {
        Ok(code) => code,
        Err(e @ Error::InvalidArgument(_)) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<OsString> {
        std::iter::once("ckcount").chain(s.split_whitespace()).map(OsString::from).collect()
    }

    fn run_to_string(s: &str) -> (i32, String) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out");
        let code = run(args(&format!("{s} --out {}", path.display())));
        (code, std::fs::read_to_string(&path).unwrap_or_default())
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt17(0.1), "1.0000000000000001e-1");
        let v = render_json(&json!({ "a": 1.5, "n": 3 }));
        assert!(v.contains("1.5000000000000000e") && v.contains("\"n\": 3"), "{v}");
    }

    #[test]
    fn count_unit_dilation() {
        let (code, text) = run_to_string("count --q 3 --x 1");
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["result"]["count"].to_string(), "15");
        assert!(v["budgets"].as_array().unwrap().len() >= 9);
        let main: f64 = v["result"]["main"].to_string().parse().unwrap();
        assert!((main - std::f64::consts::PI.powi(4) / 16.0).abs() < 1e-14);
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(args("count --q 3 --bogus 1")), 2);
        assert_eq!(run(args("frobnicate")), 2);
        assert_eq!(run(args("count --q 2 --x 1")), 2);
        assert_eq!(run(args("mean-square --x-grid 4,3")), 2);
    }

    #[test]
    fn computation_errors_exit_one() {
        assert_eq!(run(args("series --q 3 --tol 1e-9 --out /dev/null")), 1);
    }

    #[test]
    fn scan_csv_layout() {
        let (code, text) = run_to_string("scan --q 3 --x4-max 20 --format csv");
        assert_eq!(code, 0);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "# schema: 1");
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body[0], "q,x,count,main,err,err_over_x_pow");
        assert_eq!(body.len(), 21);
    }

    #[test]
    fn output_independent_of_threads() {
        let base = "mean-square --q 3 --x-grid 3,4 --series-m-max 2000";
        let (_, a) = run_to_string(&format!("{base} --threads 1"));
        let (_, b) = run_to_string(&format!("{base} --threads 4"));
        assert!(!a.is_empty());
        assert_eq!(a, b);
    }
}
