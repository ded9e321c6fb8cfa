//! The acceptance suite: eleven criteria, each reduced to a PASS/FAIL line
//! with the measured quantities behind it.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::arithmetic::{rho_2q, sawtooth, RepTable};
use crate::budgets;
use crate::counting::{fast_count, volume_from_weighted_sums, Counter};
use crate::error::{Error, Result};
use crate::geometry::{ball_volume, ball_volume_quadrature, brute_force_counts_upto, Dilation};
use crate::moments::{integral_of_square, integral_of_square_quadrature, moment_report, singular_series_truncated};
use crate::resonance::{dist_exact, omega_hunt, resonance_set, CertificateStatus, OmegaOptions, DISTANCE_SLACK};
use crate::trig::{approx_error, bprocess_lhs, bprocess_normalizer, bprocess_rhs, ApproxMode, BKind, HPolicy, VaalerPoly};
use crate::Q;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct VerifyOptions {
    pub q: u32,
    pub fast: bool,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { q: 3, fast: false, seed: 20_240_601 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Clone, Debug, Serialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub name: &'static str,
    pub status: Status,
    /// Set when the failure is understood and recorded as unattainable.
    pub known_issue: Option<&'static str>,
    pub summary: String,
    pub metrics: Vec<Metric>,
}

impl CriterionReport {
    pub fn line(&self) -> String {
        let verdict = match (self.status, self.known_issue) {
            (Status::Pass, _) => "PASS".to_string(),
            (Status::Fail, Some(why)) => format!("FAIL (known: {why})"),
            (Status::Fail, None) => "FAIL".to_string(),
        };
        format!("criterion {:>2} {:<28} {verdict}: {}", self.id, self.name, self.summary)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub options: VerifyOptions,
    pub criteria: Vec<CriterionReport>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.criteria.iter().all(|c| c.status == Status::Pass)
    }

    pub fn unexpected_failures(&self) -> usize {
        self.criteria
            .iter()
            .filter(|c| c.status == Status::Fail && c.known_issue.is_none())
            .count()
    }
}

const VOLUME_ISSUE: &str = "the stated π⁴/32 is half the ball volume π⁴/16";
const RESONANCE_ISSUE: &str = "D₀ = 23 forces X to be a multiple of lcm(1..22) and beyond any feasible scan";

struct Builder {
    id: u8,
    name: &'static str,
    metrics: Vec<Metric>,
}

impl Builder {
    fn new(id: u8, name: &'static str) -> Builder {
        Builder { id, name, metrics: Vec::new() }
    }

    fn metric(&mut self, name: impl Into<String>, value: f64) -> &mut Self {
        self.metrics.push(Metric { name: name.into(), value });
        self
    }

    fn finish(self, pass: bool, summary: String, known: Option<&'static str>) -> CriterionReport {
        CriterionReport {
            id: self.id,
            name: self.name,
            status: if pass { Status::Pass } else { Status::Fail },
            known_issue: if pass { None } else { known },
            summary,
            metrics: self.metrics,
        }
    }
}

fn q_of(n: u32) -> Q {
    Q::new(n).expect("fixed q in range")
}

fn counting_oracle(opts: &VerifyOptions) -> Result<CriterionReport> {
    let mut b = Builder::new(1, "counting oracle");
    let t_max: u64 = if opts.fast { 256 } else { 1296 };
    let mut mismatches = 0u64;
    for n in 3..=5 {
        let table = RepTable::build(q_of(n), (t_max as f64).sqrt().ceil() as u64)?;
        let brute = brute_force_counts_upto(q_of(n), t_max, u64::MAX)?;
        let fast: Vec<u128> = (1..=t_max)
            .into_par_iter()
            .map(|t| fast_count(&table, Dilation::from_quartic(t)))
            .collect::<Result<_>>()?;
        let bad = (1..=t_max).filter(|&t| fast[t as usize - 1] != brute[t as usize]).count() as u64;
        b.metric(format!("mismatches_q{n}"), bad as f64);
        mismatches += bad;
    }
    let summary = format!("q∈{{3,4,5}}, x⁴∈[1,{t_max}]: {mismatches} mismatches");
    Ok(b.finish(mismatches == 0, summary, None))
}

fn divisor_formula(opts: &VerifyOptions) -> Result<CriterionReport> {
    let mut b = Builder::new(2, "divisor formula");
    let m_max: u64 = if opts.fast { 10_000 } else { 100_000 };
    let mut mismatches = 0usize;
    for n in 3..=4 {
        let table = RepTable::build(q_of(n), m_max)?;
        let r = table.r2q();
        let bad = (1..=m_max)
            .into_par_iter()
            .map(|m| rho_2q(q_of(n), m).map(|v| usize::from(v != r[m as usize])))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .sum::<usize>();
        b.metric(format!("mismatches_q{n}"), bad as f64);
        mismatches += bad;
    }
    let summary = format!("q∈{{3,4}}, m≤{m_max}: {mismatches} mismatches");
    Ok(b.finish(mismatches == 0, summary, None))
}

fn volume_triangulation(_: &VerifyOptions) -> Result<CriterionReport> {
    let mut b = Builder::new(3, "volume triangulation");
    let mut worst_quad: f64 = 0.0;
    let mut worst_assembly: f64 = 0.0;
    for n in 3..=8 {
        let v = ball_volume(q_of(n));
        let quad = ball_volume_quadrature(q_of(n))?;
        let asm = volume_from_weighted_sums(q_of(n))?;
        worst_quad = worst_quad.max((v - quad).abs() / v);
        worst_assembly = worst_assembly.max((v - asm).abs() / v);
    }
    let v3 = ball_volume(q_of(3));
    let stated = PI.powi(4) / 32.0;
    let stated_rel = (v3 - stated).abs() / stated;
    b.metric("max_rel_vs_quadrature", worst_quad)
        .metric("max_rel_vs_assembly", worst_assembly)
        .metric("vol_q3", v3)
        .metric("rel_vs_pi4_over_32", stated_rel)
        .metric("rel_vs_pi4_over_16", (v3 - PI.powi(4) / 16.0).abs() / v3);
    let pass = worst_quad <= 1e-10 && worst_assembly <= 1e-8 && stated_rel <= 1e-12;
    let summary = format!(
        "quadrature {worst_quad:.2e} (≤1e-10), assembly {worst_assembly:.2e} (≤1e-8), vol₃ vs π⁴/32 {stated_rel:.2e} (≤1e-12)"
    );
    let known = (worst_quad <= 1e-10 && worst_assembly <= 1e-8).then_some(VOLUME_ISSUE);
    Ok(b.finish(pass, summary, known))
}

fn vaaler(opts: &VerifyOptions) -> Result<CriterionReport> {
    let mut b = Builder::new(4, "Vaaler inequality");
    let samples = if opts.fast { 1_000 } else { 10_000 };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let omegas: Vec<f64> = (0..samples).map(|_| rng.gen_range(-50.0..50.0)).collect();
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for h in [3.0, 10.0, 100.0] {
        let poly = VaalerPoly::new(h)?;
        for &w in &omegas {
            let excess = (sawtooth(w) - poly.psi(w)).abs() - poly.psi_star(w) - poly.slack();
            worst = worst.max(excess);
            if excess > 1e-12 {
                violations += 1;
            }
        }
    }
    b.metric("violations", violations as f64).metric("max_excess", worst);
    let summary = format!("{samples} ω × H∈{{3,10,100}}: {violations} violations, max excess {worst:.2e}");
    Ok(b.finish(violations == 0, summary, None))
}

fn bprocess(opts: &VerifyOptions) -> Result<CriterionReport> {
    let mut b = Builder::new(5, "B-process identity");
    let q = q_of(opts.q);
    let mut worst: f64 = 0.0;
    for x in [20u128, 25, 30, 35, 40] {
        let t = x.pow(4);
        for d in 1..=5 {
            for h in 1..=10 {
                for kind in [BKind::G, BKind::GHat] {
                    let l = bprocess_lhs(q, t, d, h, kind)?;
                    let r = bprocess_rhs(q, t, d, h, kind)?;
                    worst = worst.max((l - r).norm() / bprocess_normalizer(t, d, h));
                }
            }
        }
    }
    b.metric("max_normalized_gap", worst).metric("budget", budgets::BPROCESS);
    let pass = worst <= budgets::BPROCESS && budgets::BPROCESS <= 10.0;
    let summary = format!("max |LHS−RHS|/(log2h+d+h/(dx²)) = {worst:.4} (budget {})", budgets::BPROCESS);
    Ok(b.finish(pass, summary, None))
}

fn mean_square_desk(opts: &VerifyOptions) -> Result<CriterionReport> {
    let mut b = Builder::new(6, "mean-square desk check");
    let q = q_of(opts.q);
    let grid: &[f64] = if opts.fast { &[8.0, 12.0, 16.0] } else { &[8.0, 12.0, 16.0, 24.0, 32.0] };
    let report = moment_report(q, grid, crate::moments::PREDICTION_M_MAX)?;
    for row in &report.rows {
        b.metric(format!("ratio_X{}", row.big_x), row.ratio);
    }
    let last = report.rows.last().expect("non-empty grid");
    let target = 2.0 * (2.0 * opts.q as f64 - 1.0);
    let series_gap = (report.series.value - report.series.value_d_major).abs();
    b.metric("slope", report.slope)
        .metric("series", report.series.value)
        .metric("series_dual_gap", series_gap)
        .metric("series_tail_bound", report.series.tail_bound);
    let pass = (report.slope - target).abs() <= 0.5
        && (0.4..=2.5).contains(&last.ratio)
        && series_gap <= 1e-6;
    let summary = format!(
        "slope {:.4} (target {target}±0.5), ratio at X={} {:.4} (band [0.4,2.5]), dual series gap {series_gap:.1e}",
        report.slope, last.big_x, last.ratio
    );
    Ok(b.finish(pass, summary, None))
}

fn prop31(opts: &VerifyOptions) -> Result<CriterionReport> {
    let mut b = Builder::new(7, "short-range approximation");
    let q = q_of(opts.q);
    let counter = Counter::new(q, 24.0)?;
    let mut worst = f64::NEG_INFINITY;
    for x in [16.0, 20.0, 24.0] {
        let a = approx_error(q, x, HPolicy::Default, ApproxMode::Prop31)?;
        let e = counter.error_term(Dilation::from_real(x)?)?.err;
        let ratio = a.residual_ratio(e);
        b.metric(format!("residual_ratio_x{x}"), ratio)
            .metric(format!("raw_over_scale_x{x}"), (e - a.leading).abs() / a.remainder_scale);
        worst = worst.max(ratio);
    }
    let pass = worst <= budgets::PROP31_SLACK;
    let summary = format!("worst (|𝓔−lead|−env)/(x^{{2q−2}}log²x) = {worst:.4} (budget {})", budgets::PROP31_SLACK);
    Ok(b.finish(pass, summary, None))
}

fn error_shape(opts: &VerifyOptions) -> Result<CriterionReport> {
    let mut b = Builder::new(8, "error-term shape");
    let q = q_of(opts.q);
    let counter = Counter::new(q, 6.0)?;
    let quartics: Vec<u64> = (1..=1296).collect();
    let samples = counter.scan(&quartics)?;
    let expo = 2.0 * opts.q as f64 - 2.0 / 3.0;
    let shape = samples.iter().map(|s| s.err.abs() / s.x.powf(expo)).fold(0.0, f64::max);
    let checks: Vec<(f64, f64)> = samples
        .par_iter()
        .filter_map(|s| match approx_error(q, s.x, HPolicy::Default, ApproxMode::Thm1A) {
            Ok(a) => Some(Ok((s.err.abs() / (a.leading + a.envelope), s.err.abs() / a.trivial_chain.unwrap_or(f64::NAN)))),
            Err(Error::Policy(_)) => None,
            Err(e) => Some(Err(e)),
        })
        .collect::<Result<_>>()?;
    let skipped = samples.len() - checks.len();
    let c1a = checks.iter().map(|c| c.0).fold(0.0, f64::max);
    let chain = checks.iter().map(|c| c.1).fold(0.0, f64::max);
    b.metric("max_err_over_x_pow", shape)
        .metric("thm1a_ratio", c1a)
        .metric("trivial_chain_ratio", chain)
        .metric("skipped_points", skipped as f64);
    let pass = shape.is_finite() && shape <= budgets::ERROR_SHAPE_C && c1a <= budgets::THM1A_C;
    let summary = format!(
        "max |𝓔|/x^{{2q−2/3}} = {shape:.4} (budget {}), chain ratio {c1a:.4} (budget {}) on {} points",
        budgets::ERROR_SHAPE_C,
        budgets::THM1A_C,
        checks.len()
    );
    Ok(b.finish(pass, summary, None))
}

fn resonance(opts: &VerifyOptions) -> Result<CriterionReport> {
    let mut b = Builder::new(9, "resonance certificate");
    let q = q_of(opts.q);
    let x_cap = if opts.fast { 10_000_000 } else { crate::resonance::DEFAULT_X_CAP };
    let mut all = true;
    let mut notes = Vec::new();
    for p in [4u64, 9] {
        match omega_hunt(q, p, OmegaOptions { d0: None, x_cap }) {
            Ok(cert) => {
                let set = resonance_set(p, cert.d0)?;
                let recheck = set
                    .iter()
                    .all(|r| dist_exact(r.m, r.d, cert.x) <= 1.0 / cert.d0 as f64 + DISTANCE_SLACK);
                b.metric(format!("achieved_P{p}"), cert.achieved)
                    .metric(format!("threshold_P{p}"), cert.threshold)
                    .metric(format!("X_P{p}"), cert.x as f64);
                all &= cert.status == CertificateStatus::Passed && recheck;
                notes.push(format!("P={p}: X={} achieved {:.4} vs {:.4}", cert.x, cert.achieved, cert.threshold));
            }
            Err(e) => {
                all = false;
                b.metric(format!("x_cap_P{p}"), x_cap as f64);
                notes.push(format!("P={p}: {e}"));
            }
        }
    }
    let d0 = crate::resonance::choose_d0(q)?;
    b.metric("d0", d0 as f64);
    let summary = format!("D₀={d0}; {}", notes.join("; "));
    Ok(b.finish(all, summary, Some(RESONANCE_ISSUE)))
}

fn mean_square_integrator(opts: &VerifyOptions) -> Result<CriterionReport> {
    let mut b = Builder::new(10, "mean-square integrator");
    let pairs = if opts.fast { 3 } else { 10 };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
    let draws: Vec<(u32, f64)> = (0..pairs).map(|_| (rng.gen_range(3..=5), rng.gen_range(1.5..5.0))).collect();
    let mut worst: f64 = 0.0;
    for &(n, x) in &draws {
        let counter = Counter::new(q_of(n), 2.0 * x + 1.0)?;
        let exact = integral_of_square(&counter, x, 2.0 * x)?;
        let quad = integral_of_square_quadrature(&counter, x, 2.0 * x)?;
        worst = worst.max((exact - quad).abs() / quad.abs());
    }
    b.metric("max_relative_gap", worst);
    let summary = format!("{pairs} random (q,X): max relative gap {worst:.2e} (≤1e-9)");
    Ok(b.finish(worst <= 1e-9, summary, None))
}

/// A fixed bundle of parallel computations, serialized.
pub fn determinism_probe() -> Result<String> {
    let q = q_of(3);
    let counter = Counter::new(q, 8.0)?;
    let quartics: Vec<u64> = (1..=4096).step_by(7).collect();
    let scan: Vec<f64> = counter.scan(&quartics)?.iter().map(|s| s.err).collect();
    let ms = integral_of_square(&counter, 3.0, 6.0)?;
    let series = singular_series_truncated(q, 20_000)?;
    let set = resonance_set(3, 3)?;
    let lhs = bprocess_lhs(q, 20u128.pow(4), 3, 7, BKind::GHat)?;
    let value = serde_json::json!({
        "scan": scan,
        "mean_square": ms,
        "series": [series.value, series.value_d_major],
        "resonances": set.iter().map(|r| r.value).collect::<Vec<_>>(),
        "bprocess": [lhs.re, lhs.im],
    });
    Ok(crate::cli::render_json(&value))
}

fn determinism(_: &VerifyOptions) -> Result<CriterionReport> {
    let mut b = Builder::new(11, "determinism");
    let run = |threads: usize| -> Result<String> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        pool.install(determinism_probe)
    };
    let one = run(1)?;
    let eight = run(8)?;
    let same = one == eight;
    b.metric("bytes", one.len() as f64).metric("identical", f64::from(u8::from(same)));
    let summary = format!("probe output with 1 and 8 threads: {} ({} bytes)", if same { "identical" } else { "differs" }, one.len());
    Ok(b.finish(same, summary, None))
}

type CriterionFn = fn(&VerifyOptions) -> Result<CriterionReport>;

const CRITERIA: [(u8, &str, CriterionFn); 11] = [
    (1, "counting oracle", counting_oracle),
    (2, "divisor formula", divisor_formula),
    (3, "volume triangulation", volume_triangulation),
    (4, "Vaaler inequality", vaaler),
    (5, "B-process identity", bprocess),
    (6, "mean-square desk check", mean_square_desk),
    (7, "short-range approximation", prop31),
    (8, "error-term shape", error_shape),
    (9, "resonance certificate", resonance),
    (10, "mean-square integrator", mean_square_integrator),
    (11, "determinism", determinism),
];

/// Runs one criterion; computation errors become a FAIL carrying the message.
pub fn run_criterion(id: u8, opts: &VerifyOptions) -> Option<CriterionReport> {
    let &(id, name, f) = CRITERIA.iter().find(|c| c.0 == id)?;
    Some(f(opts).unwrap_or_else(|e| CriterionReport {
        id,
        name,
        status: Status::Fail,
        known_issue: if id == 9 { Some(RESONANCE_ISSUE) } else { None },
        summary: format!("error: {e}"),
        metrics: Vec::new(),
    }))
}

/// Runs every criterion in order, calling `progress` after each.
pub fn run_all(opts: &VerifyOptions, mut progress: impl FnMut(&CriterionReport)) -> Result<VerifyReport> {
    Q::new(opts.q)?;
    let criteria = CRITERIA
        .iter()
        .map(|c| {
            let r = run_criterion(c.0, opts).expect("listed criterion");
            progress(&r);
            r
        })
        .collect();
    Ok(VerifyReport { options: *opts, criteria })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_criteria_that_should_pass() {
        let opts = VerifyOptions { fast: true, ..Default::default() };
        for id in [1, 2, 4, 10, 11] {
            let r = run_criterion(id, &opts).unwrap();
            assert_eq!(r.status, Status::Pass, "{}", r.line());
        }
    }

    #[test]
    fn volume_criterion_fails_only_on_the_stated_constant() {
        let r = run_criterion(3, &VerifyOptions::default()).unwrap();
        assert_eq!(r.status, Status::Fail);
        assert_eq!(r.known_issue, Some(VOLUME_ISSUE));
        let m = |n: &str| r.metrics.iter().find(|m| m.name == n).unwrap().value;
        assert!(m("rel_vs_pi4_over_16") < 1e-15);
        assert!(m("max_rel_vs_quadrature") <= 1e-10);
    }

    #[test]
    fn report_lines_are_labelled() {
        let r = run_criterion(4, &VerifyOptions { fast: true, ..Default::default() }).unwrap();
        assert!(r.line().contains("PASS"));
        assert!(run_criterion(12, &VerifyOptions::default()).is_none());
    }
}
