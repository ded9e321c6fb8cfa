//! The mean square of 𝓔_q over [X, 2X], integrated exactly piece by piece
//! between count jumps, and the constant that predicts its size.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::arithmetic::{chi, exact_sqrt, two_square_reps, sign_multiplicity};
use crate::counting::{Counter, JumpSchedule};
use crate::error::{Error, Result};
use crate::geometry::Dilation;
use crate::numeric::{compensated_sum, gcd, integrate, zeta_tail_from, CompensatedSum, Dd};
use crate::Q;

/// Keys per parallel block of the jump schedule.
const BLOCK: u128 = 1 << 16;

/// ∫_a^{a+len} (e₀ − c·((a+u)^p − a^p))² du, expanding about a so that the
/// large terms cancel before squaring; `e0` is 𝓔 at the left end.
fn piece_integral(e0: f64, c: f64, a: f64, len: f64, p: u32) -> f64 {
    if len <= 0.0 {
        return 0.0;
    }
    // P(u) = Σ_k e_k u^k, e_k = −c·C(p,k)·a^{p−k} for k ≥ 1.
    let mut coef = Vec::with_capacity(p as usize + 1);
    coef.push(e0);
    let mut binom = 1.0f64;
    for k in 1..=p {
        binom = binom * (p - k + 1) as f64 / k as f64;
        coef.push(-c * binom * a.powi((p - k) as i32));
    }
    // Scale by powers of len so the integral is Σ_{j,k} ê_j ê_k len/(j+k+1).
    let mut lk = 1.0;
    for e in coef.iter_mut() {
        *e *= lk;
        lk *= len;
    }
    let mut s = CompensatedSum::default();
    for (j, ej) in coef.iter().enumerate() {
        for (k, ek) in coef.iter().enumerate() {
            s.add(ej * ek / (j + k + 1) as f64);
        }
    }
    s.value() * len
}

/// 𝓔 at the left end of a piece, with the count and the main term in double-double.
fn error_at(counter: &Counter, count: u128, x: &Dilation) -> f64 {
    (Dd::from_u128(count) - counter.main_term(*x)).to_f64()
}

/// ∫_lo^hi 𝓔_q(x)² dx, exactly up to rounding.
pub fn integral_of_square(counter: &Counter, lo: f64, hi: f64) -> Result<f64> {
    if !(lo > 0.0 && hi >= lo) {
        return Err(Error::InvalidArgument(format!("need 0 < lo ≤ hi, got [{lo}, {hi}]")));
    }
    let q = counter.q();
    let p = 2 * q.get() + 2;
    let c = counter.volume().to_f64();
    let d_lo = Dilation::from_real(lo)?;
    let d_hi = Dilation::from_real(hi)?;
    let sched = JumpSchedule::new(counter.table(), d_lo.quartic(), d_hi.quartic())?;
    let blocks = sched.block_ranges(BLOCK);
    // Jumps per block, then a sequential sweep that knows the running count.
    let jumps: Vec<Vec<crate::counting::Jump>> =
        blocks.par_iter().map(|&(a, b)| sched.jumps_in(a, b)).collect();
    let mut count = counter.count(d_lo)?;
    // Left endpoints as (Dd position, dilation, count) tuples.
    let root4 = |k: u128| Dd::from_u128(k).sqrt().sqrt();
    let mut pieces: Vec<(Dd, Dilation, u128)> = vec![(Dd::from_f64(lo), d_lo, count)];
    for j in jumps.iter().flatten() {
        count += j.mass;
        pieces.push((root4(j.key), Dilation::from_quartic(j.key as u64), count));
    }
    let end = Dd::from_f64(hi);
    let values: Vec<f64> = (0..pieces.len())
        .into_par_iter()
        .map(|i| {
            let (a, ref dil, n) = pieces[i];
            let b = if i + 1 < pieces.len() { pieces[i + 1].0 } else { end };
            let len = (b - a).to_f64();
            piece_integral(error_at(counter, n, dil), c, a.to_f64(), len, p)
        })
        .collect();
    Ok(compensated_sum(values))
}

/// (1/X)∫_X^{2X} 𝓔_q(x)² dx.
pub fn mean_square_exact(counter: &Counter, big_x: f64) -> Result<f64> {
    Ok(integral_of_square(counter, big_x, 2.0 * big_x)? / big_x)
}

/// The same integral by adaptive Gauss–Kronrod on each interval where x⁴
/// stays between consecutive integers (so the count is constant there).
pub fn integral_of_square_quadrature(counter: &Counter, lo: f64, hi: f64) -> Result<f64> {
    let t_lo = Dilation::from_real(lo)?.quartic();
    let t_hi = Dilation::from_real(hi)?.quartic();
    let p = 2 * counter.q().get() + 2;
    let vol = counter.volume();
    let parts: Vec<Result<f64>> = (t_lo..=t_hi)
        .into_par_iter()
        .map(|t| {
            let a = if t == t_lo { lo } else { (t as f64).sqrt().sqrt() };
            let b = if t == t_hi { hi } else { ((t + 1) as f64).sqrt().sqrt() };
            if b <= a {
                return Ok(0.0);
            }
            let n = Dd::from_u128(counter.count(Dilation::from_quartic(t as u64))?);
            let f = |x: f64| {
                let e = (n - vol * Dd::from_f64(x).powi(p)).to_f64();
                e * e
            };
            Ok(integrate(f, a, b, 0.0, 1e-12, 400)?.value)
        })
        .collect();
    Ok(compensated_sum(parts.into_iter().collect::<Result<Vec<_>>>()?))
}

/// c_q = (2^{4q−1} − 1)/(4q − 1) as a reduced fraction, and γ_q.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MeanSquareConstants {
    pub c_num: u128,
    pub c_den: u128,
    pub c_q: f64,
    pub gamma_q: f64,
}

pub fn mean_square_constants(q: Q) -> MeanSquareConstants {
    let k = q.get();
    let num = (1u128 << (4 * k - 1)) - 1;
    let den = (4 * k - 1) as u128;
    let g = gcd(num, den);
    let (num, den) = (num / g, den / g);
    let c_q = (Dd::from_u128(num) / Dd::from_u128(den)).to_f64();
    // π^{q−1}/(2Γ(q)) with Γ(q) = (q−1)!
    let fact: f64 = (1..k).map(f64::from).product();
    let inner = (Dd::PI.powi(k - 1) / Dd::from_f64(2.0 * fact)).to_f64();
    MeanSquareConstants {
        c_num: num,
        c_den: den,
        c_q,
        gamma_q: c_q / 2.0 * inner * inner,
    }
}

/// A truncated singular series with its two independently computed values.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SeriesValue {
    pub q: u32,
    /// The m-major sum over m ≤ m_max and every d.
    pub value: f64,
    /// The d-major sum over the same (d,m) region.
    pub value_d_major: f64,
    pub m_max: u64,
    pub d_split: u64,
    /// Rigorous bound on the omitted terms with m > m_max.
    pub tail_bound: f64,
    pub odd_branch: bool,
}

fn radical_divisors(mut k: u64) -> Vec<(u64, i64)> {
    // Square-free divisors of k with their Möbius signs.
    let mut primes = Vec::new();
    let mut p = 2;
    while p * p <= k {
        if k.is_multiple_of(p) {
            primes.push(p);
            while k.is_multiple_of(p) {
                k /= p;
            }
        }
        p += 1;
    }
    if k > 1 {
        primes.push(k);
    }
    let mut out = vec![(1u64, 1i64)];
    for p in primes {
        let more: Vec<_> = out.iter().map(|&(e, mu)| (e * p, -mu)).collect();
        out.extend(more);
    }
    out
}

/// Σ_{d>D, (d,2k)=1} d^{−s} and Σ_{d>D, 4|d, (d,k)=1} d^{−s} via Möbius inversion.
fn coprime_tails(s: f64, big_d: u64, k: u64) -> (f64, f64) {
    let odd: f64 = radical_divisors(2 * k)
        .iter()
        .map(|&(e, mu)| mu as f64 * (e as f64).powf(-s) * zeta_tail_from(s, big_d / e))
        .sum();
    let four = if k % 2 == 1 {
        4f64.powf(-s)
            * radical_divisors(k)
                .iter()
                .map(|&(e, mu)| mu as f64 * (e as f64).powf(-s) * zeta_tail_from(s, big_d / (4 * e)))
                .sum::<f64>()
    } else {
        0.0
    };
    (odd, four)
}

fn branch_weights(d: u64, m: u64) -> (bool, bool) {
    let coprime = gcd(d as u128, m as u128) == 1;
    (d % 2 == 1 && coprime, d.is_multiple_of(4) && coprime)
}

/// r₂(m,d;q) and r_{2,χ}(m,d;q) from a list of non-negative representations.
fn weighted_pair(q: Q, m: u64, reps: &[(u64, u64)], d: u64) -> (f64, f64) {
    let sm = (m as f64).sqrt();
    let mut w = 0.0;
    let mut wc = 0.0;
    for &(a, b) in reps {
        if b % d == 0 {
            let v = sign_multiplicity(a, b) as f64 * (a as f64 / sm).powi(q.get() as i32 - 1);
            w += v;
            wc += v * chi(a) as f64;
        }
    }
    (w, wc)
}

/// 2^{2q} for the d ≡ 0 (4) branch.
fn four_branch_factor(q: Q) -> f64 {
    4f64.powi(q.get() as i32)
}

fn m_major(q: Q, m_max: u64) -> f64 {
    let s = (2 * q.get() - 3) as f64;
    let odd_q = q.is_odd();
    let f4 = four_branch_factor(q);
    let terms: Vec<f64> = (1..=m_max)
        .into_par_iter()
        .map(|m| {
            let reps = two_square_reps(m);
            if reps.is_empty() {
                return 0.0;
            }
            let m32 = (m as f64).powf(1.5);
            let root = m.isqrt();
            let mut acc = CompensatedSum::default();
            for d in 1..=root {
                let (odd, four) = branch_weights(d, m);
                if !(odd || four) {
                    continue;
                }
                let (w, wc) = weighted_pair(q, m, &reps, d);
                let ds = (d as f64).powf(s);
                if odd {
                    acc.add(w * w / (m32 * ds));
                }
                if four {
                    let v = if odd_q { wc } else { w };
                    acc.add(f4 * v * v / (m32 * ds));
                }
            }
            // d > √m: only b = 0 survives, which needs m = k².
            if let Some(k) = exact_sqrt(m) {
                let (odd, four) = coprime_tails(s, root, k);
                let w = 2.0;
                let wc = 2.0 * chi(k) as f64;
                acc.add(w * w * odd / m32);
                let v = if odd_q { wc } else { w };
                acc.add(f4 * v * v * four / m32);
            }
            acc.value()
        })
        .collect();
    compensated_sum(terms)
}

fn d_major(q: Q, m_max: u64) -> (f64, u64) {
    let s = (2 * q.get() - 3) as f64;
    let odd_q = q.is_odd();
    let f4 = four_branch_factor(q);
    let split = m_max.isqrt();
    let w_exp = q.get() as i32 - 1;
    let per_d: Vec<f64> = (1..=split)
        .into_par_iter()
        .map(|d| {
            if d % 2 == 0 && d % 4 != 0 {
                return 0.0;
            }
            // Accumulate r₂(m,d;q), r_{2,χ}(m,d;q) by walking b = dj, a ≥ 0.
            let mut w = vec![0.0f64; m_max as usize + 1];
            let mut wc = vec![0.0f64; m_max as usize + 1];
            let mut b = 0u64;
            while b * b <= m_max {
                let mut a = 0u64;
                while a * a + b * b <= m_max {
                    let m = a * a + b * b;
                    if m > 0 {
                        let v = sign_multiplicity(a, b) as f64
                            * (a as f64 / (m as f64).sqrt()).powi(w_exp);
                        w[m as usize] += v;
                        wc[m as usize] += v * chi(a) as f64;
                    }
                    a += 1;
                }
                b += d;
            }
            let ds = (d as f64).powf(s);
            let mut acc = CompensatedSum::default();
            for m in 1..=m_max {
                let (odd, four) = branch_weights(d, m);
                let m32 = (m as f64).powf(1.5);
                if odd {
                    acc.add(w[m as usize].powi(2) / (m32 * ds));
                }
                if four {
                    let v = if odd_q { wc[m as usize] } else { w[m as usize] };
                    acc.add(f4 * v * v / (m32 * ds));
                }
            }
            acc.value()
        })
        .collect();
    let mut total = compensated_sum(per_d);
    // d > split: squares only.
    let mut tail = CompensatedSum::default();
    for k in 1..=split {
        let m = k * k;
        let (odd, four) = coprime_tails(s, split, k);
        let m32 = (m as f64).powf(1.5);
        tail.add(4.0 * odd / m32);
        let v = if odd_q { 2.0 * chi(k) as f64 } else { 2.0 };
        tail.add(f4 * v * v * four / m32);
    }
    total += tail.value();
    (total, split)
}

/// τ(n) ≤ 3.5272·n^{1/3}: the product over p ≤ 7 of max_a (a+1)/p^{a/3}.
const DIVISOR_CUBE_ROOT: f64 = 2.0 * 1.4423 * 1.1696 * 1.0456;

/// Rigorous bound on Σ_{m>M} Σ_d (branch terms), via r₂(m,d;q) ≤ r₂(m) ≤ 4τ(m),
/// partial summation and Σ_{1≤m≤x} r₂(m) ≤ πx + π√(2x) + π/2.
pub fn series_tail_bound(q: Q, m_max: u64) -> f64 {
    let s = (2 * q.get() - 3) as f64;
    let zeta_s = 1.0 + zeta_tail_from(s, 1);
    let d_factor = (1.0 - 2f64.powf(-s)) * zeta_s + four_branch_factor(q) * 4f64.powf(-s) * zeta_s;
    let m = m_max.max(1) as f64;
    let c = 4.0 * DIVISOR_CUBE_ROOT;
    let sum = 7.0 * PI * m.powf(-1.0 / 6.0)
        + 1.75 * PI * 2f64.sqrt() * m.powf(-2.0 / 3.0)
        + 0.5 * PI * m.powf(-7.0 / 6.0);
    d_factor * c * sum
}

/// Largest m_max the series routine will enumerate.
pub const SERIES_M_BUDGET: u64 = 4_000_000;

/// The singular series truncated at m ≤ m_max, summed both ways.
pub fn singular_series_truncated(q: Q, m_max: u64) -> Result<SeriesValue> {
    if m_max == 0 || m_max > SERIES_M_BUDGET {
        return Err(Error::Capacity {
            what: "singular series",
            needed: m_max as u128,
            budget: SERIES_M_BUDGET as u128,
        });
    }
    let value = m_major(q, m_max);
    let (value_d_major, d_split) = d_major(q, m_max);
    Ok(SeriesValue {
        q: q.get(),
        value,
        value_d_major,
        m_max,
        d_split,
        tail_bound: series_tail_bound(q, m_max),
        odd_branch: q.is_odd(),
    })
}

/// The singular series to within `tol`, or `TolUnreachable` if the rigorous
/// tail bound cannot get there inside the enumeration budget.
pub fn singular_series(q: Q, tol: f64) -> Result<SeriesValue> {
    let mut m = 1024u64;
    while series_tail_bound(q, m) > tol {
        if m >= SERIES_M_BUDGET {
            return Err(Error::TolUnreachable {
                tol,
                achieved: series_tail_bound(q, SERIES_M_BUDGET),
            });
        }
        m = (m * 2).min(SERIES_M_BUDGET);
    }
    singular_series_truncated(q, m)
}

/// Default truncation used for predictions.
pub const PREDICTION_M_MAX: u64 = 200_000;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MomentRow {
    pub q: u32,
    pub big_x: f64,
    pub mean_square: f64,
    pub prediction: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentReport {
    pub rows: Vec<MomentRow>,
    /// Least-squares slope of log(mean square) against log X.
    pub slope: f64,
    pub series: SeriesValue,
    pub gamma_q: f64,
}

pub fn moment_report(q: Q, grid: &[f64], series_m_max: u64) -> Result<MomentReport> {
    if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) || grid[0] <= 0.0 {
        return Err(Error::InvalidArgument("X grid must be positive and ascending".into()));
    }
    let top = 2.0 * grid[grid.len() - 1];
    let counter = Counter::new(q, top)?;
    let series = singular_series_truncated(q, series_m_max)?;
    let consts = mean_square_constants(q);
    let expo = 2.0 * (2.0 * q.get() as f64 - 1.0);
    let rows = grid
        .iter()
        .map(|&x| {
            let ms = mean_square_exact(&counter, x)?;
            let prediction = consts.gamma_q * series.value * x.powf(expo);
            Ok(MomentRow {
                q: q.get(),
                big_x: x,
                mean_square: ms,
                prediction,
                ratio: ms / prediction,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let slope = log_log_slope(&rows);
    Ok(MomentReport {
        rows,
        slope,
        series,
        gamma_q: consts.gamma_q,
    })
}

fn log_log_slope(rows: &[MomentRow]) -> f64 {
    let n = rows.len() as f64;
    if rows.len() < 2 {
        return f64::NAN;
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.big_x.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean_square.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::r2_weighted;

    fn q(n: u32) -> Q {
        Q::new(n).unwrap()
    }

    #[test]
    fn empty_piece_closed_form() {
        // N = 0: ∫_X^{2X} c²x^{2p} dx.
        let (c, x, p) = (3.0f64, 1.7f64, 8u32);
        let e0 = -c * x.powi(p as i32);
        let got = piece_integral(e0, c, x, x, p);
        let want = c * c * ((2.0 * x).powi(2 * p as i32 + 1) - x.powi(2 * p as i32 + 1)) / (2 * p + 1) as f64;
        assert!((got / want - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_quadrature_at_four() {
        let counter = Counter::new(q(3), 8.0).unwrap();
        let exact = integral_of_square(&counter, 4.0, 8.0).unwrap();
        let quad = integral_of_square_quadrature(&counter, 4.0, 8.0).unwrap();
        assert!((exact / quad - 1.0).abs() < 1e-9, "{exact} vs {quad}");
    }

    #[test]
    fn additive_over_subintervals() {
        let counter = Counter::new(q(4), 6.0).unwrap();
        let whole = integral_of_square(&counter, 3.0, 6.0).unwrap();
        let parts = integral_of_square(&counter, 3.0, 4.5).unwrap()
            + integral_of_square(&counter, 4.5, 6.0).unwrap();
        assert!((whole / parts - 1.0).abs() < 1e-12);
    }

    #[test]
    fn theorem2_constant_values() {
        let c3 = mean_square_constants(q(3));
        assert_eq!((c3.c_num, c3.c_den), (2047, 11));
        let c4 = mean_square_constants(q(4));
        assert_eq!((c4.c_num, c4.c_den), (32767, 15));
        let want = 2047.0 / 22.0 * (PI * PI / 4.0).powi(2);
        assert!((c3.gamma_q / want - 1.0).abs() < 1e-14);
    }

    #[test]
    fn series_routes_agree() {
        for qq in [3, 4, 5] {
            let v = singular_series_truncated(q(qq), 3000).unwrap();
            assert!((v.value - v.value_d_major).abs() < 1e-9 * v.value, "{v:?}");
        }
    }

    #[test]
    fn series_matches_definition_on_small_box() {
        // Direct double loop with r2_weighted and the same square tail.
        let qq = q(3);
        let m_max = 200u64;
        let s = 3.0;
        let mut direct = 0.0;
        for m in 1..=m_max {
            for d in 1..=m.isqrt() {
                let c = gcd(d as u128, m as u128) == 1;
                let w = r2_weighted(m, d, qq, false);
                let wc = r2_weighted(m, d, qq, true);
                if d % 2 == 1 && c {
                    direct += w * w / ((m as f64).powf(1.5) * (d as f64).powf(s));
                }
                if d % 4 == 0 && c {
                    direct += 64.0 * wc * wc / ((m as f64).powf(1.5) * (d as f64).powf(s));
                }
            }
            if let Some(k) = exact_sqrt(m) {
                // brute-force the d > √m tail far enough to be negligible
                for d in (k + 1)..200_000 {
                    let c = gcd(d as u128, m as u128) == 1;
                    let base = 1.0 / ((m as f64).powf(1.5) * (d as f64).powf(s));
                    if d % 2 == 1 && c {
                        direct += 4.0 * base;
                    }
                    if d % 4 == 0 && c {
                        direct += 64.0 * 4.0 * base;
                    }
                }
            }
        }
        let v = singular_series_truncated(qq, m_max).unwrap();
        assert!((v.value - direct).abs() < 1e-9, "{} vs {direct}", v.value);
    }

    #[test]
    fn partial_sums_monotone_even_q() {
        let a = singular_series_truncated(q(4), 500).unwrap().value;
        let b = singular_series_truncated(q(4), 1000).unwrap().value;
        assert!(b >= a);
    }

    #[test]
    fn tight_tolerance_is_unreachable() {
        match singular_series(q(3), 1e-6) {
            Err(Error::TolUnreachable { achieved, .. }) => assert!(achieved > 1e-6),
            other => panic!("expected TolUnreachable, got {other:?}"),
        }
    }

    #[test]
    fn tail_bound_dominates_observed_tail() {
        let qq = q(3);
        let a = singular_series_truncated(qq, 2000).unwrap();
        let b = singular_series_truncated(qq, 20000).unwrap();
        assert!(b.value - a.value <= a.tail_bound);
    }
}
