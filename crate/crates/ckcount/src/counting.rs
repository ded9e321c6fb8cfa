//! Exact lattice counts by slicing along the centre, the error term 𝓔_q,
//! its normalised form Δ_q, the schedule of count jumps and the weighted
//! Euclidean sums whose main terms assemble the volume.

use std::f64::consts::SQRT_2;

use rayon::prelude::*;
use serde::Serialize;

use crate::arithmetic::{sawtooth, ArithmeticConstants, RepTable, Q};
use crate::error::{Error, Result};
use crate::geometry::{ball_volume_dd, Dilation};
use crate::numeric::{compensated_sum, gamma_half, integrate, Dd, PiRational};

/// |Z^{2q+1} ∩ δ_x𝓑| = Σ_{m²+n² ≤ x⁴, m ≥ 0} r_{2q}(m), one prefix lookup per n.
pub fn fast_count(table: &RepTable, x: Dilation) -> Result<u128> {
    let t = x.quartic();
    let r = t.isqrt();
    let r = u64::try_from(r).map_err(|_| Error::Overflow("⌊x²⌋"))?;
    table.require(r)?;
    let prefix = table.prefix();
    let mut total = prefix[r as usize];
    for n in 1..=r as u128 {
        let m = (t - n * n).isqrt() as usize;
        total = total
            .checked_add(2 * prefix[m])
            .ok_or(Error::Overflow("lattice count"))?;
    }
    Ok(total)
}

/// One point of a scan: the exact count, vol(𝓑)x^{2q+2} and their difference.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ErrorSample {
    pub q: u32,
    pub x: f64,
    pub quartic: u128,
    pub count: u128,
    pub main: f64,
    pub err: f64,
}

/// A representation table bundled with the constants the error term needs.
#[derive(Clone, Debug)]
pub struct Counter {
    table: RepTable,
    volume: Dd,
    constants: ArithmeticConstants,
}

impl Counter {
    /// Table large enough for every dilation up to `x_max`.
    pub fn new(q: Q, x_max: f64) -> Result<Counter> {
        let limit = Dilation::from_real(x_max)?.square_floor();
        let limit = u64::try_from(limit).map_err(|_| Error::Overflow("table limit"))?;
        Ok(Counter::with_table(RepTable::build(q, limit)?))
    }

    pub fn with_table(table: RepTable) -> Counter {
        let q = table.q();
        Counter {
            table,
            volume: ball_volume_dd(q),
            constants: ArithmeticConstants::new(q),
        }
    }

    pub fn q(&self) -> Q {
        self.table.q()
    }

    pub fn table(&self) -> &RepTable {
        &self.table
    }

    pub fn constants(&self) -> &ArithmeticConstants {
        &self.constants
    }

    pub fn volume(&self) -> Dd {
        self.volume
    }

    pub fn count(&self, x: Dilation) -> Result<u128> {
        fast_count(&self.table, x)
    }

    /// vol(𝓑)·x^{2q+2} in double-double.
    pub fn main_term(&self, x: Dilation) -> Dd {
        self.volume * x.pow(2 * self.q().get() + 2)
    }

    pub fn error_term(&self, x: Dilation) -> Result<ErrorSample> {
        let count = self.count(x)?;
        let main = self.main_term(x);
        Ok(ErrorSample {
            q: self.q().get(),
            x: x.x(),
            quartic: x.quartic(),
            count,
            main: main.to_f64(),
            err: (Dd::from_u128(count) - main).to_f64(),
        })
    }

    /// Δ_q(x) = −𝓔_q(√x) / (2ϱ x^{q−1/2}), with ϱ_{χ,q} for odd q.
    pub fn normalized_delta(&self, x: f64) -> Result<f64> {
        let dil = Dilation::from_square(x)?;
        let e = self.error_term(dil)?.err;
        let q = self.q().get() as f64;
        Ok(-e / (2.0 * self.constants.varrho() * x.powf(q - 0.5)))
    }

    /// Error terms at x = t^{1/4} for each t, in input order.
    pub fn scan(&self, quartics: &[u64]) -> Result<Vec<ErrorSample>> {
        quartics
            .par_iter()
            .map(|&t| self.error_term(Dilation::from_quartic(t)))
            .collect()
    }
}

/// A count jump at x⁴ = `key`, where the count grows by `mass`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Jump {
    pub key: u128,
    pub mass: u128,
}

impl Jump {
    pub fn radius(&self) -> f64 {
        Dd::from_u128(self.key).sqrt().sqrt().to_f64()
    }
}

/// The keys K = m² + n² in (lo, hi] at which the count jumps, produced one
/// block of keys at a time so memory stays bounded.
#[derive(Clone, Copy, Debug)]
pub struct JumpSchedule<'a> {
    table: &'a RepTable,
    lo: u128,
    hi: u128,
}

impl<'a> JumpSchedule<'a> {
    /// Jumps with x⁴ in (lo, hi].
    pub fn new(table: &'a RepTable, lo: u128, hi: u128) -> Result<Self> {
        let limit = u64::try_from(hi.isqrt()).map_err(|_| Error::Overflow("schedule"))?;
        table.require(limit)?;
        Ok(JumpSchedule { table, lo, hi })
    }

    pub fn lo(&self) -> u128 {
        self.lo
    }

    pub fn hi(&self) -> u128 {
        self.hi
    }

    /// Consecutive key ranges (a, b] covering (lo, hi].
    pub fn block_ranges(&self, block: u128) -> Vec<(u128, u128)> {
        let mut out = Vec::new();
        let mut a = self.lo;
        while a < self.hi {
            let b = (a + block).min(self.hi);
            out.push((a, b));
            a = b;
        }
        out
    }

    /// All jumps with key in (a, b], sorted by key.
    pub fn jumps_in(&self, a: u128, b: u128) -> Vec<Jump> {
        if b <= a {
            return Vec::new();
        }
        let r2q = self.table.r2q();
        let len = (b - a) as usize;
        let mut mass = vec![0u128; len];
        let m_max = b.isqrt();
        for m in 0..=m_max {
            let rm = r2q[m as usize];
            if rm == 0 {
                continue;
            }
            let m2 = m * m;
            // n² ∈ (a − m², b − m²]
            let n_lo = if a >= m2 {
                let lo = a - m2;
                let s = lo.isqrt();
                if s * s <= lo {
                    s + 1
                } else {
                    s
                }
            } else {
                0
            };
            let n_hi = (b - m2).isqrt();
            for n in n_lo..=n_hi {
                let key = m2 + n * n;
                debug_assert!(key > a && key <= b);
                mass[(key - a - 1) as usize] += if n == 0 { rm } else { 2 * rm };
            }
        }
        mass.into_iter()
            .enumerate()
            .filter(|&(_, w)| w > 0)
            .map(|(i, w)| Jump {
                key: a + 1 + i as u128,
                mass: w,
            })
            .collect()
    }
}

/// The four weighted sums over r_{2q} whose main terms enter the volume.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WeightedSumKind {
    /// Σ_{m≤Y} r_{2q}(m)(1 − m/Y)
    Cesaro,
    /// Σ_{m≤√Y} r_{2q}(m)(1 − m²/Y)^k
    Star { k: u32 },
    /// Σ_{m≤x²/√2} r_{2q}(m)(√(x⁴−m²) − m)
    Flat,
    /// Σ_{0<m≤x²/√2} r_{2q}(m) + Σ_{|n|≤x²/√2} Σ_{|n|<m≤√(x⁴−n²)} r_{2q}(m)
    Sharp,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct WeightedSum {
    pub value: f64,
    pub main_term: f64,
    pub residual: f64,
}

fn pi_pow(q: Q) -> f64 {
    PiRational::new(1, 1, 2 * q.get()).to_f64()
}

fn gamma_int(n: u32) -> f64 {
    gamma_half(2 * n).expect("small argument").to_f64()
}

/// α_{q,♭} from the Taylor series of √y at 1. From k = 2 on the terms
/// alternate in sign and shrink, so the first omitted term bounds the error.
pub fn alpha_flat(q: Q) -> Result<f64> {
    let half_q = q.get() as f64 / 2.0;
    let mut terms = Vec::new();
    let mut term = 0.5 / (half_q + 1.0);
    let mut k = 1u32;
    loop {
        terms.push(term);
        let next = term * (0.5 - k as f64) / (half_q + k as f64 + 1.0);
        if k >= 2 && next.abs() > term.abs() {
            return Err(Error::InvalidArgument("α♭ series is not decreasing".into()));
        }
        if next.abs() < 1e-18 || k > 10_000_000 {
            break;
        }
        term = next;
        k += 1;
    }
    let series = compensated_sum(terms.into_iter().rev());
    let pref = pi_pow(q) / 2f64.powf((q.get() as f64 + 1.0) / 2.0);
    Ok(pref * series / gamma_int(q.get() + 1) + pref / gamma_int(q.get() + 2))
}

/// α_{q,♯} = (2π^q/Γ(q+1)) ∫₀^{1/√2} ((1−t²)^{q/2} − t^q) dt.
pub fn alpha_sharp(q: Q) -> Result<f64> {
    let half_q = q.get() as f64 / 2.0;
    let qi = q.get() as i32;
    let integral = integrate(
        |t| (1.0 - t * t).powf(half_q) - t.powi(qi),
        0.0,
        1.0 / SQRT_2,
        1e-17,
        1e-15,
        1000,
    )?;
    Ok(2.0 * pi_pow(q) / gamma_int(q.get() + 1) * integral.value)
}

fn star_main(q: Q, k: u32, y: f64) -> f64 {
    let half_q = q.get() as f64 / 2.0;
    let denom: f64 = (1..=k).map(|j| half_q + j as f64).product();
    gamma_int(k + 1) * pi_pow(q) / (denom * gamma_int(q.get() + 1)) * y.powf(half_q)
}

/// Evaluates one weighted sum from the table. `y` is Y for the Euclidean
/// sums and the dilation x for ♭/♯.
pub fn weighted_sum(table: &RepTable, kind: WeightedSumKind, y: f64) -> Result<WeightedSum> {
    let q = table.q();
    let r = table.r2q();
    let (value, main_term) = match kind {
        WeightedSumKind::Cesaro => {
            let m_max = y.floor() as u64;
            table.require(m_max)?;
            let v = compensated_sum((0..=m_max).map(|m| r[m as usize] as f64 * (1.0 - m as f64 / y)));
            (v, pi_pow(q) / gamma_int(q.get() + 2) * y.powi(q.get() as i32))
        }
        WeightedSumKind::Star { k } => {
            if k == 0 {
                return Err(Error::InvalidArgument("k must be at least 1".into()));
            }
            let m_max = y.sqrt().floor() as u64;
            table.require(m_max)?;
            let v = compensated_sum(
                (0..=m_max).map(|m| r[m as usize] as f64 * (1.0 - (m as f64).powi(2) / y).powi(k as i32)),
            );
            (v, star_main(q, k, y))
        }
        WeightedSumKind::Flat => {
            let x = Dilation::from_real(y)?;
            let t = x.quartic();
            let m_max = flat_limit(t);
            table.require(m_max as u64)?;
            let v = compensated_sum((0..=m_max).map(|m| {
                let root = Dd::from_u128(t - m * m).sqrt();
                r[m as usize] as f64 * (root - Dd::from_u128(m)).to_f64()
            }));
            (v, alpha_flat(q)? * x.pow(2 * q.get() + 2).to_f64())
        }
        WeightedSumKind::Sharp => {
            let x = Dilation::from_real(y)?;
            let t = x.quartic();
            let m_lim = flat_limit(t);
            table.require(t.isqrt() as u64)?;
            let prefix = table.prefix();
            let mut total: u128 = prefix[m_lim as usize] - prefix[0];
            for n in 0..=m_lim {
                let top = (t - n * n).isqrt();
                if top > n {
                    let block = prefix[top as usize] - prefix[n as usize];
                    total += if n == 0 { block } else { 2 * block };
                }
            }
            (total as f64, alpha_sharp(q)? * x.pow(2 * q.get() + 2).to_f64())
        }
    };
    Ok(WeightedSum {
        value,
        main_term,
        residual: value - main_term,
    })
}

/// Largest m with 2m² ≤ t, i.e. m ≤ x²/√2.
pub fn flat_limit(t: u128) -> u128 {
    (t / 2).isqrt()
}

/// The boundary sawtooth sum Σ_{m≤x²/√2} r_{2q}(m) ψ(√(x⁴−m²)) that closes
/// the slicing identity count = 2S♭ + S♯ − 2·(this).
pub fn boundary_sawtooth_sum(table: &RepTable, x: Dilation) -> Result<f64> {
    let t = x.quartic();
    let m_max = flat_limit(t);
    table.require(m_max as u64)?;
    let r = table.r2q();
    Ok(compensated_sum((0..=m_max).map(|m| {
        let n = t - m * m;
        let s = n.isqrt();
        // ψ(√n) from the exact integer part.
        let frac = if s * s == n {
            0.0
        } else {
            (n - s * s) as f64 / ((n as f64).sqrt() + s as f64)
        };
        r[m as usize] as f64 * sawtooth(frac)
    })))
}

/// The volume as 2α_{q,♭} + α_{q,♯}.
pub fn volume_from_weighted_sums(q: Q) -> Result<f64> {
    Ok(2.0 * alpha_flat(q)? + alpha_sharp(q)?)
}

/// sup |𝓔_q(x)| / x^{2q − 2/3} over a set of samples.
pub fn theorem1_ratio(samples: &[ErrorSample]) -> f64 {
    samples
        .iter()
        .filter(|s| s.x >= 1.0)
        .map(|s| s.err.abs() / s.x.powf(2.0 * s.q as f64 - 2.0 / 3.0))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ball_volume, brute_force_counts_upto};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn q(n: u32) -> Q {
        Q::new(n).unwrap()
    }

    #[test]
    fn small_counts() {
        let c = Counter::new(q(3), 6.0).unwrap();
        assert_eq!(c.count(Dilation::from_real(1.0).unwrap()).unwrap(), 15);
        assert_eq!(c.count(Dilation::from_real(0.9).unwrap()).unwrap(), 1);
    }

    #[test]
    fn matches_brute_force_on_small_range() {
        for n in 3..=4 {
            let c = Counter::new(q(n), 4.0).unwrap();
            let brute = brute_force_counts_upto(q(n), 256, u64::MAX).unwrap();
            for t in 0..=256u64 {
                assert_eq!(c.count(Dilation::from_quartic(t)).unwrap(), brute[t as usize]);
            }
        }
    }

    #[test]
    fn error_term_examples() {
        let c = Counter::new(q(3), 2.0).unwrap();
        let vol = ball_volume(q(3));
        let s = c.error_term(Dilation::from_real(1.0).unwrap()).unwrap();
        assert_eq!(s.count, 15);
        assert!((s.err - (15.0 - vol)).abs() < 1e-13);
        let s = c.error_term(Dilation::from_real(0.5).unwrap()).unwrap();
        assert!((s.err - (1.0 - vol / 256.0)).abs() < 1e-15);
        let delta = c.normalized_delta(1.0).unwrap();
        assert!((delta + (15.0 - vol) / 8.0).abs() < 1e-13);
    }

    #[test]
    fn table_too_small_is_reported() {
        let c = Counter::new(q(3), 2.0).unwrap();
        assert!(matches!(
            c.count(Dilation::from_quartic(10_000)),
            Err(Error::TableTooSmall { .. })
        ));
    }

    #[test]
    fn schedule_reproduces_count_increments() {
        let c = Counter::new(q(3), 5.0).unwrap();
        let sched = JumpSchedule::new(c.table(), 10, 625).unwrap();
        let mut running = c.count(Dilation::from_quartic(10)).unwrap();
        let mut previous_key = 10u128;
        for (a, b) in sched.block_ranges(37) {
            for j in sched.jumps_in(a, b) {
                assert!(j.key > previous_key);
                for t in previous_key..j.key {
                    assert_eq!(c.count(Dilation::from_quartic(t as u64)).unwrap(), running);
                }
                running += j.mass;
                assert_eq!(c.count(Dilation::from_quartic(j.key as u64)).unwrap(), running);
                previous_key = j.key;
            }
        }
        assert_eq!(c.count(Dilation::from_quartic(625)).unwrap(), running);
    }

    #[test]
    fn slicing_identity_closes() {
        for n in 3..=5 {
            let c = Counter::new(q(n), 7.0).unwrap();
            for t in [1u64, 7, 81, 500, 1296, 2401] {
                let x = Dilation::from_quartic(t);
                let flat = weighted_sum(c.table(), WeightedSumKind::Flat, x.x()).unwrap();
                let sharp = weighted_sum(c.table(), WeightedSumKind::Sharp, x.x()).unwrap();
                let saw = boundary_sawtooth_sum(c.table(), x).unwrap();
                let count = c.count(x).unwrap() as f64;
                let rebuilt = 2.0 * flat.value + sharp.value - 2.0 * saw;
                assert!((rebuilt - count).abs() < 1e-9 * count, "q={n} t={t}");
            }
        }
    }

    #[test]
    fn volume_assembles_from_weighted_sums() {
        for n in 3..=8 {
            let v = volume_from_weighted_sums(q(n)).unwrap();
            assert!((v - ball_volume(q(n))).abs() < 1e-10 * v, "q = {n}");
        }
    }

    #[test]
    fn cesaro_below_one() {
        let t = RepTable::build(q(3), 10).unwrap();
        let s = weighted_sum(&t, WeightedSumKind::Cesaro, 0.99).unwrap();
        assert_eq!(s.value, 1.0);
        assert!((s.main_term - PI.powi(3) * 0.99f64.powi(3) / 24.0).abs() < 1e-14);
    }

    #[test]
    fn cesaro_residual_within_budget() {
        let t = RepTable::build(q(3), 400).unwrap();
        let mut worst: f64 = 0.0;
        for k in 4..=800 {
            let y = 0.5 * k as f64;
            let s = weighted_sum(&t, WeightedSumKind::Cesaro, y).unwrap();
            worst = worst.max(s.residual.abs() / (y * y.ln()));
        }
        assert!(worst <= crate::budgets::WEIGHTED_SUM_C, "measured {worst}");
    }

    /// Y·S*_{1,q}(Y) = 2{Y·S_q(√Y) − ∫₀^{√Y} y S_q(y) dy}, with the integral
    /// done by quadrature over the pieces where S_q is smooth.
    #[test]
    fn star_sum_matches_integral_identity() {
        let t = RepTable::build(q(3), 40).unwrap();
        for y in [50.0, 333.3, 1500.0] {
            let root: f64 = f64::sqrt(y);
            let star = weighted_sum(&t, WeightedSumKind::Star { k: 1 }, y).unwrap().value;
            let ces = |z: f64| weighted_sum(&t, WeightedSumKind::Cesaro, z).unwrap().value;
            let mut knots: Vec<f64> = (1..=root.floor() as u64).map(|m| m as f64).collect();
            knots.insert(0, 1e-12);
            knots.push(root);
            let integral: f64 = knots
                .windows(2)
                .map(|w| integrate(|z| z * ces(z), w[0], w[1], 1e-12, 1e-13, 200).unwrap().value)
                .sum();
            let rhs = 2.0 * (y * ces(root) - integral);
            assert!((y * star - rhs).abs() < 1e-8 * rhs.abs(), "Y = {y}");
        }
    }

    proptest! {
        #[test]
        fn count_minus_err_is_main(t in 1u64..40_000) {
            let c = Counter::new(q(3), 15.0).unwrap();
            let s = c.error_term(Dilation::from_quartic(t)).unwrap();
            let back = (Dd::from_u128(s.count) - Dd::from_f64(s.err)).to_f64();
            prop_assert!((back - s.main).abs() <= 1e-12 * s.main);
        }
    }
}
