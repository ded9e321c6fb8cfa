//! Representation counts, the character mod 4 and the Dirichlet-series
//! constants that normalise the error term.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, zeta};

/// Default ceiling on the number of `u128` entries a table may hold (512 MiB).
pub const DEFAULT_ENTRY_BUDGET: u128 = 1 << 25;

/// Dimension parameter of the Heisenberg group 𝓗_q; the lattice is Z^{2q+1}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Q(u32);

impl Q {
    pub const MAX: u32 = 24;

    pub fn new(q: u32) -> Result<Q> {
        if (3..=Q::MAX).contains(&q) {
            Ok(Q(q))
        } else {
            Err(Error::InvalidArgument(format!(
                "q must lie in 3..={}, got {q}",
                Q::MAX
            )))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn is_odd(self) -> bool {
        self.0 % 2 == 1
    }
}

impl std::fmt::Display for Q {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// The non-trivial character mod 4.
pub fn chi(n: u64) -> i64 {
    match n % 4 {
        1 => 1,
        3 => -1,
        _ => 0,
    }
}

/// χ(−n), read as χ of the least non-negative residue of −n mod 4.
pub fn chi_neg(n: u64) -> i64 {
    chi((4 - n % 4) % 4)
}

/// λ(h) = 𝟙[h ≡ 0 (4)] − 𝟙[h ≡ 2 (4)].
pub fn lambda(h: u64) -> i64 {
    match h % 4 {
        0 => 1,
        2 => -1,
        _ => 0,
    }
}

/// ξ(d) for even q; odd q has no ξ and the caller must not ask.
pub fn xi(q: Q, d: u64) -> i64 {
    debug_assert!(!q.is_odd());
    let sign = if (q.get() / 2).is_multiple_of(2) { -1 } else { 1 }; // (−1)^{q/2+1}
    match d % 4 {
        1 | 3 => 1,
        2 => sign,
        _ => sign - sign * (1i64 << q.get()),
    }
}

/// ψ(t) = t − ⌊t⌋ − 1/2.
pub fn sawtooth(t: f64) -> f64 {
    t - t.floor() - 0.5
}

/// e(t) = exp(2πit), reducing t mod 1 first.
pub fn unit_exp(t: f64) -> Complex64 {
    let r = t - t.floor();
    let (s, c) = (2.0 * PI * r).sin_cos();
    Complex64::new(c, s)
}

/// ‖t‖, the distance from t to the nearest integer.
pub fn dist_nearest(t: f64) -> f64 {
    let r = t - t.floor();
    r.min(1.0 - r)
}

/// Exact integer square root test.
pub fn exact_sqrt(n: u64) -> Option<u64> {
    let s = n.isqrt();
    (s * s == n).then_some(s)
}

/// Representations m = a² + b² with a, b ≥ 0.
pub fn two_square_reps(m: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let mut b = 0u64;
    while b * b <= m {
        if let Some(a) = exact_sqrt(m - b * b) {
            out.push((a, b));
        }
        b += 1;
    }
    out
}

/// Number of ordered sign choices for a non-negative pair.
pub fn sign_multiplicity(a: u64, b: u64) -> u64 {
    (if a == 0 { 1 } else { 2 }) * (if b == 0 { 1 } else { 2 })
}

/// r₂(m,d;q), or r_{2,χ}(m,d;q) when `chi_twist` is set: the sum over
/// m = a² + b² with d | b of (|a|/√m)^{q−1}, times χ(|a|) if twisted.
pub fn r2_weighted(m: u64, d: u64, q: Q, chi_twist: bool) -> f64 {
    assert!(m >= 1 && d >= 1);
    let sqrt_m = (m as f64).sqrt();
    let mut terms = Vec::new();
    let mut b = 0u64;
    while b * b <= m {
        if let Some(a) = exact_sqrt(m - b * b) {
            let weight = (a as f64 / sqrt_m).powi(q.get() as i32 - 1);
            let twist = if chi_twist { chi(a) as f64 } else { 1.0 };
            let mult = sign_multiplicity(a, b) as f64;
            terms.push(mult * weight * twist);
        }
        b += d;
    }
    compensated_sum(terms)
}

/// Dense tables of r₂ and r_{2k} (2 ≤ k ≤ q) up to a limit, with prefix sums.
#[derive(Clone, Debug)]
pub struct RepTable {
    q: Q,
    limit: u64,
    r2: Vec<u128>,
    r2q: BTreeMap<u32, Vec<u128>>,
    prefix: BTreeMap<u32, Vec<u128>>,
}

/// Adds one square: out[m] = Σ_{a∈Z, a²≤m} prev[m − a²].
fn add_one_square(prev: &[u128]) -> Result<Vec<u128>> {
    prev.par_iter()
        .enumerate()
        .map(|(m, &own)| {
            let mut acc = own;
            let mut a = 1usize;
            while a * a <= m {
                let term = prev[m - a * a]
                    .checked_mul(2)
                    .ok_or(Error::Overflow("r_k convolution"))?;
                acc = acc
                    .checked_add(term)
                    .ok_or(Error::Overflow("r_k convolution"))?;
                a += 1;
            }
            Ok(acc)
        })
        .collect()
}

fn prefix_sums(v: &[u128]) -> Result<Vec<u128>> {
    let mut acc = 0u128;
    v.iter()
        .map(|&x| {
            acc = acc.checked_add(x).ok_or(Error::Overflow("prefix sum"))?;
            Ok(acc)
        })
        .collect()
}

impl RepTable {
    pub fn build(q: Q, limit: u64) -> Result<RepTable> {
        RepTable::build_with_budget(q, limit, DEFAULT_ENTRY_BUDGET)
    }

    /// Builds r_{2k} by adding one square at a time: two single-square steps
    /// equal one convolution with r₂, at O(M^{3/2}) cost per step instead of
    /// the O(M²) of a direct r₂ convolution.
    pub fn build_with_budget(q: Q, limit: u64, entry_budget: u128) -> Result<RepTable> {
        let needed = (2 * q.get() as u128) * (limit as u128 + 1);
        if needed > entry_budget {
            return Err(Error::Capacity {
                what: "representation table",
                needed,
                budget: entry_budget,
            });
        }
        let len = usize::try_from(limit + 1).map_err(|_| Error::Overflow("table length"))?;
        let mut delta = vec![0u128; len];
        delta[0] = 1;
        let r1 = add_one_square(&delta)?;
        let r2 = add_one_square(&r1)?;
        let mut r2q = BTreeMap::new();
        let mut prefix = BTreeMap::new();
        let mut level = r2.clone();
        prefix.insert(1, prefix_sums(&level)?);
        for k in 2..=q.get() {
            level = add_one_square(&add_one_square(&level)?)?;
            prefix.insert(k, prefix_sums(&level)?);
            r2q.insert(k, level.clone());
        }
        Ok(RepTable {
            q,
            limit,
            r2,
            r2q,
            prefix,
        })
    }

    pub fn q(&self) -> Q {
        self.q
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn r2(&self) -> &[u128] {
        &self.r2
    }

    /// r_{2k}(m) for m ≤ limit; `k` ranges over 1..=q (k = 1 gives r₂).
    pub fn r2k(&self, k: u32) -> &[u128] {
        if k == 1 {
            &self.r2
        } else {
            &self.r2q[&k]
        }
    }

    pub fn r2q(&self) -> &[u128] {
        self.r2k(self.q.get())
    }

    pub fn prefix_k(&self, k: u32) -> &[u128] {
        &self.prefix[&k]
    }

    /// Σ_{0≤k≤m} r_{2q}(k).
    pub fn prefix(&self) -> &[u128] {
        self.prefix_k(self.q.get())
    }

    pub fn require(&self, m: u64) -> Result<()> {
        if m > self.limit {
            Err(Error::TableTooSmall {
                limit: self.limit,
                needed: m,
            })
        } else {
            Ok(())
        }
    }
}

/// ϱ_{χ,3} and ϱ₄ as exact integers; both are checked against
/// [`dirichlet_values`] in the tests before being trusted here.
pub const VARRHO_CHI_3: i128 = 4;
pub const VARRHO_4: i128 = 16;

/// ρ_{2q}(m) from the divisor-sum formula, which equals r_{2q}(m) for q ∈ {3, 4}.
pub fn rho_2q(q: Q, m: u64) -> Result<u128> {
    if m == 0 {
        return Err(Error::InvalidArgument("ρ_{2q}(0) is not defined".into()));
    }
    let mut divisors = Vec::new();
    let mut d = 1u64;
    while d * d <= m {
        if m.is_multiple_of(d) {
            divisors.push(d);
            if d * d != m {
                divisors.push(m / d);
            }
        }
        d += 1;
    }
    let total: i128 = match q.get() {
        // 4 m² {4 Σ χ(d) d⁻² − Σ χ(m/d) d⁻²}, with m²/d² = (m/d)².
        3 => {
            let inner: i128 = divisors
                .iter()
                .map(|&d| {
                    let co = (m / d) as i128;
                    (4 * chi(d) as i128 - chi(m / d) as i128) * co * co
                })
                .sum();
            VARRHO_CHI_3 * inner
        }
        // 16 m³ {Σ_{d odd} d⁻³ + Σ_{d even} (−1)^{m/d} d⁻³}.
        4 => {
            let inner: i128 = divisors
                .iter()
                .map(|&d| {
                    let co = (m / d) as i128;
                    let sign = if d % 2 == 1 || (m / d).is_multiple_of(2) { 1 } else { -1 };
                    sign * co * co * co
                })
                .sum();
            VARRHO_4 * inner
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "the divisor formula is exact only for q ∈ {{3,4}}, got {other}"
            )))
        }
    };
    u128::try_from(total).map_err(|_| Error::Overflow("negative ρ_{2q}"))
}

/// Σ_{n≥1} χ(n) n^{−s}, summed until the first omitted term is below `tol`.
pub fn l_chi(s: f64, tol: f64) -> f64 {
    let mut n = 1u64;
    let mut terms = Vec::new();
    loop {
        let t = (n as f64).powf(-s);
        if t < tol && terms.len() % 2 == 0 {
            break;
        }
        terms.push(if n % 4 == 1 { t } else { -t });
        n += 2;
    }
    compensated_sum(terms.into_iter().rev())
}

/// Dirichlet-series values and the ϱ normalisers for one q.
#[derive(Clone, Copy, Debug)]
pub struct DirichletValues {
    pub zeta_qm1: f64,
    pub zeta_q: f64,
    pub l_chi_q: f64,
    pub varrho_q: f64,
    pub varrho_chi_q: f64,
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

pub fn dirichlet_values(q: Q, tol: f64) -> DirichletValues {
    let s = q.get() as f64;
    let (zeta_qm1, _) = zeta(s - 1.0, tol);
    let (zeta_q, _) = zeta(s, tol);
    let l_chi_q = l_chi(s, tol);
    let pi_q = PI.powi(q.get() as i32);
    let gamma_q = factorial(q.get() - 1);
    DirichletValues {
        zeta_qm1,
        zeta_q,
        l_chi_q,
        varrho_q: pi_q / ((1.0 - 2f64.powi(-(q.get() as i32))) * gamma_q * zeta_q),
        varrho_chi_q: pi_q / (2f64.powi(q.get() as i32 - 1) * gamma_q * l_chi_q),
    }
}

/// The constants a given q needs downstream.
#[derive(Clone, Copy, Debug)]
pub struct ArithmeticConstants {
    pub q: Q,
    pub values: DirichletValues,
}

impl ArithmeticConstants {
    pub fn new(q: Q) -> ArithmeticConstants {
        let mut values = dirichlet_values(q, 1e-15);
        // Exact where known, so downstream comparisons are not blurred.
        match q.get() {
            3 => values.varrho_chi_q = VARRHO_CHI_3 as f64,
            4 => values.varrho_q = VARRHO_4 as f64,
            _ => {}
        }
        ArithmeticConstants { q, values }
    }

    /// ϱ_q for even q, ϱ_{χ,q} for odd q.
    pub fn varrho(&self) -> f64 {
        if self.q.is_odd() {
            self.values.varrho_chi_q
        } else {
            self.values.varrho_q
        }
    }

    pub fn xi(&self, d: u64) -> i64 {
        xi(self.q, d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: u32) -> Q {
        Q::new(n).unwrap()
    }

    fn brute_r2(m: u64) -> u128 {
        let r = m.isqrt() as i64 + 1;
        let mut c = 0;
        for a in -r..=r {
            for b in -r..=r {
                if (a * a + b * b) as u64 == m {
                    c += 1;
                }
            }
        }
        c
    }

    #[test]
    fn small_tables() {
        let t = RepTable::build(q(3), 1).unwrap();
        assert_eq!(t.r2(), &[1, 4]);
        assert_eq!(t.r2q(), &[1, 12]);
        let t = RepTable::build(q(3), 0).unwrap();
        assert_eq!(t.r2q(), &[1]);
        let t = RepTable::build(q(3), 25).unwrap();
        assert_eq!(t.r2()[25], 12);
    }

    #[test]
    fn r2_matches_pair_count() {
        let t = RepTable::build(q(3), 2000).unwrap();
        for m in 0..=2000u64 {
            assert_eq!(t.r2()[m as usize], brute_r2(m), "m = {m}");
        }
    }

    #[test]
    fn levels_are_convolutions_of_r2() {
        let t = RepTable::build(q(5), 300).unwrap();
        let r2 = t.r2();
        for k in 2..=5 {
            let prev = t.r2k(k - 1);
            for m in 0..=300usize {
                let conv: u128 = (0..=m).map(|j| r2[j] * prev[m - j]).sum();
                assert_eq!(t.r2k(k)[m], conv, "k = {k}, m = {m}");
            }
        }
    }

    #[test]
    fn prefix_is_cumulative() {
        let t = RepTable::build(q(4), 500).unwrap();
        let mut acc = 0;
        for (m, &v) in t.r2q().iter().enumerate() {
            acc += v;
            assert_eq!(t.prefix()[m], acc);
        }
    }

    #[test]
    fn capacity_is_enforced() {
        assert!(matches!(
            RepTable::build_with_budget(q(3), 1000, 100),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn divisor_formula_small_values() {
        assert_eq!(rho_2q(q(3), 1).unwrap(), 12);
        assert_eq!(rho_2q(q(3), 2).unwrap(), 60);
        assert_eq!(rho_2q(q(4), 1).unwrap(), 16);
        assert!(rho_2q(q(5), 1).is_err());
        assert!(rho_2q(q(3), 0).is_err());
    }

    #[test]
    fn divisor_formula_matches_table() {
        let t3 = RepTable::build(q(3), 3000).unwrap();
        let t4 = RepTable::build(q(4), 3000).unwrap();
        for m in 1..=3000u64 {
            assert_eq!(rho_2q(q(3), m).unwrap(), t3.r2q()[m as usize]);
            assert_eq!(rho_2q(q(4), m).unwrap(), t4.r2q()[m as usize]);
        }
    }

    #[test]
    fn weighted_counts() {
        assert!((r2_weighted(1, 1, q(3), false) - 2.0).abs() < 1e-15);
        assert!((r2_weighted(2, 1, q(3), false) - 2.0).abs() < 1e-15);
        assert!((r2_weighted(25, 1, q(3), true) - 0.56).abs() < 1e-15);
        assert_eq!(r2_weighted(3, 1, q(3), false), 0.0);
        assert_eq!(r2_weighted(3, 1, q(3), true), 0.0);
    }

    #[test]
    fn frozen_varrho_constants_match_series() {
        let v3 = dirichlet_values(q(3), 1e-14);
        assert!((v3.varrho_chi_q - 4.0).abs() < 1e-10);
        assert!((v3.l_chi_q - PI.powi(3) / 32.0).abs() < 1e-13);
        let v4 = dirichlet_values(q(4), 1e-14);
        assert!((v4.varrho_q - 16.0).abs() < 1e-10);
        let (z2, _) = zeta(2.0, 1e-14);
        assert!((z2 - PI * PI / 6.0).abs() < 1e-13);
    }

    #[test]
    fn xi_values_for_q4() {
        assert_eq!(xi(q(4), 1), 1);
        assert_eq!(xi(q(4), 2), -1);
        assert_eq!(xi(q(4), 4), 15);
        for d in 1..100 {
            let allowed = [1, -1, 15];
            assert!(allowed.contains(&xi(q(4), d)));
        }
    }

    #[test]
    fn sawtooth_at_integers() {
        for n in -5..5 {
            assert_eq!(sawtooth(n as f64), -0.5);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn periodic_functions(t in -1e6f64..1e6) {
            let s = sawtooth(t);
            prop_assert!((-0.5..0.5).contains(&s));
            prop_assert!((unit_exp(t).norm() - 1.0).abs() < 1e-15);
            let d = dist_nearest(t);
            prop_assert!((0.0..=0.5).contains(&d));
            prop_assert!((dist_nearest(t + 1.0) - d).abs() < 1e-9);
            // ψ is odd away from the integers and sums to −1 on them.
            if t.fract() != 0.0 {
                prop_assert!((sawtooth(t) + sawtooth(-t)).abs() < 1e-9);
            }
            let n = t.round();
            prop_assert_eq!(sawtooth(n) + sawtooth(-n), -1.0);
        }

        #[test]
        fn chi_is_multiplicative_on_odds(a in 0u64..10_000, b in 0u64..10_000) {
            let (a, b) = (2 * a + 1, 2 * b + 1);
            prop_assert_eq!(chi(a) * chi(b), chi(a * b));
        }

        #[test]
        fn weighted_count_ordering(m in 1u64..20_000, d in 1u64..30, qq in 3u32..9) {
            let qq = q(qq);
            let plain = r2_weighted(m, d, qq, false);
            let twisted = r2_weighted(m, d, qq, true);
            let r2 = brute_r2(m) as f64;
            prop_assert!(twisted.abs() <= plain + 1e-12);
            prop_assert!(plain <= r2 + 1e-12);
            let has_rep = two_square_reps(m).iter().any(|&(_, b)| b % d == 0);
            if !has_rep {
                prop_assert_eq!(plain, 0.0);
            }
        }
    }
}
