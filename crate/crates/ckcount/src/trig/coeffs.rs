use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::arithmetic::{chi_neg, exact_sqrt, lambda, r2_weighted, unit_exp};
use crate::error::{Error, Result};
use crate::numeric::frac_sqrt_over;
use crate::Q;

use super::{tau, tau_star, weight_g, weight_g_hat};

/// Ceiling on raw (m,d) contributions before merging.
const CONTRIBUTION_BUDGET: u128 = 60_000_000;

/// The four coefficients attached to one key (m,d).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Coeffs {
    pub a: f64,
    pub a_star: f64,
    pub a_chi: f64,
    pub b_star: f64,
}

impl Coeffs {
    fn add(&mut self, o: &Coeffs) {
        self.a += o.a;
        self.a_star += o.a_star;
        self.a_chi += o.a_chi;
        self.b_star += o.b_star;
    }

    fn scale(&mut self, s: f64) {
        self.a *= s;
        self.a_star *= s;
        self.a_chi *= s;
        self.b_star *= s;
    }

    /// 𝔡* = 2^{q−1}𝔞* + 𝟙[4|d]·4^{q−1}𝔟*.
    pub fn d_star(&self, q: Q, d: u64) -> f64 {
        let k = q.get() as i32 - 1;
        let b = if d.is_multiple_of(4) { 4f64.powi(k) * self.b_star } else { 0.0 };
        2f64.powi(k) * self.a_star + b
    }
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    d: u64,
    m: u64,
    c: Coeffs,
}

/// Sparse coefficient tables keyed by (m,d), for 1 ≤ d ≤ `d_max`.
#[derive(Clone, Debug)]
pub struct CoeffTable {
    q: Q,
    h: f64,
    d_max: u64,
    entries: Vec<Entry>,
    /// entries for d live in `offsets[d-1]..offsets[d]`.
    offsets: Vec<usize>,
}

/// Where the phase √m·y/d comes from: y = x² with x⁴ = t exact, or a real y.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Frequency {
    Quartic(u128),
    Real(f64),
}

impl Frequency {
    /// √m·y/d mod 1.
    pub fn reduced(&self, m: u64, d: u64) -> f64 {
        match *self {
            Frequency::Quartic(t) => frac_sqrt_over(m as u128 * t, d),
            Frequency::Real(y) => {
                let v = (m as f64).sqrt() * y / d as f64;
                v - v.floor()
            }
        }
    }
}

impl CoeffTable {
    pub fn build(q: Q, h: f64, d_max: u64) -> Result<CoeffTable> {
        if !(h.is_finite() && h >= 1.0) {
            return Err(Error::InvalidArgument(format!("H must be ≥ 1, got {h}")));
        }
        if d_max == 0 {
            return Err(Error::InvalidArgument("d_max must be ≥ 1".into()));
        }
        let n_h = h.floor() as u64;
        let estimate = (n_h as u128 + 1) * (n_h as u128 + 2) / 2 * 8 + (n_h as u128) * d_max as u128;
        if estimate > CONTRIBUTION_BUDGET {
            return Err(Error::Capacity {
                what: "coefficient table",
                needed: estimate,
                budget: CONTRIBUTION_BUDGET,
            });
        }
        let per_h: Vec<Vec<Entry>> = (1..=n_h)
            .into_par_iter()
            .map(|hh| contributions(q, h, n_h, hh, d_max))
            .collect();
        let mut raw: Vec<Entry> = per_h.into_iter().flatten().collect();
        raw.sort_by_key(|e| (e.d, e.m));
        let mut entries: Vec<Entry> = Vec::with_capacity(raw.len() / 2);
        for e in raw {
            match entries.last_mut() {
                Some(last) if last.d == e.d && last.m == e.m => last.c.add(&e.c),
                _ => entries.push(e),
            }
        }
        for e in &mut entries {
            e.c.scale((e.m as f64).powf(-0.75));
        }
        let mut offsets = vec![0usize; d_max as usize + 1];
        for e in &entries {
            offsets[e.d as usize] += 1;
        }
        for i in 1..offsets.len() {
            offsets[i] += offsets[i - 1];
        }
        Ok(CoeffTable {
            q,
            h,
            d_max,
            entries,
            offsets,
        })
    }

    pub fn q(&self) -> Q {
        self.q
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn d_max(&self) -> u64 {
        self.d_max
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, m: u64, d: u64) -> Option<Coeffs> {
        let row = self.row(d);
        row.binary_search_by_key(&m, |e| e.m).ok().map(|i| row[i].c)
    }

    fn row(&self, d: u64) -> &[Entry] {
        if d == 0 || d > self.d_max {
            return &[];
        }
        &self.entries[self.offsets[d as usize - 1]..self.offsets[d as usize]]
    }

    /// (m, coefficients) for one d, ascending in m.
    pub fn row_iter(&self, d: u64) -> impl Iterator<Item = (u64, Coeffs)> + '_ {
        self.row(d).iter().map(|e| (e.m, e.c))
    }

    /// All keys (m, d) with their coefficients, ordered by d then m.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64, Coeffs)> + '_ {
        self.entries.iter().map(|e| (e.m, e.d, e.c))
    }

    /// Σ_m c(m,d)·e(s·√m·y/d + shift), with `s = −1` for the approximation
    /// phases and `s = +1` for the thm1A sums; squares skipped on request.
    pub fn phase_sum<F: Fn(&Coeffs) -> f64>(
        &self,
        d: u64,
        freq: Frequency,
        negate: bool,
        shift: f64,
        skip_squares: bool,
        pick: F,
    ) -> Complex64 {
        let mut re = crate::numeric::CompensatedSum::default();
        let mut im = crate::numeric::CompensatedSum::default();
        for e in self.row(d) {
            if skip_squares && exact_sqrt(e.m).is_some() {
                continue;
            }
            let c = pick(&e.c);
            if c == 0.0 {
                continue;
            }
            let r = freq.reduced(e.m, d);
            let z = unit_exp(if negate { shift - r } else { shift + r }) * c;
            re.add(z.re);
            im.add(z.im);
        }
        Complex64::new(re.value(), im.value())
    }
}

/// Unscaled contributions of one h; the factor m^{−3/4} is applied after merging.
fn contributions(q: Q, h_real: f64, n_h: u64, h: u64, d_max: u64) -> Vec<Entry> {
    let mut out = Vec::new();
    let ta = tau(h as f64 / (n_h + 1) as f64);
    let tsa = tau_star(h as f64 / (n_h + 1) as f64);
    let chi_h = chi_neg(h) as f64;
    let lam_h = lambda(h) as f64;
    // Divisors of h up to d_max, with their τ arguments (h/d)/([H/d]+1).
    let h_divisors: Vec<(u64, f64, f64)> = (1..=d_max.min(h))
        .filter(|d| h.is_multiple_of(*d))
        .map(|d| {
            let u = (h / d) as f64 / ((h_real / d as f64).floor() + 1.0);
            (d, tau(u), tau_star(u))
        })
        .collect();
    for n in 0..=h {
        let m = n * n + h * h;
        let s = n as f64 / (m as f64).sqrt();
        let half = if n == 0 || n == h { 0.5 } else { 1.0 };
        let g = weight_g(q, s) * half;
        let gh = weight_g_hat(q, s) * half;
        let part_a = Coeffs {
            a: ta * g,
            a_star: tsa * g,
            a_chi: 2.0 * chi_h * ta * g,
            b_star: 2.0 * lam_h * tsa * g,
        };
        let d_top = if n == 0 { d_max } else { d_max.min(n) };
        for d in 1..=d_top {
            if n % d == 0 {
                out.push(Entry { d, m, c: part_a });
            }
        }
        let chi_n = chi_neg(n) as f64;
        let four_n = if n % 4 == 0 { 4.0 } else { 0.0 };
        for &(d, tb, tsb) in &h_divisors {
            out.push(Entry {
                d,
                m,
                c: Coeffs {
                    a: tb * gh,
                    a_star: tsb * gh,
                    a_chi: 2.0 * chi_n * tb * gh,
                    b_star: four_n * tsb * gh,
                },
            });
        }
    }
    out
}

/// How far the table sits from the closed forms r₂(m,d;q)/(4πm^{3/4}) and
/// −r_{2,χ}(m,d;q)/(2πm^{3/4}), in units of r₂(m,d;q)·m/H².
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CoeffAsymptoticResidual {
    pub m: u64,
    pub d: u64,
    pub plain: f64,
    pub twisted: f64,
}

/// Residuals for every key with m ≤ H and r₂(m,d;q) > 0.
pub fn coeff_asymptotic_residuals(table: &CoeffTable) -> Vec<CoeffAsymptoticResidual> {
    let h = table.h();
    let q = table.q();
    let mut out = Vec::new();
    for d in 1..=table.d_max() {
        for (m, c) in table.row_iter(d) {
            if m as f64 > h {
                break;
            }
            let r2 = r2_weighted(m, d, q, false);
            if r2 <= 0.0 {
                continue;
            }
            let r2c = r2_weighted(m, d, q, true);
            let m34 = (m as f64).powf(0.75);
            let unit = r2 * m as f64 / (h * h);
            out.push(CoeffAsymptoticResidual {
                m,
                d,
                plain: (4.0 * std::f64::consts::PI * m34 * c.a - r2).abs() / unit,
                twisted: (2.0 * std::f64::consts::PI * m34 * c.a_chi + r2c).abs() / unit,
            });
        }
    }
    out
}
