//! Numerical infrastructure: double-double arithmetic, compensated sums,
//! exact Γ at half-integers, Euler–Maclaurin zeta tails and adaptive
//! Gauss–Kronrod quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`; about 106 bits.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    pub const PI: Dd = Dd {
        hi: std::f64::consts::PI,
        lo: 1.224_646_799_147_353_2e-16,
    };

    pub const fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    /// Exact for |n| < 2^106.
    pub fn from_i128(n: i128) -> Dd {
        let hi = n as f64;
        // `hi` may round outside the i128 range only for n near the limits.
        let rest = n.saturating_sub(hi as i128);
        let (hi, lo) = quick_two_sum(hi, rest as f64);
        Dd { hi, lo }
    }

    pub fn from_u128(n: u128) -> Dd {
        let hi = n as f64;
        let rest = n as i128 - hi as u128 as i128;
        let (hi, lo) = quick_two_sum(hi, rest as f64);
        Dd { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn recip(self) -> Dd {
        Dd::ONE / self
    }

    pub fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let s = self.hi.sqrt();
        let (p, e) = two_prod(s, s);
        let resid = (self.hi - p - e + self.lo) / (2.0 * s);
        let (hi, lo) = quick_two_sum(s, resid);
        Dd { hi, lo }
    }

    pub fn powi(self, mut n: u32) -> Dd {
        let mut base = self;
        let mut acc = Dd::ONE;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            n >>= 1;
        }
        acc
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl AddAssign for Dd {
    fn add_assign(&mut self, o: Dd) {
        *self = *self + o;
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Mul<f64> for Dd {
    type Output = Dd;
    fn mul(self, o: f64) -> Dd {
        self * Dd::from_f64(o)
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * q1;
        let q2 = r.hi / o.hi;
        let r = r - o * q2;
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }
}

/// Neumaier-compensated running sum; the result depends only on the order
/// of the terms, never on how work was split across threads.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

pub fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `num/den · π^(half_powers/2)`, kept exact so closed-form constants can be
/// evaluated in double-double.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PiRational {
    pub num: u128,
    pub den: u128,
    pub half_powers: u32,
}

impl PiRational {
    pub fn new(num: u128, den: u128, half_powers: u32) -> Self {
        let g = gcd(num, den).max(1);
        PiRational {
            num: num / g,
            den: den / g,
            half_powers,
        }
    }

    pub fn checked_mul(self, o: PiRational) -> Option<PiRational> {
        let g1 = gcd(self.num, o.den).max(1);
        let g2 = gcd(o.num, self.den).max(1);
        let num = (self.num / g1).checked_mul(o.num / g2)?;
        let den = (self.den / g2).checked_mul(o.den / g1)?;
        Some(PiRational::new(num, den, self.half_powers + o.half_powers))
    }

    pub fn checked_div(self, o: PiRational) -> Option<PiRational> {
        let half_powers = self.half_powers.checked_sub(o.half_powers)?;
        let inv = PiRational {
            num: o.den,
            den: o.num,
            half_powers: 0,
        };
        let mut r = self.checked_mul(inv)?;
        r.half_powers = half_powers;
        Some(r)
    }

    pub fn to_dd(self) -> Dd {
        let pi_part = Dd::PI.powi(self.half_powers / 2)
            * if self.half_powers % 2 == 1 {
                Dd::PI.sqrt()
            } else {
                Dd::ONE
            };
        Dd::from_u128(self.num) / Dd::from_u128(self.den) * pi_part
    }

    pub fn to_f64(self) -> f64 {
        self.to_dd().to_f64()
    }
}

/// Γ(n/2) for n ≥ 1, exactly.
pub fn gamma_half(n: u32) -> Result<PiRational> {
    if n == 0 {
        return Err(Error::InvalidArgument("Γ(0) is undefined".into()));
    }
    let (mut acc, mut k) = if n % 2 == 1 {
        (PiRational::new(1, 1, 1), 1)
    } else {
        (PiRational::new(1, 1, 0), 2)
    };
    // Γ(s+1) = sΓ(s) with s = k/2.
    while k < n {
        acc = acc
            .checked_mul(PiRational::new(k as u128, 2, 0))
            .ok_or(Error::Overflow("Γ at half-integer"))?;
        k += 2;
    }
    Ok(acc)
}

/// B(a/2, b/2) for positive integers a, b.
pub fn beta_half(a: u32, b: u32) -> Result<PiRational> {
    let num = gamma_half(a)?
        .checked_mul(gamma_half(b)?)
        .ok_or(Error::Overflow("Beta numerator"))?;
    num.checked_div(gamma_half(a + b)?)
        .ok_or(Error::Overflow("Beta quotient"))
}

/// Σ_{k>n} k^{-s} by Euler–Maclaurin at n, with a bound on the truncation.
pub fn zeta_tail(s: f64, n: u64) -> (f64, f64) {
    assert!(s > 1.0 && n >= 1);
    let nf = n as f64;
    let f = nf.powf(-s);
    let value = nf * f / (s - 1.0) - 0.5 * f + s * f / nf / 12.0
        - s * (s + 1.0) * (s + 2.0) * f / nf.powi(3) / 720.0;
    let bound = s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * f / nf.powi(5) / 30240.0;
    (value, bound)
}

/// Σ_{j>n} j^{−s}, exact head plus Euler–Maclaurin beyond 64.
pub fn zeta_tail_from(s: f64, n: u64) -> f64 {
    let start = n.max(64);
    let head = compensated_sum((n + 1..=start).rev().map(|k| (k as f64).powf(-s)));
    head + zeta_tail(s, start).0
}

/// Σ_{k≥1} k^{-s} to within `tol`, returned with the bound actually achieved.
pub fn zeta(s: f64, tol: f64) -> (f64, f64) {
    let mut n: u64 = 8;
    while zeta_tail(s, n).1 > tol && n < 1 << 24 {
        n *= 2;
    }
    let (tail, bound) = zeta_tail(s, n);
    let head = compensated_sum((1..=n).rev().map(|k| (k as f64).powf(-s)));
    (head + tail, bound + 2.0 * f64::EPSILON * head)
}

/// Result of an adaptive quadrature.
#[derive(Clone, Copy, Debug)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS_K: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK_WEIGHTS_G: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * GK_WEIGHTS_K[7];
    let mut g = fc * GK_WEIGHTS_G[3];
    for i in 0..7 {
        let dx = h * GK_NODES[i];
        let pair = f(c - dx) + f(c + dx);
        k += GK_WEIGHTS_K[i] * pair;
        if i % 2 == 1 {
            g += GK_WEIGHTS_G[i / 2] * pair;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.total_cmp(&o.error)
    }
}

/// Globally adaptive 7/15-point Gauss–Kronrod on `[a, b]`: the panel with the
/// largest error estimate is bisected until the total estimate meets
/// `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            error: 0.0,
            intervals: 0,
        });
    }
    let (v, e) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        a,
        b,
        value: v,
        error: e,
    });
    let mut total = v;
    let mut err = e;
    while err > abs_tol.max(rel_tol * total.abs()) {
        if heap.len() >= max_panels {
            return Err(Error::Quadrature {
                value: total,
                error: err,
            });
        }
        let p = heap.pop().expect("heap is never empty");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            // Panel below f64 resolution; keep its estimate.
            heap.push(Panel {
                error: 0.0,
                ..p
            });
            err = heap.iter().map(|q| q.error).sum();
            if err <= abs_tol.max(rel_tol * total.abs()) {
                break;
            }
            return Err(Error::Quadrature {
                value: total,
                error: err,
            });
        }
        let (v1, e1) = gk15(&f, p.a, m);
        let (v2, e2) = gk15(&f, m, p.b);
        heap.push(Panel {
            a: p.a,
            b: m,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: m,
            b: p.b,
            value: v2,
            error: e2,
        });
        // Re-sum in a fixed order so the result is reproducible.
        let mut panels: Vec<&Panel> = heap.iter().collect();
        panels.sort_by(|x, y| x.a.total_cmp(&y.a));
        total = compensated_sum(panels.iter().map(|q| q.value));
        err = panels.iter().map(|q| q.error).sum();
    }
    Ok(Quadrature {
        value: total,
        error: err,
        intervals: heap.len(),
    })
}

/// Fractional part of `√n/d`, computed from the exact integer part of `√n`
/// so that no digits are lost when `√n` is large.
#[inline]
pub fn frac_sqrt_over(n: u128, d: u64) -> f64 {
    let s = n.isqrt();
    let rem = (n - s * s) as f64;
    let frac = if rem == 0.0 {
        0.0
    } else {
        rem / ((n as f64).sqrt() + s as f64)
    };
    let whole = (s % d as u128) as f64;
    let v = (whole + frac) / d as f64;
    if v >= 1.0 {
        v - 1.0
    } else {
        v
    }
}
