//! The Cygan–Korányi norm on 𝓗_q, Heisenberg dilations, the volume of the
//! unit ball and the brute-force lattice counting oracle.

use rayon::prelude::*;

use crate::arithmetic::Q;
use crate::error::{Error, Result};
use crate::numeric::{beta_half, gamma_half, integrate, Dd, PiRational};

/// A point (v, w) of Z^{2q} × Z.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeisenbergPoint {
    pub v: Vec<i64>,
    pub w: i64,
}

impl HeisenbergPoint {
    pub fn new(q: Q, v: Vec<i64>, w: i64) -> Result<Self> {
        if v.len() != 2 * q.get() as usize {
            return Err(Error::InvalidArgument(format!(
                "v must have length {}, got {}",
                2 * q.get(),
                v.len()
            )));
        }
        Ok(HeisenbergPoint { v, w })
    }

    pub fn q(&self) -> usize {
        self.v.len() / 2
    }

    pub fn v_norm_sq(&self) -> i128 {
        self.v.iter().map(|&c| c as i128 * c as i128).sum()
    }

    /// (|v|⁴ + w²)^{1/4}, with the radicand formed exactly.
    pub fn ck_norm(&self) -> f64 {
        let s = self.v_norm_sq();
        let radicand = s * s + self.w as i128 * self.w as i128;
        Dd::from_i128(radicand).sqrt().sqrt().to_f64()
    }

    /// (v,w)∗(v′,w′) = (v+v′, w+w′+2⟨Jv,v′⟩) with J = [[0, I], [−I, 0]].
    pub fn compose(&self, o: &HeisenbergPoint) -> HeisenbergPoint {
        let q = self.q();
        let symplectic: i64 = (0..q)
            .map(|i| self.v[q + i] * o.v[i] - self.v[i] * o.v[q + i])
            .sum();
        HeisenbergPoint {
            v: self.v.iter().zip(&o.v).map(|(a, b)| a + b).collect(),
            w: self.w + o.w + 2 * symplectic,
        }
    }

    /// δ_x(v, w) = (xv, x²w).
    pub fn dilate(&self, x: f64) -> (Vec<f64>, f64) {
        (
            self.v.iter().map(|&c| x * c as f64).collect(),
            x * x * self.w as f64,
        )
    }
}

/// The norm of a real point.
pub fn ck_norm_real(v: &[f64], w: f64) -> f64 {
    let s: f64 = v.iter().map(|c| c * c).sum();
    (s * s + w * w).sqrt().sqrt()
}

/// A dilation parameter x together with the integer ⌊x⁴⌋ that decides
/// membership: (Σv²)² + w² ≤ x⁴ holds for integers iff it holds against ⌊x⁴⌋.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dilation {
    x: f64,
    quartic: u128,
    exact: bool,
}

impl Dilation {
    /// x = t^{1/4}, so that x⁴ = t exactly.
    pub fn from_quartic(t: u64) -> Dilation {
        Dilation {
            x: (t as f64).sqrt().sqrt(),
            quartic: t as u128,
            exact: true,
        }
    }

    /// Any positive x. When x⁴ lies within a few ulp of an integer it is
    /// snapped to it, so `t^{1/4}` round-trips and √t gives x⁴ = t exactly.
    pub fn from_real(x: f64) -> Result<Dilation> {
        if !(x.is_finite() && x > 0.0) {
            return Err(Error::InvalidArgument(format!("x must be positive, got {x}")));
        }
        let y = Dd::from_f64(x).powi(4);
        let nearest = y.to_f64().round();
        if nearest >= 1.0
            && nearest < 2f64.powi(100)
            && (y - Dd::from_f64(nearest)).to_f64().abs() <= 16.0 * f64::EPSILON * nearest
        {
            return Ok(Dilation {
                x,
                quartic: nearest as u128,
                exact: true,
            });
        }
        let floor = y.hi.floor();
        let floor = if floor == y.hi && y.lo < 0.0 {
            floor - 1.0
        } else {
            floor
        };
        Ok(Dilation {
            x,
            quartic: floor.max(0.0) as u128,
            exact: false,
        })
    }

    /// Dilation whose square is `y`, i.e. x = √y.
    pub fn from_square(y: f64) -> Result<Dilation> {
        if y.fract() == 0.0 && y >= 1.0 && y < 2f64.powi(50) {
            let t = (y as u128) * (y as u128);
            return Ok(Dilation {
                x: y.sqrt(),
                quartic: t,
                exact: true,
            });
        }
        Dilation::from_real(y.sqrt())
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    /// ⌊x⁴⌋.
    pub fn quartic(&self) -> u128 {
        self.quartic
    }

    /// Whether x⁴ equals [`Self::quartic`] exactly.
    pub fn is_exact(&self) -> bool {
        self.exact
    }

    /// ⌊x²⌋.
    pub fn square_floor(&self) -> u128 {
        self.quartic.isqrt()
    }

    /// x^k in double-double; exact powers of x⁴ are used when available.
    pub fn pow(&self, k: u32) -> Dd {
        if self.exact {
            let t = Dd::from_u128(self.quartic);
            let base = t.powi(k / 4);
            match k % 4 {
                0 => base,
                2 => base * t.sqrt(),
                1 => base * t.sqrt().sqrt(),
                _ => base * t.sqrt() * t.sqrt().sqrt(),
            }
        } else {
            Dd::from_f64(self.x).powi(k)
        }
    }
}

/// vol(𝓑) = (π^q/Γ(q))·B(q/2, 3/2), as an exact multiple of a power of π.
///
/// In polar coordinates on R^{2q} the ball is |w| ≤ √(1 − r⁴), so
/// vol = (2π^q/Γ(q)) ∫₀¹ r^{2q−1}·2√(1−r⁴) dr, and u = r⁴ turns the
/// integral into B(q/2, 3/2)/4.
pub fn ball_volume_exact(q: Q) -> Result<PiRational> {
    let pi_q = PiRational::new(1, 1, 2 * q.get());
    let gamma_q = gamma_half(2 * q.get())?;
    let beta = beta_half(q.get(), 3)?;
    pi_q.checked_div(gamma_q)
        .and_then(|r| r.checked_mul(beta))
        .ok_or(Error::Overflow("ball volume"))
}

pub fn ball_volume(q: Q) -> f64 {
    ball_volume_dd(q).to_f64()
}

pub fn ball_volume_dd(q: Q) -> Dd {
    ball_volume_exact(q)
        .expect("q ≤ Q::MAX keeps the volume in range")
        .to_dd()
}

/// The radial integral (2π^q/Γ(q))∫₀¹ 2 r^{2q−1}√(1−r⁴) dr by adaptive quadrature.
pub fn ball_volume_quadrature(q: Q) -> Result<f64> {
    let k = 2 * q.get() as i32 - 1;
    let radial = integrate(
        |r| 2.0 * r.powi(k) * (1.0 - r.powi(4)).max(0.0).sqrt(),
        0.0,
        1.0,
        1e-16,
        1e-14,
        20_000,
    )?;
    let sphere = 2.0 * PiRational::new(1, 1, 2 * q.get()).to_f64()
        / gamma_half(2 * q.get())?.to_f64();
    Ok(sphere * radial.value)
}

/// Visits non-negative vectors of length `dims` with Σz² ≤ `radius_sq`,
/// reporting (Σz², number of sign patterns).
fn for_each_orthant_vector<F: FnMut(u64, u64)>(dims: usize, radius_sq: u64, f: &mut F) {
    fn rec<F: FnMut(u64, u64)>(left: usize, rem: u64, acc: u64, mult: u64, f: &mut F) {
        if left == 0 {
            f(acc, mult);
            return;
        }
        let mut z = 0u64;
        while z * z <= rem {
            let m = if z == 0 { mult } else { 2 * mult };
            rec(left - 1, rem - z * z, acc + z * z, m, f);
            z += 1;
        }
    }
    rec(dims, radius_sq, 0, 1, f);
}

/// Default ceiling on (vector, w) pairs inspected by the brute-force oracle.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 20_000_000_000;

fn orthant_work(q: Q, radius_sq: u64) -> u64 {
    let mut visited = 0u64;
    for_each_orthant_vector(2 * q.get() as usize, radius_sq, &mut |_, _| visited += 1);
    visited
}

/// |Z^{2q+1} ∩ δ_x𝓑| by direct enumeration. Sign symmetry of v is used to
/// visit one orthant; every w is tested individually.
pub fn brute_force_count(q: Q, x: Dilation) -> Result<u128> {
    brute_force_count_with_budget(q, x, DEFAULT_ENUMERATION_BUDGET)
}

pub fn brute_force_count_with_budget(q: Q, x: Dilation, budget: u64) -> Result<u128> {
    let x4 = x.quartic();
    let r = x4.isqrt();
    let r_u64 = u64::try_from(r).map_err(|_| Error::Range { budget })?;
    let width = 2 * r_u64 + 1;
    if orthant_work(q, r_u64).saturating_mul(width) > budget {
        return Err(Error::Range { budget });
    }
    let dims = 2 * q.get() as usize;
    // Split on the first coordinate so the work can run in parallel.
    let total: u128 = (0..=r_u64.isqrt())
        .into_par_iter()
        .map(|z0| {
            let mut count = 0u128;
            let head = z0 * z0;
            let head_mult = if z0 == 0 { 1 } else { 2 };
            for_each_orthant_vector(dims - 1, r_u64 - head, &mut |s, mult| {
                let s = (s + head) as u128;
                let mut inside = 0u128;
                for w in -(r as i128)..=(r as i128) {
                    if s * s + (w * w) as u128 <= x4 {
                        inside += 1;
                    }
                }
                count += inside * (mult * head_mult) as u128;
            });
            count
        })
        .sum();
    Ok(total)
}

/// Brute-force counts for every t = x⁴ in 0..=t_max at once: each lattice
/// point is tallied at its key |v|⁴ + w², then keys are accumulated.
pub fn brute_force_counts_upto(q: Q, t_max: u64, budget: u64) -> Result<Vec<u128>> {
    let r = t_max.isqrt();
    let width = 2 * r + 1;
    if orthant_work(q, r).saturating_mul(width) > budget {
        return Err(Error::Range { budget });
    }
    let dims = 2 * q.get() as usize;
    let len = t_max as usize + 1;
    let histograms: Vec<Vec<u128>> = (0..=r.isqrt())
        .into_par_iter()
        .map(|z0| {
            let mut hist = vec![0u128; len];
            let head = z0 * z0;
            let head_mult = if z0 == 0 { 1 } else { 2 };
            for_each_orthant_vector(dims - 1, r - head, &mut |s, mult| {
                let s = s + head;
                for w in -(r as i64)..=(r as i64) {
                    let key = s * s + (w * w) as u64;
                    if key <= t_max {
                        hist[key as usize] += (mult * head_mult) as u128;
                    }
                }
            });
            hist
        })
        .collect();
    let mut counts = vec![0u128; len];
    let mut acc = 0u128;
    for (t, slot) in counts.iter_mut().enumerate() {
        acc += histograms.iter().map(|h| h[t]).sum::<u128>();
        *slot = acc;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn q(n: u32) -> Q {
        Q::new(n).unwrap()
    }

    fn e1(q: usize) -> Vec<i64> {
        let mut v = vec![0; 2 * q];
        v[0] = 1;
        v
    }

    #[test]
    fn norm_examples() {
        let p = HeisenbergPoint::new(q(3), vec![0; 6], 1).unwrap();
        assert_eq!(p.ck_norm(), 1.0);
        let p = HeisenbergPoint::new(q(3), e1(3), 1).unwrap();
        assert!((p.ck_norm() - 2f64.powf(0.25)).abs() < 1e-15);
        let p = HeisenbergPoint::new(q(3), e1(3), 0).unwrap();
        assert_eq!(p.ck_norm(), 1.0);
        assert!(HeisenbergPoint::new(q(3), vec![0; 5], 0).is_err());
    }

    #[test]
    fn volume_closed_form() {
        // The radial integral gives π⁴/16 for q = 3 and 2π⁴/45 for q = 4.
        assert!((ball_volume(q(3)) - PI.powi(4) / 16.0).abs() < 1e-14);
        assert!((ball_volume(q(4)) - 2.0 * PI.powi(4) / 45.0).abs() < 1e-14);
        for n in 3..=8 {
            let exact = ball_volume(q(n));
            let quad = ball_volume_quadrature(q(n)).unwrap();
            assert!((exact - quad).abs() / exact < 1e-11, "q = {n}: {exact} vs {quad}");
        }
    }

    #[test]
    fn small_counts() {
        assert_eq!(brute_force_count(q(3), Dilation::from_real(1.0).unwrap()).unwrap(), 15);
        assert_eq!(brute_force_count(q(3), Dilation::from_real(0.5).unwrap()).unwrap(), 1);
        let batch = brute_force_counts_upto(q(3), 16, u64::MAX).unwrap();
        for t in 0..=16 {
            let single = brute_force_count(q(3), Dilation::from_quartic(t)).unwrap();
            assert_eq!(batch[t as usize], single, "t = {t}");
        }
    }

    #[test]
    fn budget_is_enforced() {
        let r = brute_force_count_with_budget(q(5), Dilation::from_quartic(1296), 1000);
        assert!(matches!(r, Err(Error::Range { .. })));
    }

    #[test]
    fn dilation_snaps_quartic_roots() {
        for t in 1..5000u64 {
            let d = Dilation::from_real((t as f64).sqrt().sqrt()).unwrap();
            assert!(d.is_exact());
            assert_eq!(d.quartic(), t as u128);
            let s = Dilation::from_square((t as f64).sqrt()).unwrap();
            assert_eq!(s.quartic(), t as u128);
        }
        let d = Dilation::from_real(0.9).unwrap();
        assert_eq!(d.quartic(), 0);
        assert!(!d.is_exact());
    }

    #[test]
    fn counts_are_monotone() {
        let counts = brute_force_counts_upto(q(4), 300, u64::MAX).unwrap();
        assert!(counts.windows(2).all(|w| w[0] <= w[1]));
    }

    proptest! {
        #[test]
        fn homogeneity(v in prop::collection::vec(-50i64..50, 6), w in -2000i64..2000,
                       num in 1u32..40, den in 1u32..40) {
            let p = HeisenbergPoint::new(q(3), v, w).unwrap();
            let x = num as f64 / den as f64;
            let (dv, dw) = p.dilate(x);
            let lhs = ck_norm_real(&dv, dw);
            let rhs = x * p.ck_norm();
            prop_assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * rhs.max(f64::MIN_POSITIVE));
        }

        #[test]
        fn subadditivity(a in prop::collection::vec(-30i64..30, 6), aw in -900i64..900,
                         b in prop::collection::vec(-30i64..30, 6), bw in -900i64..900) {
            let p = HeisenbergPoint::new(q(3), a, aw).unwrap();
            let r = HeisenbergPoint::new(q(3), b, bw).unwrap();
            let lhs = p.compose(&r).ck_norm();
            prop_assert!(lhs <= p.ck_norm() + r.ck_norm() + 1e-12);
        }
    }
}
