use std::f64::consts::PI;

/// τ(t) = t(1−t)cot(πt) + t/π on (0,1); τ(0) = 1/π by continuity.
pub fn tau(t: f64) -> f64 {
    if t < 1e-3 {
        // cot(πt) = 1/(πt) − πt/3 − (πt)³/45 − 2(πt)⁵/945 − …
        let u = PI * t;
        let tail = u / 3.0 + u.powi(3) / 45.0 + 2.0 * u.powi(5) / 945.0;
        1.0 / PI - t * (1.0 - t) * tail
    } else {
        t * (1.0 - t) / (PI * t).tan() + t / PI
    }
}

/// τ*(t) = t(1−t).
pub fn tau_star(t: f64) -> f64 {
    t * (1.0 - t)
}

/// The pair ψ_H, ψ*_H of degree [H].
#[derive(Clone, Debug)]
pub struct VaalerPoly {
    h: f64,
    coef: Vec<f64>,
    coef_star: Vec<f64>,
}

impl VaalerPoly {
    pub fn new(h: f64) -> crate::Result<VaalerPoly> {
        if !(h.is_finite() && h >= 1.0) {
            return Err(crate::Error::InvalidArgument(format!("H must be ≥ 1, got {h}")));
        }
        let n = h.floor() as usize;
        let denom = (n + 1) as f64;
        let coef = (1..=n).map(|k| tau(k as f64 / denom)).collect();
        let coef_star = (1..=n).map(|k| tau_star(k as f64 / denom)).collect();
        Ok(VaalerPoly { h, coef, coef_star })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// [H].
    pub fn degree(&self) -> usize {
        self.coef.len()
    }

    /// τ(h/([H]+1)) for h = 1..=[H].
    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }

    pub fn star_coefficients(&self) -> &[f64] {
        &self.coef_star
    }

    /// ψ_H(ω) = Σ τ(h/([H]+1)) h⁻¹ sin(−2πhω).
    pub fn psi(&self, omega: f64) -> f64 {
        let r = omega - omega.floor();
        self.coef
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = (i + 1) as f64;
                c / k * (-2.0 * PI * (k * r).fract()).sin()
            })
            .sum()
    }

    /// ψ*_H(ω) = Σ τ*(h/([H]+1)) h⁻¹ cos(−2πhω).
    pub fn psi_star(&self, omega: f64) -> f64 {
        let r = omega - omega.floor();
        self.coef_star
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = (i + 1) as f64;
                c / k * (2.0 * PI * (k * r).fract()).cos()
            })
            .sum()
    }

    /// 1/(2[H]+2), the constant in the majorant.
    pub fn slack(&self) -> f64 {
        1.0 / (2.0 * self.degree() as f64 + 2.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::sawtooth;
    use proptest::prelude::*;

    #[test]
    fn tau_at_half_and_origin() {
        assert!((tau(0.5) - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((tau(1e-9) - 1.0 / PI).abs() < 1e-8);
        // series branch meets the closed form at the switch point
        let t = 1e-3;
        let closed = t * (1.0 - t) / (PI * t).tan() + t / PI;
        assert!((tau(t * (1.0 - 1e-12)) - closed).abs() < 1e-13);
    }

    #[test]
    fn psi_h_vanishes_at_zero() {
        let v = VaalerPoly::new(10.0).unwrap();
        assert_eq!(v.psi(0.0), 0.0);
    }

    #[test]
    fn majorant_is_fejer_kernel() {
        // ψ*_H + 1/(2N+2) equals the Fejér kernel of order N divided by 2N+2.
        let v = VaalerPoly::new(7.5).unwrap();
        let n = 7.0;
        for &w in &[0.013, 0.21, 0.5, 0.77] {
            let s: f64 = (PI * (n + 1.0) * w).sin() / (PI * w).sin();
            let fejer = s * s / (n + 1.0);
            assert!((v.psi_star(w) + v.slack() - fejer / (2.0 * n + 2.0)).abs() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn psi_h_is_odd_and_star_even(w in -5.0f64..5.0, h in 1.0f64..60.0) {
            let v = VaalerPoly::new(h).unwrap();
            prop_assert!((v.psi(w) + v.psi(-w)).abs() < 1e-12);
            prop_assert!((v.psi_star(w) - v.psi_star(-w)).abs() < 1e-12);
        }

        #[test]
        fn vaaler_inequality(w in -3.0f64..3.0, h in prop::sample::select(vec![3.0, 10.0, 100.0])) {
            let v = VaalerPoly::new(h).unwrap();
            prop_assert!((sawtooth(w) - v.psi(w)).abs() <= v.psi_star(w) + v.slack() + 1e-12);
        }

        #[test]
        fn tau_star_in_range(t in 0.0f64..1.0) {
            prop_assert!((0.0..=0.25).contains(&tau_star(t)));
        }
    }
}
