//! Trigonometric machinery: Vaaler's polynomials, the ψ- and exponential
//! sums over the slicing profile, the three B-process identities, the
//! coefficient tables and the approximate expressions for 𝓔_q built on them.

mod approx;
mod coeffs;
mod sums;
mod vaaler;

pub use approx::{approx_error, trivial_chain, ApproxMode, Approximation, HPolicy};
pub use coeffs::{coeff_asymptotic_residuals, CoeffTable, Coeffs, CoeffAsymptoticResidual};
pub use sums::{
    bprocess_lhs, bprocess_normalizer, bprocess_rhs, psi_sum, BKind, Periodic, ProfileArg,
    ProfilePhase, SumVariant, Weight,
};
pub use vaaler::{tau, tau_star, VaalerPoly};

/// 𝔣(t) = √(1 − t²).
pub fn profile(t: f64) -> f64 {
    (1.0 - t * t).max(0.0).sqrt()
}

/// 𝔤(t) = (1 − t²)^{(q−1)/2}.
pub fn weight_g(q: crate::Q, t: f64) -> f64 {
    let s = (1.0 - t * t).max(0.0);
    let k = q.get() - 1;
    let half = s.sqrt();
    s.powi((k / 2) as i32) * if k % 2 == 1 { half } else { 1.0 }
}

/// ĝ(t) = t^{q−1}.
pub fn weight_g_hat(q: crate::Q, t: f64) -> f64 {
    t.powi(q.get() as i32 - 1)
}
