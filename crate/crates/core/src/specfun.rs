//! Self-contained special functions used by the device and network formulas.
//!
//! Only the real-argument regimes that the circuit derivations exercise are
//! implemented: the complete elliptic integral of the first kind in the
//! *parameter* convention K(m) for m < 1 (negative parameters included), the
//! modified Bessel function K0 on (0, ∞), generalized Laguerre polynomials
//! for x ≥ 0, and log-factorials. Everything is deterministic: identical
//! inputs give bit-identical outputs.

use crate::error::{CoreError, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Tolerances for the iterative evaluations.
#[derive(Debug, Clone, Copy)]
pub struct PrecisionPolicy {
    /// Relative tolerance for series/iteration termination.
    pub rel_tol: f64,
    /// Hard cap on series terms or iterations.
    pub max_terms: usize,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        Self { rel_tol: 1e-12, max_terms: 200 }
    }
}

impl PrecisionPolicy {
    pub fn new(rel_tol: f64, max_terms: usize) -> Result<Self> {
        if !(rel_tol > 0.0) {
            return Err(CoreError::Argument(format!("rel_tol must be > 0, got {rel_tol}")));
        }
        if max_terms == 0 {
            return Err(CoreError::Argument("max_terms must be >= 1".into()));
        }
        Ok(Self { rel_tol, max_terms })
    }
}

/// Complete elliptic integral of the first kind in the parameter convention,
/// K(m) = ∫₀^{π/2} dθ (1 − m sin²θ)^{−1/2}, for m < 1.
///
/// Negative parameters are allowed; they arise from the capacitance closed
/// form where the argument is −16ξ²/(8+ξ⁻²) for every ξ > 0. Evaluated by
/// the arithmetic–geometric mean, K(m) = π / (2 AGM(1, √(1−m))).
pub fn elliptic_k(m: f64) -> Result<f64> {
    elliptic_k_with(m, PrecisionPolicy::default())
}

pub fn elliptic_k_with(m: f64, policy: PrecisionPolicy) -> Result<f64> {
    if !m.is_finite() || m >= 1.0 {
        return Err(CoreError::Domain {
            func: "elliptic_k",
            msg: format!("parameter must satisfy m < 1, got {m}"),
        });
    }
    let mut a = 1.0_f64;
    let mut b = (1.0 - m).sqrt();
    for _ in 0..policy.max_terms {
        if (a - b).abs() <= policy.rel_tol * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    Ok(std::f64::consts::FRAC_PI_2 / a)
}

/// Modified Bessel function of the second kind, order zero, for x > 0.
///
/// Power series for x ≤ 2; for x > 2 the integral representation
/// K0(x) = ∫₀^∞ e^{−x cosh t} dt evaluated by the trapezoid rule, which
/// converges geometrically for this integrand. The crossover agreement is
/// checked to 1e-10 in the tests.
pub fn bessel_k0(x: f64) -> Result<f64> {
    bessel_k0_with(x, PrecisionPolicy::default())
}

pub fn bessel_k0_with(x: f64, policy: PrecisionPolicy) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(CoreError::Domain {
            func: "bessel_k0",
            msg: format!("argument must be > 0, got {x}"),
        });
    }
    if x <= 2.0 {
        // K0 = -(ln(x/2)+γ) I0(x) + Σ_{k≥1} H_k (x²/4)^k / (k!)²
        let q = 0.25 * x * x;
        let mut i0 = 1.0;
        let mut term = 1.0;
        let mut harmonic = 0.0;
        let mut sum = 0.0;
        for k in 1..=policy.max_terms {
            term *= q / ((k * k) as f64);
            harmonic += 1.0 / k as f64;
            i0 += term;
            let s = term * harmonic;
            sum += s;
            if s.abs() <= policy.rel_tol * sum.abs() && term <= policy.rel_tol {
                break;
            }
        }
        Ok(-((0.5 * x).ln() + EULER_GAMMA) * i0 + sum)
    } else {
        // Trapezoid on e^{-x cosh t}: integrand is even in t with f'(0)=0 and
        // decays double-exponentially, so a fixed small step reaches machine
        // precision quickly.
        let h = 0.05_f64;
        let mut sum = 0.5 * (-x).exp();
        let mut j = 1usize;
        loop {
            let t = h * j as f64;
            let f = (-x * t.cosh()).exp();
            sum += f;
            if f < 1e-18 * sum || j > 20_000 {
                break;
            }
            j += 1;
        }
        Ok(h * sum)
    }
}

/// Generalized Laguerre polynomial L_n^{(b)}(x) by upward recurrence in n.
///
/// The recurrence is stable for x ≥ 0, the only regime the oscillator-basis
/// matrix elements use.
pub fn laguerre(n: u32, b: u32, x: f64) -> f64 {
    let alpha = b as f64;
    if n == 0 {
        return 1.0;
    }
    let mut lm1 = 1.0; // L_0
    let mut l = 1.0 + alpha - x; // L_1
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * l - (kf + alpha) * lm1) / (kf + 1.0);
        lm1 = l;
        l = next;
    }
    l
}

/// ln(n!), by direct summation of logarithms.
pub fn log_factorial(n: u32) -> f64 {
    let mut acc = 0.0;
    for k in 2..=n as u64 {
        acc += (k as f64).ln();
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Independent oracle: K(m) by midpoint quadrature of the defining integral.
    fn elliptic_k_quadrature(m: f64, n: usize) -> f64 {
        let h = std::f64::consts::FRAC_PI_2 / n as f64;
        (0..n)
            .map(|i| {
                let theta = (i as f64 + 0.5) * h;
                let s = theta.sin();
                h / (1.0 - m * s * s).sqrt()
            })
            .sum()
    }

    #[test]
    fn elliptic_k_at_zero_is_half_pi() {
        assert!((elliptic_k(0.0).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn elliptic_k_frozen_values() {
        // AGM oracle value, frozen.
        assert!((elliptic_k(0.5).unwrap() - 1.854_074_677_301_372).abs() < 1e-12);
        // Numerical-quadrature oracle value, frozen; cross-checked live below.
        let k_m1 = elliptic_k(-1.0).unwrap();
        assert!((k_m1 - 1.311_028_777_146_06).abs() < 1e-11);
        assert!((k_m1 - elliptic_k_quadrature(-1.0, 40_000)).abs() < 1e-8);
    }

    #[test]
    fn elliptic_k_rejects_parameter_at_or_above_one() {
        assert!(elliptic_k(1.0).is_err());
        assert!(elliptic_k(1.5).is_err());
    }

    #[test]
    fn elliptic_k_increasing_and_divergent_towards_one() {
        let k0 = elliptic_k(0.0).unwrap();
        let k99 = elliptic_k(0.99).unwrap();
        let k999 = elliptic_k(0.999).unwrap();
        assert!(k999 > k99 && k99 > k0);
    }

    // Oracle: K0 via the integral representation with a finer step.
    fn bessel_k0_quadrature(x: f64) -> f64 {
        let h = 0.002;
        let mut sum = 0.5 * (-x).exp();
        let mut j = 1;
        loop {
            let t = h * j as f64;
            let f = (-x * t.cosh()).exp();
            sum += f;
            if f < 1e-20 * sum {
                break;
            }
            j += 1;
        }
        h * sum
    }

    #[test]
    fn bessel_k0_frozen_value_at_one() {
        let v = bessel_k0(1.0).unwrap();
        assert!((v - 0.421_024_438_240_708_3).abs() < 1e-12, "got {v}");
        assert!((v - bessel_k0_quadrature(1.0)).abs() < 1e-12);
    }

    #[test]
    fn bessel_k0_small_argument_log_form() {
        // k0(x) + ln(x/2) + γ → 0 as x → 0⁺
        for &x in &[1e-3, 1e-4, 1e-5] {
            let resid = bessel_k0(x).unwrap() + (0.5 * x).ln() + EULER_GAMMA;
            assert!(resid.abs() < 5.0 * x * x * (1.0 + (1.0 / x).ln()), "x={x} resid={resid}");
        }
    }

    #[test]
    fn bessel_k0_matches_asymptotic_series_at_ten() {
        let x = 10.0_f64;
        let asym = (-x).exp() * (std::f64::consts::PI / (2.0 * x)).sqrt() * (1.0 - 1.0 / (8.0 * x));
        let v = bessel_k0(x).unwrap();
        assert!((v - asym).abs() / v < 2e-3);
    }

    #[test]
    fn bessel_k0_crossover_consistency() {
        // Series and quadrature branches agree at the x = 2 crossover.
        let series = bessel_k0(2.0).unwrap();
        let quad = bessel_k0_quadrature(2.0);
        assert!((series - quad).abs() / quad < 1e-10, "series={series} quad={quad}");
    }

    #[test]
    fn bessel_k0_rejects_nonpositive() {
        assert!(bessel_k0(0.0).is_err());
        assert!(bessel_k0(-1.0).is_err());
    }

    #[test]
    fn bessel_k0_decreasing_positive() {
        let xs = [0.1, 0.5, 1.0, 2.0, 3.0, 5.0, 8.0, 15.0];
        for w in xs.windows(2) {
            let a = bessel_k0(w[0]).unwrap();
            let b = bessel_k0(w[1]).unwrap();
            assert!(a > b && b > 0.0);
        }
    }

    // Oracle: explicit coefficient expansion L_n^{(b)}(x) = Σ_k (-1)^k C(n+b, n-k) x^k / k!
    fn laguerre_coefficients(n: u32, b: u32, x: f64) -> f64 {
        let mut acc = 0.0;
        for k in 0..=n {
            let mut ln_binom = log_factorial(n + b)
                - log_factorial(n - k)
                - log_factorial(b + k);
            ln_binom -= log_factorial(k);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * ln_binom.exp() * x.powi(k as i32);
        }
        acc
    }

    #[test]
    fn laguerre_base_cases() {
        assert_eq!(laguerre(0, 7, 3.2), 1.0);
        assert!((laguerre(1, 2, 0.5) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn laguerre_matches_coefficient_oracle() {
        let rec = laguerre(3, 2, 1.0);
        let exp = laguerre_coefficients(3, 2, 1.0);
        assert!((rec - exp).abs() < 1e-12 * exp.abs().max(1.0), "rec={rec} exp={exp}");
    }

    #[test]
    fn log_factorial_values() {
        assert_eq!(log_factorial(0), 0.0);
        assert_eq!(log_factorial(1), 0.0);
        let exact = 2_432_902_008_176_640_000_u64; // 20!
        assert!((log_factorial(20) - (exact as f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn deterministic_outputs() {
        for _ in 0..3 {
            assert_eq!(elliptic_k(-0.73).unwrap().to_bits(), elliptic_k(-0.73).unwrap().to_bits());
            assert_eq!(bessel_k0(2.31).unwrap().to_bits(), bessel_k0(2.31).unwrap().to_bits());
            assert_eq!(laguerre(17, 4, 9.25).to_bits(), laguerre(17, 4, 9.25).to_bits());
        }
    }

    proptest! {
        // (n+1)L_{n+1} - (2n+1+b-x)L_n + (n+b)L_{n-1} = 0
        #[test]
        fn laguerre_recurrence_residual(n in 1u32..50, b in 0u32..6, x in 0.0f64..20.0) {
            let lm1 = laguerre(n - 1, b, x);
            let l = laguerre(n, b, x);
            let lp1 = laguerre(n + 1, b, x);
            let nf = n as f64;
            let resid = (nf + 1.0) * lp1 - (2.0 * nf + 1.0 + b as f64 - x) * l + (nf + b as f64) * lm1;
            let scale = lp1.abs().max(l.abs()).max(lm1.abs()).max(1.0);
            prop_assert!(resid.abs() <= 1e-10 * scale);
        }

        #[test]
        fn elliptic_k_monotone(m1 in -30.0f64..0.9, dm in 1e-6f64..0.05) {
            let m2 = (m1 + dm).min(0.95);
            prop_assume!(m2 > m1);
            prop_assert!(elliptic_k(m2).unwrap() > elliptic_k(m1).unwrap());
        }
    }
}
