//! Elementary and special functions used throughout the crate.
//!
//! `sin_pi`/`cos_pi` reduce their argument before multiplying by π so that
//! integer arguments give exact zeros; the Nyquist checks rely on this.

use num_complex::Complex64;
use statrs::function::erf;
use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

/// `sin(πx)` with exact zeros at the integers.
pub fn sin_pi(x: f64) -> f64 {
    if !x.is_finite() {
        return f64::NAN;
    }
    // r in [-1, 1], sin(πx) = sin(πr)
    let r = x - 2.0 * (0.5 * x).round();
    let s = if r > 0.5 {
        (PI * (1.0 - r)).sin()
    } else if r < -0.5 {
        -(PI * (1.0 + r)).sin()
    } else {
        (PI * r).sin()
    };
    if r == 0.0 || r.abs() == 1.0 {
        0.0
    } else {
        s
    }
}

/// `cos(πx)` with exact zeros at the half-integers.
pub fn cos_pi(x: f64) -> f64 {
    if !x.is_finite() {
        return f64::NAN;
    }
    let r = (x - 2.0 * (0.5 * x).round()).abs();
    if r == 0.5 {
        0.0
    } else if r <= 0.25 {
        (PI * r).cos()
    } else if r <= 0.75 {
        (PI * (0.5 - r)).sin()
    } else {
        -(PI * (1.0 - r)).cos()
    }
}

/// Normalized sinc, `sin(πx)/(πx)`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        let y = PI * x;
        1.0 - y * y / 6.0
    } else {
        sin_pi(x) / (PI * x)
    }
}

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 0.0;
    }
    if x == f64::NEG_INFINITY {
        return 1.0;
    }
    0.5 * libm::erfc(x / SQRT_2)
}

/// Inverse of [`q_function`] on `(0, 1)`.
///
/// Starts from the inverse complementary error function and applies Newton
/// steps on `Q` directly, which brings the relative error of the argument
/// well below 1e-12 in the range used here.
pub fn q_inverse(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::INFINITY;
    }
    if p >= 1.0 {
        return f64::NEG_INFINITY;
    }
    let mut x = SQRT_2 * erf::erfc_inv(2.0 * p);
    for _ in 0..3 {
        let pdf = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
        if pdf == 0.0 {
            break;
        }
        let step = (q_function(x) - p) / pdf;
        x += step;
        if step.abs() <= 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// Sine integral `Si(x) = ∫_0^x sin(t)/t dt`.
pub fn sine_integral(x: f64) -> f64 {
    if x < 0.0 {
        return -sine_integral(-x);
    }
    if x <= 4.0 {
        // power series; terms alternate and shrink quickly for x ≤ 4
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        let mut k = 1.0;
        loop {
            term *= -x2 / ((2.0 * k) * (2.0 * k + 1.0));
            let add = term / (2.0 * k + 1.0);
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
            k += 1.0;
        }
        sum
    } else {
        FRAC_PI_2 - sine_integral_complement(x)
    }
}

/// `π/2 − Si(x)` for `x > 0`, computed without cancellation for large `x`.
pub fn sine_integral_complement(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x <= 4.0 {
        return FRAC_PI_2 - sine_integral(x);
    }
    // E1(ix) = -Ci(x) + i(Si(x) - π/2); modified Lentz on the continued
    // fraction E1(z) = e^{-z} / (z + 1 - 1/(z + 3 - 4/(z + 5 - ...))).
    let z = Complex64::new(0.0, x);
    let tiny = 1e-300;
    let mut b = z + 1.0;
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = Complex64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 1..10_000 {
        let fi = i as f64;
        let a = -fi * fi;
        b += 2.0;
        d = Complex64::new(1.0, 0.0) / (d * a + b);
        c = b + Complex64::new(a, 0.0) / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    let e1 = h * Complex64::new(x.cos(), -x.sin());
    -e1.im
}

/// `∫_T^∞ cos(λt)/t² dt` for `T > 0`.
pub fn cos_over_t2_tail(lambda: f64, t: f64) -> f64 {
    let lambda = lambda.abs();
    if lambda == 0.0 {
        return 1.0 / t;
    }
    // integration by parts: cos(λT)/T − λ ∫_T^∞ sin(λt)/t dt
    (lambda * t).cos() / t - lambda * sine_integral_complement(lambda * t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sin_pi_is_exact_at_integers() {
        for k in -50..=50 {
            assert_eq!(sin_pi(k as f64), 0.0);
        }
        assert!((sin_pi(0.5) - 1.0).abs() < 1e-16);
        assert!((sin_pi(-2.5) + 1.0).abs() < 1e-16);
        assert!((sin_pi(0.3) - (0.3 * PI).sin()).abs() < 1e-15);
    }

    #[test]
    fn cos_pi_matches_std() {
        for i in -400..400 {
            let x = i as f64 * 0.0137;
            assert!((cos_pi(x) - (PI * x).cos()).abs() < 1e-14, "x={x}");
        }
        assert_eq!(cos_pi(0.5), 0.0);
        assert_eq!(cos_pi(-7.5), 0.0);
    }

    #[test]
    fn sinc_values() {
        assert_eq!(sinc(0.0), 1.0);
        assert_eq!(sinc(3.0), 0.0);
        assert!((sinc(0.5) - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn q_function_reference_points() {
        assert_eq!(q_function(0.0), 0.5);
        // Q(4.753424308822899) = 1e-6
        assert!((q_function(4.753424308822899) / 1e-6 - 1.0).abs() < 1e-12);
        assert!((q_function(-1.0) - (1.0 - q_function(1.0))).abs() < 1e-15);
    }

    #[test]
    fn q_inverse_round_trips() {
        for &p in &[0.4, 0.1, 1e-2, 1e-3, 1e-6, 7.5e-7, 1e-12] {
            let x = q_inverse(p);
            assert!((q_function(x) / p - 1.0).abs() < 1e-12, "p={p}");
        }
        assert!((q_inverse(1e-6) - 4.753424308822899).abs() < 1e-11);
    }

    #[test]
    fn sine_integral_reference_values() {
        // Abramowitz & Stegun table 5.1
        assert!((sine_integral(1.0) - 0.946_083_070_367_183).abs() < 1e-14);
        assert!((sine_integral(5.0) - 1.549_931_244_944_674).abs() < 1e-13);
        assert!((sine_integral(10.0) - 1.658_347_594_218_874).abs() < 1e-13);
        assert!((sine_integral_complement(1e4) - (1e4f64).cos() / 1e4).abs() < 1e-7);
    }

    #[test]
    fn cosine_tail_matches_quadrature() {
        // crude midpoint reference on a long interval with a 1/T² remainder
        let lambda: f64 = 0.7;
        let t0 = 3.0;
        let h = 1e-3;
        let mut acc = 0.0;
        let mut t = t0 + 0.5 * h;
        while t < 4000.0 {
            acc += (lambda * t).cos() / (t * t) * h;
            t += h;
        }
        assert!((acc - cos_over_t2_tail(lambda, t0)).abs() < 2e-6);
        assert_eq!(cos_over_t2_tail(0.0, 4.0), 0.25);
    }
}
