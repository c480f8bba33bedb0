//! Adaptive Gauss–Kronrod (7/15) quadrature with an absolute tolerance.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::ops::{Add, Mul, Sub};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Values that can be integrated: real or complex.
pub trait Integrand:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl Integrand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Integrand for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Result of an integration: value, error estimate and evaluation count.
#[derive(Debug, Clone, Copy)]
pub struct Quad<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

fn gk15<T: Integrand, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod = kronrod + s * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + s * WG[j / 2];
        }
    }
    let kronrod = kronrod * h;
    let gauss = gauss * h;
    let err = (kronrod - gauss).magnitude();
    (kronrod, err)
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Bisects the interval with the largest error estimate until the summed
/// estimate is below `tol` or `max_intervals` is exhausted.
pub fn integrate<T: Integrand, F: Fn(f64) -> T>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_intervals: usize,
) -> Result<Quad<T>> {
    let (v, e) = gk15(&f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    let mut evaluations = 15;
    loop {
        let (total_err, worst) = intervals.iter().enumerate().fold(
            (0.0, 0usize),
            |(sum, worst), (i, iv)| {
                let w = if iv.3 > intervals[worst].3 { i } else { worst };
                (sum + iv.3, w)
            },
        );
        if total_err <= tol {
            break;
        }
        if intervals.len() >= max_intervals {
            let value = intervals.iter().fold(T::zero(), |s, iv| s + iv.2);
            return Err(Error::Numerical {
                operation: "quadrature",
                detail: format!(
                    "no convergence on [{a}, {b}]: error estimate {total_err:.3e} > tol {tol:.3e} \
                     after {} subintervals (partial value magnitude {:.6e})",
                    intervals.len(),
                    value.magnitude()
                ),
            });
        }
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        evaluations += 30;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
    let value = intervals.iter().fold(T::zero(), |s, iv| s + iv.2);
    let error = intervals.iter().map(|iv| iv.3).sum();
    Ok(Quad {
        value,
        error,
        evaluations,
    })
}

/// Integrates over `[-half_width, half_width]` split into panels of width
/// `panel`, each refined adaptively; the tolerance is shared in proportion to
/// panel width.
pub fn integrate_panels<T: Integrand, F: Fn(f64) -> T>(
    f: F,
    half_width: f64,
    panel: f64,
    tol: f64,
) -> Result<Quad<T>> {
    let n = (2.0 * half_width / panel).ceil().max(1.0) as usize;
    let width = 2.0 * half_width / n as f64;
    let local_tol = tol / n as f64;
    let mut value = T::zero();
    let mut error = 0.0;
    let mut evaluations = 0;
    for i in 0..n {
        let a = -half_width + i as f64 * width;
        let b = if i + 1 == n { half_width } else { a + width };
        let q = integrate(&f, a, b, local_tol, 64)?;
        value = value + q.value;
        error += q.error;
        evaluations += q.evaluations;
    }
    Ok(Quad {
        value,
        error,
        evaluations,
    })
}
