//! Fourier transform, energy and autocorrelation by quadrature.
//!
//! The integrals run over the real line. The central part is integrated
//! adaptively; the `1/x²` part of the tail is integrated in closed form from
//! [`TailModel`](super::TailModel), and only the faster residual is truncated.

use super::PulseSpec;
use crate::error::{Error, Result};
use crate::quadrature::integrate_panels;
use crate::special::cos_over_t2_tail;
use num_complex::Complex64;
use std::f64::consts::PI;

const PANEL: f64 = 0.5;
const MAX_HALF_WIDTH: f64 = 1e6;

fn check_tol(tol: f64) -> Result<()> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("tolerance must be > 0, got {tol}")))
    }
}

fn snap(half_width: f64) -> Result<f64> {
    if !(half_width <= MAX_HALF_WIDTH) {
        return Err(Error::Numerical {
            operation: "truncation",
            detail: format!(
                "integration range ±{half_width:.3e} Ts exceeds ±{MAX_HALF_WIDTH:.0e} Ts; tolerance too tight"
            ),
        });
    }
    Ok((half_width / PANEL).ceil() * PANEL)
}

impl PulseSpec {
    /// Fourier transform `Q(ω) = ∫ q(t) e^{-iωt} dt`, with absolute error
    /// below `tol·Ts`.
    pub fn spectrum_at(&self, omega: f64, tol: f64) -> Result<Complex64> {
        check_tol(tol)?;
        let nu = omega * self.ts;
        let model = self.tail_model();
        let r = model.residual;
        let mut half = r.from.max(4.0);
        if r.coeff > 0.0 {
            let p = r.power as f64;
            let needed = (4.0 * r.coeff / ((p - 1.0) * tol)).powf(1.0 / (p - 1.0));
            half = half.max(needed);
        }
        let half = snap(half)?;

        let core = integrate_panels(
            |x: f64| Complex64::from_polar(self.eval_normalized(x), -nu * x),
            half,
            PANEL,
            0.5 * tol,
        )
        .map_err(|e| annotate(e, "spectrum_at", self, omega))?;

        let mut tail = Complex64::new(0.0, 0.0);
        for term in &model.terms {
            let w = 2.0 * PI * term.freq;
            let c1 = cos_over_t2_tail(w - nu, half);
            let c2 = cos_over_t2_tail(w + nu, half);
            tail += term.cos_amp * (c1 + c2);
            tail += Complex64::new(0.0, -term.sin_amp * (c1 - c2));
        }
        Ok((core.value + tail) * self.ts)
    }

    /// Pulse energy `∫ q²(t) dt`.
    pub fn energy(&self, tol: f64) -> Result<f64> {
        self.autocorrelation(0.0, tol)
    }

    /// `∫ q(t) q(t − τ) dt`, with absolute error below `tol·Ts`.
    pub fn autocorrelation(&self, tau: f64, tol: f64) -> Result<f64> {
        check_tol(tol)?;
        let s = tau / self.ts;
        let env = self.envelope();
        let p = env.power as f64;
        // |v(x) v(x−s)| ≤ C² / (|x| − |s|)^{2p} once |x| − |s| ≥ from
        let reach = (4.0 * env.coeff * env.coeff / ((2.0 * p - 1.0) * tol))
            .powf(1.0 / (2.0 * p - 1.0))
            .max(env.from);
        let half = snap(s.abs() + reach)?;
        let q = integrate_panels(
            |x: f64| self.eval_normalized(x) * self.eval_normalized(x - s),
            half,
            PANEL,
            0.5 * tol,
        )
        .map_err(|e| annotate(e, "autocorrelation", self, tau))?;
        Ok(q.value * self.ts)
    }

    /// `max |q(kTs)|` over `1 ≤ |k| ≤ k_max`.
    pub fn nyquist_residual(&self, k_max: u32) -> f64 {
        (1..=k_max)
            .map(|k| {
                let k = k as f64;
                self.eval_normalized(k).abs().max(self.eval_normalized(-k).abs())
            })
            .fold(0.0, f64::max)
    }
}

fn annotate(e: Error, op: &'static str, pulse: &PulseSpec, arg: f64) -> Error {
    match e {
        Error::Numerical { detail, .. } => Error::Numerical {
            operation: op,
            detail: format!("{} at argument {arg}: {detail}", pulse.label()),
        },
        other => other,
    }
}
