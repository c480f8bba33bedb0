//! Discrete-time matched filter.
//!
//! The filter `q(−t)` is truncated to `|t| ≤ W` and applied to the
//! oversampled signal with trapezoidal weights, so every output is
//! `h Σ' r(t_i + nh) q(nh)` with `h = Ts/rate`.

use crate::bias::{folded_signed_sum_with, Truncation};
use crate::error::{Error, Result};
use crate::pulse::PulseSpec;

/// Default filter half-length in symbol periods.
pub const DEFAULT_WINDOW: f64 = 512.5;

#[derive(Debug, Clone)]
pub struct MatchedFilter {
    pulse: PulseSpec,
    rate: usize,
    half_taps: i64,
    max_lag: i64,
    /// `q(mh)` for `|m| ≤ half_taps + max_lag`.
    samples: Vec<f64>,
}

impl MatchedFilter {
    /// Filter of half-length `window·Ts`, able to correlate at lags up to
    /// `max_lag` samples.
    pub fn new(pulse: &PulseSpec, rate: usize, window: f64, max_lag: usize) -> Result<Self> {
        if rate < 2 {
            return Err(Error::Domain(format!("oversampling rate must be ≥ 2, got {rate}")));
        }
        if !(window.is_finite() && window >= 1.0) {
            return Err(Error::Domain(format!("filter window must be ≥ 1 Ts, got {window}")));
        }
        let half_taps = (window * rate as f64).round() as i64;
        let max_lag = max_lag as i64;
        let reach = half_taps + max_lag;
        let h = 1.0 / rate as f64;
        let samples = (-reach..=reach)
            .map(|m| pulse.eval_normalized(m as f64 * h))
            .collect();
        Ok(MatchedFilter {
            pulse: *pulse,
            rate,
            half_taps,
            max_lag,
            samples,
        })
    }

    pub fn rate(&self) -> usize {
        self.rate
    }

    /// Effective half-length in symbol periods.
    pub fn window(&self) -> f64 {
        self.half_taps as f64 / self.rate as f64
    }

    pub fn max_lag(&self) -> usize {
        self.max_lag as usize
    }

    fn q(&self, m: i64) -> f64 {
        self.samples[(m + self.half_taps + self.max_lag) as usize]
    }

    fn weight(&self, n: i64) -> f64 {
        if n.abs() == self.half_taps {
            0.5
        } else {
            1.0
        }
    }

    /// Response to a constant unit input, approximating `Q(0)`.
    pub fn dc_gain(&self) -> f64 {
        let h = self.pulse.ts() / self.rate as f64;
        let s: f64 = (-self.half_taps..=self.half_taps)
            .map(|n| self.weight(n) * self.q(n))
            .sum();
        h * s
    }

    /// Output at time 0 for a pulse sent at time `−lag·h`, approximating the
    /// autocorrelation `∫ q(t) q(t + lag·h) dt`.
    pub fn correlation(&self, lag: i64) -> f64 {
        assert!(lag.abs() <= self.max_lag, "lag {lag} beyond table");
        let h = self.pulse.ts() / self.rate as f64;
        let s: f64 = (-self.half_taps..=self.half_taps)
            .map(|n| self.weight(n) * self.q(n + lag) * self.q(n))
            .sum();
        h * s
    }

    /// Output for a pulse at every symbol instant, `Σ_k corr(k·rate)`.
    /// Equals `q̄·dc_gain()` when `B·Ts ≤ 1`; otherwise the periodic sum is
    /// folded numerically at each sampling phase.
    pub fn periodic_response(&self) -> Result<f64> {
        let meta = self.pulse.metadata();
        if meta.b_ts <= 1.0 {
            return Ok(meta.q_bar * self.dc_gain());
        }
        let tr = Truncation::for_signed_sum(&self.pulse, 1e-10)?;
        let r = self.rate as i64;
        let sums: Vec<f64> = (0..r)
            .map(|i| folded_signed_sum_with(&self.pulse, i as f64 / r as f64 * self.pulse.ts(), tr))
            .collect();
        let h = self.pulse.ts() / self.rate as f64;
        let s: f64 = (-self.half_taps..=self.half_taps)
            .map(|n| self.weight(n) * self.q(n) * sums[n.rem_euclid(r) as usize])
            .sum();
        Ok(h * s)
    }

    /// Correlations at every symbol-spaced lag `k·rate`, `|k| ≤ k_max`,
    /// indexed by `k + k_max`.
    pub fn symbol_lags(&self, k_max: usize) -> Vec<f64> {
        let r = self.rate as i64;
        let k_max = k_max as i64;
        (-k_max..=k_max).map(|k| self.correlation(k * r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::PulseFamily;

    #[test]
    fn root_nyquist_levels() {
        let rrc = PulseSpec::new(PulseFamily::Rrc, 0.5).unwrap();
        let mf = MatchedFilter::new(&rrc, 32, DEFAULT_WINDOW, 5 * 32).unwrap();
        assert!((mf.correlation(0) - 1.0).abs() < 1e-6);
        assert!((mf.dc_gain() - 1.0).abs() < 1e-5);
        for k in 1..=5 {
            assert!(mf.correlation(32 * k).abs() < 1e-6);
            assert!(mf.correlation(-32 * k).abs() < 1e-6);
        }
    }

    #[test]
    fn non_orthogonal_pulse_shows_isi() {
        let rc = PulseSpec::new(PulseFamily::Rc, 0.4).unwrap();
        let mf = MatchedFilter::new(&rc, 16, 32.0, 16).unwrap();
        assert!(mf.correlation(16).abs() > 1e-3);
    }

    #[test]
    fn periodic_response_matches_a_long_lag_sum() {
        let src = PulseSpec::new(PulseFamily::Src, 0.6).unwrap();
        let mf = MatchedFilter::new(&src, 16, 64.0, 64 * 16).unwrap();
        let direct: f64 = mf.symbol_lags(64).iter().sum();
        assert!((mf.periodic_response().unwrap() - direct).abs() < 1e-6);
        let rc = PulseSpec::new(PulseFamily::Rc, 0.6).unwrap();
        let mf = MatchedFilter::new(&rc, 16, 64.0, 0).unwrap();
        assert_eq!(mf.periodic_response().unwrap(), mf.dc_gain());
    }

    #[test]
    fn window_is_rounded_to_the_grid() {
        let s2 = PulseSpec::new(PulseFamily::S2, 0.0).unwrap();
        let mf = MatchedFilter::new(&s2, 16, 10.0, 0).unwrap();
        assert_eq!(mf.window(), 10.0);
        assert!(MatchedFilter::new(&s2, 16, 0.5, 0).is_err());
    }
}
