//! Simulated link: AWGN, sampling or matched-filter receiver, nearest-level
//! detection, and analytic and Monte Carlo symbol error rates.
//!
//! Noise is added at the receiver samples with the exact post-filter
//! variance. The deterministic part of each sample comes from the pulse
//! itself (sampling receiver) or from discrete-time correlations
//! (matched-filter receiver).

use crate::bias::{folded_signed_sum, required_bias, BiasOptions};
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::matched::{MatchedFilter, DEFAULT_WINDOW};
use crate::pulse::PulseSpec;
use crate::special::{q_function, q_inverse};
use crate::waveform::{DEFAULT_RATE, MIN_RATE};
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Symbols per Monte Carlo block; each block has its own generator state.
pub const BLOCK: usize = 4096;
/// Blocks simulated between early-stopping checks.
const CHUNK: usize = 32;
/// Envelope level below which interference taps are dropped.
const ISI_LEVEL: f64 = 1e-6;
const ENERGY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReceiverKind {
    Sampling,
    Matched,
}

impl ReceiverKind {
    pub fn name(self) -> &'static str {
        match self {
            ReceiverKind::Sampling => "sampling",
            ReceiverKind::Matched => "matched",
        }
    }
}

impl fmt::Display for ReceiverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReceiverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sampling" => Ok(ReceiverKind::Sampling),
            "matched" | "matched-filter" | "mf" => Ok(ReceiverKind::Matched),
            _ => Err(Error::Domain(format!("unknown receiver '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkConfig {
    pub pulse: PulseSpec,
    pub constellation: Constellation,
    pub receiver: ReceiverKind,
    pub amp_a: f64,
    /// Noise density parameter; the two-sided density is `N0/2`.
    pub n0: f64,
    /// Sampling-filter gain `G(0)`.
    pub g0: f64,
    /// Matched-filter gain `ζ`.
    pub zeta: f64,
    pub rate: usize,
    pub seed: u64,
    /// Accept pulses without the ISI-free property for the chosen receiver.
    pub allow_isi: bool,
    /// Matched-filter half-length in symbol periods.
    pub window: f64,
}

impl LinkConfig {
    pub fn new(pulse: PulseSpec, constellation: Constellation, receiver: ReceiverKind) -> Self {
        LinkConfig {
            pulse,
            constellation,
            receiver,
            amp_a: 1.0,
            n0: 1.0,
            g0: 1.0,
            zeta: 1.0,
            rate: DEFAULT_RATE,
            seed: 0,
            allow_isi: false,
            window: DEFAULT_WINDOW,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amp_a.is_finite() && self.amp_a >= 0.0) {
            return Err(Error::Domain(format!("amplitude must be ≥ 0, got {}", self.amp_a)));
        }
        if !(self.n0.is_finite() && self.n0 >= 0.0) {
            return Err(Error::Domain(format!("N0 must be ≥ 0, got {}", self.n0)));
        }
        if !(self.g0.is_finite() && self.g0 > 0.0 && self.zeta.is_finite() && self.zeta > 0.0) {
            return Err(Error::Domain("receiver gains must be > 0".into()));
        }
        if self.rate < MIN_RATE {
            return Err(Error::Domain(format!(
                "oversampling rate must be ≥ {MIN_RATE}, got {}",
                self.rate
            )));
        }
        if !self.allow_isi {
            let fam = self.pulse.family();
            let ok = match self.receiver {
                ReceiverKind::Sampling => fam.is_nyquist(),
                ReceiverKind::Matched => fam.is_root_nyquist(),
            };
            if !ok {
                return Err(Error::Contract(format!(
                    "{} is not ISI-free with the {} receiver; set allow_isi to simulate it anyway",
                    self.pulse.label(),
                    self.receiver
                )));
            }
        }
        Ok(())
    }

    fn pulse_energy(&self) -> Result<f64> {
        match self.pulse.energy_closed_form() {
            Some(e) => Ok(e),
            None => self.pulse.energy(ENERGY_TOL),
        }
    }
}

/// Standard deviation of the noise at the receiver samples.
pub fn noise_sigma(config: &LinkConfig) -> Result<f64> {
    config.validate()?;
    Ok(match config.receiver {
        ReceiverKind::Sampling => config.g0 * (config.n0 * config.pulse.bandwidth()).sqrt(),
        ReceiverKind::Matched => config.zeta * (config.n0 * config.pulse_energy()? / 2.0).sqrt(),
    })
}

/// Closed-form symbol error rate for uniform M-PAM.
pub fn analytic_ser(config: &LinkConfig) -> Result<f64> {
    let c = &config.constellation;
    if !c.is_uniform_pam() {
        return Err(Error::Unsupported(format!(
            "closed-form SER needs equally spaced levels, got {}",
            c.label()
        )));
    }
    let m = c.m() as f64;
    let sigma = noise_sigma(config)?;
    let opening = eye_opening(config)?;
    let arg = if opening == 0.0 {
        0.0
    } else if sigma == 0.0 {
        f64::INFINITY
    } else {
        opening / (2.0 * sigma)
    };
    Ok(2.0 * (m - 1.0) / m * q_function(arg))
}

/// Noise-free distance between adjacent levels from the closed forms.
fn eye_opening(config: &LinkConfig) -> Result<f64> {
    let da = config.constellation.delta_a();
    Ok(match config.receiver {
        ReceiverKind::Sampling => {
            config.amp_a * config.g0 * da * config.pulse.metadata().q_zero
        }
        ReceiverKind::Matched => config.amp_a * config.zeta * da * config.pulse_energy()?,
    })
}

/// Amplitude `A` at which [`analytic_ser`] equals `p_err`.
pub fn amplitude_for_ser(config: &LinkConfig, p_err: f64) -> Result<f64> {
    let c = &config.constellation;
    let m = c.m() as f64;
    let p_max = (m - 1.0) / m;
    if !(p_err > 0.0 && p_err < p_max) {
        return Err(Error::Domain(format!(
            "target SER must lie in (0, {p_max}), got {p_err}"
        )));
    }
    let mut unit = config.clone();
    unit.amp_a = 1.0;
    let sigma = noise_sigma(&unit)?;
    let opening = eye_opening(&unit)?;
    if !c.is_uniform_pam() {
        return Err(Error::Unsupported("closed-form SER needs equally spaced levels".into()));
    }
    Ok(2.0 * sigma * q_inverse(p_err * m / (2.0 * (m - 1.0))) / opening)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SerEstimate {
    pub p_hat: f64,
    pub n_symbols: u64,
    pub n_errors: u64,
    /// Half-width of the normal-approximation 95% interval.
    pub ci95: f64,
    /// Closed form for the same configuration, when one exists.
    pub p_analytic: Option<f64>,
}

/// 95% half-width with `p` kept at least half a count away from 0 and 1.
pub fn binomial_ci95(errors: u64, n: u64) -> f64 {
    let n = n as f64;
    let guard = 0.5 / n;
    let p = (errors as f64 / n).clamp(guard, 1.0 - guard);
    1.96 * (p * (1.0 - p) / n).sqrt()
}

/// A validated link with its bias, interference taps and detector levels.
#[derive(Debug, Clone)]
pub struct Link {
    config: LinkConfig,
    mu: f64,
    sigma: f64,
    /// Sample value with every symbol at the lowest level.
    base: f64,
    /// Gain applied to `a_i − ǎ` for the current symbol.
    centre: f64,
    /// `(offset, gain)` for neighbouring symbols `a_{i−offset} − ǎ`.
    taps: Vec<(i64, f64)>,
    levels: Vec<f64>,
    thresholds: Vec<f64>,
}

impl Link {
    pub fn new(config: LinkConfig) -> Result<Self> {
        config.validate()?;
        let pulse = config.pulse;
        let c = &config.constellation;
        let mu = required_bias(&pulse, c, &BiasOptions::default())?.mu;
        let sigma = noise_sigma(&config)?;
        let a_fill = c.a_check();
        let meta = pulse.metadata();
        let span = (pulse.effective_support(ISI_LEVEL) / pulse.ts()).ceil() as i64;
        let (base, centre, taps) = match config.receiver {
            ReceiverKind::Sampling => {
                let gain = config.amp_a * config.g0;
                let periodic = if a_fill == 0.0 {
                    0.0
                } else if meta.b_ts <= 1.0 {
                    meta.q_bar
                } else {
                    folded_signed_sum(&pulse, 0.0, 1e-10)?.value
                };
                let taps = (1..=span)
                    .flat_map(|k| [k, -k])
                    .map(|k| (k, gain * pulse.eval_normalized(k as f64)))
                    .filter(|&(_, v)| v.abs() > 1e-15 * gain)
                    .collect();
                (
                    gain * (mu + a_fill * periodic),
                    gain * pulse.eval_normalized(0.0),
                    taps,
                )
            }
            ReceiverKind::Matched => {
                let gain = config.amp_a * config.zeta;
                let r = config.rate as i64;
                let mf = MatchedFilter::new(&pulse, config.rate, config.window, (span * r) as usize)?;
                let periodic = if a_fill == 0.0 { 0.0 } else { mf.periodic_response()? };
                let taps = (1..=span)
                    .flat_map(|k| [k, -k])
                    .map(|k| (k, gain * mf.correlation(k * r)))
                    .collect();
                (
                    gain * (mu * mf.dc_gain() + a_fill * periodic),
                    gain * mf.correlation(0),
                    taps,
                )
            }
        };
        let levels: Vec<f64> = c.levels().iter().map(|a| base + (a - a_fill) * centre).collect();
        let thresholds = levels.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Ok(Link {
            config,
            mu,
            sigma,
            base,
            centre,
            taps,
            levels,
            thresholds,
        })
    }

    pub fn config(&self) -> &LinkConfig {
        &self.config
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Noise-free sample value for each symbol with no interference.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Index of the nearest level; a tie goes to the lower one.
    pub fn detect(&self, y: f64) -> usize {
        self.thresholds.iter().take_while(|&&t| y > t).count()
    }

    fn noise_free(&self, symbols: &[usize]) -> Vec<f64> {
        let lv = self.config.constellation.levels();
        let a_fill = self.config.constellation.a_check();
        let excess: Vec<f64> = symbols.iter().map(|&s| lv[s] - a_fill).collect();
        let n = excess.len() as i64;
        (0..n)
            .map(|i| {
                let mut y = self.base + self.centre * excess[i as usize];
                for &(k, g) in &self.taps {
                    let j = i - k;
                    if (0..n).contains(&j) {
                        y += g * excess[j as usize];
                    }
                }
                y
            })
            .collect()
    }

    /// Receiver samples at the symbol instants. Symbols outside the block
    /// sit at the lowest level.
    pub fn receiver_samples(&self, symbols: &[usize], noise: bool) -> Result<Vec<f64>> {
        let m = self.config.constellation.m();
        if let Some(bad) = symbols.iter().find(|&&s| s >= m) {
            return Err(Error::Domain(format!("symbol index {bad} outside a {m}-level constellation")));
        }
        let mut y = self.noise_free(symbols);
        if noise && self.sigma > 0.0 {
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(self.config.seed);
            for v in &mut y {
                *v += self.sigma * rng.sample::<f64, _>(StandardNormal);
            }
        }
        Ok(y)
    }

    fn block_errors(&self, mut rng: Xoshiro256PlusPlus, n: usize) -> u64 {
        let m = self.config.constellation.m();
        let symbols: Vec<usize> = (0..n).map(|_| rng.random_range(0..m)).collect();
        let clean = self.noise_free(&symbols);
        symbols
            .iter()
            .zip(clean)
            .filter(|&(&s, y)| {
                let z: f64 = rng.sample(StandardNormal);
                self.detect(y + self.sigma * z) != s
            })
            .count() as u64
    }

    /// Monte Carlo SER over `n_symbols`, or fewer when `target` is given
    /// and the relative 95% half-width drops to it at a chunk boundary.
    /// Blocks draw from generator states spaced by jumps, so the result
    /// does not depend on the thread count.
    pub fn monte_carlo_ser(&self, n_symbols: u64, target: Option<f64>) -> Result<SerEstimate> {
        if n_symbols < 10_000 {
            return Err(Error::Domain(format!(
                "Monte Carlo needs at least 10000 symbols, got {n_symbols}"
            )));
        }
        if let Some(t) = target {
            if !(t > 0.0) {
                return Err(Error::Domain(format!("relative precision target must be > 0, got {t}")));
            }
        }
        let n_blocks = n_symbols.div_ceil(BLOCK as u64) as usize;
        let mut state = Xoshiro256PlusPlus::seed_from_u64(self.config.seed);
        let (mut errors, mut done) = (0u64, 0u64);
        let mut block = 0;
        while block < n_blocks {
            let end = (block + CHUNK).min(n_blocks);
            let jobs: Vec<(Xoshiro256PlusPlus, usize)> = (block..end)
                .map(|b| {
                    let rng = state.clone();
                    state.jump();
                    let len = (n_symbols - (b * BLOCK) as u64).min(BLOCK as u64) as usize;
                    (rng, len)
                })
                .collect();
            done += jobs.iter().map(|j| j.1 as u64).sum::<u64>();
            errors += jobs
                .into_par_iter()
                .map(|(rng, len)| self.block_errors(rng, len))
                .sum::<u64>();
            block = end;
            if let Some(t) = target {
                if errors > 0 && binomial_ci95(errors, done) <= t * errors as f64 / done as f64 {
                    break;
                }
            }
        }
        Ok(SerEstimate {
            p_hat: errors as f64 / done as f64,
            n_symbols: done,
            n_errors: errors,
            ci95: binomial_ci95(errors, done),
            p_analytic: analytic_ser(&self.config).ok(),
        })
    }
}

/// Receiver samples for a one-off configuration.
pub fn receiver_samples(config: &LinkConfig, symbols: &[usize], noise: bool) -> Result<Vec<f64>> {
    Link::new(config.clone())?.receiver_samples(symbols, noise)
}

/// Monte Carlo SER for a one-off configuration.
pub fn monte_carlo_ser(config: &LinkConfig, n_symbols: u64, target: Option<f64>) -> Result<SerEstimate> {
    Link::new(config.clone())?.monte_carlo_ser(n_symbols, target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::PulseFamily;

    fn cfg(f: PulseFamily, a: f64, m: usize, rx: ReceiverKind) -> LinkConfig {
        LinkConfig::new(PulseSpec::new(f, a).unwrap(), Constellation::pam(m).unwrap(), rx)
    }

    #[test]
    fn sigmas() {
        let mut c = cfg(PulseFamily::S2, 0.0, 2, ReceiverKind::Sampling);
        assert!((noise_sigma(&c).unwrap() - 1.0).abs() < 1e-15);
        c = cfg(PulseFamily::Rrc, 0.5, 2, ReceiverKind::Matched);
        c.n0 = 2.0;
        assert!((noise_sigma(&c).unwrap() - 1.0).abs() < 1e-15);
        c = cfg(PulseFamily::Rc, 0.6, 2, ReceiverKind::Sampling);
        c.g0 = 2.0;
        assert!((noise_sigma(&c).unwrap() - 2.0 * 0.8f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn receiver_contracts() {
        let c = cfg(PulseFamily::Rrc, 0.5, 2, ReceiverKind::Sampling);
        assert!(matches!(c.validate(), Err(Error::Contract(_))));
        let c = cfg(PulseFamily::Rc, 0.5, 2, ReceiverKind::Matched);
        assert!(matches!(c.validate(), Err(Error::Contract(_))));
        let mut c = cfg(PulseFamily::Xia, 0.5, 2, ReceiverKind::Matched);
        assert!(c.validate().is_ok());
        c.receiver = ReceiverKind::Sampling;
        assert!(c.validate().is_ok());
        c.rate = 8;
        assert!(c.validate().is_err());
    }

    #[test]
    fn sampling_levels_are_the_closed_form() {
        let c = cfg(PulseFamily::Rc, 0.6, 2, ReceiverKind::Sampling);
        let link = Link::new(c).unwrap();
        let y = link.receiver_samples(&[0, 1, 0, 1], false).unwrap();
        let mu = link.mu();
        for (v, e) in y.iter().zip([mu, mu + 1.0, mu, mu + 1.0]) {
            assert!((v - e).abs() < 1e-12);
        }
    }

    #[test]
    fn matched_levels_are_the_closed_form() {
        let c = cfg(PulseFamily::Rrc, 0.5, 2, ReceiverKind::Matched);
        let link = Link::new(c).unwrap();
        let y = link.receiver_samples(&[1, 0], false).unwrap();
        let mu = link.mu();
        assert!(((y[0] - (mu + 1.0)) / (mu + 1.0)).abs() < 1e-6);
        assert!(((y[1] - mu) / mu).abs() < 1e-6);
    }

    #[test]
    fn analytic_anchors() {
        let mut c = cfg(PulseFamily::Rc, 0.4, 2, ReceiverKind::Sampling);
        c.amp_a = 0.0;
        assert_eq!(analytic_ser(&c).unwrap(), 0.5);
        let mut c = cfg(PulseFamily::S2, 0.0, 4, ReceiverKind::Sampling);
        c.amp_a = 0.0;
        assert_eq!(analytic_ser(&c).unwrap(), 0.75);
        let mut c = cfg(PulseFamily::Rrc, 0.3, 2, ReceiverKind::Matched);
        c.amp_a = amplitude_for_ser(&c, 1e-6).unwrap();
        assert!((analytic_ser(&c).unwrap() / 1e-6 - 1.0).abs() < 1e-10);
        c.constellation = Constellation::new(vec![0.0, 1.0, 3.0]).unwrap();
        assert!(matches!(analytic_ser(&c), Err(Error::Unsupported(_))));
    }

    #[test]
    fn zero_amplitude_is_a_coin_flip() {
        let mut c = cfg(PulseFamily::S2, 0.0, 2, ReceiverKind::Sampling);
        c.amp_a = 0.0;
        let est = monte_carlo_ser(&c, 100_000, None).unwrap();
        assert!((est.p_hat - 0.5).abs() < 3.0 * est.ci95);
    }

    #[test]
    fn noiseless_link_makes_no_errors() {
        let mut c = cfg(PulseFamily::Btn, 0.3, 4, ReceiverKind::Sampling);
        c.n0 = 0.0;
        let est = monte_carlo_ser(&c, 20_000, None).unwrap();
        assert_eq!(est.n_errors, 0);
        assert_eq!(est.p_analytic, Some(0.0));
    }

    #[test]
    fn early_stop_and_determinism() {
        let mut c = cfg(PulseFamily::Rc, 0.5, 2, ReceiverKind::Sampling);
        c.amp_a = amplitude_for_ser(&c, 0.05).unwrap();
        let a = monte_carlo_ser(&c, 10_000_000, Some(0.05)).unwrap();
        assert!(a.n_symbols < 10_000_000);
        let b = monte_carlo_ser(&c, 10_000_000, Some(0.05)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn receiver_names_round_trip() {
        for r in [ReceiverKind::Sampling, ReceiverKind::Matched] {
            assert_eq!(r.name().parse::<ReceiverKind>().unwrap(), r);
        }
        assert!("optical".parse::<ReceiverKind>().is_err());
    }
}
