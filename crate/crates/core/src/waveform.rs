//! Transmitted intensity `x(t) = A(μ + Σ a_k q(t − kTs))`, optical powers
//! and noise-free eye diagrams.
//!
//! A finite block is padded with guard symbols on both sides. Beyond the
//! guards every symbol is taken to be the lowest level `ǎ`, whose infinite
//! contribution `ǎ Σ_k q(t − kTs)` is added in closed form (`ǎ q̄` when
//! `B·Ts ≤ 1`), so the block behaves like a window onto an infinite sequence.

use crate::bias::{folded_abs_sum_with, folded_signed_sum_with, required_bias, BiasOptions, BiasSolution, Truncation};
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::link::ReceiverKind;
use crate::matched::{MatchedFilter, DEFAULT_WINDOW};
use crate::pulse::PulseSpec;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::Serialize;

pub const MIN_RATE: usize = 16;
pub const DEFAULT_RATE: usize = 32;

/// Envelope level that defines the effective pulse support for guards.
pub const SUPPORT_LEVEL: f64 = 1e-3;

const FILL_TOL: f64 = 1e-10;

/// Guard symbols needed on each side of a block.
pub fn min_guard(pulse: &PulseSpec) -> usize {
    (pulse.effective_support(SUPPORT_LEVEL) / pulse.ts()).ceil() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum GuardPolicy {
    /// Uniformly random levels from a seeded generator.
    Random { seed: u64 },
    /// Levels sign-matched to the pulse seen from time `target`: the worst
    /// case for the minimum (`maximize = false`) or the maximum of `x`.
    Adversarial { target: f64, maximize: bool },
    /// The lowest level, same as the symbols beyond the guards.
    Fill,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SynthesisParams {
    pub amp_a: f64,
    pub mu: f64,
    /// Samples per symbol period.
    pub rate: usize,
    /// Guard symbols on each side.
    pub guard: usize,
    pub guard_policy: GuardPolicy,
}

impl SynthesisParams {
    /// Default rate, minimum guard, fill-level guards.
    pub fn new(pulse: &PulseSpec, amp_a: f64, mu: f64) -> Self {
        SynthesisParams {
            amp_a,
            mu,
            rate: DEFAULT_RATE,
            guard: min_guard(pulse),
            guard_policy: GuardPolicy::Fill,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum FillSum {
    Constant(f64),
    Numeric(Truncation),
}

/// Continuous-time model of a synthesized block.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pulse: PulseSpec,
    amp_a: f64,
    mu: f64,
    a_fill: f64,
    /// Index (in symbol periods) of the first padded symbol.
    first: i64,
    /// `a_k − ǎ` for every padded symbol.
    excess: Vec<f64>,
    fill: FillSum,
}

impl Waveform {
    fn new(
        pulse: &PulseSpec,
        constellation: &Constellation,
        padded: &[usize],
        first: i64,
        amp_a: f64,
        mu: f64,
    ) -> Result<Self> {
        let a_fill = constellation.a_check();
        let levels = constellation.levels();
        let fill = if pulse.metadata().b_ts <= 1.0 {
            FillSum::Constant(pulse.metadata().q_bar)
        } else if a_fill == 0.0 {
            FillSum::Constant(0.0)
        } else {
            FillSum::Numeric(Truncation::for_signed_sum(pulse, FILL_TOL)?)
        };
        Ok(Waveform {
            pulse: *pulse,
            amp_a,
            mu,
            a_fill,
            first,
            excess: padded.iter().map(|&i| levels[i] - a_fill).collect(),
            fill,
        })
    }

    /// `Σ_k q(t − kTs)` at normalized phase `x`.
    fn periodic(&self, x: f64) -> f64 {
        match self.fill {
            FillSum::Constant(v) => v,
            FillSum::Numeric(tr) => folded_signed_sum_with(&self.pulse, x * self.pulse.ts(), tr),
        }
    }

    /// `x(t)`.
    pub fn eval(&self, t: f64) -> f64 {
        let x = t / self.pulse.ts();
        let fill = if self.a_fill == 0.0 {
            0.0
        } else {
            self.a_fill * self.periodic(x.rem_euclid(1.0))
        };
        let mut s = 0.0;
        for (j, &c) in self.excess.iter().enumerate() {
            if c != 0.0 {
                s += c * self.pulse.eval_normalized(x - (self.first + j as i64) as f64);
            }
        }
        self.amp_a * (self.mu + fill + s)
    }

    fn sample(&self, rate: usize) -> Vec<f64> {
        let n = self.excess.len();
        let mut out = vec![0.0; n * rate];
        let span = n as i64 - 1;
        let mut table = vec![0.0; 2 * n - 1];
        for r in 0..rate {
            let phase = r as f64 / rate as f64;
            for (i, m) in (-span..=span).enumerate() {
                table[i] = self.pulse.eval_normalized(m as f64 + phase);
            }
            let fill = if self.a_fill == 0.0 {
                0.0
            } else {
                self.a_fill * self.periodic(phase)
            };
            for j in 0..n {
                let mut s = 0.0;
                for (k, &c) in self.excess.iter().enumerate() {
                    if c != 0.0 {
                        s += c * table[(j as i64 - k as i64 + span) as usize];
                    }
                }
                out[j * rate + r] = self.amp_a * (self.mu + fill + s);
            }
        }
        out
    }
}

/// Sampled block of `x(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformGrid {
    pub samples: Vec<f64>,
    pub rate: usize,
    /// Time of the first sample (the first guard symbol).
    pub t0: f64,
    /// Positions of the data symbols within the padded sequence.
    pub symbol_span: (usize, usize),
    pub scale_a: f64,
    pub bias_mu: f64,
    /// Padded symbol indices, guards included.
    pub padded_symbols: Vec<usize>,
    pub model: Waveform,
}

impl WaveformGrid {
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.model.pulse.ts() / self.rate as f64
    }

    pub fn min_sample(&self) -> (usize, f64) {
        extreme(&self.samples, |a, b| a < b)
    }

    pub fn max_sample(&self) -> (usize, f64) {
        extreme(&self.samples, |a, b| a > b)
    }

    /// Minimum of the continuous `x(t)` near the smallest sample, refined
    /// by golden-section search to `1e-12·Ts`.
    pub fn refined_min(&self) -> (f64, f64) {
        let (i, v) = self.min_sample();
        self.refine(i, v, -1.0)
    }

    /// Maximum of the continuous `x(t)` near the largest sample.
    pub fn refined_max(&self) -> (f64, f64) {
        let (i, v) = self.max_sample();
        self.refine(i, v, 1.0)
    }

    fn refine(&self, i: usize, v: f64, sign: f64) -> (f64, f64) {
        let h = self.model.pulse.ts() / self.rate as f64;
        let t = self.time(i);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let f = |t: f64| sign * self.model.eval(t);
        let (mut a, mut b) = (t - h, t + h);
        let mut x1 = b - r * (b - a);
        let mut x2 = a + r * (b - a);
        let (mut f1, mut f2) = (f(x1), f(x2));
        let mut best = (t, sign * v);
        while b - a > 1e-12 * self.model.pulse.ts() {
            if f1 >= f2 {
                if f1 > best.1 {
                    best = (x1, f1);
                }
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - r * (b - a);
                f1 = f(x1);
            } else {
                if f2 > best.1 {
                    best = (x2, f2);
                }
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + r * (b - a);
                f2 = f(x2);
            }
        }
        for (x, fx) in [(x1, f1), (x2, f2)] {
            if fx > best.1 {
                best = (x, fx);
            }
        }
        (best.0, sign * best.1)
    }
}

fn extreme(v: &[f64], better: impl Fn(f64, f64) -> bool) -> (usize, f64) {
    let mut best = (0, v[0]);
    for (i, &x) in v.iter().enumerate().skip(1) {
        if better(x, best.1) {
            best = (i, x);
        }
    }
    best
}

/// Symbol indices for times `k·Ts`, `k ∈ [from, to)`, sign-matched to
/// `q(target − kTs)`: the top level where the pulse pushes the wrong way.
pub fn sign_matched_symbols(
    pulse: &PulseSpec,
    constellation: &Constellation,
    from: i64,
    to: i64,
    target: f64,
    maximize: bool,
) -> Vec<usize> {
    let top = constellation.m() - 1;
    (from..to)
        .map(|k| {
            let v = pulse.eval(target - k as f64 * pulse.ts());
            let up = if maximize { v > 0.0 } else { v < 0.0 };
            if up {
                top
            } else {
                0
            }
        })
        .collect()
}

/// Samples `x(t)` for a block of symbol indices, with guards on both sides.
pub fn synthesize(
    pulse: &PulseSpec,
    constellation: &Constellation,
    symbols: &[usize],
    params: &SynthesisParams,
) -> Result<WaveformGrid> {
    if params.rate < MIN_RATE {
        return Err(Error::Domain(format!(
            "oversampling rate must be ≥ {MIN_RATE}, got {}",
            params.rate
        )));
    }
    if !(params.amp_a.is_finite() && params.amp_a >= 0.0) || !params.mu.is_finite() {
        return Err(Error::Domain("amplitude must be ≥ 0 and bias finite".into()));
    }
    let need = min_guard(pulse);
    if params.guard < need {
        return Err(Error::Contract(format!(
            "guard of {} symbols is shorter than the effective support of {} ({need} symbols)",
            params.guard,
            pulse.label()
        )));
    }
    let m = constellation.m();
    if let Some(bad) = symbols.iter().find(|&&s| s >= m) {
        return Err(Error::Domain(format!("symbol index {bad} outside a {m}-level constellation")));
    }
    let g = params.guard;
    let n = symbols.len();
    let (left, right): (Vec<usize>, Vec<usize>) = match params.guard_policy {
        GuardPolicy::Fill => (vec![0; g], vec![0; g]),
        GuardPolicy::Random { seed } => {
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
            let l = (0..g).map(|_| rng.random_range(0..m)).collect();
            let r = (0..g).map(|_| rng.random_range(0..m)).collect();
            (l, r)
        }
        GuardPolicy::Adversarial { target, maximize } => (
            sign_matched_symbols(pulse, constellation, -(g as i64), 0, target, maximize),
            sign_matched_symbols(pulse, constellation, n as i64, (n + g) as i64, target, maximize),
        ),
    };
    let mut padded = left;
    padded.extend_from_slice(symbols);
    padded.extend(right);
    let first = -(g as i64);
    let model = Waveform::new(pulse, constellation, &padded, first, params.amp_a, params.mu)?;
    Ok(WaveformGrid {
        samples: model.sample(params.rate),
        rate: params.rate,
        t0: first as f64 * pulse.ts(),
        symbol_span: (g, g + n),
        scale_a: params.amp_a,
        bias_mu: params.mu,
        padded_symbols: padded,
        model,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OpticalPowers {
    /// Average optical power `A(μ + E{a} q̄)`.
    pub p_opt: f64,
    /// Peak optical power.
    pub p_max: f64,
    /// `p_max` comes from a finite search and may underestimate the peak.
    pub p_max_lower_bound: bool,
}

/// Average and peak optical power at bias `mu ≥ required_bias`.
pub fn optical_powers(
    pulse: &PulseSpec,
    constellation: &Constellation,
    amp_a: f64,
    mu: f64,
) -> Result<OpticalPowers> {
    let sol = required_bias(pulse, constellation, &BiasOptions::default())?;
    optical_powers_with(pulse, constellation, amp_a, mu, &sol)
}

/// As [`optical_powers`], reusing a bias solution for the same pulse and
/// constellation.
pub fn optical_powers_with(
    pulse: &PulseSpec,
    constellation: &Constellation,
    amp_a: f64,
    mu: f64,
    sol: &BiasSolution,
) -> Result<OpticalPowers> {
    if mu < sol.mu - 1e-9 * (1.0 + sol.mu.abs()) {
        return Err(Error::Contract(format!(
            "bias {mu} is below the required {}",
            sol.mu
        )));
    }
    let meta = pulse.metadata();
    let p_opt = amp_a * (mu + constellation.mean() * meta.q_bar);
    if meta.b_ts <= 1.0 {
        let p_max = amp_a
            * (mu + constellation.half_range() * sol.abs_sum_max + constellation.midpoint() * meta.q_bar);
        return Ok(OpticalPowers {
            p_opt,
            p_max,
            p_max_lower_bound: false,
        });
    }
    Ok(OpticalPowers {
        p_opt,
        p_max: peak_by_search(pulse, constellation, amp_a, mu)?,
        p_max_lower_bound: true,
    })
}

/// Largest sample over 100 random blocks and one sign-matched block.
fn peak_by_search(pulse: &PulseSpec, constellation: &Constellation, amp_a: f64, mu: f64) -> Result<f64> {
    const BLOCK: usize = 64;
    const TRIALS: u64 = 100;
    let m = constellation.m();
    let w = constellation.half_range();
    let l = constellation.midpoint();
    // phase maximizing the periodic worst case L·S + (â − L)·Σ|q|
    let tr = Truncation::for_abs_sum(pulse, 1e-8)?;
    let phase = (0..256)
        .map(|i| {
            let t = i as f64 / 256.0 * pulse.ts();
            (t, l * folded_signed_sum_with(pulse, t, tr) + w * folded_abs_sum_with(pulse, t, tr))
        })
        .fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
        .0;
    let mut params = SynthesisParams::new(pulse, amp_a, mu);
    let mut best = f64::NEG_INFINITY;
    for trial in 0..TRIALS {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(trial);
        let symbols: Vec<usize> = (0..BLOCK).map(|_| rng.random_range(0..m)).collect();
        params.guard_policy = GuardPolicy::Random { seed: trial };
        best = best.max(synthesize(pulse, constellation, &symbols, &params)?.max_sample().1);
    }
    let target = (BLOCK / 2) as f64 * pulse.ts() + phase;
    let symbols = sign_matched_symbols(pulse, constellation, 0, BLOCK as i64, target, true);
    params.guard_policy = GuardPolicy::Adversarial {
        target,
        maximize: true,
    };
    let grid = synthesize(pulse, constellation, &symbols, &params)?;
    Ok(best.max(grid.refined_max().1))
}

/// Noise-free received traces, each spanning `2Ts` around a sampling
/// instant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EyeTraces {
    pub traces: Vec<Vec<f64>>,
    pub rate: usize,
    pub receiver: ReceiverKind,
    pub pulse: PulseSpec,
    pub constellation: Constellation,
    pub mu: f64,
}

impl EyeTraces {
    /// Index of the sampling instant inside each trace.
    pub fn sample_index(&self) -> usize {
        self.rate
    }

    /// Time offset of point `i` from the trace's sampling instant.
    pub fn offset(&self, i: usize) -> f64 {
        (i as f64 / self.rate as f64 - 1.0) * self.pulse.ts()
    }

    /// Values at the sampling instants.
    pub fn sampled(&self) -> Vec<f64> {
        self.traces.iter().map(|t| t[self.rate]).collect()
    }

    /// Distinct sampled values, merging those closer than `tol`.
    pub fn levels(&self, tol: f64) -> Vec<f64> {
        let mut v = self.sampled();
        v.sort_by(f64::total_cmp);
        let mut out: Vec<f64> = Vec::new();
        for x in v {
            match out.last() {
                Some(&last) if x - last <= tol => {}
                _ => out.push(x),
            }
        }
        out
    }
}

/// Eye diagram with `A = 1`, unit receiver gain and the minimum bias.
pub fn eye_diagram(
    pulse: &PulseSpec,
    constellation: &Constellation,
    receiver: ReceiverKind,
    n_traces: usize,
    rate: usize,
    seed: u64,
) -> Result<EyeTraces> {
    if n_traces == 0 {
        return Err(Error::Domain("at least one trace is needed".into()));
    }
    let mu = required_bias(pulse, constellation, &BiasOptions::default())?.mu;
    let m = constellation.m();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let symbols: Vec<usize> = (0..n_traces + 2).map(|_| rng.random_range(0..m)).collect();
    let params = SynthesisParams {
        amp_a: 1.0,
        mu,
        rate,
        guard: min_guard(pulse),
        guard_policy: GuardPolicy::Random {
            seed: seed.wrapping_add(1),
        },
    };
    let grid = synthesize(pulse, constellation, &symbols, &params)?;
    let g = params.guard;
    let signal = match receiver {
        ReceiverKind::Sampling => grid.samples,
        ReceiverKind::Matched => matched_output(pulse, constellation, &grid, mu)?,
    };
    let traces = (1..=n_traces)
        .map(|k| {
            let start = (g + k - 1) * rate;
            signal[start..start + 2 * rate].to_vec()
        })
        .collect();
    Ok(EyeTraces {
        traces,
        rate,
        receiver,
        pulse: *pulse,
        constellation: constellation.clone(),
        mu,
    })
}

/// Matched-filter output at every sample of the grid, `A = ζ = 1`.
fn matched_output(
    pulse: &PulseSpec,
    constellation: &Constellation,
    grid: &WaveformGrid,
    mu: f64,
) -> Result<Vec<f64>> {
    let rate = grid.rate;
    let n = grid.padded_symbols.len();
    let mf = MatchedFilter::new(pulse, rate, DEFAULT_WINDOW, n * rate)?;
    let levels = constellation.levels();
    let a_fill = constellation.a_check();
    let dc = mf.dc_gain();
    let fill = if a_fill == 0.0 {
        0.0
    } else {
        a_fill * mf.periodic_response()?
    };
    let lags: Vec<f64> = (-((n * rate) as i64)..=(n * rate) as i64)
        .map(|l| mf.correlation(l))
        .collect();
    let centre = (n * rate) as i64;
    Ok((0..n * rate)
        .map(|p| {
            let s: f64 = grid
                .padded_symbols
                .iter()
                .enumerate()
                .map(|(k, &i)| (levels[i] - a_fill) * lags[(p as i64 - (k * rate) as i64 + centre) as usize])
                .sum();
            mu * dc + fill + s
        })
        .collect())
}
