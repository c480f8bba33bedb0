//! Periodic pulse-train sums and the minimum DC bias.
//!
//! For a symbol alphabet with extremes `ǎ ≤ â` and midpoint `L`, the worst
//! case of `−Σ a_k q(t − kTs)` picks `â` where the pulse is negative and `ǎ`
//! where it is positive, which gives
//!
//! ```text
//! μ = max_t Σ_k [ (â − L)|q(t − kTs)| − L q(t − kTs) ]
//!   = max_t [ (â − L) D(t) − ǎ S(t) ],   D = Σ(|q| − q),  S = Σ q.
//! ```
//!
//! When `B·Ts ≤ 1` the signed sum `S` is the constant `q̄`, so only `D` is
//! searched and the constellation enters through two scalars. `D` is summed
//! term by term and is exactly zero for nonnegative pulses.
//!
//! Pulses whose envelope decays like `1/t²` would need millions of terms for
//! a plain truncation. Their sums are extrapolated from depths `K/2` and `K`
//! (`2S(K) − S(K/2)`), which cancels the `1/K` part of the remainder; `K` is
//! chosen from an estimate of what is left.

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::pulse::{PulseFamily, PulseSpec};
use crate::special::sin_pi;
use rayon::prelude::*;
use serde::Serialize;

/// Hard cap on the truncation half-width.
pub const K_CAP: u64 = 1_000_000;

/// Depth used for the coarse grid scan.
const K_COARSE: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasOptions {
    /// Target accuracy of every folded sum.
    pub tail_tol: f64,
    /// Points of the coarse grid over one symbol period.
    pub grid_n: usize,
    /// Final bracket width of the golden-section search, in units of Ts.
    pub refine_tol: f64,
}

impl Default for BiasOptions {
    fn default() -> Self {
        BiasOptions {
            tail_tol: 1e-7,
            grid_n: 4096,
            refine_tol: 1e-10,
        }
    }
}

/// Truncation depth of a folded sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Truncation {
    /// Terms `|k| ≤ k` are summed.
    pub k: u64,
    /// Whether the `2S(K) − S(K/2)` extrapolation is applied.
    pub extrapolated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SumKind {
    Abs,
    Signed,
}

/// A folded sum and the depth it was evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FoldedSum {
    pub value: f64,
    pub k_trunc: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasSolution {
    /// Minimum bias μ.
    pub mu: f64,
    /// Location of the supremum in `[0, Ts)`, seconds.
    pub argmax_t: f64,
    pub k_trunc: u64,
    pub grid_n: usize,
    /// Final bracket width, in units of Ts.
    pub refine_tol: f64,
    /// `Σ|q(t − kTs)|` at `argmax_t`.
    pub abs_sum_max: f64,
    /// `Σ q(t − kTs)` at `argmax_t`.
    pub signed_sum_at_max: f64,
}

impl Truncation {
    /// Depth for `Σ|q(t − kTs)|` accurate to `tail_tol`.
    pub fn for_abs_sum(pulse: &PulseSpec, tail_tol: f64) -> Result<Self> {
        choose(pulse, SumKind::Abs, tail_tol)
    }

    /// Depth for `Σ q(t − kTs)` accurate to `tail_tol`.
    pub fn for_signed_sum(pulse: &PulseSpec, tail_tol: f64) -> Result<Self> {
        choose(pulse, SumKind::Signed, tail_tol)
    }

    /// Same scheme at a different depth.
    pub fn with_k(self, k: u64) -> Self {
        Truncation {
            k: if self.extrapolated { k + k % 2 } else { k },
            extrapolated: self.extrapolated,
        }
    }
}

fn choose(pulse: &PulseSpec, kind: SumKind, tol: f64) -> Result<Truncation> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::Domain(format!("tail tolerance must be > 0, got {tol}")));
    }
    let env = pulse.envelope();
    let base = env.from.ceil() as u64 + 1;
    if env.power >= 3 {
        let k = smallest(base, |k| env.sum_tail_bound(k) < tol)?;
        return Ok(Truncation {
            k,
            extrapolated: false,
        });
    }

    let model = pulse.tail_model();
    let c_r = model.residual.coeff;
    let kind = if pulse.family().is_nonnegative() {
        SumKind::Signed
    } else {
        kind
    };
    let estimate = |k: u64| -> f64 {
        let kf = k as f64;
        let lead: f64 = match kind {
            SumKind::Abs => {
                let g: f64 = model
                    .terms
                    .iter()
                    .map(|t| t.cos_amp.abs() + t.sin_amp.abs())
                    .sum();
                12.0 * g * (1.0 + kf.ln())
            }
            SumKind::Signed => model
                .terms
                .iter()
                .map(|t| {
                    let amp = t.cos_amp.abs() + t.sin_amp.abs();
                    let s = sin_pi(t.freq).abs();
                    let w = if (t.freq - t.freq.round()).abs() < 1e-12 {
                        2.0
                    } else {
                        (12.0 / s).min(8.0 * kf)
                    };
                    amp * w
                })
                .sum(),
        };
        (lead + 6.0 * c_r) / (kf * kf)
    };
    let k = smallest(2 * base, |k| estimate(k + k % 2) < tol)?;
    Ok(Truncation {
        k: k + k % 2,
        extrapolated: true,
    })
}

/// Smallest `k ≥ start` with `ok(k)`, assuming `ok` is monotone.
fn smallest(start: u64, ok: impl Fn(u64) -> bool) -> Result<u64> {
    let start = start.max(2);
    if ok(start) {
        return Ok(start);
    }
    let (mut lo, mut hi) = (start, 2 * start);
    while !ok(hi) {
        if hi > 1u64 << 40 {
            return Err(Error::Divergence {
                required: hi,
                cap: K_CAP,
            });
        }
        lo = hi;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if hi > K_CAP {
        return Err(Error::Divergence {
            required: hi,
            cap: K_CAP,
        });
    }
    Ok(hi)
}

/// `Σ_k term(v(x − k))` at the given depth, `x = t/Ts`.
fn folded(pulse: &PulseSpec, x: f64, tr: Truncation, term: impl Fn(f64) -> f64) -> f64 {
    let v = |y: f64| term(pulse.eval_normalized(y));
    let half = if tr.extrapolated { tr.k / 2 } else { tr.k };
    // far terms first
    let mut outer = 0.0;
    for k in (half + 1..=tr.k).rev() {
        let kf = k as f64;
        outer += v(x - kf) + v(x + kf);
    }
    let mut inner = 0.0;
    for k in (1..=half).rev() {
        let kf = k as f64;
        inner += v(x - kf) + v(x + kf);
    }
    inner += v(x);
    if tr.extrapolated {
        // 2 S(K) − S(K/2)
        inner + 2.0 * outer
    } else {
        inner + outer
    }
}

fn normalized_phase(pulse: &PulseSpec, t: f64) -> Result<f64> {
    let x = t / pulse.ts();
    if !(0.0..1.0).contains(&x) {
        return Err(Error::Domain(format!(
            "phase t must lie in [0, Ts), got t/Ts = {x}"
        )));
    }
    Ok(x)
}

/// `Σ_k |q(t − kTs)|` for `0 ≤ t < Ts`.
pub fn folded_abs_sum(pulse: &PulseSpec, t: f64, tail_tol: f64) -> Result<FoldedSum> {
    let x = normalized_phase(pulse, t)?;
    let tr = Truncation::for_abs_sum(pulse, tail_tol)?;
    Ok(FoldedSum {
        value: folded(pulse, x, tr, f64::abs),
        k_trunc: tr.k,
    })
}

/// `Σ_k q(t − kTs)` for `0 ≤ t < Ts`.
pub fn folded_signed_sum(pulse: &PulseSpec, t: f64, tail_tol: f64) -> Result<FoldedSum> {
    let x = normalized_phase(pulse, t)?;
    let tr = Truncation::for_signed_sum(pulse, tail_tol)?;
    Ok(FoldedSum {
        value: folded(pulse, x, tr, |v| v),
        k_trunc: tr.k,
    })
}

/// `Σ_k |q(t − kTs)|` at an explicit depth; `t` may be any real time.
pub fn folded_abs_sum_with(pulse: &PulseSpec, t: f64, tr: Truncation) -> f64 {
    folded(pulse, t / pulse.ts(), tr, f64::abs)
}

/// `Σ_k q(t − kTs)` at an explicit depth; `t` may be any real time.
pub fn folded_signed_sum_with(pulse: &PulseSpec, t: f64, tr: Truncation) -> f64 {
    folded(pulse, t / pulse.ts(), tr, |v| v)
}

/// Minimum bias μ keeping `μ + Σ a_k q(t − kTs) ≥ 0` for every symbol
/// sequence over `constellation`.
pub fn required_bias(
    pulse: &PulseSpec,
    constellation: &Constellation,
    opts: &BiasOptions,
) -> Result<BiasSolution> {
    if opts.grid_n < 16 {
        return Err(Error::Domain(format!("grid_n must be ≥ 16, got {}", opts.grid_n)));
    }
    if !(opts.refine_tol > 0.0) {
        return Err(Error::Domain("refine_tol must be > 0".into()));
    }
    let full = Truncation::for_abs_sum(pulse, opts.tail_tol)?;
    let coarse_k = full.k.min(K_COARSE.max(2 * (pulse.envelope().from.ceil() as u64 + 1)));
    let coarse = full.with_k(coarse_k);

    let narrow = pulse.metadata().b_ts <= 1.0;
    let q_bar = pulse.metadata().q_bar;
    let w = constellation.half_range();
    let a_check = constellation.a_check();
    let objective = |x: f64, tr: Truncation| {
        if narrow {
            w * folded(pulse, x, tr, |v| v.abs() - v)
        } else {
            folded(pulse, x, tr, |v| w * (v.abs() - v) - a_check * v)
        }
    };

    let n = opts.grid_n;
    let h = 1.0 / n as f64;
    let grid: Vec<f64> = (0..n).map(|i| objective(i as f64 * h, coarse)).collect();

    let mut peaks: Vec<usize> = (0..n)
        .filter(|&i| {
            let prev = grid[(i + n - 1) % n];
            let next = grid[(i + 1) % n];
            grid[i] >= prev && grid[i] >= next
        })
        .collect();
    peaks.sort_by(|&a, &b| grid[b].total_cmp(&grid[a]).then(a.cmp(&b)));
    let top = grid[peaks[0]];
    let slack = 0.05 * top.abs() + 1e-9;
    peaks.retain(|&i| grid[i] >= top - slack);
    peaks.truncate(4);

    let mut best = (f64::NEG_INFINITY, 0.0);
    for &i in &peaks {
        let centre = i as f64 * h;
        let (x, f) = golden_max(
            |x| objective(x, full),
            centre - h,
            centre + h,
            opts.refine_tol,
        );
        let fc = objective(centre, full);
        let cand = if fc > f { (fc, centre) } else { (f, x) };
        if cand.0 > best.0 {
            best = cand;
        }
    }
    let x_star = best.1.rem_euclid(1.0);
    let (mu, abs_sum_max, signed_sum_at_max) = if narrow {
        let d = folded(pulse, x_star, full, |v| v.abs() - v);
        (best.0 - a_check * q_bar, d + q_bar, q_bar)
    } else {
        (
            best.0,
            folded(pulse, x_star, full, f64::abs),
            folded(pulse, x_star, full, |v| v),
        )
    };
    Ok(BiasSolution {
        mu,
        argmax_t: x_star * pulse.ts(),
        k_trunc: full.k,
        grid_n: n,
        refine_tol: opts.refine_tol,
        abs_sum_max,
        signed_sum_at_max,
    })
}

/// Golden-section search for a maximum on `[a, b]`; returns the best point
/// evaluated.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
            if f1 > best.1 {
                best = (x1, f1);
            }
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
            if f2 > best.1 {
                best = (x2, f2);
            }
        }
    }
    best
}

/// Normalized bias `μ/â` over a roll-off grid, one point per α.
pub fn bias_curve(
    family: PulseFamily,
    alpha_grid: &[f64],
    constellation: &Constellation,
    opts: &BiasOptions,
) -> Result<Vec<(f64, f64)>> {
    let a_hat = constellation.a_hat();
    if !(a_hat > 0.0) {
        return Err(Error::Domain(format!(
            "normalized bias needs â > 0, got {a_hat}"
        )));
    }
    alpha_grid
        .par_iter()
        .map(|&alpha| {
            let pulse = PulseSpec::new(family, alpha)?;
            let sol = required_bias(&pulse, constellation, opts)?;
            Ok((alpha, sol.mu / a_hat))
        })
        .collect()
}
