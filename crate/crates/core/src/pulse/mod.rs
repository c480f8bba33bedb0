//! Closed-form Nyquist and root-Nyquist pulses.
//!
//! Every pulse is written as `q(t) = v(t/Ts)`; the `*_normalized` methods
//! work on `x = t/Ts` and the public ones rescale.

mod spectral;

use crate::error::{Error, Result};
use crate::special::{cos_pi, sin_pi, sinc};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, LN_2, PI};
use std::fmt;
use std::str::FromStr;

/// Smallest admissible roll-off; the bias of the α → 0 limit (sinc) diverges.
pub const ALPHA_MIN: f64 = 0.01;

/// Half-width of the window (in units of Ts) around a removable singularity
/// inside which the closed-form special value is returned.
pub const SINGULARITY_WINDOW: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseFamily {
    /// Raised cosine.
    Rc,
    /// "Better than Nyquist" (parametric exponential).
    Btn,
    /// Parametric linear, first order.
    Pl,
    /// Polynomial.
    Poly,
    /// Squared sinc.
    S2,
    /// Squared raised cosine.
    Src,
    /// Squared double-jump.
    Sdj,
    /// Root raised cosine.
    Rrc,
    /// First-order Xia pulse.
    Xia,
}

impl PulseFamily {
    pub const ALL: [PulseFamily; 9] = [
        PulseFamily::Rc,
        PulseFamily::Btn,
        PulseFamily::Pl,
        PulseFamily::Poly,
        PulseFamily::S2,
        PulseFamily::Src,
        PulseFamily::Sdj,
        PulseFamily::Rrc,
        PulseFamily::Xia,
    ];

    /// Nyquist pulses that need a bias (negative lobes, `B·Ts ≤ 1`).
    pub const REGULAR_NYQUIST: [PulseFamily; 4] = [
        PulseFamily::Rc,
        PulseFamily::Btn,
        PulseFamily::Pl,
        PulseFamily::Poly,
    ];

    /// Nonnegative Nyquist pulses (no bias needed for nonnegative constellations).
    pub const NONNEGATIVE: [PulseFamily; 3] =
        [PulseFamily::S2, PulseFamily::Src, PulseFamily::Sdj];

    pub fn name(self) -> &'static str {
        match self {
            PulseFamily::Rc => "rc",
            PulseFamily::Btn => "btn",
            PulseFamily::Pl => "pl",
            PulseFamily::Poly => "poly",
            PulseFamily::S2 => "s2",
            PulseFamily::Src => "src",
            PulseFamily::Sdj => "sdj",
            PulseFamily::Rrc => "rrc",
            PulseFamily::Xia => "xia",
        }
    }

    pub fn is_nyquist(self) -> bool {
        self != PulseFamily::Rrc
    }

    pub fn is_root_nyquist(self) -> bool {
        matches!(self, PulseFamily::Rrc | PulseFamily::Xia)
    }

    pub fn is_nonnegative(self) -> bool {
        matches!(self, PulseFamily::S2 | PulseFamily::Src | PulseFamily::Sdj)
    }

    pub fn uses_alpha(self) -> bool {
        self != PulseFamily::S2
    }
}

impl fmt::Display for PulseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PulseFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        PulseFamily::ALL
            .into_iter()
            .find(|f| f.name() == lower)
            .ok_or_else(|| Error::Domain(format!("unknown pulse family '{s}'")))
    }
}

/// A pulse family with its roll-off and symbol duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PulseSpec {
    family: PulseFamily,
    alpha: f64,
    ts: f64,
}

/// Closed-form parameters of a pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PulseMetadata {
    /// `Q(0)/Ts`, the mean of the pulse.
    pub q_bar: f64,
    /// Peak-position amplitude `q(0)`.
    pub q_zero: f64,
    /// Lowpass bandwidth normalized by the symbol rate.
    pub b_ts: f64,
    /// `Eq/Ts` for root-Nyquist pulses.
    pub energy_ratio: Option<f64>,
    pub is_nyquist: bool,
    pub is_root_nyquist: bool,
}

/// Bound `|v(x)| ≤ coeff / |x|^power` valid for `|x| ≥ from`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub coeff: f64,
    pub power: i32,
    pub from: f64,
}

impl Envelope {
    /// Bound on `Σ_{|k|>K} |v(t − k)|` for any `t ∈ [0, 1)`.
    pub fn sum_tail_bound(&self, k: u64) -> f64 {
        if self.coeff == 0.0 {
            return 0.0;
        }
        let p = self.power as f64;
        let km1 = (k as f64 - 1.0).max(1.0);
        // |t − k| ≥ k − 1 on the right, ≥ k on the left; integral bound on both
        2.0 * self.coeff * (1.0 / km1.powf(p) + 1.0 / ((p - 1.0) * km1.powf(p - 1.0)))
    }

    /// Bound on `∫_{|x|>T} |v(x)| dx`.
    pub fn integral_tail_bound(&self, t: f64) -> f64 {
        if self.coeff == 0.0 {
            return 0.0;
        }
        let p = self.power as f64;
        2.0 * self.coeff / ((p - 1.0) * t.powf(p - 1.0))
    }
}

/// One term `(cos_amp·cos(2πfx) + sin_amp·sin(2πfx)) / x²` of the large-|x|
/// expansion of a pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailTerm {
    pub freq: f64,
    pub cos_amp: f64,
    pub sin_amp: f64,
}

/// Leading `1/x²` behaviour plus an envelope on what is left over.
#[derive(Debug, Clone, PartialEq)]
pub struct TailModel {
    pub terms: Vec<TailTerm>,
    pub residual: Envelope,
}

impl TailModel {
    pub fn eval(&self, x: f64) -> f64 {
        let inv = 1.0 / (x * x);
        self.terms
            .iter()
            .map(|t| t.cos_amp * cos_pi(2.0 * t.freq * x) + t.sin_amp * sin_pi(2.0 * t.freq * x))
            .sum::<f64>()
            * inv
    }
}

impl PulseSpec {
    /// Pulse with `Ts = 1`.
    pub fn new(family: PulseFamily, alpha: f64) -> Result<Self> {
        Self::with_ts(family, alpha, 1.0)
    }

    pub fn with_ts(family: PulseFamily, alpha: f64, ts: f64) -> Result<Self> {
        if !(ts.is_finite() && ts > 0.0) {
            return Err(Error::Domain(format!("symbol duration must be > 0, got {ts}")));
        }
        if family.uses_alpha() {
            if !(ALPHA_MIN..=1.0).contains(&alpha) {
                return Err(Error::Domain(format!(
                    "roll-off {alpha} outside [{ALPHA_MIN}, 1] for {family}"
                )));
            }
        } else if !alpha.is_finite() {
            return Err(Error::Domain(format!("roll-off must be finite, got {alpha}")));
        }
        Ok(PulseSpec { family, alpha, ts })
    }

    pub fn family(&self) -> PulseFamily {
        self.family
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn ts(&self) -> f64 {
        self.ts
    }

    pub fn label(&self) -> String {
        if self.family.uses_alpha() {
            format!("{}(alpha={})", self.family, self.alpha)
        } else {
            self.family.to_string()
        }
    }

    /// Pulse amplitude `q(t)`.
    pub fn eval(&self, t: f64) -> f64 {
        self.eval_normalized(t / self.ts)
    }

    /// `v(x)` with `q(t) = v(t/Ts)`.
    pub fn eval_normalized(&self, x: f64) -> f64 {
        let a = self.alpha;
        match self.family {
            PulseFamily::Rc => rc(a, x),
            PulseFamily::Btn => {
                let z = PI * a * x / LN_2;
                let num = 2.0 * z * sin_pi(a * x) + 2.0 * cos_pi(a * x) - 1.0;
                sinc(x) * num / (z * z + 1.0)
            }
            PulseFamily::Pl => sinc(x) * sinc(a * x),
            PulseFamily::Poly => poly(a, x),
            PulseFamily::S2 => {
                let s = sinc(x);
                s * s
            }
            PulseFamily::Src => {
                let r = rc(a, x);
                r * r
            }
            PulseFamily::Sdj => {
                let s = 0.5 * (1.0 - a) * sinc((1.0 - a) * x) + 0.5 * (1.0 + a) * sinc((1.0 + a) * x);
                s * s
            }
            PulseFamily::Rrc => rrc(a, x),
            PulseFamily::Xia => xia(a, x),
        }
    }

    pub fn metadata(&self) -> PulseMetadata {
        let a = self.alpha;
        let f = self.family;
        let q_bar = match f {
            PulseFamily::Src => 1.0 - a / 4.0,
            PulseFamily::Sdj => 1.0 - a / 2.0,
            _ => 1.0,
        };
        let q_zero = match f {
            PulseFamily::Rrc => 1.0 - a + 4.0 * a / PI,
            _ => 1.0,
        };
        let b_ts = match f {
            PulseFamily::S2 => 1.0,
            PulseFamily::Src | PulseFamily::Sdj => 1.0 + a,
            _ => 0.5 * (1.0 + a),
        };
        PulseMetadata {
            q_bar,
            q_zero,
            b_ts,
            energy_ratio: f.is_root_nyquist().then_some(1.0),
            is_nyquist: f.is_nyquist(),
            is_root_nyquist: f.is_root_nyquist(),
        }
    }

    /// Lowpass bandwidth `B` in Hz (per unit of `1/Ts`).
    pub fn bandwidth(&self) -> f64 {
        self.metadata().b_ts / self.ts
    }

    /// Pulse energy from the closed form (root-Nyquist pulses only).
    pub fn energy_closed_form(&self) -> Option<f64> {
        self.metadata().energy_ratio.map(|r| r * self.ts)
    }

    /// Analytic envelope of `|v(x)|` in normalized time.
    pub fn envelope(&self) -> Envelope {
        let a = self.alpha;
        let far = (1.0 / a).max(1.0);
        match self.family {
            PulseFamily::Rc => Envelope {
                coeff: 1.0 / (3.0 * PI * a * a),
                power: 3,
                from: far,
            },
            PulseFamily::Src => Envelope {
                coeff: (1.0 / (3.0 * PI * a * a)).powi(2),
                power: 6,
                from: far,
            },
            PulseFamily::Poly => Envelope {
                coeff: 0.28 / (a * a * a),
                power: 4,
                from: far,
            },
            PulseFamily::Pl => Envelope {
                coeff: 1.0 / (PI * PI * a),
                power: 2,
                from: 1.0,
            },
            PulseFamily::Btn => Envelope {
                coeff: 2.0 * LN_2 / (PI * PI * a) + 3.0 * LN_2 * LN_2 / (PI.powi(3) * a * a),
                power: 2,
                from: 1.0,
            },
            PulseFamily::S2 | PulseFamily::Sdj => Envelope {
                coeff: 1.0 / (PI * PI),
                power: 2,
                from: 1.0,
            },
            PulseFamily::Rrc => Envelope {
                coeff: 1.0 / (3.0 * PI * a),
                power: 2,
                from: far,
            },
            PulseFamily::Xia => Envelope {
                coeff: 1.0 / (PI * a),
                power: 2,
                from: far,
            },
        }
    }

    /// Large-|x| expansion used to integrate the slowly decaying tails exactly.
    pub fn tail_model(&self) -> TailModel {
        let a = self.alpha;
        let far = (1.0 / a).max(1.0);
        let exact = Envelope {
            coeff: 0.0,
            power: 3,
            from: 1.0,
        };
        let cos_term = |freq: f64, amp: f64| TailTerm {
            freq,
            cos_amp: amp,
            sin_amp: 0.0,
        };
        match self.family {
            PulseFamily::Rc | PulseFamily::Src | PulseFamily::Poly => TailModel {
                terms: Vec::new(),
                residual: self.envelope(),
            },
            PulseFamily::Pl => {
                let c = 1.0 / (2.0 * PI * PI * a);
                TailModel {
                    terms: vec![cos_term(0.5 * (1.0 - a), c), cos_term(0.5 * (1.0 + a), -c)],
                    residual: exact,
                }
            }
            PulseFamily::Btn => {
                let c = LN_2 / (PI * PI * a);
                TailModel {
                    terms: vec![cos_term(0.5 * (1.0 - a), c), cos_term(0.5 * (1.0 + a), -c)],
                    residual: Envelope {
                        coeff: 0.054 / (a * a),
                        power: 3,
                        from: far,
                    },
                }
            }
            PulseFamily::S2 => {
                let c = 1.0 / (2.0 * PI * PI);
                TailModel {
                    terms: vec![cos_term(0.0, c), cos_term(1.0, -c)],
                    residual: exact,
                }
            }
            PulseFamily::Sdj => {
                let c = 1.0 / (4.0 * PI * PI);
                TailModel {
                    terms: vec![
                        cos_term(0.0, c),
                        cos_term(a, c),
                        cos_term(1.0, -c),
                        cos_term(1.0 - a, -0.5 * c),
                        cos_term(1.0 + a, -0.5 * c),
                    ],
                    residual: exact,
                }
            }
            PulseFamily::Rrc => TailModel {
                terms: vec![cos_term(0.5 * (1.0 + a), -1.0 / (4.0 * PI * a))],
                residual: Envelope {
                    coeff: 1.0 / (12.0 * PI * a * a),
                    power: 3,
                    from: far,
                },
            },
            PulseFamily::Xia => {
                let s = 1.0 / (4.0 * PI * a);
                let sin_term = |freq: f64| TailTerm {
                    freq,
                    cos_amp: 0.0,
                    sin_amp: s,
                };
                TailModel {
                    terms: vec![sin_term(0.5 * (1.0 + a)), sin_term(0.5 * (1.0 - a))],
                    residual: Envelope {
                        coeff: 1.0 / (2.0 * PI * a * a),
                        power: 3,
                        from: far,
                    },
                }
            }
        }
    }

    /// Half-width (seconds) beyond which the envelope of `|q|` drops below
    /// `level`; used as the minimum guard for finite symbol blocks.
    pub fn effective_support(&self, level: f64) -> f64 {
        let env = self.envelope();
        let x = (env.coeff / level).powf(1.0 / env.power as f64);
        x.max(env.from) * self.ts
    }
}

fn rc(a: f64, x: f64) -> f64 {
    let xs = 0.5 / a;
    if (x.abs() - xs).abs() < SINGULARITY_WINDOW {
        return FRAC_PI_4 * sinc(x);
    }
    let u = 2.0 * a * x;
    let d = 1.0 - u.abs();
    // cos(πu/2) = sin(πd/2) keeps the 0/0 near |u| = 1 well conditioned
    let h = if d.abs() < 0.5 {
        sin_pi(0.5 * d) / (d * (1.0 + u.abs()))
    } else {
        cos_pi(0.5 * u) / (1.0 - u * u)
    };
    sinc(x) * h
}

fn poly(a: f64, x: f64) -> f64 {
    if x.abs() < SINGULARITY_WINDOW {
        return 1.0;
    }
    let y = PI * a * x;
    // f(y) = 4 (2 − 2cos y − y sin y) / y⁴ = (sinc(ax/2)² − sinc(ax)) / (πax/2)²
    let f = if y.abs() < 0.5 {
        let y2 = y * y;
        let mut sum = 0.0;
        let mut pow = 1.0;
        let mut fact = 24.0; // (2m)! for m = 2
        for m in 2..14 {
            let mf = m as f64;
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * (2.0 * mf - 2.0) / fact * pow;
            pow *= y2;
            fact *= (2.0 * mf + 1.0) * (2.0 * mf + 2.0);
        }
        4.0 * sum
    } else {
        4.0 * (2.0 - 2.0 * cos_pi(a * x) - y * sin_pi(a * x)) / (y * y * y * y)
    };
    3.0 * sinc(x) * f
}

fn rrc(a: f64, x: f64) -> f64 {
    if x.abs() < SINGULARITY_WINDOW {
        return 1.0 - a + 4.0 * a / PI;
    }
    let xs = 0.25 / a;
    if (x.abs() - xs).abs() < SINGULARITY_WINDOW {
        let arg = PI / (4.0 * a);
        return a / 2f64.sqrt()
            * ((1.0 + 2.0 / PI) * arg.sin() + (1.0 - 2.0 / PI) * arg.cos());
    }
    let u = 4.0 * a * x;
    (sin_pi((1.0 - a) * x) + u * cos_pi((1.0 + a) * x)) / (PI * x * (1.0 - u * u))
}

fn xia(a: f64, x: f64) -> f64 {
    let xs = -0.5 / a;
    if (x - xs).abs() < SINGULARITY_WINDOW {
        return FRAC_PI_2 * sinc(x);
    }
    let v = 1.0 + 2.0 * a * x;
    // cos(πax) = sin(πv/2) near the pole of 1/v
    let h = if v.abs() < 0.5 {
        sin_pi(0.5 * v) / v
    } else {
        cos_pi(a * x) / v
    };
    sinc(x) * h
}
