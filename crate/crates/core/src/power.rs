//! Optical power gain against the unit-amplitude S2/OOK reference with a
//! sampling receiver, at equal eye opening or equal symbol error rate.
//!
//! Every gain is `10 log10(A_ref E_ref{a} / (A (μ + E{a} q̄)))` with
//! `E_ref{a} = 1/2` and `Δa_ref = 1`; the scenarios differ only in how
//! `A_ref/A` is fixed. The reference therefore sits at exactly 0 dB.

use crate::bias::{required_bias, BiasOptions};
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::link::ReceiverKind;
use crate::pulse::{PulseFamily, PulseSpec};
use crate::special::q_inverse;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    EqualEye,
    EqualSer,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::EqualEye => "equal-eye",
            Scenario::EqualSer => "equal-ser",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "equal-eye" | "eye" => Ok(Scenario::EqualEye),
            "equal-ser" | "ser" => Ok(Scenario::EqualSer),
            _ => Err(Error::Domain(format!("unknown scenario '{s}'"))),
        }
    }
}

/// One point of a gain curve. Failed points keep their inputs, carry NaN
/// values and an error message.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainPoint {
    pub scenario: Scenario,
    pub receiver: ReceiverKind,
    pub pulse: PulseFamily,
    /// `None` for the α-free reference pulse.
    pub alpha: Option<f64>,
    pub m: usize,
    /// `B·Tb` with `Tb = Ts/log2 M`.
    pub b_tb: f64,
    pub gain_db: f64,
    pub mu: f64,
    pub q_bar: f64,
    pub q_zero: f64,
    /// `10 log10(Δa q(0)/(μ + E{a} q̄))`, the equal-eye expression without
    /// the reference's `E_ref{a}`; equal-eye points only.
    pub eye_ratio_db: Option<f64>,
    pub error: Option<String>,
}

fn bits(c: &Constellation) -> f64 {
    (c.m() as f64).log2()
}

/// `B·Tb` for a pulse used with `c`.
pub fn b_tb(pulse: &PulseSpec, c: &Constellation) -> f64 {
    pulse.metadata().b_ts / bits(c)
}

fn require_receiver(receiver: ReceiverKind, pulse: &PulseSpec) -> Result<()> {
    let fam = pulse.family();
    let ok = match receiver {
        ReceiverKind::Sampling => fam.is_nyquist(),
        ReceiverKind::Matched => fam.is_root_nyquist(),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "{} is not ISI-free with the {receiver} receiver",
            pulse.label()
        )))
    }
}

fn mean_power(pulse: &PulseSpec, c: &Constellation, mu: f64) -> f64 {
    mu + c.mean() * pulse.metadata().q_bar
}

/// Gain at equal noise-free eye opening with a sampling receiver.
pub fn gain_equal_eye(pulse: &PulseSpec, c: &Constellation) -> Result<f64> {
    let mu = required_bias(pulse, c, &BiasOptions::default())?.mu;
    gain_equal_eye_at(pulse, c, mu)
}

/// [`gain_equal_eye`] at a given bias.
pub fn gain_equal_eye_at(pulse: &PulseSpec, c: &Constellation, mu: f64) -> Result<f64> {
    require_receiver(ReceiverKind::Sampling, pulse)?;
    let ratio = c.delta_a() * pulse.metadata().q_zero;
    Ok(10.0 * (0.5 * ratio / mean_power(pulse, c, mu)).log10())
}

/// `A_ref/A` giving both systems the symbol error rate `p_err`.
pub fn amp_ratio_equal_ser(
    receiver: ReceiverKind,
    pulse: &PulseSpec,
    c: &Constellation,
    p_err: f64,
) -> Result<f64> {
    require_receiver(receiver, pulse)?;
    if !c.is_uniform_pam() {
        return Err(Error::Unsupported(format!(
            "equal-SER gain needs equally spaced levels, got {}",
            c.label()
        )));
    }
    let m = c.m() as f64;
    let p_max = (m - 1.0) / m;
    if !(p_err > 0.0 && p_err < p_max) {
        return Err(Error::Domain(format!(
            "SER must lie in (0, {p_max}) for M = {m}, got {p_err}"
        )));
    }
    let q_ratio = q_inverse(p_err) / q_inverse(p_err * m / (2.0 * (m - 1.0)));
    let meta = pulse.metadata();
    // the reference bandwidth is 1/Tb, so B_ref·Ts = log2 M
    Ok(match receiver {
        ReceiverKind::Sampling => {
            c.delta_a() * meta.q_zero * q_ratio * (bits(c) / meta.b_ts).sqrt()
        }
        ReceiverKind::Matched => {
            let eq = meta
                .energy_ratio
                .ok_or_else(|| Error::Unsupported("pulse energy has no closed form".into()))?;
            c.delta_a() * std::f64::consts::SQRT_2 * q_ratio * (eq * bits(c)).sqrt()
        }
    })
}

/// Gain at equal symbol error rate.
pub fn gain_equal_ser(
    receiver: ReceiverKind,
    pulse: &PulseSpec,
    c: &Constellation,
    p_err: f64,
) -> Result<f64> {
    let mu = required_bias(pulse, c, &BiasOptions::default())?.mu;
    gain_equal_ser_at(receiver, pulse, c, p_err, mu)
}

/// [`gain_equal_ser`] at a given bias.
pub fn gain_equal_ser_at(
    receiver: ReceiverKind,
    pulse: &PulseSpec,
    c: &Constellation,
    p_err: f64,
    mu: f64,
) -> Result<f64> {
    let ratio = amp_ratio_equal_ser(receiver, pulse, c, p_err)?;
    Ok(10.0 * (0.5 * ratio / mean_power(pulse, c, mu)).log10())
}

/// Inputs of a gain sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub scenario: Scenario,
    pub pulses: Vec<PulseFamily>,
    pub alphas: Vec<f64>,
    /// PAM orders; each uses the levels `{0, ..., M−1}`.
    pub ms: Vec<usize>,
    /// Receivers to evaluate; pairs that are not ISI-free are skipped.
    /// Equal-eye uses the sampling receiver only.
    pub receivers: Vec<ReceiverKind>,
    /// Target SER for the equal-SER scenario.
    pub p_err: f64,
}

/// Evaluates one gain point, recording failures in the point.
pub fn gain_point(
    scenario: Scenario,
    receiver: ReceiverKind,
    family: PulseFamily,
    alpha: Option<f64>,
    m: usize,
    p_err: f64,
) -> GainPoint {
    gain_point_with(scenario, receiver, family, alpha, m, p_err, None)
}

/// As [`gain_point`]; `ook_mu` is the OOK bias of the same pulse, which
/// for the levels `{0, ..., M−1}` scales by `M − 1`.
fn gain_point_with(
    scenario: Scenario,
    receiver: ReceiverKind,
    family: PulseFamily,
    alpha: Option<f64>,
    m: usize,
    p_err: f64,
    ook_mu: Option<std::result::Result<f64, String>>,
) -> GainPoint {
    let mut point = GainPoint {
        scenario,
        receiver,
        pulse: family,
        alpha,
        m,
        b_tb: f64::NAN,
        gain_db: f64::NAN,
        mu: f64::NAN,
        q_bar: f64::NAN,
        q_zero: f64::NAN,
        eye_ratio_db: None,
        error: None,
    };
    let run = |point: &mut GainPoint| -> std::result::Result<(), String> {
        let pulse = PulseSpec::new(family, alpha.unwrap_or(0.0)).map_err(|e| e.to_string())?;
        let c = Constellation::pam(m).map_err(|e| e.to_string())?;
        let meta = pulse.metadata();
        point.b_tb = b_tb(&pulse, &c);
        point.q_bar = meta.q_bar;
        point.q_zero = meta.q_zero;
        let mu = match ook_mu {
            Some(r) => r? * (m as f64 - 1.0),
            None => required_bias(&pulse, &c, &BiasOptions::default()).map_err(|e| e.to_string())?.mu,
        };
        point.mu = mu;
        point.gain_db = match scenario {
            Scenario::EqualEye => {
                let g = gain_equal_eye_at(&pulse, &c, mu).map_err(|e| e.to_string())?;
                point.eye_ratio_db = Some(g + 10.0 * 2f64.log10());
                g
            }
            Scenario::EqualSer => {
                gain_equal_ser_at(receiver, &pulse, &c, p_err, mu).map_err(|e| e.to_string())?
            }
        };
        Ok(())
    };
    if let Err(e) = run(&mut point) {
        point.error = Some(e);
    }
    point
}

/// The S2/OOK sampling-receiver reference, 0 dB by construction.
pub fn reference_point(scenario: Scenario, p_err: f64) -> GainPoint {
    gain_point(scenario, ReceiverKind::Sampling, PulseFamily::S2, None, 2, p_err)
}

/// Gain curves over a parameter grid, sorted by `B·Tb`, with the
/// reference row included once.
pub fn sweep(spec: &SweepSpec) -> Vec<GainPoint> {
    let receivers: Vec<ReceiverKind> = match spec.scenario {
        Scenario::EqualEye => vec![ReceiverKind::Sampling],
        Scenario::EqualSer => spec.receivers.clone(),
    };
    let mut jobs = Vec::new();
    for &family in &spec.pulses {
        let alphas: Vec<Option<f64>> = if family.uses_alpha() {
            spec.alphas.iter().map(|&a| Some(a)).collect()
        } else {
            vec![None]
        };
        for &rx in &receivers {
            let ok = match rx {
                ReceiverKind::Sampling => family.is_nyquist(),
                ReceiverKind::Matched => family.is_root_nyquist(),
            };
            if !ok {
                continue;
            }
            for &alpha in &alphas {
                for &m in &spec.ms {
                    jobs.push((rx, family, alpha, m));
                }
            }
        }
    }
    let reference = (ReceiverKind::Sampling, PulseFamily::S2, None, 2);
    if !jobs.contains(&reference) {
        jobs.push(reference);
    }
    let mut keys: Vec<(PulseFamily, Option<f64>)> = jobs.iter().map(|j| (j.1, j.2)).collect();
    keys.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.unwrap_or(-1.0).total_cmp(&b.1.unwrap_or(-1.0))));
    keys.dedup();
    let biases: Vec<std::result::Result<f64, String>> = keys
        .par_iter()
        .map(|&(f, a)| {
            let pulse = PulseSpec::new(f, a.unwrap_or(0.0)).map_err(|e| e.to_string())?;
            required_bias(&pulse, &Constellation::ook(), &BiasOptions::default())
                .map(|s| s.mu)
                .map_err(|e| e.to_string())
        })
        .collect();
    let mut points: Vec<GainPoint> = jobs
        .into_par_iter()
        .map(|(rx, f, a, m)| {
            let i = keys.iter().position(|k| *k == (f, a)).expect("bias key");
            gain_point_with(spec.scenario, rx, f, a, m, spec.p_err, Some(biases[i].clone()))
        })
        .collect();
    points.sort_by(|a, b| {
        a.b_tb
            .total_cmp(&b.b_tb)
            .then(a.pulse.cmp(&b.pulse))
            .then(a.receiver.cmp(&b.receiver))
            .then(a.m.cmp(&b.m))
            .then(a.alpha.unwrap_or(-1.0).total_cmp(&b.alpha.unwrap_or(-1.0)))
    });
    points
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(f: PulseFamily, a: f64) -> PulseSpec {
        PulseSpec::new(f, a).unwrap()
    }

    #[test]
    fn reference_is_zero_db() {
        let s2 = p(PulseFamily::S2, 0.0);
        let ook = Constellation::ook();
        assert_eq!(gain_equal_eye(&s2, &ook).unwrap(), 0.0);
        assert_eq!(amp_ratio_equal_ser(ReceiverKind::Sampling, &s2, &ook, 1e-6).unwrap(), 1.0);
        assert_eq!(gain_equal_ser(ReceiverKind::Sampling, &s2, &ook, 1e-6).unwrap(), 0.0);
        for s in [Scenario::EqualEye, Scenario::EqualSer] {
            let r = reference_point(s, 1e-6);
            assert_eq!(r.gain_db, 0.0);
            assert_eq!(r.alpha, None);
        }
    }

    #[test]
    fn equal_eye_values() {
        let ook = Constellation::ook();
        let sdj = gain_equal_eye(&p(PulseFamily::Sdj, 1.0), &ook).unwrap();
        assert!((sdj - 10.0 * 2f64.log10()).abs() < 1e-9);
        let rc = gain_equal_eye(&p(PulseFamily::Rc, 0.6), &ook).unwrap();
        assert!((rc + 1.36).abs() < 0.01, "{rc}");
        assert!(matches!(
            gain_equal_eye(&p(PulseFamily::Rrc, 0.5), &ook),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn equal_eye_ignores_rescaling() {
        let rc = p(PulseFamily::Btn, 0.4);
        let c = Constellation::pam(4).unwrap();
        let g = gain_equal_eye(&rc, &c).unwrap();
        let g3 = gain_equal_eye(&rc, &c.scaled(3.0).unwrap()).unwrap();
        assert!((g - g3).abs() < 1e-9);
    }

    #[test]
    fn amplitude_ratios() {
        let ook = Constellation::ook();
        for a in [0.2, 0.5, 0.9] {
            let r = amp_ratio_equal_ser(ReceiverKind::Matched, &p(PulseFamily::Rrc, a), &ook, 1e-6).unwrap();
            assert!((r - 2f64.sqrt()).abs() < 1e-12);
        }
        let r = amp_ratio_equal_ser(ReceiverKind::Sampling, &p(PulseFamily::Rc, 0.6), &ook, 1e-6).unwrap();
        assert!((r - (1.0f64 / 0.8).sqrt()).abs() < 1e-12);
        assert!(amp_ratio_equal_ser(ReceiverKind::Sampling, &p(PulseFamily::Rc, 0.6), &ook, 0.5).is_err());
    }

    #[test]
    fn rrc_equal_ser_composes() {
        let rrc = p(PulseFamily::Rrc, 0.5);
        let ook = Constellation::ook();
        let mu = required_bias(&rrc, &ook, &BiasOptions::default()).unwrap().mu;
        let g = gain_equal_ser(ReceiverKind::Matched, &rrc, &ook, 1e-6).unwrap();
        let expect = 10.0 * (2f64.sqrt() * 0.5 / (mu + 0.5)).log10();
        assert!((g - expect).abs() < 1e-12);
    }

    #[test]
    fn sweep_rows() {
        let spec = SweepSpec {
            scenario: Scenario::EqualSer,
            pulses: vec![PulseFamily::Xia, PulseFamily::Src],
            alphas: vec![0.5, 1.0],
            ms: vec![2],
            receivers: vec![ReceiverKind::Sampling, ReceiverKind::Matched],
            p_err: 1e-6,
        };
        let rows = sweep(&spec);
        // Xia with both receivers, SRC with sampling only, plus the reference
        assert_eq!(rows.len(), 7);
        assert!(!rows.iter().any(|r| r.pulse == PulseFamily::Src && r.receiver == ReceiverKind::Matched));
        assert!(rows.windows(2).all(|w| w[0].b_tb <= w[1].b_tb));
        assert!(rows.iter().all(|r| r.error.is_none()));
    }

    #[test]
    fn shared_biases_match_direct_points() {
        let spec = SweepSpec {
            scenario: Scenario::EqualEye,
            pulses: vec![PulseFamily::Btn],
            alphas: vec![0.45],
            ms: vec![2, 4, 8],
            receivers: vec![ReceiverKind::Sampling],
            p_err: 1e-6,
        };
        for row in sweep(&spec).iter().filter(|r| r.pulse == PulseFamily::Btn) {
            let direct = gain_point(row.scenario, row.receiver, row.pulse, row.alpha, row.m, 1e-6);
            assert!((row.mu - direct.mu).abs() < 1e-9 * (1.0 + direct.mu), "{row:?}");
            assert!((row.gain_db - direct.gain_db).abs() < 1e-8);
        }
    }

    #[test]
    fn failures_are_recorded() {
        let pt = gain_point(Scenario::EqualEye, ReceiverKind::Sampling, PulseFamily::Rc, Some(1.5), 2, 1e-6);
        assert!(pt.error.is_some());
        assert!(pt.gain_db.is_nan());
    }
}
