use crate::config::{open_output, CliError, Command, RunConfig};
use crate::table::{Cell, Format, Table};
use imdd_core::link::{amplitude_for_ser, Link, LinkConfig, ReceiverKind};
use imdd_core::power::{sweep, Scenario, SweepSpec};
use imdd_core::waveform::{eye_diagram, min_guard, synthesize, GuardPolicy, SynthesisParams};
use imdd_core::{required_bias, BiasOptions, Constellation, PulseFamily, PulseSpec};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

/// What a run wrote.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub path: PathBuf,
    pub rows: usize,
    /// Rows that carry an error message.
    pub failed: usize,
    pub gain_range: Option<(f64, f64)>,
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} rows", self.path.display(), self.rows)?;
        if self.failed > 0 {
            write!(f, " ({} failed)", self.failed)?;
        }
        if let Some((lo, hi)) = self.gain_range {
            write!(f, ", gain {lo:.3} to {hi:.3} dB")?;
        }
        Ok(())
    }
}

struct Output {
    table: Table,
    failed: usize,
    gain_range: Option<(f64, f64)>,
}

impl Output {
    fn plain(table: Table) -> Self {
        Output {
            table,
            failed: 0,
            gain_range: None,
        }
    }
}

fn write_table(path: &Path, file: std::fs::File, out: Output, format: Format) -> Result<Summary, CliError> {
    let mut file = file;
    file.write_all(out.table.render(format).as_bytes())
        .map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    Ok(Summary {
        path: path.to_path_buf(),
        rows: out.table.rows.len(),
        failed: out.failed,
        gain_range: out.gain_range,
    })
}

fn alphas_for(family: PulseFamily, alphas: &[f64]) -> Vec<Option<f64>> {
    if family.uses_alpha() {
        alphas.iter().map(|&a| Some(a)).collect()
    } else {
        vec![None]
    }
}

fn alpha_cell(a: Option<f64>) -> Cell {
    Cell::opt(a)
}

fn compatible(family: PulseFamily, rx: ReceiverKind) -> bool {
    match rx {
        ReceiverKind::Sampling => family.is_nyquist(),
        ReceiverKind::Matched => family.is_root_nyquist(),
    }
}

/// Runs one command and writes its table.
pub fn run(config: &RunConfig) -> Result<Summary, CliError> {
    config.validate()?;
    let path = config.output_path();
    let file = open_output(&path)?;
    let out = match config.command {
        Command::Bias => bias_table(&config.pulses, &config.alpha.values(), &config.ms),
        Command::Gain => gain_table(
            &SweepSpec {
                scenario: config.scenario,
                pulses: config.pulses.clone(),
                alphas: config.alpha.values(),
                ms: config.ms.clone(),
                receivers: config.receivers.clone(),
                p_err: config.p_err,
            },
            config.debug,
        ),
        Command::Ser => ser_table(config)?,
        Command::Waveform => {
            let (pulse, c) = single(config)?;
            let symbols = match &config.symbols {
                Some(s) => s.clone(),
                None => random_symbols(c.m(), config.n_random, config.seed),
            };
            let mu = match config.mu {
                Some(mu) => mu,
                None => required_bias(&pulse, &c, &BiasOptions::default())?.mu,
            };
            let params = SynthesisParams {
                amp_a: config.amp_a.unwrap_or(1.0),
                mu,
                rate: config.rate,
                guard: min_guard(&pulse),
                guard_policy: GuardPolicy::Random {
                    seed: config.seed.wrapping_add(1),
                },
            };
            waveform_table(&pulse, &c, &symbols, &params)?
        }
        Command::Eye => {
            let (pulse, c) = single(config)?;
            let rx = match config.receivers.as_slice() {
                [rx] => *rx,
                _ => ReceiverKind::Sampling,
            };
            eye_table(&pulse, &c, rx, config.traces, config.rate, config.seed)?
        }
    };
    write_table(&path, file, out, config.format)
}

fn single(config: &RunConfig) -> Result<(PulseSpec, Constellation), CliError> {
    let family = config.pulses[0];
    let alpha = if family.uses_alpha() { config.alpha.start } else { 0.0 };
    Ok((PulseSpec::new(family, alpha)?, Constellation::pam(config.ms[0])?))
}

fn random_symbols(m: usize, n: usize, seed: u64) -> Vec<usize> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(0..m)).collect()
}

fn bias_table(pulses: &[PulseFamily], alphas: &[f64], ms: &[usize]) -> Output {
    let mut jobs = Vec::new();
    for &f in pulses {
        for a in alphas_for(f, alphas) {
            for &m in ms {
                jobs.push((f, a, m));
            }
        }
    }
    jobs.sort_by(|x, y| {
        x.0.cmp(&y.0)
            .then(x.1.unwrap_or(-1.0).total_cmp(&y.1.unwrap_or(-1.0)))
            .then(x.2.cmp(&y.2))
    });
    jobs.dedup();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(f, a, m)| {
            let pulse = PulseSpec::new(f, a.unwrap_or(0.0))?;
            let c = Constellation::pam(m)?;
            Ok::<_, imdd_core::Error>((required_bias(&pulse, &c, &BiasOptions::default())?, c.a_hat()))
        })
        .collect();
    let mut table = Table::new(&["pulse", "alpha", "m", "mu", "mu_over_ahat", "argmax_t", "k_trunc"]);
    let mut errors = Vec::new();
    for (&(f, a, m), r) in jobs.iter().zip(results) {
        match r {
            Ok((s, a_hat)) => {
                table.push(vec![
                    f.name().into(),
                    alpha_cell(a),
                    m.into(),
                    s.mu.into(),
                    (s.mu / a_hat).into(),
                    s.argmax_t.into(),
                    s.k_trunc.into(),
                ]);
                errors.push(None);
            }
            Err(e) => {
                table.push(vec![f.name().into(), alpha_cell(a), m.into(), Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty]);
                errors.push(Some(e.to_string()));
            }
        }
    }
    let failed = errors.iter().filter(|e| e.is_some()).count();
    Output {
        table: table.with_errors(&errors),
        failed,
        gain_range: None,
    }
}

fn gain_table(spec: &SweepSpec, debug: bool) -> Output {
    let mut points = sweep(spec);
    points.sort_by(|x, y| {
        x.pulse
            .cmp(&y.pulse)
            .then(x.alpha.unwrap_or(-1.0).total_cmp(&y.alpha.unwrap_or(-1.0)))
            .then(x.m.cmp(&y.m))
            .then(x.receiver.cmp(&y.receiver))
    });
    let mut cols = vec![
        "scenario", "receiver", "pulse", "alpha", "m", "b_tb", "gain_db", "mu", "q_bar", "q_zero",
    ];
    if debug {
        cols.push("eye_ratio_db");
    }
    let mut table = Table::new(&cols);
    let mut errors = Vec::new();
    for p in &points {
        let mut row = vec![
            p.scenario.name().into(),
            p.receiver.name().into(),
            p.pulse.name().into(),
            alpha_cell(p.alpha),
            p.m.into(),
            p.b_tb.into(),
            p.gain_db.into(),
            p.mu.into(),
            p.q_bar.into(),
            p.q_zero.into(),
        ];
        if debug {
            row.push(Cell::opt(p.eye_ratio_db));
        }
        table.push(row);
        errors.push(p.error.clone());
    }
    let gains: Vec<f64> = points.iter().map(|p| p.gain_db).filter(|g| g.is_finite()).collect();
    let gain_range = (!gains.is_empty()).then(|| {
        (
            gains.iter().copied().fold(f64::INFINITY, f64::min),
            gains.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    });
    let failed = errors.iter().filter(|e| e.is_some()).count();
    Output {
        table: table.with_errors(&errors),
        failed,
        gain_range,
    }
}

fn ser_table(config: &RunConfig) -> Result<Output, CliError> {
    let mut jobs = Vec::new();
    for &f in &config.pulses {
        for a in alphas_for(f, &config.alpha.values()) {
            for &m in &config.ms {
                for &rx in &config.receivers {
                    if config.allow_isi || compatible(f, rx) {
                        jobs.push((f, a, m, rx));
                    }
                }
            }
        }
    }
    if jobs.is_empty() {
        return Err(CliError::Usage(
            "no pulse is ISI-free with the chosen receivers; pass --allow-isi to simulate anyway".into(),
        ));
    }
    jobs.sort_by(|x, y| {
        x.0.cmp(&y.0)
            .then(x.1.unwrap_or(-1.0).total_cmp(&y.1.unwrap_or(-1.0)))
            .then(x.2.cmp(&y.2))
            .then(x.3.cmp(&y.3))
    });
    let mut table = Table::new(&[
        "pulse", "alpha", "M", "receiver", "A", "N0", "p_analytic", "p_hat", "ci95", "n",
    ]);
    let mut errors = Vec::new();
    for (f, a, m, rx) in jobs {
        let one = || -> Result<(f64, imdd_core::link::SerEstimate), imdd_core::Error> {
            let mut lc = LinkConfig::new(PulseSpec::new(f, a.unwrap_or(0.0))?, Constellation::pam(m)?, rx);
            lc.n0 = config.n0;
            lc.rate = config.rate;
            lc.seed = config.seed;
            lc.allow_isi = config.allow_isi;
            lc.amp_a = match (config.amp_a, config.target_ser) {
                (Some(amp), _) => amp,
                (None, Some(p)) => amplitude_for_ser(&lc, p)?,
                (None, None) => unreachable!("validated"),
            };
            let est = Link::new(lc.clone())?.monte_carlo_ser(config.n_symbols, None)?;
            Ok((lc.amp_a, est))
        };
        let head: Vec<Cell> = vec![f.name().into(), alpha_cell(a), m.into(), rx.name().into()];
        match one() {
            Ok((amp, est)) => {
                let mut row = head;
                row.extend([
                    amp.into(),
                    config.n0.into(),
                    Cell::opt(est.p_analytic),
                    est.p_hat.into(),
                    est.ci95.into(),
                    est.n_symbols.into(),
                ]);
                table.push(row);
                errors.push(None);
            }
            Err(e) => {
                let mut row = head;
                row.extend([Cell::opt(config.amp_a), config.n0.into()]);
                row.extend(std::iter::repeat_n(Cell::Empty, 4));
                table.push(row);
                errors.push(Some(e.to_string()));
            }
        }
    }
    let failed = errors.iter().filter(|e| e.is_some()).count();
    Ok(Output {
        table: table.with_errors(&errors),
        failed,
        gain_range: None,
    })
}

fn waveform_table(
    pulse: &PulseSpec,
    c: &Constellation,
    symbols: &[usize],
    params: &SynthesisParams,
) -> Result<Output, CliError> {
    let grid = synthesize(pulse, c, symbols, params)?;
    let mut table = Table::new(&["t", "value"]);
    for (i, &v) in grid.samples.iter().enumerate() {
        table.push(vec![grid.time(i).into(), v.into()]);
    }
    Ok(Output::plain(table))
}

fn eye_table(
    pulse: &PulseSpec,
    c: &Constellation,
    rx: ReceiverKind,
    traces: usize,
    rate: usize,
    seed: u64,
) -> Result<Output, CliError> {
    let eye = eye_diagram(pulse, c, rx, traces, rate, seed)?;
    let mut table = Table::new(&["trace", "t", "value"]);
    for (k, tr) in eye.traces.iter().enumerate() {
        for (i, &v) in tr.iter().enumerate() {
            table.push(vec![k.into(), eye.offset(i).into(), v.into()]);
        }
    }
    Ok(Output::plain(table))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl std::str::FromStr for Figure {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "fig2" => Ok(Figure::Fig2),
            "fig3" => Ok(Figure::Fig3),
            "fig4" => Ok(Figure::Fig4),
            "fig5" => Ok(Figure::Fig5),
            "fig6" => Ok(Figure::Fig6),
            _ => Err(CliError::Usage(format!("unknown figure '{s}'"))),
        }
    }
}

/// Roll-off grid of the bias and gain curves.
pub const FIGURE_ALPHAS: (f64, f64, f64) = (0.01, 1.0, 0.005);

fn figure_alphas() -> Vec<f64> {
    let (start, stop, step) = FIGURE_ALPHAS;
    crate::config::AlphaGrid { start, stop, step }.values()
}

/// Writes the dataset behind a figure into `dir`, one file per panel or
/// curve family.
pub fn reproduce(figure: Figure, dir: &Path, format: Format, seed: u64) -> Result<Vec<Summary>, CliError> {
    let file = |name: &str| dir.join(format!("{name}.{}", format.extension()));
    let mut plan: Vec<(PathBuf, Box<dyn Fn() -> Result<Output, CliError>>)> = Vec::new();
    match figure {
        Figure::Fig2 => {
            let ook = Constellation::ook();
            for (name, family, biased) in [
                ("fig2_rc", PulseFamily::Rc, true),
                ("fig2_rc_unbiased", PulseFamily::Rc, false),
                ("fig2_src", PulseFamily::Src, true),
            ] {
                let c = ook.clone();
                plan.push((
                    file(name),
                    Box::new(move || {
                        let pulse = PulseSpec::new(family, 0.6)?;
                        let mu = if biased {
                            required_bias(&pulse, &c, &BiasOptions::default())?.mu
                        } else {
                            0.0
                        };
                        let params = SynthesisParams {
                            amp_a: 1.0,
                            mu,
                            rate: 32,
                            guard: min_guard(&pulse),
                            guard_policy: GuardPolicy::Random { seed: seed.wrapping_add(1) },
                        };
                        waveform_table(&pulse, &c, &random_symbols(2, 16, seed), &params)
                    }),
                ));
            }
        }
        Figure::Fig3 => {
            for family in [PulseFamily::Rc, PulseFamily::Pl, PulseFamily::Btn, PulseFamily::Xia] {
                plan.push((
                    file(&format!("fig3_{}", family.name())),
                    Box::new(move || {
                        let pulse = PulseSpec::new(family, 0.6)?;
                        eye_table(&pulse, &Constellation::ook(), ReceiverKind::Sampling, 64, 32, seed)
                    }),
                ));
            }
        }
        Figure::Fig4 => plan.push((
            file("fig4"),
            Box::new(|| Ok(bias_table(&PulseFamily::ALL, &figure_alphas(), &[2]))),
        )),
        Figure::Fig5 => plan.push((
            file("fig5"),
            Box::new(|| {
                Ok(gain_table(
                    &SweepSpec {
                        scenario: Scenario::EqualEye,
                        pulses: PulseFamily::ALL.iter().copied().filter(|f| f.is_nyquist()).collect(),
                        alphas: figure_alphas(),
                        ms: vec![2, 4],
                        receivers: vec![ReceiverKind::Sampling],
                        p_err: 1e-6,
                    },
                    false,
                ))
            }),
        )),
        Figure::Fig6 => plan.push((
            file("fig6"),
            Box::new(|| {
                Ok(gain_table(
                    &SweepSpec {
                        scenario: Scenario::EqualSer,
                        pulses: PulseFamily::ALL.to_vec(),
                        alphas: figure_alphas(),
                        ms: vec![2, 4],
                        receivers: vec![ReceiverKind::Sampling, ReceiverKind::Matched],
                        p_err: 1e-6,
                    },
                    false,
                ))
            }),
        )),
    }
    let files = plan
        .iter()
        .map(|(p, _)| open_output(p))
        .collect::<Result<Vec<_>, _>>()?;
    plan.into_iter()
        .zip(files)
        .map(|((path, build), f)| write_table(&path, f, build()?, format))
        .collect()
}
