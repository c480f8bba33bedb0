use crate::table::Format;
use imdd_core::link::ReceiverKind;
use imdd_core::power::Scenario;
use imdd_core::{Error, PulseFamily, ALPHA_MIN};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error as ThisError;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "IMDD_OUT_DIR";

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical { .. } | Error::Divergence { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

/// Inclusive roll-off grid `start:stop:step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl AlphaGrid {
    pub fn single(a: f64) -> Self {
        AlphaGrid {
            start: a,
            stop: a,
            step: 1.0,
        }
    }

    /// Grid points computed as `start + i·step` and rounded to 12 decimals,
    /// so no rounding accumulates; a last point within 1e-9 of `stop`
    /// snaps to it.
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n)
            .map(|i| {
                let v = ((self.start + i as f64 * self.step) * 1e12).round() / 1e12;
                if (v - self.stop).abs() < 1e-9 {
                    self.stop
                } else {
                    v
                }
            })
            .collect()
    }
}

impl FromStr for AlphaGrid {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Usage(format!("alpha must be a number or start:stop:step, got '{s}'"));
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| p.trim().parse::<f64>().map_err(|_| bad());
        let grid = match parts.as_slice() {
            [a] => AlphaGrid::single(num(a)?),
            [a, b, c] => AlphaGrid {
                start: num(a)?,
                stop: num(b)?,
                step: num(c)?,
            },
            _ => return Err(bad()),
        };
        if !(grid.step > 0.0 && grid.step.is_finite()) {
            return Err(CliError::Usage(format!("alpha step must be > 0, got {}", grid.step)));
        }
        if !(grid.start.is_finite() && grid.stop.is_finite() && grid.start <= grid.stop) {
            return Err(CliError::Usage(format!("alpha range {s} is empty")));
        }
        if grid.start < ALPHA_MIN || grid.stop > 1.0 {
            return Err(CliError::Usage(format!(
                "alpha must lie in [{ALPHA_MIN}, 1], got {s}"
            )));
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Bias,
    Waveform,
    Eye,
    Ser,
    Gain,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Bias => "bias",
            Command::Waveform => "waveform",
            Command::Eye => "eye",
            Command::Ser => "ser",
            Command::Gain => "gain",
        }
    }
}

/// A fully parsed run. Options that a command does not use are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub pulses: Vec<PulseFamily>,
    pub alpha: AlphaGrid,
    pub ms: Vec<usize>,
    pub scenario: Scenario,
    pub receivers: Vec<ReceiverKind>,
    pub p_err: f64,
    pub seed: u64,
    /// Output file; `None` writes `<command>.<ext>` in the default directory.
    pub out: Option<PathBuf>,
    pub format: Format,
    pub amp_a: Option<f64>,
    /// Tune `A` so the analytic SER equals this value.
    pub target_ser: Option<f64>,
    pub n0: f64,
    pub n_symbols: u64,
    pub rate: usize,
    pub traces: usize,
    pub symbols: Option<Vec<usize>>,
    pub n_random: usize,
    pub mu: Option<f64>,
    pub allow_isi: bool,
    /// Adds the `eye_ratio_db` column to gain tables.
    pub debug: bool,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            pulses: vec![PulseFamily::Rc],
            alpha: AlphaGrid::single(0.5),
            ms: vec![2],
            scenario: Scenario::EqualEye,
            receivers: vec![ReceiverKind::Sampling, ReceiverKind::Matched],
            p_err: 1e-6,
            seed: 1,
            out: None,
            format: Format::Csv,
            amp_a: None,
            target_ser: None,
            n0: 1.0,
            n_symbols: 100_000,
            rate: 32,
            traces: 64,
            symbols: None,
            n_random: 32,
            mu: None,
            allow_isi: false,
            debug: false,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.pulses.is_empty() || self.ms.is_empty() || self.receivers.is_empty() {
            return Err(CliError::Usage("pulse, m and receiver lists must be nonempty".into()));
        }
        if let Some(m) = self.ms.iter().find(|&&m| m < 2) {
            return Err(CliError::Usage(format!("modulation order must be ≥ 2, got {m}")));
        }
        if matches!(self.command, Command::Waveform | Command::Eye)
            && (self.pulses.len() > 1 || self.ms.len() > 1 || self.alpha.values().len() > 1)
        {
            return Err(CliError::Usage(format!(
                "{} takes a single pulse, alpha and m",
                self.command.name()
            )));
        }
        if self.command == Command::Ser && self.amp_a.is_some() == self.target_ser.is_some() {
            return Err(CliError::Usage("ser needs exactly one of --a and --target-ser".into()));
        }
        Ok(())
    }

    /// Output path: `--out`, else `<command>.<ext>` under `$IMDD_OUT_DIR`,
    /// else under the working directory.
    pub fn output_path(&self) -> PathBuf {
        match &self.out {
            Some(p) => p.clone(),
            None => default_dir().join(format!("{}.{}", self.command.name(), self.format.extension())),
        }
    }
}

pub fn default_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Creates the parent directory and opens `path` for writing, so an
/// unwritable destination fails before any computation.
pub fn open_output(path: &Path) -> Result<std::fs::File, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!(
            "cannot create output directory {}: {e}",
            dir.display()
        )))?;
    }
    std::fs::File::create(path)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_no_drift() {
        let g: AlphaGrid = "0.01:1:0.005".parse().unwrap();
        let v = g.values();
        assert_eq!(v.len(), 199);
        assert_eq!(*v.last().unwrap(), 1.0);
        assert!(v.iter().all(|&a| a <= 1.0));
        let g: AlphaGrid = "0.3:1.0:0.1".parse().unwrap();
        assert_eq!(g.values().len(), 8);
        assert!(g.values().contains(&0.7));
        assert_eq!("0.6".parse::<AlphaGrid>().unwrap().values(), vec![0.6]);
    }

    #[test]
    fn grid_rejects_bad_input() {
        for s in ["0.5:0.2:0.1", "0.1:1:0", "0.1:1:-1", "x", "0.1:1", "0:1:0.1", "0.5:1.5:0.1"] {
            assert!(s.parse::<AlphaGrid>().is_err(), "{s}");
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::from(Error::Domain("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(Error::Divergence { required: 9, cap: 1 }).exit_code(), 3);
    }

    #[test]
    fn ser_needs_one_amplitude_source() {
        let mut c = RunConfig::new(Command::Ser);
        assert!(c.validate().is_err());
        c.amp_a = Some(1.0);
        assert!(c.validate().is_ok());
        c.target_ser = Some(1e-2);
        assert!(c.validate().is_err());
    }
}
