use clap::{Args, Parser, Subcommand, ValueEnum};
use imdd_cli::{reproduce, run, AlphaGrid, CliError, Command, Figure, Format, RunConfig, Summary};
use imdd_core::link::ReceiverKind;
use imdd_core::power::Scenario;
use imdd_core::PulseFamily;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

/// Pulse shaping, DC bias and optical power gain for IM/DD links.
///
/// Every command writes one CSV or JSON file. Without --out the file goes
/// to $IMDD_OUT_DIR (or the working directory) as <command>.<ext>.
/// Exit status: 0 on success (rows that failed carry an error column),
/// 2 for an invalid configuration, 3 for a numerical failure.
#[derive(Parser)]
#[command(name = "imdd", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Minimum DC bias per pulse, roll-off and PAM order.
    Bias {
        #[command(flatten)]
        grid: Grid,
        #[command(flatten)]
        io: Io,
    },
    /// Optical power gain against the S2/OOK sampling reference.
    Gain {
        #[arg(long, value_enum, default_value = "equal-eye")]
        scenario: ScenarioArg,
        /// Receiver(s); equal-eye always uses sampling.
        #[arg(long, value_enum, default_value = "both")]
        receiver: ReceiverArg,
        #[command(flatten)]
        grid: GainGrid,
        /// Target symbol error rate for equal-ser.
        #[arg(long, default_value_t = 1e-6)]
        perr: f64,
        /// Add the eye_ratio_db column (equal-eye ratio without the reference mean).
        #[arg(long)]
        debug: bool,
        #[command(flatten)]
        io: Io,
    },
    /// Monte Carlo symbol error rate with the closed form alongside.
    Ser {
        #[command(flatten)]
        grid: Grid,
        #[arg(long, value_enum, default_value = "sampling")]
        receiver: ReceiverArg,
        /// Amplitude A.
        #[arg(long = "a")]
        amp: Option<f64>,
        /// Choose A so the closed-form SER equals this value.
        #[arg(long, conflicts_with = "amp")]
        target_ser: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        n0: f64,
        /// Symbols to simulate.
        #[arg(long = "n", default_value_t = 100_000)]
        n_symbols: u64,
        #[arg(long, default_value_t = 32)]
        rate: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Simulate pulses that are not ISI-free with the receiver.
        #[arg(long)]
        allow_isi: bool,
        #[command(flatten)]
        io: Io,
    },
    /// Sampled transmit intensity x(t) for one symbol block.
    Waveform {
        #[command(flatten)]
        grid: Grid,
        #[arg(long = "a", default_value_t = 1.0)]
        amp: f64,
        /// DC bias; defaults to the minimum bias.
        #[arg(long)]
        mu: Option<f64>,
        /// Comma-separated symbol indices; random when omitted.
        #[arg(long, value_delimiter = ',')]
        symbols: Option<Vec<usize>>,
        /// Number of random symbols.
        #[arg(long = "n", default_value_t = 32)]
        n_random: usize,
        #[arg(long, default_value_t = 32)]
        rate: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        io: Io,
    },
    /// Noise-free eye diagram traces spanning 2 Ts.
    Eye {
        #[command(flatten)]
        grid: Grid,
        #[arg(long, value_enum, default_value = "sampling")]
        receiver: ReceiverArg,
        #[arg(long, default_value_t = 64)]
        traces: usize,
        #[arg(long, default_value_t = 32)]
        rate: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        io: Io,
    },
    /// Dataset behind one of the figures (fig2 to fig6).
    Reproduce {
        figure: FigureArg,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct Grid {
    /// Pulse families, comma separated: s2, src, sdj, rc, btn, pl, poly, rrc, xia.
    #[arg(long, value_delimiter = ',', default_value = "rc")]
    pulse: Vec<PulseFamily>,
    /// Roll-off: a value or start:stop:step.
    #[arg(long, default_value = "0.5")]
    alpha: String,
    /// PAM orders, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    m: Vec<usize>,
}

#[derive(Args)]
struct GainGrid {
    /// Pulse families, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "s2,src,sdj,rc,btn,pl,poly,rrc,xia")]
    pulse: Vec<PulseFamily>,
    /// Roll-off: a value or start:stop:step.
    #[arg(long, default_value = "0.01:1:0.005")]
    alpha: String,
    /// PAM orders, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    m: Vec<usize>,
}

#[derive(Args)]
struct Io {
    /// Output file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    EqualEye,
    EqualSer,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReceiverArg {
    Sampling,
    Matched,
    Both,
}

impl ReceiverArg {
    fn kinds(self) -> Vec<ReceiverKind> {
        match self {
            ReceiverArg::Sampling => vec![ReceiverKind::Sampling],
            ReceiverArg::Matched => vec![ReceiverKind::Matched],
            ReceiverArg::Both => vec![ReceiverKind::Sampling, ReceiverKind::Matched],
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FigureArg {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl From<FigureArg> for Figure {
    fn from(f: FigureArg) -> Self {
        match f {
            FigureArg::Fig2 => Figure::Fig2,
            FigureArg::Fig3 => Figure::Fig3,
            FigureArg::Fig4 => Figure::Fig4,
            FigureArg::Fig5 => Figure::Fig5,
            FigureArg::Fig6 => Figure::Fig6,
        }
    }
}

fn base(command: Command, pulse: Vec<PulseFamily>, alpha: &str, m: Vec<usize>, io: Io) -> Result<RunConfig, CliError> {
    let mut c = RunConfig::new(command);
    c.pulses = pulse;
    c.alpha = alpha.parse::<AlphaGrid>()?;
    c.ms = m;
    c.out = io.out;
    c.format = io.format.into();
    Ok(c)
}

fn config(cmd: Cmd) -> Result<Result<RunConfig, (Figure, Option<PathBuf>, Format, u64)>, CliError> {
    Ok(Ok(match cmd {
        Cmd::Bias { grid, io } => base(Command::Bias, grid.pulse, &grid.alpha, grid.m, io)?,
        Cmd::Gain {
            scenario,
            receiver,
            grid,
            perr,
            debug,
            io,
        } => {
            let mut c = base(Command::Gain, grid.pulse, &grid.alpha, grid.m, io)?;
            c.scenario = match scenario {
                ScenarioArg::EqualEye => Scenario::EqualEye,
                ScenarioArg::EqualSer => Scenario::EqualSer,
            };
            c.receivers = receiver.kinds();
            c.p_err = perr;
            c.debug = debug;
            c
        }
        Cmd::Ser {
            grid,
            receiver,
            amp,
            target_ser,
            n0,
            n_symbols,
            rate,
            seed,
            allow_isi,
            io,
        } => {
            let mut c = base(Command::Ser, grid.pulse, &grid.alpha, grid.m, io)?;
            c.receivers = receiver.kinds();
            c.amp_a = amp;
            c.target_ser = target_ser;
            c.n0 = n0;
            c.n_symbols = n_symbols;
            c.rate = rate;
            c.seed = seed;
            c.allow_isi = allow_isi;
            c
        }
        Cmd::Waveform {
            grid,
            amp,
            mu,
            symbols,
            n_random,
            rate,
            seed,
            io,
        } => {
            let mut c = base(Command::Waveform, grid.pulse, &grid.alpha, grid.m, io)?;
            c.amp_a = Some(amp);
            c.mu = mu;
            c.symbols = symbols;
            c.n_random = n_random;
            c.rate = rate;
            c.seed = seed;
            c
        }
        Cmd::Eye {
            grid,
            receiver,
            traces,
            rate,
            seed,
            io,
        } => {
            let mut c = base(Command::Eye, grid.pulse, &grid.alpha, grid.m, io)?;
            c.receivers = receiver.kinds();
            c.traces = traces;
            c.rate = rate;
            c.seed = seed;
            c
        }
        Cmd::Reproduce {
            figure,
            out,
            format,
            seed,
        } => return Ok(Err((figure.into(), out, format.into(), seed))),
    }))
}

fn report(summaries: &[Summary], start: Instant) {
    for s in summaries {
        println!("{s}");
        if s.failed > 0 {
            eprintln!("warning: {} rows in {} failed; see the error column", s.failed, s.path.display());
        }
    }
    println!("done in {:.2} s", start.elapsed().as_secs_f64());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let result = config(cli.command).and_then(|c| match c {
        Ok(rc) => run(&rc).map(|s| vec![s]),
        Err((fig, out, format, seed)) => {
            let dir = out.unwrap_or_else(imdd_cli::config::default_dir);
            reproduce(fig, &dir, format, seed)
        }
    });
    match result {
        Ok(summaries) => {
            report(&summaries, start);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
