mod example;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use feedcap::capacity::feedforward_capacity;
use feedcap::statespace::eigen_spectrum;
use feedcap::verify::{format_table, run_suite, VerifyOptions};
use feedcap::{
    capacity_for_power, power_for_rate, ChannelModel, ChannelSpec, EncoderDesign, Error, GainSchedule, SimConfig,
    SimMode,
};

/// Exit status contract.
const EXIT_USAGE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "feedcap", version, about = "Feedback capacity and Kalman-filter coding for Gaussian ISI channels")]
struct Cli {
    /// Worker threads for the optimizer and the simulator.
    #[arg(long, global = true, env = "FEEDCAP_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal encoder for a target rate or power.
    Design(DesignArgs),
    /// Feedback and feedforward capacity over a power grid.
    CapacityCurve(CurveArgs),
    /// Monte Carlo transmission with a stored design.
    Simulate(SimulateArgs),
    /// Runs the invariant and oracle checks.
    Verify(VerifyArgs),
    /// End-to-end run on the bundled third-order channel.
    Example(example::ExampleArgs),
}

#[derive(Args)]
struct ChannelArg {
    /// Channel JSON file, or `isi3` / `awgn` for the built-in channels.
    #[arg(long, default_value = "isi3")]
    channel: String,
}

#[derive(Args)]
struct DesignArgs {
    #[command(flatten)]
    channel: ChannelArg,
    /// Target rate in bits per channel use.
    #[arg(long, conflicts_with = "power", required_unless_present = "power")]
    rate: Option<f64>,
    /// Input power budget; the design then runs at the feedback capacity.
    #[arg(long)]
    power: Option<f64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    channel: ChannelArg,
    /// Powers in dB, as `a,b,c` or `start:stop:step`.
    #[arg(long, default_value = "-5:20:5", allow_hyphen_values = true)]
    power_grid: String,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Digital,
    Analog,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScheduleArg {
    Steady,
    TimeVarying,
}

#[derive(Args)]
struct SimulateArgs {
    /// Design JSON written by `feedcap design`.
    #[arg(long)]
    design: PathBuf,
    #[arg(long, value_enum, default_value = "digital")]
    mode: ModeArg,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    /// Horizon: uses `0..=T`.
    #[arg(long = "T", default_value_t = 27)]
    horizon: usize,
    #[arg(long, default_value_t = 0.2)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "steady")]
    schedule: ScheduleArg,
    /// Analog mode: comma-separated horizons for the MSE table.
    #[arg(long, value_delimiter = ',')]
    checkpoints: Vec<usize>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    channel: ChannelArg,
    #[arg(long, conflicts_with = "full")]
    quick: bool,
    /// Adds the grid-search and GM oracles.
    #[arg(long)]
    full: bool,
    #[arg(long, hide = true)]
    inject_fault: bool,
}

/// A failure with its exit status.
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Dimension(_)
            | Error::NotSiso
            | Error::NotStrictlyCausal(_)
            | Error::UnstableChannel(_)
            | Error::NonMinimumPhase(_)
            | Error::Uncontrollable { .. }
            | Error::Unobservable { .. }
            | Error::DegenerateChannel
            | Error::InvalidChannel(_)
            | Error::EigenvalueCollision(_)
            | Error::HorizonTooShort { .. }
            | Error::CodebookOverflow(_)
            | Error::IndexOutOfRange { .. }
            | Error::InvalidArgument(_)
            | Error::Budget { .. }
            | Error::Io(_)
            | Error::Format(_) => EXIT_VALIDATION,
            _ => EXIT_NUMERICAL,
        };
        let hint = match e {
            Error::HorizonTooShort { .. } => "\nhint: increase --T or --epsilon",
            Error::CodebookOverflow(_) => "\nhint: decrease --T or increase --epsilon",
            _ => "",
        };
        Self::new(code, format!("{e}{hint}"))
    }
}

pub type CmdResult = Result<(), Failure>;

pub fn load_channel(name: &str) -> Result<ChannelModel, Failure> {
    match name {
        "isi3" => Ok(ChannelModel::isi3()),
        "awgn" => Ok(ChannelModel::awgn()),
        path => {
            let spec = ChannelSpec::from_file(path)
                .map_err(|e| Failure::new(EXIT_VALIDATION, format!("cannot read channel {path}: {e}")))?;
            feedcap::validate(&spec)
                .map_err(|e| Failure::new(EXIT_VALIDATION, format!("channel {path} rejected: {e}")))
        }
    }
}

pub fn ensure_dir(dir: &Path) -> CmdResult {
    std::fs::create_dir_all(dir).map_err(|e| Failure::new(EXIT_VALIDATION, format!("cannot create {}: {e}", dir.display())))
}

pub fn print_design(d: &EncoderDesign) -> CmdResult {
    let eig = eigen_spectrum(&d.a_star)?;
    println!("n*       {}", d.n_star);
    let roots: Vec<String> = eig
        .eigenvalues
        .iter()
        .map(|z| if z.im == 0.0 { format!("{:.6}", z.re) } else { format!("{:.6}{:+.6}i", z.re, z.im) })
        .collect();
    println!("eig(A*)  {}", roots.join(", "));
    println!("rate     {:.6} bits/use", d.rate);
    println!("power    {:.6} ({:.4} dB)", d.power, d.power_db());
    println!("K_e      {:.6}", d.ke);
    Ok(())
}

fn cmd_design(args: DesignArgs) -> CmdResult {
    let channel = load_channel(&args.channel.channel)?;
    let design = match (args.rate, args.power) {
        (Some(rate), None) => {
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(Failure::new(EXIT_USAGE, format!("--rate must be positive, got {rate}")));
            }
            power_for_rate(&channel, rate)?
        }
        (None, Some(power)) => {
            if !(power > 0.0 && power.is_finite()) {
                return Err(Failure::new(EXIT_USAGE, format!("--power must be positive, got {power}")));
            }
            capacity_for_power(&channel, power)?.1
        }
        _ => return Err(Failure::new(EXIT_USAGE, "exactly one of --rate and --power is required")),
    };
    ensure_dir(&args.out)?;
    let path = args.out.join("design.json");
    design.write(&path)?;
    print_design(&design)?;
    println!("wrote    {}", path.display());
    Ok(())
}

fn parse_grid(text: &str) -> Result<Vec<f64>, Failure> {
    let bad = |what: &str| Failure::new(EXIT_USAGE, format!("invalid --power-grid {text:?}: {what}"));
    let number = |s: &str| s.trim().parse::<f64>().ok().filter(|x| x.is_finite());
    let grid: Vec<f64> = if text.contains(':') {
        let parts: Vec<f64> = text.split(':').map(number).collect::<Option<_>>().ok_or_else(|| bad("not a number"))?;
        let [start, stop, step] = parts[..] else {
            return Err(bad("expected start:stop:step"));
        };
        if !(step > 0.0) || stop < start {
            return Err(bad("need step > 0 and stop >= start"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=count).map(|k| start + step * k as f64).collect()
    } else {
        text.split(',').map(number).collect::<Option<_>>().ok_or_else(|| bad("not a number"))?
    };
    if grid.is_empty() {
        return Err(bad("empty grid"));
    }
    Ok(grid)
}

#[derive(serde::Serialize)]
struct CurveRow {
    power_db: f64,
    power: f64,
    feedback: Option<f64>,
    feedforward: Option<f64>,
    status: String,
}

fn cmd_capacity_curve(args: CurveArgs) -> CmdResult {
    let channel = load_channel(&args.channel.channel)?;
    let grid = parse_grid(&args.power_grid)?;
    ensure_dir(&args.out)?;
    let path = args.out.join("capacity_curve.csv");
    let mut out = csv::Writer::from_path(&path).map_err(|e| Failure::from(Error::from(e)))?;
    println!("{:>8}  {:>10}  {:>10}  {:>11}", "P [dB]", "P", "feedback", "feedforward");
    let mut failed = 0;
    for db in grid {
        let power = 10f64.powf(db / 10.0);
        let fb = capacity_for_power(&channel, power).map(|(c, _)| c);
        let ff = feedforward_capacity(&channel, power);
        let status = match (&fb, &ff) {
            (Ok(_), Ok(_)) => "ok".to_string(),
            (Err(e), _) | (_, Err(e)) => {
                failed += 1;
                format!("failed: {e}")
            }
        };
        let row = CurveRow {
            power_db: db,
            power,
            feedback: fb.ok(),
            feedforward: ff.ok(),
            status,
        };
        let show = |v: Option<f64>| v.map_or("-".to_string(), |c| format!("{c:.6}"));
        println!("{db:>8.3}  {power:>10.4}  {:>10}  {:>11}", show(row.feedback), show(row.feedforward));
        out.serialize(&row).map_err(|e| Failure::from(Error::from(e)))?;
    }
    out.flush().map_err(|e| Failure::from(Error::from(e)))?;
    if failed > 0 {
        eprintln!("{failed} grid point(s) failed; see the status column");
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> CmdResult {
    let design = EncoderDesign::read(&args.design)
        .map_err(|e| Failure::new(EXIT_VALIDATION, format!("cannot read design {}: {e}", args.design.display())))?;
    let mut cfg = match args.mode {
        ModeArg::Digital => SimConfig::digital(args.trials, args.horizon, args.epsilon, args.seed),
        ModeArg::Analog => SimConfig::analog(args.trials, args.horizon, args.seed),
    };
    cfg.schedule = match args.schedule {
        ScheduleArg::Steady => GainSchedule::Steady,
        ScheduleArg::TimeVarying => GainSchedule::TimeVarying,
    };
    if cfg.mode == SimMode::Analog && !args.checkpoints.is_empty() {
        cfg.mse_checkpoints = args.checkpoints;
    }
    let result = feedcap::sim::run(&design, &cfg)?;
    ensure_dir(&args.out)?;
    result.export(&args.out)?;
    match cfg.mode {
        SimMode::Digital => {
            if let Some(row) = result.pe.last() {
                println!(
                    "T={} PE={:.6} +/- {:.6} (theory {:.6})",
                    row.horizon, row.pe_emp, row.pe_emp_sigma, row.pe_theory
                );
            }
        }
        SimMode::Analog => {
            for row in &result.mse {
                println!("t={:>4} det MSE {:.4e} (theory {:.4e})", row.t, row.det_emp, row.det_theory);
            }
        }
    }
    if let Some(p) = result.avg_power_trace.last() {
        println!("average power {p:.6} (design {:.6})", result.design_power);
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> CmdResult {
    let channel = load_channel(&args.channel.channel)?;
    let mut opts = if args.full { VerifyOptions::full() } else { VerifyOptions::quick() };
    opts.inject_fault = args.inject_fault;
    let checks = run_suite(&channel, &opts);
    print!("{}", format_table(&checks));
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(Failure::new(EXIT_NUMERICAL, format!("{failed} of {} checks failed", checks.len())));
    }
    println!("all {} checks passed", checks.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("--threads must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("cannot configure thread pool: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let outcome = match cli.command {
        Command::Design(a) => cmd_design(a),
        Command::CapacityCurve(a) => cmd_capacity_curve(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Example(a) => example::run(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
