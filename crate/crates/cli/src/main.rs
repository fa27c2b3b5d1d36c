use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ges2n_cli::config::KeyValues;
use ges2n_cli::run::{RunConfig, RUN_KEYS};
use ges2n_cli::{run, sweep, synth, CliError, CliResult};

#[derive(Parser)]
#[command(name = "ges2n", version, about = "Envelope-spectrum filter design for fault detection under varying speed")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design a filter for a recorded signal and write its artifacts.
    Run(RunArgs),
    /// Write a synthetic record.
    Synth(SynthArgs),
    /// Run a grid of designs and summarize them.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    alpha_c: Option<String>,
    #[arg(long)]
    nh: Option<String>,
    #[arg(long)]
    band_width: Option<String>,
    #[arg(long)]
    filter_length: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    /// lpc, impulse or random
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    extraneous_order: Option<String>,
    #[arg(long)]
    delta_alpha: Option<String>,
    #[arg(long)]
    alpha_max: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    fs: Option<String>,
    #[arg(long)]
    duration: Option<String>,
    /// `constant W`, `ramp W0 W1` or `piecewise T:W,...` in rad/s
    #[arg(long, allow_hyphen_values = true)]
    speed: Option<String>,
    #[arg(long)]
    fault_order: Option<String>,
    #[arg(long)]
    fault_carrier_hz: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    fault_snr_db: Option<String>,
    #[arg(long)]
    extraneous_order: Option<String>,
    #[arg(long)]
    extraneous_carrier_hz: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    extraneous_snr_db: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    noise_db: Option<String>,
    #[arg(long)]
    burst_len: Option<String>,
    #[arg(long)]
    slip: Option<String>,
    #[arg(long)]
    seed: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    jobs: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

fn load(path: Option<&Path>) -> CliResult<KeyValues> {
    path.map_or_else(|| Ok(KeyValues::default()), KeyValues::load)
}

fn overlay(kv: &mut KeyValues, flags: &[(&str, &Option<String>)]) {
    for (key, value) in flags {
        if let Some(v) = value {
            kv.set(key, v.clone());
        }
    }
}

fn run_command(args: RunArgs) -> CliResult<()> {
    let mut kv = load(args.config.as_deref())?;
    kv.check_known(RUN_KEYS)?;
    overlay(
        &mut kv,
        &[
            ("input", &args.input),
            ("variant", &args.variant),
            ("alpha-c", &args.alpha_c),
            ("nh", &args.nh),
            ("band-width", &args.band_width),
            ("filter-length", &args.filter_length),
            ("tol", &args.tol),
            ("max-iter", &args.max_iter),
            ("init", &args.init),
            ("seed", &args.seed),
            ("extraneous-order", &args.extraneous_order),
            ("delta-alpha", &args.delta_alpha),
            ("alpha-max", &args.alpha_max),
            ("out", &args.out),
        ],
    );
    run::run(&RunConfig::from_keys(&kv)?).map(|_| ())
}

fn synth_command(args: SynthArgs) -> CliResult<()> {
    let mut kv = load(args.config.as_deref())?;
    overlay(
        &mut kv,
        &[
            ("fs", &args.fs),
            ("duration", &args.duration),
            ("speed", &args.speed),
            ("fault-order", &args.fault_order),
            ("fault-carrier-hz", &args.fault_carrier_hz),
            ("fault-snr-db", &args.fault_snr_db),
            ("extraneous-order", &args.extraneous_order),
            ("extraneous-carrier-hz", &args.extraneous_carrier_hz),
            ("extraneous-snr-db", &args.extraneous_snr_db),
            ("noise-db", &args.noise_db),
            ("burst-len", &args.burst_len),
            ("slip", &args.slip),
            ("seed", &args.seed),
        ],
    );
    synth::run(&kv, &args.out)
}

fn sweep_command(args: SweepArgs) -> CliResult<()> {
    let mut kv = KeyValues::load(&args.config)?;
    overlay(&mut kv, &[("jobs", &args.jobs)]);
    let base = args.config.parent().unwrap_or(Path::new("."));
    sweep::run(&kv, base, &args.out).map(|_| ())
}

fn main() -> ExitCode {
    let env = env_logger::Env::new().filter_or("GES2N_LOG", "error");
    env_logger::Builder::from_env(env).format_timestamp(None).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run_command(a),
        Command::Synth(a) => synth_command(a),
        Command::Sweep(a) => sweep_command(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ges2n: {e}");
            ExitCode::from(exit_byte(&e))
        }
    }
}

fn exit_byte(e: &CliError) -> u8 {
    e.exit_code() as u8
}
