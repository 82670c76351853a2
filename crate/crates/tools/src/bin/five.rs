use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use five_tools::commands::{run_bench, run_evaluate, run_extract, run_simulate, CommandError};
use five_tools::config::{read_key_values, KeyValues, RunConfig};

#[derive(Parser)]
#[command(name = "five", version, about = "Single-source extraction from multichannel audio")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract the dominant source from a .wav or .fiv mixture
    Extract(Flags),
    /// Write seeded synthetic scenes with ground truth
    Simulate(Flags),
    /// Score an extracted signal against a simulated scene
    Evaluate(Flags),
    /// Per-iteration runtime, NLL and quality on generated scenes
    Bench(Flags),
}

#[derive(Args)]
struct Flags {
    /// key=value file; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    output: Option<String>,
    #[arg(long)]
    extracted: Option<String>,
    #[arg(long)]
    report: Option<String>,
    #[arg(long)]
    frame_size: Option<String>,
    #[arg(long)]
    hop: Option<String>,
    /// laplace or gauss
    #[arg(long)]
    contrast: Option<String>,
    #[arg(long)]
    iterations: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    scenes: Option<String>,
    #[arg(long)]
    channels: Option<String>,
    #[arg(long)]
    interferers: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    sinr_db: Option<String>,
    #[arg(long)]
    bins: Option<String>,
    #[arg(long)]
    frames: Option<String>,
    /// instantaneous or convolutive
    #[arg(long)]
    mixing: Option<String>,
    #[arg(long)]
    fir_taps: Option<String>,
    /// laplace or gauss
    #[arg(long)]
    target_model: Option<String>,
    #[arg(long)]
    noise_fraction: Option<String>,
    #[arg(long)]
    sample_rate: Option<String>,
    /// label written to evaluation rows
    #[arg(long)]
    algorithm: Option<String>,
}

impl Flags {
    fn resolve(self) -> Result<RunConfig, CommandError> {
        let usage = |e: five_tools::config::ConfigError| CommandError::Usage(e.to_string());
        let mut map = match &self.config {
            Some(p) => read_key_values(p).map_err(usage)?,
            None => KeyValues::new(),
        };
        if let Ok(t) = std::env::var("FIVE_THREADS") {
            map.insert("threads".into(), t);
        }
        let flags = [
            ("input", self.input),
            ("output", self.output),
            ("extracted", self.extracted),
            ("report", self.report),
            ("frame_size", self.frame_size),
            ("hop", self.hop),
            ("contrast", self.contrast),
            ("iterations", self.iterations),
            ("seed", self.seed),
            ("scenes", self.scenes),
            ("channels", self.channels),
            ("interferers", self.interferers),
            ("sinr_db", self.sinr_db),
            ("bins", self.bins),
            ("frames", self.frames),
            ("mixing", self.mixing),
            ("fir_taps", self.fir_taps),
            ("target_model", self.target_model),
            ("noise_fraction", self.noise_fraction),
            ("sample_rate", self.sample_rate),
            ("algorithm", self.algorithm),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                map.insert(k.into(), v);
            }
        }
        RunConfig::from_map(&map).map_err(usage)
    }
}

fn run(command: Command) -> Result<(), CommandError> {
    match command {
        Command::Extract(f) => run_extract(&f.resolve()?),
        Command::Simulate(f) => {
            for dir in run_simulate(&f.resolve()?)? {
                println!("{}", dir.display());
            }
            Ok(())
        }
        Command::Evaluate(f) => {
            let cfg = f.resolve()?;
            let row = run_evaluate(&cfg)?;
            if cfg.report.is_none() {
                let m = row.metrics;
                println!(
                    "{},{},{},{},{},{},{}",
                    row.scene_id,
                    row.algorithm,
                    row.iterations,
                    m.si_sdr_db,
                    m.si_sir_db,
                    m.delta_si_sdr_db,
                    m.delta_si_sir_db
                );
            }
            Ok(())
        }
        Command::Bench(f) => {
            let cfg = f.resolve()?;
            for t in run_bench(&cfg)? {
                let last = t.rows.last().expect("iteration 0 is always recorded");
                eprintln!(
                    "seed {}: {:.3} s algorithm time for {:.3} s input, delta SI-SDR {:.2} dB",
                    last.seed, t.algorithm_seconds, t.input_seconds, last.delta_si_sdr
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("five: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
