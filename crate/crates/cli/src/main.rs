use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use privmon_core::compiler::{Scenario, ScenarioConfig, ScenarioKind};
use privmon_core::dealer::LedgerReport;
use privmon_core::runtime::{
    deal_to_files, mean_row, run_local, run_tcp_party, run_tcp_system, Mode, SessionConfig, Verdict,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "privmon", version, about = "Distributed runtime monitoring over secret-shared state")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct TraceSource {
    /// CSV trace, one round per line.
    #[arg(long, conflicts_with = "random")]
    trace: Option<PathBuf>,
    /// Generate a random trace from this seed.
    #[arg(long)]
    random: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write preprocessed material for every party into `material_dir`.
    Dealer {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run one monitor party over TCP.
    Party {
        #[arg(long)]
        id: usize,
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the System client over TCP.
    System {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        source: TraceSource,
    },
    /// Run a whole session in this process.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        source: TraceSource,
    },
    /// Time a benchmark scenario with in-process parties.
    Bench {
        #[arg(long)]
        scenario: ScenarioKind,
        #[arg(long, default_value_t = 1)]
        size: usize,
        #[arg(long, default_value_t = 50)]
        rounds: u64,
        #[arg(long, default_value_t = 3)]
        parties: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-round metrics CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plaintext reference flags for a trace.
    Oracle {
        #[arg(long)]
        scenario: ScenarioKind,
        #[arg(long, default_value_t = 1)]
        size: usize,
        #[arg(long)]
        trace: PathBuf,
    },
    /// Print the compiled program of a scenario.
    Compile {
        #[arg(long)]
        scenario: ScenarioKind,
        #[arg(long, default_value_t = 1)]
        size: usize,
    },
}

fn load_config(path: &Path) -> Result<(SessionConfig, Scenario)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cfg: SessionConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let scenario = Scenario::build(&cfg.scenario)?;
    Ok((cfg, scenario))
}

fn read_trace(path: &Path) -> Result<Vec<Vec<u128>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut trace = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .map(|f| f.parse::<u128>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("{} line {}", path.display(), i + 1))?;
        trace.push(row);
    }
    Ok(trace)
}

fn load_trace(source: &TraceSource, scenario: &Scenario, rounds: u64) -> Result<Vec<Vec<u128>>> {
    match (&source.trace, source.random) {
        (Some(path), None) => read_trace(path),
        (None, Some(seed)) => Ok(scenario.random_trace(rounds as usize, &mut ChaCha8Rng::seed_from_u64(seed))),
        _ => bail!("give exactly one of --trace and --random"),
    }
}

fn print_verdicts(verdicts: &[Verdict]) -> Result<()> {
    let mut out = io::stdout().lock();
    for v in verdicts {
        writeln!(out, "round {}: flag={}{}", v.round, v.flag as u8, if v.terminal { " (stop)" } else { "" })?;
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().cmd {
        Cmd::Dealer { config } => {
            let (cfg, scenario) = load_config(&config)?;
            deal_to_files(&cfg, &scenario)?;
        }
        Cmd::Party { id, config } => {
            let (cfg, scenario) = load_config(&config)?;
            let outcome = run_tcp_party(&cfg, &scenario, id)?;
            let raised = outcome.verdicts.iter().filter(|v| v.flag).count();
            info!("party {id}: {} rounds, {raised} flags", outcome.verdicts.len());
        }
        Cmd::System { config, source } => {
            let (cfg, scenario) = load_config(&config)?;
            let trace = load_trace(&source, &scenario, cfg.rounds())?;
            print_verdicts(&run_tcp_system(&cfg, &scenario, &trace)?)?;
        }
        Cmd::Run { config, source } => {
            let (cfg, scenario) = load_config(&config)?;
            let trace = load_trace(&source, &scenario, cfg.rounds())?;
            let result = run_local(&cfg, &scenario, &trace)?;
            print_verdicts(&result.verdicts)?;
            info!("{} rounds in {:.3} s", result.rows.len(), result.wall_s);
        }
        Cmd::Bench {
            scenario,
            size,
            rounds,
            parties,
            seed,
            out,
        } => {
            let mut sc = ScenarioConfig::new(scenario, size);
            sc.rounds = rounds;
            let s = Scenario::build(&sc)?;
            let mut cfg = SessionConfig::new(sc);
            cfg.parties = parties;
            cfg.seed = seed;
            cfg.mode = Mode::LogAndContinue;
            let trace = s.random_trace(rounds as usize, &mut ChaCha8Rng::seed_from_u64(seed));
            let result = run_local(&cfg, &s, &trace)?;
            if let Some(path) = out {
                LedgerReport::write_csv(&result.rows, File::create(&path)?)?;
                info!("wrote {}", path.display());
            }
            if let Some(m) = mean_row(&result.rows) {
                println!(
                    "{} size {}: {:.4} s/iter (compute {:.4} s), {} triples, {} bit triples, {} daBits, {} edaBits, {} B sent per party",
                    m.scenario,
                    m.size,
                    result.wall_s / result.rows.len() as f64,
                    m.compute_s,
                    m.triples,
                    m.bit_triples,
                    m.dabits,
                    m.edabits,
                    m.bytes_sent
                );
            }
        }
        Cmd::Oracle { scenario, size, trace } => {
            let s = Scenario::build(&ScenarioConfig::new(scenario, size))?;
            let trace = read_trace(&trace)?;
            for o in &trace {
                if let Err(e) = s.validate_obs(o) {
                    bail!("invalid observation {o:?}: {e}");
                }
            }
            let mut out = io::stdout().lock();
            for (t, f) in s.oracle(&trace)?.into_iter().enumerate() {
                writeln!(out, "round {}: flag={}", t + 1, f as u8)?;
            }
        }
        Cmd::Compile { scenario, size } => {
            let s = Scenario::build(&ScenarioConfig::new(scenario, size))?;
            print!("{}", s.program.program());
        }
    }
    Ok(())
}
