use std::fs::{self, File};
use std::io::BufReader;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use crowdopt_cli::bench::{self, BenchConfig};
use crowdopt_core::photo::Image;
use crowdopt_service::render::{parse_params, render_design};
use crowdopt_service::{read_events, AppState, Domain, Mode, Session, Store};

#[derive(Parser)]
#[command(name = "crowdopt", version, about = "Crowd-in-the-loop design optimization toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Optimize,
    Estimate,
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    Photo,
    Synthetic,
}

impl From<DomainArg> for Domain {
    fn from(d: DomainArg) -> Self {
        match d {
            DomainArg::Photo => Domain::Photo,
            DomainArg::Synthetic => Domain::Synthetic,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run simulated-crowd benchmarks and write traces.
    Bench {
        /// JSON benchmark config; flags override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "bench-out")]
        out: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long, value_enum)]
        domain: Option<DomainArg>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long)]
        cheat_rate: Option<f64>,
    },
    /// Rebuild a session from its event log and print its summary.
    Replay { log: PathBuf },
    /// Render a design to PNG.
    Render {
        #[arg(long, value_enum, default_value = "photo")]
        domain: DomainArg,
        /// Comma-separated parameters in [0,1].
        #[arg(long, allow_hyphen_values = true)]
        params: String,
        /// Photo to enhance; a generated test pattern when absent.
        #[arg(long)]
        base: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Start the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Directory for session logs; sessions live in memory only when absent.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long)]
        base_image: Option<PathBuf>,
    },
}

fn load_base(path: Option<&PathBuf>) -> Result<Image> {
    match path {
        Some(p) => Image::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(Image::test_pattern(256, 192)),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Bench { config, out, mode, domain, n, trials, seed, iterations, workers, noise, cheat_rate } => {
            let mut cfg: BenchConfig = match &config {
                Some(p) => {
                    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                    serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
                }
                None => BenchConfig::default(),
            };
            if let Some(m) = mode {
                cfg.mode = match m {
                    ModeArg::Optimize => Mode::Optimize,
                    ModeArg::Estimate => Mode::Estimate,
                };
            }
            if let Some(d) = domain {
                cfg.domain = d.into();
            }
            cfg.n = n.or(cfg.n);
            cfg.trials = trials.unwrap_or(cfg.trials);
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.optimize.iterations = iterations.unwrap_or(cfg.optimize.iterations);
            cfg.workers = workers.unwrap_or(cfg.workers);
            cfg.worker.noise_sigma = noise.unwrap_or(cfg.worker.noise_sigma);
            cfg.worker.cheat_rate = cheat_rate.unwrap_or(cfg.worker.cheat_rate);
            let summary = bench::run(&cfg, &out)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Replay { log } => {
            let file = File::open(&log).with_context(|| format!("opening {}", log.display()))?;
            let events = read_events(BufReader::new(file)).with_context(|| format!("reading {}", log.display()))?;
            if events.is_empty() {
                println!("{}", serde_json::json!({ "iteration": 0, "responses": 0, "status": "empty" }));
                return Ok(());
            }
            let session = Session::replay(&events).with_context(|| format!("replaying {}", log.display()))?;
            println!("{}", serde_json::to_string_pretty(&session.summary())?);
        }
        Command::Render { domain, params, base, out } => {
            let params = parse_params(&params)?;
            let png = render_design(domain.into(), &params, &load_base(base.as_ref())?)?;
            fs::write(&out, png).with_context(|| format!("writing {}", out.display()))?;
        }
        Command::Serve { addr, data_dir, base_image } => {
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
                )
                .init();
            let store = match data_dir {
                Some(dir) => Store::open(dir)?,
                None => Store::in_memory(),
            };
            let state = AppState::new(store, load_base(base_image.as_ref())?);
            tokio::runtime::Runtime::new()?.block_on(crowdopt_service::serve(addr, state))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
