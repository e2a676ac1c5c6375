use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qnic_core::presets::Protocol;

use qnic_cli::{cmd_analyze, cmd_simulate, cmd_sweep, presets_table, CliError, Result, RunConfig};

/// Security analysis, simulation and loss sweeps for QPSK quantum signatures,
/// secret sharing and key distribution.
///
/// Exit codes: 0 success, 1 error, 2 insecure channel.
#[derive(Parser)]
#[command(name = "qnic", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Figures of merit at one operating point (or along `loss_grid`).
    Analyze(Common),
    /// Run a full protocol session over the emulated transceiver.
    Simulate(Common),
    /// Figure data against loss for every preset.
    Sweep(Common),
    /// List the experimental presets.
    Presets,
    /// List the configuration keys.
    Keys,
}

#[derive(Args)]
struct Common {
    /// Key-value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// qds-b | qds-f | qss-b | qkd-f
    #[arg(long)]
    protocol: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "loss-db")]
    loss_db: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    /// Worker threads (default: all cores).
    #[arg(long, env = "QNIC_JOBS")]
    jobs: Option<usize>,
    /// none | random-guess | beamsplitter-forger
    #[arg(long)]
    adversary: Option<String>,
    /// none | bob | charlie
    #[arg(long)]
    dishonest: Option<String>,
    #[arg(long)]
    length: Option<String>,
    /// Any configuration key, as KEY=VALUE. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        let flags = [
            ("preset", self.preset.clone()),
            ("protocol", self.protocol.clone()),
            ("seed", self.seed.clone()),
            ("out", self.out.as_ref().map(|p| p.to_string_lossy().into_owned())),
            ("loss_db", self.loss_db.clone()),
            ("epsilon", self.epsilon.clone()),
            ("adversary", self.adversary.clone()),
            ("dishonest", self.dishonest.clone()),
            ("length", self.length.clone()),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, &v, 0)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got '{kv}'")))?;
            cfg.set(k.trim(), v.trim(), 0)?;
        }
        Ok(cfg)
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(j) = self.jobs {
            if j == 0 {
                return Err(CliError::Usage("--jobs must be >= 1".into()));
            }
            b = b.num_threads(j);
        }
        b.build().map_err(|e| CliError::Usage(e.to_string()))
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Presets => print!("{}", presets_table()),
        Command::Keys => {
            for (k, d) in qnic_cli::config::KEYS {
                println!("{k:<16} {d}");
            }
        }
        Command::Analyze(c) => {
            let cfg = c.resolve()?;
            let points = c.pool()?.install(|| cmd_analyze(&cfg))?;
            for p in points.iter().filter_map(|p| p.result.as_ref()) {
                let r = p.curve_row();
                println!(
                    "{} {} at {} dB: L={:?} L_tilde={:?} rate={:?} p_e={:?} p_err={:?} N={:?} delta_r={:?}",
                    p.point.protocol.name(),
                    p.point.preset,
                    p.point.loss_db,
                    r.l,
                    r.l_tilde,
                    r.kappa,
                    r.p_e,
                    r.p_err,
                    r.n,
                    r.delta_r_opt
                );
            }
            println!("wrote {}", cfg.out.display());
        }
        Command::Simulate(c) => {
            let cfg = c.resolve()?;
            let s = c.pool()?.install(|| cmd_simulate(&cfg))?;
            let verdict = match (s.protocol, s.success) {
                (Protocol::QdsB | Protocol::QdsF, true) => "signature accepted",
                (Protocol::QdsB | Protocol::QdsF, false) => "signature rejected",
                (_, true) => "secret recovered",
                (_, false) => "secret not recovered",
            };
            println!("{} with {} states: {verdict}", s.protocol.name(), s.l);
            if let Some(x) = s.share_exclusivity {
                println!("single-player bit agreement ({:?}): {:.4}", x.player, x.bit_agreement);
            }
            println!("wrote {} files to {}", s.files.len() + 1, cfg.out.display());
        }
        Command::Sweep(c) => {
            let cfg = c.resolve()?;
            let s = c.pool()?.install(|| cmd_sweep(&cfg))?;
            println!("{} points, {} failed; wrote {}", s.points, s.failures.len(), cfg.out.display());
        }
    }
    Ok(())
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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
