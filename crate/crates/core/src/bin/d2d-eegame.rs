use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use d2d_eegame::game::Policy;
use d2d_eegame::harness::campaign::CONVERGENCE_COLUMNS;
use d2d_eegame::harness::experiments::{
    gap_table, poa_table, topology_table, tradeoff_table, PoaSweep, GAP_COLUMNS, POA_COLUMNS, TOPOLOGY_COLUMNS,
    TRADEOFF_COLUMNS, TRADEOFF_I_DB,
};
use d2d_eegame::harness::{emit_results, resolve_output, run_campaign, write_rows, OutputFormat, ScenarioConfig, OUT_DIR_ENV};
use d2d_eegame::{Error, Result};

/// Energy-efficiency power control game for D2D underlay cellular networks.
#[derive(Parser)]
#[command(name = "d2d-eegame", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo campaign of EE, SE and random policies per round.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Comma-separated policies, or `all`.
        #[arg(long, default_value = "all")]
        policy: String,
    },
    /// Cellular EE against target SE in the single-link symmetric model.
    Tradeoff {
        #[command(flatten)]
        common: Common,
        /// Interference levels in dB.
        #[arg(long = "i-db", value_delimiter = ',', allow_hyphen_values = true)]
        i_db: Vec<f64>,
    },
    /// Cellular EE and SE gaps against the interference level.
    Gaps {
        #[command(flatten)]
        common: Common,
    },
    /// Price of anarchy across rate floors.
    Poa {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = PoaSweep::default().r_stop)]
        r_stop: f64,
        #[arg(long, default_value_t = PoaSweep::default().r_step)]
        r_step: f64,
        /// Points per power dimension of the centralized search.
        #[arg(long, default_value_t = PoaSweep::default().grid_resolution)]
        grid_resolution: usize,
    },
    /// Node positions of one trial.
    Topology {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
}

#[derive(Args)]
struct Common {
    /// key = value scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Extra scenario overrides, `key=value`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output file; relative paths go under $D2D_EEGAME_OUT_DIR when set.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
}

impl Common {
    /// Defaults, then the file, then flags.
    fn scenario(&self, base: ScenarioConfig) -> Result<ScenarioConfig> {
        let mut cfg = base;
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            cfg.apply_text(&text)?;
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects key=value, got `{kv}`")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn output(&self, stem: &str) -> PathBuf {
        let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
        resolve_output(self.out.as_deref(), stem, self.format, dir.as_deref())
    }
}

fn parse_policies(s: &str) -> Result<Vec<Policy>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(Policy::ALL.to_vec());
    }
    s.split(',').map(|p| p.parse()).collect()
}

/// `results.csv` -> `results.convergence.csv`.
fn sidecar(path: &Path, format: OutputFormat) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    path.with_file_name(format!("{stem}.convergence.{}", format.extension()))
}

fn wrote(path: &Path, rows: usize) {
    eprintln!("wrote {rows} rows to {}", path.display());
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { common, policy } => {
            let cfg = common.scenario(ScenarioConfig::default())?;
            let policies = parse_policies(&policy)?;
            let res = run_campaign(&cfg, &policies)?;
            let path = common.output("simulate");
            emit_results(&res.rows, common.format, &path)?;
            wrote(&path, res.rows.len());
            let side = sidecar(&path, common.format);
            write_rows(&res.convergence, &CONVERGENCE_COLUMNS, common.format, &side)?;
            wrote(&side, res.convergence.len());
        }
        Command::Tradeoff { common, i_db } => {
            let levels = if i_db.is_empty() { TRADEOFF_I_DB.to_vec() } else { i_db };
            let rows = tradeoff_table(&levels)?;
            let path = common.output("tradeoff");
            write_rows(&rows, &TRADEOFF_COLUMNS, common.format, &path)?;
            wrote(&path, rows.len());
        }
        Command::Gaps { common } => {
            let rows = gap_table()?;
            let path = common.output("gaps");
            write_rows(&rows, &GAP_COLUMNS, common.format, &path)?;
            wrote(&path, rows.len());
        }
        Command::Poa {
            common,
            r_stop,
            r_step,
            grid_resolution,
        } => {
            let base = ScenarioConfig {
                n_d2d: 1,
                n_cell: 1,
                ..Default::default()
            };
            let cfg = common.scenario(base)?;
            let sweep = PoaSweep {
                r_stop,
                r_step,
                grid_resolution,
                ..Default::default()
            };
            let rows = poa_table(&cfg, &sweep)?;
            let path = common.output("poa");
            write_rows(&rows, &POA_COLUMNS, common.format, &path)?;
            wrote(&path, rows.len());
        }
        Command::Topology { common, trial } => {
            let cfg = common.scenario(ScenarioConfig::default())?;
            let rows = topology_table(&cfg, trial)?;
            let path = common.output("topology");
            write_rows(&rows, &TOPOLOGY_COLUMNS, common.format, &path)?;
            wrote(&path, rows.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
