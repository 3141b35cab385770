//! Command-line Monte Carlo simulator for the detector library.
//!
//! Exit codes: 0 on success, 1 on configuration errors (bad flags, bad
//! config file, infeasible detector), 2 on runtime errors.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rlb_las::harness::{
    complexity_sweep, oracle_compare, run_trials, run_trials_with_workers, write_csv,
    write_plotdata, DetectorKind,
};
use rlb_las::rlb::RlbConfig;
use rlb_las::{Error, RunConfig64};

#[derive(Parser)]
#[command(
    name = "rlb-las",
    version,
    about = "Large MIMO uplink detection simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path; results go to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = rayon default).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run the BER experiment described by a key = value config file.
    Run {
        /// Config file; see README for the accepted keys.
        #[arg(long)]
        config: PathBuf,
        /// Detector list override, e.g. mf,mmse,rlb-mf.
        #[arg(long)]
        detectors: Option<String>,
        /// Plot-data output path (per-detector blocks of snr/ber pairs).
        #[arg(long)]
        plot_out: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Measure flops/symbol at a target BER across system sizes (N = K).
    Sweep {
        /// Comma-separated K list, e.g. 8,16,32,64.
        #[arg(long, value_delimiter = ',')]
        k_list: Vec<usize>,
        #[arg(long, default_value_t = 1e-2)]
        target_ber: f64,
        /// Ascending SNR grid to scan for the operating point.
        #[arg(long, value_delimiter = ',', default_values_t = vec![4.0,5.0,6.0,7.0,8.0,9.0,10.0,11.0,12.0])]
        snr_grid: Vec<f64>,
        /// Minimum transmitted bits per grid point.
        #[arg(long, default_value_t = 100_000)]
        min_bits: u64,
        /// Detector to sweep.
        #[arg(long, default_value = "rlb-mf")]
        detector: String,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Compare the restart detector against the exhaustive ML oracle.
    OracleCompare {
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 12.0)]
        snr: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn parse_config(text: &str) -> Result<RunConfig64, Error> {
    let mut cfg = RunConfig64::default();
    let mut saw_k = false;
    let mut saw_n = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| Error::Config(format!("line {}: bad {what} '{value}'", lineno + 1));
        match key {
            "k" => {
                cfg.k = value.parse().map_err(|_| bad("integer"))?;
                saw_k = true;
            }
            "n" => {
                cfg.n = value.parse().map_err(|_| bad("integer"))?;
                saw_n = true;
            }
            "snr_grid_db" => {
                cfg.snr_grid_db = value
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad("number list"))?;
            }
            "runs" => cfg.runs = value.parse().map_err(|_| bad("integer"))?,
            "vectors_per_run" => cfg.vectors_per_run = value.parse().map_err(|_| bad("integer"))?,
            "detectors" => cfg.detectors = parse_detectors(value)?,
            "master_seed" => cfg.master_seed = value.parse().map_err(|_| bad("integer"))?,
            "constellation_order" => {
                cfg.constellation_order = value.parse().map_err(|_| bad("integer"))?
            }
            "np_min" => cfg.rlb.np_min = value.parse().map_err(|_| bad("integer"))?,
            "c1" => cfg.rlb.c1 = value.parse().map_err(|_| bad("number"))?,
            "max_restarts_cap" => {
                cfg.rlb.max_restarts_cap = value.parse().map_err(|_| bad("integer"))?
            }
            "redraw_per_vector" => {
                cfg.redraw_per_vector = value.parse().map_err(|_| bad("boolean"))?
            }
            other => {
                return Err(Error::Config(format!(
                    "line {}: unknown key '{other}'",
                    lineno + 1
                )))
            }
        }
    }
    if !saw_k || !saw_n || cfg.snr_grid_db.is_empty() {
        return Err(Error::Config(
            "config must set k, n, and snr_grid_db".into(),
        ));
    }
    Ok(cfg)
}

fn parse_detectors(list: &str) -> Result<Vec<DetectorKind>, Error> {
    list.split(',')
        .map(|s| s.trim().parse::<DetectorKind>())
        .collect()
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            config,
            detectors,
            plot_out,
            common,
        } => {
            let text = fs::read_to_string(&config)
                .map_err(|e| Error::Config(format!("{}: {e}", config.display())))?;
            let mut cfg = parse_config(&text)?;
            if let Some(seed) = common.seed {
                cfg.master_seed = seed;
            }
            if let Some(list) = detectors {
                cfg.detectors = parse_detectors(&list)?;
            }
            cfg.validate()?;
            let records = if common.workers > 0 {
                run_trials_with_workers(&cfg, common.workers)?
            } else {
                run_trials(&cfg)?
            };
            match &common.out {
                Some(path) => write_csv(&records, path)?,
                None => rlb_las::harness::write_csv_to(&records, std::io::stdout().lock())?,
            }
            if let Some(path) = plot_out {
                write_plotdata(&records, path)?;
            }
            Ok(())
        }
        Command::Sweep {
            k_list,
            target_ber,
            snr_grid,
            min_bits,
            detector,
            common,
        } => {
            if k_list.is_empty() {
                return Err(Error::Config("empty --k-list".into()));
            }
            if !(target_ber > 0.0 && target_ber < 1.0) {
                return Err(Error::Config("--target-ber must be in (0, 1)".into()));
            }
            let mut template = RunConfig64 {
                snr_grid_db: snr_grid,
                detectors: vec![detector.parse()?],
                ..Default::default()
            };
            if let Some(seed) = common.seed {
                template.master_seed = seed;
            }
            let points = if common.workers > 0 {
                let pool = rayon_pool(common.workers)?;
                pool.install(|| complexity_sweep(&k_list, target_ber, &template, min_bits))?
            } else {
                complexity_sweep(&k_list, target_ber, &template, min_bits)?
            };

            let mut out = String::from("K,snr_db,ber,avg_flops_per_symbol\n");
            for p in &points {
                match (p.snr_db, p.ber, p.avg_flops_per_symbol) {
                    (Some(s), Some(b), Some(f)) => {
                        out.push_str(&format!("{},{s},{b},{f}\n", p.k));
                    }
                    _ => {
                        eprintln!(
                            "K={}: target BER {target_ber} not reached within the SNR grid",
                            p.k
                        );
                    }
                }
            }
            match &common.out {
                Some(path) => fs::write(path, out)?,
                None => print!("{out}"),
            }
            Ok(())
        }
        Command::OracleCompare {
            k,
            snr,
            trials,
            common,
        } => {
            if trials == 0 {
                return Err(Error::Config("--trials must be positive".into()));
            }
            let rlb = RlbConfig::<f64>::default();
            let seed = common.seed.unwrap_or(0);
            let stats = if common.workers > 0 {
                let pool = rayon_pool(common.workers)?;
                pool.install(|| oracle_compare(k, snr, trials, seed, &rlb))?
            } else {
                oracle_compare(k, snr, trials, seed, &rlb)?
            };
            let report = format!(
                "trials: {}\noracle cost matches: {} ({:.4})\nrlb ber: {:.6e}\nml ber: {:.6e}\navg restarts: {:.2}\n",
                stats.trials,
                stats.cost_matches,
                stats.match_fraction(),
                stats.rlb_ber(),
                stats.ml_ber(),
                stats.avg_restarts
            );
            match &common.out {
                Some(path) => fs::write(path, report)?,
                None => print!("{report}"),
            }
            Ok(())
        }
    }
}

fn rayon_pool(workers: usize) -> Result<rlb_las::rayon::ThreadPool, Error> {
    rlb_las::rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::UnsupportedOrder(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
