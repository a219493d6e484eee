//! `timebin-sim`: correlation, fringe and sweep runs of the time-bin
//! entanglement simulator, plus offline fringe fitting.

mod manifest;

use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use manifest::{RunManifest, MANIFEST_FILE};
use timebin_core::analysis::{fit_fringe, sweep_csv, sweep_mu, sweep_mu_mc, FringeModel, FringeScan};
use timebin_core::config::FiberSpool;
use timebin_core::model::estimate_correlated_fraction;
use timebin_core::montecarlo::{evenly_spaced_phases, run_fringe_scan, simulate_with, simulate_with_dump, SimOptions, DEFAULT_SEED};
use timebin_core::{config_hash, predict_rates, Error, ExperimentConfig};

const EXIT_USAGE: u8 = 2;
const EXIT_MODEL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "timebin-sim", version, about = "Time-bin entangled photon pair simulator")]
struct Cli {
    /// Worker threads for the simulation.
    #[arg(long, global = true, env = "TIMEBIN_SIM_THREADS")]
    threads: Option<usize>,

    /// Directory for CSV files, reports and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct SeedArg {
    /// Base seed of the random streams.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Time correlation without interferometers: TIA histogram and C.
    Correlate {
        /// Experiment config (INI).
        config: PathBuf,
        /// Number of gates to simulate; `1e9` style is accepted.
        #[arg(long, default_value = "10000000", value_parser = parse_count)]
        gates: u64,
        #[command(flatten)]
        seed: SeedArg,
        /// Also write every detected photon and dark count (sequential, slow).
        #[arg(long)]
        dump_events: bool,
    },
    /// Two-photon fringe over the idler interferometer phase.
    Fringe {
        /// Experiment config (INI).
        config: PathBuf,
        /// Idler phase settings over one period.
        #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(5..))]
        points: u64,
        #[arg(long, default_value = "10000000", value_parser = parse_count)]
        gates_per_point: u64,
        #[command(flatten)]
        seed: SeedArg,
        /// Standard single-mode fiber inserted into each arm, in km.
        #[arg(long)]
        smf_km: Option<f64>,
    },
    /// C and correlated fractions versus pump power.
    Sweep {
        /// Experiment config (INI).
        config: PathBuf,
        /// Relative pump powers, comma separated.
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        powers: Vec<f64>,
        /// Add simulated C columns.
        #[arg(long)]
        mc: bool,
        /// Gates per power for `--mc`.
        #[arg(long, default_value = "10000000", value_parser = parse_count)]
        gates: u64,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Fits a scan CSV written by `fringe` or by an external instrument.
    Fit { scan: PathBuf },
}

/// Accepts plain integers and exponent notation such as `1e7`.
fn parse_count(text: &str) -> Result<u64, String> {
    let value = match text.parse::<u64>() {
        Ok(v) => v,
        Err(_) => {
            let f: f64 = text.parse().map_err(|_| format!("'{text}' is not a number"))?;
            if !(f.is_finite() && f >= 0.0 && f.fract() == 0.0 && f < u64::MAX as f64) {
                return Err(format!("'{text}' is not a whole number of gates"));
            }
            f as u64
        }
    };
    if value == 0 {
        return Err("must be at least 1".into());
    }
    Ok(value)
}

enum Failure {
    Usage(String),
    Model(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } | Error::Config { .. } | Error::Csv { .. } | Error::Io(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Model(e.to_string()),
        }
    }
}

impl Failure {
    fn context(self, prefix: &Path) -> Self {
        match self {
            Failure::Usage(m) => Failure::Usage(format!("{}: {m}", prefix.display())),
            Failure::Model(m) => Failure::Model(format!("{}: {m}", prefix.display())),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load_config(path: &Path) -> CliResult<(ExperimentConfig, String)> {
    let text = read_text(path)?;
    let cfg = ExperimentConfig::from_ini_str(&text).map_err(|e| Failure::from(e).context(path))?;
    for w in cfg.validate()? {
        warn!("{w}");
    }
    Ok((cfg, config_hash(&text)))
}

struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.path(name);
        fs::write(&path, contents).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
        info!("wrote {}", path.display());
        self.written.push(path);
        Ok(())
    }
}

fn correlate(cfg: &ExperimentConfig, hash: &str, gates: u64, seed: u64, dump: bool, out: &mut Outputs) -> CliResult<()> {
    let cfg = cfg.without_interferometers();
    let opts = SimOptions::with_seed(seed);
    let result = if dump {
        let path = out.path("events.csv");
        let file = fs::File::create(&path).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
        let r = simulate_with_dump(&cfg, gates, &opts, &mut BufWriter::new(file))?;
        out.written.push(path);
        r
    } else {
        simulate_with(&cfg, gates, &opts)?
    };
    out.write("histogram.csv", &result.histogram.to_csv(hash))?;

    let c = result.histogram.measured_c()?;
    let c_err = result.histogram.measured_c_error()?;
    let prediction = predict_rates(&cfg, 0.0)?;
    let mut report = String::new();
    let _ = writeln!(report, "gates={}", result.n_gates);
    let _ = writeln!(report, "singles_s={}", result.singles_s);
    let _ = writeln!(report, "singles_i={}", result.singles_i);
    let _ = writeln!(report, "matched={}", result.histogram.matched());
    let _ = writeln!(report, "unmatched_mean={}", result.histogram.unmatched_mean());
    let _ = writeln!(report, "C={c}");
    let _ = writeln!(report, "C_err={c_err}");
    let _ = writeln!(report, "C_model={}", prediction.expected_measured_c(cfg.tia_window));
    let inverted = estimate_correlated_fraction(
        c,
        result.singles_probability(timebin_core::Arm::Signal),
        result.singles_probability(timebin_core::Arm::Idler),
        prediction.alpha_s,
        prediction.alpha_i,
        cfg.detectors.signal.dark_count_per_gate,
        cfg.detectors.idler.dark_count_per_gate,
    );
    match inverted {
        Ok(f) => {
            let _ = writeln!(report, "mu_c={}", f.means.mu_c);
            let _ = writeln!(report, "mu_i={}", f.means.mu_i());
            let _ = writeln!(report, "fraction_s={}", f.fraction_s);
            let _ = writeln!(report, "fraction_i={}", f.fraction_i);
        }
        Err(e) => warn!("photon numbers not inferred: {e}"),
    }
    out.write("correlate_report.txt", &report)?;
    print!("{report}");
    eprintln!("C = {c:.3} ± {c_err:.3}");
    Ok(())
}

fn fringe(cfg: &ExperimentConfig, points: usize, gates: u64, seed: u64, smf_km: Option<f64>, out: &mut Outputs) -> CliResult<()> {
    let cfg = match smf_km {
        Some(km) if !(km >= 0.0 && km.is_finite()) => {
            return Err(Failure::Usage(format!("--smf-km {km} must be finite and >= 0")));
        }
        Some(km) => cfg.with_fiber(km, FiberSpool::STANDARD_SMF),
        None => cfg.clone(),
    };
    let run = run_fringe_scan(&cfg, &evenly_spaced_phases(points), gates, seed)?;
    out.write("scan.csv", &run.scan.to_csv())?;
    let raw = fit_fringe(&run.scan, FringeModel::Raw)?;
    let sub = fit_fringe(&run.scan, FringeModel::Subtracted)?;
    let model = predict_rates(&cfg, 0.0)?;
    let mut report = String::new();
    let _ = writeln!(report, "points={points}");
    let _ = writeln!(report, "gates_per_point={gates}");
    let _ = writeln!(report, "accidental_estimate={}", run.scan.accidental_estimate);
    let _ = writeln!(report, "model_v_raw={}", model.v_raw);
    let _ = writeln!(report, "model_v_sub={}", model.v_sub);
    report.push('\n');
    report.push_str(&raw.report());
    report.push('\n');
    report.push_str(&sub.report());
    out.write("fringe_report.txt", &report)?;
    print!("{report}");
    eprintln!(
        "V_raw = {:.4} ± {:.4}, V_sub = {:.4} ± {:.4}",
        raw.visibility, raw.visibility_err, sub.visibility, sub.visibility_err
    );
    Ok(())
}

fn sweep(cfg: &ExperimentConfig, powers: &[f64], mc: bool, gates: u64, seed: u64, out: &mut Outputs) -> CliResult<()> {
    let rows = if mc { sweep_mu_mc(cfg, powers, gates, seed)? } else { sweep_mu(cfg, powers)? };
    let csv = sweep_csv(&rows);
    out.write("sweep.csv", &csv)?;
    print!("{csv}");
    Ok(())
}

fn fit(text: &str, path: &Path, out: &mut Outputs) -> CliResult<()> {
    let scan = FringeScan::from_csv(text).map_err(|e| Failure::from(e).context(path))?;
    let mut report = String::new();
    report.push_str(&fit_fringe(&scan, FringeModel::Raw)?.report());
    if scan.accidental_estimate > 0.0 {
        report.push('\n');
        report.push_str(&fit_fringe(&scan, FringeModel::Subtracted)?.report());
    }
    out.write("fit_report.txt", &report)?;
    print!("{report}");
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("thread pool: {e}")))?;
    }
    let start = Instant::now();
    let mut out = Outputs::new(&cli.out_dir)?;
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let command = argv.join(" ");
    let mut manifest = match cli.command {
        Command::Correlate { config, gates, seed, dump_events } => {
            let (cfg, hash) = load_config(&config)?;
            correlate(&cfg, &hash, gates, seed.seed, dump_events, &mut out)?;
            RunManifest::new(command, &config, hash, Some(seed.seed))
        }
        Command::Fringe { config, points, gates_per_point, seed, smf_km } => {
            let (cfg, hash) = load_config(&config)?;
            fringe(&cfg, points as usize, gates_per_point, seed.seed, smf_km, &mut out)?;
            RunManifest::new(command, &config, hash, Some(seed.seed))
        }
        Command::Sweep { config, powers, mc, gates, seed } => {
            let (cfg, hash) = load_config(&config)?;
            sweep(&cfg, &powers, mc, gates, seed.seed, &mut out)?;
            RunManifest::new(command, &config, hash, mc.then_some(seed.seed))
        }
        Command::Fit { scan } => {
            let text = read_text(&scan)?;
            fit(&text, &scan, &mut out)?;
            RunManifest::new(command, &scan, config_hash(&text), None)
        }
    };
    manifest.outputs = std::mem::take(&mut out.written);
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    out.write(MANIFEST_FILE, &manifest.render())?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Model(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_MODEL)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_accept_exponent_notation() {
        assert_eq!(parse_count("1e7"), Ok(10_000_000));
        assert_eq!(parse_count("250"), Ok(250));
        assert!(parse_count("0").is_err());
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
    }

    #[test]
    fn errors_map_to_exit_classes() {
        assert!(matches!(Failure::from(Error::Csv { line: 3, reason: String::new() }), Failure::Usage(_)));
        assert!(matches!(Failure::from(Error::Regime(String::new())), Failure::Model(_)));
        assert!(matches!(Failure::from(Error::Inconsistent(String::new())), Failure::Model(_)));
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
