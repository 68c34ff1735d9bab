use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use twinbeam::analysis::analyze_point;
use twinbeam::config::RunConfig;
use twinbeam::io;
use twinbeam::selfcheck::{self, SelfCheckOptions};
use twinbeam::sweeps::{run_sweep, SweepSpec, BUNDLED_SPECS};
use twinbeam::{Error, Result};

#[derive(Parser)]
#[command(name = "twinbeam", version, about = "Twin-beam mode structure from type-I PDC")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration; the bundled 8 mm BBO setup when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, 0 for all cores (overrides `numerics.workers`).
    #[arg(long)]
    workers: Option<usize>,
    /// Multiplies every grid density.
    #[arg(long)]
    grid_scale: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze one parameter point and write profiles, modes and metrics.
    Analyze {
        #[command(flatten)]
        common: Common,
    },
    /// Run a parameter sweep.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Sweep specification: a TOML path or a bundled name (fig1, fig5, filter).
        #[arg(long)]
        spec: String,
    },
    /// Run the analytic oracle checks.
    Selfcheck {
        #[arg(long, hide = true)]
        x_e: Option<f64>,
    },
    /// Print the resolved configuration.
    PrintConfig {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load(config: &Option<PathBuf>) -> Result<RunConfig> {
    match config {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::bundled_default()),
    }
}

fn resolve(common: &Common) -> Result<(RunConfig, PathBuf)> {
    let mut cfg = load(&common.config)?;
    if let Some(w) = common.workers {
        cfg.numerics.workers = w;
    }
    if let Some(s) = common.grid_scale {
        cfg.numerics.grid_scale = s;
    }
    cfg.validate()?;
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    Ok((cfg, out))
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))
}

fn analyze(cfg: &RunConfig, out: &Path) -> Result<()> {
    let t = Instant::now();
    let a = pool(cfg.numerics.workers)?.install(|| analyze_point(cfg, &cfg.output.metrics, cfg.output.modes))?;
    let files = io::write_analysis(out, &a, cfg)?;
    io::write_manifest(out, "analyze", cfg, None, &files)?;
    for m in &a.metrics.entries {
        println!("{:<16} {:>22} {}", m.name, io::fmt_f64(m.value), m.unit);
    }
    eprintln!("wrote {} files to {} in {:.1} s", files.len() + 1, out.display(), t.elapsed().as_secs_f64());
    Ok(())
}

fn sweep(cfg: &RunConfig, out: &Path, spec: &str) -> Result<()> {
    let spec = if BUNDLED_SPECS.contains(&spec) {
        SweepSpec::bundled(spec, cfg.clone())?
    } else {
        SweepSpec::load(Path::new(spec), cfg.clone())?
    };
    let t = Instant::now();
    let records = run_sweep(&spec, cfg.numerics.workers)?;
    let path = out.join(format!("sweep_{}.csv", spec.name));
    io::write_sweep_csv(&path, &spec, &records)?;
    io::write_manifest(out, "sweep", cfg, Some(&spec), &[path.clone()])?;
    let failed = records.iter().filter(|r| r.outcome.is_err()).count();
    eprintln!(
        "{} points ({} failed) in {:.1} s -> {}",
        records.len(),
        failed,
        t.elapsed().as_secs_f64(),
        path.display()
    );
    if failed > 0 {
        return Err(Error::invalid("sweep", format!("{failed} points failed; see the error column")));
    }
    Ok(())
}

fn report(out: &Path, command: &str, r: Result<()>) -> ExitCode {
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Err(w) = io::write_error(out, command, &e) {
                eprintln!("could not write error file: {w}");
            }
            ExitCode::FAILURE
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Analyze { common } => match resolve(&common) {
            Ok((cfg, out)) => report(&out, "analyze", analyze(&cfg, &out)),
            Err(e) => report(&common.out.unwrap_or_else(|| "out".into()), "analyze", Err(e)),
        },
        Command::Sweep { common, spec } => match resolve(&common) {
            Ok((cfg, out)) => report(&out, "sweep", sweep(&cfg, &out, &spec)),
            Err(e) => report(&common.out.unwrap_or_else(|| "out".into()), "sweep", Err(e)),
        },
        Command::Selfcheck { x_e } => {
            let mut opts = SelfCheckOptions::default();
            if let Some(x) = x_e {
                opts.sinc_root = x;
            }
            let results = selfcheck::run(&opts);
            for r in &results {
                println!("{r}");
            }
            if results.iter().all(|r| r.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Command::PrintConfig { config } => match load(&config) {
            Ok(cfg) => {
                print!("{}", cfg.to_toml_string());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
    }
}
