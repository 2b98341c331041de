//! `cubelab`: deterministic finite-horizon experiments on averages along
//! cubes. Exit codes: 0 on success, 1 on usage or configuration errors,
//! 2 when a numeric task fails.

mod config;
mod presets;
mod report;
mod run;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use config::{ConfigError, ExperimentConfig, NamedObservable, TaskKind};

#[derive(Parser, Debug)]
#[command(
    name = "cubelab",
    version,
    about = "Finite-horizon laboratory for averages along cubes",
    infer_subcommands = true
)]
struct Cli {
    /// JSON experiment config; command-line flags override its entries.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output CSV path (defaults to the config's `output`, else stdout).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Master seed; every randomized trial derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for the parallel kernels (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// System preset (`rotation[:alpha]`, `doubling[:seed]`, `skew[:alpha]`,
    /// `product[:alpha[:theta]]`, `external:<path>`) or inline JSON.
    #[arg(long, global = true, value_name = "SPEC")]
    system: Option<String>,

    /// Observable preset (`one`, `e:k[:l]`, `cos:k`, `ind:a:b`, suffix
    /// `!mz` for mean-zero, optional `name=` prefix) or inline JSON.
    /// Repeat to fill several roles; the list is cycled.
    #[arg(long = "obs", global = true, value_name = "SPEC")]
    observables: Vec<String>,

    /// Start point `x` or `x,y`.
    #[arg(long, global = true, value_name = "COORDS")]
    x0: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample an orbit and write it as `n,re,im` rows.
    Orbit {
        #[arg(long = "L")]
        l: Option<usize>,
    },
    /// Evaluate a cube average at one horizon, or trace it with `--trace`.
    Avg {
        /// Order k: 3 functions for k=2, 7 for k=3, 15 for k=4.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long = "N")]
        n: Option<usize>,
        /// naive, fast, or both.
        #[arg(long)]
        method: Option<String>,
        /// Horizon spec (`64,128,256` or `2^6..2^12`); switches to a trace.
        #[arg(long, value_name = "HORIZONS")]
        trace: Option<String>,
    },
    /// Uniform Wiener-Wintner sup statistic of one observable.
    Ww {
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long)]
        oversample: Option<usize>,
    },
    /// Order-2 or order-3 self-correlation seminorm estimate.
    Seminorm {
        #[arg(long)]
        order: Option<usize>,
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long = "H")]
        h: Option<usize>,
        /// Inner averaging length for order 3 (defaults to H).
        #[arg(long = "H-inner")]
        h_inner: Option<usize>,
    },
    /// Finite-horizon verification reports.
    Verify {
        #[command(subcommand)]
        check: VerifyCommand,
    },
    /// Cube-average trace over a horizon list.
    Trace {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_name = "HORIZONS")]
        horizons: Option<String>,
    },
}

#[derive(Args, Debug, Clone)]
struct VerifyNH {
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long = "H")]
    h: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum VerifyCommand {
    /// Seeded random trials of the van der Corput inequality.
    Vdc {
        #[arg(long)]
        trials: Option<usize>,
        #[command(flatten)]
        nh: VerifyNH,
    },
    /// Modulated-sup vs correlation bound diagnostic pair.
    Lemma2 {
        #[command(flatten)]
        nh: VerifyNH,
    },
    /// Bilinear uniformity quantity at one horizon.
    Lemma3 {
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long)]
        oversample: Option<usize>,
    },
    /// Block uniformity quantity for k in {3, 4}.
    Lemma4 {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long)]
        oversample: Option<usize>,
    },
    /// Raw vs Kronecker-projected bilinear comparison.
    Eq1 {
        #[arg(long = "N")]
        n: Option<usize>,
    },
    /// Raw vs CL-projected quadrilinear comparison.
    Eq10 {
        #[arg(long = "N")]
        n: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    if let Some(threads) = cli.threads {
        // a failure here only means a pool already exists
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    let config = match build_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    let report = match run::run(&config) {
        Ok(report) => report,
        Err(run::RunError::Config(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    let destination = cli.out.clone().or_else(|| config.output.clone());
    let write_result = match &destination {
        Some(path) => std::fs::File::create(path)
            .and_then(|mut f| report.write_csv(&mut f)),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            report.write_csv(&mut lock).and_then(|_| lock.flush())
        }
    };
    if let Err(e) = write_result {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(2);
    }

    match &destination {
        Some(path) => eprintln!("{} -> {}", report.summary, path.display()),
        None => eprintln!("{}", report.summary),
    }
    ExitCode::SUCCESS
}

/// Assembles the effective configuration: file (or defaults), then global
/// flags, then the subcommand's task parameters on top.
fn build_config(cli: &Cli) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => config::load_config(path)?,
        None => {
            let mut cfg = ExperimentConfig::default();
            // defaults carry example task parameters; a subcommand always
            // replaces them below
            cfg.parameters = serde_json::Map::new();
            cfg
        }
    };

    if let Some(system) = &cli.system {
        cfg.system = presets::parse_system(system)?;
    }
    if !cli.observables.is_empty() {
        cfg.observables = cli
            .observables
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                let (name, body) = match spec.split_once('=') {
                    Some((name, body)) if !name.contains('{') => {
                        (name.trim().to_string(), body)
                    }
                    _ => (format!("f{}", i + 1), spec.as_str()),
                };
                Ok(NamedObservable {
                    name,
                    observable: presets::parse_observable(body)?,
                })
            })
            .collect::<Result<_, ConfigError>>()?;
    }
    if let Some(x0) = &cli.x0 {
        cfg.x0 = Some(presets::parse_point(x0)?);
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output = Some(out.clone());
    }

    apply_command(&mut cfg, &cli.command)?;
    cfg.validate()?;
    Ok(cfg)
}

fn set_usize(cfg: &mut ExperimentConfig, key: &str, value: Option<usize>) {
    if let Some(v) = value {
        cfg.parameters.insert(key.into(), (v as u64).into());
    }
}

fn apply_command(cfg: &mut ExperimentConfig, cmd: &Command) -> Result<(), ConfigError> {
    // switching task invalidates any file-supplied parameters
    let new_task = match cmd {
        Command::Orbit { .. } => TaskKind::Orbit,
        Command::Avg { .. } => TaskKind::Avg,
        Command::Ww { .. } => TaskKind::Ww,
        Command::Seminorm { .. } => TaskKind::Seminorm,
        Command::Verify { .. } => TaskKind::Verify,
        Command::Trace { .. } => TaskKind::Trace,
    };
    if cfg.task != new_task {
        cfg.task = new_task;
        cfg.parameters.clear();
    }

    match cmd {
        Command::Orbit { l } => set_usize(cfg, "L", *l),
        Command::Avg {
            k,
            n,
            method,
            trace,
        } => {
            set_usize(cfg, "k", *k);
            set_usize(cfg, "N", *n);
            if let Some(m) = method {
                cfg.parameters.insert("method".into(), m.as_str().into());
            }
            if let Some(spec) = trace {
                let horizons = presets::parse_horizons(spec)?;
                cfg.parameters
                    .insert("horizons".into(), serde_json::to_value(horizons).unwrap());
            }
        }
        Command::Ww { n, oversample } => {
            set_usize(cfg, "N", *n);
            set_usize(cfg, "oversample", *oversample);
        }
        Command::Seminorm {
            order,
            n,
            h,
            h_inner,
        } => {
            set_usize(cfg, "order", *order);
            set_usize(cfg, "N", *n);
            set_usize(cfg, "H", *h);
            set_usize(cfg, "Hinner", *h_inner);
        }
        Command::Verify { check } => {
            let name = match check {
                VerifyCommand::Vdc { trials, nh } => {
                    set_usize(cfg, "trials", *trials);
                    set_usize(cfg, "N", nh.n);
                    set_usize(cfg, "H", nh.h);
                    "vdc"
                }
                VerifyCommand::Lemma2 { nh } => {
                    set_usize(cfg, "N", nh.n);
                    set_usize(cfg, "H", nh.h);
                    "lemma2"
                }
                VerifyCommand::Lemma3 { n, oversample } => {
                    set_usize(cfg, "N", *n);
                    set_usize(cfg, "oversample", *oversample);
                    "lemma3"
                }
                VerifyCommand::Lemma4 { k, n, oversample } => {
                    set_usize(cfg, "k", *k);
                    set_usize(cfg, "N", *n);
                    set_usize(cfg, "oversample", *oversample);
                    "lemma4"
                }
                VerifyCommand::Eq1 { n } => {
                    set_usize(cfg, "N", *n);
                    "eq1"
                }
                VerifyCommand::Eq10 { n } => {
                    set_usize(cfg, "N", *n);
                    "eq10"
                }
            };
            cfg.parameters.insert("check".into(), name.into());
        }
        Command::Trace { k, horizons } => {
            set_usize(cfg, "k", *k);
            if let Some(spec) = horizons {
                let hs = presets::parse_horizons(spec)?;
                cfg.parameters
                    .insert("horizons".into(), serde_json::to_value(hs).unwrap());
            }
        }
    }
    Ok(())
}
