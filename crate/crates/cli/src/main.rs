//! `conoscatter` — forward/inverse Born scattering workbench.
//!
//! Exit codes: 0 all checks pass, 2 check failures, 3 configuration errors.

use anyhow::Result;
use clap::{Parser, Subcommand};
use conoscatter_cli::config::ExperimentConfig;
use conoscatter_cli::{accept, configure_threads, manifest::RunManifest, runner};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "conoscatter", version, about = "Born scattering workbench for nested conormal potentials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (TOML; sections per pipeline module).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overridden by CONOSCATTER_OUT).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = library default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the potential and write its grid.
    Synth,
    /// Born traces at probe receivers (requires synth artifacts).
    Forward,
    /// Assemble the scattering kernel (requires synth artifacts).
    Scatter,
    /// Restrict the kernel to the configured data slice.
    Restrict,
    /// Detect echoes and recover point clouds.
    Reconstruct,
    /// Full pipeline: synth → forward → scatter → restrict → reconstruct.
    Pipeline,
    /// Geometry certificates: ranks, intersections, multiphase residuals.
    Geomcheck,
    /// Fast-vs-oracle and route-vs-route comparison report.
    CompareOracle {
        #[arg(long, default_value_t = 20)]
        probes: usize,
        #[arg(long, default_value_t = false)]
        routes: bool,
    },
    /// Run the full validation suite (no config needed).
    Validate,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, ExitCode> {
    let Some(path) = &cli.config else {
        eprintln!("CONFIG_INVALID: --config is required for this subcommand");
        return Err(ExitCode::from(3));
    };
    match ExperimentConfig::from_path(path) {
        Ok(mut c) => {
            if let Some(seed) = cli.seed {
                c.scenario.seed = seed;
            }
            Ok(c)
        }
        Err(e) => {
            eprintln!("{e}");
            Err(ExitCode::from(3))
        }
    }
}

fn out_dir(cli: &Cli, config: &ExperimentConfig) -> PathBuf {
    if let Ok(env) = std::env::var("CONOSCATTER_OUT") {
        return PathBuf::from(env);
    }
    cli.out.clone().unwrap_or_else(|| PathBuf::from(&config.output.dir))
}

fn finish(manifest: &RunManifest) -> ExitCode {
    for check in &manifest.checks {
        println!(
            "CHECK {}: {} — {}",
            check.name,
            if check.pass { "PASS" } else { "FAIL" },
            check.detail
        );
    }
    if manifest.all_checks_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn run_stage(
    cli: &Cli,
    f: impl FnOnce(&ExperimentConfig, &std::path::Path, &mut RunManifest) -> Result<()>,
) -> ExitCode {
    let config = match load_config(cli) {
        Ok(c) => c,
        Err(code) => return code,
    };
    configure_threads(if cli.threads > 0 { cli.threads } else { config.output.threads });
    let out = out_dir(cli, &config);
    if let Err(e) = std::fs::create_dir_all(&out) {
        eprintln!("cannot create output directory: {e}");
        return ExitCode::from(3);
    }
    let mut manifest =
        RunManifest::new(config.hash(), config.scenario.name.clone(), config.scenario.seed);
    match f(&config, &out, &mut manifest) {
        Ok(()) => {
            let _ = manifest.write(&out, "manifest");
            finish(&manifest)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Synth => run_stage(&cli, runner::stage_synth),
        Command::Forward => run_stage(&cli, runner::stage_forward),
        Command::Scatter => run_stage(&cli, runner::stage_scatter),
        Command::Restrict => run_stage(&cli, |c, o, m| runner::stage_restrict(c, o, m).map(|_| ())),
        Command::Reconstruct => {
            run_stage(&cli, |c, o, m| runner::stage_reconstruct(c, o, m).map(|_| ()))
        }
        Command::Pipeline => {
            let config = match load_config(&cli) {
                Ok(c) => c,
                Err(code) => return code,
            };
            configure_threads(if cli.threads > 0 { cli.threads } else { config.output.threads });
            let out = out_dir(&cli, &config);
            match runner::run_pipeline(&config, &out) {
                Ok(m) => finish(&m),
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Geomcheck => {
            let config = match load_config(&cli) {
                Ok(c) => c,
                Err(code) => return code,
            };
            configure_threads(if cli.threads > 0 { cli.threads } else { config.output.threads });
            let out = out_dir(&cli, &config);
            match runner::run_geometry_suite(&config, &out) {
                Ok(m) => finish(&m),
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::CompareOracle { probes, routes } => {
            let config = match load_config(&cli) {
                Ok(c) => c,
                Err(code) => return code,
            };
            configure_threads(cli.threads);
            match runner::compare_oracle(&config, *probes, *routes) {
                Ok(report) => {
                    println!("{}", serde_json::to_string_pretty(&report).unwrap());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Validate => {
            configure_threads(cli.threads);
            let results = accept::run_all();
            let mut all = true;
            for r in &results {
                println!(
                    "ACCEPTANCE {}: {} ({:.1} s) — {}",
                    r.name,
                    if r.pass { "PASS" } else { "FAIL" },
                    r.seconds,
                    r.detail
                );
                all &= r.pass;
            }
            if all {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
    }
}
