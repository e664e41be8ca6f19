use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wpt_core::config::parse_config;
use wpt_core::experiments::{run_scenario, Fig2Variant, Scenario};
use wpt_core::selftest::run_selftest;
use wpt_core::PhiDotMode;

/// Energy-balance residual above which a run is flagged.
const AUDIT_LIMIT: f64 = 1e-5;

#[derive(Parser, Debug)]
#[command(
    name = "wpt",
    version,
    about = "Adiabatic and counterdiabatic wireless power transfer simulator"
)]
struct Cli {
    /// JSON configuration file; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Configuration override `KEY=VALUE`; keys are dotted paths such as
    /// `schedule.beta`, or bare names looked up in schedule, coils, integrator.
    #[arg(long = "override", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Fixed-step integration for bit-identical reruns.
    #[arg(long, global = true)]
    fixed_step: bool,

    /// Worker threads for grid runs.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// How the TQD frame detuning correction is computed.
    #[arg(long, global = true, value_parser = parse_mode)]
    phi_dot_mode: Option<PhiDotMode>,

    #[command(subcommand)]
    command: Command,
}

fn parse_mode(s: &str) -> Result<PhiDotMode, String> {
    s.parse()
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run both protocols on the configured schedule and coils.
    Simulate,
    /// Source/drain energy evolution for one of the variants a, b, c, d.
    Figure2 {
        #[arg(value_parser = parse_variant)]
        variant: Fig2Variant,
    },
    /// Efficiency versus detuning offset for several coupling-to-loss ratios.
    Figure4 {
        /// Run a single half-window instead of the configured list.
        #[arg(long)]
        t0: Option<f64>,
    },
    /// Efficiency versus coil separation.
    Figure5,
    /// Efficiency over the coupling by loss-rate grid.
    Figure6 {
        /// Run a single half-window instead of the configured list.
        #[arg(long)]
        t0: Option<f64>,
    },
    /// Parameter sweep described by the `sweep` configuration block.
    Sweep,
    /// Analytic consistency checks.
    Selftest,
    /// Print the fully resolved configuration.
    Config,
}

fn parse_variant(s: &str) -> Result<Fig2Variant, String> {
    s.parse()
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let mut cfg = match parse_config(cli.config.as_deref(), &cli.overrides) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.display().to_string();
    }
    cfg.fixed_step |= cli.fixed_step;
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if let Some(mode) = cli.phi_dot_mode {
        cfg.phi_dot_mode = mode;
    }
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }

    if let Some(n) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(1);
        }
    }

    let scenario = match cli.command {
        Command::Simulate => Scenario::Simulate,
        Command::Figure2 { variant } => Scenario::Figure2(variant),
        Command::Figure4 { t0 } => Scenario::Figure4(t0),
        Command::Figure5 => Scenario::Figure5,
        Command::Figure6 { t0 } => Scenario::Figure6(t0),
        Command::Sweep => Scenario::Sweep,
        Command::Config => {
            println!("{}", cfg.emit());
            return ExitCode::SUCCESS;
        }
        Command::Selftest => {
            let checks = run_selftest(&cfg.solver_options());
            let mut ok = true;
            for c in &checks {
                println!(
                    "[{}] {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
                ok &= c.passed;
            }
            let passed = checks.iter().filter(|c| c.passed).count();
            println!("selftest: {passed}/{} checks passed", checks.len());
            return if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };

    let output = match run_scenario(&scenario, &cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    for w in &output.warnings {
        eprintln!("warning: {w}");
    }
    if output.max_audit > AUDIT_LIMIT {
        eprintln!(
            "warning: energy balance residual {:.2e} exceeds {AUDIT_LIMIT:e}",
            output.max_audit
        );
    }
    let dir = PathBuf::from(&cfg.output_dir);
    if let Err(e) = output.write_to(&dir) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    println!("{} -> {}", output.summary, dir.display());
    ExitCode::SUCCESS
}
