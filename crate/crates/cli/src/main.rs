use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use probe_core::config::ExperimentConfig;
use probe_core::pipeline::{quarantine, run_experiment, write_artifacts, Outcome};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Sweep,
    Detect,
    Validate,
    Weyl,
    Classical,
    Calibrate,
}

impl ModeArg {
    fn key(self) -> &'static str {
        match self {
            ModeArg::Sweep => "sweep",
            ModeArg::Detect => "detect",
            ModeArg::Validate => "validate",
            ModeArg::Weyl => "weyl",
            ModeArg::Classical => "classical",
            ModeArg::Calibrate => "calibrate",
        }
    }
}

/// Locates critical energies of a Schrodinger operator from its spectrum.
#[derive(Debug, Parser)]
#[command(name = "probe", version)]
struct Args {
    mode: ModeArg,
    /// INI experiment file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides run.out).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// hbar_max,ratio,count
    #[arg(long = "hbar-ladder", value_name = "H0,RHO,COUNT")]
    hbar_ladder: Option<String>,
    /// section.key=value, repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn overrides(args: &Args) -> Result<Vec<String>, String> {
    let mut list = vec![format!("run.mode={}", args.mode.key())];
    if let Some(out) = &args.out {
        list.push(format!("run.out={}", out.display()));
    }
    if let Some(seed) = args.seed {
        list.push(format!("run.seed={seed}"));
    }
    if let Some(l) = &args.hbar_ladder {
        let parts: Vec<&str> = l.split(',').map(str::trim).collect();
        let [h0, rho, count] = parts[..] else {
            return Err(format!("--hbar-ladder expects h0,rho,count, got '{l}'"));
        };
        list.push(format!("ladder.hbar_max={h0}"));
        list.push(format!("ladder.ratio={rho}"));
        list.push(format!("ladder.count={count}"));
    }
    list.extend(args.overrides.iter().cloned());
    Ok(list)
}

fn threads() -> Result<Option<usize>, String> {
    match std::env::var("PROBE_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .map(Some)
            .ok_or_else(|| format!("PROBE_THREADS must be a positive integer, got '{v}'")),
        Err(_) => Ok(None),
    }
}

fn load(args: &Args) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| format!("{}: {e}", args.config.display()))?;
    let base = args.config.parent().unwrap_or(Path::new("."));
    let mut cfg = ExperimentConfig::parse(&text, base).map_err(|e| e.to_string())?;
    cfg.apply_overrides(&overrides(args)?, base).map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn summary(out: &Outcome) {
    let r = &out.resolved;
    println!("config_hash {}", r.config_hash);
    println!("n {}  M {:.4}  M_coef {:.4}  period bound {:.4}", r.n, r.m, r.m_coef, r.period_bound);
    if let Some(d) = &out.detect {
        println!("{:>10} {:>8} {:>2} {:>2} {:>8} {:>10} {:>6}", "E_c", "alpha", "m", "k", "class", "A", "multi");
        for rep in &d.reports {
            let mark = if rep.up_to_universal_constant { "*" } else { "" };
            let a = rep.spherical_average.map_or("-".into(), |a| format!("{a:.4}{mark}"));
            println!(
                "{:>10.5} {:>8.4} {:>2} {:>2} {:>8} {:>10} {:>6}",
                rep.energy,
                rep.alpha,
                rep.log_flag,
                rep.k,
                format!("{:?}", rep.class).to_lowercase(),
                a,
                rep.multi_point
            );
        }
        if d.reports.iter().any(|r| r.up_to_universal_constant) {
            println!("* uncalibrated: set calibration.table to scale maxima");
        }
        for w in &d.warnings {
            println!("warning: {w}");
        }
    }
    if let Some(rows) = &out.validation {
        let pass = rows.iter().filter(|r| r.pass()).count();
        println!("validation: {pass}/{} ground-truth points recovered", rows.len());
    }
    if let Some(w) = &out.weyl {
        println!("weyl: E {} LVol {:.6} deviation at smallest hbar {:.4}", w.energy, w.liouville, w.deviation);
    }
    if let Some(t) = &out.calibration {
        for e in &t.entries {
            println!("calibration: n {} k {} constant {:.6}", e.n, e.k, e.constant);
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match load(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let threads = match threads() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match run_experiment(&cfg, threads) {
        Ok(out) => {
            if let Err(e) = write_artifacts(&cfg.out, &out.artifacts) {
                eprintln!("writing {}: {e}", cfg.out.display());
                return ExitCode::from(EXIT_NUMERICAL);
            }
            summary(&out);
            println!("{} artifacts written to {}", out.artifacts.len(), cfg.out.display());
            ExitCode::SUCCESS
        }
        Err(err) if err.is_config() => {
            eprintln!("{err}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(err) => {
            eprintln!("{err}");
            if let Err(e) = quarantine(&cfg.out, &err) {
                eprintln!("quarantine failed: {e}");
            } else {
                eprintln!("partial artifacts in {}", cfg.out.join("quarantine").display());
            }
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
