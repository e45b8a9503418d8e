//! `biot-study`: runs a refinement study from a configuration file and
//! writes CSV and table reports.
//!
//! Exit codes: 0 success, 1 configuration error, 2 solver failure,
//! 3 self-test failure.

use std::path::PathBuf;
use std::process::ExitCode;

use biot_core::study::{self, parse_levels, Scheme, SelfTestOptions, StudyConfig};
use biot_core::Error;
use clap::Parser;

#[derive(Parser, Debug)]
#[command(name = "biot-study", version, about = "Convergence studies for the space-time poroelasticity solver")]
struct Args {
    /// Configuration file (flat `key = value`); benchmark defaults when omitted.
    config: Option<PathBuf>,

    /// Override the scheme (equal-order or taylor-hood).
    #[arg(long)]
    scheme: Option<Scheme>,

    /// Override the polynomial degree in time.
    #[arg(short, long)]
    k: Option<usize>,

    /// Override the spatial order.
    #[arg(short, long)]
    r: Option<usize>,

    /// Override the level range, e.g. `0..3`.
    #[arg(long)]
    levels: Option<String>,

    /// Override the output directory.
    #[arg(short, long)]
    output_dir: Option<PathBuf>,

    /// Also write a markdown table.
    #[arg(long)]
    emit_markdown: bool,

    /// Run the fast property suite instead of a study.
    #[arg(long)]
    self_test: bool,

    /// Flip the coupling sign inside the self test (checks that it can fail).
    #[arg(long, hide = true, requires = "self_test")]
    inject_fault: bool,
}

fn load_config(args: &Args) -> Result<StudyConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => StudyConfig::from_file(path)?,
        None => StudyConfig::default(),
    };
    if let Some(s) = args.scheme {
        cfg.scheme = s;
    }
    if let Some(k) = args.k {
        cfg.k = k;
    }
    if let Some(r) = args.r {
        cfg.r = r;
    }
    if let Some(l) = &args.levels {
        cfg.levels = parse_levels(l)?;
    }
    if let Some(d) = &args.output_dir {
        cfg.output_dir = d.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();

    if args.self_test {
        let report = study::self_test_with(SelfTestOptions { corrupt_coupling_sign: args.inject_fault });
        print!("{}", report.summary());
        return if report.passed() {
            ExitCode::SUCCESS
        } else {
            eprintln!("self test failed: {}", report.failures().join(", "));
            ExitCode::from(3)
        };
    }

    let cfg = match load_config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(1);
        }
    };

    let (ou, op) = cfg.orders();
    eprintln!(
        "scheme {}, k = {}, vector order {ou}, pressure order {op}, levels {}..{}",
        cfg.scheme, cfg.k, cfg.levels.0, cfg.levels.1
    );
    let report = study::run_study(&cfg, |o| {
        eprintln!(
            "level {}: {} slabs, {} unknowns per slab, residual {:.1e}, {:.1} s",
            o.record.level,
            o.n_slabs,
            o.slab_unknowns,
            o.max_residual,
            o.elapsed.as_secs_f64()
        );
    });
    let report = match report {
        Ok(r) => r,
        Err(e) => {
            eprintln!("solver failure: {e}");
            return ExitCode::from(2);
        }
    };

    print!("{}", report.to_table());
    match study::write_report(&report, &cfg.output_dir, args.emit_markdown) {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("cannot write report: {e}");
            ExitCode::from(2)
        }
    }
}
