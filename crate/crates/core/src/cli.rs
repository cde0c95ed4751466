//! Command-line surface: `sweep`, `validate`, `genie-bound`,
//! `fading-stats`.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error.

use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{parse_config, Overrides, RunConfig};
use crate::report::{render_csv, run_log_record, ResultRow, CSV_HEADER};
use crate::sim::{self as pcfso_sim, genie_bep_semi_analytic_with_se, snr_db_of};
use crate::validate::run_validation;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "pcfso",
    about = "Photon-counting FSO OOK link simulator and detector suite",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration file (key = value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output CSV path (run log goes next to it with a .log extension).
    #[arg(long, global = true, default_value = "sweep.csv")]
    out: PathBuf,

    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Parallel workers; overrides the config file. Never changes results.
    #[arg(long, global = true)]
    shards: Option<usize>,

    /// Default trellis memory length; overrides the config file.
    #[arg(long, global = true)]
    lm: Option<usize>,

    /// Reduced sample sizes (same checks / grids).
    #[arg(long, global = true)]
    quick: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the configured BER sweep and write CSV + run log.
    Sweep,
    /// Run the embedded self checks and print a pass/fail table.
    Validate {
        /// Deliberately breaks the block search (negative control).
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Emit the semi-analytic genie-bound curve over the configured grid.
    GenieBound,
    /// Sample the configured fading model and print its moments.
    FadingStats,
}

/// Entry point used by `main`; returns the process exit code.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    run(cli)
}

fn run(cli: Cli) -> i32 {
    let overrides = Overrides {
        seed: cli.seed,
        shards: cli.shards,
        lm: cli.lm,
    };
    match cli.command {
        Command::Sweep => command_sweep(cli.config.as_deref(), &cli.out, &overrides),
        Command::Validate { inject_fault } => command_validate(cli.quick, inject_fault),
        Command::GenieBound => {
            command_genie_bound(cli.config.as_deref(), &cli.out, &overrides, cli.quick)
        }
        Command::FadingStats => command_fading_stats(cli.config.as_deref(), &overrides, cli.quick),
    }
}

fn load_config(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig, i32> {
    let Some(path) = path else {
        eprintln!("error: --config <path> is required for this command");
        return Err(EXIT_CONFIG);
    };
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read config {}: {e}", path.display());
            return Err(EXIT_CONFIG);
        }
    };
    parse_config(&text, overrides).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_CONFIG
    })
}

fn log_path_for(out: &Path) -> PathBuf {
    out.with_extension("log")
}

fn command_sweep(config: Option<&Path>, out: &Path, overrides: &Overrides) -> i32 {
    let cfg = match load_config(config, overrides) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let sweep = cfg.sweep_config();
    if let Err(e) = sweep.validate() {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    // Stream results point by point so long sweeps are auditable while
    // they run and partial output survives an interruption.
    let log_path = log_path_for(out);
    let open = |path: &Path| -> std::io::Result<BufWriter<std::fs::File>> {
        Ok(BufWriter::new(std::fs::File::create(path)?))
    };
    let (mut csv_file, mut log_file) = match (open(out), open(&log_path)) {
        (Ok(c), Ok(l)) => (c, l),
        (Err(e), _) => {
            eprintln!("error: cannot write {}: {e}", out.display());
            return EXIT_RUNTIME;
        }
        (_, Err(e)) => {
            eprintln!("error: cannot write {}: {e}", log_path.display());
            return EXIT_RUNTIME;
        }
    };

    let emit = |csv_file: &mut BufWriter<std::fs::File>,
                log_file: &mut BufWriter<std::fs::File>,
                point: &pcfso_sim::BerPoint|
     -> std::io::Result<()> {
        writeln!(csv_file, "{}", ResultRow::from_point(point).to_csv_line())?;
        writeln!(
            log_file,
            "{}",
            run_log_record(point, sweep.run.seed, sweep.run.shards)
        )?;
        csv_file.flush()?;
        log_file.flush()
    };

    if let Err(e) = writeln!(csv_file, "{CSV_HEADER}").and_then(|()| csv_file.flush()) {
        eprintln!("error: cannot write {}: {e}", out.display());
        return EXIT_RUNTIME;
    }

    let grid_len = sweep.n_s_grid.len() as u64;
    let total = grid_len as usize * sweep.receivers.len();
    let mut done = 0usize;
    for (r_ix, receiver) in sweep.receivers.iter().enumerate() {
        for (g_ix, &n_s) in sweep.n_s_grid.iter().enumerate() {
            let params = match sweep.base.with_n_s(n_s) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_CONFIG;
                }
            };
            let point_index = r_ix as u64 * grid_len + g_ix as u64;
            let point = match pcfso_sim::run_ber_point(
                receiver,
                &sweep.model,
                &params,
                &sweep.stopping,
                &sweep.run,
                point_index,
            ) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: sweep failed: {e}");
                    return EXIT_RUNTIME;
                }
            };
            if let Err(e) = emit(&mut csv_file, &mut log_file, &point) {
                eprintln!("error: cannot write {}: {e}", out.display());
                return EXIT_RUNTIME;
            }
            done += 1;
            println!(
                "[{done}/{total}] {}{} n_s={} ber={:.5e} ({} bits, {} errors)",
                point.receiver,
                if point.param.is_empty() {
                    String::new()
                } else {
                    format!(":{}", point.param)
                },
                point.n_s,
                point.ber,
                point.bits,
                point.errors
            );
        }
    }
    println!(
        "wrote {done} points to {} (log: {})",
        out.display(),
        log_path.display()
    );
    EXIT_OK
}

fn command_validate(quick: bool, inject_fault: bool) -> i32 {
    let results = run_validation(quick, inject_fault);
    let mut all_pass = true;
    println!("{:<28} {:<6} details", "check", "result");
    for r in &results {
        println!(
            "{:<28} {:<6} {}",
            r.name,
            if r.pass { "PASS" } else { "FAIL" },
            r.details
        );
        all_pass &= r.pass;
    }
    if all_pass {
        EXIT_OK
    } else {
        let first = results.iter().find(|r| !r.pass).unwrap();
        eprintln!("validation failed: {}", first.name);
        EXIT_RUNTIME
    }
}

fn command_genie_bound(
    config: Option<&Path>,
    out: &Path,
    overrides: &Overrides,
    quick: bool,
) -> i32 {
    let cfg = match load_config(config, overrides) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if cfg.n_s_grid.is_empty() {
        eprintln!("error: config error: key `n_s`: a sweep grid is required for genie-bound");
        return EXIT_CONFIG;
    }
    let n_gain_samples = if quick { 100_000 } else { 1_000_000 };
    let mut rows = Vec::with_capacity(cfg.n_s_grid.len());
    for &n_s in &cfg.n_s_grid {
        let params = match cfg.base.with_n_s(n_s) {
            Ok(p) => p,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_CONFIG;
            }
        };
        let (bep, se) =
            genie_bep_semi_analytic_with_se(&cfg.model, &params, n_gain_samples, cfg.run.seed);
        rows.push(ResultRow {
            receiver: "genie-bound".into(),
            param: String::new(),
            n_s,
            n_b: cfg.base.n_b,
            snr_db: snr_db_of(n_s, cfg.base.n_b),
            bits: None,
            errors: None,
            ber: bep,
            ci95: Some(1.96 * se),
            mean_d: None,
            forced_merges: None,
        });
    }
    let csv = render_csv(&rows);
    if let Err(e) = std::fs::write(out, &csv) {
        eprintln!("error: cannot write {}: {e}", out.display());
        return EXIT_RUNTIME;
    }
    print!("{csv}");
    EXIT_OK
}

fn command_fading_stats(config: Option<&Path>, overrides: &Overrides, quick: bool) -> i32 {
    let cfg = match load_config(config, overrides) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let n = if quick { 100_000u64 } else { 1_000_000 };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.seed);
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for _ in 0..n {
        let h = cfg.model.sample(&mut rng);
        sum += h;
        sum2 += h * h;
        min = min.min(h);
        max = max.max(h);
    }
    let mean = sum / n as f64;
    let si = (sum2 / n as f64) / (mean * mean) - 1.0;
    println!("model: {:?}", cfg.model);
    println!("samples: {n}");
    println!("sample mean: {mean:.6}");
    println!("sample scintillation index: {si:.6}");
    println!(
        "analytic scintillation index: {:.6}",
        cfg.model.scintillation_index()
    );
    println!("min gain: {min:.6e}");
    println!("max gain: {max:.6e}");
    EXIT_OK
}
