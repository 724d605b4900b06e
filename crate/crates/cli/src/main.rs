//! `heatcalc`: canonical entropy derivatives, sign certificates and numeric
//! scans along the heat flow.
//!
//! Exit status is 0 when every asserted check passes, 2 when one fails and 1
//! on usage or IO errors.

mod config;
mod svg;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use heatcalc_core::entropy_derivative;
use heatcalc_core::gauss_oracle::{scan_conjectures, wt_checks, ScanResult, WtReport};
use heatcalc_core::ibp_reduce::verify_lemma_identities;
use heatcalc_core::sos_certify::{
    known_certificate, search_certificate, verify_certificate, Certificate, SearchConfig,
};
use log::info;

use config::{ExperimentConfig, Spacing};

const OK: u8 = 0;
const USAGE: u8 = 1;
const CHECK_FAILED: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "heatcalc",
    version,
    about = "Entropy derivatives along the Gaussian heat flow"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the canonical integrand of 2 d^n h/dt^n.
    Derive {
        #[arg(long)]
        order: u32,
        /// One `<coeff> <monomial>` term per line instead of a single sum.
        #[arg(long)]
        lines: bool,
    },
    /// Reduce both sides of the thirteen weight-6 and weight-8 identities.
    VerifyIdentities,
    /// Verify a sign certificate exactly.
    Certify {
        #[arg(long)]
        order: u32,
        /// Look for a certificate numerically instead of using the built-in one.
        #[arg(long, conflicts_with = "cert")]
        search: bool,
        /// Certificate JSON to verify.
        #[arg(long)]
        cert: Option<PathBuf>,
        /// Write the certificate that was checked as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        starts: usize,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
    },
    /// Derivative signs and convexity checks over a time grid.
    Scan {
        #[arg(long)]
        config: PathBuf,
        /// Also write line plots next to the CSV.
        #[arg(long)]
        svg: bool,
    },
    /// Concavity and inequality checks along sqrt(t) X + sqrt(1 - t) Z.
    WtScan {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, thiserror::Error)]
enum RunError {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Oracle(#[from] heatcalc_core::gauss_oracle::OracleError),
    #[error(transparent)]
    Sos(#[from] heatcalc_core::sos_certify::SosError),
    #[error(transparent)]
    Reduce(#[from] heatcalc_core::ReduceError),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    ExitCode::from(run(std::env::args_os()))
}

fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { USAGE } else { OK };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return USAGE;
    }
    let mut stdout = String::new();
    let status = dispatch(cli.command, &mut stdout);
    print!("{stdout}");
    match status {
        Ok(passed) => {
            if passed {
                OK
            } else {
                CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            USAGE
        }
    }
}

fn configure_threads() -> Result<(), RunError> {
    let Ok(raw) = std::env::var("HEATCALC_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        RunError::Usage(format!(
            "HEATCALC_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    // a second call in the same process (tests) keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

/// Writes the report into `out`; `Ok(false)` means a check failed.
fn dispatch(cmd: Command, out: &mut String) -> Result<bool, RunError> {
    match cmd {
        Command::Derive { order, lines } => {
            let c = entropy_derivative(order)?;
            if lines {
                out.push_str(&c.to_text());
            } else {
                writeln!(out, "{c}").unwrap();
            }
            Ok(true)
        }
        Command::VerifyIdentities => verify_identities(out),
        Command::Certify {
            order,
            search,
            cert,
            out: dest,
            starts,
            seed,
        } => certify(
            order,
            search,
            cert.as_deref(),
            dest.as_deref(),
            starts,
            seed,
            out,
        ),
        Command::Scan { config, svg } => scan(&config, svg, out),
        Command::WtScan { config } => wt_scan(&config, out),
    }
}

fn verify_identities(out: &mut String) -> Result<bool, RunError> {
    let checks = verify_lemma_identities()?;
    writeln!(out, "{:<6} {:<18} {:<6} residual", "id", "lhs", "result").unwrap();
    for c in &checks {
        writeln!(
            out,
            "{:<6} {:<18} {:<6} {}",
            c.label,
            c.lhs.to_string(),
            if c.passed() { "PASS" } else { "FAIL" },
            c.residual
        )
        .unwrap();
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    writeln!(
        out,
        "{} of {} identities verified",
        checks.len() - failed,
        checks.len()
    )
    .unwrap();
    Ok(failed == 0)
}

fn certify(
    order: u32,
    search: bool,
    cert_path: Option<&Path>,
    dest: Option<&Path>,
    starts: usize,
    seed: u64,
    out: &mut String,
) -> Result<bool, RunError> {
    let cert = if let Some(path) = cert_path {
        let cert = Certificate::from_json(&read(path)?)?;
        if cert.order != order {
            return Err(RunError::Usage(format!(
                "{}: certificate is for order {}, not {order}",
                path.display(),
                cert.order
            )));
        }
        cert
    } else if search {
        let cfg = SearchConfig {
            starts,
            seed,
            ..SearchConfig::default()
        };
        let outcome = search_certificate(order, &cfg)?;
        info!("search ran {} starts", outcome.starts_run);
        match outcome.certificate {
            Some(cert) => {
                writeln!(
                    out,
                    "found by start {} of {}",
                    outcome.certified_start.unwrap_or_default(),
                    outcome.starts_run
                )
                .unwrap();
                cert
            }
            None => {
                writeln!(out, "NO CERTIFICATE after {} starts", outcome.starts_run).unwrap();
                if let Some(best) = &outcome.best {
                    writeln!(
                        out,
                        "best residual norm {:.6e} (start {})",
                        best.residual_norm, best.start
                    )
                    .unwrap();
                    for (j, row) in best.squares.iter().enumerate() {
                        let row: Vec<String> = row.iter().map(|v| format!("{v:.6e}")).collect();
                        writeln!(out, "square {j}: [{}]", row.join(", ")).unwrap();
                    }
                    let rem: Vec<String> =
                        best.remainder.iter().map(|v| format!("{v:.6e}")).collect();
                    writeln!(out, "remainder weights: [{}]", rem.join(", ")).unwrap();
                }
                // orders without a built-in certificate are exploratory
                return Ok(order > 4);
            }
        }
    } else {
        known_certificate(order).ok_or_else(|| {
            RunError::Usage(format!(
                "no built-in certificate for order {order}; use --search or --cert"
            ))
        })?
    };
    let check = verify_certificate(&cert);
    if let Some(path) = dest {
        write(path, &cert.to_json())?;
    }
    match check {
        Ok(v) if v.verified => {
            writeln!(out, "{cert}").unwrap();
            writeln!(out, "VERIFIED (exact)").unwrap();
            Ok(true)
        }
        Ok(v) => {
            writeln!(out, "NOT VERIFIED: residual {}", v.residual).unwrap();
            Ok(false)
        }
        Err(e) => {
            writeln!(out, "NOT VERIFIED: {e}").unwrap();
            Ok(false)
        }
    }
}

fn scan(path: &Path, want_svg: bool, out: &mut String) -> Result<bool, RunError> {
    let cfg = ExperimentConfig::load(path)?;
    let mix = cfg.build_mixture()?;
    let grid = cfg.t_grid.points();
    let result = scan_conjectures(&mix, &grid, cfg.max_order, &cfg.tolerances)?;
    emit(&cfg, "", &result.to_csv(), out)?;
    if want_svg {
        write_plots(&cfg, &result)?;
    }
    let s = result.summary(&cfg.tolerances);
    for (n, (pass, fail, open)) in s.fd_signs.iter().enumerate() {
        let asserted = if n < 4 { "" } else { " (report only)" };
        eprintln!(
            "d{} sign: {pass} pass, {fail} fail, {open} inconclusive{asserted}",
            n + 1
        );
    }
    eprintln!(
        "costa failures {}, e^2h concavity failures {}, log J convexity failures {} (report only)",
        s.costa_failures, s.e2h_failures, s.log_j_failures
    );
    eprintln!(
        "1/J second differences: {} positive, {} negative",
        s.inv_j_positive, s.inv_j_negative
    );
    Ok(result.asserted_ok())
}

fn wt_scan(path: &Path, out: &mut String) -> Result<bool, RunError> {
    let cfg = ExperimentConfig::load(path)?;
    cfg.check_unit_interval(path)?;
    let mix = cfg.build_mixture()?;
    let report: WtReport = wt_checks(&mix, &cfg.t_grid.points(), &cfg.tolerances)?;
    emit(&cfg, "_wt", &report.to_csv(), out)?;
    let (pos, neg) = report.fisher_dd_signs(cfg.tolerances.sign_factor);
    eprintln!(
        "h(W_t) concave: {}; inequality holds: {}; J(W_t) second differences: {pos} positive, {neg} negative",
        report.entropy_concave(),
        report.txz_holds()
    );
    Ok(report.asserted_ok())
}

/// CSV to `<output><suffix>.csv` when an output prefix is configured, else stdout.
fn emit(cfg: &ExperimentConfig, suffix: &str, csv: &str, out: &mut String) -> Result<(), RunError> {
    match &cfg.output {
        Some(prefix) => write(&with_suffix(prefix, &format!("{suffix}.csv")), csv),
        None => {
            out.push_str(csv);
            Ok(())
        }
    }
}

fn write_plots(cfg: &ExperimentConfig, result: &ScanResult) -> Result<(), RunError> {
    let prefix = cfg.output.clone().unwrap_or_else(|| PathBuf::from("scan"));
    let log_x = cfg.t_grid.spacing == Spacing::Log;
    let ts: Vec<f64> = result.rows.iter().map(|r| r.t).collect();
    let series: [(&str, &str, fn(&heatcalc_core::gauss_oracle::ScanRow) -> f64); 7] = [
        ("h", "h(Y_t)", |r| r.entropy.value),
        ("J", "J(Y_t)", |r| r.fisher.value),
        ("invJ", "1/J(Y_t)", |r| 1.0 / r.fisher.value),
        ("logJ", "log J(Y_t)", |r| r.fisher.value.ln()),
        ("logJ_dd", "second difference of log J", |r| {
            r.log_j_dd.value
        }),
        ("invJ_dd", "second difference of 1/J", |r| r.inv_j_dd.value),
        ("e2h_dd", "second difference of exp(2h)", |r| r.e2h_dd.value),
    ];
    for (name, title, f) in series {
        let ys: Vec<f64> = result.rows.iter().map(f).collect();
        write(
            &with_suffix(&prefix, &format!("_{name}.svg")),
            &svg::line_chart(title, &ts, &ys, log_x),
        )?;
    }
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn read(path: &Path) -> Result<String, RunError> {
    std::fs::read_to_string(path).map_err(|source| RunError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), RunError> {
    std::fs::write(path, text).map_err(|source| RunError::Io {
        path: path.to_owned(),
        source,
    })
}
