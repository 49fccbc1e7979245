//! `pingpong`: verify, search and inspect ping-pong certificates for
//! symplectic hypergeometric groups.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use pingpong_core::algebra::params_to_factorization;
use pingpong_core::certstore::{
    load_certificate, lookup, parse_fraction, save_certificate, verify_dir, BatchReport, CaseInfo,
};
use pingpong_core::group::{build_group_data, HypergeometricCase};
use pingpong_core::search::{search, PowerRange, SearchConfig, SearchOutcome};
use pingpong_core::verify::{verify, Condition, Verdict, VerificationReport};

const EXIT_PASS: u8 = 0;
const EXIT_FAIL: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_DISJOINTNESS: u8 = 3;
const EXIT_EXHAUSTED: u8 = 4;

#[derive(Parser)]
#[command(
    name = "pingpong",
    version,
    about = "Exact ping-pong certificates for symplectic hypergeometric groups",
    after_help = "EXIT CODES:\n\
                  \n  0  all inputs pass / certificate found\
                  \n  1  verification failure\
                  \n  2  input error\
                  \n  3  search stopped on a disjointness violation\
                  \n  4  search exhausted or timed out\
                  \n\nEXAMPLES:\n\
                  \n  pingpong verify crates/core/fixtures/certs/A-37.json\
                  \n  pingpong batch crates/core/fixtures/certs --jobs 4 --json\
                  \n  pingpong search --case A-37 --seed 1 -o a37.json\
                  \n  pingpong info --case C-55"
)]
struct Cli {
    /// Machine-readable JSON output
    #[arg(long, global = true)]
    json: bool,
    /// Time limit in seconds for a search
    #[arg(long, global = true, value_name = "SECONDS")]
    timeout: Option<f64>,
    /// Worker threads for batch verification (default: all cores)
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify certificate files
    Verify {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Search for a certificate by cone expansion from the transvection ray
    Search(SearchArgs),
    /// Show the group data and classification of a case
    Info {
        #[command(flatten)]
        case: CaseArgs,
    },
    /// Verify every certificate in a directory
    Batch { dir: PathBuf },
}

#[derive(Args)]
struct CaseArgs {
    /// Case label from the registry, e.g. A-37, C-55 or 39
    #[arg(long, conflicts_with_all = ["alpha", "beta"])]
    case: Option<String>,
    /// Comma-separated parameters of f, e.g. 0,0,0,0,0,0
    #[arg(long, requires = "beta", allow_hyphen_values = true)]
    alpha: Option<String>,
    /// Comma-separated parameters of g
    #[arg(long, requires = "alpha", allow_hyphen_values = true)]
    beta: Option<String>,
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    case: CaseArgs,
    /// Random seed for the enlargement vectors
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Start from t0 alone: no weighted, flag or random seeds, no outward slack
    #[arg(long)]
    min_seed: bool,
    /// Expansion rounds before giving up [default: 40]
    #[arg(long, value_name = "N")]
    max_rounds: Option<usize>,
    /// Number of random vectors near t0 added to the seeds
    #[arg(long, value_name = "N")]
    random_count: Option<usize>,
    /// Relative outward push of new rays, as a fraction such as 1/100
    #[arg(long, value_name = "FRACTION")]
    slack: Option<String>,
    /// Force both image families for every power 0..=eta (finite order only)
    #[arg(long)]
    all_powers: bool,
    /// Skip the greedy simplification of a found certificate
    #[arg(long)]
    no_simplify: bool,
    /// Where to write a found certificate (default: <LABEL>.found.json)
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Failure that maps to a specific exit code rather than a crash.
#[derive(Debug)]
struct InputError(anyhow::Error);

fn input<T>(r: Result<T>) -> std::result::Result<T, InputError> {
    r.map_err(InputError)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Verify { paths } => cmd_verify(&cli, paths),
        Command::Search(args) => cmd_search(&cli, args),
        Command::Info { case } => cmd_info(&cli, case),
        Command::Batch { dir } => cmd_batch(&cli, dir),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(InputError(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn parse_params(text: &str) -> Result<Vec<pingpong_core::algebra::Rat>> {
    text.split(',')
        .map(|s| parse_fraction(s.trim()).with_context(|| format!("bad parameter {s:?}")))
        .collect()
}

/// The case and, when it comes from the registry, its metadata.
fn resolve_case(args: &CaseArgs) -> Result<(HypergeometricCase, Option<&'static CaseInfo>)> {
    if let Some(label) = &args.case {
        let info = lookup(label)?;
        return Ok((info.case()?, Some(info)));
    }
    let (Some(alpha), Some(beta)) = (&args.alpha, &args.beta) else {
        bail!("give either --case LABEL or both --alpha and --beta");
    };
    let alpha = params_to_factorization(&parse_params(alpha)?)?;
    let beta = params_to_factorization(&parse_params(beta)?)?;
    let case = HypergeometricCase::new("custom", alpha, beta)?;
    let known = pingpong_core::certstore::registry().iter().find(|info| {
        info.case()
            .is_ok_and(|c| c.alpha == case.alpha && c.beta == case.beta)
    });
    match known {
        Some(info) => Ok((info.case()?, Some(info))),
        None => Ok((case, None)),
    }
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "FAIL",
        Verdict::NotApplicable => "n/a",
        Verdict::Skipped => "skipped",
    }
}

fn print_report(report: &VerificationReport) {
    println!(
        "{}: {} ({} order regime, {:.2}s)",
        report.case_label,
        if report.overall { "PASS" } else { "FAIL" },
        report.regime,
        report.elapsed.as_secs_f64()
    );
    for (cond, verdict) in &report.conditions {
        println!(
            "  ({:<2}) {:<7} {}",
            cond.id(),
            verdict_str(*verdict),
            cond.description()
        );
    }
    if let Some((i, j)) = report.overlap_witness {
        println!("  overlap: cone {i} of X meets cone {j} of Y");
    }
    if let Some(s) = &report.structure {
        println!(
            "  G = {}  ({}, {}, amalgamated over {})",
            s.iso_type, s.g1, s.g2, s.h
        );
    }
}

fn cmd_verify(cli: &Cli, paths: &[PathBuf]) -> std::result::Result<u8, InputError> {
    let mut reports = Vec::new();
    for path in paths {
        let cert = input(load_certificate(path).with_context(|| path.display().to_string()))?;
        let gd = input(build_group_data(&cert.case).map_err(Into::into))?;
        let report = input(verify(&gd, &cert).with_context(|| path.display().to_string()))?;
        reports.push(report);
    }
    if cli.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&reports).expect("report serializes")
        );
    } else {
        reports.iter().for_each(print_report);
    }
    Ok(if reports.iter().all(|r| r.overall) {
        EXIT_PASS
    } else {
        EXIT_FAIL
    })
}

fn search_config(cli: &Cli, args: &SearchArgs) -> Result<SearchConfig> {
    let mut cfg = if args.min_seed {
        SearchConfig::minimal()
    } else {
        SearchConfig::default()
    };
    cfg.random_seed = args.seed;
    if let Some(r) = args.max_rounds {
        cfg.max_expansion_rounds = r;
    }
    if let Some(k) = args.random_count {
        cfg.random_enlarge_count = k;
    }
    if let Some(s) = &args.slack {
        cfg.slack = parse_fraction(s)?;
        if cfg.slack < pingpong_core::algebra::Rat::from_integer(0.into()) {
            bail!("slack must be non-negative");
        }
    }
    if args.all_powers {
        cfg.power_range = PowerRange::All;
    }
    if args.no_simplify {
        cfg.simplify = false;
    }
    if let Some(t) = cli.timeout {
        if !(t > 0.0 && t.is_finite()) {
            bail!("--timeout must be a positive number of seconds");
        }
        cfg.timeout = Some(Duration::from_secs_f64(t));
    }
    Ok(cfg)
}

fn rays_json(rays: &[Vec<num_bigint::BigInt>]) -> serde_json::Value {
    rays.iter()
        .map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>())
        .collect()
}

fn cmd_search(cli: &Cli, args: &SearchArgs) -> std::result::Result<u8, InputError> {
    let (case, _) = input(resolve_case(&args.case))?;
    let cfg = input(search_config(cli, args))?;
    let gd = input(build_group_data(&case).map_err(Into::into))?;
    let outcome = input(search(&gd, &cfg).context("search failed"))?;

    match outcome {
        SearchOutcome::FoundCertificate {
            certificate,
            report,
            round,
        } => {
            let path = args
                .output
                .clone()
                .unwrap_or_else(|| PathBuf::from(format!("{}.found.json", case.label)));
            input(
                save_certificate(&path, &certificate).with_context(|| path.display().to_string()),
            )?;
            if cli.json {
                let v = json!({
                    "outcome": "found",
                    "round": round,
                    "certificate": path,
                    "c_rays": certificate.c_rays.len(),
                    "d_rays": certificate.d_rays.as_ref().map(Vec::len),
                    "report": report,
                });
                println!("{}", serde_json::to_string_pretty(&v).expect("serializes"));
            } else {
                println!(
                    "found after {round} rounds: {} rays for C{}; written to {}",
                    certificate.c_rays.len(),
                    certificate
                        .d_rays
                        .as_ref()
                        .map(|d| format!(", {} for D", d.len()))
                        .unwrap_or_default(),
                    path.display()
                );
                print_report(&report);
            }
            Ok(EXIT_PASS)
        }
        SearchOutcome::DisjointnessViolated { round, witness } => {
            if cli.json {
                let v = json!({
                    "outcome": "disjointness-violated",
                    "round": round,
                    "witness": {
                        "x_cone": rays_json(witness.0.rays()),
                        "y_cone": rays_json(witness.1.rays()),
                    },
                });
                println!("{}", serde_json::to_string_pretty(&v).expect("serializes"));
            } else {
                println!("disjointness violated at round {round}");
                println!("  cone of X with {} rays:", witness.0.rays().len());
                for r in witness.0.rays() {
                    println!("    {}", join(r));
                }
                println!("  cone of Y with {} rays:", witness.1.rays().len());
                for r in witness.1.rays() {
                    println!("    {}", join(r));
                }
            }
            Ok(EXIT_DISJOINTNESS)
        }
        other => {
            let round = match &other {
                SearchOutcome::Exhausted { round } | SearchOutcome::TimedOut { round } => {
                    Some(*round)
                }
                _ => None,
            };
            if cli.json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(
                        &json!({ "outcome": other.kind(), "round": round })
                    )
                    .expect("serializes")
                );
            } else {
                match round {
                    Some(r) => println!("{} after {r} rounds", other.kind()),
                    None => println!("{}", other.kind()),
                }
            }
            Ok(EXIT_EXHAUSTED)
        }
    }
}

fn join(v: &[num_bigint::BigInt]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn matrix_json(m: &pingpong_core::algebra::IntMatrix) -> serde_json::Value {
    m.row_vecs()
        .iter()
        .map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>())
        .collect()
}

fn print_matrix(name: &str, rows: Vec<Vec<String>>) {
    let width = rows.iter().flatten().map(String::len).max().unwrap_or(1);
    println!("{name} =");
    for row in rows {
        let cells: Vec<String> = row.iter().map(|c| format!("{c:>width$}")).collect();
        println!("  [{}]", cells.join(" "));
    }
}

fn cmd_info(cli: &Cli, args: &CaseArgs) -> std::result::Result<u8, InputError> {
    let (case, meta) = input(resolve_case(args))?;
    let gd = input(build_group_data(&case).map_err(Into::into))?;
    let params =
        |p: &[pingpong_core::algebra::Rat]| p.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let omega: Vec<Vec<String>> = gd.omega.row_vecs().iter().map(|r| params(r)).collect();
    let int_rows = |m: &pingpong_core::algebra::IntMatrix| -> Vec<Vec<String>> {
        m.row_vecs()
            .iter()
            .map(|r| r.iter().map(|x| x.to_string()).collect())
            .collect()
    };

    if cli.json {
        let v = json!({
            "label": case.label,
            "n": gd.n,
            "alpha": params(&case.alpha.params()),
            "beta": params(&case.beta.params()),
            "f": case.alpha.to_string(),
            "g": case.beta.to_string(),
            "f_coeffs": case.f().coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "g_coeffs": case.g().coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "A": matrix_json(&gd.a),
            "B": matrix_json(&gd.b),
            "T": matrix_json(&gd.t),
            "E": matrix_json(&gd.e),
            "Omega": omega,
            "eta": gd.eta,
            "lambda": gd.lambda,
            "order_b": gd.order_b.to_string(),
            "minus_identity_in_b": gd.minus_i_in_b,
            "t0": gd.transvection_ray().iter().map(|x| x.to_string()).collect::<Vec<_>>(),
            "registry": meta,
        });
        println!("{}", serde_json::to_string_pretty(&v).expect("serializes"));
        return Ok(EXIT_PASS);
    }

    println!("case {}  (n = {})", case.label, gd.n);
    println!("alpha = ({})", params(&case.alpha.params()).join(", "));
    println!("beta  = ({})", params(&case.beta.params()).join(", "));
    println!("f = {} = {}", case.alpha, case.f());
    println!("g = {} = {}", case.beta, case.g());
    print_matrix("A", int_rows(&gd.a));
    print_matrix("B", int_rows(&gd.b));
    print_matrix("T", int_rows(&gd.t));
    print_matrix("E", int_rows(&gd.e));
    print_matrix("Omega", omega);
    println!("t0 = ({})", join(&gd.transvection_ray()));
    println!("lambda={}", gd.lambda);
    match gd.order_b {
        pingpong_core::group::Order::Finite(m) => println!("eta={}, order(B)={m}", gd.eta),
        pingpong_core::group::Order::Infinite => println!("eta={}, B infinite order", gd.eta),
    }
    println!("-I in <B>: {}", if gd.minus_i_in_b { "yes" } else { "no" });
    match meta {
        Some(info) => {
            println!(
                "classification: {} ({}, table {}{})",
                info.nature,
                info.group,
                info.table,
                info.attribution
                    .as_ref()
                    .map(|a| format!(", {a}"))
                    .unwrap_or_default()
            );
            if let Some(c) = &info.certificate {
                println!("bundled certificate: {c}");
            }
        }
        None => println!("classification: not in the registry"),
    }
    Ok(EXIT_PASS)
}

fn print_batch(report: &BatchReport) {
    for entry in &report.per_case {
        let name = entry.label.clone().unwrap_or_else(|| entry.file.clone());
        match (&entry.report, &entry.error) {
            (Some(r), _) => println!(
                "{:<8} {}  {:>7.2}s  {}",
                name,
                if r.overall { "pass" } else { "FAIL" },
                r.elapsed.as_secs_f64(),
                r.structure
                    .as_ref()
                    .map(|s| s.iso_type.clone())
                    .unwrap_or_else(|| failed_conditions(r))
            ),
            (None, Some(e)) => println!("{name:<8} ERROR  {e}"),
            (None, None) => println!("{name:<8} ERROR"),
        }
    }
    let t = &report.totals;
    println!(
        "{} passed, {} failed, {} errors in {:.1}s",
        t.pass,
        t.fail,
        t.error,
        report.wall_clock.as_secs_f64()
    );
}

fn failed_conditions(r: &VerificationReport) -> String {
    let failed: Vec<String> = r
        .conditions
        .iter()
        .filter(|(_, v)| **v == Verdict::Fail)
        .map(|(c, _): (&Condition, _)| format!("({})", c.id()))
        .collect();
    format!("failed {}", failed.join(" "))
}

fn cmd_batch(cli: &Cli, dir: &Path) -> std::result::Result<u8, InputError> {
    if !dir.is_dir() {
        return Err(InputError(anyhow::anyhow!(
            "{} is not a readable directory",
            dir.display()
        )));
    }
    let jobs = cli
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return Err(InputError(anyhow::anyhow!("--jobs must be at least 1")));
    }
    let report = input(verify_dir(dir, jobs).with_context(|| dir.display().to_string()))?;
    if cli.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report serializes")
        );
    } else {
        print_batch(&report);
    }
    Ok(if report.all_passed() {
        EXIT_PASS
    } else {
        EXIT_FAIL
    })
}
