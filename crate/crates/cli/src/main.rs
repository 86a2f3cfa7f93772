//! `enn`: gate checks, hot-dog sweeps, datasets and Islandia campaigns.

mod config;
mod manifest;

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use enn_core::datagen::{generate, DEFAULT_PERIODS};
use enn_core::gates::{and_gate_technology, and_gate_with_a, not_gate, verify_gates, GateReport, NandNetwork};
use enn_core::graph::{build_hotdog_model, default_grid, derivative_sign_changes, sweep};
use enn_core::islandia::{run_trial, MarketConfig, TrialOutcome};
use enn_core::stats::summarize;
use enn_core::EnnError;

use crate::config::parse_config;
use crate::manifest::RunManifest;

#[derive(Parser)]
#[command(name = "enn", version, about = "Economic neural network experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the AND and NAND producer networks and check their truth tables.
    Gates {
        /// Optional action word; `verify` is the only one.
        #[arg(value_parser = ["verify"])]
        action: Option<String>,
        #[arg(long)]
        json: bool,
        /// Override agent X's technology (negative control).
        #[arg(long)]
        and_a: Option<f64>,
    },
    /// Labor/leisure ratio of a hot-dog model over ln p in [-10, 10].
    Sweep {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        model: u8,
        #[arg(long, default_value_t = 2001)]
        points: usize,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One seeded import-quantity dataset.
    Datagen {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=6))]
        dataset: u8,
        #[arg(long, default_value_t = DEFAULT_PERIODS)]
        periods: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Islandia {
        #[command(subcommand)]
        cmd: IslandiaCmd,
    },
}

#[derive(Subcommand)]
enum IslandiaCmd {
    /// Independent training trials on one dataset.
    Train {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=6))]
        dataset: u8,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 600)]
        rounds: usize,
        #[arg(long, default_value_t = DEFAULT_PERIODS)]
        periods: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `key = value` market config file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Per-trial CSV; the aggregate goes to the same path with a `.json` extension.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (0 = rayon default).
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
}

enum Failure {
    Verification(String),
    Usage(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Verification(_) => 1,
            Self::Usage(_) => 2,
            Self::Numeric(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Verification(m) | Self::Usage(m) | Self::Numeric(m) => m,
        }
    }
}

impl From<EnnError> for Failure {
    fn from(e: EnnError) -> Self {
        let m = e.to_string();
        match e {
            EnnError::Calibration { .. } => Self::Verification(m),
            EnnError::Numeric { .. } | EnnError::RatioOverflow { .. } | EnnError::Training { .. } => Self::Numeric(m),
            _ => Self::Usage(m),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::Usage(format!("I/O: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Self::Usage(format!("CSV: {e}"))
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// `ENN_SEED` wins over `--seed`.
fn master_seed(flag: u64) -> std::result::Result<u64, Failure> {
    match std::env::var("ENN_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("ENN_SEED `{v}` is not an unsigned integer"))),
        Err(_) => Ok(flag),
    }
}

fn print_tables(r: &GateReport) {
    println!("agent X neuron: omega = ({}, {}), z = {}", r.omega[0], r.omega[1], r.z);
    println!(
        "thresholds: and wire {} (margin {}), nand wire {} (margin {})",
        r.thresholds.and_wire.threshold, r.thresholds.and_wire.margin, r.thresholds.out_wire.threshold, r.thresholds.out_wire.margin
    );
    println!("AND");
    println!("{:>6} {:>6} {:>22} {:>6} {:>6}", "lnp1", "lnp2", "lnp3", "out", "want");
    for row in &r.rows {
        println!(
            "{:>6} {:>6} {:>22.15} {:>6} {:>6}",
            row.lnp1, row.lnp2, row.lnp3, row.and_out as u8, row.and_expected as u8
        );
    }
    println!("NAND");
    println!(
        "{:>6} {:>6} {:>22} {:>6} {:>22} {:>8} {:>6} {:>6}",
        "lnp1", "lnp2", "lnp3", "lnp4", "L4", "product", "out", "want"
    );
    for row in &r.rows {
        println!(
            "{:>6} {:>6} {:>22.15} {:>6} {:>22.15} {:>8} {:>6} {:>6}",
            row.lnp1,
            row.lnp2,
            row.lnp3,
            row.lnp4,
            row.l4,
            format!("{:?}", row.produced),
            row.nand_out as u8,
            row.nand_expected as u8
        );
    }
    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
    println!("AND weights: {}", verdict(r.and_coeffs_ok));
    println!("AND table: {}", verdict(r.and_table_ok));
    println!("NAND table: {}", verdict(r.nand_table_ok));
}

fn cmd_gates(json: bool, and_a: Option<f64>) -> CmdResult {
    let a = and_a.unwrap_or_else(and_gate_technology::<f64>);
    if !(a > 0.0 && a.is_finite()) {
        return Err(Failure::Usage(format!("--and-a must be a positive number, got {a}")));
    }
    let mut net = NandNetwork::new(and_gate_with_a(a).0, not_gate(), 0.0);
    let report = verify_gates(&mut net)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        print_tables(&report);
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Verification("gate tables do not match".into()))
    }
}

fn cmd_sweep(model: u8, points: usize, out: Option<&Path>) -> CmdResult {
    let t0 = Instant::now();
    if points < 2 {
        return Err(Failure::Usage("--points must be at least 2".into()));
    }
    let econ = build_hotdog_model::<f64>(model as usize)?;
    let curve = sweep(&econ, &default_grid(points))?;
    let changes = derivative_sign_changes(&curve.ratio);
    let write = |w: Box<dyn Write>| -> CmdResult {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["ln_p", "ratio"])?;
        for (g, r) in curve.grid.iter().zip(&curve.ratio) {
            wr.write_record([g.to_string(), r.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    };
    match out {
        Some(p) => {
            write(Box::new(File::create(p)?))?;
            let cfg = vec![("model".into(), model.to_string()), ("points".into(), points.to_string())];
            RunManifest::new("sweep", cfg, None).write_beside(&[p], t0.elapsed())?;
            println!("model {model}: {points} points, {changes} derivative sign changes");
        }
        None => {
            write(Box::new(std::io::stdout()))?;
            eprintln!("model {model}: {points} points, {changes} derivative sign changes");
        }
    }
    Ok(())
}

fn cmd_datagen(dataset: u8, periods: usize, seed: u64, out: Option<&Path>) -> CmdResult {
    let t0 = Instant::now();
    let seed = master_seed(seed)?;
    let ds = generate(dataset, periods, seed)?;
    let write = |w: Box<dyn Write>| -> CmdResult {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["q_steel", "q_brass", "label"])?;
        for p in &ds.periods {
            wr.write_record([p.q_steel.to_string(), p.q_brass.to_string(), p.label.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    };
    match out {
        Some(p) => {
            write(Box::new(File::create(p)?))?;
            let cfg = vec![("dataset".into(), dataset.to_string()), ("periods".into(), periods.to_string())];
            RunManifest::new("datagen", cfg, Some(seed)).write_beside(&[p], t0.elapsed())?;
        }
        None => write(Box::new(std::io::stdout()))?,
    }
    Ok(())
}

#[derive(Serialize)]
struct Aggregate {
    dataset: u8,
    trials: usize,
    rounds: usize,
    periods: usize,
    master_seed: u64,
    mean_initial_accuracy: f64,
    mean_final_accuracy: f64,
    mean_improvement: f64,
    std_error: Option<f64>,
    t: Option<f64>,
    df: usize,
    p_value: Option<f64>,
    stars: String,
}

struct TrainArgs {
    dataset: u8,
    trials: usize,
    rounds: usize,
    periods: usize,
    seed: u64,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    threads: usize,
}

fn run_campaign(a: &TrainArgs, seed: u64, cfg: &MarketConfig) -> std::result::Result<Vec<TrialOutcome>, Failure> {
    let go = || {
        (0..a.trials)
            .into_par_iter()
            .map(|i| {
                run_trial(a.dataset, i, seed, a.periods, a.rounds, cfg).map_err(|e| {
                    let f = Failure::from(e);
                    let m = format!("trial {i}: {}", f.message());
                    match f {
                        Failure::Numeric(_) => Failure::Numeric(m),
                        Failure::Verification(_) => Failure::Verification(m),
                        Failure::Usage(_) => Failure::Usage(m),
                    }
                })
            })
            .collect::<std::result::Result<Vec<_>, _>>()
    };
    if a.threads == 0 {
        go()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(a.threads)
            .build()
            .map_err(|e| Failure::Usage(e.to_string()))?
            .install(go)
    }
}

fn cmd_islandia_train(a: TrainArgs) -> CmdResult {
    let t0 = Instant::now();
    if a.trials == 0 {
        return Err(Failure::Usage("--trials must be at least 1".into()));
    }
    if a.periods == 0 {
        return Err(Failure::Usage("--periods must be at least 1".into()));
    }
    let seed = master_seed(a.seed)?;
    let cfg = match &a.config {
        Some(p) => parse_config(&std::fs::read_to_string(p)?)?,
        None => MarketConfig::default(),
    };
    let outcomes = run_campaign(&a, seed, &cfg)?;
    let initials: Vec<f64> = outcomes.iter().map(|o| o.initial_accuracy).collect();
    let finals: Vec<f64> = outcomes.iter().map(|o| o.final_accuracy).collect();
    let rep = summarize(&initials, &finals)?;
    let n = outcomes.len() as f64;
    let agg = Aggregate {
        dataset: a.dataset,
        trials: a.trials,
        rounds: a.rounds,
        periods: a.periods,
        master_seed: seed,
        mean_initial_accuracy: initials.iter().sum::<f64>() / n,
        mean_final_accuracy: finals.iter().sum::<f64>() / n,
        mean_improvement: rep.mean,
        std_error: rep.std_error,
        t: rep.t,
        df: rep.df,
        p_value: rep.p_value,
        stars: rep.stars.clone(),
    };
    let csv_path = a
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("islandia_ds{}.csv", a.dataset)));
    let json_path = csv_path.with_extension("json");
    let mut wr = csv::Writer::from_path(&csv_path)?;
    wr.write_record(["trial", "initial_accuracy", "final_accuracy", "improvement"])?;
    for o in &outcomes {
        wr.write_record([
            o.trial.to_string(),
            o.initial_accuracy.to_string(),
            o.final_accuracy.to_string(),
            o.improvement().to_string(),
        ])?;
    }
    wr.flush()?;
    std::fs::write(&json_path, serde_json::to_string_pretty(&agg).expect("aggregate serializes") + "\n")?;
    let mut snapshot: Vec<(String, String)> = vec![
        ("dataset".into(), a.dataset.to_string()),
        ("trials".into(), a.trials.to_string()),
        ("rounds".into(), a.rounds.to_string()),
        ("periods".into(), a.periods.to_string()),
    ];
    snapshot.extend(cfg.entries().into_iter().map(|(k, v)| (k.to_string(), v)));
    RunManifest::new("islandia train", snapshot, Some(seed)).write_beside(&[&csv_path, &json_path], t0.elapsed())?;
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "n/a".into());
    println!(
        "dataset {}: initial {:.4} final {:.4} improvement {:+.4} se {} t {} p {} {}",
        a.dataset,
        agg.mean_initial_accuracy,
        agg.mean_final_accuracy,
        agg.mean_improvement,
        fmt(agg.std_error),
        fmt(agg.t),
        fmt(agg.p_value),
        agg.stars
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Gates { action: _, json, and_a } => cmd_gates(json, and_a),
        Cmd::Sweep { model, points, out } => cmd_sweep(model, points, out.as_deref()),
        Cmd::Datagen {
            dataset,
            periods,
            seed,
            out,
        } => cmd_datagen(dataset, periods, seed, out.as_deref()),
        Cmd::Islandia {
            cmd:
                IslandiaCmd::Train {
                    dataset,
                    trials,
                    rounds,
                    periods,
                    seed,
                    config,
                    out,
                    threads,
                },
        } => cmd_islandia_train(TrainArgs {
            dataset,
            trials,
            rounds,
            periods,
            seed,
            config,
            out,
            threads,
        }),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
