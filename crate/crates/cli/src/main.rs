use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use bsec_core::adversaries::FamilySpec;
use bsec_core::harness::config::context_for;
use bsec_core::harness::registry::default_feasibility;
use bsec_core::harness::report::{csv_string, markdown, read_csv, ReportRow};
use bsec_core::harness::{load_instance_file, run_experiment, ExperimentConfig, LoadedInput, PayoffKind};
use bsec_core::model::compute_benchmark;
use bsec_core::BsecError;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

#[derive(Parser)]
#[command(name = "bsec", version, about = "Secretary experiments with adversarially timed elements")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Md,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an instance family and write it as JSON.
    Gen {
        #[arg(long)]
        family: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Family parameter, repeatable: --param key=value
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a policy on an instance and write a CSV row.
    Run {
        #[arg(long, conflicts_with = "config")]
        instance: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        algo: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// ordinal_success, value_ratio or max_success
        #[arg(long)]
        payoff: Option<String>,
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        #[arg(long)]
        discretize: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also print the full report as JSON on stderr.
        #[arg(long)]
        verbose: bool,
    },
    /// Print the benchmark V* of an instance.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        /// Constraint: single, uniform:R, knapsack:K or partition
        #[arg(long, default_value = "single")]
        constraint: String,
    },
    /// Re-emit result CSVs as markdown or CSV.
    Report {
        #[arg(long = "in", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Md)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_params(raw: &[String]) -> anyhow::Result<Map<String, Value>> {
    let mut m = Map::new();
    for kv in raw {
        let (k, v) = kv.split_once('=').with_context(|| format!("expected key=value, got {kv}"))?;
        let val = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
        m.insert(k.to_string(), val);
    }
    Ok(m)
}

fn emit(out: &Option<PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => {
            let mut f = File::create(p).with_context(|| format!("cannot write {}", p.display()))?;
            f.write_all(text.as_bytes())?;
        }
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn oracle_algo(constraint: &str) -> anyhow::Result<(String, Map<String, Value>)> {
    let mut params = Map::new();
    let algo = if constraint == "single" {
        "random".to_string()
    } else if let Some(r) = constraint.strip_prefix("uniform:") {
        params.insert("r".into(), json!(r.parse::<usize>()?));
        "uniform_constant".to_string()
    } else if let Some(k) = constraint.strip_prefix("knapsack:") {
        params.insert("K".into(), json!(k.parse::<f64>()?));
        "knapsack_core".to_string()
    } else if constraint == "knapsack" {
        "knapsack_core".to_string()
    } else if constraint == "partition" {
        "partition".to_string()
    } else {
        anyhow::bail!(BsecError::Config(format!("unknown constraint {constraint}")));
    };
    Ok((algo, params))
}

fn oracle(instance: &Path, constraint: &str) -> anyhow::Result<()> {
    let input = load_instance_file(instance)?;
    let (algo, params) = oracle_algo(constraint)?;
    let ctx = context_for(&input, &params, false);
    let feas = default_feasibility(&algo, &ctx)?;
    let states: Vec<(f64, bsec_core::model::PureInstance)> = match &input {
        LoadedInput::Pure { inst, .. } => vec![(1.0, inst.clone())],
        LoadedInput::Mixed(m) => m.states().to_vec(),
        LoadedInput::TwoBlue(_) => anyhow::bail!(BsecError::Config("two-blue files have V* = smaller blue".into())),
    };
    let mut rows = Vec::new();
    for (w, s) in &states {
        let b = compute_benchmark(s, &feas).map_err(|e| BsecError::Oracle(e.to_string()))?;
        let ids: Vec<&str> = b.set.iter().map(|&i| s.element(i).id.as_str()).collect();
        rows.push(json!({"weight": w, "value": b.value, "exact": b.exact, "set": ids}));
    }
    emit(&None, &(serde_json::to_string_pretty(&json!({"constraint": constraint, "states": rows}))? + "\n"))
}

fn run(cmd: Cmd) -> anyhow::Result<()> {
    match cmd {
        Cmd::Gen { family, n, seed, params, out } => {
            let spec = FamilySpec { family, n, params: parse_params(&params)?, seed };
            let input = LoadedInput::from_generated(spec.generate()?);
            emit(&out, &(serde_json::to_string_pretty(&input.to_json())? + "\n"))
        }
        Cmd::Run { instance, config, algo, trials, seed, payoff, params, discretize, out, verbose } => {
            let mut cfg = match config {
                Some(p) => ExperimentConfig::from_file(&p)?,
                None => ExperimentConfig {
                    instance,
                    family: None,
                    algo: algo.clone().ok_or_else(|| BsecError::Config("--algo is required without --config".into()))?,
                    params: Map::new(),
                    trials: trials.unwrap_or(10_000),
                    seed: seed.unwrap_or(0),
                    payoff: None,
                    discretize,
                    workers: None,
                },
            };
            if let Some(a) = algo {
                cfg.algo = a;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(p) = payoff {
                cfg.payoff = Some(p.parse::<PayoffKind>()?);
            }
            cfg.params.extend(parse_params(&params)?);
            cfg.discretize |= discretize;
            let report = run_experiment(&cfg)?;
            if verbose {
                eprintln!("{}", serde_json::to_string_pretty(&report)?);
            }
            if report.audit_failed_trials > 0 {
                log::warn!(
                    "{} trials failed internal audits; first: {}",
                    report.audit_failed_trials,
                    report.first_audit_failure.as_deref().unwrap_or("")
                );
            }
            emit(&out, &csv_string(&[ReportRow::from(&report)])?)
        }
        Cmd::Oracle { instance, constraint } => oracle(&instance, &constraint),
        Cmd::Report { inputs, format, out } => {
            let mut rows = Vec::new();
            for p in &inputs {
                let f = File::open(p).with_context(|| format!("cannot read {}", p.display()))?;
                rows.extend(read_csv(f)?);
            }
            let text = match format {
                Format::Md => markdown(&rows),
                Format::Csv => csv_string(&rows)?,
            };
            emit(&out, &text)
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<BsecError>() {
        Some(BsecError::Oracle(_)) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
