use std::fs;
use std::path::Path;

use corrt::adaptive::SearchConfig;
use corrt::inference::{self, CiOptions, CiSearch};
use corrt::sim::{self, DgpMode, DgpSpec, McResult, Method, CSV_COLUMNS};
use corrt::stat_math::{corrt_local_power, wald_size_distortion, Tail};
use serde::Serialize;
use serde_json::{json, Value};

use crate::data::Table;
use crate::{CiArgs, CliError, DgpArgs, MethodArg, ModeArg, PowerArgs, ReproduceArgs, Scale, SimArgs, TailArg, Target, TestArgs};

fn tail(t: TailArg) -> Tail {
    match t {
        TailArg::Gaussian => Tail::Gaussian,
        TailArg::StudentT3 => Tail::StudentT3,
    }
}

fn method(m: MethodArg) -> Method {
    match m {
        MethodArg::Corrt => Method::Corrt,
        MethodArg::Debias => Method::Debias,
    }
}

fn echo<T: Serialize>(command: &str, args: &T) -> Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "args": args,
        "search": SearchConfig::default(),
    })
}

fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::io(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

fn out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))
}

fn emit_report(out: Option<&Path>, summary: &str, value: &Value) -> Result<(), CliError> {
    match out {
        Some(p) => {
            write_json(p, value)?;
            println!("{summary}");
        }
        None => {
            eprintln!("{summary}");
            println!("{}", serde_json::to_string_pretty(value).map_err(|e| CliError::io(e.to_string()))?);
        }
    }
    Ok(())
}

pub fn test(args: &TestArgs) -> Result<(), CliError> {
    let table = Table::read(&args.data.data)?;
    let data = table.dataset(&args.data.y_col, &args.data.test_col)?;
    let report = inference::test(&data, args.beta0, args.alpha)?;
    let summary = format!(
        "T = {:.6}  p-value = {:.6}  critical value = {:.6}  decision: {}",
        report.t_stat,
        report.p_value,
        report.critical_value,
        if report.reject { "reject" } else { "do not reject" }
    );
    let value = json!({ "config": echo("test", args), "report": report });
    emit_report(args.out.as_deref(), &summary, &value)
}

pub fn ci(args: &CiArgs) -> Result<(), CliError> {
    let table = Table::read(&args.data.data)?;
    let data = table.dataset(&args.data.y_col, &args.data.test_col)?;
    if args.grid_points < 2 {
        return Err(CliError::usage("--grid-points must be at least 2"));
    }
    let search = match (args.grid_lo, args.grid_hi) {
        (Some(lo), Some(hi)) => {
            if !(lo < hi) {
                return Err(CliError::usage("--grid-lo must be below --grid-hi"));
            }
            let m = args.grid_points - 1;
            CiSearch::Explicit((0..=m).map(|k| lo + (hi - lo) * k as f64 / m as f64).collect())
        }
        _ => CiSearch::Auto,
    };
    let opts = CiOptions {
        points: args.grid_points,
        half_width_se: args.half_width_se,
        max_doublings: args.max_doublings,
        ..CiOptions::default()
    };
    let set = inference::confidence_interval_with(&data, args.level, &search, opts)?;
    let mut summary = match set.hull {
        Some((lo, hi)) => format!("{:.0}% confidence set: [{lo:.6}, {hi:.6}]", args.level * 100.0),
        None => format!("{:.0}% confidence set: empty on the grid", args.level * 100.0),
    };
    if let Some(d) = &set.diagnostic {
        summary.push_str(&format!("  ({d})"));
    }
    let value = json!({ "config": echo("ci", args), "confidence_set": set });
    emit_report(args.out.as_deref(), &summary, &value)
}

fn dgp(args: &DgpArgs, h: f64) -> DgpSpec {
    let mut spec = match args.mode {
        ModeArg::Sparse => DgpSpec::sparse(args.n, args.p, args.rho, tail(args.design), tail(args.error), args.s),
        ModeArg::Dense => {
            let mut d = DgpSpec::dense(args.n, args.p, args.a);
            d.design = tail(args.design);
            d.error = tail(args.error);
            d.rho = args.rho;
            d
        }
    };
    spec.h = h;
    spec
}

/// How the sparse signal rule was applied; stored alongside results.
fn signal_rule(spec: &DgpSpec) -> &'static str {
    match (spec.mode, spec.s) {
        (DgpMode::Dense { .. }, _) => "dense: gamma = a/sqrt(p) on every nuisance column, tested coefficient 0 (index 0)",
        (_, 1) => "s=1: only pi_3 = 2/sqrt(n) is nonzero (tested index 2)",
        (_, 2) => "s=2: pi_2 = pi_3 = 2/sqrt(n), others zero (tested index 2)",
        _ => "pi_j = 2/sqrt(n) for j in 2..4, 0 for j > max(s,4), others U(0, 4/sqrt(n)); 1-based j, tested index 2",
    }
}

fn rows(results: &[McResult]) -> Vec<Vec<String>> {
    results.iter().map(McResult::csv_row).collect()
}

pub fn simulate(args: &SimArgs) -> Result<(), CliError> {
    let spec = dgp(&args.dgp, args.h);
    let r = sim::run_mc(&spec, method(args.dgp.method), args.dgp.alpha, args.dgp.reps, args.dgp.seed)?;
    out_dir(&args.dgp.out)?;
    write_csv(&args.dgp.out.join("simulate.csv"), &CSV_COLUMNS, &rows(std::slice::from_ref(&r)))?;
    let value = json!({ "config": echo("simulate", args), "signal_rule": signal_rule(&spec), "results": [&r] });
    write_json(&args.dgp.out.join("simulate.json"), &value)?;
    println!(
        "rejection rate {:.4} (mc stderr {:.4}) over {} replications, {} failed",
        r.rejection_rate, r.mc_stderr, r.reps, r.failures
    );
    Ok(())
}

pub fn power(args: &PowerArgs) -> Result<(), CliError> {
    if args.h_grid.is_empty() {
        return Err(CliError::usage("--h-grid must not be empty"));
    }
    let spec = dgp(&args.dgp, 0.0);
    let curve =
        sim::power_curve(&spec, method(args.dgp.method), args.dgp.alpha, args.dgp.reps, &args.h_grid, args.dgp.seed)?;
    out_dir(&args.dgp.out)?;
    write_csv(&args.dgp.out.join("power.csv"), &CSV_COLUMNS, &rows(&curve))?;
    let value = json!({ "config": echo("power", args), "signal_rule": signal_rule(&spec), "results": curve });
    write_json(&args.dgp.out.join("power.json"), &value)?;
    for r in &curve {
        println!("h = {:>6}  rejection rate {:.4} (mc stderr {:.4})", r.spec.h, r.rejection_rate, r.mc_stderr);
    }
    Ok(())
}

/// (n, p, reps) for each experiment and scale.
fn scale_dims(target: Target, scale: Scale) -> (usize, usize, usize) {
    match (target, scale) {
        (Target::Theorem1, Scale::Desk) => (200, 400, 400),
        (Target::Theorem1, Scale::Paper) => (500, 1000, 1000),
        (Target::Table1, Scale::Desk) => (100, 250, 200),
        (Target::Table1, Scale::Paper) => (200, 500, 100),
        (Target::Power, Scale::Desk) => (100, 250, 200),
        (Target::Power, Scale::Paper) => (200, 500, 100),
    }
}

const TABLE1_COLUMNS: [(&str, Tail, Tail, f64); 6] = [
    ("ltd_lte_rho0", Tail::Gaussian, Tail::Gaussian, 0.0),
    ("ltd_lte_rho-0.5", Tail::Gaussian, Tail::Gaussian, -0.5),
    ("htd_lte_rho0", Tail::StudentT3, Tail::Gaussian, 0.0),
    ("ltd_hte_rho0", Tail::Gaussian, Tail::StudentT3, 0.0),
    ("ltd_hte_rho-0.5", Tail::Gaussian, Tail::StudentT3, -0.5),
    ("htd_hte_rho0", Tail::StudentT3, Tail::StudentT3, 0.0),
];

fn table1_sparsities(n: usize, p: usize) -> Vec<usize> {
    let mut s: Vec<usize> = [1, 3, 5, 10, 20, 50, 100, n, p].into_iter().filter(|&s| s <= p).collect();
    s.dedup();
    s
}

pub fn reproduce(args: &ReproduceArgs) -> Result<(), CliError> {
    let (n, p, default_reps) = scale_dims(args.target, args.scale);
    let reps = args.reps.unwrap_or(default_reps);
    let seed = args.seed;
    let alpha = args.alpha;
    out_dir(&args.out)?;
    let config = json!({
        "config": echo("reproduce", args),
        "n": n,
        "p": p,
        "reps": reps,
    });
    match args.target {
        Target::Theorem1 => {
            let header = [
                "n", "p", "a", "alpha", "seed", "reps", "failures", "analytic", "empirical", "mc_stderr",
                "lasso_zero_rate",
            ];
            let mut table = Vec::new();
            let mut results = Vec::new();
            for a in [0.0, 1.0, 3.0, 10.0] {
                let r = sim::run_mc(&DgpSpec::dense(n, p, a), Method::Debias, alpha, reps, seed)?;
                let analytic = wald_size_distortion(alpha, a)?;
                let zero = r.lasso_zero_rate().map(|z| z.to_string()).unwrap_or_default();
                println!("a = {a:>4}  analytic {analytic:.4}  empirical {:.4} (mc stderr {:.4})", r.rejection_rate, r.mc_stderr);
                table.push(vec![
                    n.to_string(),
                    p.to_string(),
                    a.to_string(),
                    alpha.to_string(),
                    seed.to_string(),
                    r.reps.to_string(),
                    r.failures.to_string(),
                    analytic.to_string(),
                    r.rejection_rate.to_string(),
                    r.mc_stderr.to_string(),
                    zero,
                ]);
                results.push(json!({ "a": a, "analytic": analytic, "result": r }));
            }
            write_csv(&args.out.join("theorem1.csv"), &header, &table)?;
            write_json(&args.out.join("theorem1.json"), &json!({ "config": config, "rows": results }))?;
        }
        Target::Table1 => {
            let mut header = vec!["column"];
            header.extend(CSV_COLUMNS);
            let mut table = Vec::new();
            let mut results = Vec::new();
            for (label, design, error, rho) in TABLE1_COLUMNS {
                for s in table1_sparsities(n, p) {
                    let spec = DgpSpec::sparse(n, p, rho, design, error, s);
                    for m in [Method::Corrt, Method::Debias] {
                        let r = sim::run_mc(&spec, m, alpha, reps, seed)?;
                        println!("{label:<16} s = {s:>4}  {:<6} {:.3}", m.name(), r.rejection_rate);
                        let mut row = vec![label.to_owned()];
                        row.extend(r.csv_row());
                        table.push(row);
                        results.push(json!({ "column": label, "signal_rule": signal_rule(&spec), "result": r }));
                    }
                }
            }
            write_csv(&args.out.join("table1.csv"), &header, &table)?;
            write_json(&args.out.join("table1.json"), &json!({ "config": config, "cells": results }))?;
        }
        Target::Power => {
            let h_grid: Vec<f64> = match args.scale {
                Scale::Desk => vec![0.0, 2.0, 4.0, 6.0],
                Scale::Paper => (0..=6).map(f64::from).collect(),
            };
            let mut header = vec!["curve"];
            header.extend(CSV_COLUMNS);
            header.push("asymptotic_power");
            let mut table = Vec::new();
            let mut results = Vec::new();
            for s in [3, n, p] {
                for (label, error) in [("ltd_lte", Tail::Gaussian), ("ltd_hte", Tail::StudentT3)] {
                    let spec = DgpSpec::sparse(n, p, -0.5, Tail::Gaussian, error, s);
                    for m in [Method::Corrt, Method::Debias] {
                        let curve = sim::power_curve(&spec, m, alpha, reps, &h_grid, seed)?;
                        let name = format!("{label}_s{s}");
                        for r in curve {
                            let psi = corrt_local_power(r.spec.h, r.spec.kappa(), alpha)?;
                            println!("{name:<14} {:<6} h = {:>3}  {:.3}  (asymptotic {psi:.3})", m.name(), r.spec.h, r.rejection_rate);
                            let mut row = vec![name.clone()];
                            row.extend(r.csv_row());
                            row.push(psi.to_string());
                            table.push(row);
                            results.push(json!({ "curve": name, "asymptotic_power": psi, "result": r }));
                        }
                    }
                }
            }
            write_csv(&args.out.join("power_curves.csv"), &header, &table)?;
            write_json(&args.out.join("power_curves.json"), &json!({ "config": config, "points": results }))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparsity_rows_deduplicated() {
        assert_eq!(table1_sparsities(100, 250), vec![1, 3, 5, 10, 20, 50, 100, 250]);
        assert_eq!(table1_sparsities(200, 500), vec![1, 3, 5, 10, 20, 50, 100, 200, 500]);
    }
}
