use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use subeigen::diagnostics::{regularity_report, RegularityReport, DEFAULT_CORE_SHRINK};
use subeigen::oracle::{brute_force_lambda, OracleMethod, MIN_RESTARTS};
use subeigen::{inverse_iteration, rayleigh_minimize, EigenResult, Exec, SolverConfig};

use crate::config::{MethodChoice, RunConfig};

#[derive(Debug, Serialize)]
struct OracleSummary {
    lambda_star: f64,
    method: OracleMethod,
    restarts_used: usize,
    warning: bool,
    relative_gap: f64,
}

#[derive(Debug, Serialize)]
struct Summary {
    group: String,
    #[serde(rename = "box")]
    bounds: Vec<[f64; 2]>,
    resolution: Vec<usize>,
    p: f64,
    q: f64,
    method: &'static str,
    lambda_hat: f64,
    converged: bool,
    outer_iters: usize,
    residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_inverse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_rayleigh: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    relative_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleSummary>,
    regularity: Option<RegularityReport>,
    runtime_seconds: f64,
}

#[derive(Debug, Serialize)]
struct TraceRow {
    n: usize,
    mu_n: f64,
    unorm_p: f64,
    lq_change: f64,
    inner_iters: usize,
    residual: f64,
}

#[derive(Debug, Serialize)]
struct SweepRow {
    p: f64,
    q: f64,
    lambda_hat: f64,
    residual: f64,
    outer_iters: usize,
    converged: bool,
}

fn err<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> String + '_ {
    move |e| format!("{context}: {e}")
}

fn write_trace(path: &Path, result: &EigenResult) -> Result<(), String> {
    let mut w = csv::Writer::from_path(path).map_err(err("writing trace"))?;
    for n in 0..result.mu_trace.len() {
        w.serialize(TraceRow {
            n,
            mu_n: result.mu_trace[n],
            unorm_p: result.unorm_trace[n],
            lq_change: result.change_trace[n],
            inner_iters: result.inner_iters_trace[n],
            residual: result.residual_trace[n],
        })
        .map_err(err("writing trace"))?;
    }
    w.flush().map_err(err("writing trace"))
}

/// Solves with the configured method(s). For `Both` the inverse-iteration
/// result comes first.
fn solve(cfg: &SolverConfig, method: MethodChoice) -> Result<Vec<EigenResult>, String> {
    let solve_err = err("solver failed");
    Ok(match method {
        MethodChoice::Inverse => vec![inverse_iteration(cfg, None).map_err(solve_err)?],
        MethodChoice::Rayleigh => vec![rayleigh_minimize(cfg, None).map_err(solve_err)?],
        MethodChoice::Both => vec![
            inverse_iteration(cfg, None).map_err(err("inverse iteration failed"))?,
            rayleigh_minimize(cfg, None).map_err(err("Rayleigh minimization failed"))?,
        ],
    })
}

/// Single run. Returns whether every requested method converged.
pub fn run(rc: &RunConfig) -> Result<bool, String> {
    rc.check_regime(rc.p, rc.q)?;
    let cfg = rc.solver_config(rc.p, rc.q)?;
    fs::create_dir_all(&rc.output_dir).map_err(err("creating output directory"))?;
    let start = Instant::now();
    let results = solve(&cfg, rc.method)?;
    let primary = &results[0];

    let oracle = if rc.oracle {
        let o = brute_force_lambda(&cfg.grid, rc.p, rc.q, MIN_RESTARTS, rc.seed).map_err(err("oracle failed"))?;
        Some(OracleSummary {
            lambda_star: o.lambda_star,
            method: o.method,
            restarts_used: o.restarts_used,
            warning: o.warning,
            relative_gap: (primary.lambda_hat - o.lambda_star).abs() / o.lambda_star,
        })
    } else {
        None
    };
    let regularity = match regularity_report(primary, &cfg, DEFAULT_CORE_SHRINK) {
        Ok(r) => Some(r),
        Err(e) => {
            log::warn!("regularity diagnostics unavailable: {e}");
            None
        }
    };
    let converged = results.iter().all(|r| r.converged);
    let (lambda_inverse, lambda_rayleigh, relative_gap) = match results.as_slice() {
        [inv, ray] => (
            Some(inv.lambda_hat),
            Some(ray.lambda_hat),
            Some((inv.lambda_hat - ray.lambda_hat).abs() / ray.lambda_hat.abs().max(inv.lambda_hat.abs())),
        ),
        _ => (None, None, None),
    };
    for r in &results {
        if !r.converged {
            log::warn!(
                "{:?} did not converge after {} iterations (residual {:.3e})",
                r.method,
                r.outer_iters,
                r.residual
            );
        }
    }
    let summary = Summary {
        group: rc.group.clone(),
        bounds: rc.box_bounds()?.iter().map(|&(lo, hi)| [lo, hi]).collect(),
        resolution: rc.resolution()?,
        p: rc.p,
        q: rc.q,
        method: rc.method.name(),
        lambda_hat: primary.lambda_hat,
        converged,
        outer_iters: primary.outer_iters,
        residual: primary.residual,
        lambda_inverse,
        lambda_rayleigh,
        relative_gap,
        oracle,
        regularity,
        runtime_seconds: start.elapsed().as_secs_f64(),
    };

    let dir = &rc.output_dir;
    let json = serde_json::to_string_pretty(&summary).map_err(err("serializing summary"))?;
    fs::write(dir.join("summary.json"), json + "\n").map_err(err("writing summary"))?;
    write_trace(&dir.join("trace.csv"), primary)?;
    if let [_, ray] = results.as_slice() {
        write_trace(&dir.join("trace_rayleigh.csv"), ray)?;
    }
    if rc.dump_field {
        let file = File::create(dir.join("field.csv")).map_err(err("writing field"))?;
        primary
            .eigenfunction
            .write_csv(BufWriter::new(file))
            .map_err(err("writing field"))?;
    }
    Ok(converged)
}

/// All in-regime (p,q) pairs in lexicographic order, duplicates removed.
pub fn sweep_pairs(rc: &RunConfig) -> Vec<(f64, f64)> {
    let ps = rc.sweep_p.clone().unwrap_or_else(|| vec![rc.p]);
    let qs = rc.sweep_q.clone().unwrap_or_else(|| vec![rc.q]);
    let mut pairs: Vec<(f64, f64)> = ps.iter().flat_map(|&p| qs.iter().map(move |&q| (p, q))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pairs.dedup();
    pairs
        .into_iter()
        .filter(|&(p, q)| match rc.check_regime(p, q) {
            Ok(()) => true,
            Err(msg) => {
                log::warn!("skipping (p, q) = ({p}, {q}): {msg}");
                false
            }
        })
        .collect()
}

/// Sweep over `sweep_p × sweep_q`. Pairs run concurrently; rows are written
/// in pair order. Returns whether every pair converged.
pub fn sweep(rc: &RunConfig) -> Result<bool, String> {
    let pairs = sweep_pairs(rc);
    if pairs.is_empty() {
        return Err("sweep has no in-regime (p, q) pairs".into());
    }
    let configs = pairs
        .iter()
        .map(|&(p, q)| rc.solver_config(p, q))
        .collect::<Result<Vec<_>, _>>()?;
    fs::create_dir_all(&rc.output_dir).map_err(err("creating output directory"))?;
    let outcomes = Exec::default().map_collect(configs.len(), |i| solve(&configs[i], rc.method));
    let mut w = csv::Writer::from_path(rc.output_dir.join("results.csv")).map_err(err("writing results"))?;
    let mut all_converged = true;
    for (&(p, q), outcome) in pairs.iter().zip(outcomes) {
        let results = outcome.map_err(|e| format!("(p, q) = ({p}, {q}): {e}"))?;
        let r = &results[0];
        all_converged &= results.iter().all(|r| r.converged);
        w.serialize(SweepRow {
            p,
            q,
            lambda_hat: r.lambda_hat,
            residual: r.residual,
            outer_iters: r.outer_iters,
            converged: r.converged,
        })
        .map_err(err("writing results"))?;
    }
    w.flush().map_err(err("writing results"))?;
    Ok(all_converged)
}
