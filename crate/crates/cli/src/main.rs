//! `subeigen`: first Dirichlet (p,q)-eigenvalue runs and sweeps.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use config::{MethodChoice, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "subeigen", version, about = "First Dirichlet (p,q)-eigenvalue of the horizontal p-Laplacian")]
struct Args {
    /// JSON run configuration; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// euclidean2 or heisenberg1.
    #[arg(long)]
    group: Option<String>,
    /// Box as lo:hi per axis, e.g. 0:1,0:1.
    #[arg(long = "box", value_delimiter = ',')]
    bounds: Option<Vec<String>>,
    /// Interior nodes per axis; a single value applies to every axis.
    #[arg(long, value_delimiter = ',')]
    resolution: Option<Vec<usize>>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long, value_enum)]
    method: Option<MethodChoice>,
    #[arg(long)]
    tol_inner: Option<f64>,
    #[arg(long)]
    tol_outer: Option<f64>,
    #[arg(long)]
    eps_floor: Option<f64>,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    max_inner: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of seeded starts per solve (useful when q > p).
    #[arg(long)]
    starts: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    dump_field: bool,
    /// Compare against the brute-force oracle (at most 25 interior nodes).
    #[arg(long)]
    oracle: bool,
    #[arg(long, value_delimiter = ',')]
    sweep_p: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    sweep_q: Option<Vec<f64>>,
}

fn parse_box(items: &[String]) -> Result<Vec<[f64; 2]>, String> {
    items
        .iter()
        .map(|item| {
            let (lo, hi) = item
                .split_once(':')
                .ok_or_else(|| format!("box entry {item:?} is not of the form lo:hi"))?;
            let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("box entry {item:?}: {e}"));
            Ok([num(lo)?, num(hi)?])
        })
        .collect()
}

fn merge(args: Args) -> Result<RunConfig, String> {
    let mut rc = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(g) = args.group {
        rc.group = g;
    }
    if let Some(b) = &args.bounds {
        rc.bounds = Some(parse_box(b)?);
    }
    if let Some(r) = args.resolution {
        rc.resolution = r;
    }
    rc.p = args.p.unwrap_or(rc.p);
    rc.q = args.q.unwrap_or(rc.q);
    rc.method = args.method.unwrap_or(rc.method);
    rc.tol_inner = args.tol_inner.or(rc.tol_inner);
    rc.tol_outer = args.tol_outer.unwrap_or(rc.tol_outer);
    rc.eps_floor = args.eps_floor.unwrap_or(rc.eps_floor);
    rc.max_outer = args.max_outer.unwrap_or(rc.max_outer);
    rc.max_inner = args.max_inner.or(rc.max_inner);
    rc.seed = args.seed.unwrap_or(rc.seed);
    rc.starts = args.starts.unwrap_or(rc.starts);
    if let Some(o) = args.out {
        rc.output_dir = o;
    }
    rc.dump_field |= args.dump_field;
    rc.oracle |= args.oracle;
    rc.sweep_p = args.sweep_p.or(rc.sweep_p);
    rc.sweep_q = args.sweep_q.or(rc.sweep_q);
    Ok(rc)
}

fn thread_cap() -> Result<Option<usize>, String> {
    match std::env::var("SUBEIGEN_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("SUBEIGEN_THREADS must be a positive integer, got {v:?}")),
        },
        Err(_) => Ok(None),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let outcome = merge(Args::parse()).and_then(|rc| {
        let threads = thread_cap()?;
        subeigen::exec::with_thread_cap(threads, || if rc.is_sweep() { run::sweep(&rc) } else { run::run(&rc) })
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
