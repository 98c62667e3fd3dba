//! First (p,q)-eigenpair by inverse iteration and by direct minimization of
//! the Rayleigh quotient on the unit L^q sphere.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::inner_solver::{solve_inner_from, InnerConfig};
use crate::mesh::{lq_norm, p_energy, Field, Grid};
use crate::operators::{apply_b, basis_unorms, residual_from_parts, signed_power};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub grid: Arc<Grid>,
    pub p: f64,
    pub q: f64,
    pub inner: InnerConfig,
    /// Relative tolerance on successive μ and on the L^q change of iterates;
    /// the residual target for Rayleigh descent.
    pub tol_outer: f64,
    pub max_outer: usize,
    /// Seed of the default start.
    pub seed: u64,
    /// Number of default starts (seeds `seed`, `seed + 1`, ...) tried when no
    /// start is given; the lowest converged eigenvalue wins. For q > p the
    /// quotient can have several local minima on the sphere.
    pub starts: usize,
}

impl SolverConfig {
    pub fn new(grid: &Arc<Grid>, p: f64, q: f64) -> Self {
        SolverConfig {
            grid: Arc::clone(grid),
            p,
            q,
            inner: InnerConfig::for_exponent(p),
            tol_outer: 1e-6,
            max_outer: 500,
            seed: 0,
            starts: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("p", self.p), ("q", self.q)] {
            if !(v > 1.0 && v.is_finite()) {
                return Err(Error::OutOfRange {
                    name,
                    value: v,
                    requirement: format!("{name} > 1"),
                });
            }
        }
        if !(self.tol_outer > 0.0) {
            return Err(Error::InvalidConfig("tol_outer must be positive".into()));
        }
        if self.max_outer == 0 {
            return Err(Error::InvalidConfig("max_outer must be at least 1".into()));
        }
        if self.starts == 0 {
            return Err(Error::InvalidConfig("starts must be at least 1".into()));
        }
        self.inner.validate(self.p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Inverse,
    Rayleigh,
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    pub method: Method,
    pub lambda_hat: f64,
    /// Unit L^q norm, node sum ≥ 0.
    pub eigenfunction: Field,
    /// μ_n for inverse iteration, the quotient for Rayleigh descent.
    pub mu_trace: Vec<f64>,
    /// ‖w_{n+1}‖_U^p.
    pub unorm_trace: Vec<f64>,
    /// ‖w_{n+1} − w_n‖_{L^q}.
    pub change_trace: Vec<f64>,
    pub inner_iters_trace: Vec<usize>,
    pub residual_trace: Vec<f64>,
    pub residual: f64,
    pub converged: bool,
    pub outer_iters: usize,
}

/// E(u) / ‖u‖_q^p.
pub fn rayleigh_quotient(u: &Field, p: f64, q: f64) -> Result<f64> {
    if u.is_zero() {
        return Err(Error::ZeroField);
    }
    Ok(p_energy(u, p, 0.0)? / lq_norm(u, q)?.powf(p))
}

/// Scales to unit L^q norm and flips the sign so the node sum is nonnegative.
pub fn normalize(u: &Field, q: f64) -> Result<Field> {
    let norm = lq_norm(u, q)?;
    if norm == 0.0 {
        return Err(Error::ZeroField);
    }
    let sum: f64 = u.values().iter().sum();
    let sign = if sum < 0.0 { -1.0 } else { 1.0 };
    Ok(u.scaled(sign / norm))
}

/// Strictly positive start with node values drawn uniformly from [0.5, 1.5].
///
/// A constant start is invariant under the reflection symmetries of the box,
/// and so is every iterate built from it; when the minimizer breaks such a
/// symmetry (possible for q > p) both methods would stall at a symmetric
/// saddle. The jitter removes that trap while keeping the start positive.
pub fn default_start(grid: &Arc<Grid>, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid.num_nodes()).map(|_| rng.gen_range(0.5..1.5)).collect();
    Field::from_values(grid, values).expect("one value per node")
}

fn check_start(cfg: &SolverConfig, start: &Field) -> Result<Field> {
    if !start.same_grid(&cfg.grid) {
        return Err(Error::GridMismatch);
    }
    normalize(start, cfg.q)
}

/// Runs `solve` from the given start, or from each of the `cfg.starts`
/// default starts keeping the best outcome (converged first, then lowest λ).
fn best_of_starts<F>(cfg: &SolverConfig, start: Option<&Field>, solve: F) -> Result<EigenResult>
where
    F: Fn(Field) -> Result<EigenResult>,
{
    cfg.validate()?;
    if let Some(s) = start {
        return solve(check_start(cfg, s)?);
    }
    let mut best: Option<EigenResult> = None;
    for k in 0..cfg.starts {
        let w0 = normalize(&default_start(&cfg.grid, cfg.seed.wrapping_add(k as u64)), cfg.q)?;
        let candidate = solve(w0)?;
        let better = match &best {
            None => true,
            Some(b) => (candidate.converged && !b.converged)
                || (candidate.converged == b.converged && candidate.lambda_hat < b.lambda_hat),
        };
        if better {
            best = Some(candidate);
        }
    }
    Ok(best.expect("starts ≥ 1"))
}

/// The iteration A(w_{n+1}) = μ_n B(w_n), w_{n+1} ∈ unit L^q sphere.
///
/// Each step solves A(z) = B(w_n), then sets w_{n+1} = z/‖z‖_q and
/// μ_n = ‖z‖_q^{1−p}, the constant for which w_{n+1} satisfies the step
/// exactly (A is (p−1)-homogeneous).
pub fn inverse_iteration(cfg: &SolverConfig, w0: Option<&Field>) -> Result<EigenResult> {
    best_of_starts(cfg, w0, |w| inverse_from(cfg, w))
}

fn inverse_from(cfg: &SolverConfig, mut w: Field) -> Result<EigenResult> {
    let grid = &cfg.grid;
    let (p, q) = (cfg.p, cfg.q);
    let weights = basis_unorms(grid, p);
    let stage_cfg = cfg.inner.final_stage();

    let mut result = EigenResult {
        method: Method::Inverse,
        lambda_hat: f64::NAN,
        eigenfunction: w.clone(),
        mu_trace: vec![],
        unorm_trace: vec![],
        change_trace: vec![],
        inner_iters_trace: vec![],
        residual_trace: vec![],
        residual: f64::NAN,
        converged: false,
        outer_iters: 0,
    };
    let mut z_prev: Option<Field> = None;
    for n in 0..cfg.max_outer {
        let rhs = apply_b(&w, q)?;
        let inner_cfg = if n == 0 { &cfg.inner } else { &stage_cfg };
        let sol = solve_inner_from(&rhs, p, inner_cfg, z_prev.as_ref())?;
        let z = sol.field;
        let m = lq_norm(&z, q)?;
        if m == 0.0 {
            return Err(Error::DegenerateIterate);
        }
        let mu = m.powf(1.0 - p);
        let w_next = z.scaled(1.0 / m);
        let (energy, action) = grid.energy_and_action(Exec::default(), w_next.values(), p, 0.0);
        let res = residual_from_parts(grid, w_next.values(), &action, energy, 1.0, mu, p, q, &weights);
        let change = lq_norm(&w_next.combine(1.0, &w, -1.0)?, q)?;

        result.mu_trace.push(mu);
        result.unorm_trace.push(energy);
        result.change_trace.push(change);
        result.inner_iters_trace.push(sol.iterations);
        result.residual_trace.push(res);
        result.outer_iters = n + 1;

        let settled = n > 0 && {
            let prev = result.mu_trace[n - 1];
            (prev - mu).abs() <= cfg.tol_outer * mu && change <= cfg.tol_outer
        };
        w = w_next;
        z_prev = Some(z);
        if settled {
            result.converged = true;
            break;
        }
    }
    // Inverse iteration preserves sign, but a user start may be mixed.
    if w.values().iter().sum::<f64>() < 0.0 {
        w = w.scaled(-1.0);
    }
    result.lambda_hat = *result.mu_trace.last().expect("at least one outer step");
    result.residual = *result.residual_trace.last().expect("at least one outer step");
    result.eigenfunction = w;
    Ok(result)
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

struct SpherePoint {
    u: Field,
    quotient: f64,
    /// A(u) − R·B(u): the sphere gradient of the quotient up to the factor p·vol.
    direction: Vec<f64>,
    residual: f64,
}

fn sphere_point(u: Field, p: f64, q: f64, weights: &[f64]) -> SpherePoint {
    let grid = Arc::clone(u.grid());
    let (energy, action) = grid.energy_and_action(Exec::default(), u.values(), p, 0.0);
    let direction: Vec<f64> = u
        .values()
        .iter()
        .zip(&action)
        .map(|(&v, &a)| a - energy * signed_power(v, q - 1.0))
        .collect();
    let residual = residual_from_parts(&grid, u.values(), &action, energy, 1.0, energy, p, q, weights);
    SpherePoint {
        u,
        quotient: energy,
        direction,
        residual,
    }
}

/// Projected gradient descent of the Rayleigh quotient on the unit L^q
/// sphere with Barzilai–Borwein steps and a monotone backtracking search.
/// Stops once the eigen-residual drops below `tol_outer`; iteration cap is
/// `inner.max_iters`.
pub fn rayleigh_minimize(cfg: &SolverConfig, u0: Option<&Field>) -> Result<EigenResult> {
    best_of_starts(cfg, u0, |u| rayleigh_from(cfg, u))
}

fn rayleigh_from(cfg: &SolverConfig, u0: Field) -> Result<EigenResult> {
    let grid = &cfg.grid;
    let (p, q) = (cfg.p, cfg.q);
    let vol = grid.cell_volume();
    let weights = basis_unorms(grid, p);
    let mut here = sphere_point(u0, p, q, &weights);

    let mut result = EigenResult {
        method: Method::Rayleigh,
        lambda_hat: here.quotient,
        eigenfunction: here.u.clone(),
        mu_trace: vec![here.quotient],
        unorm_trace: vec![here.quotient],
        change_trace: vec![0.0],
        inner_iters_trace: vec![0],
        residual_trace: vec![here.residual],
        residual: here.residual,
        converged: false,
        outer_iters: 0,
    };
    let dot = |a: &[f64], b: &[f64]| Exec::default().sum(a.len(), |i| a[i] * b[i]);
    let mut alpha = {
        let gn = dot(&here.direction, &here.direction).sqrt();
        if gn > 0.0 {
            1e-2 / gn
        } else {
            1.0
        }
    };
    let mut bb_long = true;
    for k in 0..cfg.inner.max_iters {
        if here.residual <= cfg.tol_outer {
            result.converged = true;
            break;
        }
        let gg = dot(&here.direction, &here.direction);
        let slope = p * vol * gg;
        let mut step = alpha;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let moved: Vec<f64> = here
                .u
                .values()
                .iter()
                .zip(&here.direction)
                .map(|(u, g)| u - step * g)
                .collect();
            let trial = Field::from_values(grid, moved)?;
            if let Ok(trial) = normalize(&trial, q) {
                let next = sphere_point(trial, p, q, &weights);
                let sufficient = next.quotient <= here.quotient - ARMIJO * step * slope;
                let flat = next.quotient <= here.quotient
                    && here.quotient - next.quotient <= 1e-13 * here.quotient;
                if next.quotient.is_finite() && (sufficient || flat) {
                    accepted = Some(next);
                    break;
                }
            }
            step *= 0.5;
        }
        let Some(next) = accepted else {
            // No descent is possible at working precision.
            break;
        };
        let s: Vec<f64> = next
            .u
            .values()
            .iter()
            .zip(here.u.values())
            .map(|(a, b)| a - b)
            .collect();
        let y: Vec<f64> = next
            .direction
            .iter()
            .zip(&here.direction)
            .map(|(a, b)| a - b)
            .collect();
        let (sy, ss, yy) = (dot(&s, &y), dot(&s, &s), dot(&y, &y));
        alpha = if sy > 0.0 {
            bb_long = !bb_long;
            if bb_long {
                ss / sy
            } else {
                sy / yy
            }
        } else {
            2.0 * step
        };
        let change = lq_norm(&Field::from_values(grid, s)?, q)?;
        here = next;
        result.mu_trace.push(here.quotient);
        result.unorm_trace.push(here.quotient);
        result.change_trace.push(change);
        result.inner_iters_trace.push(0);
        result.residual_trace.push(here.residual);
        result.outer_iters = k + 1;
    }
    if !result.converged && here.residual <= cfg.tol_outer {
        result.converged = true;
    }
    result.lambda_hat = here.quotient;
    result.residual = here.residual;
    result.eigenfunction = here.u;
    Ok(result)
}
