//! Solves A_eps(z) = f by minimizing the strictly convex energy
//! J(z) = (1/p)·E_eps(z) − ⟨f, z⟩.
//!
//! Two methods: Jacobi-preconditioned conjugate gradients for the linear case
//! p = 2, and Barzilai–Borwein gradient steps with backtracking for general p,
//! run over a decreasing eps schedule with warm starts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::mesh::{Field, Grid};
use crate::operators::DualField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerMethod {
    /// Conjugate gradients; used only when p = 2.
    CgP2,
    DescentBb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerConfig {
    /// Stop once ‖A_eps(z) − f‖ ≤ tol_grad·‖f‖.
    pub tol_grad: f64,
    pub max_iters: usize,
    /// Nonincreasing regularization levels; the last one defines the problem solved.
    pub eps_schedule: Vec<f64>,
    pub method: InnerMethod,
}

pub const DEFAULT_EPS_FLOOR: f64 = 1e-6;

impl InnerConfig {
    /// Defaults for exponent `p`: CG at 1e-8 when p = 2, otherwise descent
    /// at 1e-6 with an eps continuation ending at 0 (p > 2) or at the floor (p < 2).
    pub fn for_exponent(p: f64) -> Self {
        Self::with_eps_floor(p, DEFAULT_EPS_FLOOR)
    }

    pub fn with_eps_floor(p: f64, eps_floor: f64) -> Self {
        if p == 2.0 {
            InnerConfig {
                tol_grad: 1e-8,
                max_iters: 100_000,
                eps_schedule: vec![0.0],
                method: InnerMethod::CgP2,
            }
        } else {
            let last = if p < 2.0 { eps_floor } else { 0.0 };
            let mut eps_schedule: Vec<f64> = [1e-1, 1e-2, 1e-4].into_iter().filter(|&e| e > last).collect();
            eps_schedule.push(last);
            InnerConfig {
                tol_grad: 1e-6,
                max_iters: 100_000,
                eps_schedule,
                method: InnerMethod::DescentBb,
            }
        }
    }

    /// The regularization of the problem actually solved.
    pub fn final_eps(&self) -> f64 {
        self.eps_schedule.last().copied().unwrap_or(0.0)
    }

    pub fn validate(&self, p: f64) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.tol_grad > 0.0) {
            return bad(format!("tol_grad must be positive, got {}", self.tol_grad));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        let Some(&last) = self.eps_schedule.last() else {
            return bad("eps_schedule is empty".into());
        };
        if self.eps_schedule.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
            return bad("eps_schedule entries must be finite and nonnegative".into());
        }
        if self.eps_schedule.windows(2).any(|w| w[1] > w[0]) {
            return bad("eps_schedule must be nonincreasing".into());
        }
        if p >= 2.0 && last > 1e-8 {
            return bad(format!("for p ≥ 2 the final eps must be ≤ 1e-8, got {last}"));
        }
        if p < 2.0 && !(last > 0.0) {
            return bad("for p < 2 the final eps must be strictly positive".into());
        }
        Ok(())
    }

    /// Same settings with only the final eps level (for warm-started re-solves).
    pub fn final_stage(&self) -> Self {
        InnerConfig {
            eps_schedule: vec![self.final_eps()],
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct InnerSolution {
    pub field: Field,
    pub iterations: usize,
    /// ‖A_eps(z) − f‖ / ‖f‖ at return.
    pub rel_grad: f64,
}

/// Minimizer of (1/p)·E_eps(z) − ⟨f, z⟩, i.e. the solution of A_eps(z) = f.
pub fn solve_inner(f: &DualField, p: f64, cfg: &InnerConfig) -> Result<Field> {
    solve_inner_from(f, p, cfg, None).map(|s| s.field)
}

/// As [`solve_inner`], starting from `start` and reporting iteration counts.
pub fn solve_inner_from(
    f: &DualField,
    p: f64,
    cfg: &InnerConfig,
    start: Option<&Field>,
) -> Result<InnerSolution> {
    if !(p > 1.0) {
        return Err(Error::OutOfRange {
            name: "p",
            value: p,
            requirement: "p > 1".into(),
        });
    }
    cfg.validate(p)?;
    if let Some(s) = start {
        if !s.same_grid(f.grid()) {
            return Err(Error::GridMismatch);
        }
    }
    if p == 2.0 && cfg.method == InnerMethod::CgP2 {
        conjugate_gradient(f, cfg, start)
    } else {
        descent_bb(f, p, cfg, start)
    }
}

/// p = 2 fast path: A is symmetric positive definite.
pub fn solve_linear_cg(f: &DualField, cfg: &InnerConfig) -> Result<Field> {
    if !(cfg.tol_grad > 0.0) || cfg.max_iters == 0 {
        return Err(Error::InvalidConfig("tol_grad must be positive and max_iters ≥ 1".into()));
    }
    conjugate_gradient(f, cfg, None).map(|s| s.field)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    Exec::default().sum(a.len(), |i| a[i] * b[i])
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn linear_action(grid: &Grid, z: &[f64]) -> Vec<f64> {
    grid.energy_and_action(Exec::default(), z, 2.0, 0.0).1
}

fn iteration_limit(grid: &std::sync::Arc<Grid>, z: Vec<f64>, iterations: usize, rel: f64) -> Error {
    Error::IterationLimit {
        iterations,
        grad_norm: rel,
        last_iterate: Box::new(Field::from_values(grid, z).expect("iterate has grid length")),
    }
}

fn conjugate_gradient(f: &DualField, cfg: &InnerConfig, start: Option<&Field>) -> Result<InnerSolution> {
    let grid = f.grid();
    let n = grid.num_nodes();
    let rhs = f.values();
    let fnorm = norm(rhs);
    if fnorm == 0.0 {
        return Ok(InnerSolution {
            field: Field::zeros(grid),
            iterations: 0,
            rel_grad: 0.0,
        });
    }
    let inv_diag: Vec<f64> = (0..n)
        .map(|i| grid.cell_volume() / grid.basis_energy(i, 2.0))
        .collect();
    let mut x = start.map_or_else(|| vec![0.0; n], |s| s.values().to_vec());
    let true_residual = |x: &[f64]| -> Vec<f64> {
        let ax = linear_action(grid, x);
        rhs.iter().zip(&ax).map(|(b, a)| b - a).collect()
    };
    let target = cfg.tol_grad * fnorm;
    let mut r = true_residual(&x);
    let mut iterations = 0;
    // Restart from the true residual whenever the recurrence claims convergence
    // but the recomputed residual disagrees.
    loop {
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
        let mut d = z.clone();
        let mut rz = dot(&r, &z);
        while norm(&r) > target {
            if iterations >= cfg.max_iters {
                let rel = norm(&true_residual(&x)) / fnorm;
                return Err(iteration_limit(grid, x, iterations, rel));
            }
            let ad = linear_action(grid, &d);
            let dad = dot(&d, &ad);
            if !(dad > 0.0) {
                break;
            }
            let alpha = rz / dad;
            for i in 0..n {
                x[i] += alpha * d[i];
                r[i] -= alpha * ad[i];
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                d[i] = z[i] + beta * d[i];
            }
            iterations += 1;
        }
        r = true_residual(&x);
        let rel = norm(&r) / fnorm;
        if rel <= cfg.tol_grad {
            return Ok(InnerSolution {
                field: Field::from_values(grid, x)?,
                iterations,
                rel_grad: rel,
            });
        }
        if iterations >= cfg.max_iters {
            return Err(iteration_limit(grid, x, iterations, rel));
        }
    }
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

fn descent_bb(f: &DualField, p: f64, cfg: &InnerConfig, start: Option<&Field>) -> Result<InnerSolution> {
    let grid = f.grid();
    let n = grid.num_nodes();
    let vol = grid.cell_volume();
    let rhs = f.values();
    let fnorm = norm(rhs);
    if fnorm == 0.0 {
        return Ok(InnerSolution {
            field: Field::zeros(grid),
            iterations: 0,
            rel_grad: 0.0,
        });
    }
    let mut z = start.map_or_else(|| vec![0.0; n], |s| s.values().to_vec());
    let mut iterations = 0;
    let mut alpha = 1.0;
    let mut rel = f64::INFINITY;
    let stages = cfg.eps_schedule.len();
    for (stage, &eps) in cfg.eps_schedule.iter().enumerate() {
        let tol = if stage + 1 == stages {
            cfg.tol_grad
        } else {
            (cfg.tol_grad * 1e3).min(1e-2)
        };
        let eval = |z: &[f64]| -> (f64, Vec<f64>) {
            let (energy, action) = grid.energy_and_action(Exec::default(), z, p, eps);
            let j = energy / p - vol * dot(rhs, z);
            let g = action.iter().zip(rhs).map(|(a, b)| a - b).collect();
            (j, g)
        };
        let (mut j, mut g) = eval(&z);
        let mut bb_long = true;
        loop {
            let gg = dot(&g, &g);
            rel = gg.sqrt() / fnorm;
            if rel <= tol {
                break;
            }
            if iterations >= cfg.max_iters {
                return Err(iteration_limit(grid, z, iterations, rel));
            }
            let mut step = alpha;
            let mut accepted = None;
            for _ in 0..MAX_BACKTRACKS {
                let trial: Vec<f64> = z.iter().zip(&g).map(|(z, g)| z - step * g).collect();
                let (jt, gt) = eval(&trial);
                let slope = vol * gg;
                let sufficient = jt <= j - ARMIJO * step * slope;
                // Near the optimum J stalls at roundoff; fall back to the
                // derivative form of the Armijo test there.
                let flat = (jt - j).abs() <= 1e-10 * j.abs().max(f64::MIN_POSITIVE);
                let approx = flat && dot(&gt, &g) >= -(1.0 - 2.0 * ARMIJO) * gg;
                if jt.is_finite() && (sufficient || approx) {
                    accepted = Some((trial, jt, gt));
                    break;
                }
                // Minimizer of the quadratic through J(z), its slope, and J(trial).
                let curvature = jt - j + step * slope;
                let next = if curvature > 0.0 && jt.is_finite() {
                    0.5 * slope * step * step / curvature
                } else {
                    0.5 * step
                };
                step = next.clamp(0.1 * step, 0.5 * step);
            }
            let Some((trial, jt, gt)) = accepted else {
                return Err(iteration_limit(grid, z, iterations, rel));
            };
            let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
            // s = −step·g
            let sy = -step * dot(&g, &y);
            let ss = step * step * gg;
            let yy = dot(&y, &y);
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
            z = trial;
            j = jt;
            g = gt;
            iterations += 1;
        }
    }
    Ok(InnerSolution {
        field: Field::from_values(grid, z)?,
        iterations,
        rel_grad: rel,
    })
}

/// J(z) = (1/p)·E_eps(z) − ⟨f, z⟩.
pub fn inner_energy(f: &DualField, z: &Field, p: f64, eps: f64) -> Result<f64> {
    let e = crate::mesh::p_energy(z, p, eps)?;
    Ok(e / p - crate::operators::pairing(f, z)?)
}
