//! Independent ground truth on tiny grids.
//!
//! Two routes that share nothing with the iterative solvers beyond the
//! discretization itself: a dense symmetric eigendecomposition of the
//! assembled stiffness matrix (p = q = 2), and a derivative-free multistart
//! coordinate search on the Rayleigh quotient (any p, q).

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::mesh::{horizontal_gradient, Field, Grid};
use crate::operators::DualField;

/// Dimensionality cap for the oracle.
pub const MAX_ORACLE_NODES: usize = 25;
/// Fewest random restarts accepted by the multistart route.
pub const MIN_RESTARTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    DenseEig,
    Multistart,
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub lambda_star: f64,
    /// Unit L^q norm, node sum ≥ 0.
    pub minimizer: Field,
    pub method: OracleMethod,
    pub restarts_used: usize,
    /// Set when no random restart reached the value found from the positive start.
    pub warning: bool,
}

fn check_cap(grid: &Grid) -> Result<()> {
    if grid.num_nodes() > MAX_ORACLE_NODES {
        return Err(Error::OracleTooLarge {
            nodes: grid.num_nodes(),
            cap: MAX_ORACLE_NODES,
        });
    }
    Ok(())
}

/// Smallest value of the Rayleigh quotient on `grid`: dense eigensolve when
/// p = q = 2, multistart search otherwise.
pub fn brute_force_lambda(grid: &Arc<Grid>, p: f64, q: f64, restarts: usize, seed: u64) -> Result<OracleResult> {
    if p == 2.0 && q == 2.0 {
        dense_lambda(grid)
    } else {
        multistart_lambda(grid, p, q, restarts, seed)
    }
}

/// Smallest generalized eigenvalue of the stiffness/mass pair at p = q = 2.
pub fn dense_lambda(grid: &Arc<Grid>) -> Result<OracleResult> {
    check_cap(grid)?;
    let n = grid.num_nodes();
    let gradients: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = Field::zeros(grid);
            e.values_mut()[i] = 1.0;
            horizontal_gradient(&e).values().to_vec()
        })
        .collect();
    // The mass matrix is vol·I and the stiffness carries the same vol factor.
    let stiffness = DMatrix::from_fn(n, n, |i, j| {
        gradients[i].iter().zip(&gradients[j]).map(|(a, b)| a * b).sum::<f64>()
    });
    let eig = SymmetricEigen::new(stiffness);
    let (k, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::Internal("empty eigendecomposition".into()))?;
    let vector = eig.eigenvectors.column(k).iter().copied().collect();
    Ok(OracleResult {
        lambda_star: lambda,
        minimizer: unit_sphere(Field::from_values(grid, vector)?, 2.0)?,
        method: OracleMethod::DenseEig,
        restarts_used: 0,
        warning: false,
    })
}

fn unit_sphere(u: Field, q: f64) -> Result<Field> {
    crate::eigensolver::normalize(&u, q)
}

fn lq_pow(u: &[f64], q: f64) -> f64 {
    u.iter().map(|v| v.abs().powf(q)).sum()
}

struct Quotient<'a> {
    grid: &'a Grid,
    p: f64,
    q: f64,
}

impl Quotient<'_> {
    fn eval(&self, u: &[f64]) -> f64 {
        let energy = self.grid.energy(Exec::Sequential, u, self.p, 0.0);
        let norm = (lq_pow(u, self.q) * self.grid.cell_volume()).powf(1.0 / self.q);
        energy / norm.powf(self.p)
    }
}

/// Vertex of the parabola through three points, if it opens upward.
fn parabola_vertex((a, fa): (f64, f64), (b, fb): (f64, f64), (c, fc): (f64, f64)) -> Option<f64> {
    let num = (b - a).powi(2) * (fb - fc) - (b - c).powi(2) * (fb - fa);
    let den = (b - a) * (fb - fc) - (b - c) * (fb - fa);
    if den.abs() < f64::MIN_POSITIVE || !(num / den).is_finite() {
        return None;
    }
    Some(b - 0.5 * num / den)
}

/// One-dimensional minimization of `phi` near 0 by bracketing and successive
/// quadratic fits. Returns the best (step, value) seen, never worse than `(0, f0)`.
fn quadratic_line_search<F: Fn(f64) -> f64>(phi: F, delta: f64, f0: f64) -> (f64, f64) {
    let mut best = (0.0, f0);
    let note = |s: f64, f: f64, best: &mut (f64, f64)| {
        if f < best.1 {
            *best = (s, f);
        }
    };
    let fp = phi(delta);
    note(delta, fp, &mut best);
    let fm = phi(-delta);
    note(-delta, fm, &mut best);
    // Bracket a minimum: three abscissae a < b < c with f(b) ≤ f(a), f(c).
    let (mut a, mut b, mut c) = ((-delta, fm), (0.0, f0), (delta, fp));
    if fp < f0 || fm < f0 {
        let dir = if fp < fm { 1.0 } else { -1.0 };
        let (mut lo, mut mid) = ((0.0, f0), (dir * delta, fp.min(fm)));
        let mut hi = mid;
        let mut bracketed = false;
        for _ in 0..60 {
            let s = mid.0 + 1.618 * (mid.0 - lo.0);
            let f = phi(s);
            note(s, f, &mut best);
            hi = (s, f);
            if f >= mid.1 {
                bracketed = true;
                break;
            }
            lo = mid;
            mid = hi;
        }
        if !bracketed {
            return best;
        }
        let mut pts = [lo, mid, hi];
        pts.sort_by(|x, y| x.0.total_cmp(&y.0));
        (a, b, c) = (pts[0], pts[1], pts[2]);
    }
    for _ in 0..40 {
        if (c.0 - a.0).abs() <= 1e-12 * (1.0 + b.0.abs()) {
            break;
        }
        let golden = |a: f64, b: f64, c: f64| {
            if b - a > c - b {
                b - 0.381_966 * (b - a)
            } else {
                b + 0.381_966 * (c - b)
            }
        };
        let mut x = match parabola_vertex(a, b, c) {
            Some(x) if x > a.0 && x < c.0 && (x - b.0).abs() > 1e-14 * (1.0 + b.0.abs()) => x,
            _ => golden(a.0, b.0, c.0),
        };
        if (x - b.0).abs() < 1e-14 * (1.0 + b.0.abs()) {
            x = golden(a.0, b.0, c.0);
        }
        let fx = phi(x);
        note(x, fx, &mut best);
        if fx <= b.1 {
            if x < b.0 {
                c = b;
            } else {
                a = b;
            }
            b = (x, fx);
        } else if x < b.0 {
            a = (x, fx);
        } else {
            c = (x, fx);
        }
        if (a.1 - b.1).abs() <= 1e-15 * b.1.abs() && (c.1 - b.1).abs() <= 1e-15 * b.1.abs() {
            break;
        }
    }
    best
}

const MAX_SWEEPS: usize = 20_000;

/// Coordinate-wise descent from `start`; returns the final quotient and point.
/// Coordinate-wise descent of `eval` from `start`. After each sweep
/// `rescale` may renormalize the point in place, returning the factor applied.
fn coordinate_search<F, R>(eval: F, rescale: R, start: Vec<f64>) -> (f64, Vec<f64>)
where
    F: Fn(&[f64]) -> f64,
    R: Fn(&mut [f64]) -> f64,
{
    let n = start.len();
    let mut u = start;
    let mut value = eval(&u);
    let scale = match u.iter().fold(0.0f64, |m, v| m.max(v.abs())) {
        s if s > 0.0 => s,
        _ => 1.0,
    };
    let mut delta = vec![0.1 * scale; n];
    for _ in 0..MAX_SWEEPS {
        let before = value;
        for i in 0..n {
            let base = u[i];
            let phi = |s: f64| {
                let mut v = u.clone();
                v[i] = base + s;
                eval(&v)
            };
            let (s, fs) = quadratic_line_search(phi, delta[i], value);
            if fs < value {
                u[i] = base + s;
                value = fs;
                delta[i] = s.abs().max(1e-6 * scale);
            } else {
                delta[i] = (0.5 * delta[i]).max(1e-9 * scale);
            }
        }
        let factor = rescale(&mut u);
        delta.iter_mut().for_each(|d| *d *= factor);
        if before - value <= 1e-15 * value.abs() {
            break;
        }
    }
    (value, u)
}

/// Best local minimum of the Rayleigh quotient over the all-ones start and
/// `restarts` random points of the unit L^q sphere. Restarts run concurrently;
/// the result depends only on `seed`.
pub fn multistart_lambda(grid: &Arc<Grid>, p: f64, q: f64, restarts: usize, seed: u64) -> Result<OracleResult> {
    check_cap(grid)?;
    if !(p > 1.0 && q > 1.0) {
        return Err(Error::OutOfRange {
            name: if p > 1.0 { "q" } else { "p" },
            value: if p > 1.0 { q } else { p },
            requirement: "p > 1 and q > 1".into(),
        });
    }
    if restarts < MIN_RESTARTS {
        return Err(Error::InvalidConfig(format!(
            "multistart needs at least {MIN_RESTARTS} restarts, got {restarts}"
        )));
    }
    let n = grid.num_nodes();
    let quotient = Quotient { grid, p, q };
    let runs = Exec::default().map_collect(restarts + 1, |r| {
        let start: Vec<f64> = if r == 0 {
            vec![1.0; n]
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            if v.iter().all(|&x| x == 0.0) {
                v[0] = 1.0;
            }
            v
        };
        let rescale = |u: &mut [f64]| {
            let factor = 1.0 / (lq_pow(u, q) * grid.cell_volume()).powf(1.0 / q);
            u.iter_mut().for_each(|v| *v *= factor);
            factor
        };
        coordinate_search(|u| quotient.eval(u), rescale, start)
    });
    let positive_value = runs[0].0;
    let best_random = runs[1..].iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let (best, _) = runs
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r.0))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .expect("at least one run");
    let (lambda_star, minimizer) = runs[best].clone();
    Ok(OracleResult {
        lambda_star,
        minimizer: unit_sphere(Field::from_values(grid, minimizer)?, q)?,
        method: OracleMethod::Multistart,
        restarts_used: restarts,
        warning: best_random > positive_value * (1.0 + 1e-6),
    })
}

/// Minimizer of J(z) = (1/p)·E(z) − ⟨f, z⟩ at eps = 0, by the same
/// multistart coordinate search: the zero field plus `restarts` random starts.
pub fn brute_force_inner(f: &DualField, p: f64, restarts: usize, seed: u64) -> Result<Field> {
    let grid = f.grid();
    check_cap(grid)?;
    if !(p > 1.0) {
        return Err(Error::OutOfRange {
            name: "p",
            value: p,
            requirement: "p > 1".into(),
        });
    }
    let n = grid.num_nodes();
    let vol = grid.cell_volume();
    let rhs = f.values();
    let objective = |z: &[f64]| {
        let linear: f64 = z.iter().zip(rhs).map(|(a, b)| a * b).sum();
        grid.energy(Exec::Sequential, z, p, 0.0) / p - vol * linear
    };
    let runs = Exec::default().map_collect(restarts + 1, |r| {
        let start = if r == 0 {
            vec![0.0; n]
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
        };
        coordinate_search(objective, |_: &mut [f64]| 1.0, start)
    });
    let best = runs
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one run");
    Field::from_values(grid, best.1)
}
