//! Regularity diagnostics for computed eigenfunctions: the L∞ thresholds of
//! the De Giorgi argument, superlevel-set decay, interior positivity, and the
//! discrete embedding constant.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::eigensolver::{normalize, rayleigh_minimize, EigenResult, SolverConfig};
use crate::error::{Error, Result};
use crate::group::check_exponents;
use crate::mesh::{lq_norm, Field, Grid};

pub const DEFAULT_CORE_SHRINK: f64 = 0.5;
/// Ratio of consecutive levels in the decay checks.
pub const LEVEL_RATIO: f64 = 1.25;
const MAX_LEVELS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegularityCase {
    /// q ≤ p
    I,
    /// q > p
    II,
}

impl fmt::Display for RegularityCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegularityCase::I => "I",
            RegularityCase::II => "II",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub k: f64,
    pub case: RegularityCase,
    /// p(1/q − 1/p + 1/ν), Case II only.
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCheck {
    pub k: f64,
    pub measure: f64,
    /// ∫_{A(k)} (u − k)
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub sup_norm: f64,
    pub k_threshold: f64,
    pub case_tag: RegularityCase,
    pub alpha: Option<f64>,
    pub level_measures: Vec<(f64, f64)>,
    pub min_on_core: f64,
    pub positive: bool,
    /// Embedding exponent l of the constant used in the thresholds.
    pub sobolev_l: f64,
    /// Best discrete C with ‖u‖_l ≤ C |Ω|^{1/l−1/p+1/ν} ‖X u‖_p.
    pub sobolev_constant: f64,
    pub decay_checks: Vec<DecayCheck>,
    pub decay_ok: bool,
}

fn embedding_exponent(p: f64, l: f64, nu: usize) -> f64 {
    1.0 / l - 1.0 / p + 1.0 / nu as f64
}

/// C = λ^{−1/p} |Ω|^{−(1/l−1/p+1/ν)} for the minimal (p,l) quotient λ.
pub fn sobolev_constant_from_lambda(lambda: f64, grid: &Grid, p: f64, l: f64) -> f64 {
    let nu = grid.group().homogeneous_dim();
    lambda.powf(-1.0 / p) * grid.domain_volume().powf(-embedding_exponent(p, l, nu))
}

/// Discrete best constant in ‖u‖_l ≤ C |Ω|^{1/l−1/p+1/ν} ‖X u‖_p, from a
/// Rayleigh minimization of the (p,l) problem.
pub fn estimate_sobolev_constant(grid: &std::sync::Arc<Grid>, p: f64, l: f64) -> Result<f64> {
    check_exponents(p, l, grid.group().homogeneous_dim())?;
    let result = rayleigh_minimize(&SolverConfig::new(grid, p, l), None)?;
    Ok(sobolev_constant_from_lambda(result.lambda_hat, grid, p, l))
}

fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            requirement: format!("{name} > 0"),
        })
    }
}

/// Level above which the superlevel sets of a normalized eigenfunction shrink
/// geometrically. `s` is the constant multiplying ‖X v‖_p^p in the embedding.
pub fn linf_threshold(lambda: f64, s: f64, l1_norm: f64, p: f64, q: f64, nu: usize) -> Result<Threshold> {
    require_positive("lambda", lambda)?;
    require_positive("S", s)?;
    require_positive("l1_norm", l1_norm)?;
    check_exponents(p, q, nu)?;
    if q <= p {
        let k0 = (2f64.powf(p) * s * lambda).powf(nu as f64 / p) * l1_norm;
        return Ok(Threshold {
            k: k0.max(1.0),
            case: RegularityCase::I,
            alpha: None,
        });
    }
    let alpha = p * embedding_exponent(p, q, nu);
    if !(alpha > 0.0) {
        return Err(Error::Internal(format!("alpha = {alpha} is not positive")));
    }
    Ok(Threshold {
        k: (s * lambda * 2f64.powf(q)).powf(1.0 / alpha) * l1_norm,
        case: RegularityCase::II,
        alpha: Some(alpha),
    })
}

/// |A(k)| = vol · #{i : u_i > k}.
pub fn level_set_measure(u: &Field, k: f64) -> f64 {
    let count = u.values().iter().filter(|&&v| v > k).count();
    count as f64 * u.grid().cell_volume()
}

/// ∫_{A(k)} (u − k).
pub fn excess_integral(u: &Field, k: f64) -> f64 {
    let sum = u.values().iter().filter(|&&v| v > k).fold(0.0, |acc, &v| acc + (v - k));
    sum * u.grid().cell_volume()
}

/// Whether every node value is positive, and the minimum over the nodes of
/// the central sub-box whose sides are `core_shrink` times the box sides.
/// Falls back to the node nearest the centre when the sub-box holds none.
pub fn positivity_check(u: &Field, core_shrink: f64) -> Result<(bool, f64)> {
    if !(core_shrink > 0.0 && core_shrink < 1.0) {
        return Err(Error::OutOfRange {
            name: "core_shrink",
            value: core_shrink,
            requirement: "0 < core_shrink < 1".into(),
        });
    }
    let grid = u.grid();
    let bounds = grid.bounds();
    let positive = u.values().iter().all(|&v| v > 0.0);
    let mut core_min = f64::INFINITY;
    let mut nearest = (f64::INFINITY, 0usize);
    for (i, &v) in u.values().iter().enumerate() {
        let x = grid.node_coords(i);
        let mut inside = true;
        let mut dist = 0.0f64;
        for (xj, &(lo, hi)) in x.iter().zip(&bounds) {
            let offset = (xj - 0.5 * (lo + hi)).abs();
            inside &= offset <= 0.5 * core_shrink * (hi - lo) + 1e-12 * (hi - lo);
            dist = dist.max(offset / (hi - lo));
        }
        if inside {
            core_min = core_min.min(v);
        }
        if dist < nearest.0 {
            nearest = (dist, i);
        }
    }
    if core_min == f64::INFINITY {
        core_min = u.values()[nearest.1];
    }
    Ok((positive, core_min))
}

/// Levels k·1.25^m from `k_start` while A(k) is nonempty (the first level is
/// always recorded), with the decay inequality evaluated at each.
pub fn decay_checks(u: &Field, lambda: f64, s: f64, p: f64, q: f64, threshold: &Threshold, nu: usize) -> Vec<DecayCheck> {
    let (factor, exponent) = match threshold.case {
        RegularityCase::I => (
            (lambda * s * 2f64.powf(p)).powf(1.0 / (p - 1.0)),
            1.0 + p / (nu as f64 * (p - 1.0)),
        ),
        RegularityCase::II => {
            let alpha = threshold.alpha.unwrap_or(f64::NAN);
            ((lambda * s * 2f64.powf(q)).powf(1.0 / (q - 1.0)), 1.0 + alpha / (q - 1.0))
        }
    };
    let mut out = Vec::new();
    let mut k = threshold.k;
    for m in 0..MAX_LEVELS {
        let measure = level_set_measure(u, k);
        if m > 0 && measure == 0.0 {
            break;
        }
        let lhs = excess_integral(u, k);
        let rhs = factor * k * measure.powf(exponent);
        out.push(DecayCheck {
            k,
            measure,
            lhs,
            rhs,
            holds: lhs <= rhs * (1.0 + 1e-12),
        });
        k *= LEVEL_RATIO;
    }
    out
}

/// Diagnostics for a computed eigenpair of the (p,q) problem on `cfg.grid`.
///
/// Case I uses the (p,p) embedding constant, Case II the (p,q) one; the
/// latter is read off the eigenvalue itself, the former needs a separate
/// minimization when q < p.
pub fn regularity_report(result: &EigenResult, cfg: &SolverConfig, core_shrink: f64) -> Result<RegularityReport> {
    let grid = &cfg.grid;
    let (p, q) = (cfg.p, cfg.q);
    let nu = grid.group().homogeneous_dim();
    let u = normalize(&result.eigenfunction, q)?;
    let lambda = result.lambda_hat;
    let l = if q > p { q } else { p };
    let sobolev = if l == q {
        sobolev_constant_from_lambda(lambda, grid, p, q)
    } else {
        estimate_sobolev_constant(grid, p, p)?
    };
    let s = sobolev.powf(p);
    let threshold = linf_threshold(lambda, s, lq_norm(&u, 1.0)?, p, q, nu)?;
    let checks = decay_checks(&u, lambda, s, p, q, &threshold, nu);
    let (positive, min_on_core) = positivity_check(&u, core_shrink)?;
    Ok(RegularityReport {
        sup_norm: u.sup_norm(),
        k_threshold: threshold.k,
        case_tag: threshold.case,
        alpha: threshold.alpha,
        level_measures: checks.iter().map(|c| (c.k, c.measure)).collect(),
        min_on_core,
        positive,
        sobolev_l: l,
        sobolev_constant: sobolev,
        decay_ok: checks.iter().all(|c| c.holds),
        decay_checks: checks,
    })
}
