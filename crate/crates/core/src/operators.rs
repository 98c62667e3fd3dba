//! The p-Laplace operator A, the lower-order operator B, and the
//! volume-weighted duality pairing between them and fields.
//!
//! A functional is stored as one value per interior node; the pairing
//! multiplies by the cell volume, so ⟨d, w⟩ = Σ d_i w_i · vol.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::mesh::{Field, Grid};

#[derive(Debug, Clone, PartialEq)]
pub struct DualField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl DualField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        DualField {
            grid: Arc::clone(grid),
            values: vec![0.0; grid.num_nodes()],
        }
    }

    /// Samples a density `g`, so that ⟨d, w⟩ ≈ ∫ g w.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: &Arc<Grid>, g: F) -> Self {
        DualField {
            grid: Arc::clone(grid),
            values: (0..grid.num_nodes()).map(|i| g(&grid.node_coords(i))).collect(),
        }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_nodes() {
            return Err(Error::DimensionMismatch {
                expected: grid.num_nodes(),
                got: values.len(),
            });
        }
        Ok(DualField {
            grid: Arc::clone(grid),
            values,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scaled(&self, t: f64) -> DualField {
        DualField {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| t * v).collect(),
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &DualField, b: f64) -> Result<DualField> {
        if !(Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(DualField {
            grid: Arc::clone(&self.grid),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        })
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

fn check_exponent(name: &'static str, value: f64) -> Result<()> {
    if value > 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            requirement: format!("{name} > 1"),
        })
    }
}

/// A_eps(u) = −div_H((|∇_H u|² + eps²)^{(p−2)/2} ∇_H u).
pub fn apply_a(u: &Field, p: f64, eps: f64) -> Result<DualField> {
    apply_a_with(Exec::default(), u, p, eps)
}

pub fn apply_a_with(exec: Exec, u: &Field, p: f64, eps: f64) -> Result<DualField> {
    check_exponent("p", p)?;
    let (_, values) = u.grid().energy_and_action(exec, u.values(), p, eps);
    Ok(DualField {
        grid: Arc::clone(u.grid()),
        values,
    })
}

/// B(u) = |u|^{q−2}u, pointwise.
pub fn apply_b(u: &Field, q: f64) -> Result<DualField> {
    check_exponent("q", q)?;
    Ok(DualField {
        grid: Arc::clone(u.grid()),
        values: u.values().iter().map(|&v| signed_power(v, q - 1.0)).collect(),
    })
}

/// |v|^{e}·sign(v), with 0 ↦ 0.
pub(crate) fn signed_power(v: f64, e: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.signum() * v.abs().powf(e)
    }
}

pub fn pairing(d: &DualField, w: &Field) -> Result<f64> {
    if !w.same_grid(&d.grid) {
        return Err(Error::GridMismatch);
    }
    Ok(raw_pairing(&d.grid, &d.values, w.values()))
}

pub(crate) fn raw_pairing(grid: &Grid, d: &[f64], w: &[f64]) -> f64 {
    Exec::default().sum(d.len(), |i| d[i] * w[i]) * grid.cell_volume()
}

/// Per-node normalizers ‖e_i‖_U of the unit basis fields.
pub(crate) fn basis_unorms(grid: &Grid, p: f64) -> Vec<f64> {
    Exec::default().map_collect(grid.num_nodes(), |i| grid.basis_energy(i, p).powf(1.0 / p))
}

/// Eigen-residual of (λ, u): the largest discrepancy
/// |⟨A(u) − λ‖u‖_q^{p−q} B(u), e_i⟩| over the unit basis fields e_i / ‖e_i‖_U,
/// divided by ‖u‖_U^{p−1}. Zero exactly at discrete eigenpairs and invariant
/// under u ↦ t·u.
pub fn residual(u: &Field, lam: f64, p: f64, q: f64) -> Result<f64> {
    check_exponent("p", p)?;
    check_exponent("q", q)?;
    if u.is_zero() {
        return Err(Error::ZeroField);
    }
    let grid = u.grid();
    let (energy, action) = grid.energy_and_action(Exec::default(), u.values(), p, 0.0);
    let lq = crate::mesh::lq_norm(u, q)?;
    let weights = basis_unorms(grid, p);
    Ok(residual_from_parts(grid, u.values(), &action, energy, lq, lam, p, q, &weights))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn residual_from_parts(
    grid: &Grid,
    u: &[f64],
    action: &[f64],
    energy: f64,
    lq: f64,
    lam: f64,
    p: f64,
    q: f64,
    basis_unorms: &[f64],
) -> f64 {
    let scale = lam * lq.powf(p - q);
    let vol = grid.cell_volume();
    let worst = Exec::default().max(u.len(), |i| {
        (action[i] - scale * signed_power(u[i], q - 1.0)).abs() * vol / basis_unorms[i]
    });
    worst / energy.powf((p - 1.0) / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupDescriptor;
    use crate::mesh::{build_grid, horizontal_gradient, lq_norm, p_energy};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grids() -> Vec<Arc<Grid>> {
        vec![
            build_grid(GroupDescriptor::euclidean2(), &[(0.0, 1.0), (0.0, 2.0)], &[5, 7]).unwrap(),
            build_grid(GroupDescriptor::heisenberg1(), &[(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)], &[4, 3, 5]).unwrap(),
        ]
    }

    fn random_field(grid: &Arc<Grid>, rng: &mut ChaCha8Rng) -> Field {
        Field::from_values(grid, (0..grid.num_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn summation_by_parts_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for g in grids() {
            for _ in 0..20 {
                let u = random_field(&g, &mut rng);
                let v = random_field(&g, &mut rng);
                let lhs = pairing(&apply_a(&u, 2.0, 0.0).unwrap(), &v).unwrap();
                let gu = horizontal_gradient(&u);
                let gv = horizontal_gradient(&v);
                let rhs: f64 = gu.values().iter().zip(gv.values()).map(|(a, b)| a * b).sum::<f64>() * g.cell_volume();
                assert!(close(lhs, rhs, 1e-12), "{lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn p2_action_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for g in grids() {
            let u = random_field(&g, &mut rng);
            let v = random_field(&g, &mut rng);
            let sum = apply_a(&u.combine(1.0, &v, 1.0).unwrap(), 2.0, 0.0).unwrap();
            let parts = apply_a(&u, 2.0, 0.0).unwrap().combine(1.0, &apply_a(&v, 2.0, 0.0).unwrap(), 1.0).unwrap();
            for (a, b) in sum.values().iter().zip(parts.values()) {
                assert!(close(*a, *b, 1e-12));
            }
        }
    }

    #[test]
    fn b_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = &grids()[0];
        let u = random_field(g, &mut rng);
        for q in [1.5, 2.0, 3.0] {
            let b = apply_b(&u, q).unwrap();
            let neg = apply_b(&u.scaled(-1.0), q).unwrap();
            for (x, y) in b.values().iter().zip(neg.values()) {
                assert_eq!(*x, -*y);
            }
            let lq = lq_norm(&u, q).unwrap();
            assert!(close(pairing(&b, &u).unwrap(), lq.powf(q), 1e-13));
        }
        assert!(apply_b(&Field::zeros(g), 1.5).unwrap().is_zero());
        assert!(apply_b(&u, 1.0).is_err());
    }

    #[test]
    fn pairing_edge_cases() {
        let gs = grids();
        let d = DualField::from_values(&gs[0], vec![1.0; gs[0].num_nodes()]).unwrap();
        assert_eq!(pairing(&d, &Field::zeros(&gs[0])).unwrap(), 0.0);
        assert!(matches!(pairing(&d, &Field::zeros(&gs[1])), Err(Error::GridMismatch)));
    }

    #[test]
    fn coercivity_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for g in grids() {
            let u = random_field(&g, &mut rng);
            for p in [1.3, 2.0, 2.5, 4.0] {
                let lhs = pairing(&apply_a(&u, p, 0.0).unwrap(), &u).unwrap();
                assert!(close(lhs, p_energy(&u, p, 0.0).unwrap(), 1e-12));
            }
        }
    }

    #[test]
    fn residual_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for g in grids() {
            let u = random_field(&g, &mut rng);
            for &(p, q) in &[(2.0, 2.0), (1.5, 3.0), (3.0, 1.5)] {
                let r0 = residual(&u, 0.0, p, q).unwrap();
                assert!(r0 > 0.0);
                let lam = 3.7;
                let r = residual(&u, lam, p, q).unwrap();
                for t in [-2.5, 0.01, 7.0] {
                    let rt = residual(&u.scaled(t), lam, p, q).unwrap();
                    assert!(close(r, rt, 1e-10), "{r} vs {rt}");
                }
            }
            assert!(matches!(residual(&Field::zeros(&g), 1.0, 2.0, 2.0), Err(Error::ZeroField)));
        }
    }

    #[test]
    fn residual_is_at_most_one_for_lambda_zero() {
        // |⟨A u, e⟩| ≤ ‖u‖_U^{p−1}‖e‖_U, so with λ = 0 the residual is bounded by 1.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for g in grids() {
            for p in [1.5, 2.0, 3.0] {
                let u = random_field(&g, &mut rng);
                assert!(residual(&u, 0.0, p, 2.0).unwrap() <= 1.0 + 1e-12);
            }
        }
    }
}
