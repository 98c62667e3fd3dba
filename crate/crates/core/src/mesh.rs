//! Cartesian grids over boxes with zero Dirichlet extension, fields on them,
//! and the discrete horizontal gradient, p-energy and L^q norms.
//!
//! Nodes are the interior grid points, stored in C order (last axis
//! fastest). The horizontal gradient is formed from forward differences and
//! lives on the *gradient lattice*: the interior nodes together with the
//! boundary layer on each low face. Point `p` of that lattice sits at
//! `lo + p·h` per axis with `p ∈ 0..=n`, so every difference `u(P+e_j) − u(P)`
//! touching an interior node appears exactly once. The divergence used by the
//! operators is the negative adjoint of this gradient, so the discrete pairing
//! ⟨−div F, w⟩ = Σ F·∇_H w · vol is exact.

use std::io::{self, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::group::{dilate, GroupDescriptor, GroupKind};

/// Largest topological dimension with a shipped field model.
pub const MAX_AXES: usize = 3;

type Index = [usize; MAX_AXES];
type Coefficients = [[f64; MAX_AXES]; MAX_AXES];

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    group: GroupDescriptor,
    lo: Vec<f64>,
    hi: Vec<f64>,
    resolution: Vec<usize>,
    spacing: Vec<f64>,
    cell_volume: f64,
    node_strides: Vec<usize>,
    point_strides: Vec<usize>,
    num_nodes: usize,
    num_points: usize,
}

/// Builds the grid with `resolution[j]` interior nodes along axis `j` of the box.
pub fn build_grid(
    group: GroupDescriptor,
    bounds: &[(f64, f64)],
    resolution: &[usize],
) -> Result<Arc<Grid>> {
    Grid::new(group, bounds, resolution).map(Arc::new)
}

fn c_strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for a in (0..shape.len().saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * shape[a + 1];
    }
    strides
}

impl Grid {
    pub fn new(group: GroupDescriptor, bounds: &[(f64, f64)], resolution: &[usize]) -> Result<Self> {
        if group.kind() == GroupKind::Stratified {
            return Err(Error::InvalidGrid(
                "no horizontal field model for a bare stratification".into(),
            ));
        }
        let dim = group.topological_dim();
        debug_assert!(dim <= MAX_AXES);
        if bounds.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bounds.len(),
            });
        }
        if resolution.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: resolution.len(),
            });
        }
        for (a, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::InvalidGrid(format!(
                    "axis {a} has nonpositive extent ({lo}, {hi})"
                )));
            }
        }
        if let Some(a) = resolution.iter().position(|&n| n == 0) {
            return Err(Error::InvalidGrid(format!(
                "axis {a} needs at least one interior node"
            )));
        }
        let spacing: Vec<f64> = bounds
            .iter()
            .zip(resolution)
            .map(|(&(lo, hi), &n)| (hi - lo) / (n as f64 + 1.0))
            .collect();
        let point_shape: Vec<usize> = resolution.iter().map(|n| n + 1).collect();
        Ok(Grid {
            group,
            lo: bounds.iter().map(|b| b.0).collect(),
            hi: bounds.iter().map(|b| b.1).collect(),
            cell_volume: spacing.iter().product(),
            spacing,
            node_strides: c_strides(resolution),
            point_strides: c_strides(&point_shape),
            num_nodes: resolution.iter().product(),
            num_points: point_shape.iter().product(),
            resolution: resolution.to_vec(),
        })
    }

    /// The image of this grid under the dilation δ_s: same node counts, box
    /// corners dilated, spacings rescaled by s^i on layer-i axes.
    pub fn dilated(&self, s: f64) -> Result<Arc<Grid>> {
        let lo = dilate(&self.lo, s, &self.group)?;
        let hi = dilate(&self.hi, s, &self.group)?;
        let bounds: Vec<_> = lo.into_iter().zip(hi).collect();
        build_grid(self.group.clone(), &bounds, &self.resolution)
    }

    pub fn group(&self) -> &GroupDescriptor {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.resolution.len()
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.lo.iter().copied().zip(self.hi.iter().copied()).collect()
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    /// |Ω| of the box.
    pub fn domain_volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Size of the gradient lattice.
    pub fn num_points(&self) -> usize {
        self.num_points
    }

    fn node_index(&self, node: usize) -> Index {
        let mut idx = [0; MAX_AXES];
        for a in 0..self.dim() {
            idx[a] = (node / self.node_strides[a]) % self.resolution[a];
        }
        idx
    }

    fn point_index(&self, point: usize) -> Index {
        let mut idx = [0; MAX_AXES];
        for a in 0..self.dim() {
            idx[a] = (point / self.point_strides[a]) % (self.resolution[a] + 1);
        }
        idx
    }

    /// Interior node sitting at lattice position `p`, if any.
    fn node_at(&self, p: &Index) -> Option<usize> {
        let mut node = 0;
        for a in 0..self.dim() {
            if p[a] == 0 || p[a] > self.resolution[a] {
                return None;
            }
            node += (p[a] - 1) * self.node_strides[a];
        }
        Some(node)
    }

    fn point_of_node(&self, idx: &Index) -> usize {
        (0..self.dim())
            .map(|a| (idx[a] + 1) * self.point_strides[a])
            .sum()
    }

    pub fn node_coords(&self, node: usize) -> Vec<f64> {
        let idx = self.node_index(node);
        (0..self.dim())
            .map(|a| self.lo[a] + (idx[a] + 1) as f64 * self.spacing[a])
            .collect()
    }

    pub fn point_coords(&self, point: usize) -> Vec<f64> {
        let idx = self.point_index(point);
        (0..self.dim())
            .map(|a| self.lo[a] + idx[a] as f64 * self.spacing[a])
            .collect()
    }

    fn lattice_coords(&self, p: &Index) -> [f64; MAX_AXES] {
        let mut x = [0.0; MAX_AXES];
        for a in 0..self.dim() {
            x[a] = self.lo[a] + p[a] as f64 * self.spacing[a];
        }
        x
    }

    /// Row k holds the coordinate expansion X_k = Σ_j a_kj ∂_j at `x`.
    fn coefficients(&self, x: &[f64; MAX_AXES]) -> Coefficients {
        let mut c = [[0.0; MAX_AXES]; MAX_AXES];
        match self.group.kind() {
            GroupKind::Euclidean2 => {
                c[0][0] = 1.0;
                c[1][1] = 1.0;
            }
            GroupKind::Heisenberg1 => {
                c[0][0] = 1.0;
                c[0][2] = -0.5 * x[1];
                c[1][1] = 1.0;
                c[1][2] = 0.5 * x[0];
            }
            GroupKind::Stratified => unreachable!("grids require a field model"),
        }
        c
    }

    /// Forward differences D_j u at lattice position `p`.
    fn differences(&self, u: &[f64], p: &Index) -> [f64; MAX_AXES] {
        let here = self.node_at(p).map_or(0.0, |n| u[n]);
        let mut d = [0.0; MAX_AXES];
        for j in 0..self.dim() {
            let mut next = *p;
            next[j] += 1;
            let there = self.node_at(&next).map_or(0.0, |n| u[n]);
            d[j] = (there - here) / self.spacing[j];
        }
        d
    }

    fn horizontal_at(&self, u: &[f64], p: &Index) -> ([f64; MAX_AXES], Coefficients) {
        let d = self.differences(u, p);
        let c = self.coefficients(&self.lattice_coords(p));
        let mut g = [0.0; MAX_AXES];
        for k in 0..self.group.horizontal_dim() {
            g[k] = (0..self.dim()).map(|j| c[k][j] * d[j]).sum();
        }
        (g, c)
    }

    /// Energy Σ (|∇_H u|² + eps²)^{p/2}·vol together with the node array
    /// d = −div_H((|∇_H u|² + eps²)^{(p−2)/2} ∇_H u), i.e. the representation
    /// of A_eps(u) against the volume-weighted pairing.
    pub(crate) fn energy_and_action(&self, exec: Exec, u: &[f64], p: f64, eps: f64) -> (f64, Vec<f64>) {
        let dim = self.dim();
        let nh = self.group.horizontal_dim();
        let width = dim + 1;
        let eps2 = eps * eps;
        // Per lattice point: the flux projected on coordinate directions,
        // G_j = Σ_k a_kj F_k, followed by the energy density.
        let mut buf = vec![0.0; self.num_points * width];
        exec.fill_rows(&mut buf, width, |point, row| {
            let pidx = self.point_index(point);
            let (g, c) = self.horizontal_at(u, &pidx);
            let s: f64 = g[..nh].iter().map(|v| v * v).sum::<f64>() + eps2;
            let (weight, density) = if s > 0.0 {
                (s.powf(0.5 * p - 1.0), s.powf(0.5 * p))
            } else {
                (0.0, 0.0)
            };
            for j in 0..dim {
                row[j] = weight * (0..nh).map(|k| c[k][j] * g[k]).sum::<f64>();
            }
            row[dim] = density;
        });
        let energy = exec.sum(self.num_points, |pt| buf[pt * width + dim]) * self.cell_volume;
        let mut action = vec![0.0; self.num_nodes];
        exec.fill(&mut action, |node| {
            let idx = self.node_index(node);
            let own = self.point_of_node(&idx);
            (0..dim)
                .map(|j| {
                    let below = own - self.point_strides[j];
                    (buf[below * width + j] - buf[own * width + j]) / self.spacing[j]
                })
                .sum()
        });
        (energy, action)
    }

    pub(crate) fn energy(&self, exec: Exec, u: &[f64], p: f64, eps: f64) -> f64 {
        let nh = self.group.horizontal_dim();
        let eps2 = eps * eps;
        exec.sum(self.num_points, |point| {
            let (g, _) = self.horizontal_at(u, &self.point_index(point));
            let s: f64 = g[..nh].iter().map(|v| v * v).sum::<f64>() + eps2;
            s.powf(0.5 * p)
        }) * self.cell_volume
    }

    /// ‖e_i‖_U^p for the unit basis field at `node`.
    pub(crate) fn basis_energy(&self, node: usize, p: f64) -> f64 {
        let idx = self.node_index(node);
        let own = idx.map(|i| i + 1);
        let nh = self.group.horizontal_dim();
        let norm_p = |g: &[f64]| g[..nh].iter().map(|v| v * v).sum::<f64>().powf(0.5 * p);
        // At the node's own lattice point every D_j equals −1/h_j.
        let c = self.coefficients(&self.lattice_coords(&own));
        let mut g = [0.0; MAX_AXES];
        for k in 0..nh {
            g[k] = -(0..self.dim()).map(|j| c[k][j] / self.spacing[j]).sum::<f64>();
        }
        let mut total = norm_p(&g);
        // At own − e_j only D_j = +1/h_j survives.
        for j in 0..self.dim() {
            let mut below = own;
            below[j] -= 1;
            let c = self.coefficients(&self.lattice_coords(&below));
            let mut g = [0.0; MAX_AXES];
            for k in 0..nh {
                g[k] = c[k][j] / self.spacing[j];
            }
            total += norm_p(&g);
        }
        total * self.cell_volume
    }
}

/// A real value per interior node; zero on and outside the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Field {
            grid: Arc::clone(grid),
            values: vec![0.0; grid.num_nodes()],
        }
    }

    pub fn constant(grid: &Arc<Grid>, value: f64) -> Self {
        Field {
            grid: Arc::clone(grid),
            values: vec![value; grid.num_nodes()],
        }
    }

    /// Samples `f` at the interior node coordinates.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: &Arc<Grid>, f: F) -> Self {
        let values = (0..grid.num_nodes())
            .map(|i| f(&grid.node_coords(i)))
            .collect();
        Field {
            grid: Arc::clone(grid),
            values,
        }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_nodes() {
            return Err(Error::DimensionMismatch {
                expected: grid.num_nodes(),
                got: values.len(),
            });
        }
        Ok(Field {
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

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_grid(&self, grid: &Arc<Grid>) -> bool {
        Arc::ptr_eq(&self.grid, grid) || *self.grid == **grid
    }

    pub fn scaled(&self, t: f64) -> Field {
        Field {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| t * v).collect(),
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Field, b: f64) -> Result<Field> {
        if !other.same_grid(&self.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Field {
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

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Writes one CSV row per interior node: coordinates, then the value.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let mut header = self.grid.group().axis_names();
        header.push("value".into());
        writeln!(out, "{}", header.join(","))?;
        for (i, v) in self.values.iter().enumerate() {
            for x in self.grid.node_coords(i) {
                write!(out, "{x},")?;
            }
            writeln!(out, "{v}")?;
        }
        Ok(())
    }
}

/// Horizontal gradient samples: `dim V₁` components per lattice point.
#[derive(Debug, Clone, PartialEq)]
pub struct HField {
    grid: Arc<Grid>,
    components: usize,
    values: Vec<f64>,
}

impl HField {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn num_points(&self) -> usize {
        self.grid.num_points()
    }

    pub fn at(&self, point: usize) -> &[f64] {
        &self.values[point * self.components..(point + 1) * self.components]
    }

    /// Lattice point coinciding with an interior node.
    pub fn point_of_node(&self, node: usize) -> usize {
        self.grid.point_of_node(&self.grid.node_index(node))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub fn horizontal_gradient(u: &Field) -> HField {
    let grid = &u.grid;
    let nh = grid.group().horizontal_dim();
    let mut values = vec![0.0; grid.num_points() * nh];
    Exec::default().fill_rows(&mut values, nh, |point, row| {
        let (g, _) = grid.horizontal_at(&u.values, &grid.point_index(point));
        row.copy_from_slice(&g[..nh]);
    });
    HField {
        grid: Arc::clone(grid),
        components: nh,
        values,
    }
}

/// Σ (|∇_H u|² + eps²)^{p/2}·vol; eps = 0 gives the discrete ∫|∇_H u|^p.
pub fn p_energy(u: &Field, p: f64, eps: f64) -> Result<f64> {
    p_energy_with(Exec::default(), u, p, eps)
}

pub fn p_energy_with(exec: Exec, u: &Field, p: f64, eps: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::OutOfRange {
            name: "p",
            value: p,
            requirement: "p > 1".into(),
        });
    }
    if !(eps >= 0.0) {
        return Err(Error::OutOfRange {
            name: "eps",
            value: eps,
            requirement: "eps ≥ 0".into(),
        });
    }
    Ok(u.grid.energy(exec, &u.values, p, eps))
}

/// (Σ |u_i|^q·vol)^{1/q}.
pub fn lq_norm(u: &Field, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::OutOfRange {
            name: "q",
            value: q,
            requirement: "q ≥ 1".into(),
        });
    }
    let v = &u.values;
    let sum = Exec::default().sum(v.len(), |i| v[i].abs().powf(q));
    Ok((sum * u.grid.cell_volume()).powf(1.0 / q))
}
