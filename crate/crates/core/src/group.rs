//! Stratified (Carnot) groups: layer structure, dilations, homogeneous
//! dimension, and the coordinate model of the horizontal vector fields.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Concrete groups that ship with a horizontal field model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKind {
    /// ℝ² with the coordinate fields ∂x, ∂y.
    Euclidean2,
    /// The first Heisenberg group in symmetric exponential coordinates,
    /// X₁ = ∂x − (y/2)∂t, X₂ = ∂y + (x/2)∂t.
    Heisenberg1,
    /// Layer structure only; no field model, so no grid can be built on it.
    Stratified,
}

impl GroupKind {
    pub fn name(self) -> &'static str {
        match self {
            GroupKind::Euclidean2 => "euclidean2",
            GroupKind::Heisenberg1 => "heisenberg1",
            GroupKind::Stratified => "stratified",
        }
    }
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupDescriptor {
    layers: Vec<usize>,
    kind: GroupKind,
}

impl GroupDescriptor {
    pub fn euclidean2() -> Self {
        GroupDescriptor {
            layers: vec![2],
            kind: GroupKind::Euclidean2,
        }
    }

    pub fn heisenberg1() -> Self {
        GroupDescriptor {
            layers: vec![2, 1],
            kind: GroupKind::Heisenberg1,
        }
    }

    /// A descriptor carrying only the layer dimensions `n_1, …, n_m`.
    pub fn from_layers(layers: &[usize]) -> Result<Self> {
        homogeneous_dimension(layers)?;
        Ok(GroupDescriptor {
            layers: layers.to_vec(),
            kind: GroupKind::Stratified,
        })
    }

    pub fn layers(&self) -> &[usize] {
        &self.layers
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn step(&self) -> usize {
        self.layers.len()
    }

    /// N = Σ n_i.
    pub fn topological_dim(&self) -> usize {
        self.layers.iter().sum()
    }

    /// ν = Σ i·n_i.
    pub fn homogeneous_dim(&self) -> usize {
        homogeneous_dimension(&self.layers).expect("descriptor layers validated at construction")
    }

    /// dim V₁, the number of horizontal fields.
    pub fn horizontal_dim(&self) -> usize {
        self.layers[0]
    }

    /// Layer index (1-based) of every coordinate, i.e. its dilation exponent.
    pub fn dilation_exponents(&self) -> Vec<u32> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(i, &n)| std::iter::repeat(i as u32 + 1).take(n))
            .collect()
    }

    /// Conventional axis names used in field dumps.
    pub fn axis_names(&self) -> Vec<String> {
        match self.kind {
            GroupKind::Euclidean2 => vec!["x".into(), "y".into()],
            GroupKind::Heisenberg1 => vec!["x".into(), "y".into(), "t".into()],
            GroupKind::Stratified => (0..self.topological_dim())
                .map(|i| format!("x{}", i + 1))
                .collect(),
        }
    }
}

impl FromStr for GroupDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "euclidean2" => Ok(Self::euclidean2()),
            "heisenberg1" => Ok(Self::heisenberg1()),
            other => Err(Error::InvalidConfig(format!(
                "unknown group {other:?} (expected \"euclidean2\" or \"heisenberg1\")"
            ))),
        }
    }
}

/// ν = Σ i·n_i for the layer dimensions `n_1, …, n_m`.
pub fn homogeneous_dimension(layers: &[usize]) -> Result<usize> {
    match layers.first() {
        None => Err(Error::InvalidStratification("no layers given".into())),
        Some(&n1) if n1 < 2 => Err(Error::InvalidStratification(format!(
            "the first layer must have dimension at least 2, got {n1}"
        ))),
        _ if layers.contains(&0) => Err(Error::InvalidStratification(
            "layer dimensions must be positive".into(),
        )),
        _ => Ok(layers.iter().enumerate().map(|(i, n)| (i + 1) * n).sum()),
    }
}

/// ν* = νp/(ν − p), defined for 1 < p < ν.
pub fn critical_exponent(p: f64, nu: usize) -> Result<f64> {
    let nu_f = nu as f64;
    if !(p > 1.0 && p < nu_f) {
        return Err(Error::OutOfRange {
            name: "p",
            value: p,
            requirement: format!("1 < p < ν = {nu}"),
        });
    }
    Ok(nu_f * p / (nu_f - p))
}

/// Checks the standing exponent assumptions 1 < p < ν and 1 < q < ν*.
///
/// The borderline p = ν is accepted with ν* = ∞: there W₀^{1,ν} still embeds
/// compactly into every L^q with q < ∞, which is what the solvers rely on.
pub fn check_exponents(p: f64, q: f64, nu: usize) -> Result<()> {
    let nu_f = nu as f64;
    if !(p > 1.0 && p <= nu_f) {
        return Err(Error::OutOfRange {
            name: "p",
            value: p,
            requirement: format!("1 < p < ν = {nu} (p = ν admitted as the borderline case)"),
        });
    }
    if !(q > 1.0) {
        return Err(Error::OutOfRange {
            name: "q",
            value: q,
            requirement: "q > 1".into(),
        });
    }
    if p < nu_f {
        let crit = critical_exponent(p, nu)?;
        if q >= crit {
            return Err(Error::OutOfRange {
                name: "q",
                value: q,
                requirement: format!(
                    "the subcritical requirement 1 < q < ν* = νp/(ν−p) = {crit} (ν = {nu}, p = {p})"
                ),
            });
        }
    }
    Ok(())
}

/// Applies the dilation δ_s: a coordinate in layer i is scaled by s^i.
pub fn dilate(point: &[f64], s: f64, g: &GroupDescriptor) -> Result<Vec<f64>> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidDilation(s));
    }
    let exps = g.dilation_exponents();
    if point.len() != exps.len() {
        return Err(Error::DimensionMismatch {
            expected: exps.len(),
            got: point.len(),
        });
    }
    Ok(point
        .iter()
        .zip(exps)
        .map(|(x, e)| x * s.powi(e as i32))
        .collect())
}
