use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use subeigen::group::check_exponents;
use subeigen::inner_solver::InnerConfig;
use subeigen::{build_grid, GroupDescriptor, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Inverse,
    Rayleigh,
    Both,
}

impl MethodChoice {
    pub fn name(self) -> &'static str {
        match self {
            MethodChoice::Inverse => "inverse",
            MethodChoice::Rayleigh => "rayleigh",
            MethodChoice::Both => "both",
        }
    }
}

/// Everything a run or sweep needs. Missing JSON keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub group: String,
    /// Unit box of the group's dimension when absent.
    #[serde(rename = "box")]
    pub bounds: Option<Vec<[f64; 2]>>,
    /// One entry is broadcast to every axis.
    pub resolution: Vec<usize>,
    pub p: f64,
    pub q: f64,
    pub method: MethodChoice,
    /// Defaults to the exponent-dependent inner tolerance.
    pub tol_inner: Option<f64>,
    pub tol_outer: f64,
    pub eps_floor: f64,
    pub max_outer: usize,
    pub max_inner: Option<usize>,
    pub seed: u64,
    /// Seeded default starts per solve; the best converged result is kept.
    pub starts: usize,
    pub output_dir: PathBuf,
    pub dump_field: bool,
    pub oracle: bool,
    pub sweep_p: Option<Vec<f64>>,
    pub sweep_q: Option<Vec<f64>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            group: "euclidean2".into(),
            bounds: None,
            resolution: vec![32],
            p: 2.0,
            q: 2.0,
            method: MethodChoice::Inverse,
            tol_inner: None,
            tol_outer: 1e-6,
            eps_floor: subeigen::inner_solver::DEFAULT_EPS_FLOOR,
            max_outer: 500,
            max_inner: None,
            seed: 0,
            starts: 1,
            output_dir: PathBuf::from("out"),
            dump_field: false,
            oracle: false,
            sweep_p: None,
            sweep_q: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    pub fn group(&self) -> Result<GroupDescriptor, String> {
        self.group.parse().map_err(|e: subeigen::Error| e.to_string())
    }

    pub fn is_sweep(&self) -> bool {
        self.sweep_p.is_some() || self.sweep_q.is_some()
    }

    pub fn box_bounds(&self) -> Result<Vec<(f64, f64)>, String> {
        let dim = self.group()?.topological_dim();
        Ok(match &self.bounds {
            Some(b) => b.iter().map(|&[lo, hi]| (lo, hi)).collect(),
            None => vec![(0.0, 1.0); dim],
        })
    }

    pub fn resolution(&self) -> Result<Vec<usize>, String> {
        let dim = self.group()?.topological_dim();
        match self.resolution.len() {
            1 => Ok(vec![self.resolution[0]; dim]),
            n if n == dim => Ok(self.resolution.clone()),
            n => Err(format!("resolution has {n} entries; {} has dimension {dim}", self.group)),
        }
    }

    /// The standing assumption 1 < p < ν, 1 < q < ν*.
    pub fn check_regime(&self, p: f64, q: f64) -> Result<(), String> {
        let nu = self.group()?.homogeneous_dim();
        check_exponents(p, q, nu).map_err(|e| e.to_string())
    }

    pub fn solver_config(&self, p: f64, q: f64) -> Result<SolverConfig, String> {
        let grid = build_grid(self.group()?, &self.box_bounds()?, &self.resolution()?).map_err(|e| e.to_string())?;
        let mut cfg = SolverConfig::new(&grid, p, q);
        cfg.inner = InnerConfig::with_eps_floor(p, self.eps_floor);
        if let Some(t) = self.tol_inner {
            cfg.inner.tol_grad = t;
        }
        if let Some(m) = self.max_inner {
            cfg.inner.max_iters = m;
        }
        cfg.tol_outer = self.tol_outer;
        cfg.max_outer = self.max_outer;
        cfg.seed = self.seed;
        cfg.starts = self.starts;
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_keys() {
        let cfg: RunConfig = serde_json::from_str(r#"{"group": "heisenberg1", "p": 3, "resolution": [4]}"#).unwrap();
        assert_eq!(cfg.q, 2.0);
        assert_eq!(cfg.resolution().unwrap(), vec![4, 4, 4]);
        assert_eq!(cfg.box_bounds().unwrap(), vec![(0.0, 1.0); 3]);
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn regime_messages_name_the_inequality() {
        let cfg = RunConfig {
            group: "heisenberg1".into(),
            ..RunConfig::default()
        };
        let msg = cfg.check_regime(2.0, 4.0).unwrap_err();
        assert!(msg.contains("subcritical requirement"), "{msg}");
        assert!(cfg.check_regime(5.0, 2.0).is_err());
        assert!(cfg.check_regime(4.0, 2.0).is_ok());
        assert!(cfg.check_regime(2.0, 3.5).is_ok());
    }
}
