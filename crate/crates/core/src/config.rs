//! Versioned JSON experiment configuration.

use crate::decompose::{DEFAULT_R_CUT, DEFAULT_TAU};
use crate::error::{FggcError, Result};
use crate::flow::step_count;
use crate::initial::GaussianInit;
use crate::lsa::DEFAULT_RCOND;
use crate::mesh::{MeshSpec, NeighborStrategy};
use crate::potential::Potential;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Tssp,
    Fga,
    Fggc,
    FggcMultistep,
}

impl SolverKind {
    pub fn label(&self) -> &'static str {
        match self {
            SolverKind::Tssp => "tssp",
            SolverKind::Fga => "fga",
            SolverKind::Fggc => "fggc",
            SolverKind::FggcMultistep => "fggc-multistep",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialSpec {
    Gaussian(GaussianInit),
    /// Samples read from a field file on the configured grid.
    File { path: String },
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::Gaussian(GaussianInit::default())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default)]
    pub field: Option<String>,
    #[serde(default)]
    pub timing: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub solver: SolverKind,
    pub dim: usize,
    pub epsilon: f64,
    pub potential: Potential,
    #[serde(default)]
    pub initial: InitialSpec,
    pub t_final: f64,
    pub dt: f64,
    /// Spatial step, `ε` when absent.
    #[serde(default)]
    pub dx: Option<f64>,
    #[serde(default = "default_domain")]
    pub domain: [f64; 2],
    #[serde(default = "default_cq")]
    pub cq: f64,
    #[serde(default = "default_cp")]
    pub cp: f64,
    #[serde(default = "default_strategy")]
    pub strategy: String,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_r_cut")]
    pub r_cut: f64,
    #[serde(default = "default_rcond")]
    pub rcond: f64,
    #[serde(default)]
    pub t_multi: Option<usize>,
    #[serde(default)]
    pub t_evo: Option<f64>,
    #[serde(default = "default_threads")]
    pub threads: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputPaths,
}

fn default_domain() -> [f64; 2] {
    [-2.0, 2.0]
}
fn default_cq() -> f64 {
    0.5
}
fn default_cp() -> f64 {
    PI / 8.0
}
fn default_strategy() -> String {
    "Q2P2".into()
}
fn default_tau() -> f64 {
    DEFAULT_TAU
}
fn default_r_cut() -> f64 {
    DEFAULT_R_CUT
}
fn default_rcond() -> f64 {
    DEFAULT_RCOND
}
fn default_threads() -> usize {
    1
}

impl ExperimentConfig {
    /// A config with every optional field at its default.
    pub fn new(solver: SolverKind, dim: usize, epsilon: f64, potential: Potential, t_final: f64, dt: f64) -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            solver,
            dim,
            epsilon,
            potential,
            initial: InitialSpec::default(),
            t_final,
            dt,
            dx: None,
            domain: default_domain(),
            cq: default_cq(),
            cp: default_cp(),
            strategy: default_strategy(),
            tau: default_tau(),
            r_cut: default_r_cut(),
            rcond: default_rcond(),
            t_multi: None,
            t_evo: None,
            threads: default_threads(),
            seed: 0,
            output: OutputPaths::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| FggcError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| FggcError::Config(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json(&text)
    }

    pub fn mesh(&self) -> Result<MeshSpec> {
        let dx = self.dx.unwrap_or(self.epsilon);
        let [lo, hi] = self.domain;
        MeshSpec::new(self.dim, self.epsilon, dx, self.cq, self.cp, lo, hi, self.dt).validate()
    }

    /// Checks every field and returns the validated mesh.
    pub fn validate(&self) -> Result<MeshSpec> {
        let bad = |m: String| Err(FggcError::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema_version {} is not {SCHEMA_VERSION}", self.schema_version));
        }
        let mesh = self.mesh()?;
        if !(0.0..1.0).contains(&self.tau) {
            return bad(format!("tau = {} must lie in [0, 1)", self.tau));
        }
        if !(self.r_cut > 0.0 && self.r_cut.is_finite()) {
            return bad(format!("r_cut = {} must be positive", self.r_cut));
        }
        if !(self.rcond > 0.0 && self.rcond < 1.0) {
            return bad(format!("rcond = {} must lie in (0, 1)", self.rcond));
        }
        match self.dim {
            1 => NeighborStrategy::<1>::named(&self.strategy).map(|_| ())?,
            2 => NeighborStrategy::<2>::named(&self.strategy).map(|_| ())?,
            _ => NeighborStrategy::<3>::named(&self.strategy).map(|_| ())?,
        }
        step_count(self.t_final, self.dt)?;
        if self.solver == SolverKind::FggcMultistep {
            let (Some(m), Some(t_evo)) = (self.t_multi, self.t_evo) else {
                return bad("fggc-multistep needs t_multi and t_evo".into());
            };
            if m == 0 || !(t_evo > 0.0) {
                return bad("t_multi and t_evo must be positive".into());
            }
            if (m as f64 * t_evo - self.t_final).abs() > 1e-9 * self.t_final.max(1.0) {
                return bad(format!("t_multi·t_evo = {} differs from t_final = {}", m as f64 * t_evo, self.t_final));
            }
            step_count(t_evo, self.dt)?;
        }
        Ok(mesh)
    }

    /// Hex SHA-256 of the compact JSON serialisation.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serialises");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}
