//! Initial data for the solvers.

use crate::error::Result;
use crate::field::ComplexField;
use crate::mesh::MeshSpec;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

pub type RealFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Normalised Gaussian `(2α/π)^{d/4} exp(-α|x-x₀|² + (i/ε) p₀·x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianInit {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Defaults to the origin.
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    /// Defaults to 1 on every axis.
    #[serde(default)]
    pub momentum: Option<Vec<f64>>,
}

fn default_alpha() -> f64 {
    32.0
}

impl Default for GaussianInit {
    fn default() -> Self {
        GaussianInit { alpha: default_alpha(), center: None, momentum: None }
    }
}

impl GaussianInit {
    pub fn center(&self, dim: usize) -> Vec<f64> {
        self.center.clone().unwrap_or_else(|| vec![0.0; dim])
    }

    pub fn momentum(&self, dim: usize) -> Vec<f64> {
        self.momentum.clone().unwrap_or_else(|| vec![1.0; dim])
    }

    pub fn eval(&self, x: &[f64], epsilon: f64) -> Complex64 {
        let d = x.len();
        let (x0, p0) = (self.center(d), self.momentum(d));
        let norm = (2.0 * self.alpha / PI).powf(d as f64 / 4.0);
        let mut r2 = 0.0;
        let mut phase = 0.0;
        for a in 0..d {
            r2 += (x[a] - x0[a]).powi(2);
            phase += p0[a] * x[a];
        }
        Complex64::new(-self.alpha * r2, phase / epsilon).exp() * norm
    }
}

#[derive(Clone)]
pub enum InitialCondition {
    Gaussian(GaussianInit),
    /// `u₀ = √n₀ · exp((i/ε) S₀)`.
    Wkb { density: RealFn, phase: RealFn },
    Sampled(ComplexField),
}

impl std::fmt::Debug for InitialCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitialCondition::Gaussian(g) => f.debug_tuple("Gaussian").field(g).finish(),
            InitialCondition::Wkb { .. } => f.write_str("Wkb"),
            InitialCondition::Sampled(s) => write!(f, "Sampled({:?})", s.shape),
        }
    }
}

impl InitialCondition {
    pub fn sample(&self, mesh: &MeshSpec) -> Result<ComplexField> {
        let eps = mesh.epsilon;
        Ok(match self {
            InitialCondition::Gaussian(g) => ComplexField::from_fn(mesh, |x| g.eval(x, eps)),
            InitialCondition::Wkb { density, phase } => {
                ComplexField::from_fn(mesh, |x| Complex64::from_polar(density(x).max(0.0).sqrt(), phase(x) / eps))
            }
            InitialCondition::Sampled(field) => {
                field.check_mesh(mesh)?;
                field.clone()
            }
        })
    }
}
