//! External potentials with analytic gradients and Hessians.

use crate::mesh::RVec;
use nalgebra::SMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    /// `V = 0`
    Free,
    /// `V = c`
    Constant { value: f64 },
    /// `V = |x|²/2`
    Harmonic,
    /// `V = Σ_a (1 - cos(π x_a))`
    Cosine,
    /// `V = 1 - exp(|x|²)`
    GaussianWell,
}

impl Potential {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Potential::Free => 0.0,
            Potential::Constant { value } => *value,
            Potential::Harmonic => 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
            Potential::Cosine => x.iter().map(|v| 1.0 - (PI * v).cos()).sum(),
            Potential::GaussianWell => 1.0 - x.iter().map(|v| v * v).sum::<f64>().exp(),
        }
    }

    /// Value, gradient and Hessian at `x`.
    pub fn derivatives<const D: usize>(&self, x: &RVec<D>) -> (f64, RVec<D>, SMatrix<f64, D, D>) {
        let zero = SMatrix::<f64, D, D>::zeros();
        match self {
            Potential::Free => (0.0, RVec::zeros(), zero),
            Potential::Constant { value } => (*value, RVec::zeros(), zero),
            Potential::Harmonic => (0.5 * x.norm_squared(), *x, SMatrix::identity()),
            Potential::Cosine => {
                let v = x.iter().map(|v| 1.0 - (PI * v).cos()).sum();
                let g = x.map(|v| PI * (PI * v).sin());
                let h = SMatrix::from_diagonal(&x.map(|v| PI * PI * (PI * v).cos()));
                (v, g, h)
            }
            Potential::GaussianWell => {
                let e = x.norm_squared().exp();
                let g = x * (-2.0 * e);
                let h = (SMatrix::identity() * 2.0 + x * x.transpose() * 4.0) * (-e);
                (1.0 - e, g, h)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_finite_differences() {
        let x = RVec::<2>::new(0.31, -0.47);
        let h = 1e-5;
        for pot in [Potential::Harmonic, Potential::Cosine, Potential::GaussianWell, Potential::Constant { value: 2.0 }] {
            let (v, g, hess) = pot.derivatives(&x);
            assert!((v - pot.value(x.as_slice())).abs() < 1e-14);
            for a in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[a] += h;
                xm[a] -= h;
                let fd = (pot.value(xp.as_slice()) - pot.value(xm.as_slice())) / (2.0 * h);
                assert!((fd - g[a]).abs() < 1e-8, "{pot:?} grad");
                let (_, gp, _) = pot.derivatives(&xp);
                let (_, gm, _) = pot.derivatives(&xm);
                for b in 0..2 {
                    assert!(((gp[b] - gm[b]) / (2.0 * h) - hess[(b, a)]).abs() < 1e-7, "{pot:?} hessian");
                }
            }
        }
    }

    #[test]
    fn serde_tags() {
        let p: Potential = serde_json::from_str(r#"{"kind":"gaussian_well"}"#).unwrap();
        assert_eq!(p, Potential::GaussianWell);
        let p: Potential = serde_json::from_str(r#"{"kind":"constant","value":0.5}"#).unwrap();
        assert_eq!(p, Potential::Constant { value: 0.5 });
    }
}
