//! Discrete L² and H¹ error norms on the shared spatial grid.

use crate::error::{FggcError, Result};
use crate::fft::{Direction, FftNd};
use crate::field::ComplexField;
use crate::mesh::MeshSpec;
use crate::tssp::{k_squared, wavenumbers};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub l2_abs: f64,
    pub l2_rel: f64,
    pub h1_rel: Option<f64>,
    pub reference: String,
    pub candidate: String,
    pub config_digest: String,
}

fn check(a: &ComplexField, b: &ComplexField, mesh: &MeshSpec) -> Result<()> {
    a.check_mesh(mesh)?;
    b.check_mesh(mesh)?;
    Ok(())
}

fn sum_sq<'a>(it: impl Iterator<Item = Complex64> + 'a) -> f64 {
    it.map(|z| z.norm_sqr()).sum()
}

/// `(‖a - b‖, ‖a - b‖/‖b‖)` with `‖u‖² = Δx^d Σ|u|²`.
pub fn l2_error(a: &ComplexField, b: &ComplexField, mesh: &MeshSpec) -> Result<(f64, f64)> {
    check(a, b, mesh)?;
    let w = mesh.dx.powi(mesh.dim as i32);
    let diff = (w * sum_sq(a.data.iter().zip(&b.data).map(|(x, y)| x - y))).sqrt();
    let norm = (w * sum_sq(b.data.iter().copied())).sqrt();
    if norm == 0.0 {
        return Err(FggcError::GridMismatch("reference field is identically zero".into()));
    }
    Ok((diff, diff / norm))
}

/// `Δx^d Σ |∇u|²` by spectral differentiation on the periodic box.
fn grad_sq(u: &[Complex64], mesh: &MeshSpec) -> f64 {
    let kgrid: Vec<Vec<f64>> = (0..mesh.dim)
        .map(|a| wavenumbers(mesh.nx[a], mesh.domain_hi[a] - mesh.domain_lo[a]))
        .collect();
    let mut spec = u.to_vec();
    FftNd::new(&mesh.nx).process(&mut spec, Direction::Forward);
    // Parseval: Σ|∇u|² = (1/N) Σ |k|² |û|²
    let n = mesh.grid_len() as f64;
    let s: f64 = spec.iter().zip(k_squared(&kgrid)).map(|(z, k2)| k2 * z.norm_sqr()).sum();
    mesh.dx.powi(mesh.dim as i32) * s / n
}

/// `‖a - b‖_{H¹} / ‖b‖_{H¹}` with `‖u‖²_{H¹} = ‖u‖² + ‖∇u‖²`.
pub fn h1_error(a: &ComplexField, b: &ComplexField, mesh: &MeshSpec) -> Result<f64> {
    check(a, b, mesh)?;
    let w = mesh.dx.powi(mesh.dim as i32);
    let diff: Vec<Complex64> = a.data.iter().zip(&b.data).map(|(x, y)| x - y).collect();
    let num = w * sum_sq(diff.iter().copied()) + grad_sq(&diff, mesh);
    let den = w * sum_sq(b.data.iter().copied()) + grad_sq(&b.data, mesh);
    if den == 0.0 {
        return Err(FggcError::GridMismatch("reference field is identically zero".into()));
    }
    Ok((num / den).sqrt())
}

pub fn error_report(
    candidate: (&str, &ComplexField),
    reference: (&str, &ComplexField),
    mesh: &MeshSpec,
    with_h1: bool,
    config_digest: &str,
) -> Result<ErrorReport> {
    let (l2_abs, l2_rel) = l2_error(candidate.1, reference.1, mesh)?;
    let h1_rel = if with_h1 { Some(h1_error(candidate.1, reference.1, mesh)?) } else { None };
    Ok(ErrorReport {
        l2_abs,
        l2_rel,
        h1_rel,
        reference: reference.0.to_string(),
        candidate: candidate.0.to_string(),
        config_digest: config_digest.to_string(),
    })
}
