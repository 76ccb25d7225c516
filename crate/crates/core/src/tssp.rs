//! Strang time-splitting spectral solver on the periodic box.

use crate::error::Result;
use crate::fft::{Direction, FftNd};
use crate::field::ComplexField;
use crate::flow::step_count;
use crate::mesh::MeshSpec;
use crate::potential::Potential;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Angular wavenumbers `2πm/L` of one axis in DFT order.
pub fn wavenumbers(n: usize, length: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let m = if i < n.div_ceil(2) { i as f64 } else { i as f64 - n as f64 };
            2.0 * PI * m / length
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct SpectralState {
    pub field: ComplexField,
    pub kgrid: Vec<Vec<f64>>,
    pub mesh: MeshSpec,
}

impl SpectralState {
    pub fn new(field: ComplexField, mesh: &MeshSpec) -> Result<Self> {
        field.check_mesh(mesh)?;
        let kgrid = (0..mesh.dim)
            .map(|a| wavenumbers(mesh.nx[a], mesh.domain_hi[a] - mesh.domain_lo[a]))
            .collect();
        Ok(SpectralState { field, kgrid, mesh: mesh.clone() })
    }
}

/// `|k|²` on the spectral grid in row-major order.
pub(crate) fn k_squared(kgrid: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0];
    for ks in kgrid {
        out = out.iter().flat_map(|base| ks.iter().map(move |k| base + k * k)).collect();
    }
    out
}

/// Precomputed split-step factors for a fixed potential and step.
pub struct Propagator {
    half_kick: Vec<Complex64>,
    /// Kinetic phase with the inverse-DFT `1/N` folded in.
    kinetic: Vec<Complex64>,
    fft: FftNd,
}

impl Propagator {
    pub fn new(state: &SpectralState, v: &Potential, dt: f64) -> Self {
        let mesh = &state.mesh;
        let eps = mesh.epsilon;
        let vals = ComplexField::from_fn(mesh, |x| Complex64::new(v.value(x), 0.0));
        let half_kick = vals.data.iter().map(|v| Complex64::from_polar(1.0, -v.re * dt / (2.0 * eps))).collect();
        let inv_n = 1.0 / mesh.grid_len() as f64;
        let kinetic = k_squared(&state.kgrid)
            .iter()
            .map(|k2| Complex64::from_polar(inv_n, -eps * k2 * dt / 2.0))
            .collect();
        Propagator { half_kick, kinetic, fft: FftNd::new(&mesh.nx) }
    }

    pub fn step(&self, u: &mut [Complex64]) {
        for (z, h) in u.iter_mut().zip(&self.half_kick) {
            *z *= h;
        }
        self.fft.process(u, Direction::Forward);
        for (z, k) in u.iter_mut().zip(&self.kinetic) {
            *z *= k;
        }
        self.fft.process(u, Direction::Inverse);
        for (z, h) in u.iter_mut().zip(&self.half_kick) {
            *z *= h;
        }
    }
}

/// One Strang step: half potential kick, full kinetic step, half kick.
pub fn tssp_step(state: &SpectralState, v: &Potential, dt: f64) -> SpectralState {
    let mut out = state.clone();
    Propagator::new(state, v, dt).step(&mut out.field.data);
    out
}

/// Propagates `u0` to time `t` in `t/dt` Strang steps.
pub fn solve_tssp(u0: &ComplexField, mesh: &MeshSpec, v: &Potential, t: f64, dt: f64) -> Result<ComplexField> {
    let n = step_count(t, dt)?;
    let state = SpectralState::new(u0.clone(), mesh)?;
    let prop = Propagator::new(&state, v, dt);
    let mut u = state.field;
    for _ in 0..n {
        prop.step(&mut u.data);
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumber_order() {
        let k = wavenumbers(4, 2.0 * PI);
        assert_eq!(k, vec![0.0, 1.0, -2.0, -1.0]);
    }

    #[test]
    fn plane_wave_is_exact() {
        let mesh = MeshSpec::recommended(1, 1.0 / 64.0, 1e-3).validate().unwrap();
        let eps = mesh.epsilon;
        let p = 2.0 * PI * 5.0 / 4.0 * eps;
        let u0 = ComplexField::from_fn(&mesh, |x| Complex64::from_polar(1.0, p * x[0] / eps));
        let t = 0.05;
        let u = solve_tssp(&u0, &mesh, &Potential::Free, t, 1e-3).unwrap();
        for j in 0..mesh.nx[0] {
            let x = mesh.x(0, j);
            let e = Complex64::from_polar(1.0, (p * x - p * p * t / 2.0) / eps);
            assert!((u.data[j] - e).norm() < 1e-11);
        }
    }

    #[test]
    fn constant_potential_is_global_phase() {
        let mesh = MeshSpec::recommended(1, 1.0 / 16.0, 1e-3).validate().unwrap();
        let u0 = ComplexField::from_fn(&mesh, |x| Complex64::new((-8.0 * x[0] * x[0]).exp(), 0.0));
        let (c, t) = (0.7, 0.1);
        let free = solve_tssp(&u0, &mesh, &Potential::Free, t, 1e-3).unwrap();
        let u = solve_tssp(&u0, &mesh, &Potential::Constant { value: c }, t, 1e-3).unwrap();
        let ph = Complex64::from_polar(1.0, -c * t / mesh.epsilon);
        for (a, b) in u.data.iter().zip(&free.data) {
            assert!((a - b * ph).norm() < 1e-11);
        }
    }
}
