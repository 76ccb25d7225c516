//! Hamiltonian flow of frozen Gaussian carriers, integrated with classical
//! fixed-step RK4. The amplitude is advanced in the same stages through
//! `dA/dt = (A/2) tr(Z⁻¹ dZ/dt)`, with `∂_z Q` and `∂_z P` carried by the
//! variational equations.

use crate::error::{FggcError, Result};
use crate::exec::Exec;
use crate::mesh::RVec;
use crate::packet::{CMat, WavePacket};
use crate::potential::Potential;
use num_complex::Complex64;

/// `|det Z|` below `CAUSTIC_TOL · 2^d` aborts the integration.
pub const CAUSTIC_TOL: f64 = 1e-8;
/// Relative slack allowed when checking that `T/dt` is an integer.
pub const STEP_TOL: f64 = 1e-9;

/// Time derivative of every field of a [`WavePacket`].
#[derive(Clone, Copy, Debug)]
pub struct FlowDerivative<const D: usize> {
    pub q: RVec<D>,
    pub p: RVec<D>,
    pub s: f64,
    pub a: Complex64,
    pub dqdz: CMat<D>,
    pub dpdz: CMat<D>,
}

fn caustic_threshold(dim: usize) -> f64 {
    CAUSTIC_TOL * 2f64.powi(dim as i32)
}

/// Right-hand side of the packet ODEs. Fails when `Z` is numerically
/// singular; `time` is only used for the diagnostic.
pub fn rhs<const D: usize>(w: &WavePacket<D>, v: &Potential, time: f64) -> Result<FlowDerivative<D>> {
    let q = w.params.q;
    let p = w.params.p;
    let (val, grad, hess) = v.derivatives(&q);
    let hess_c: CMat<D> = hess.map(|h| Complex64::new(h, 0.0));
    let ddqdz = w.dpdz;
    let ddpdz = -(hess_c * w.dqdz);
    let (det, zinv) = det_inverse(&w.z());
    let det = det.norm();
    let threshold = caustic_threshold(D);
    if !(det >= threshold) {
        return Err(FggcError::Caustic { det, threshold, time });
    }
    let zdot = ddqdz + ddpdz * Complex64::i();
    let da = w.a * 0.5 * (zinv * zdot).trace();
    Ok(FlowDerivative { q: p, p: -grad, s: 0.5 * p.norm_squared() - val, a: da, dqdz: ddqdz, dpdz: ddpdz })
}

/// Determinant and inverse of a matrix of order at most 3 by cofactors.
fn det_inverse<const D: usize>(z: &CMat<D>) -> (Complex64, CMat<D>) {
    let mut inv = CMat::<D>::zeros();
    let det = match D {
        1 => {
            inv[(0, 0)] = z[(0, 0)].inv();
            z[(0, 0)]
        }
        2 => {
            let det = z[(0, 0)] * z[(1, 1)] - z[(0, 1)] * z[(1, 0)];
            let r = det.inv();
            inv[(0, 0)] = z[(1, 1)] * r;
            inv[(0, 1)] = -z[(0, 1)] * r;
            inv[(1, 0)] = -z[(1, 0)] * r;
            inv[(1, 1)] = z[(0, 0)] * r;
            det
        }
        3 => {
            let c = |i: usize, j: usize| {
                let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
                let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
                z[(i1, j1)] * z[(i2, j2)] - z[(i1, j2)] * z[(i2, j1)]
            };
            let det = z[(0, 0)] * c(0, 0) + z[(0, 1)] * c(0, 1) + z[(0, 2)] * c(0, 2);
            let r = det.inv();
            for i in 0..3 {
                for j in 0..3 {
                    inv[(j, i)] = c(i, j) * r;
                }
            }
            det
        }
        _ => unreachable!("dimension {D} not supported"),
    };
    (det, inv)
}

fn advance<const D: usize>(w: &WavePacket<D>, k: &FlowDerivative<D>, h: f64) -> WavePacket<D> {
    let hc = Complex64::new(h, 0.0);
    let mut out = *w;
    out.params.q += k.q * h;
    out.params.p += k.p * h;
    out.s += k.s * h;
    out.a += k.a * h;
    out.dqdz += k.dqdz * hc;
    out.dpdz += k.dpdz * hc;
    out
}

/// One classical RK4 step.
pub fn rk4_step<const D: usize>(w: &WavePacket<D>, v: &Potential, dt: f64, time: f64) -> Result<WavePacket<D>> {
    let k1 = rhs(w, v, time)?;
    let k2 = rhs(&advance(w, &k1, dt / 2.0), v, time + dt / 2.0)?;
    let k3 = rhs(&advance(w, &k2, dt / 2.0), v, time + dt / 2.0)?;
    let k4 = rhs(&advance(w, &k3, dt), v, time + dt)?;
    let sixth = dt / 6.0;
    let c = Complex64::new(sixth, 0.0);
    let mut out = *w;
    out.params.q += (k1.q + k2.q * 2.0 + k3.q * 2.0 + k4.q) * sixth;
    out.params.p += (k1.p + k2.p * 2.0 + k3.p * 2.0 + k4.p) * sixth;
    out.s += (k1.s + 2.0 * k2.s + 2.0 * k3.s + k4.s) * sixth;
    out.a += (k1.a + k2.a * 2.0 + k3.a * 2.0 + k4.a) * sixth;
    out.dqdz += (k1.dqdz + k2.dqdz * Complex64::new(2.0, 0.0) + k3.dqdz * Complex64::new(2.0, 0.0) + k4.dqdz) * c;
    out.dpdz += (k1.dpdz + k2.dpdz * Complex64::new(2.0, 0.0) + k3.dpdz * Complex64::new(2.0, 0.0) + k4.dpdz) * c;
    Ok(out)
}

/// Number of steps of size `dt` covering `span`, which must be a whole
/// multiple of `dt`.
pub fn step_count(span: f64, dt: f64) -> Result<usize> {
    let err = FggcError::StepCount { span, dt };
    if !(span >= 0.0 && span.is_finite() && dt > 0.0 && dt.is_finite()) {
        return Err(err);
    }
    let n = span / dt;
    let r = n.round();
    if (n - r).abs() > STEP_TOL * r.max(1.0) {
        return Err(err);
    }
    Ok(r as usize)
}

pub fn evolve_packet<const D: usize>(w: &WavePacket<D>, v: &Potential, t: f64, dt: f64) -> Result<WavePacket<D>> {
    let n = step_count(t, dt)?;
    let mut cur = *w;
    for i in 0..n {
        cur = rk4_step(&cur, v, dt, i as f64 * dt)?;
    }
    Ok(cur)
}

/// Evolves every packet independently; output order matches input order.
pub fn evolve_all<const D: usize>(
    packets: &[WavePacket<D>],
    v: &Potential,
    t: f64,
    dt: f64,
    exec: &Exec,
) -> Result<Vec<WavePacket<D>>> {
    step_count(t, dt)?;
    exec.try_map(packets, |w| evolve_packet(w, v, t, dt))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn packet(q: f64, p: f64) -> WavePacket<1> {
        WavePacket::initial(RVec::<1>::new(q), RVec::<1>::new(p), 1.0 / 64.0, Complex64::new(1.0, 0.0))
    }

    #[test]
    fn zero_duration_is_identity() {
        let w = packet(0.3, -0.2);
        assert_eq!(evolve_packet(&w, &Potential::Cosine, 0.0, 1e-3).unwrap(), w);
    }

    #[test]
    fn free_flow_closed_form() {
        let (q, p, t) = (0.3, 1.7, 0.8);
        let w = evolve_packet(&packet(q, p), &Potential::Free, t, 1e-3).unwrap();
        let z = Complex64::new(2.0, -t);
        assert!((w.params.q[0] - (q + p * t)).abs() < 1e-12);
        assert!((w.s - p * p * t / 2.0).abs() < 1e-12);
        assert!((w.z()[(0, 0)] - z).norm() < 1e-12);
        assert!((w.a - (z / 2.0).sqrt()).norm() < 1e-12);
    }

    #[test]
    fn step_count_checks() {
        assert_eq!(step_count(0.8, 1e-4).unwrap(), 8000);
        assert_eq!(step_count(0.0, 1e-4).unwrap(), 0);
        assert!(step_count(0.8, 3e-4).is_err());
        assert!(step_count(-1.0, 1e-4).is_err());
    }

    #[test]
    fn caustic_is_reported() {
        let mut w = packet(0.0, 0.0);
        w.dqdz[(0, 0)] = Complex64::new(0.0, 0.0);
        w.dpdz[(0, 0)] = Complex64::new(0.0, 0.0);
        let e = rk4_step(&w, &Potential::Harmonic, 1e-3, 0.0).unwrap_err();
        assert_eq!(e.exit_code(), 3);
    }
}
