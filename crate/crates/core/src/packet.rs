//! Frozen Gaussian wave-packets and their closed-form overlaps.
//!
//! Inner products conjugate the second argument, `<g, h> = ∫ g·conj(h)`.
//! Every Gram matrix and right-hand side in the crate follows that
//! convention.

use crate::error::{FggcError, Result};
use crate::mesh::RVec;
use nalgebra::SMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

pub type CMat<const D: usize> = SMatrix<Complex64, D, D>;

/// `G(x; Q, P, ε) = exp((i/ε) P·(x-Q) - |x-Q|²/(2ε))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianParams<const D: usize> {
    pub q: RVec<D>,
    pub p: RVec<D>,
    pub epsilon: f64,
}

impl<const D: usize> GaussianParams<D> {
    pub fn new(q: RVec<D>, p: RVec<D>, epsilon: f64) -> Self {
        debug_assert!(epsilon > 0.0);
        GaussianParams { q, p, epsilon }
    }
}

/// One evolving carrier of the FGA ansatz. `Z = ∂_z Q + i ∂_z P`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WavePacket<const D: usize> {
    pub params: GaussianParams<D>,
    pub a: Complex64,
    pub s: f64,
    pub dqdz: CMat<D>,
    pub dpdz: CMat<D>,
}

impl<const D: usize> WavePacket<D> {
    /// Packet at `t = 0`: `S = 0`, `∂_z Q = I`, `∂_z P = -iI`, so `Z = 2I`.
    pub fn initial(q: RVec<D>, p: RVec<D>, epsilon: f64, a: Complex64) -> Self {
        WavePacket {
            params: GaussianParams::new(q, p, epsilon),
            a,
            s: 0.0,
            dqdz: CMat::<D>::identity(),
            dpdz: CMat::<D>::identity() * Complex64::new(0.0, -1.0),
        }
    }

    pub fn z(&self) -> CMat<D> {
        self.dqdz + self.dpdz * Complex64::i()
    }
}

pub fn eval_packet<const D: usize>(g: &GaussianParams<D>, x: &RVec<D>) -> Complex64 {
    let r = x - g.q;
    Complex64::new(-r.norm_squared() / (2.0 * g.epsilon), g.p.dot(&r) / g.epsilon).exp()
}

fn check_eps(a: f64, b: f64) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(FggcError::EpsilonMismatch(a, b))
    }
}

/// Overlap without the `(πε)^{d/2}` prefactor, in terms of the differences
/// `Q̃ - Q̄`, `P̃ - P̄` and the sum `P̃ + P̄`.
#[inline]
pub(crate) fn overlap_kernel<const D: usize>(
    dq: &RVec<D>,
    dp: &RVec<D>,
    psum: &RVec<D>,
    epsilon: f64,
) -> Complex64 {
    let re = -(dq.norm_squared() + dp.norm_squared()) / (4.0 * epsilon);
    let im = dq.dot(psum) / (2.0 * epsilon);
    Complex64::new(re, im).exp()
}

/// `<g, h> = ∫ g·conj(h)` in closed form.
pub fn inner_product<const D: usize>(g: &GaussianParams<D>, h: &GaussianParams<D>) -> Result<Complex64> {
    check_eps(g.epsilon, h.epsilon)?;
    Ok(inner_product_unchecked(g, h))
}

#[inline]
pub(crate) fn inner_product_unchecked<const D: usize>(g: &GaussianParams<D>, h: &GaussianParams<D>) -> Complex64 {
    let eps = g.epsilon;
    let norm = (PI * eps).powf(D as f64 / 2.0);
    overlap_kernel(&(h.q - g.q), &(h.p - g.p), &(h.p + g.p), eps) * norm
}

pub fn l2_norm<const D: usize>(g: &GaussianParams<D>) -> f64 {
    (PI * g.epsilon).powf(D as f64 / 4.0)
}

/// `<∇g, ∇h> = Σ_a ∫ ∂_a g · conj(∂_a h)`.
///
/// With `∂G = ((iP - (x-Q))/ε) G`, the product `g·conj(h)` is a complex
/// Gaussian in `y = x - (Q̄+Q̃)/2` with mean `i(P̄-P̃)/2` and variance `ε/2`
/// per axis, so only its first two moments are needed.
pub fn grad_inner_product<const D: usize>(g: &GaussianParams<D>, h: &GaussianParams<D>) -> Result<Complex64> {
    check_eps(g.epsilon, h.epsilon)?;
    Ok(grad_inner_product_unchecked(g, h))
}

pub(crate) fn grad_inner_product_unchecked<const D: usize>(
    g: &GaussianParams<D>,
    h: &GaussianParams<D>,
) -> Complex64 {
    let eps = g.epsilon;
    let i = Complex64::i();
    let mut factor = Complex64::new(0.0, 0.0);
    for ax in 0..D {
        let delta = h.q[ax] - g.q[ax];
        let k = g.p[ax] - h.p[ax];
        let a = i * g.p[ax] - delta / 2.0;
        let b = -i * h.p[ax] + delta / 2.0;
        let mean = i * (k / 2.0);
        let second = Complex64::new(eps / 2.0 - k * k / 4.0, 0.0);
        factor += a * b - (a + b) * mean + second;
    }
    factor / (eps * eps) * inner_product_unchecked(g, h)
}

pub fn h1_norm<const D: usize>(g: &GaussianParams<D>) -> f64 {
    let eps = g.epsilon;
    let grad = g.p.norm_squared() / (eps * eps) + D as f64 / (2.0 * eps);
    ((PI * eps).powf(D as f64 / 2.0) * (1.0 + grad)).sqrt()
}
