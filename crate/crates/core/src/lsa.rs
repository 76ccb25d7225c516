//! Least-squares splitting of an off-grid wave-packet onto its on-grid
//! neighbors.
//!
//! `NormalSystem` holds `A_jk = <ψ_j, ψ_k>` and `f_j = <ψ_j, φ>`. With the
//! second argument conjugated, the minimiser of `‖φ - Σ c_k ψ_k‖` is
//! `c = conj(A⁺ f)`, which is what every solve here returns.

use crate::exec::Exec;
use crate::mesh::{frac_decompose, MeshSpec, NeighborStrategy, PhaseIndex, RVec};
use crate::packet::{grad_inner_product_unchecked, h1_norm, inner_product_unchecked, GaussianParams};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub const DEFAULT_RCOND: f64 = 2e-10;
pub const DEFAULT_SAMPLES: usize = 33;
/// Table entries below this are reported as zero.
pub const RESIDUAL_FLOOR: f64 = 1e-12;

/// Moore-Penrose pseudo-inverse keeping singular values above
/// `rcond · σ_max`. Returns the inverse and the retained rank.
pub fn pinv(m: &DMatrix<Complex64>, rcond: f64) -> (DMatrix<Complex64>, usize) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd computed u");
    let v_t = svd.v_t.expect("svd computed v_t");
    let s = &svd.singular_values;
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let mut out = DMatrix::zeros(m.ncols(), m.nrows());
    let mut rank = 0;
    for i in 0..s.len() {
        if s[i] > rcond * smax && s[i] > 0.0 {
            rank += 1;
            let col = v_t.row(i).adjoint() * Complex64::new(1.0 / s[i], 0.0);
            out += col * u.column(i).adjoint();
        }
    }
    (out, rank)
}

/// `‖φ‖² - 2 Re Σ c_k f_k + Σ c_j conj(c_k) G_jk` clamped at zero, for
/// `f_k = <ψ_k, φ>` and `G_jk = <ψ_j, ψ_k>` in any inner product.
fn residual_sq(phi_sq: f64, c: &[Complex64], f: &[Complex64], gram: &DMatrix<Complex64>) -> f64 {
    let n = c.len();
    let mut cross = 0.0;
    for k in 0..n {
        cross += (c[k] * f[k]).re;
    }
    let mut quad = 0.0;
    for j in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for k in 0..n {
            row += gram[(j, k)] * c[k].conj();
        }
        quad += (c[j] * row).re;
    }
    (phi_sq - 2.0 * cross + quad).max(0.0)
}

#[derive(Clone, Debug)]
pub struct NormalSystem {
    pub a: DMatrix<Complex64>,
    pub f: DVector<Complex64>,
}

impl NormalSystem {
    pub fn solve(&self, rcond: f64) -> Vec<Complex64> {
        let (p, _) = pinv(&self.a, rcond);
        (p * &self.f).iter().map(|z| z.conj()).collect()
    }

    /// `‖φ - Σ c_k ψ_k‖²` for a target with `‖φ‖² = phi_sq`.
    pub fn residual_sq(&self, phi_sq: f64, c: &[Complex64]) -> f64 {
        residual_sq(phi_sq, c, self.f.as_slice(), &self.a)
    }
}

fn neighbors<const D: usize>(
    target: &GaussianParams<D>,
    strategy: &NeighborStrategy<D>,
    dq: f64,
    dp: f64,
) -> Vec<GaussianParams<D>> {
    let mesh = lattice(target.epsilon, dq, dp);
    let base = frac_decompose(&target.q, &target.p, &mesh).base;
    strategy
        .shifts
        .iter()
        .map(|(sq, sp)| {
            let idx = base.shifted(sq, sp);
            GaussianParams::new(idx.q(&mesh), idx.p(&mesh), target.epsilon)
        })
        .collect()
}

/// A mesh carrying only the lattice steps, for floor decomposition.
fn lattice(epsilon: f64, dq: f64, dp: f64) -> MeshSpec {
    let s = epsilon.sqrt();
    let mut m = MeshSpec::new(1, epsilon, epsilon, dq / s, dp / s, -1.0, 1.0, 1.0);
    m.dq = dq;
    m.dp = dp;
    m
}

fn gram<const D: usize>(
    basis: &[GaussianParams<D>],
    target: &GaussianParams<D>,
    ip: fn(&GaussianParams<D>, &GaussianParams<D>) -> Complex64,
) -> NormalSystem {
    let n = basis.len();
    NormalSystem {
        a: DMatrix::from_fn(n, n, |j, k| ip(&basis[j], &basis[k])),
        f: DVector::from_fn(n, |j, _| ip(&basis[j], target)),
    }
}

/// Normal equations for splitting `target` onto its neighbors on `mesh`.
pub fn build_normal_system<const D: usize>(
    target: &GaussianParams<D>,
    strategy: &NeighborStrategy<D>,
    mesh: &MeshSpec,
) -> NormalSystem {
    gram(&neighbors(target, strategy, mesh.dq, mesh.dp), target, inner_product_unchecked)
}

/// Pseudo-inverse of the ε-free Gram matrix of a strategy for mesh constants
/// `(cq, cp)`.
#[derive(Clone, Debug)]
pub struct PrecomputedLSA<const D: usize> {
    pub strategy: NeighborStrategy<D>,
    pub cq: f64,
    pub cp: f64,
    pub rcond: f64,
    pub a_tilde: DMatrix<Complex64>,
    pub a_tilde_pinv: DMatrix<Complex64>,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitResult<const D: usize> {
    /// Floor corner of the packet's phase-space cell.
    pub base: PhaseIndex<D>,
    pub coeffs: Vec<Complex64>,
    /// Relative L² splitting error of this packet.
    pub residual: f64,
}

pub fn precompute<const D: usize>(strategy: &NeighborStrategy<D>, cq: f64, cp: f64, rcond: f64) -> PrecomputedLSA<D> {
    let n = strategy.len();
    let sh = &strategy.shifts;
    let a_tilde = DMatrix::from_fn(n, n, |j, k| {
        let mut e = Complex64::new(0.0, 0.0);
        for a in 0..D {
            let (qj, qk) = (sh[j].0[a] as f64, sh[k].0[a] as f64);
            let (pj, pk) = (sh[j].1[a] as f64, sh[k].1[a] as f64);
            e.re -= cq * cq / 4.0 * (qj - qk).powi(2) + cp * cp / 4.0 * (pj - pk).powi(2);
            e.im += cq * cp / 2.0 * (qk - qj) * (pj + pk);
        }
        e.exp()
    });
    let (a_tilde_pinv, rank) = pinv(&a_tilde, rcond);
    PrecomputedLSA { strategy: strategy.clone(), cq, cp, rcond, a_tilde, a_tilde_pinv, rank }
}

impl<const D: usize> PrecomputedLSA<D> {
    pub fn len(&self) -> usize {
        self.strategy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strategy.is_empty()
    }

    /// Right-hand side for a target at scaled cell offsets `s = fracQ/Δq`,
    /// `t = fracP/Δp`.
    pub fn rhs(&self, s: &RVec<D>, t: &RVec<D>) -> Vec<Complex64> {
        let (cq, cp) = (self.cq, self.cp);
        self.strategy
            .shifts
            .iter()
            .map(|(dq, dp)| {
                let mut e = Complex64::new(0.0, 0.0);
                for a in 0..D {
                    let (qj, pj) = (dq[a] as f64, dp[a] as f64);
                    e.re -= cq * cq / 4.0 * (qj - s[a]).powi(2) + cp * cp / 4.0 * (pj - t[a]).powi(2);
                    e.im += cq * cp / 2.0 * (s[a] - qj) * (pj + t[a]);
                }
                e.exp()
            })
            .collect()
    }

    /// Cell-frame coefficients `c̃ = conj(Ã⁺ f̃)` and the relative residual.
    pub fn solve_scaled(&self, s: &RVec<D>, t: &RVec<D>) -> (Vec<Complex64>, f64) {
        let f = self.rhs(s, t);
        let n = f.len();
        let c: Vec<Complex64> = (0..n)
            .map(|j| {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += self.a_tilde_pinv[(j, k)] * f[k];
                }
                acc.conj()
            })
            .collect();
        let r = residual_sq(1.0, &c, &f, &self.a_tilde).sqrt();
        (c, r)
    }

    /// Splits a packet at `(Q, P)` onto the lattice of `mesh`.
    pub fn split(&self, q: &RVec<D>, p: &RVec<D>, mesh: &MeshSpec) -> SplitResult<D> {
        let fd = frac_decompose(q, p, mesh);
        let (mut c, residual) = self.solve_scaled(&fd.s, &fd.t);
        let eps = mesh.epsilon;
        for (ck, (sq, _)) in c.iter_mut().zip(&self.strategy.shifts) {
            let mut phase = 0.0;
            for a in 0..D {
                let qk = (fd.base.iq[a] + sq[a]) as f64 * mesh.dq;
                phase += (q[a] - qk) * fd.int_p[a];
            }
            *ck *= Complex64::from_polar(1.0, -phase / eps);
        }
        SplitResult { base: fd.base, coeffs: c, residual }
    }
}

pub fn split_packet<const D: usize>(
    packet: &crate::packet::WavePacket<D>,
    pre: &PrecomputedLSA<D>,
    mesh: &MeshSpec,
) -> SplitResult<D> {
    pre.split(&packet.params.q, &packet.params.p, mesh)
}

/// Relative L² splitting error of `G(·; Q, P, ε)` computed from the
/// absolute-coordinate normal equations.
pub fn e_lsa<const D: usize>(
    epsilon: f64,
    q: &RVec<D>,
    p: &RVec<D>,
    strategy: &NeighborStrategy<D>,
    cq: f64,
    cp: f64,
) -> f64 {
    e_lsa_with(epsilon, q, p, strategy, cq, cp, DEFAULT_RCOND)
}

pub fn e_lsa_with<const D: usize>(
    epsilon: f64,
    q: &RVec<D>,
    p: &RVec<D>,
    strategy: &NeighborStrategy<D>,
    cq: f64,
    cp: f64,
    rcond: f64,
) -> f64 {
    let s = epsilon.sqrt();
    let target = GaussianParams::new(*q, *p, epsilon);
    let sys = gram(&neighbors(&target, strategy, cq * s, cp * s), &target, inner_product_unchecked);
    let c = sys.solve(rcond);
    let phi_sq = inner_product_unchecked(&target, &target).re;
    (sys.residual_sq(phi_sq, &c) / phi_sq).sqrt()
}

/// Uniform `samples^(2D)` grid of cell offsets `(s, t) ∈ [0,1]^{2D}`,
/// endpoints included.
fn cell_samples<const D: usize>(samples: usize) -> impl Fn(usize) -> (RVec<D>, RVec<D>) {
    let h = 1.0 / (samples - 1) as f64;
    move |mut flat| {
        let mut s = RVec::<D>::zeros();
        let mut t = RVec::<D>::zeros();
        for a in (0..D).rev() {
            t[a] = (flat % samples) as f64 * h;
            flat /= samples;
        }
        for a in (0..D).rev() {
            s[a] = (flat % samples) as f64 * h;
            flat /= samples;
        }
        (s, t)
    }
}

fn sample_max(exec: &Exec, total: usize, f: impl Fn(usize) -> f64 + Sync + Send) -> f64 {
    exec.map_range(total, f).into_iter().fold(0.0, f64::max)
}

/// Sampled supremum of the relative L² splitting error over the unit cell.
pub fn m_lsa<const D: usize>(pre: &PrecomputedLSA<D>, samples: usize, exec: &Exec) -> f64 {
    assert!(samples >= 2, "need at least two samples per axis");
    let at = cell_samples::<D>(samples);
    sample_max(exec, samples.pow(2 * D as u32), |i| {
        let (s, t) = at(i);
        pre.solve_scaled(&s, &t).1
    })
}

/// Same supremum, but every sample solves the absolute-coordinate normal
/// equations at `epsilon` on the mesh `Δq = cq√ε`, `Δp = cp√ε`.
pub fn m_lsa_at_epsilon<const D: usize>(
    strategy: &NeighborStrategy<D>,
    cq: f64,
    cp: f64,
    epsilon: f64,
    samples: usize,
    rcond: f64,
    exec: &Exec,
) -> f64 {
    assert!(samples >= 2, "need at least two samples per axis");
    let at = cell_samples::<D>(samples);
    let (dq, dp) = (cq * epsilon.sqrt(), cp * epsilon.sqrt());
    sample_max(exec, samples.pow(2 * D as u32), |i| {
        let (s, t) = at(i);
        e_lsa_with(epsilon, &(s * dq), &(t * dp), strategy, cq, cp, rcond)
    })
}

/// Sampled supremum over the unit cell of `‖∇(G - Σ c_k G_k)‖ / ‖G‖_{H¹}`
/// with the L² coefficients.
pub fn m_lsa_h1<const D: usize>(pre: &PrecomputedLSA<D>, epsilon: f64, samples: usize, exec: &Exec) -> f64 {
    assert!(samples >= 2, "need at least two samples per axis");
    let at = cell_samples::<D>(samples);
    let (dq, dp) = (pre.cq * epsilon.sqrt(), pre.cp * epsilon.sqrt());
    let basis: Vec<GaussianParams<D>> = pre
        .strategy
        .shifts
        .iter()
        .map(|(sq, sp)| {
            GaussianParams::new(
                RVec::from_fn(|a, _| sq[a] as f64 * dq),
                RVec::from_fn(|a, _| sp[a] as f64 * dp),
                epsilon,
            )
        })
        .collect();
    let n = basis.len();
    let b = DMatrix::from_fn(n, n, |j, k| grad_inner_product_unchecked(&basis[j], &basis[k]));
    sample_max(exec, samples.pow(2 * D as u32), |i| {
        let (s, t) = at(i);
        // In the unit cell intP = 0, so the cell-frame coefficients are final.
        let (c, _) = pre.solve_scaled(&s, &t);
        let target = GaussianParams::new(s * dq, t * dp, epsilon);
        let g: Vec<Complex64> = basis.iter().map(|psi| grad_inner_product_unchecked(psi, &target)).collect();
        let phi_sq = grad_inner_product_unchecked(&target, &target).re;
        (residual_sq(phi_sq, &c, &g, &b)).sqrt() / h1_norm(&target)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn mesh1(eps: f64) -> MeshSpec {
        MeshSpec::recommended(1, eps, 1e-4).validate().unwrap()
    }

    #[test]
    fn normal_system_examples() {
        let m = mesh1(1.0 / 64.0);
        let st = NeighborStrategy::<1>::named("Q2P2").unwrap();
        let target = GaussianParams::new(RVec::<1>::new(m.dq), RVec::<1>::new(0.0), m.epsilon);
        let sys = build_normal_system(&target, &st, &m);
        let k0 = st.shifts.iter().position(|(q, p)| q[0] == 0 && p[0] == 0).unwrap();
        for j in 0..4 {
            assert!((sys.a[(j, j)].re - (PI * m.epsilon).sqrt()).abs() < 1e-15);
            assert!((sys.f[j] - sys.a[(j, k0)]).norm() < 1e-15);
        }
    }

    #[test]
    fn pinv_is_generalised_inverse() {
        // Roundoff in P·A·P grows with the spread of the retained spectrum.
        for name in ["Q2P2", "Q4P2", "Q2P4", "Q4P4"] {
            let pre = precompute(&NeighborStrategy::<1>::named(name).unwrap(), 0.5, PI / 8.0, DEFAULT_RCOND);
            let p = &pre.a_tilde_pinv;
            let sv = pre.a_tilde.clone().svd(false, false).singular_values;
            let smax = sv.max();
            let kept_min = sv.iter().cloned().filter(|&v| v > DEFAULT_RCOND * smax).fold(f64::MAX, f64::min);
            let tol = if name == "Q2P2" { 1e-10 } else { 1e-10_f64.max(100.0 * f64::EPSILON * smax / kept_min) };
            let d = p * &pre.a_tilde * p - p;
            assert!(d.norm() <= tol * p.norm(), "{name}: {}", d.norm() / p.norm());
        }
    }

    #[test]
    fn precomputed_matches_unit_epsilon_system() {
        let st = NeighborStrategy::<2>::named("Q2P2").unwrap();
        let (cq, cp) = (0.5, PI / 8.0);
        let pre = precompute(&st, cq, cp, DEFAULT_RCOND);
        let m = lattice(1.0, cq, cp);
        let target = GaussianParams::new(RVec::<2>::zeros(), RVec::<2>::zeros(), 1.0);
        let sys = build_normal_system(&target, &st, &m);
        let d = sys.a / Complex64::new(PI, 0.0) - &pre.a_tilde;
        assert!(d.norm() < 1e-14);
    }

    #[test]
    fn split_matches_direct_solve() {
        let eps = 1.0 / 64.0;
        let m = mesh1(eps);
        for name in ["Q2P2", "Q4P2", "Q2P4", "Q4P4"] {
            let st = NeighborStrategy::<1>::named(name).unwrap();
            let pre = precompute(&st, m.cq, m.cp, DEFAULT_RCOND);
            for (q, p) in [(0.37, 1.21), (-1.13, -0.4), (0.02, 2.9)] {
                let (q, p) = (RVec::<1>::new(q), RVec::<1>::new(p));
                let sr = pre.split(&q, &p, &m);
                let target = GaussianParams::new(q, p, eps);
                let sys = build_normal_system(&target, &st, &m);
                let direct = sys.solve(DEFAULT_RCOND);
                if name == "Q2P2" {
                    for (a, b) in sr.coeffs.iter().zip(&direct) {
                        assert!((a - b).norm() < 1e-9 * (1.0 + b.norm()), "{name} {a} {b}");
                    }
                }
                // ‖Σ (c_k - c'_k) ψ_k‖ relative to ‖φ‖
                let diff: Vec<Complex64> = sr.coeffs.iter().zip(&direct).map(|(a, b)| a - b).collect();
                let zero = vec![Complex64::new(0.0, 0.0); diff.len()];
                let gap = residual_sq(0.0, &diff, &zero, &sys.a).sqrt() / (PI * eps).sqrt().sqrt();
                let tol = if name == "Q2P2" { 1e-10 } else { 1e-8 };
                assert!(gap < tol, "{name}: {gap}");
                let e = e_lsa(eps, &q, &p, &st, m.cq, m.cp);
                assert!((sr.residual - e).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn on_grid_target_has_zero_residual() {
        let m = mesh1(1.0 / 64.0);
        let st = NeighborStrategy::<1>::named("Q2P2").unwrap();
        let pre = precompute(&st, m.cq, m.cp, DEFAULT_RCOND);
        let sr = pre.split(&RVec::<1>::new(3.0 * m.dq), &RVec::<1>::new(-2.0 * m.dp), &m);
        assert!(sr.residual < 1e-10);
        let k0 = st.zero_shift().unwrap();
        for (k, c) in sr.coeffs.iter().enumerate() {
            let expect = if k == k0 { 1.0 } else { 0.0 };
            assert!((c - expect).norm() < 1e-8, "{k}: {c}");
        }
    }

    #[test]
    fn q2p2_table_spot_value() {
        let pre = precompute(&NeighborStrategy::<1>::named("Q2P2").unwrap(), 0.5, PI / 8.0, DEFAULT_RCOND);
        let v = m_lsa(&pre, DEFAULT_SAMPLES, &Exec::sequential());
        assert!((v / 6.859e-4 - 1.0).abs() < 0.01, "{v}");
    }
}
