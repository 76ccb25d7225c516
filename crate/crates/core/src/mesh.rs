//! Grid geometry shared by every solver: the spatial grid, the phase-space
//! lattice `(q, p) = (iq·Δq, ip·Δp)`, floor/fraction splitting of off-grid
//! coordinates and the neighbor strategies used for grid-point correction.

use crate::error::{FggcError, Result};
use nalgebra::SVector;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::Range;

pub type RVec<const D: usize> = SVector<f64, D>;

/// Relative tolerance for the integrality checks on `N_fold` and `nx·Δx`.
const INTEGRAL_TOL: f64 = 1e-9;
/// `t - floor(t)` at or above `1 - FLOOR_GUARD` snaps up to the next integer.
const FLOOR_GUARD: f64 = 1e-12;

/// Discretisation of one experiment. `dq = cq·√ε` and `dp = cp·√ε` always.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshSpec {
    pub epsilon: f64,
    pub dim: usize,
    pub dx: f64,
    pub dq: f64,
    pub dp: f64,
    pub cq: f64,
    pub cp: f64,
    pub domain_lo: Vec<f64>,
    pub domain_hi: Vec<f64>,
    pub nx: Vec<usize>,
    pub dt: f64,
    #[serde(default)]
    n_fold: usize,
}

impl MeshSpec {
    /// Builds an unvalidated mesh on the box `[lo, hi]^dim`.
    pub fn new(dim: usize, epsilon: f64, dx: f64, cq: f64, cp: f64, lo: f64, hi: f64, dt: f64) -> Self {
        let sqrt_eps = epsilon.sqrt();
        let n = ((hi - lo) / dx).round().max(0.0) as usize;
        MeshSpec {
            epsilon,
            dim,
            dx,
            dq: cq * sqrt_eps,
            dp: cp * sqrt_eps,
            cq,
            cp,
            domain_lo: vec![lo; dim],
            domain_hi: vec![hi; dim],
            nx: vec![n; dim],
            dt,
            n_fold: 0,
        }
    }

    /// `Δx = ε`, `Δq = √ε/2`, `Δp = π√ε/8` on `[-2, 2]^dim`.
    pub fn recommended(dim: usize, epsilon: f64, dt: f64) -> Self {
        Self::new(dim, epsilon, epsilon, 0.5, PI / 8.0, -2.0, 2.0, dt)
    }

    /// Checks every mesh invariant and records `N_fold = 2πε/(Δp·Δx)`.
    pub fn validate(mut self) -> Result<Self> {
        let bad = |m: String| Err(FggcError::InvalidMesh(m));
        if !(1..=3).contains(&self.dim) {
            return bad(format!("dimension {} not in 1..=3", self.dim));
        }
        for (name, v) in [
            ("epsilon", self.epsilon),
            ("dx", self.dx),
            ("dq", self.dq),
            ("dp", self.dp),
            ("cq", self.cq),
            ("cp", self.cp),
            ("dt", self.dt),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        let sqrt_eps = self.epsilon.sqrt();
        if !rel_eq(self.dq, self.cq * sqrt_eps, 1e-12) || !rel_eq(self.dp, self.cp * sqrt_eps, 1e-12) {
            return bad("dq and dp must equal cq·√ε and cp·√ε".into());
        }
        if self.domain_lo.len() != self.dim || self.domain_hi.len() != self.dim || self.nx.len() != self.dim {
            return bad("domain bounds and grid counts must have one entry per axis".into());
        }
        for a in 0..self.dim {
            let extent = self.domain_hi[a] - self.domain_lo[a];
            if !(extent > 0.0) || self.nx[a] == 0 {
                return bad(format!("empty domain on axis {a}"));
            }
            if !rel_eq(self.nx[a] as f64 * self.dx, extent, INTEGRAL_TOL) {
                return bad(format!(
                    "nx·dx = {} does not match the extent {extent} on axis {a}",
                    self.nx[a] as f64 * self.dx
                ));
            }
        }
        let fold = 2.0 * PI * self.epsilon / (self.dp * self.dx);
        let rounded = fold.round();
        if rounded < 1.0 || (fold - rounded).abs() > INTEGRAL_TOL * fold {
            return bad(format!("N_fold = 2πε/(dp·dx) = {fold} is not a positive integer"));
        }
        self.n_fold = rounded as usize;
        Ok(self)
    }

    pub fn is_validated(&self) -> bool {
        self.n_fold > 0
    }

    /// Length of the per-q momentum DFT. Zero until [`MeshSpec::validate`].
    pub fn n_fold(&self) -> usize {
        self.n_fold
    }

    pub fn grid_len(&self) -> usize {
        self.nx.iter().product()
    }

    /// Row-major strides of the spatial grid (last axis fastest).
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dim];
        for a in (0..self.dim.saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.nx[a + 1];
        }
        s
    }

    pub fn x(&self, axis: usize, j: usize) -> f64 {
        self.domain_lo[axis] + j as f64 * self.dx
    }

    /// Grid indices `j` on `axis` with `|x_j - center| <= radius`.
    pub fn window(&self, axis: usize, center: f64, radius: f64) -> Range<usize> {
        let lo = ((center - radius - self.domain_lo[axis]) / self.dx).ceil().max(0.0);
        let hi = ((center + radius - self.domain_lo[axis]) / self.dx).floor() + 1.0;
        let hi = hi.min(self.nx[axis] as f64).max(lo);
        lo as usize..hi as usize
    }

    /// Nearest spatial grid index to `center` (not clipped to the domain).
    pub fn nearest_index(&self, axis: usize, center: f64) -> i64 {
        ((center - self.domain_lo[axis]) / self.dx).round() as i64
    }

    /// `iq` values with `iq·Δq` inside `[lo, hi)` on `axis`.
    pub fn q_index_range(&self, axis: usize) -> Range<i64> {
        let lo = (self.domain_lo[axis] / self.dq - FLOOR_GUARD).ceil() as i64;
        let hi = (self.domain_hi[axis] / self.dq - FLOOR_GUARD).ceil() as i64;
        lo..hi
    }

    /// Phase-space quadrature weight `(ΔqΔp)^d / (2πε)^{3d/2}`.
    pub fn weight(&self) -> f64 {
        let d = self.dim as i32;
        (self.dq * self.dp).powi(d) / (2.0 * PI * self.epsilon).powf(1.5 * d as f64)
    }
}

fn rel_eq(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// Integer lattice coordinates of an on-grid phase-space point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PhaseIndex<const D: usize> {
    pub iq: [i64; D],
    pub ip: [i64; D],
}

impl<const D: usize> PhaseIndex<D> {
    pub fn new(iq: [i64; D], ip: [i64; D]) -> Self {
        PhaseIndex { iq, ip }
    }

    pub fn q(&self, mesh: &MeshSpec) -> RVec<D> {
        RVec::from_fn(|a, _| self.iq[a] as f64 * mesh.dq)
    }

    pub fn p(&self, mesh: &MeshSpec) -> RVec<D> {
        RVec::from_fn(|a, _| self.ip[a] as f64 * mesh.dp)
    }

    pub fn shifted(&self, dq: &[i64; D], dp: &[i64; D]) -> Self {
        let mut out = *self;
        for a in 0..D {
            out.iq[a] += dq[a];
            out.ip[a] += dp[a];
        }
        out
    }
}

/// Integer and fractional parts of a phase-space point relative to the lattice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FracDecomp<const D: usize> {
    pub base: PhaseIndex<D>,
    pub int_q: RVec<D>,
    pub int_p: RVec<D>,
    pub frac_q: RVec<D>,
    pub frac_p: RVec<D>,
    /// `frac_q / Δq`, in `[0, 1)`.
    pub s: RVec<D>,
    /// `frac_p / Δp`, in `[0, 1)`.
    pub t: RVec<D>,
}

/// Floor with a guard against `t - floor(t)` rounding to just below one.
fn guarded_floor(t: f64) -> (i64, f64) {
    let mut i = t.floor();
    let mut frac = t - i;
    if frac >= 1.0 - FLOOR_GUARD {
        i += 1.0;
        frac = 0.0;
    }
    (i as i64, frac)
}

pub fn frac_decompose<const D: usize>(q: &RVec<D>, p: &RVec<D>, mesh: &MeshSpec) -> FracDecomp<D> {
    let mut iq = [0i64; D];
    let mut ip = [0i64; D];
    let mut s = RVec::<D>::zeros();
    let mut t = RVec::<D>::zeros();
    for a in 0..D {
        let (i, f) = guarded_floor(q[a] / mesh.dq);
        iq[a] = i;
        s[a] = f;
        let (i, f) = guarded_floor(p[a] / mesh.dp);
        ip[a] = i;
        t[a] = f;
    }
    let base = PhaseIndex { iq, ip };
    FracDecomp {
        base,
        int_q: base.q(mesh),
        int_p: base.p(mesh),
        frac_q: s * mesh.dq,
        frac_p: t * mesh.dp,
        s,
        t,
    }
}

/// A set of lattice shifts `(δq⁽ᵏ⁾, δp⁽ᵏ⁾)` defining the on-grid neighbors of
/// an off-grid packet.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborStrategy<const D: usize> {
    pub name: String,
    pub shifts: Vec<([i64; D], [i64; D])>,
}

impl<const D: usize> NeighborStrategy<D> {
    /// Tensor product of per-axis position shifts and per-axis momentum
    /// shifts over all `D` axes. Position shifts vary slowest.
    pub fn tensor(name: impl Into<String>, q_axis: &[i64], p_axis: &[i64]) -> Self {
        let qs = axis_product::<D>(q_axis);
        let ps = axis_product::<D>(p_axis);
        let shifts = qs.iter().flat_map(|q| ps.iter().map(move |p| (*q, *p))).collect();
        NeighborStrategy { name: name.into(), shifts }
    }

    /// Named strategies `QmPn` with `m, n ∈ {2, 4}`: `m` position shifts and
    /// `n` momentum shifts per axis, `{0, 1}` or `{-1, 0, 1, 2}`.
    pub fn named(name: &str) -> Result<Self> {
        let parse = |c: char| match c {
            '2' => Some(&[0i64, 1][..]),
            '4' => Some(&[-1i64, 0, 1, 2][..]),
            _ => None,
        };
        let chars: Vec<char> = name.chars().collect();
        let sets = match chars.as_slice() {
            ['Q', m, 'P', n] => parse(*m).zip(parse(*n)),
            _ => None,
        };
        match sets {
            Some((q, p)) => Ok(Self::tensor(name, q, p)),
            None => Err(FggcError::Config(format!("unknown neighbor strategy '{name}'"))),
        }
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.shifts.is_empty() {
            return Err(FggcError::Config("neighbor strategy has no shifts".into()));
        }
        let mut sorted = self.shifts.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.shifts.len() {
            return Err(FggcError::Config(format!("strategy '{}' has repeated shifts", self.name)));
        }
        Ok(())
    }

    pub fn zero_shift(&self) -> Option<usize> {
        self.shifts.iter().position(|(q, p)| q.iter().chain(p).all(|&v| v == 0))
    }
}

fn axis_product<const D: usize>(axis: &[i64]) -> Vec<[i64; D]> {
    let mut out = vec![[0i64; D]];
    for a in 0..D {
        out = out
            .into_iter()
            .flat_map(|v| {
                axis.iter().map(move |&s| {
                    let mut w = v;
                    w[a] = s;
                    w
                })
            })
            .collect();
    }
    out
}

/// The `k`-th neighbor (0-based) of `(Q, P)`: `floor(Q/Δq)Δq + δq⁽ᵏ⁾Δq`, and
/// likewise in momentum.
pub fn neighbor_map<const D: usize>(
    q: &RVec<D>,
    p: &RVec<D>,
    k: usize,
    strategy: &NeighborStrategy<D>,
    mesh: &MeshSpec,
) -> Result<(RVec<D>, RVec<D>)> {
    let (dq, dp) = strategy
        .shifts
        .get(k)
        .ok_or(FggcError::NeighborIndex { index: k, len: strategy.len() })?;
    let idx = frac_decompose(q, p, mesh).base.shifted(dq, dp);
    Ok((idx.q(mesh), idx.p(mesh)))
}
