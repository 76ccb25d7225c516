//! Initial decomposition of a sampled field into on-grid wave-packets,
//! `A(0, q, p) = 2^{d/2} û₀(q, p)`, one folded DFT per position grid point.

use crate::error::{FggcError, Result};
use crate::exec::Exec;
use crate::fft::{Direction, FftNd};
use crate::field::ComplexField;
use crate::mesh::{MeshSpec, PhaseIndex, RVec};
use crate::packet::WavePacket;
use num_complex::Complex64;
use std::ops::Range;

pub const DEFAULT_R_CUT: f64 = 9.0;
pub const DEFAULT_TAU: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecomposeOptions {
    /// Relative amplitude threshold against the largest `|A|`.
    pub tau: f64,
    /// Gaussian window radius in units of `√ε`.
    pub r_cut: f64,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions { tau: DEFAULT_TAU, r_cut: DEFAULT_R_CUT }
    }
}

#[derive(Clone, Debug)]
pub struct PacketEnsemble<const D: usize> {
    pub packets: Vec<(PhaseIndex<D>, WavePacket<D>)>,
    pub mesh: MeshSpec,
    /// `(ΔqΔp)^d / (2πε)^{3d/2}`.
    pub weight: f64,
}

impl<const D: usize> PacketEnsemble<D> {
    pub fn new(packets: Vec<(PhaseIndex<D>, WavePacket<D>)>, mesh: &MeshSpec) -> Self {
        PacketEnsemble { packets, mesh: mesh.clone(), weight: mesh.weight() }
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }
}

/// Per-axis data of the Gaussian window around one grid point `q`.
pub(crate) struct AxisWindow {
    pub(crate) range: Range<usize>,
    pub(crate) env: Vec<f64>,
    /// `(j - j₀) mod N` for each `j` in `range`.
    pub(crate) fold: Vec<usize>,
    /// `x_{j₀} - q`
    pub(crate) r0: f64,
}

pub(crate) fn axis_window(mesh: &MeshSpec, axis: usize, q: f64, radius: f64) -> AxisWindow {
    let n = mesh.n_fold() as i64;
    let range = mesh.window(axis, q, radius);
    let j0 = mesh.nearest_index(axis, q);
    let r0 = mesh.domain_lo[axis] + j0 as f64 * mesh.dx - q;
    let two_eps = 2.0 * mesh.epsilon;
    let env = range.clone().map(|j| (-(mesh.x(axis, j) - q).powi(2) / two_eps).exp()).collect();
    let fold = range.clone().map(|j| (j as i64 - j0).rem_euclid(n) as usize).collect();
    AxisWindow { range, env, fold, r0 }
}

fn windows<const D: usize>(mesh: &MeshSpec, iq: &[i64; D], r_cut: f64) -> Vec<AxisWindow> {
    let radius = r_cut * mesh.epsilon.sqrt();
    (0..D).map(|a| axis_window(mesh, a, iq[a] as f64 * mesh.dq, radius)).collect()
}

/// Visits every multi-index of the box `ranges` (offsets into each range)
/// in row-major order.
pub(crate) fn for_each_offset(lens: &[usize], mut f: impl FnMut(&[usize])) {
    if lens.contains(&0) {
        return;
    }
    let mut idx = vec![0usize; lens.len()];
    loop {
        f(&idx);
        let mut a = lens.len();
        loop {
            if a == 0 {
                return;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < lens[a] {
                break;
            }
            idx[a] = 0;
        }
    }
}

/// Smallest integer `≡ m (mod n)` in `[c - n/2, c - n/2 + n)`.
fn representative(m: usize, c: i64, n: i64) -> i64 {
    let lo = c - n / 2;
    lo + (m as i64 - lo).rem_euclid(n)
}

/// `û₀(q, p) = Δx^d Σ_y u₀(y) e^{-(i/ε) p·(y-q)} e^{-|y-q|²/(2ε)}` at the
/// grid point `q = iq·Δq` for the `N_fold^d` momenta `p = ip·Δp` nearest
/// the spectral peak.
pub fn transform_u0<const D: usize>(
    u0: &ComplexField,
    iq: &[i64; D],
    mesh: &MeshSpec,
    r_cut: f64,
) -> Result<Vec<([i64; D], Complex64)>> {
    u0.check_mesh(mesh)?;
    let plan = FftNd::cube(mesh.n_fold(), D);
    Ok(transform_with(u0, iq, mesh, r_cut, &plan))
}

fn transform_with<const D: usize>(
    u0: &ComplexField,
    iq: &[i64; D],
    mesh: &MeshSpec,
    r_cut: f64,
    plan: &FftNd,
) -> Vec<([i64; D], Complex64)> {
    let n = mesh.n_fold();
    let wins = windows(mesh, iq, r_cut);
    let mut buf = vec![Complex64::new(0.0, 0.0); n.pow(D as u32)];
    let strides = mesh.strides();
    let lens: Vec<usize> = wins.iter().map(|w| w.range.len()).collect();
    let last = D - 1;
    let inner = &wins[last];
    for_each_offset(&lens[..last], |off| {
        let mut flat = 0;
        let mut fold = 0;
        let mut env = 1.0;
        for (a, &o) in off.iter().enumerate() {
            flat += (wins[a].range.start + o) * strides[a];
            fold = fold * n + wins[a].fold[o];
            env *= wins[a].env[o];
        }
        let row = &u0.data[flat + inner.range.start..flat + inner.range.end];
        for (k, u) in row.iter().enumerate() {
            buf[fold * n + inner.fold[k]] += u * (env * inner.env[k]);
        }
    });
    plan.process(&mut buf, Direction::Forward);

    let peak = buf
        .iter()
        .enumerate()
        .fold((0, -1.0), |(bi, bv), (i, z)| if z.norm_sqr() > bv { (i, z.norm_sqr()) } else { (bi, bv) })
        .0;
    let ni = n as i64;
    let mut centre = [0i64; D];
    let mut rem = peak;
    for a in (0..D).rev() {
        let m = (rem % n) as i64;
        rem /= n;
        centre[a] = if m >= ni / 2 { m - ni } else { m };
    }
    let scale = mesh.dx.powi(D as i32);
    let k = mesh.dp / mesh.epsilon;
    let mut out = Vec::with_capacity(buf.len());
    let mut ip = [0i64; D];
    for (flat, z) in buf.iter().enumerate() {
        let mut rem = flat;
        let mut phase = 0.0;
        for a in (0..D).rev() {
            ip[a] = representative(rem % n, centre[a], ni);
            rem /= n;
            phase += ip[a] as f64 * k * wins[a].r0;
        }
        out.push((ip, z * Complex64::from_polar(scale, -phase)));
    }
    out
}

/// `Δx^d Σ_y |u₀(y)| e^{-|y-q|²/(2ε)}` over the same windows, for every `q`
/// in the box of `iq` ranges. This bounds `|û₀(q, ·)|`.
fn mass_bound(u0: &ComplexField, mesh: &MeshSpec, q_ranges: &[Range<i64>], r_cut: f64) -> Vec<f64> {
    let radius = r_cut * mesh.epsilon.sqrt();
    let mut shape = mesh.nx.clone();
    let mut cur: Vec<f64> = u0.data.iter().map(|z| z.norm()).collect();
    for (axis, qr) in q_ranges.iter().enumerate() {
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..].iter().product();
        let nq = qr.clone().count();
        let mut next = vec![0.0; outer * nq * inner];
        for (k, iq) in qr.clone().enumerate() {
            let w = axis_window(mesh, axis, iq as f64 * mesh.dq, radius);
            for o in 0..outer {
                let dst = &mut next[(o * nq + k) * inner..(o * nq + k + 1) * inner];
                for (e, j) in w.env.iter().zip(w.range.clone()) {
                    let src = &cur[(o * shape[axis] + j) * inner..(o * shape[axis] + j + 1) * inner];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += e * s;
                    }
                }
            }
        }
        shape[axis] = nq;
        cur = next;
    }
    let scale = mesh.dx.powi(mesh.dim as i32);
    cur.iter_mut().for_each(|v| *v *= scale);
    cur
}

/// Decomposes `u0` into the packets with `|A| ≥ tau · max|A|`, sorted by
/// phase index.
pub fn initial_decompose<const D: usize>(
    u0: &ComplexField,
    mesh: &MeshSpec,
    opts: &DecomposeOptions,
    exec: &Exec,
) -> Result<PacketEnsemble<D>> {
    if !mesh.is_validated() || mesh.dim != D {
        return Err(FggcError::InvalidMesh(format!("mesh must be validated with dim {D}")));
    }
    if !(0.0..1.0).contains(&opts.tau) || !(opts.r_cut > 0.0) {
        return Err(FggcError::Config(format!("tau {} / r_cut {} out of range", opts.tau, opts.r_cut)));
    }
    u0.check_mesh(mesh)?;
    let q_ranges: Vec<Range<i64>> = (0..D).map(|a| mesh.q_index_range(a)).collect();
    let q_lens: Vec<usize> = q_ranges.iter().map(|r| r.clone().count()).collect();
    let mut qs: Vec<[i64; D]> = Vec::new();
    for_each_offset(&q_lens, |off| qs.push(std::array::from_fn(|a| q_ranges[a].start + off[a] as i64)));

    let amp = 2f64.powf(D as f64 / 2.0);
    let plan = FftNd::cube(mesh.n_fold(), D);
    let bound = mass_bound(u0, mesh, &q_ranges, opts.r_cut);

    // Any q whose bound cannot reach tau times a known amplitude is skipped;
    // so is any entry below that level.
    let floor = if opts.tau > 0.0 {
        let best = bound.iter().enumerate().fold(0, |b, (i, v)| if *v > bound[b] { i } else { b });
        let probe = transform_with(u0, &qs[best], mesh, opts.r_cut, &plan);
        opts.tau * amp * probe.iter().map(|(_, z)| z.norm()).fold(0.0, f64::max)
    } else {
        0.0
    };
    let active: Vec<usize> = (0..qs.len()).filter(|&i| opts.tau == 0.0 || amp * bound[i] >= floor).collect();

    let per_q = exec.map(&active, |&i| {
        transform_with(u0, &qs[i], mesh, opts.r_cut, &plan)
            .into_iter()
            .map(|(ip, z)| (ip, z * amp))
            .filter(|(_, a)| a.norm() >= floor)
            .collect::<Vec<_>>()
    });
    let max = per_q.iter().flatten().map(|(_, a)| a.norm()).fold(0.0, f64::max);
    let thr = opts.tau * max;
    let mut packets = Vec::new();
    for (&i, list) in active.iter().zip(per_q) {
        let iq = qs[i];
        for (ip, a) in list {
            if a.norm() >= thr {
                let idx = PhaseIndex::new(iq, ip);
                packets.push((idx, WavePacket::initial(idx.q(mesh), idx.p(mesh), mesh.epsilon, a)));
            }
        }
    }
    if packets.is_empty() || max == 0.0 {
        return Err(FggcError::EmptyEnsemble);
    }
    packets.sort_by_key(|a| a.0);
    Ok(PacketEnsemble::new(packets, mesh))
}

/// Phase-space points of an ensemble, for diagnostics.
pub fn centres<const D: usize>(ens: &PacketEnsemble<D>) -> Vec<(RVec<D>, RVec<D>)> {
    ens.packets.iter().map(|(_, w)| (w.params.q, w.params.p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::{GaussianInit, InitialCondition};

    #[test]
    fn representative_window() {
        assert_eq!(representative(0, 0, 8), 0);
        assert_eq!(representative(7, 0, 8), -1);
        assert_eq!(representative(4, 0, 8), -4);
        assert_eq!(representative(3, 10, 8), 11);
    }

    #[test]
    fn zero_field_is_empty() {
        let mesh = MeshSpec::recommended(1, 1.0 / 64.0, 1e-3).validate().unwrap();
        let u0 = ComplexField::zeros(&mesh.nx);
        let r = initial_decompose::<1>(&u0, &mesh, &DecomposeOptions::default(), &Exec::sequential());
        assert!(matches!(r, Err(FggcError::EmptyEnsemble)));
        let t = transform_u0(&u0, &[3], &mesh, 9.0).unwrap();
        assert!(t.iter().all(|(_, z)| z.norm() == 0.0));
    }

    #[test]
    fn tau_zero_keeps_full_grid() {
        let mesh = MeshSpec::recommended(1, 1.0 / 16.0, 1e-3).validate().unwrap();
        let u0 = InitialCondition::Gaussian(GaussianInit::default()).sample(&mesh).unwrap();
        let opts = DecomposeOptions { tau: 0.0, ..Default::default() };
        let ens = initial_decompose::<1>(&u0, &mesh, &opts, &Exec::sequential()).unwrap();
        assert_eq!(ens.len(), mesh.q_index_range(0).count() * mesh.n_fold());
    }

    #[test]
    fn mass_bound_dominates() {
        let mesh = MeshSpec::recommended(1, 1.0 / 64.0, 1e-3).validate().unwrap();
        let u0 = InitialCondition::Gaussian(GaussianInit::default()).sample(&mesh).unwrap();
        let qr = mesh.q_index_range(0);
        let b = mass_bound(&u0, &mesh, std::slice::from_ref(&qr), 9.0);
        for (k, iq) in qr.enumerate() {
            let t = transform_u0(&u0, &[iq], &mesh, 9.0).unwrap();
            let m = t.iter().map(|(_, z)| z.norm()).fold(0.0, f64::max);
            assert!(m <= b[k] * (1.0 + 1e-12));
        }
    }
}
