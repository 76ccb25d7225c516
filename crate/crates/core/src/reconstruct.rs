//! Wave reconstruction: the direct off-grid packet sum and the on-grid sum
//! evaluated with one folded inverse DFT per position grid point.

use crate::decompose::{axis_window, for_each_offset, PacketEnsemble};
use crate::error::{FggcError, Result};
use crate::exec::Exec;
use crate::fft::{Direction, FftNd};
use crate::field::ComplexField;
use crate::lsa::PrecomputedLSA;
use crate::mesh::{MeshSpec, PhaseIndex};
use crate::packet::WavePacket;
use num_complex::Complex64;
use std::collections::hash_map::Entry;
use std::collections::HashMap;

/// Corrected amplitudes `Ã(q, p)` on the phase-space lattice, sorted by
/// index with no repeated keys.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseGridAmplitudes<const D: usize> {
    pub entries: Vec<(PhaseIndex<D>, Complex64)>,
    pub mesh: MeshSpec,
}

impl<const D: usize> PhaseGridAmplitudes<D> {
    /// Sums contributions sharing an index. Equal keys are added in their
    /// input order.
    pub fn from_contributions(contribs: impl IntoIterator<Item = (PhaseIndex<D>, Complex64)>, mesh: &MeshSpec) -> Self {
        let mut acc: HashMap<PhaseIndex<D>, Complex64> = HashMap::new();
        for (k, v) in contribs {
            match acc.entry(k) {
                Entry::Occupied(mut e) => *e.get_mut() += v,
                Entry::Vacant(e) => {
                    e.insert(v);
                }
            }
        }
        let mut entries: Vec<(PhaseIndex<D>, Complex64)> = acc.into_iter().collect();
        entries.sort_unstable_by_key(|a| a.0);
        PhaseGridAmplitudes { entries, mesh: mesh.clone() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, idx: &PhaseIndex<D>) -> Option<Complex64> {
        self.entries.binary_search_by(|e| e.0.cmp(idx)).ok().map(|i| self.entries[i].1)
    }

    /// The table as an ensemble of on-grid packets with `A = Ã`, `S = 0`.
    pub fn to_ensemble(&self) -> PacketEnsemble<D> {
        let m = &self.mesh;
        let packets = self
            .entries
            .iter()
            .map(|(idx, a)| (*idx, WavePacket::initial(idx.q(m), idx.p(m), m.epsilon, *a)))
            .collect();
        PacketEnsemble::new(packets, m)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        PhaseGridAmplitudes {
            entries: self.entries.iter().map(|(k, v)| (*k, v * s)).collect(),
            mesh: self.mesh.clone(),
        }
    }
}

/// Splits every packet and merges `A e^{iS/ε} c_k` into the lattice table.
pub fn accumulate_corrected<const D: usize>(
    ens: &PacketEnsemble<D>,
    pre: &PrecomputedLSA<D>,
    exec: &Exec,
) -> PhaseGridAmplitudes<D> {
    let mesh = &ens.mesh;
    let per_packet = exec.map(&ens.packets, |(_, w)| {
        let split = pre.split(&w.params.q, &w.params.p, mesh);
        let scale = w.a * Complex64::from_polar(1.0, w.s / mesh.epsilon);
        pre.strategy
            .shifts
            .iter()
            .zip(&split.coeffs)
            .map(|((sq, sp), c)| (split.base.shifted(sq, sp), scale * c))
            .collect::<Vec<_>>()
    });
    PhaseGridAmplitudes::from_contributions(per_packet.into_iter().flatten(), mesh)
}

/// `u(x) = w Σ_j A_j e^{(i/ε)(S_j + P_j·(x-Q_j))} e^{-|x-Q_j|²/(2ε)}` with
/// each envelope cut at `r_cut·√ε` per axis.
pub fn reconstruct_direct<const D: usize>(ens: &PacketEnsemble<D>, r_cut: f64, exec: &Exec) -> ComplexField {
    let mesh = &ens.mesh;
    let radius = r_cut * mesh.epsilon.sqrt();
    let eps = mesh.epsilon;
    let strides = mesh.strides();
    let data = exec.sum_chunks(ens.len(), mesh.grid_len(), |range, buf| {
        for (_, w) in &ens.packets[range] {
            let factors: Vec<(std::ops::Range<usize>, Vec<Complex64>)> = (0..D)
                .map(|a| {
                    let (q, p) = (w.params.q[a], w.params.p[a]);
                    let r = mesh.window(a, q, radius);
                    let f = r
                        .clone()
                        .map(|j| {
                            let y = mesh.x(a, j) - q;
                            Complex64::new(-y * y / (2.0 * eps), p * y / eps).exp()
                        })
                        .collect();
                    (r, f)
                })
                .collect();
            let scale = w.a * Complex64::from_polar(ens.weight, w.s / eps);
            add_box(buf, &strides, &factors, scale);
        }
    });
    ComplexField { shape: mesh.nx.clone(), data }
}

/// `buf[x] += scale · Π_a factors_a[x_a]` over the box spanned by the
/// per-axis ranges.
fn add_box(buf: &mut [Complex64], strides: &[usize], factors: &[(std::ops::Range<usize>, Vec<Complex64>)], scale: Complex64) {
    let d = factors.len();
    let lens: Vec<usize> = factors.iter().map(|(r, _)| r.len()).collect();
    let (last_r, last_f) = &factors[d - 1];
    for_each_offset(&lens[..d - 1], |off| {
        let mut flat = last_r.start;
        let mut s = scale;
        for (a, &o) in off.iter().enumerate() {
            flat += (factors[a].0.start + o) * strides[a];
            s *= factors[a].1[o];
        }
        for (b, f) in buf[flat..flat + last_f.len()].iter_mut().zip(last_f) {
            *b += s * f;
        }
    });
}

/// On-grid reconstruction through per-q folded inverse DFTs. Equal to the
/// direct sum over the table's packets up to roundoff.
pub fn reconstruct_fft<const D: usize>(amps: &PhaseGridAmplitudes<D>, r_cut: f64, exec: &Exec) -> Result<ComplexField> {
    let mesh = &amps.mesh;
    if !mesh.is_validated() || mesh.dim != D {
        return Err(FggcError::InvalidMesh("reconstruction needs a validated mesh of matching dimension".into()));
    }
    let n = mesh.n_fold();
    let ni = n as i64;
    let plan = FftNd::cube(n, D);
    let radius = r_cut * mesh.epsilon.sqrt();
    let k = mesh.dp / mesh.epsilon;
    let weight = mesh.weight();
    let strides = mesh.strides();

    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=amps.entries.len() {
        if i == amps.entries.len() || amps.entries[i].0.iq != amps.entries[start].0.iq {
            groups.push(start..i);
            start = i;
        }
    }

    let data = exec.sum_chunks(groups.len(), mesh.grid_len(), |range, buf| {
        let mut spec = vec![Complex64::new(0.0, 0.0); n.pow(D as u32)];
        for g in &groups[range] {
            let iq = amps.entries[g.start].0.iq;
            let wins: Vec<_> = (0..D).map(|a| axis_window(mesh, a, iq[a] as f64 * mesh.dq, radius)).collect();
            if wins.iter().any(|w| w.range.is_empty()) {
                continue;
            }
            spec.iter_mut().for_each(|s| *s = Complex64::new(0.0, 0.0));
            for (idx, v) in &amps.entries[g.clone()] {
                let mut m = 0;
                let mut phase = 0.0;
                for a in 0..D {
                    m = m * n + idx.ip[a].rem_euclid(ni) as usize;
                    phase += idx.ip[a] as f64 * k * wins[a].r0;
                }
                spec[m] += v * Complex64::from_polar(1.0, phase);
            }
            plan.process(&mut spec, Direction::Inverse);
            let lens: Vec<usize> = wins.iter().map(|w| w.range.len()).collect();
            let last = &wins[D - 1];
            for_each_offset(&lens[..D - 1], |off| {
                let mut flat = last.range.start;
                let mut fold = 0;
                let mut env = weight;
                for (a, &o) in off.iter().enumerate() {
                    flat += (wins[a].range.start + o) * strides[a];
                    fold = fold * n + wins[a].fold[o];
                    env *= wins[a].env[o];
                }
                let row = &spec[fold * n..fold * n + n];
                for (kk, b) in buf[flat..flat + last.env.len()].iter_mut().enumerate() {
                    *b += row[last.fold[kk]] * (env * last.env[kk]);
                }
            });
        }
    });
    Ok(ComplexField { shape: mesh.nx.clone(), data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lsa::{precompute, DEFAULT_RCOND};
    use crate::mesh::{NeighborStrategy, RVec};
    use crate::packet::eval_packet;

    fn mesh1() -> MeshSpec {
        MeshSpec::recommended(1, 1.0 / 64.0, 1e-3).validate().unwrap()
    }

    #[test]
    fn single_on_grid_packet() {
        let m = mesh1();
        let idx = PhaseIndex::new([3], [5]);
        let amps = PhaseGridAmplitudes::from_contributions(vec![(idx, Complex64::new(1.0, 0.0))], &m);
        let u = reconstruct_fft(&amps, 30.0, &Exec::sequential()).unwrap();
        let g = crate::packet::GaussianParams::new(idx.q(&m), idx.p(&m), m.epsilon);
        for j in 0..m.nx[0] {
            let e = eval_packet(&g, &RVec::<1>::new(m.x(0, j))) * m.weight();
            assert!((u.data[j] - e).norm() < 1e-13 * m.weight(), "{j}");
        }
    }

    #[test]
    fn empty_table_gives_zero_field() {
        let m = mesh1();
        let amps = PhaseGridAmplitudes::<1>::from_contributions(vec![], &m);
        let u = reconstruct_fft(&amps, 9.0, &Exec::sequential()).unwrap();
        assert!(u.data.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn on_grid_packet_accumulates_to_itself() {
        let m = mesh1();
        let pre = precompute(&NeighborStrategy::<1>::named("Q2P2").unwrap(), m.cq, m.cp, DEFAULT_RCOND);
        let idx = PhaseIndex::new([-4], [7]);
        let mut w = WavePacket::initial(idx.q(&m), idx.p(&m), m.epsilon, Complex64::new(0.5, 0.25));
        w.s = 0.3;
        let ens = PacketEnsemble::new(vec![(idx, w)], &m);
        let amps = accumulate_corrected(&ens, &pre, &Exec::sequential());
        let expect = w.a * Complex64::from_polar(1.0, w.s / m.epsilon);
        assert!((amps.get(&idx).unwrap() - expect).norm() < 1e-8);
        for (k, v) in &amps.entries {
            if *k != idx {
                assert!(v.norm() < 1e-8);
            }
        }
    }

    #[test]
    fn duplicate_contributions_merge() {
        let m = mesh1();
        let a = PhaseIndex::new([1], [2]);
        let b = PhaseIndex::new([0], [2]);
        let t = PhaseGridAmplitudes::from_contributions(
            vec![(a, Complex64::new(1.0, 0.0)), (b, Complex64::new(0.0, 1.0)), (a, Complex64::new(2.0, 0.0))],
            &m,
        );
        assert_eq!(t.entries, vec![(b, Complex64::new(0.0, 1.0)), (a, Complex64::new(3.0, 0.0))]);
    }
}
