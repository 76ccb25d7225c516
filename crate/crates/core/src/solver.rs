//! End-to-end drivers: TSSP, FGA, FGGC and multi-step FGGC.

use crate::config::{ExperimentConfig, InitialSpec, SolverKind};
use crate::decompose::{initial_decompose, DecomposeOptions, PacketEnsemble};
use crate::error::{FggcError, Result};
use crate::exec::Exec;
use crate::field::{ComplexField, FieldFile};
use crate::flow::{evolve_all, step_count};
use crate::initial::InitialCondition;
use crate::lsa::{precompute, PrecomputedLSA};
use crate::mesh::{MeshSpec, NeighborStrategy, PhaseIndex};
use crate::packet::WavePacket;
use crate::potential::Potential;
use crate::reconstruct::{reconstruct_direct, reconstruct_fft, PhaseGridAmplitudes};
use crate::tssp::solve_tssp;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::time::Instant;

/// Everything a solver needs, independent of the file format it came from.
#[derive(Clone, Debug)]
pub struct Problem {
    pub mesh: MeshSpec,
    pub potential: Potential,
    pub u0: ComplexField,
    pub t_final: f64,
    pub strategy: String,
    pub decompose: DecomposeOptions,
    pub rcond: f64,
}

impl Problem {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let mesh = cfg.validate()?;
        let ic = match &cfg.initial {
            InitialSpec::Gaussian(g) => InitialCondition::Gaussian(g.clone()),
            InitialSpec::File { path } => {
                let f = FieldFile::read(path)?;
                if f.header.epsilon != mesh.epsilon {
                    return Err(FggcError::EpsilonMismatch(f.header.epsilon, mesh.epsilon));
                }
                InitialCondition::Sampled(f.field)
            }
        };
        Ok(Problem {
            u0: ic.sample(&mesh)?,
            mesh,
            potential: cfg.potential.clone(),
            t_final: cfg.t_final,
            strategy: cfg.strategy.clone(),
            decompose: DecomposeOptions { tau: cfg.tau, r_cut: cfg.r_cut },
            rcond: cfg.rcond,
        })
    }
}

/// Wall-clock seconds per phase.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub decompose_s: f64,
    pub evolve_s: f64,
    pub lsa_s: f64,
    pub reconstruct_s: f64,
    pub total_s: f64,
    pub packet_count: usize,
    pub cache_hits: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SegmentStats {
    pub packets: usize,
    pub evolved: usize,
    pub cache_hits: usize,
}

#[derive(Clone, Debug)]
pub struct SolveOutput {
    pub field: ComplexField,
    pub timing: Timing,
    pub segments: Vec<SegmentStats>,
}

/// Learned map from an initial lattice point to the split of its evolved
/// unit-amplitude packet.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowMapEntry<const D: usize> {
    pub key: PhaseIndex<D>,
    pub final_base: PhaseIndex<D>,
    /// `a · e^{iS/ε} · c_k` for the unit-amplitude evolution.
    pub combined_coeffs: Vec<Complex64>,
}

pub type FlowMemo<const D: usize> = HashMap<PhaseIndex<D>, FlowMapEntry<D>>;

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

fn strategy<const D: usize>(pb: &Problem) -> Result<NeighborStrategy<D>> {
    let st = NeighborStrategy::<D>::named(&pb.strategy)?;
    st.validate()?;
    Ok(st)
}

pub fn solve_tssp_problem(pb: &Problem) -> Result<SolveOutput> {
    let t0 = Instant::now();
    let field = solve_tssp(&pb.u0, &pb.mesh, &pb.potential, pb.t_final, pb.mesh.dt)?;
    let total = secs(t0);
    let timing = Timing { evolve_s: total, total_s: total, ..Default::default() };
    Ok(SolveOutput { field, timing, segments: Vec::new() })
}

/// Decompose, evolve every packet, then sum the off-grid packets directly.
pub fn solve_fga<const D: usize>(pb: &Problem, exec: &Exec) -> Result<SolveOutput> {
    let start = Instant::now();
    let mut timing = Timing::default();
    let t = Instant::now();
    let ens = initial_decompose::<D>(&pb.u0, &pb.mesh, &pb.decompose, exec)?;
    timing.decompose_s = secs(t);
    timing.packet_count = ens.len();

    let t = Instant::now();
    let packets: Vec<WavePacket<D>> = ens.packets.iter().map(|(_, w)| *w).collect();
    let evolved = evolve_all(&packets, &pb.potential, pb.t_final, pb.mesh.dt, exec)?;
    timing.evolve_s = secs(t);

    let t = Instant::now();
    let ens = PacketEnsemble::new(ens.packets.iter().map(|(k, _)| *k).zip(evolved).collect(), &pb.mesh);
    let field = reconstruct_direct(&ens, pb.decompose.r_cut, exec);
    timing.reconstruct_s = secs(t);
    timing.total_s = secs(start);
    Ok(SolveOutput { field, timing, segments: Vec::new() })
}

/// One decompose → evolve/split → accumulate → reconstruct pass over
/// `t_evo`. With a memo, known initial points skip evolution and
/// splitting, and new ones are recorded.
fn fggc_segment<const D: usize>(
    u: &ComplexField,
    pb: &Problem,
    pre: &PrecomputedLSA<D>,
    t_evo: f64,
    mut memo: Option<&mut FlowMemo<D>>,
    exec: &Exec,
    timing: &mut Timing,
) -> Result<(ComplexField, SegmentStats)> {
    let mesh = &pb.mesh;
    let t = Instant::now();
    let ens = initial_decompose::<D>(u, mesh, &pb.decompose, exec)?;
    timing.decompose_s += secs(t);
    timing.packet_count += ens.len();

    let misses: Vec<PhaseIndex<D>> = ens
        .packets
        .iter()
        .map(|(k, _)| *k)
        .filter(|k| memo.as_ref().is_none_or(|m| !m.contains_key(k)))
        .collect();
    let hits = ens.len() - misses.len();

    let t = Instant::now();
    let unit: Vec<WavePacket<D>> = misses
        .iter()
        .map(|k| WavePacket::initial(k.q(mesh), k.p(mesh), mesh.epsilon, Complex64::new(1.0, 0.0)))
        .collect();
    let evolved = evolve_all(&unit, &pb.potential, t_evo, mesh.dt, exec)?;
    timing.evolve_s += secs(t);

    let t = Instant::now();
    let fresh: Vec<FlowMapEntry<D>> = exec.map_range(misses.len(), |i| {
        let w = &evolved[i];
        let split = pre.split(&w.params.q, &w.params.p, mesh);
        let phase = w.a * Complex64::from_polar(1.0, w.s / mesh.epsilon);
        FlowMapEntry {
            key: misses[i],
            final_base: split.base,
            combined_coeffs: split.coeffs.iter().map(|c| phase * c).collect(),
        }
    });
    let fresh_by_key: HashMap<PhaseIndex<D>, usize> = fresh.iter().enumerate().map(|(i, e)| (e.key, i)).collect();
    let known = memo.as_deref();
    let lookup = |k: &PhaseIndex<D>| -> &FlowMapEntry<D> {
        match fresh_by_key.get(k) {
            Some(&i) => &fresh[i],
            None => known.and_then(|m| m.get(k)).expect("memo entry present"),
        }
    };
    let contribs = ens.packets.iter().flat_map(|(k, w)| {
        let e = lookup(k);
        pre.strategy
            .shifts
            .iter()
            .zip(&e.combined_coeffs)
            .map(move |((sq, sp), c)| (e.final_base.shifted(sq, sp), w.a * c))
    });
    let amps = PhaseGridAmplitudes::from_contributions(contribs, mesh);
    if let Some(m) = memo.as_mut() {
        for e in fresh {
            m.insert(e.key, e);
        }
    }
    timing.lsa_s += secs(t);
    timing.cache_hits += hits;

    let t = Instant::now();
    let field = reconstruct_fft(&amps, pb.decompose.r_cut, exec)?;
    timing.reconstruct_s += secs(t);
    Ok((field, SegmentStats { packets: ens.len(), evolved: misses.len(), cache_hits: hits }))
}

/// Single-shot grid-point correction with the precomputed pseudo-inverse.
pub fn solve_fggc<const D: usize>(pb: &Problem, exec: &Exec) -> Result<SolveOutput> {
    let start = Instant::now();
    let st = strategy::<D>(pb)?;
    let mut timing = Timing::default();
    let t = Instant::now();
    let pre = precompute(&st, pb.mesh.cq, pb.mesh.cp, pb.rcond);
    timing.lsa_s += secs(t);
    let (field, stats) = fggc_segment(&pb.u0, pb, &pre, pb.t_final, None, exec, &mut timing)?;
    timing.total_s = secs(start);
    Ok(SolveOutput { field, timing, segments: vec![stats] })
}

/// `t_multi` segments of length `t_evo`, each restarting from the
/// previous reconstruction and sharing one flow-map memo.
pub fn solve_fggc_multistep<const D: usize>(pb: &Problem, t_multi: usize, t_evo: f64, exec: &Exec) -> Result<SolveOutput> {
    let (memo, out) = solve_fggc_multistep_with_memo::<D>(pb, t_multi, t_evo, exec)?;
    drop(memo);
    Ok(out)
}

/// As [`solve_fggc_multistep`], also returning the learned memo.
pub fn solve_fggc_multistep_with_memo<const D: usize>(
    pb: &Problem,
    t_multi: usize,
    t_evo: f64,
    exec: &Exec,
) -> Result<(FlowMemo<D>, SolveOutput)> {
    if t_multi == 0 || (t_multi as f64 * t_evo - pb.t_final).abs() > 1e-9 * pb.t_final.max(1.0) {
        return Err(FggcError::Config(format!("t_multi·t_evo = {} must equal t_final = {}", t_multi as f64 * t_evo, pb.t_final)));
    }
    step_count(t_evo, pb.mesh.dt)?;
    let start = Instant::now();
    let st = strategy::<D>(pb)?;
    let mut timing = Timing::default();
    let t = Instant::now();
    let pre = precompute(&st, pb.mesh.cq, pb.mesh.cp, pb.rcond);
    timing.lsa_s += secs(t);
    let mut memo = FlowMemo::new();
    let mut u = pb.u0.clone();
    let mut segments = Vec::with_capacity(t_multi);
    for _ in 0..t_multi {
        let (next, stats) = fggc_segment(&u, pb, &pre, t_evo, Some(&mut memo), exec, &mut timing)?;
        u = next;
        segments.push(stats);
    }
    timing.total_s = secs(start);
    Ok((memo, SolveOutput { field: u, timing, segments }))
}

fn run_dim<const D: usize>(cfg: &ExperimentConfig, pb: &Problem, exec: &Exec) -> Result<SolveOutput> {
    match cfg.solver {
        SolverKind::Tssp => solve_tssp_problem(pb),
        SolverKind::Fga => solve_fga::<D>(pb, exec),
        SolverKind::Fggc => solve_fggc::<D>(pb, exec),
        SolverKind::FggcMultistep => {
            let m = cfg.t_multi.expect("validated");
            let t_evo = cfg.t_evo.expect("validated");
            solve_fggc_multistep::<D>(pb, m, t_evo, exec)
        }
    }
}

/// Validates `cfg`, builds the problem and runs the configured solver.
pub fn run(cfg: &ExperimentConfig, exec: &Exec) -> Result<(Problem, SolveOutput)> {
    let pb = Problem::from_config(cfg)?;
    let out = match cfg.dim {
        1 => run_dim::<1>(cfg, &pb, exec),
        2 => run_dim::<2>(cfg, &pb, exec),
        3 => run_dim::<3>(cfg, &pb, exec),
        d => Err(FggcError::InvalidMesh(format!("dimension {d} not in 1..=3"))),
    }?;
    Ok((pb, out))
}
