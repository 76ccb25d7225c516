use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fggc::lsa::{precompute, DEFAULT_RCOND};
use fggc::solver::Problem;
use fggc::*;
use std::hint::black_box;

fn problem() -> Problem {
    let cfg = ExperimentConfig::new(SolverKind::Fggc, 1, 1.0 / 64.0, Potential::Cosine, 0.05, 1e-3);
    Problem::from_config(&cfg).expect("valid config")
}

fn modes() -> [(&'static str, Exec); 2] {
    [("sequential", Exec::sequential()), ("parallel", Exec::with_threads(0))]
}

fn kernels(c: &mut Criterion) {
    let pb = problem();
    let seq = Exec::sequential();
    let ens = initial_decompose::<1>(&pb.u0, &pb.mesh, &pb.decompose, &seq).expect("decompose");
    let packets: Vec<WavePacket<1>> = ens.packets.iter().map(|(_, w)| *w).collect();
    let evolved = evolve_all(&packets, &pb.potential, pb.t_final, pb.mesh.dt, &seq).expect("flow");
    let moved = PacketEnsemble::new(ens.packets.iter().map(|(k, _)| *k).zip(evolved).collect(), &pb.mesh);
    let st = NeighborStrategy::<1>::named("Q2P2").expect("strategy");
    let pre = precompute(&st, pb.mesh.cq, pb.mesh.cp, DEFAULT_RCOND);
    let amps = accumulate_corrected(&moved, &pre, &seq);
    let r_cut = pb.decompose.r_cut;

    let mut g = c.benchmark_group("exec");
    g.sample_size(10);
    for (name, exec) in modes() {
        g.bench_with_input(BenchmarkId::new("decompose", name), &exec, |b, e| {
            b.iter(|| initial_decompose::<1>(black_box(&pb.u0), &pb.mesh, &pb.decompose, e).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("evolve", name), &exec, |b, e| {
            b.iter(|| evolve_all(black_box(&packets), &pb.potential, pb.t_final, pb.mesh.dt, e).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("split", name), &exec, |b, e| {
            b.iter(|| accumulate_corrected(black_box(&moved), &pre, e))
        });
        g.bench_with_input(BenchmarkId::new("reconstruct_direct", name), &exec, |b, e| {
            b.iter(|| reconstruct_direct(black_box(&moved), r_cut, e))
        });
        g.bench_with_input(BenchmarkId::new("reconstruct_fft", name), &exec, |b, e| {
            b.iter(|| reconstruct_fft(black_box(&amps), r_cut, e).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
