use fggc::lsa::e_lsa;
use fggc::*;
use proptest::prelude::*;
use std::f64::consts::PI;

type C = C64;

fn params1(q: f64, p: f64, eps: f64) -> GaussianParams<1> {
    GaussianParams::new(RVec::<1>::new(q), RVec::<1>::new(p), eps)
}

fn mesh1() -> MeshSpec {
    MeshSpec::recommended(1, 1.0 / 64.0, 1e-3).validate().unwrap()
}

fn amps_strategy() -> impl Strategy<Value = Vec<((i64, i64), (f64, f64))>> {
    prop::collection::vec(((-20i64..20, -60i64..60), (-1.0f64..1.0, -1.0f64..1.0)), 1..12)
}

fn table(raw: &[((i64, i64), (f64, f64))], mesh: &MeshSpec) -> PhaseGridAmplitudes<1> {
    PhaseGridAmplitudes::from_contributions(
        raw.iter().map(|((q, p), (re, im))| (PhaseIndex::new([*q], [*p]), C::new(*re, *im))),
        mesh,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inner_product_is_hermitian(q1 in -1.0f64..1.0, p1 in -2.0f64..2.0, q2 in -1.0f64..1.0, p2 in -2.0f64..2.0,
                                  k in 2i32..12) {
        let eps = 2f64.powi(-k);
        let (g, h) = (params1(q1, p1, eps), params1(q2, p2, eps));
        let gh = inner_product(&g, &h).unwrap();
        let hg = inner_product(&h, &g).unwrap();
        prop_assert!((gh - hg.conj()).norm() <= 1e-14 * l2_norm(&g) * l2_norm(&h));
        prop_assert!(gh.norm() <= l2_norm(&g) * l2_norm(&h) * (1.0 + 1e-12));
        let d = grad_inner_product(&g, &h).unwrap();
        prop_assert!((d - grad_inner_product(&h, &g).unwrap().conj()).norm() <= 1e-12 * h1_norm(&g) * h1_norm(&h));
    }

    #[test]
    fn frac_decompose_reassembles(q in -3.0f64..3.0, p in -3.0f64..3.0) {
        let m = mesh1();
        let f = frac_decompose(&RVec::<1>::new(q), &RVec::<1>::new(p), &m);
        prop_assert!((0.0..1.0).contains(&f.s[0]) && (0.0..1.0).contains(&f.t[0]));
        prop_assert!((f.int_q[0] + f.frac_q[0] - q).abs() < 1e-12);
        prop_assert!((f.int_p[0] + f.frac_p[0] - p).abs() < 1e-12);
        prop_assert_eq!(f.int_q[0], f.base.iq[0] as f64 * m.dq);
    }

    #[test]
    fn lsa_error_is_lattice_periodic(s in 0.0f64..1.0, t in 0.0f64..1.0, m in -5i64..5, n in -5i64..5) {
        let eps: f64 = 1.0 / 64.0;
        let st = NeighborStrategy::<1>::named("Q2P2").unwrap();
        let (dq, dp) = (0.5 * eps.sqrt(), PI / 8.0 * eps.sqrt());
        let base = e_lsa(eps, &RVec::<1>::new(s * dq), &RVec::<1>::new(t * dp), &st, 0.5, PI / 8.0);
        let moved = e_lsa(eps, &RVec::<1>::new((s + m as f64) * dq), &RVec::<1>::new((t + n as f64) * dp), &st, 0.5, PI / 8.0);
        prop_assert!((base - moved).abs() <= 1e-6 * base.max(1e-6), "{} {}", base, moved);
    }

    #[test]
    fn on_grid_packets_split_onto_themselves(iq in -10i64..10, ip in -30i64..30) {
        let m = mesh1();
        let idx = PhaseIndex::new([iq], [ip]);
        // Q4P2 keeps a truncated pseudo-inverse, so its floor is the
        // cutoff-limited residual rather than zero.
        for (name, floor) in [("Q2P2", 1e-6), ("Q4P2", 2e-5)] {
            let st = NeighborStrategy::<1>::named(name).unwrap();
            let pre = precompute(&st, m.cq, m.cp, lsa::DEFAULT_RCOND);
            let r = pre.split(&idx.q(&m), &idx.p(&m), &m);
            prop_assert!(r.residual < floor, "{} {}", name, r.residual);
            prop_assert_eq!(r.base, idx);
            if name == "Q2P2" {
                let k = st.zero_shift().unwrap();
                prop_assert!((r.coeffs[k] - C::new(1.0, 0.0)).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn reconstruction_is_linear(a in amps_strategy(), b in amps_strategy(), w in -2.0f64..2.0) {
        let m = mesh1();
        let exec = Exec::sequential();
        let ta = table(&a, &m);
        let tb = table(&b, &m);
        let mut both: Vec<_> = ta.entries.clone();
        both.extend(tb.scale(C::new(w, 0.0)).entries);
        let sum = PhaseGridAmplitudes::from_contributions(both, &m);
        let fa = reconstruct_fft(&ta, 9.0, &exec).unwrap();
        let fb = reconstruct_fft(&tb, 9.0, &exec).unwrap();
        let fs = reconstruct_fft(&sum, 9.0, &exec).unwrap();
        let combo = ComplexField { shape: fa.shape.clone(), data: fa.data.iter().zip(&fb.data).map(|(x, y)| x + y * w).collect() };
        let scale = combo.l2_norm(m.dx).max(fa.l2_norm(m.dx));
        let diff = ComplexField { shape: fs.shape.clone(), data: fs.data.iter().zip(&combo.data).map(|(x, y)| x - y).collect() };
        prop_assert!(diff.l2_norm(m.dx) <= 1e-12 * scale.max(1e-300));
    }

    #[test]
    fn parallel_reductions_are_bitwise_sequential(a in amps_strategy(), threads in 2usize..5) {
        let m = mesh1();
        let t = table(&a, &m);
        let seq = reconstruct_fft(&t, 9.0, &Exec::sequential()).unwrap();
        let par = reconstruct_fft(&t, 9.0, &Exec::with_threads(threads)).unwrap();
        prop_assert_eq!(&seq, &par);
        let ens = t.to_ensemble();
        let dseq = reconstruct_direct(&ens, 9.0, &Exec::sequential());
        let dpar = reconstruct_direct(&ens, 9.0, &Exec::with_threads(threads));
        prop_assert_eq!(dseq, dpar);
    }

    #[test]
    fn sum_chunks_is_thread_independent(n in 1usize..300, len in 1usize..50, threads in 2usize..6) {
        let fill = |r: std::ops::Range<usize>, buf: &mut [C]| {
            for i in r {
                let x = (i as f64 * 0.37).sin();
                for (j, b) in buf.iter_mut().enumerate() {
                    *b += C::new(x * j as f64, 1.0 / (1.0 + i as f64));
                }
            }
        };
        let a = Exec::sequential().sum_chunks(n, len, fill);
        let b = Exec::with_threads(threads).sum_chunks(n, len, fill);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn field_file_round_trip_is_bitwise(seed in any::<u64>(), k in 2i32..5) {
        let eps = 2f64.powi(-2 * k);
        let m = MeshSpec::recommended(1, eps, 1e-3).validate().unwrap();
        let f = ComplexField::from_fn(&m, |x| C::new((x[0] * seed as f64).sin(), (seed as f64).ln_1p() * x[0]));
        let file = FieldFile::new(&m, f).unwrap();
        let mut bytes = Vec::new();
        file.write_to(&mut bytes).unwrap();
        prop_assert_eq!(bytes.len(), 4 + 4 + 4 + 4 + 8 + 16 + 16 * m.grid_len());
        let back = FieldFile::read_from(bytes.as_slice()).unwrap();
        prop_assert_eq!(back, file);
    }

    #[test]
    fn decomposition_commutes_with_lattice_shifts(shift in -3i64..3) {
        let m = mesh1();
        let exec = Exec::sequential();
        let steps = (m.dq / m.dx).round() as i64;
        let g0 = fggc::initial::GaussianInit::default();
        let g1 = fggc::initial::GaussianInit { center: Some(vec![shift as f64 * m.dq]), ..Default::default() };
        let u0 = ComplexField::from_fn(&m, |x| g0.eval(x, m.epsilon));
        let u1 = ComplexField::from_fn(&m, |x| g1.eval(x, m.epsilon));
        prop_assert_eq!(steps as f64 * m.dx, m.dq);
        let opts = fggc::decompose::DecomposeOptions::default();
        let a = initial_decompose::<1>(&u0, &m, &opts, &exec).unwrap();
        let b = initial_decompose::<1>(&u1, &m, &opts, &exec).unwrap();
        let max = a.packets.iter().map(|(_, w)| w.a.norm()).fold(0.0, f64::max);
        let lookup: std::collections::HashMap<_, _> = b.packets.iter().map(|(k, w)| (*k, w.a)).collect();
        for (k, w) in &a.packets {
            let moved = k.shifted(&[shift], &[0]);
            match lookup.get(&moved) {
                Some(z) => prop_assert!((z.norm() - w.a.norm()).abs() <= 1e-10 * max),
                None => prop_assert!(w.a.norm() <= 2e-6 * max),
            }
        }
    }
}
