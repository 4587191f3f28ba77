use num_complex::Complex;
use proptest::prelude::*;

use super::*;
use crate::bath::{generate_bath, FieldOrientation, HyperfineModel, LatticeSpec};
use crate::curve::linear_grid;
use crate::linalg::CMatrix;
use crate::spin;

type C64 = Complex<f64>;

fn embed(op: &CMatrix<f64>, site: usize, n: usize) -> CMatrix<f64> {
    let id = CMatrix::<f64>::identity(2);
    let mut out = CMatrix::<f64>::identity(1);
    for k in 0..n {
        out = out.kron(if k == site { op } else { &id });
    }
    out
}

/// Full-space Hamiltonian built from Kronecker products.
fn dense_h(a: &[f64], h: &[f64], bonds: &[(usize, usize, f64)], p: f64) -> CMatrix<f64> {
    let n = a.len();
    let (sz, sp, sm) = (spin::sz::<f64>(1), spin::splus::<f64>(1), spin::sminus::<f64>(1));
    let dim = 1 << n;
    let mut out = CMatrix::zeros(dim);
    for i in 0..n {
        out = out.add(&embed(&sz, i, n).scale(C64::new(p * a[i] + h[i], 0.0)));
    }
    for &(i, j, d) in bonds {
        let ff = (&embed(&sp, i, n) * &embed(&sm, j, n)).add(&(&embed(&sm, i, n) * &embed(&sp, j, n)));
        let zz = &embed(&sz, i, n) * &embed(&sz, j, n);
        out = out.add(&ff.scale(C64::new(d, 0.0))).add(&zz.scale(C64::new(-4.0 * d, 0.0)));
    }
    out
}

/// exp(−iHt) by scaling and squaring of a Taylor series.
fn expm(h: &CMatrix<f64>, t: f64) -> CMatrix<f64> {
    let norm = h.max_abs() * h.dim() as f64 * t.abs();
    let mut k = 0;
    while norm / 2f64.powi(k) > 0.25 {
        k += 1;
    }
    let a = h.scale(C64::new(0.0, -t / 2f64.powi(k)));
    let mut term = CMatrix::identity(h.dim());
    let mut sum = term.clone();
    for m in 1..30 {
        term = (&term * &a).scale(C64::new(1.0 / m as f64, 0.0));
        sum = sum.add(&term);
    }
    for _ in 0..k {
        sum = &sum * &sum;
    }
    sum
}

fn brute_force(a: &[f64], h: &[f64], bonds: &[(usize, usize, f64)], pp: f64, pm: f64, seq: &PulseSequence<f64>, t: f64) -> C64 {
    let hp = dense_h(a, h, bonds, pp);
    let hm = dense_h(a, h, bonds, pm);
    let dim = hp.dim();
    let mut up = CMatrix::identity(dim);
    let mut um = CMatrix::identity(dim);
    for (k, w) in seq.boundaries().windows(2).enumerate() {
        let dt = (w[1] - w[0]) * t;
        let (x, y) = if k % 2 == 0 { (&hp, &hm) } else { (&hm, &hp) };
        up = &expm(x, dt) * &up;
        um = &expm(y, dt) * &um;
    }
    um.inner(&up) / dim as f64
}

fn orient() -> FieldOrientation<f64> {
    FieldOrientation::parse("110").unwrap()
}

fn bath_from(points_nm: &[[f64; 3]], a: &[f64]) -> BathConfiguration<f64> {
    let pos = points_nm.iter().map(|p| p.map(|x| x * 1e-9)).collect();
    BathConfiguration::from_parts(pos, a.to_vec(), orient())
}

fn random_bath(seed: u64, cutoff_nm: f64) -> BathConfiguration<f64> {
    let spec = LatticeSpec::natural_silicon(cutoff_nm * 1e-9);
    generate_bath(&spec, seed, orient(), &HyperfineModel::default_envelope()).unwrap()
}

fn near_ct() -> TransitionPair<f64> {
    TransitionPair::from_projections(0.0527, 0.0521)
}

fn high_field() -> TransitionPair<f64> {
    TransitionPair::from_projections(0.4264, -0.5)
}

#[test]
fn singleton_hahn_is_unity() {
    let bath = random_bath(11, 2.0);
    let mut opt = CceOptions::new(linear_grid(2e-3, 21));
    opt.max_order = 1;
    let ctx = CceContext::new(&bath, opt).unwrap();
    let seq = PulseSequence::hahn();
    for c in ctx.clusters() {
        for z in ctx.cluster_coherence(c, &high_field(), &seq).unwrap() {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn equal_projections_give_unity() {
    let bath = random_bath(5, 2.5);
    let mut opt = CceOptions::new(linear_grid(5e-3, 11));
    opt.max_order = 3;
    let ctx = CceContext::new(&bath, opt).unwrap();
    let tr = TransitionPair::from_projections(0.05, 0.05);
    for seq in ["ramsey", "hahn", "cpmg:8"] {
        let curve = ctx.coherence(&tr, &PulseSequence::parse(seq).unwrap()).unwrap();
        for z in &curve.values {
            assert!((z - C64::new(1.0, 0.0)).norm() < 1e-10, "{seq}: {z}");
        }
    }
}

#[test]
fn isolated_pair_matches_dense_oracle() {
    let pts = [[0.0, 0.0, 0.0], [0.25, 0.2, 0.1]];
    let a = [2e5, -7e4];
    let bath = bath_from(&pts, &a);
    let d = bath.dipolar(0, 1).unwrap();
    let cluster = Cluster::new(vec![0, 1]).unwrap();
    for tr in [near_ct(), high_field()] {
        for s in ["ramsey", "hahn", "cpmg:4"] {
            let seq = PulseSequence::parse(s).unwrap();
            for &t in &[1e-5, 3e-4, 2e-3] {
                let got = cluster_coherence(&cluster, &bath, &tr, &seq, t).unwrap();
                let want = brute_force(&a, &[0.0, 0.0], &[(0, 1, d)], tr.p_plus, tr.p_minus, &seq, t);
                assert!((got - want).norm() < 1e-12, "{s} t={t}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn triple_with_mean_field_matches_dense_oracle() {
    let pts = [[0.0, 0.0, 0.0], [0.3, 0.1, 0.0], [0.1, 0.35, 0.2], [0.5, 0.5, 0.1]];
    let a = [3e5, 1e5, -2e5, 5e4];
    let bath = bath_from(&pts, &a);
    let mut opt = CceOptions::new(vec![0.0, 4e-4, 1.5e-3]);
    opt.max_order = 3;
    opt.pair_cutoff = 0.75e-9;
    let ctx = CceContext::new(&bath, opt).unwrap();
    let m = ctx.frozen_states().unwrap().to_vec();
    let cluster = Cluster::new(vec![0, 1, 2]).unwrap();
    let ids = [0usize, 1, 2];
    let mut h = [0.0; 3];
    for (loc, &i) in ids.iter().enumerate() {
        if let Some(d) = ctx.graph().coupling(i, 3) {
            h[loc] = -4.0 * d * m[3];
        }
    }
    let mut bonds = vec![];
    for x in 0..3 {
        for y in x + 1..3 {
            if let Some(d) = ctx.graph().coupling(ids[x], ids[y]) {
                bonds.push((x, y, d));
            }
        }
    }
    let seq = PulseSequence::cpmg(4).unwrap();
    let tr = high_field();
    let got = ctx.cluster_coherence(&cluster, &tr, &seq).unwrap();
    for (k, &t) in ctx.options().time_grid.iter().enumerate() {
        let want = brute_force(&a[..3], &h, &bonds, tr.p_plus, tr.p_minus, &seq, t);
        assert!((got[k] - want).norm() < 1e-12);
    }
}

#[test]
fn isolated_pairs_factorize() {
    let pts = [
        [0.0, 0.0, 0.0],
        [0.3, 0.2, 0.0],
        [5.0, 0.0, 0.0],
        [5.2, 0.3, 0.1],
        [0.0, 6.0, 0.0],
        [0.0, 6.4, 0.1],
    ];
    let a = [4e5, 1e5, -3e5, 2e4, 6e4, -1e5];
    let bath = bath_from(&pts, &a);
    let mut opt = CceOptions::new(linear_grid(3e-3, 31));
    opt.pair_cutoff = 1e-9;
    opt.mean_field = false;
    let tr = high_field();
    let seq = PulseSequence::hahn();
    let curve = cce_coherence(&bath, &tr, &seq, &opt).unwrap();
    for (k, &t) in curve.times.iter().enumerate() {
        let mut want = C64::new(1.0, 0.0);
        for p in 0..3 {
            let (i, j) = (2 * p, 2 * p + 1);
            let d = bath.dipolar(i, j).unwrap();
            want *= brute_force(&[a[i], a[j]], &[0.0, 0.0], &[(0, 1, d)], tr.p_plus, tr.p_minus, &seq, t);
        }
        assert!((curve.values[k] - want).norm() < 1e-10);
    }
    assert_eq!(curve.values[0], C64::new(1.0, 0.0));
}

#[test]
fn zeeman_shift_is_invisible() {
    let bath = random_bath(21, 2.5);
    let grid = linear_grid(4e-3, 41);
    let tr = TransitionPair::from_projections(0.1172, -0.0198);
    let seq = PulseSequence::cpmg(4).unwrap();
    let base = CceOptions::new(grid.clone());
    let l0 = cce_coherence(&bath, &tr, &seq, &base).unwrap();
    let c0 = cce_correlation(&bath, &tr, &base).unwrap();
    for w in [2.0 * std::f64::consts::PI * 3.4e5, -1.7e7] {
        let mut opt = base.clone();
        opt.bath_zeeman = w;
        let l = cce_coherence(&bath, &tr, &seq, &opt).unwrap();
        let c = cce_correlation(&bath, &tr, &opt).unwrap();
        for k in 0..grid.len() {
            assert!((l.values[k] - l0.values[k]).norm() < 1e-10);
            assert!((c.values[k] - c0.values[k]).abs() < 1e-10 * c0.c0);
        }
    }
}

#[test]
fn correlation_trace_identity_and_static_limit() {
    let bath = random_bath(3, 2.5);
    let tr = near_ct();
    let mut opt = CceOptions::new(linear_grid(1e-2, 51));
    opt.max_order = 3;
    let c = cce_correlation(&bath, &tr, &opt).unwrap();
    let expect: f64 = bath.hyperfine.iter().map(|a| a * a / 4.0).sum();
    assert!((c.c0 - expect).abs() < 1e-12 * expect);
    for v in &c.values {
        assert!(v.abs() <= c.c0 * (1.0 + 1e-12));
    }

    opt.dipolar_floor = 1e30;
    let flat = cce_correlation(&bath, &tr, &opt).unwrap();
    for v in &flat.values {
        assert!((v - expect).abs() < 1e-12 * expect);
    }
}

#[test]
fn singleton_and_pair_correlations() {
    let pts = [[0.0, 0.0, 0.0], [0.3, 0.1, 0.2]];
    let a = [3e5, -1e5];
    let bath = bath_from(&pts, &a);
    let ctx = CceContext::new(&bath, CceOptions::new(vec![0.0])).unwrap();
    let tr = high_field();
    let single = Cluster::new(vec![1]).unwrap();
    for t in [0.0, 1e-3, 0.2] {
        let v = ctx.cluster_correlation(&single, &tr, t).unwrap();
        assert!((v - a[1] * a[1] / 4.0).abs() < 1e-12 * v);
    }
    let pair = Cluster::new(vec![0, 1]).unwrap();
    let full = ctx.system(&pair).unwrap().correlation_lines(tr.s / 2.0).unwrap();
    let trace = (a[0] * a[0] + a[1] * a[1]) / 4.0;
    assert!((full.total_weight() - trace).abs() < 1e-12 * trace);

    // pseudospin frequency 2√(Z² + D²) with Z = s(A_i − A_j)/4
    let d = bath.dipolar(0, 1).unwrap();
    let z = tr.s * (a[0] - a[1]) / 4.0;
    let omega = 2.0 * (z * z + d * d).sqrt();
    let conn = ctx.connected_lines(&pair, &tr).unwrap();
    let dynamic: Vec<_> = conn.lines.iter().filter(|l| l.weight.abs() > 1e-9 * conn.static_weight.abs().max(1.0)).collect();
    assert!(!dynamic.is_empty());
    for l in dynamic {
        assert!((l.omega - omega).abs() < 1e-10 * omega, "{} vs {omega}", l.omega);
    }
}

#[test]
fn cce3_close_to_cce2_near_ct() {
    // eight baths of about 50 spins, complex mean over configurations
    let tr = near_ct();
    let seq = PulseSequence::hahn();
    let grid = linear_grid(0.2, 41);
    let mut mean2 = vec![C64::new(0.0, 0.0); grid.len()];
    let mut mean3 = mean2.clone();
    for seed in 0..8 {
        let bath = random_bath(seed, 1.7);
        assert!((35..=70).contains(&bath.len()), "{}", bath.len());
        let mut opt = CceOptions::new(grid.clone());
        let l2 = cce_coherence(&bath, &tr, &seq, &opt).unwrap();
        opt.max_order = 3;
        // triple corrections may lift the product slightly above 1
        opt.unit_disk_tolerance = 1e-2;
        let l3 = cce_coherence(&bath, &tr, &seq, &opt).unwrap();
        for k in 0..grid.len() {
            mean2[k] += l2.values[k] / 8.0;
            mean3[k] += l3.values[k] / 8.0;
        }
    }
    let dev = mean2.iter().zip(&mean3).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(dev < 0.02, "max deviation {dev}");
}

#[test]
fn deterministic_across_thread_counts() {
    let bath = random_bath(17, 2.5);
    let tr = high_field();
    let seq = PulseSequence::cpmg(2).unwrap();
    let mut opt = CceOptions::new(linear_grid(2e-3, 17));
    opt.max_order = 3;
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let l = cce_coherence(&bath, &tr, &seq, &opt).unwrap();
                let c = cce_correlation(&bath, &tr, &opt).unwrap();
                (l.values, c.values)
            })
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn rejects_bad_options() {
    let mut opt = CceOptions::<f64>::new(vec![0.0, 1.0]);
    opt.max_order = 4;
    assert!(opt.validate().is_err());
    let opt = CceOptions::<f64>::new(vec![0.1, 1.0]);
    assert!(opt.validate().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pair_coherence_within_unit_disk(
        ai in -5e5f64..5e5, aj in -5e5f64..5e5, d in -3e3f64..3e3,
        pp in -0.5f64..0.5, pm in -0.5f64..0.5, t in 0.0f64..1e-2, n in 0usize..6,
    ) {
        let sys = ClusterSystem::new(vec![ai, aj], vec![0.0, 0.0], vec![(0, 1, d)]).unwrap();
        let seq = if n == 0 { PulseSequence::ramsey() } else { PulseSequence::cpmg(n).unwrap() };
        let z = sys.coherence(pp, pm, &seq, &[t]).unwrap()[0];
        prop_assert!(z.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn weaker_coupling_never_reduces_pair_coherence(
        ai in -5e5f64..5e5, aj in -5e5f64..5e5, d in -3e3f64..3e3,
        s in 0.05f64..0.5, frac in 0.0f64..1.0, lambda in 0.0f64..1.0, phase in 0.0f64..1.0,
    ) {
        // both projections positive: P± = (s ± P_e)/2 keeps s fixed
        let pe = frac * s;
        // within the first half period of the faster branch
        let z = s.max(pe) * (ai - aj).abs() / 2.0;
        let t = phase * std::f64::consts::PI / (2.0 * (z * z + d * d).sqrt()).max(1e-300);
        let sys = ClusterSystem::new(vec![ai, aj], vec![0.0, 0.0], vec![(0, 1, d)]).unwrap();
        let seq = PulseSequence::hahn();
        let full = sys.coherence((s + pe) / 2.0, (s - pe) / 2.0, &seq, &[t]).unwrap()[0];
        let weak = sys.coherence((s + lambda * pe) / 2.0, (s - lambda * pe) / 2.0, &seq, &[t]).unwrap()[0];
        prop_assert!(weak.norm() >= full.norm() - 1e-12, "{} < {}", weak.norm(), full.norm());
    }
}

