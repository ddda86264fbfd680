use proptest::prelude::*;

use mtfa::bench::{write_csv, BenchmarkRecord};
use mtfa::field::{field_rel_l2, TfDistribution};
use mtfa::gmconv::{convolve_direct, convolve_spectral, from_axes, GmcMatrices};
use mtfa::io::{parse_rational, read_signal, write_signal};
use mtfa::lsfilter::{design_lsaf, wigner_mse};
use mtfa::metaplectic::{mt, mt_inverse, TransformPlan};
use mtfa::optimizer::{minimize, Coset, Problem, Scenario};
use mtfa::signals::{complex_noise, rel_l2, rng_stream};
use mtfa::symplectic::{exp_param, HamiltonianParams, SymplecticMatrix};
use mtfa::{SampledSignal, UniformGrid, C64};

fn field(n: usize, seed: u64) -> TfDistribution {
    let g = UniformGrid::symmetric(n, 4.0 / (n as f64).sqrt()).unwrap();
    let mut rng = rng_stream(seed, 3);
    TfDistribution::new(g, g, complex_noise(n * n, 1.0, &mut rng)).unwrap()
}

fn sp2(a: f64, b: f64, c: f64) -> [f64; 4] {
    [a, b, c, (1.0 + b * c) / a]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn chart_and_group_closure(p in prop::collection::vec(-1.0f64..1.0, 10), q in prop::collection::vec(-1.0f64..1.0, 10)) {
        let a = exp_param(&HamiltonianParams::new(2, p).unwrap()).unwrap();
        let b = exp_param(&HamiltonianParams::new(2, q).unwrap()).unwrap();
        let ab = a.compose(&b).unwrap();
        prop_assert!(ab.residual() < 1e-8);
        let id = ab.compose(&ab.inverse()).unwrap();
        prop_assert!(SymplecticMatrix::validate(id.matrix().clone(), 1e-8).is_ok());
        prop_assert!((id.matrix() - SymplecticMatrix::identity(2).matrix()).amax() < 1e-8);
    }

    #[test]
    fn wigner_mse_is_a_scaled_squared_distance(seed in 0u64..1000, re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let w = field(8, seed);
        let z = TfDistribution::zeros(w.xgrid, w.ugrid);
        let c = C64::new(re, im);
        prop_assert_eq!(wigner_mse(&w, &w).unwrap(), 0.0);
        let lhs = wigner_mse(&w.scale(c), &z).unwrap();
        let rhs = c.norm_sqr() * wigner_mse(&w, &z).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.max(1e-300));
    }

    #[test]
    fn design_ignores_common_scaling(seed in 0u64..1000, re in -2.0f64..2.0, im in 0.1f64..2.0) {
        let t = field(12, seed);
        let o = field(12, seed + 1);
        let m = GmcMatrices::ii_type(from_axes([-5.0, 1.0, 0.0, -0.2], [5.0, 1.0, 0.0, 0.2]).unwrap()).unwrap();
        let c = C64::new(re, im);
        let a = design_lsaf(&t, &o, &m, 1e-3).unwrap();
        let b = design_lsaf(&t.scale(c), &o.scale(c), &m, 1e-3).unwrap();
        prop_assert!(field_rel_l2(&b.h, &a.h) < 1e-9);
    }

    #[test]
    fn spectral_convolution_matches_direct(seed in 0u64..1000, a0 in 0.5f64..2.0, b0 in 0.5f64..3.0, c0 in -1.0f64..1.0, a1 in 0.5f64..2.0, b1 in -3.0f64..-0.5, c1 in -1.0f64..1.0) {
        let m4 = from_axes(sp2(a0, b0, c0), sp2(a1, b1, c1)).unwrap();
        let f = field(16, seed);
        let g = field(16, seed + 7);
        for m in [GmcMatrices::i_type(m4.clone()).unwrap(), GmcMatrices::ii_type(m4.clone()).unwrap(), GmcMatrices::iv_type(m4).unwrap()] {
            let d = convolve_direct(&f, &g, &m).unwrap();
            let s = convolve_spectral(&f, &g, &m).unwrap();
            prop_assert!(field_rel_l2(&s, &d) < 1e-8);
        }
    }

    #[test]
    fn transform_inverts(a in 0.5f64..1.5, b in 1.5f64..2.5, c in -0.5f64..0.5, seed in 0u64..1000) {
        let g = UniformGrid::symmetric(128, 0.125).unwrap();
        let mut rng = rng_stream(seed, 5);
        let noise = complex_noise(g.count, 1.0, &mut rng);
        let f = SampledSignal::new(g, noise).unwrap();
        let [a, b, c, d] = sp2(a, b, c);
        let plan = TransformPlan::chirp_fft(SymplecticMatrix::from_2x2(a, b, c, d).unwrap(), g).unwrap();
        let back = mt_inverse(&mt(&f, &plan).unwrap(), &plan).unwrap();
        prop_assert!(rel_l2(&back.values, &f.values) < 1e-9);
    }

    #[test]
    fn best_so_far_never_increases(center in prop::collection::vec(-2.0f64..2.0, 3), budget in 1usize..120, restarts in 1usize..4, seed in 0u64..100) {
        let mut f = |_: usize, x: &[f64]| x.iter().zip(&center).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sin().abs();
        let s = minimize(&mut f, 3, budget, restarts, seed, 0.5).unwrap();
        prop_assert!(!s.trace.is_empty() && s.trace.len() <= budget);
        prop_assert!(s.trace.windows(2).all(|w| w[1].best_so_far <= w[0].best_so_far));
        prop_assert!(s.best_objective <= s.initial_objective());
        let min = s.trace.iter().map(|r| r.objective).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(s.best_objective, min);
    }

    #[test]
    fn benchmark_csv_is_deterministic(rows in prop::collection::vec((1u8..4, -4.0f64..6.0, 1usize..60, -8.0f64..0.0, 0.0f64..60.0, 0u64..1000), 1..12)) {
        let records: Vec<BenchmarkRecord> = rows
            .iter()
            .map(|&(example, snr_db, trials, log10_mse, psnr_db, seed)| BenchmarkRecord {
                example,
                method: "adaptive-cmcd".into(),
                snr_db,
                trials,
                log10_mse,
                psnr_db,
                seed,
                mean_mse: 10f64.powf(log10_mse),
            })
            .collect();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_csv(&records, &mut a).unwrap();
        write_csv(&records, &mut b).unwrap();
        prop_assert_eq!(&a, &b);
        let text = String::from_utf8(a).unwrap();
        prop_assert_eq!(text.lines().count(), records.len() + 1);
        prop_assert_eq!(text.lines().next().unwrap(), "example,method,snr_db,trials,log10_mse,psnr_db,seed");
    }

    #[test]
    fn signal_csv_round_trips(n in 2usize..64, step in 0.01f64..2.0, seed in 0u64..1000) {
        let g = UniformGrid::symmetric(n, step).unwrap();
        let mut rng = rng_stream(seed, 9);
        let f = SampledSignal::new(g, complex_noise(n, 1.0, &mut rng)).unwrap();
        let mut buf = Vec::new();
        write_signal(&f, &mut buf).unwrap();
        let back = read_signal(buf.as_slice()).unwrap();
        prop_assert_eq!(back.values, f.values);
    }

    #[test]
    fn rational_entries_parse(p in -1000i64..1000, q in 1i64..1000) {
        prop_assert_eq!(parse_rational(&format!("{p}/{q}")).unwrap(), p as f64 / q as f64);
        prop_assert_eq!(parse_rational(&format!("{p}")).unwrap(), p as f64);
    }

    #[test]
    fn tied_slots_share_one_matrix(p in prop::collection::vec(-0.5f64..0.5, 3), j in any::<bool>()) {
        let problem = Problem::new(&Scenario::example1()).unwrap();
        prop_assert_eq!(problem.param_count(), 3);
        let coset = if j { Coset::J } else { Coset::I };
        let m = problem.matrices(&p, &[coset]).unwrap();
        prop_assert_eq!(&m.mwd.m1, &m.mwd.m2);
        prop_assert!(m.mwd.m1.residual() < 1e-10);
    }
}
