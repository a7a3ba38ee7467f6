use proptest::prelude::*;

use mcqsim::analysis::{collapse_stats, CollapseCurve, Scaling};
use mcqsim::dynamics::{
    coherence_brute, coherence_factorized, time_grid, AnalyticModel, CoherenceSeries,
    NumericalModel, PhaseAssignment,
};
use mcqsim::electrostatics::{pair_energy, total_energy};
use mcqsim::geometry::{DqdSpec, Vec3};
use mcqsim::measures::Measure;
use mcqsim::spectra::{rms_from_coefficients, FlipSource};
use mcqsim::{
    build_scene, default_constants, flip_coefficients, timescales, FlipCoefficients, SceneConfig,
    Separation,
};

const HBAR: f64 = 0.6582119569;

fn unit(v: (f64, f64, f64)) -> Option<Vec3> {
    let v = Vec3::new(v.0, v.1, v.2);
    let n = v.norm();
    (n > 1e-3).then(|| v * (1.0 / n))
}

fn dqd() -> impl Strategy<Value = DqdSpec> {
    let c = -5.0..5.0f64;
    let o = -1.0..1.0f64;
    (
        (c.clone(), c.clone(), c),
        (o.clone(), o.clone(), o),
        0.5..2.0f64,
    )
        .prop_filter_map("degenerate orientation", |(c, o, a)| {
            DqdSpec::new(Vec3::new(c.0, c.1, c.2), unit(o)?, a).ok()
        })
}

fn separated_pair() -> impl Strategy<Value = (DqdSpec, DqdSpec)> {
    (dqd(), dqd()).prop_filter("dots too close", |(j, k)| {
        j.center.distance(k.center) > j.a + k.a + 0.1
    })
}

fn coefficients(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(-0.3..0.3f64, 0..=max),
        prop::collection::vec(-0.3..0.3f64, 0..=max),
    )
}

fn small_scene(m: usize, r_b: f64, seed: u64) -> mcqsim::Scene {
    let cfg = SceneConfig {
        m,
        r_a: 4.0,
        r_b,
        d: Separation::Infinite,
        seed,
        ..SceneConfig::default()
    };
    build_scene(&cfg, default_constants()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pair_energy_is_symmetric((j, k) in separated_pair(), mj in 0u8..2, mk in 0u8..2) {
        let c = default_constants();
        let a = pair_energy(&j, mj, &k, mk, &c).unwrap();
        let b = pair_energy(&k, mk, &j, mj, &c).unwrap();
        prop_assert!((a - b).abs() <= 1e-14 * a.abs().max(1e-300));
    }

    #[test]
    fn relabeling_one_molecule_negates((j, k) in separated_pair(), mj in 0u8..2, mk in 0u8..2) {
        let c = default_constants();
        let a = pair_energy(&j, mj, &k, mk, &c).unwrap();
        let other = pair_energy(&j, 1 - mj, &k, mk, &c).unwrap();
        let relabeled = pair_energy(&j.flipped(), mj, &k, mk, &c).unwrap();
        prop_assert_eq!(other, -a);
        prop_assert!((relabeled + a).abs() <= 1e-13 * a.abs().max(1e-300));
    }

    #[test]
    fn factorized_matches_brute((a, b) in coefficients(7), t in 0.0..200.0f64) {
        let fc = FlipCoefficients::from_local(&a, &b);
        let brute = coherence_brute(&fc, t, HBAR, 24).unwrap();
        prop_assert!((brute - coherence_factorized(&fc, t, HBAR)).abs() <= 1e-10);
    }

    #[test]
    fn flip_rms_is_pythagorean((a, b) in coefficients(12)) {
        let fc = FlipCoefficients::from_local(&a, &b);
        let ea = rms_from_coefficients(&fc, FlipSource::SingleFlipA);
        let eb = rms_from_coefficients(&fc, FlipSource::SingleFlipB);
        let e = rms_from_coefficients(&fc, FlipSource::DoubleFlip);
        prop_assert!((e * e - (ea * ea + eb * eb)).abs() <= 1e-12 * (e * e).max(1e-300));
        let r = timescales(&fc, HBAR);
        if let Some(q) = r.ratio() {
            prop_assert!(q <= std::f64::consts::FRAC_1_SQRT_2 + 1e-12);
        }
    }

    #[test]
    fn time_scales_scale_inversely((a, b) in coefficients(6), s in 0.1..10.0f64) {
        prop_assume!(a.iter().any(|x| *x != 0.0) && b.iter().any(|x| *x != 0.0));
        let fc = FlipCoefficients::from_local(&a, &b);
        let r = timescales(&fc, HBAR);
        let q = timescales(&fc.scaled(s), HBAR);
        for (x, y) in [(r.tau_e, q.tau_e), (r.tau_geo, q.tau_geo), (r.tau_a, q.tau_a), (r.tau_b, q.tau_b)] {
            prop_assert!((x / s - y).abs() <= 1e-12 * y);
        }
    }

    #[test]
    fn global_flip_leaves_energy(seed in 0u64..1000, m in 0usize..4, ma in 0u8..2, mb in 0u8..2, p in 0usize..64) {
        let sc = small_scene(m, 2.0, seed);
        let p = p & ((1 << sc.n_env()) - 1);
        let full = (1usize << sc.n_env()) - 1;
        let e = total_energy(&sc, ma, mb, p).unwrap();
        let flipped = total_energy(&sc, 1 - ma, 1 - mb, full ^ p).unwrap();
        prop_assert!((e - flipped).abs() <= 1e-14 * e.abs().max(1e-12));
        let relabeled = total_energy(&sc.flipped(), 1 - ma, 1 - mb, full ^ p).unwrap();
        prop_assert!((e - relabeled).abs() <= 1e-12 * e.abs().max(1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn phases_and_env_env_terms_do_not_matter(seed in 0u64..1000, m in 1usize..4, t in 0.0..80.0f64) {
        let sc = small_scene(m, 2.0, seed);
        let n = sc.n_env();
        let base = NumericalModel::new(&sc, &PhaseAssignment::zeros(n), 22).unwrap().rho_at(t).unwrap();
        let phased = NumericalModel::new(&sc, &PhaseAssignment::draw(seed, n), 22).unwrap().rho_at(t).unwrap();
        let no_env = NumericalModel::with_options(&sc, &PhaseAssignment::draw(seed, n), 22, false)
            .unwrap()
            .rho_at(t)
            .unwrap();
        prop_assert!(base.max_abs_diff(&phased) <= 1e-12);
        prop_assert!(base.max_abs_diff(&no_env) <= 1e-12);
    }

    #[test]
    fn purity_follows_coherence(seed in 0u64..1000, m in 0usize..4, t in 0.0..80.0f64) {
        let sc = small_scene(m, 4.0, seed);
        let rho = NumericalModel::new(&sc, &PhaseAssignment::draw(seed, sc.n_env()), 22)
            .unwrap()
            .rho_at(t)
            .unwrap();
        rho.check().unwrap();
        let c = 2.0 * rho.coherence().norm();
        let purity = rho.purity();
        prop_assert!((purity - 0.5 * (1.0 + c * c)).abs() <= 1e-12);
        prop_assert!((0.5 - 1e-12..=1.0 + 1e-12).contains(&purity));
    }

    #[test]
    fn collapse_ignores_uniform_rescaling(seed in 0u64..1000, s in 0.2..5.0f64) {
        let sc = small_scene(5, 2.0, seed);
        let fc = flip_coefficients(&sc).unwrap();
        let curve = |fc: &FlipCoefficients| {
            let report = timescales(fc, HBAR);
            let times = time_grid(4.0 * report.tau_e, 401);
            let series = CoherenceSeries::analytic(fc, &times, HBAR, AnalyticModel::Exact);
            CollapseCurve {
                report,
                values: series.c.iter().map(|&c| Measure::Bm.closed(c).value).collect(),
                times,
            }
        };
        let a = collapse_stats(&[curve(&fc)], 1.0, Scaling::TauE);
        let b = collapse_stats(&[curve(&fc.scaled(s))], 1.0, Scaling::TauE);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert!((a.crossing_times[0] - b.crossing_times[0]).abs() <= 1e-9),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }
}
