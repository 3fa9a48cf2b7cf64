use opgrowth::dynamics::{
    correlation_function, krylov_complexity, moments_direct, propagate_chain, PropagationMethod, PropagationOptions,
};
use opgrowth::lanczos::{lanczos_run, moments_from_lanczos, LanczosOptions, LanczosSequence};
use opgrowth::models::{box_position_1d, random_ensemble, DecayLaw};
use opgrowth::ThermalEnsemble;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn norm_is_conserved(b in prop::collection::vec(0.2f64..4.0, 2..60), t_end in 0.5f64..6.0) {
        let seq = LanczosSequence::from_coefficients(b);
        let times: Vec<f64> = (0..=20).map(|i| t_end * i as f64 / 20.0).collect();
        let opts = PropagationOptions { auto_extend: true, ..Default::default() };
        let wf = propagate_chain(&seq, &times, &opts).unwrap();
        prop_assert!(wf.max_norm_error < 1e-8);
        let ck = krylov_complexity(&wf);
        prop_assert!(ck[0] < 1e-20);
        prop_assert!(ck.iter().all(|c| *c >= 0.0));
    }

    #[test]
    fn split_tracks_exact(b in prop::collection::vec(0.5f64..2.0, 20..80)) {
        let seq = LanczosSequence::from_coefficients(b);
        let times = [0.7, 1.9, 3.1];
        let exact = propagate_chain(&seq, &times, &PropagationOptions { method: PropagationMethod::Exact, ..Default::default() }).unwrap();
        let split = propagate_chain(&seq, &times, &PropagationOptions { method: PropagationMethod::Split4, ..Default::default() }).unwrap();
        let (ce, cs) = (krylov_complexity(&exact), krylov_complexity(&split));
        for i in 0..times.len() {
            prop_assert!((ce[i] - cs[i]).abs() < 1e-3 * (1.0 + ce[i]), "{} vs {}", ce[i], cs[i]);
        }
        prop_assert!(split.max_norm_error < 1e-10);
    }
}

#[test]
fn two_site_chain_is_analytic() {
    let mut seq = LanczosSequence::from_coefficients(vec![0.8, 0.0]);
    seq.terminated_at = Some(2);
    let times: Vec<f64> = (0..100).map(|i| 0.125 * i as f64).collect();
    let wf = propagate_chain(&seq, &times, &PropagationOptions::default()).unwrap();
    let ck = krylov_complexity(&wf);
    for (i, t) in times.iter().enumerate() {
        assert!((wf.amplitudes[i][0] - (0.8 * t).cos()).abs() < 1e-13);
        assert!((ck[i] - (0.8 * t).sin().powi(2)).abs() < 1e-13);
    }
    assert!(wf.max_norm_error < 1e-12);
}

#[test]
fn linear_chain_complexity_is_sinh_squared() {
    let alpha = 1.5;
    let seq = LanczosSequence::from_coefficients((1..=100).map(|n| alpha * n as f64).collect());
    let times: Vec<f64> = (0..=12).map(|i| 0.25 * i as f64 / alpha).collect();
    let wf = propagate_chain(&seq, &times, &PropagationOptions::default()).unwrap();
    let ck = krylov_complexity(&wf);
    for (t, c) in times.iter().zip(&ck) {
        let want = (alpha * t).sinh().powi(2);
        assert!((c - want).abs() <= 1e-6 * (1.0 + want), "t={t}: {c} vs {want}");
    }
}

#[test]
fn short_chain_without_extension_reflects() {
    let seq = LanczosSequence::from_coefficients((1..=30).map(|n| n as f64).collect());
    let opts = PropagationOptions { auto_extend: false, ..Default::default() };
    let r = propagate_chain(&seq, &[0.5, 2.5], &opts);
    assert!(matches!(r, Err(opgrowth::Error::BoundaryReflection { .. })));
    let wf = propagate_chain(&seq, &[0.5, 2.5], &PropagationOptions::default()).unwrap();
    assert_eq!(wf.padded_from, Some(31));
}

#[test]
fn correlation_curvature_is_second_moment() {
    let m = random_ensemble(300, &DecayLaw::Exponential { gamma: 0.4 }, 20.0, 4).unwrap();
    let ens = ThermalEnsemble::new(&m.spectrum, 0.7).unwrap();
    let h = 1e-3;
    let c = correlation_function(&m.operator, &m.spectrum, &ens, &[-h, 0.0, h], false).unwrap();
    assert!((c[1] - 1.0).abs() < 1e-14);
    assert!((c[0] - c[2]).abs() < 1e-14);
    let curvature = (c[0] - 2.0 * c[1] + c[2]) / (h * h);
    // diagonal elements vanish, so C(0) carries no kernel weight
    let mu = moments_direct(&m.operator, &m.spectrum, &ens, 1, true).unwrap();
    assert!((curvature + mu.moment(1)).abs() < 1e-4 * mu.moment(1));
}

#[test]
fn direct_moments_match_lanczos() {
    let m = box_position_1d(120, 10.0, 1.0).unwrap();
    for beta in [0.5, 2.0] {
        let ens = ThermalEnsemble::new(&m.spectrum, beta).unwrap();
        let b = lanczos_run(&m.operator, &m.spectrum, &ens, &LanczosOptions::with_n_max(10)).unwrap();
        let a = moments_from_lanczos(&b);
        let d = moments_direct(&m.operator, &m.spectrum, &ens, 10, true).unwrap();
        for n in 1..=10 {
            assert!((a.log_moment(n) - d.log_moment(n)).abs() < 1e-8, "n={n}");
        }
    }
}
