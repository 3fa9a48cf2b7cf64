#![allow(clippy::needless_range_loop)]

use std::f64::consts::PI;

use opgrowth::models::{
    anharmonic_solve, bohr_sommerfeld_energy, box_element, box_position_1d, box_position_2d, g_factor,
    harmonic_position, harmonic_power, j_factor, random_ensemble, semiclassical_operator, uq_binomial,
    AnharmonicConfig, DecayLaw, NearestElements,
};
use opgrowth::Error;
use proptest::prelude::*;

fn integer_power(dim: usize, q: u32) -> Vec<Vec<u128>> {
    let n = dim + q as usize;
    let mut m: Vec<Vec<u128>> = (0..n).map(|i| (0..n).map(|j| u128::from(i == j)).collect()).collect();
    for _ in 0..q {
        let next = (0..n)
            .map(|i| (0..n).map(|j| if j > 0 { m[i][j - 1] } else { 0 } + if j + 1 < n { m[i][j + 1] } else { 0 }).collect())
            .collect();
        m = next;
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn uq_matches_integer_matrix_power(q in 1u32..=12, dim in 2usize..=64) {
        let u = uq_binomial(dim, q).unwrap();
        let p = integer_power(dim, q);
        for l in 0..dim {
            for k in 0..dim {
                prop_assert_eq!(u.get(l, k), p[l][k] as f64);
            }
        }
    }

    #[test]
    fn random_operators_are_symmetric(dim in 2usize..60, seed in 0u64..1000, gamma in 0.1f64..3.0) {
        let m = random_ensemble(dim, &DecayLaw::Exponential { gamma }, 10.0, seed).unwrap();
        let e = m.operator.elements();
        prop_assert_eq!(e, &e.transpose());
        for l in 0..dim {
            prop_assert_eq!(e[(l, l)], 0.0);
        }
    }

    #[test]
    fn box_elements_vanish_for_equal_parity(m in 1usize..200, n in 1usize..200, len in 0.1f64..20.0) {
        let x = box_element(m, n, len);
        if (m + n) % 2 == 0 {
            prop_assert_eq!(x, 0.0);
        } else {
            prop_assert_eq!(x, box_element(n, m, len));
        }
    }
}

#[test]
fn uq_small_cases() {
    let u = uq_binomial(4, 2).unwrap();
    assert_eq!(u.get(0, 0), 1.0);
    assert_eq!(u.get(1, 1), 2.0);
    assert_eq!(u.get(0, 2), 1.0);
}

#[test]
fn power_one_is_position() {
    let a = harmonic_power(30, 1, 1.3, 0.7).unwrap();
    let b = harmonic_position(30, 1.3, 0.7).unwrap();
    assert_eq!(a.operator.elements(), b.operator.elements());
    assert_eq!(a.spectrum, b.spectrum);
}

#[test]
fn box_first_element() {
    let m = box_position_1d(3, 1.0, 1.0).unwrap();
    assert!((m.operator.get(0, 1).abs() - 16.0 / (9.0 * PI * PI)).abs() < 1e-15);
}

#[test]
fn flat_box_reduces_to_1d() {
    let a = box_position_2d((12, 1), (3.0, 1.0), 1.0).unwrap();
    let b = box_position_1d(12, 3.0, 1.0).unwrap();
    assert_eq!(a.operator.elements(), b.operator.elements());
    // shifted by the transverse ground-state energy π²/2
    for (x, y) in a.spectrum.energies().iter().zip(b.spectrum.energies()) {
        assert!((x - y - PI * PI / 2.0).abs() < 1e-12);
    }
}

/// Bisection on the node count of a shooting solution of `ψ'' = 2(x^p - E)ψ`
/// from the origin, RK4 with a fine fixed step. Independent of the grid solver.
fn shooting_energy(p: i32, n: usize) -> f64 {
    let x_max = 4.5;
    let steps = 20_000;
    let h = x_max / steps as f64;
    let nodes_beyond = |e: f64| -> (usize, f64) {
        let (mut y, mut v) = if n.is_multiple_of(2) { (1.0, 0.0) } else { (0.0, 1.0) };
        let mut count = 0;
        let f = |x: f64, y: f64| 2.0 * (x.powi(p) - e) * y;
        let mut x = 0.0;
        for _ in 0..steps {
            let k1 = (v, f(x, y));
            let k2 = (v + 0.5 * h * k1.1, f(x + 0.5 * h, y + 0.5 * h * k1.0));
            let k3 = (v + 0.5 * h * k2.1, f(x + 0.5 * h, y + 0.5 * h * k2.0));
            let k4 = (v + h * k3.1, f(x + h, y + h * k3.0));
            let ny = y + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            v += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
            if ny * y < 0.0 {
                count += 1;
            }
            y = ny;
            x += h;
            if y.abs() > 1e30 {
                break;
            }
        }
        (count, y)
    };
    // positive-x nodes of the n-th state
    let target = n / 2;
    let (mut lo, mut hi) = (0.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (c, _) = nodes_beyond(mid);
        if c > target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn quartic_levels_match_shooting() {
    let solve = |points| {
        let cfg = AnharmonicConfig { grid_points: points, grid_halfwidth: Some(4.5), ..AnharmonicConfig::new(4, 12) };
        anharmonic_solve(&cfg).unwrap().spectrum.energies().to_vec()
    };
    let coarse = solve(4096);
    let fine = solve(8192);
    assert!((coarse[0] - 0.667_986_259).abs() < 1e-5, "ground {}", coarse[0]);
    for n in 0..10 {
        let s = shooting_energy(4, n);
        assert!((coarse[n] - s).abs() < 1e-4 * s, "n={n}: grid {} shooting {s}", coarse[n]);
        let extrapolated = (4.0 * fine[n] - coarse[n]) / 3.0;
        assert!((extrapolated - s).abs() < 1e-8 * s, "n={n}: extrapolated {extrapolated} shooting {s}");
    }
}

#[test]
fn bohr_sommerfeld_tracks_grid() {
    for p in [4, 6] {
        let m = anharmonic_solve(&AnharmonicConfig::new(p, 35)).unwrap();
        for n in 5..=30 {
            let bs = bohr_sommerfeld_energy(p, n, 1.0);
            let grid = m.spectrum.energies()[n];
            assert!(((bs - grid) / grid).abs() < 0.02, "p={p} n={n}: {bs} vs {grid}");
        }
    }
}

#[test]
fn quadratic_potential_is_harmonic() {
    // V = x², m = 1: ω = √2. The grid error is O(h²); Richardson removes it.
    let solve = |points| {
        let cfg = AnharmonicConfig { grid_points: points, grid_halfwidth: Some(11.0), ..AnharmonicConfig::new(2, 20) };
        anharmonic_solve(&cfg).unwrap().spectrum.energies().to_vec()
    };
    let coarse = solve(3000);
    let fine = solve(6000);
    for n in 0..20 {
        let extrapolated = (4.0 * fine[n] - coarse[n]) / 3.0;
        let exact = 2f64.sqrt() * (n as f64 + 0.5);
        assert!((extrapolated - exact).abs() < 1e-6, "n={n}: {extrapolated} vs {exact}");
    }
    assert!((g_factor(2) - PI / 4.0).abs() < 1e-14);
    assert!((bohr_sommerfeld_energy(2, 7, 1.0) - 2f64.sqrt() * 7.5).abs() < 1e-12);
}

#[test]
fn quartic_elements_have_parity_and_floor() {
    let m = anharmonic_solve(&AnharmonicConfig::new(4, 30)).unwrap();
    let x = m.operator.elements();
    for l in 0..30 {
        for k in 0..30 {
            if (l + k) % 2 == 0 {
                assert_eq!(x[(l, k)], 0.0);
            }
        }
    }
    assert!(m.operator.noise_floor().unwrap() > 0.0);
    assert!(x[(0, 1)].abs() > 0.1);
}

#[test]
fn narrow_grid_leaks() {
    let cfg = AnharmonicConfig { grid_halfwidth: Some(1.2), ..AnharmonicConfig::new(4, 20) };
    assert!(matches!(anharmonic_solve(&cfg), Err(Error::BoundaryLeak { .. })));
}

#[test]
fn semiclassical_constants() {
    assert!(matches!(j_factor(2), Err(Error::SemiclassicalPole)));
    assert!((j_factor(4).unwrap() - PI / 2.0).abs() < 1e-12);
    // J(p) → 0 as p → ∞
    assert!(j_factor(40).unwrap() < j_factor(8).unwrap());
    let op = semiclassical_operator(4, 40, 1.0, 1.0, &NearestElements::Asymptotic).unwrap();
    assert_eq!(op.operator.elements(), &op.operator.elements().transpose());
}

#[test]
fn ensembles_are_thread_count_independent() {
    let law = DecayLaw::Gaussian { sigma: 1.5 };
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let a = one.install(|| random_ensemble(300, &law, 20.0, 9).unwrap());
    let b = random_ensemble(300, &law, 20.0, 9).unwrap();
    assert_eq!(a.operator.elements(), b.operator.elements());
    let c = random_ensemble(300, &law, 20.0, 10).unwrap();
    assert_ne!(a.operator.elements(), c.operator.elements());
}
