use nalgebra::DMatrix;
use proptest::prelude::*;
use qwalk_core::coin::{make_coin, sample_phases, CoinParams, PhaseDistribution};
use qwalk_core::evolution::{build_band_matrix, moment_series, Regime, Truncation};
use qwalk_core::fourier::{ballistic_constant, bands};
use qwalk_core::greens::{fractional_moment, FractionalMomentSpec, Resolvent};
use qwalk_core::linalg::{c, max_abs_diff2};
use qwalk_core::state::{basis_state, Spin, WalkState};
use qwalk_core::transfer::{
    eigenvector_residual, generalized_eigenvector, lyapunov_estimate, lyapunov_estimate_with,
    noncompactness_witness, witness_closed_form, witness_product, ProductRoute, Side,
};
use qwalk_core::C64;

const UNIFORM: PhaseDistribution = PhaseDistribution::UniformFull;

#[test]
fn resolvent_matches_dense_inverse() {
    let coin = make_coin(0.45).unwrap();
    let phases = sample_phases(UNIFORM, -16..=16, 4).unwrap();
    for truncation in [Truncation::Finite, Truncation::SemifinitePlus, Truncation::SemifiniteMinus, Truncation::None] {
        let z = c(-0.3, 0.9);
        let u = build_band_matrix(-16..=16, &coin, &phases, truncation).unwrap();
        let n = 33;
        let dense = DMatrix::from_fn(n, n, |i, j| {
            u.get(i as i64 - 16, j as i64 - 16) - if i == j { z } else { C64::new(0.0, 0.0) }
        });
        let inv = dense.try_inverse().unwrap();
        let res = Resolvent::new(z, &coin, &phases, -16..=16, truncation).unwrap();
        for l in -16..=16i64 {
            let col = res.column(l).unwrap();
            for k in -16..=16i64 {
                let want = inv[((k + 16) as usize, (l + 16) as usize)];
                assert!((col[(k + 16) as usize] - want).norm() < 1e-11, "{truncation:?} ({k}, {l})");
            }
        }
    }
}

#[test]
fn generalized_eigenvectors_solve_the_half_line_equation() {
    let coin = make_coin(0.7).unwrap();
    let phases = sample_phases(UNIFORM, -100..=100, 12).unwrap();
    for z in [c(0.97, 0.0), c(0.2, -1.1), c(-0.5, 0.5)] {
        for side in [Side::Plus, Side::Minus] {
            let phi = generalized_eigenvector(z, &coin, &phases, -100..=100, side).unwrap();
            let res = eigenvector_residual(z, &coin, &phases, &phi, side).unwrap();
            assert!(res < 1e-10, "{side:?} at {z}: {res}");
        }
    }
}

#[test]
fn embedded_route_agrees_with_complex_route() {
    let coin = make_coin(0.5).unwrap();
    let z = c(0.99, 0.1);
    let a = lyapunov_estimate_with(z, &coin, UNIFORM, 5000, 16, 2, ProductRoute::Complex).unwrap();
    let b = lyapunov_estimate_with(z, &coin, UNIFORM, 5000, 16, 2, ProductRoute::Embedded).unwrap();
    let sigma = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    assert!((a.gamma_hat - b.gamma_hat).abs() < 3.0 * sigma, "{} vs {}", a.gamma_hat, b.gamma_hat);
}

#[test]
fn point_mass_law_carries_a_warning() {
    let est = lyapunov_estimate(c(1.0, 0.0), &CoinParams::hadamard(), PhaseDistribution::PointMass { value: 0.3 }, 200, 4, 1)
        .unwrap();
    assert!(est.warning.is_some());
    let est = lyapunov_estimate(c(1.0, 0.0), &CoinParams::hadamard(), UNIFORM, 200, 4, 1).unwrap();
    assert!(est.warning.is_none());
}

#[test]
fn estimates_are_reproducible() {
    let coin = CoinParams::hadamard();
    let a = lyapunov_estimate(c(1.0, 0.0), &coin, UNIFORM, 1000, 8, 42).unwrap();
    let b = lyapunov_estimate(c(1.0, 0.0), &coin, UNIFORM, 1000, 8, 42).unwrap();
    assert_eq!(a, b);
    let spec = FractionalMomentSpec {
        z: c(0.95, 0.0),
        s: 0.3,
        pairs: vec![(4, 0), (8, 0), (12, 0), (16, 0)],
        window: -32..=48,
        dist: UNIFORM,
        coin,
        replicas: 50,
        seed: 9,
    };
    assert_eq!(fractional_moment(&spec).unwrap(), fractional_moment(&spec).unwrap());
    let other = FractionalMomentSpec { seed: 10, ..spec.clone() };
    assert_ne!(fractional_moment(&spec).unwrap(), fractional_moment(&other).unwrap());
}

#[test]
fn ballistic_constant_predicts_spreading() {
    for (t, init) in [
        (0.6, basis_state(Spin::Up, 0)),
        (0.85, WalkState::local([C64::new(0.6, 0.0), C64::new(0.0, 0.8)], 0)),
        (0.3, basis_state(Spin::Down, 0)),
    ] {
        let coin = make_coin(t).unwrap();
        let b = ballistic_constant(&coin.normal_form(), &init).unwrap();
        let n = 1500;
        let x2 = moment_series(&init, &coin, Regime::Deterministic, &[2], n).unwrap()[0].values[n];
        let direct = x2 / (n * n) as f64;
        assert!((direct - b.b).abs() < 0.01 * b.b, "t = {t}: B = {}, direct = {direct}", b.b);
    }
}

#[test]
fn group_velocities_respect_the_light_cone() {
    for t in [0.1, 0.5, 0.9] {
        let data = bands(&make_coin(t).unwrap().normal_form(), 256).unwrap();
        assert!(data.max_fd_mismatch() < 1e-6);
        for branch in &data.velocities {
            assert!(branch.iter().all(|v| v.abs() <= 1.0 + 1e-12));
        }
    }
}

proptest! {
    #[test]
    fn witness_product_matches_closed_form(theta in 0.0f64..std::f64::consts::TAU, eta in 0.0f64..std::f64::consts::TAU, t in 0.1f64..0.99, re in 0.5f64..1.5, im in -0.5f64..0.5) {
        let coin = make_coin(t).unwrap();
        let z = c(re, im);
        let m = witness_product(z, theta, eta, &coin).unwrap();
        prop_assert!(max_abs_diff2(&m, &witness_closed_form(theta, eta, &coin)) < 1e-9);
        prop_assume!((theta - eta).abs() > 0.05);
        prop_assert!(noncompactness_witness(z, theta, eta, &coin).unwrap().spectral_radius > 1.0);
    }
}
