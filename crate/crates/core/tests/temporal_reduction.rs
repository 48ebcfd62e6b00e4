use qwalk_core::coin::{make_coin, CoinParams, PhaseDistribution};
use qwalk_core::evolution::temporal_phases;
use qwalk_core::temporal::{
    balanced_coin_state, diffusion_constant, generating_function, hermite_moment_limit, mc_vs_exact,
    moment_scaling, prw_distribution, prw_params, quantum_distribution, PersistentRWParams,
};
use qwalk_core::{Error, C64};

/// Exact law of a persistent walk by enumerating all `2^n` step sequences.
fn enumerate(p: &PersistentRWParams, n: usize) -> Vec<f64> {
    let mut w = vec![0.0; 2 * n + 1];
    for bits in 0..(1u32 << n) {
        let step = |j: usize| if bits >> j & 1 == 0 { 1i64 } else { -1 };
        let mut prob = if step(0) == 1 { p.a } else { p.b };
        let mut pos = step(0);
        for j in 1..n {
            prob *= if step(j) == step(j - 1) { p.persist } else { p.flip };
            pos += step(j);
        }
        w[(pos + n as i64) as usize] += prob;
    }
    w
}

#[test]
fn recursion_matches_enumeration() {
    for (t, phi0) in [
        (0.7, [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]),
        (0.3, balanced_coin_state()),
        (0.9, [C64::new(0.6, 0.0), C64::new(0.8, 0.0)]),
    ] {
        let p = prw_params(phi0, &make_coin(t).unwrap()).unwrap();
        for n in 1..=12 {
            let table = prw_distribution(&p, n).unwrap();
            let brute = enumerate(&p, n);
            for (i, (got, want)) in table.probs.iter().zip(&brute).enumerate() {
                assert!((got - want).abs() < 1e-14, "t = {t}, n = {n}, site {}", i as i64 - n as i64);
            }
        }
    }
}

#[test]
fn table_is_a_parity_respecting_probability() {
    let p = prw_params(balanced_coin_state(), &make_coin(0.55).unwrap()).unwrap();
    for n in [1, 2, 37, 500] {
        let t = prw_distribution(&p, n).unwrap();
        assert!((t.total() - 1.0).abs() < 1e-13);
        assert_eq!(t.parity_violation(), 0.0);
    }
}

#[test]
fn characteristic_function_matches_transfer_symbol() {
    let coin = make_coin(0.65).unwrap();
    let p = prw_params([C64::new(0.6, 0.0), C64::new(0.0, 0.8)], &coin).unwrap();
    let n = 200;
    let table = prw_distribution(&p, n).unwrap();
    for y in [0.0, 0.05, 0.3, 1.0, 2.5] {
        let y = C64::new(y, 0.0);
        let a = table.characteristic(y);
        let b = generating_function(y, n, &p).unwrap();
        assert!((a - b).norm() < 1e-12, "y = {y}: {a} vs {b}");
    }
}

#[test]
fn single_realizations_conserve_probability() {
    let coin = make_coin(0.4).unwrap();
    let phases = temporal_phases(PhaseDistribution::UniformFull, 6, 80).unwrap();
    let w = quantum_distribution(&coin, &phases, balanced_coin_state(), 80).unwrap();
    assert!((w.total() - 1.0).abs() < 1e-12);
    assert!(w.parity_violation() < 1e-30);
}

#[test]
fn monte_carlo_agrees_for_an_asymmetric_coin() {
    let coin = make_coin(0.6).unwrap();
    let cmp = mc_vs_exact(&coin, [C64::new(0.6, 0.0), C64::new(0.0, 0.8)], PhaseDistribution::UniformFull, 12, 3000, 5)
        .unwrap();
    assert!(cmp.within(4.0), "max |z| = {}", cmp.max_abs_z);
}

#[test]
fn biased_phase_law_is_rejected() {
    let err = mc_vs_exact(
        &CoinParams::hadamard(),
        balanced_coin_state(),
        PhaseDistribution::UniformInterval { a: 0.0, b: 1.0 },
        5,
        10,
        0,
    )
    .unwrap_err();
    assert!(matches!(err, Error::Hypothesis(_)));
}

#[test]
fn hermite_limits_are_the_diffusion_constants() {
    let coin = make_coin(0.6).unwrap();
    for l in [2u32, 4, 6] {
        let sign = if (l / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let lhs = sign * diffusion_constant(l, &coin).unwrap();
        let rhs = hermite_moment_limit(l, &coin).unwrap();
        assert!((lhs - rhs).abs() < 1e-12 * rhs.abs().max(1.0), "L = {l}");
    }
    for l in [1u32, 3, 5] {
        assert_eq!(hermite_moment_limit(l, &coin).unwrap(), 0.0);
    }
}

#[test]
fn scaled_moments_converge() {
    let coin = make_coin(0.6).unwrap();
    let rows = moment_scaling(2, &coin, balanced_coin_state(), &[100, 1000, 10_000]).unwrap();
    let d = diffusion_constant(2, &coin).unwrap();
    let gaps: Vec<f64> = rows.iter().map(|r| (r.ratio - d).abs()).collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2] && gaps[2] < 0.01 * d, "{gaps:?}");
}
