//! Acceptance checks. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::Matrix4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use qwalk_core::coin::{
    konno_evolve, make_coin, sample_phases, verify_general_reduction, verify_konno_gauge, CoinParams, GeneralCoin,
    PhaseDistribution,
};
use qwalk_core::evolution::{moment_series, Regime, Truncation};
use qwalk_core::fourier::ballistic_constant;
use qwalk_core::greens::{decay_fit, fractional_moment, FractionalMomentSpec, GreensFormula, Resolvent};
use qwalk_core::linalg::{c, cis, frobenius, mat2, Mat2};
use qwalk_core::seeds::replica_seed;
use qwalk_core::state::{basis_state, Spin, WalkState};
use qwalk_core::temporal::{
    balanced_coin_state, generating_function, gaussian_limit, mc_vs_exact, prw_params, PrwRecursion,
};
use qwalk_core::transfer::{lyapunov_estimate, tau_embed, transfer_matrix};
use qwalk_core::C64;

const UP: [C64; 2] = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
const UNIFORM: PhaseDistribution = PhaseDistribution::UniformFull;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn within_budget(o: Outcome, elapsed: Duration, budget: Option<Duration>) -> Outcome {
    match budget {
        Some(b) if elapsed > b => outcome(false, format!("{}; over time budget {:?}", o.detail, b)),
        _ => o,
    }
}

/// Exact persistent-walk recursion advanced to `n`.
fn recursion_at(coin: &CoinParams, phi0: [C64; 2], n: usize) -> PrwRecursion {
    let mut rec = PrwRecursion::new(prw_params(phi0, coin).unwrap(), n);
    while rec.n() < n {
        rec.step();
    }
    rec
}

fn c1_diffusion_d2() -> Outcome {
    let n = 10_000;
    let rec = recursion_at(&CoinParams::hadamard(), UP, n);
    let ratio = rec.moment(2) / n as f64;
    outcome((ratio - 1.0).abs() <= 0.05, format!("Σk²w/n = {ratio:.6} at n = {n}, target 1 ± 5%"))
}

fn c2_diffusion_d4() -> Outcome {
    let n = 10_000;
    let rec = recursion_at(&CoinParams::hadamard(), UP, n);
    let r4 = rec.moment(4) / (n as f64).powi(2);
    let biased = make_coin(0.8f64.sqrt()).unwrap();
    let rec = recursion_at(&biased, balanced_coin_state(), n);
    let r2 = rec.moment(2) / n as f64;
    outcome(
        (r4 - 3.0).abs() <= 0.3 && (r2 - 4.0).abs() <= 0.2,
        format!("Σk⁴w/n² = {r4:.5} (target 3 ± 10%), t² = 0.8: Σk²w/n = {r2:.5} (target 4 ± 5%)"),
    )
}

fn c3_odd_moments() -> Outcome {
    let n = 10_000;
    let mut worst = 0.0f64;
    for (coin, phi0) in [
        (CoinParams::hadamard(), UP),
        (CoinParams::hadamard(), [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]),
        (make_coin(0.8f64.sqrt()).unwrap(), balanced_coin_state()),
    ] {
        let m1 = recursion_at(&coin, phi0, n).moment(1);
        worst = worst.max(m1.abs() / (n as f64).sqrt());
    }
    outcome(worst < 0.05, format!("max |Σk w|/√n = {worst:.3e} over three setups, bound 0.05"))
}

fn c4_gaussian_limit() -> Outcome {
    let tau = 10_000usize;
    let mut worst = 0.0f64;
    for (coin, phi0) in [
        (CoinParams::hadamard(), UP),
        (make_coin(0.8f64.sqrt()).unwrap(), balanced_coin_state()),
    ] {
        let params = prw_params(phi0, &coin).unwrap();
        for y in [0.5, 1.0, 2.0] {
            let psi = generating_function(C64::new(y / (tau as f64).sqrt(), 0.0), tau, &params).unwrap();
            let g = gaussian_limit(y, &coin).unwrap();
            worst = worst.max((psi - g).norm());
        }
    }
    outcome(worst < 0.01, format!("max |Ψ_τ(y/√τ) - gaussian| = {worst:.3e} at τ = {tau}, bound 0.01"))
}

fn c5_quantum_classical() -> Outcome {
    let cmp = mc_vs_exact(&CoinParams::hadamard(), UP, UNIFORM, 30, 2000, 2024).unwrap();
    // share of the 4σ allowance used by the worst site
    let used = cmp
        .sites
        .iter()
        .map(|s| (s.mean - s.exact).abs() / (4.0 * s.stderr + 1e-12))
        .fold(0.0, f64::max);
    outcome(
        cmp.within(4.0),
        format!(
            "n = 30, 2000 realizations, {} sites: worst site uses {:.0}% of the 4σ band, max |dev| = {:.2e}",
            cmp.sites.len(),
            100.0 * used,
            cmp.max_abs_deviation
        ),
    )
}

fn second_moment_ratio(coin: &CoinParams, regime: Regime, n: usize) -> f64 {
    let s = moment_series(&basis_state(Spin::Up, 0), coin, regime, &[2], n).unwrap();
    s[0].values[n] / (n as f64).powi(2)
}

fn c6_ballistic() -> Outcome {
    let locals: [WalkState; 3] = [
        basis_state(Spin::Up, 0),
        basis_state(Spin::Down, 0),
        WalkState::local(balanced_coin_state(), 0),
    ];
    let identity = make_coin(1.0).unwrap().normal_form();
    let b_id = locals.iter().map(|s| (ballistic_constant(&identity, s).unwrap().b - 1.0).abs()).fold(0.0, f64::max);
    let flips: [Mat2; 2] = [
        make_coin(0.0).unwrap().normal_form(),
        mat2(C64::new(0.0, 0.0), cis(0.7), cis(-1.9), C64::new(0.0, 0.0)),
    ];
    let b_off = flips
        .iter()
        .flat_map(|m| locals.iter().map(move |s| ballistic_constant(m, s).unwrap().b.abs()))
        .fold(0.0, f64::max);
    let h = CoinParams::hadamard();
    let b_h = ballistic_constant(&h.normal_form(), &locals[0]).unwrap().b;
    let direct = second_moment_ratio(&h, Regime::Deterministic, 2000);
    let rel = (direct - b_h).abs() / b_h;
    outcome(
        b_id <= 1e-14 && b_off <= 1e-14 && rel < 0.01,
        format!(
            "|B(1) - 1| = {b_id:.1e}, max |B(off-diagonal)| = {b_off:.1e}, Hadamard B = {b_h:.6} vs ⟨X²⟩/n² = {direct:.6} at n = 2000 (rel {rel:.2e})"
        ),
    )
}

fn c7_localization() -> Outcome {
    let coin = CoinParams::hadamard();
    let n = 2000;
    let seeds = 50u64;
    let ratios: Vec<f64> = (0..seeds)
        .into_par_iter()
        .map(|i| {
            let regime = Regime::Spatial { dist: UNIFORM, seed: replica_seed(7, i) };
            let v = &moment_series(&basis_state(Spin::Up, 0), &coin, regime, &[2], n).unwrap()[0].values;
            let early = v[1..=1000].iter().copied().fold(0.0, f64::max);
            let late = v[1000..=n].iter().copied().fold(0.0, f64::max);
            late / early
        })
        .collect();
    let saturated = ratios.iter().filter(|&&r| r < 1.05).count();
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    let contrast = second_moment_ratio(&coin, Regime::Spatial { dist: PhaseDistribution::PointMass { value: 0.0 }, seed: 7 }, n);
    outcome(
        saturated >= 45 && contrast > 0.01,
        format!(
            "{saturated}/{seeds} seeds saturate (worst late/early max = {worst:.4}); point-mass ⟨X²⟩/n² = {contrast:.4} at n = {n}"
        ),
    )
}

fn c8_lyapunov() -> Outcome {
    let coin = CoinParams::hadamard();
    let n = 100_000;
    let at = |radius: f64| lyapunov_estimate(C64::new(radius, 0.0), &coin, UNIFORM, n, 32, 11).unwrap();
    let unit = at(1.0);
    let sig = unit.gamma_hat / unit.stderr;
    let scan: Vec<f64> = [0.98, 0.99, 1.0, 1.01, 1.02].iter().map(|&r| at(r).gamma_hat).collect();
    let (lo, hi) = scan.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &g| (a.min(g), b.max(g)));
    let mean = scan.iter().sum::<f64>() / scan.len() as f64;
    let variation = (hi - lo) / mean;
    outcome(
        sig > 5.0 && variation < 0.2,
        format!(
            "γ(1) = {:.5} ± {:.1e} (ratio {sig:.0}); scan over |z| ∈ [0.98, 1.02]: {} (variation {:.2}%)",
            unit.gamma_hat,
            unit.stderr,
            scan.iter().map(|g| format!("{g:.4}")).collect::<Vec<_>>().join(", "),
            100.0 * variation
        ),
    )
}

fn c9_greens_routes() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let (mut samples, mut worst) = (0usize, 0.0f64);
    for realization in 0..40u64 {
        let t = rng.random_range(0.3..0.95);
        let coin = make_coin(t).unwrap();
        let radius = if rng.random::<bool>() { rng.random_range(0.85..0.97) } else { rng.random_range(1.03..1.15) };
        let z = C64::from_polar(radius, rng.random_range(0.0..std::f64::consts::TAU));
        let (lo, hi) = (-30i64, 30i64);
        let phases = sample_phases(UNIFORM, lo..=hi, replica_seed(99, realization)).unwrap();
        let res = Resolvent::new(z, &coin, &phases, lo..=hi, Truncation::Finite).unwrap();
        let formula = GreensFormula::new(z, &coin, &phases, lo..=hi).unwrap();
        for _ in 0..4 {
            let l = rng.random_range(lo + 1..=hi);
            let col = res.column(l).unwrap();
            for _ in 0..4 {
                let k = rng.random_range(lo..=hi);
                let a = formula.entry(k, l).unwrap();
                let b = col[(k - lo) as usize];
                worst = worst.max((a - b).norm() / b.norm());
                samples += 1;
            }
        }
    }
    let mut det_worst = 0.0f64;
    for _ in 0..10_000 {
        let coin = make_coin(rng.random_range(0.2..1.0)).unwrap();
        let z = C64::from_polar(rng.random_range(0.5..2.0), rng.random_range(0.0..std::f64::consts::TAU));
        let (theta, eta) = (rng.random_range(0.0..std::f64::consts::TAU), rng.random_range(0.0..std::f64::consts::TAU));
        let tm = transfer_matrix(z, theta, eta, &coin).unwrap();
        det_worst = det_worst.max((tm.det() - tm.expected_det()).norm());
    }
    outcome(
        samples >= 500 && worst <= 1e-9 && det_worst <= 1e-12,
        format!("{samples} entries, max relative gap {worst:.2e}; det identity max error {det_worst:.2e} on 10⁴ samples"),
    )
}

fn fm_spec(pad: i64, replicas: usize) -> FractionalMomentSpec {
    let d_max = 40;
    let lo = -pad;
    let hi = d_max + pad;
    FractionalMomentSpec {
        z: C64::new(0.95, 0.0),
        s: 1.0 / 3.0,
        pairs: (4..=d_max).map(|d| (d, 0)).collect(),
        window: lo..=hi,
        dist: UNIFORM,
        coin: CoinParams::hadamard(),
        replicas,
        seed: 3,
    }
}

fn c10_fractional_moments() -> Outcome {
    let replicas = 10_000;
    let base = fractional_moment(&fm_spec(80, replicas)).unwrap();
    let wide = fractional_moment(&fm_spec(160, replicas)).unwrap();
    let fit = decay_fit(&base.by_distance).unwrap();
    let shift = base
        .by_distance
        .iter()
        .zip(&wide.by_distance)
        .map(|(a, b)| (a.mean - b.mean).abs() / a.stderr)
        .fold(0.0, f64::max);
    outcome(
        fit.alpha_hat > 0.0 && fit.slope_significance > 5.0 && shift < 1.0,
        format!(
            "α = {:.4} ± {:.4} (|slope|/stderr = {:.1}), C = {:.3}; window doubling moves estimates by ≤ {shift:.3} stderr",
            fit.alpha_hat, fit.alpha_stderr, fit.slope_significance, fit.c_hat
        ),
    )
}

fn c11_gauge() -> Outcome {
    let coin = make_coin(0.6).unwrap();
    let n = 20;
    let mut dist_gap = 0.0f64;
    let mut matrix_gap = 0.0f64;
    for realization in 0..10u64 {
        let phases = sample_phases(UNIFORM, -60..=60, replica_seed(1111, realization)).unwrap();
        matrix_gap = matrix_gap.max(verify_konno_gauge(&coin, &phases).unwrap());
        for spin in [Spin::Up, Spin::Down] {
            let init = basis_state(spin, 0);
            let random = konno_evolve(&coin, Some(&phases), &init, n);
            let clean = konno_evolve(&coin, None, &init, n);
            for k in -(n as i64) - 1..=n as i64 + 1 {
                dist_gap = dist_gap.max((random.site_probability(k) - clean.site_probability(k)).abs());
            }
        }
    }
    let mut general_gap = 0.0f64;
    for (i, &(t, alpha, gamma, theta)) in
        [(0.6, 0.3, 1.1, -0.4), (0.2, -2.0, 0.5, 2.5), (0.95, 1.7, -2.9, 0.0), (std::f64::consts::FRAC_1_SQRT_2, 0.9, 0.9, 0.9)]
            .iter()
            .enumerate()
    {
        let g = GeneralCoin::new(t, alpha, gamma, theta).unwrap();
        let phases = sample_phases(UNIFORM, -40..=40, replica_seed(1212, i as u64)).unwrap();
        general_gap = general_gap.max(verify_general_reduction(&g, &phases).unwrap());
    }
    outcome(
        dist_gap <= 1e-10 && matrix_gap <= 1e-10 && general_gap <= 1e-10,
        format!(
            "Konno distributions gap {dist_gap:.1e} (n = {n}, 10 realizations), Konno band gap {matrix_gap:.1e}, general reduction gap {general_gap:.1e}"
        ),
    )
}

fn random_mat2(rng: &mut ChaCha8Rng) -> Mat2 {
    let mut e = || c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    mat2(e(), e(), e(), e())
}

fn c12_tau_embedding() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1212);
    let (mut norm_gap, mut hom_gap, mut det_gap) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let (a, b) = (random_mat2(&mut rng), random_mat2(&mut rng));
        let ta = tau_embed(&a);
        norm_gap = norm_gap.max((ta.norm() - std::f64::consts::SQRT_2 * frobenius(&a)).abs() / frobenius(&a));
        let prod: Matrix4<f64> = ta * tau_embed(&b);
        hom_gap = hom_gap.max((tau_embed(&(a * b)) - prod).amax());
        // unimodular sample: rescale until det has modulus one
        let u = loop {
            let m = random_mat2(&mut rng);
            let d = m.determinant();
            if d.norm() >= 0.25 {
                break m / d.sqrt() * cis(rng.random_range(0.0..std::f64::consts::PI));
            }
        };
        det_gap = det_gap.max((tau_embed(&u).determinant().abs() - 1.0).abs());
    }
    outcome(
        norm_gap <= 1e-12 && hom_gap <= 1e-12 && det_gap <= 1e-12,
        format!("norm gap {norm_gap:.1e}, homomorphism gap {hom_gap:.1e}, |det| gap {det_gap:.1e} on 10⁴ matrices"),
    )
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let minutes = |m: u64| Some(Duration::from_secs(60 * m));
    let criteria = [
        Criterion { id: 1, name: "temporal D(2)", budget: minutes(1), run: c1_diffusion_d2 },
        Criterion { id: 2, name: "temporal D(4) and biased D(2)", budget: minutes(2), run: c2_diffusion_d4 },
        Criterion { id: 3, name: "odd moments", budget: None, run: c3_odd_moments },
        Criterion { id: 4, name: "gaussian limit", budget: None, run: c4_gaussian_limit },
        Criterion { id: 5, name: "quantum vs classical walk", budget: minutes(5), run: c5_quantum_classical },
        Criterion { id: 6, name: "ballistic constant", budget: None, run: c6_ballistic },
        Criterion { id: 7, name: "dynamical localization", budget: minutes(10), run: c7_localization },
        Criterion { id: 8, name: "lyapunov positivity", budget: minutes(5), run: c8_lyapunov },
        Criterion { id: 9, name: "green's function routes", budget: None, run: c9_greens_routes },
        Criterion { id: 10, name: "fractional moment decay", budget: minutes(20), run: c10_fractional_moments },
        Criterion { id: 11, name: "gauge checks", budget: None, run: c11_gauge },
        Criterion { id: 12, name: "tau embedding", budget: None, run: c12_tau_embedding },
    ];
    let mut failed = 0;
    for cr in &criteria {
        let start = Instant::now();
        let o = (cr.run)();
        let elapsed = start.elapsed();
        let o = within_budget(o, elapsed, cr.budget);
        if !o.passed {
            failed += 1;
        }
        println!(
            "{} [{:>2}] {}: {} ({:.2}s)",
            if o.passed { "PASS" } else { "FAIL" },
            cr.id,
            cr.name,
            o.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {} failed", criteria.len() - failed, failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
