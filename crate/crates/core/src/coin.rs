//! Coin parametrization, phase distributions and gauge reductions.
//!
//! The random coin at site `k` is
//!
//! ```text
//! C_k = [ e^{-iω↑_k} t   -e^{-iω↑_k} r ]
//!       [ e^{-iω↓_k} r    e^{-iω↓_k} t ]
//! ```
//!
//! with `r² + t² = 1`. Phases are stored per relabeled index `m`
//! (`ω↑_k = ω_{2k}`, `ω↓_k = ω_{2k+1}`) and always reduced to `[0, 2π)`.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::evolution::{coin_shift_entries, WindowMatrix};
use crate::linalg::{cis, mat2, unitarity_defect, Mat2, I};
use crate::state::WalkState;
use crate::{Error, Result, C64};

const NORM_TOL: f64 = 1e-12;

/// Reduce an angle to `[0, 2π)`.
pub fn wrap_phase(x: f64) -> f64 {
    let w = x.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Deterministic amplitudes `(r, t)` of the normal-form coin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoinParams {
    r: f64,
    t: f64,
}

/// Coin with transmission amplitude `t` and reflection `r = sqrt(1 - t²)`.
pub fn make_coin(t: f64) -> Result<CoinParams> {
    CoinParams::new(t)
}

impl CoinParams {
    pub fn new(t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("transmission amplitude t = {t} outside [0, 1]")));
        }
        let r = (1.0 - t * t).max(0.0).sqrt();
        Ok(Self { r, t })
    }

    pub fn from_rt(r: f64, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) || !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("amplitudes r = {r}, t = {t} must lie in [0, 1]")));
        }
        if (r * r + t * t - 1.0).abs() > NORM_TOL {
            return Err(Error::Validation(format!("r² + t² = {} differs from 1", r * r + t * t)));
        }
        Ok(Self { r, t })
    }

    /// `r = t = 1/√2`.
    pub fn hadamard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self { r: h, t: h }
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// The random coin for phases `(ω↑, ω↓)`.
    pub fn coin_matrix(&self, up_phase: f64, down_phase: f64) -> Mat2 {
        let u = cis(-up_phase);
        let d = cis(-down_phase);
        mat2(u * self.t, -u * self.r, d * self.r, d * self.t)
    }

    /// The deterministic coin `[[t, -r], [r, t]]` (all phases zero).
    pub fn normal_form(&self) -> Mat2 {
        self.coin_matrix(0.0, 0.0)
    }
}

/// A general `U(2)` coin `e^{-iθ} [[t e^{-iα}, i r e^{iγ}], [i r e^{-iγ}, t e^{iα}]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralCoin {
    pub t: f64,
    pub r: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub theta: f64,
}

impl GeneralCoin {
    pub fn new(t: f64, alpha: f64, gamma: f64, theta: f64) -> Result<Self> {
        let coin = CoinParams::new(t)?;
        let g = Self {
            t,
            r: coin.r(),
            alpha: wrap_phase(alpha),
            gamma: wrap_phase(gamma),
            theta: wrap_phase(theta),
        };
        g.validate()?;
        Ok(g)
    }

    pub fn matrix(&self) -> Mat2 {
        let (t, r) = (C64::from(self.t), C64::from(self.r));
        let m = mat2(
            t * cis(-self.alpha),
            I * r * cis(self.gamma),
            I * r * cis(-self.gamma),
            t * cis(self.alpha),
        );
        m * cis(-self.theta)
    }

    pub fn validate(&self) -> Result<()> {
        let defect = unitarity_defect(&self.matrix());
        if !(defect <= NORM_TOL) {
            return Err(Error::Validation(format!("general coin is not unitary (defect {defect:e})")));
        }
        Ok(())
    }
}

/// The measure μ on the circle from which phases are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PhaseDistribution {
    UniformFull,
    UniformInterval { a: f64, b: f64 },
    PointMass { value: f64 },
}

impl PhaseDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PhaseDistribution::UniformInterval { a, b } => {
                if !(0.0 <= a && a < b && b <= TAU) {
                    return Err(Error::Domain(format!(
                        "uniform interval needs 0 <= a < b <= 2π, got a = {a}, b = {b}"
                    )));
                }
            }
            PhaseDistribution::PointMass { value } => {
                if !value.is_finite() {
                    return Err(Error::Domain("point mass location must be finite".into()));
                }
            }
            PhaseDistribution::UniformFull => {}
        }
        Ok(())
    }

    /// Absolutely continuous with bounded density (the localization hypothesis).
    pub fn has_bounded_density(&self) -> bool {
        !matches!(self, PhaseDistribution::PointMass { .. })
    }

    /// `E[e^{-iω}]`.
    pub fn mean_exp_minus_i(&self) -> C64 {
        match *self {
            PhaseDistribution::UniformFull => C64::new(0.0, 0.0),
            PhaseDistribution::UniformInterval { a, b } => {
                if (b - a - TAU).abs() < 1e-15 {
                    return C64::new(0.0, 0.0);
                }
                (cis(-b) - cis(-a)) / (-I * (b - a))
            }
            PhaseDistribution::PointMass { value } => cis(-value),
        }
    }

    /// Map a uniform variate `u ∈ [0, 1)` to a phase in `[0, 2π)`.
    pub fn phase_from_uniform(&self, u: f64) -> f64 {
        match *self {
            PhaseDistribution::UniformFull => wrap_phase(TAU * u),
            PhaseDistribution::UniformInterval { a, b } => wrap_phase(a + (b - a) * u),
            PhaseDistribution::PointMass { value } => wrap_phase(value),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            PhaseDistribution::UniformFull => "uniform-full".into(),
            PhaseDistribution::UniformInterval { a, b } => format!("uniform-interval({a},{b})"),
            PhaseDistribution::PointMass { value } => format!("point-mass({value})"),
        }
    }
}

/// I.i.d. phases `ω_m` over a window of relabeled indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSequence {
    start: i64,
    values: Vec<f64>,
    seed: u64,
    distribution: PhaseDistribution,
}

/// Draw one phase per relabeled index in `window`.
///
/// The value at index `m` depends only on `(dist, seed, m)`, never on the
/// window: each index owns a fixed position in the ChaCha8 key stream of
/// `seed`. Enlarging the window therefore keeps the phases already drawn.
pub fn sample_phases(
    dist: PhaseDistribution,
    window: RangeInclusive<i64>,
    seed: u64,
) -> Result<PhaseSequence> {
    dist.validate()?;
    let (start, end) = (*window.start(), *window.end());
    if start > end {
        return Err(Error::Window(format!("empty phase window {start}..={end}")));
    }
    let len = (end - start + 1) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // offset-binary keeps consecutive indices in consecutive u64 slots
    let slot = (start as u64) ^ (1u64 << 63);
    rng.set_word_pos(2 * slot as u128);
    let values = (0..len).map(|_| dist.phase_from_uniform(rng.random::<f64>())).collect();
    Ok(PhaseSequence { start, values, seed, distribution: dist })
}

impl PhaseSequence {
    /// Explicit phases starting at relabeled index `start` (reduced mod 2π).
    pub fn from_values(start: i64, values: Vec<f64>) -> Self {
        let values = values.into_iter().map(wrap_phase).collect();
        Self { start, values, seed: 0, distribution: PhaseDistribution::PointMass { value: 0.0 } }
    }

    /// All-zero phases on a window.
    pub fn zeros(window: RangeInclusive<i64>) -> Self {
        let len = (window.end() - window.start() + 1).max(0) as usize;
        Self::from_values(*window.start(), vec![0.0; len])
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn end(&self) -> i64 {
        self.start + self.values.len() as i64 - 1
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn distribution(&self) -> PhaseDistribution {
        self.distribution
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn covers(&self, lo: i64, hi: i64) -> bool {
        lo >= self.start && hi <= self.end()
    }

    pub fn get(&self, m: i64) -> Option<f64> {
        if m < self.start {
            return None;
        }
        self.values.get((m - self.start) as usize).copied()
    }

    /// `ω_m`; panics outside the window.
    pub fn at(&self, m: i64) -> f64 {
        self.get(m).unwrap_or_else(|| {
            panic!("phase index {m} outside window {}..={}", self.start, self.end())
        })
    }

    /// Phases `(ω↑_k, ω↓_k) = (ω_{2k}, ω_{2k+1})` of site `k`.
    pub fn site_pair(&self, k: i64) -> Option<(f64, f64)> {
        Some((self.get(2 * k)?, self.get(2 * k + 1)?))
    }
}

/// Diagonal gauge phases `ζ_m`, `V e_m = e^{iζ_m} e_m`, on a window.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugePhases {
    pub start: i64,
    pub values: Vec<f64>,
}

impl GaugePhases {
    pub fn end(&self) -> i64 {
        self.start + self.values.len() as i64 - 1
    }

    pub fn at(&self, m: i64) -> f64 {
        self.values[(m - self.start) as usize]
    }
}

/// Output of [`reduce_general_coin`].
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeReduction {
    pub coin: CoinParams,
    /// Diagonal of `Σ = diag(1, -i e^{iγ})`, with `Σ C Σ⁻¹ = [[t e^{-iα}, -r], [r, t e^{iα}]]`
    /// for the phase-stripped coin.
    pub sigma: [C64; 2],
    /// `ζ_{2k+2} = ζ_{2k+1} = -kα`, which removes `α`.
    pub zeta: GaugePhases,
    /// `θ`: the operator `e^{iθ} U` is the one unitarily equivalent to the normal form.
    pub global_phase: f64,
}

impl GaugeReduction {
    /// Phase of the combined diagonal gauge `Σ⁻¹ V` at relabeled index `m`.
    pub fn total_phase(&self, m: i64) -> f64 {
        let s = self.sigma[m.rem_euclid(2) as usize];
        wrap_phase(self.zeta.at(m) - s.arg())
    }
}

/// Reduce a general coin to the normal form `(r, t)` plus diagonal gauge data.
pub fn reduce_general_coin(g: &GeneralCoin, window: RangeInclusive<i64>) -> Result<GaugeReduction> {
    g.validate()?;
    let (start, end) = (*window.start(), *window.end());
    if start > end {
        return Err(Error::Window(format!("empty gauge window {start}..={end}")));
    }
    let coin = CoinParams::from_rt(g.r, g.t)?;
    let values = (start..=end)
        .map(|m| {
            // m = 2k+2 or m = 2k+1
            let k = if m.rem_euclid(2) == 0 { m / 2 - 1 } else { (m - 1).div_euclid(2) };
            wrap_phase(-(k as f64) * g.alpha)
        })
        .collect();
    Ok(GaugeReduction {
        coin,
        sigma: [C64::new(1.0, 0.0), -I * cis(g.gamma)],
        zeta: GaugePhases { start, values },
        global_phase: g.theta,
    })
}

/// Band matrix of `D_ω S_C` for a general coin, restricted to `[lo, hi]`.
pub fn general_band_matrix(coin: &Mat2, phases: &PhaseSequence, lo: i64, hi: i64) -> WindowMatrix {
    WindowMatrix::from_columns(lo, hi, |j| {
        coin_shift_entries(coin, j)
            .into_iter()
            .filter_map(|(row, v)| phases.get(row).map(|w| (row, v * cis(-w))))
            .collect::<Vec<_>>()
    })
}

/// Rebuild both band matrices on the phase window and return the largest
/// interior entry mismatch between `e^{iθ} V⁻¹ U V` and the normal form.
pub fn verify_general_reduction(g: &GeneralCoin, phases: &PhaseSequence) -> Result<f64> {
    let (lo, hi) = (phases.start(), phases.end());
    let red = reduce_general_coin(g, lo..=hi)?;
    let general = general_band_matrix(&g.matrix(), phases, lo, hi);
    let conj = general.gauge_conjugate(|m| red.total_phase(m)).scaled(cis(red.global_phase));
    let normal = general_band_matrix(&red.coin.normal_form(), phases, lo, hi);
    Ok(conj.max_abs_diff_interior(&normal, 2))
}

/// Gauge that removes the random phases of the Konno coin
/// `[[t e^{iω_k}, r], [r, -t e^{-iω_k}]]`, with `ω_k` read from `ω_{2k}`.
///
/// Sites pair up as `(2k-1, 2k)` sharing `ζ`; with `ζ_0 = ζ_{-1} = 0`,
/// `ζ_{2k+2} = ζ_{2k+1} = ω_0 + ω_2 + ... + ω_{2k}` and
/// `ζ_{-2k} = ζ_{-2k-1} = -(ω_{-2} + ... + ω_{-2k})`.
pub fn konno_gauge(phases: &PhaseSequence) -> Result<GaugePhases> {
    let (lo, hi) = (phases.start(), phases.end());
    if lo > -1 || hi < 0 {
        return Err(Error::Window(format!(
            "Konno gauge needs a window containing -1 and 0, got {lo}..={hi}"
        )));
    }
    // pair index of m: m = 2k or m = 2k-1
    let pair = |m: i64| (m + 1).div_euclid(2);
    let kmin = pair(lo);
    let kmax = pair(hi);
    let mut cumulative = vec![0.0; (kmax - kmin + 1) as usize];
    let at = |k: i64| (k - kmin) as usize;
    for k in 1..=kmax {
        cumulative[at(k)] = cumulative[at(k - 1)] + phases.at(2 * (k - 1));
    }
    for k in (kmin..0).rev() {
        cumulative[at(k)] = cumulative[at(k + 1)] - phases.at(2 * k);
    }
    let values = (lo..=hi).map(|m| wrap_phase(cumulative[at(pair(m))])).collect();
    Ok(GaugePhases { start: lo, values })
}

/// Konno coin at site `k` for phase `ω`.
pub fn konno_coin(coin: &CoinParams, omega: f64) -> Mat2 {
    let (t, r) = (coin.t(), coin.r());
    mat2(cis(omega) * t, C64::from(r), C64::from(r), -cis(-omega) * t)
}

/// Band matrix of the Konno walk `S (C̃_k ⊗ 1)` restricted to `[lo, hi]`.
/// Site `k` uses `ω_{2k}` from `phases`, or zero when `phases` is `None`.
pub fn konno_band_matrix(coin: &CoinParams, phases: Option<&PhaseSequence>, lo: i64, hi: i64) -> WindowMatrix {
    WindowMatrix::from_columns(lo, hi, |j| {
        let k = j.div_euclid(2);
        let omega = phases.and_then(|p| p.get(2 * k)).unwrap_or(0.0);
        coin_shift_entries(&konno_coin(coin, omega), j).into_iter().collect::<Vec<_>>()
    })
}

/// Largest interior mismatch between `V⁻¹ Ũ_ω V` and the deterministic `Ũ_0`.
pub fn verify_konno_gauge(coin: &CoinParams, phases: &PhaseSequence) -> Result<f64> {
    let zeta = konno_gauge(phases)?;
    let (lo, hi) = (phases.start(), phases.end());
    let random = konno_band_matrix(coin, Some(phases), lo, hi);
    let conj = random.gauge_conjugate(|m| zeta.at(m));
    let clean = konno_band_matrix(coin, None, lo, hi);
    Ok(conj.max_abs_diff_interior(&clean, 2))
}

/// Evolve under the Konno walk: site `k` applies the coin with `ω_{2k}`
/// (zero outside the phase window, or everywhere when `phases` is `None`).
pub fn konno_evolve(
    coin: &CoinParams,
    phases: Option<&PhaseSequence>,
    initial: &WalkState,
    steps: usize,
) -> WalkState {
    let mut state = initial.clone();
    for _ in 0..steps {
        state = crate::evolution::apply_coin_step(&state, |k| {
            let omega = phases.and_then(|p| p.get(2 * k)).unwrap_or(0.0);
            konno_coin(coin, omega)
        });
    }
    state
}

/// Global phase `e^{iθ}` as used in [`GaugeReduction::global_phase`].
pub fn global_phase_factor(theta: f64) -> C64 {
    cis(theta)
}

/// Phase `π/2 - γ` that `Σ⁻¹` puts on odd indices.
pub fn sigma_inverse_odd_phase(gamma: f64) -> f64 {
    wrap_phase(FRAC_PI_2 - gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitarity_defect;
    use crate::state::Spin;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn make_coin_boundaries() {
        let c = make_coin(1.0).unwrap();
        assert_eq!((c.r(), c.t()), (0.0, 1.0));
        let c = make_coin(0.0).unwrap();
        assert_eq!((c.r(), c.t()), (1.0, 0.0));
        let c = make_coin(FRAC_1_SQRT_2).unwrap();
        assert!((c.r() - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn make_coin_rejects_out_of_range() {
        assert!(matches!(make_coin(1.5), Err(Error::Domain(_))));
        assert!(matches!(make_coin(-0.1), Err(Error::Domain(_))));
        assert!(make_coin(f64::NAN).is_err());
    }

    #[test]
    fn coin_is_unitary_for_any_phases() {
        for &t in &[0.0, 0.2, FRAC_1_SQRT_2, 0.9, 1.0] {
            let c = make_coin(t).unwrap();
            assert!((c.r() * c.r() + c.t() * c.t() - 1.0).abs() < 1e-12);
            for &(a, b) in &[(0.0, 0.0), (0.3, 5.9), (PI, 1.0)] {
                assert!(unitarity_defect(&c.coin_matrix(a, b)) < 1e-12);
            }
        }
    }

    #[test]
    fn point_mass_phases_are_constant() {
        let p = sample_phases(PhaseDistribution::PointMass { value: 0.0 }, 0..=3, 9).unwrap();
        assert_eq!(p.values(), &[0.0; 4]);
    }

    #[test]
    fn sampling_is_deterministic_and_window_independent() {
        let d = PhaseDistribution::UniformFull;
        let a = sample_phases(d, -5..=20, 42).unwrap();
        let b = sample_phases(d, -5..=20, 42).unwrap();
        assert_eq!(a, b);
        let wide = sample_phases(d, -50..=50, 42).unwrap();
        for m in -5..=20 {
            assert_eq!(a.at(m).to_bits(), wide.at(m).to_bits());
        }
        let other = sample_phases(d, -5..=20, 43).unwrap();
        assert_ne!(a.values(), other.values());
        assert!(a.values().iter().all(|&w| (0.0..TAU).contains(&w)));
    }

    #[test]
    fn empty_window_rejected() {
        #[allow(clippy::reversed_empty_ranges)]
        let r = sample_phases(PhaseDistribution::UniformFull, 3..=2, 0);
        assert!(matches!(r, Err(Error::Window(_))));
    }

    #[test]
    fn interval_distribution_moments() {
        // uniform on [0, π]: E[sin ω] = 2/π, E[cos ω] = 0
        let d = PhaseDistribution::UniformInterval { a: 0.0, b: PI };
        let p = sample_phases(d, 0..=999_999, 5).unwrap();
        let n = p.values().len() as f64;
        for (f, expect) in [(f64::sin as fn(f64) -> f64, 2.0 / PI), (f64::cos, 0.0)] {
            let mean = p.values().iter().map(|&w| f(w)).sum::<f64>() / n;
            let var = p.values().iter().map(|&w| (f(w) - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt();
            assert!((mean - expect).abs() < 3.0 * se, "{mean} vs {expect}");
        }
        assert!(p.values().iter().all(|&w| (0.0..PI).contains(&w)));
    }

    #[test]
    fn circular_means() {
        assert!(PhaseDistribution::UniformFull.mean_exp_minus_i().norm() < 1e-15);
        let pm = PhaseDistribution::PointMass { value: 0.4 };
        assert!((pm.mean_exp_minus_i() - cis(-0.4)).norm() < 1e-15);
        let full = PhaseDistribution::UniformInterval { a: 0.0, b: TAU };
        assert!(full.mean_exp_minus_i().norm() < 1e-15);
        assert!(PhaseDistribution::UniformInterval { a: 0.0, b: PI }.mean_exp_minus_i().norm() > 0.1);
        assert!(PhaseDistribution::UniformInterval { a: 1.0, b: 0.5 }.validate().is_err());
    }

    #[test]
    fn identity_gauge_for_trivial_phases() {
        let g = GeneralCoin::new(0.6, 0.0, 0.0, 0.0).unwrap();
        let red = reduce_general_coin(&g, 0..=20).unwrap();
        assert!(red.zeta.values.iter().all(|&z| z == 0.0));
        assert_eq!(red.coin, CoinParams::from_rt(g.r, g.t).unwrap());
        assert_eq!(red.global_phase, 0.0);
    }

    #[test]
    fn global_phase_is_reported() {
        let g = GeneralCoin::new(0.6, 0.0, 0.0, FRAC_PI_2).unwrap();
        let red = reduce_general_coin(&g, 0..=20).unwrap();
        assert!((global_phase_factor(red.global_phase) - I).norm() < 1e-15);
        assert!((red.coin.t() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn sigma_conjugation_gives_normal_form_coin() {
        let g = GeneralCoin::new(0.3, 0.7, 1.9, 0.0).unwrap();
        let red = reduce_general_coin(&g, 0..=3).unwrap();
        let s = Mat2::from_diagonal(&nalgebra::Vector2::new(red.sigma[0], red.sigma[1]));
        let si = Mat2::from_diagonal(&nalgebra::Vector2::new(red.sigma[0].inv(), red.sigma[1].inv()));
        let conj = s * g.matrix() * si;
        let expect = mat2(
            cis(-g.alpha) * g.t,
            C64::from(-g.r),
            C64::from(g.r),
            cis(g.alpha) * g.t,
        );
        assert!(crate::linalg::max_abs_diff2(&conj, &expect) < 1e-14);
        assert!((sigma_inverse_odd_phase(g.gamma) - red.total_phase(1)).abs() < 1e-12);
    }

    #[test]
    fn general_reduction_matches_normal_form() {
        let g = GeneralCoin::new(0.8, 0.3, 1.1, 2.5).unwrap();
        let phases = sample_phases(PhaseDistribution::UniformFull, 0..=20, 3).unwrap();
        let err = verify_general_reduction(&g, &phases).unwrap();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn reduction_preserves_entry_moduli() {
        let g = GeneralCoin::new(0.45, 2.0, 0.4, 1.0).unwrap();
        let phases = sample_phases(PhaseDistribution::UniformFull, -6..=14, 8).unwrap();
        let red = reduce_general_coin(&g, -6..=14).unwrap();
        let before = general_band_matrix(&g.matrix(), &phases, -6, 14);
        let after = before.gauge_conjugate(|m| red.total_phase(m)).scaled(cis(red.global_phase));
        for i in -6..=14 {
            for j in -6..=14 {
                assert!((before.get(i, j).norm() - after.get(i, j).norm()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn konno_gauge_zero_phases() {
        let p = PhaseSequence::zeros(-10..=10);
        let z = konno_gauge(&p).unwrap();
        assert!(z.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn konno_gauge_boundary_convention() {
        let p = sample_phases(PhaseDistribution::UniformFull, -10..=10, 1).unwrap();
        let z = konno_gauge(&p).unwrap();
        assert_eq!(z.at(0), 0.0);
        assert_eq!(z.at(-1), 0.0);
        assert!((z.at(2) - p.at(0)).abs() < 1e-15);
        assert_eq!(z.at(1), z.at(2));
        assert!((z.at(-2) - wrap_phase(-p.at(-2))).abs() < 1e-12);
        assert!(konno_gauge(&PhaseSequence::zeros(0..=4)).is_err());
    }

    #[test]
    fn konno_gauge_removes_randomness() {
        let coin = CoinParams::hadamard();
        let p = sample_phases(PhaseDistribution::UniformFull, -10..=10, 77).unwrap();
        let err = verify_konno_gauge(&coin, &p).unwrap();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn konno_position_law_is_deterministic() {
        let coin = CoinParams::hadamard();
        let p = sample_phases(PhaseDistribution::UniformFull, -50..=50, 12).unwrap();
        let init = WalkState::basis(Spin::Up, 0);
        let random = konno_evolve(&coin, Some(&p), &init, 20);
        let clean = konno_evolve(&coin, None, &init, 20);
        for k in -21..=21 {
            assert!((random.site_probability(k) - clean.site_probability(k)).abs() < 1e-10);
        }
    }
}
