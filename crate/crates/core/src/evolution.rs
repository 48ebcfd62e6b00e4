//! Time evolution under `U_ω = D_ω S` and materialized band matrices.
//!
//! In the relabeled basis the deterministic part acts as
//!
//! ```text
//! S e_{2k}   = r e_{2k-1} + t e_{2k+2}
//! S e_{2k+1} = t e_{2k-1} - r e_{2k+2}
//! ```
//!
//! which is `S = S_o S_e` with blocks `B_e = [[r, t], [t, -r]]` on the pairs
//! `(2k, 2k+1)` and `B_o = [[0, 1], [1, 0]]` on `(2k-1, 2k)`. The diagonal `D_ω`
//! multiplies component `m` by `e^{-iω_m}`, i.e. the phase is attached to the
//! index an amplitude lands on.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::coin::{sample_phases, CoinParams, PhaseDistribution, PhaseSequence};
use crate::linalg::{cis, Mat2};
use crate::state::WalkState;
use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Nonzero entries `(row, value)` of column `j` of the phase-free coin-and-shift
/// `S (C ⊗ 1)` for a general coin `C = [[a, b], [c, d]]`.
pub fn coin_shift_entries(coin: &Mat2, j: i64) -> [(i64, C64); 2] {
    let k = j.div_euclid(2);
    let col = (j - 2 * k) as usize;
    [(2 * k + 2, coin[(0, col)]), (2 * k - 1, coin[(1, col)])]
}

/// Dense square matrix indexed by relabeled indices `lo..=hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowMatrix {
    lo: i64,
    hi: i64,
    data: Vec<C64>,
}

impl WindowMatrix {
    pub fn zeros(lo: i64, hi: i64) -> Self {
        let n = (hi - lo + 1).max(0) as usize;
        Self { lo, hi, data: vec![ZERO; n * n] }
    }

    /// Fill from a column oracle; entries whose row falls outside the window are dropped.
    pub fn from_columns<I>(lo: i64, hi: i64, column: impl Fn(i64) -> I) -> Self
    where
        I: IntoIterator<Item = (i64, C64)>,
    {
        let mut m = Self::zeros(lo, hi);
        for j in lo..=hi {
            for (i, v) in column(j) {
                if (lo..=hi).contains(&i) {
                    *m.entry_mut(i, j) += v;
                }
            }
        }
        m
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    pub fn dim(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    #[inline]
    fn idx(&self, i: i64, j: i64) -> usize {
        (i - self.lo) as usize * self.dim() + (j - self.lo) as usize
    }

    pub fn get(&self, i: i64, j: i64) -> C64 {
        self.data[self.idx(i, j)]
    }

    pub fn entry_mut(&mut self, i: i64, j: i64) -> &mut C64 {
        let k = self.idx(i, j);
        &mut self.data[k]
    }

    /// `V⁻¹ M V` for `V e_m = e^{iζ_m} e_m`.
    pub fn gauge_conjugate(&self, zeta: impl Fn(i64) -> f64) -> Self {
        let mut out = self.clone();
        for i in self.lo..=self.hi {
            for j in self.lo..=self.hi {
                let v = self.get(i, j);
                if v != ZERO {
                    *out.entry_mut(i, j) = v * cis(zeta(j) - zeta(i));
                }
            }
        }
        out
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self { lo: self.lo, hi: self.hi, data: self.data.iter().map(|v| v * c).collect() }
    }

    /// Largest entry mismatch over rows and columns at least `margin` away from both edges.
    pub fn max_abs_diff_interior(&self, other: &Self, margin: i64) -> f64 {
        assert_eq!((self.lo, self.hi), (other.lo, other.hi), "window mismatch");
        let (a, b) = (self.lo + margin, self.hi - margin);
        let mut worst = 0.0f64;
        for i in a..=b {
            for j in a..=b {
                worst = worst.max((self.get(i, j) - other.get(i, j)).norm());
            }
        }
        worst
    }

    /// `max |(M* M - 1)_{ij}|`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                let mut s = ZERO;
                for k in 0..n {
                    s += self.data[k * n + a].conj() * self.data[k * n + b];
                }
                if a == b {
                    s -= 1.0;
                }
                worst = worst.max(s.norm());
            }
        }
        worst
    }

    /// `M v` for `v` indexed over the window.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let n = self.dim();
        assert_eq!(v.len(), n);
        (0..n).map(|i| (0..n).map(|j| self.data[i * n + j] * v[j]).sum()).collect()
    }

    /// Column `j` as a dense vector over the window.
    pub fn column(&self, j: i64) -> Vec<C64> {
        (self.lo..=self.hi).map(|i| self.get(i, j)).collect()
    }
}

/// Boundary treatment of a materialized band matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Truncation {
    /// `l²({2n₀, ..., 2m₀})`, exactly unitary.
    Finite,
    /// `l²({2n₀, ...})`: left boundary exact, right end open.
    SemifinitePlus,
    /// `l²({..., 2m₀})`: right boundary exact, left end open.
    SemifiniteMinus,
    /// Plain restriction of the infinite operator.
    None,
}

/// Materialized `U = D_ω S` on a window.
#[derive(Debug, Clone)]
pub struct BandUnitary {
    pub coin: CoinParams,
    pub truncation: Truncation,
    matrix: WindowMatrix,
    exact: (i64, i64),
}

impl BandUnitary {
    pub fn matrix(&self) -> &WindowMatrix {
        &self.matrix
    }

    pub fn window(&self) -> (i64, i64) {
        (self.matrix.lo(), self.matrix.hi())
    }

    /// Rows and columns in this range coincide with the (semi)infinite operator;
    /// outside it, entries touching an open end are missing.
    pub fn exact_range(&self) -> (i64, i64) {
        self.exact
    }

    pub fn get(&self, i: i64, j: i64) -> C64 {
        self.matrix.get(i, j)
    }
}

/// Image of `e_j` under the block structure of `S̄ = S̄_o S̄_e` for the given boundary rules.
fn truncated_shift_column(j: i64, lo: i64, hi: i64, trunc: Truncation, coin: &CoinParams) -> Vec<(i64, C64)> {
    let (r, t) = (coin.r(), coin.t());
    let right_closed = matches!(trunc, Truncation::Finite | Truncation::SemifiniteMinus);
    let left_closed = matches!(trunc, Truncation::Finite | Truncation::SemifinitePlus);

    let p = 2 * j.div_euclid(2);
    let after_even: Vec<(i64, f64)> = if right_closed && p == hi {
        vec![(j, 1.0)]
    } else if j == p {
        vec![(p, r), (p + 1, t)]
    } else {
        vec![(p, t), (p + 1, -r)]
    };

    after_even
        .into_iter()
        .filter(|&(_, v)| v != 0.0)
        .map(|(i, v)| {
            let target = if left_closed && i == lo {
                i
            } else if i.rem_euclid(2) == 1 {
                i + 1
            } else {
                i - 1
            };
            (target, C64::new(v, 0.0))
        })
        .collect()
}

/// Nonzero entries `(row, value)` of column `j` of the truncated `U` on `lo..=hi`.
/// The caller guarantees even endpoints and phases covering the window.
pub fn band_column(
    j: i64,
    lo: i64,
    hi: i64,
    coin: &CoinParams,
    phases: &PhaseSequence,
    truncation: Truncation,
) -> Vec<(i64, C64)> {
    truncated_shift_column(j, lo, hi, truncation, coin)
        .into_iter()
        .filter(|&(i, _)| (lo..=hi).contains(&i))
        .map(|(i, v)| (i, v * cis(-phases.at(i))))
        .collect()
}

/// Check that `window` has even endpoints and is covered by `phases`.
pub fn check_band_window(window: &RangeInclusive<i64>, phases: &PhaseSequence) -> Result<()> {
    let (lo, hi) = (*window.start(), *window.end());
    if lo.rem_euclid(2) != 0 || hi.rem_euclid(2) != 0 || lo > hi {
        return Err(Error::Window(format!("band window must have even endpoints, got {lo}..={hi}")));
    }
    if !phases.covers(lo, hi) {
        return Err(Error::Window(format!(
            "phases cover {}..={}, band window needs {lo}..={hi}",
            phases.start(),
            phases.end()
        )));
    }
    Ok(())
}

/// Materialize `U` on `window = 2n₀..=2m₀` with the given boundary treatment.
pub fn build_band_matrix(
    window: RangeInclusive<i64>,
    coin: &CoinParams,
    phases: &PhaseSequence,
    truncation: Truncation,
) -> Result<BandUnitary> {
    check_band_window(&window, phases)?;
    let (lo, hi) = (*window.start(), *window.end());
    let matrix = WindowMatrix::from_columns(lo, hi, |j| band_column(j, lo, hi, coin, phases, truncation));
    let exact = match truncation {
        Truncation::Finite => (lo, hi),
        Truncation::SemifinitePlus => (lo, hi - 2),
        Truncation::SemifiniteMinus => (lo + 2, hi),
        Truncation::None => (lo + 2, hi - 2),
    };
    Ok(BandUnitary { coin: *coin, truncation, matrix, exact })
}

/// Per-step phases `(ω⁺, ω⁻)` of the temporal regime, shared by all sites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPhases {
    pub up: f64,
    pub down: f64,
}

/// Phases for steps `1..=n`: step `j` uses `(ω_{2j}, ω_{2j+1})` of the sequence drawn with `seed`.
pub fn temporal_phases(dist: PhaseDistribution, seed: u64, n: usize) -> Result<Vec<StepPhases>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let seq = sample_phases(dist, 2..=(2 * n as i64 + 1), seed)?;
    Ok((1..=n as i64).map(|j| StepPhases { up: seq.at(2 * j), down: seq.at(2 * j + 1) }).collect())
}

/// Which environment the walker sees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "kebab-case")]
pub enum Regime {
    /// All phases zero at every step.
    Deterministic,
    /// One phase per relabeled index, drawn once and frozen.
    Spatial { dist: PhaseDistribution, seed: u64 },
    /// A fresh pair `(ω⁺, ω⁻)` per step, identical on all sites.
    Temporal { dist: PhaseDistribution, seed: u64 },
}

enum PhaseSource {
    Zero,
    Spatial { start: i64, factors: Vec<C64> },
    Temporal { steps: Vec<[C64; 2]> },
}

/// In-place stepper. The window grows by one site per side each step.
pub struct Walker {
    coin: CoinParams,
    source: PhaseSource,
    state: WalkState,
    time: usize,
}

impl Walker {
    /// Prepare `steps` steps of evolution from `initial`.
    pub fn new(initial: &WalkState, coin: CoinParams, regime: Regime, steps: usize) -> Result<Self> {
        let source = match regime {
            Regime::Deterministic => PhaseSource::Zero,
            Regime::Spatial { dist, seed } => {
                let (lo, hi) = initial.site_range();
                let reach = steps as i64 + 2;
                let seq = sample_phases(dist, 2 * (lo - reach)..=2 * (hi + reach) + 1, seed)?;
                PhaseSource::Spatial {
                    start: seq.start(),
                    factors: seq.values().iter().map(|&w| cis(-w)).collect(),
                }
            }
            Regime::Temporal { dist, seed } => PhaseSource::Temporal {
                steps: temporal_phases(dist, seed, steps)?
                    .into_iter()
                    .map(|p| [cis(-p.up), cis(-p.down)])
                    .collect(),
            },
        };
        Ok(Self { coin, source, state: initial.clone(), time: 0 })
    }

    /// Walker with explicit per-step temporal phases.
    pub fn with_step_phases(initial: &WalkState, coin: CoinParams, phases: &[StepPhases]) -> Self {
        let steps = phases.iter().map(|p| [cis(-p.up), cis(-p.down)]).collect();
        Self { coin, source: PhaseSource::Temporal { steps }, state: initial.clone(), time: 0 }
    }

    pub fn state(&self) -> &WalkState {
        &self.state
    }

    pub fn into_state(self) -> WalkState {
        self.state
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn step(&mut self) -> Result<()> {
        let next = match &self.source {
            PhaseSource::Zero => shift_step(&self.state, &self.coin, |_| C64::new(1.0, 0.0)),
            PhaseSource::Spatial { start, factors } => {
                let (s, f) = (*start, factors);
                let (lo, hi) = (self.state.offset() - 1, self.state.end() + 1);
                if lo < s || hi > s + f.len() as i64 - 1 {
                    return Err(Error::Window("spatial phases exhausted".into()));
                }
                shift_step(&self.state, &self.coin, |m| f[(m - s) as usize])
            }
            PhaseSource::Temporal { steps } => {
                let [up, down] = *steps
                    .get(self.time)
                    .ok_or_else(|| Error::Window("temporal phases exhausted".into()))?;
                shift_step(&self.state, &self.coin, |m| if m.rem_euclid(2) == 0 { up } else { down })
            }
        };
        self.state = next;
        self.time += 1;
        Ok(())
    }
}

/// Streaming `D S`: `phase(m)` is the diagonal factor at target index `m`.
fn shift_step(state: &WalkState, coin: &CoinParams, phase: impl Fn(i64) -> C64) -> WalkState {
    let (r, t) = (coin.r(), coin.t());
    let src = state.amplitudes();
    let out_offset = state.offset() - 2;
    let mut out = vec![ZERO; src.len() + 4];
    for (p, pair) in src.chunks_exact(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        // site pair at out positions 2p+2, 2p+3; targets 2k-1 and 2k+2
        out[2 * p + 1] = a * r + b * t;
        out[2 * p + 4] = a * t - b * r;
    }
    for (i, v) in out.iter_mut().enumerate() {
        if *v != ZERO {
            *v *= phase(out_offset + i as i64);
        }
    }
    let mut next = WalkState::from_amplitudes(out_offset, out);
    next.trim();
    next
}

/// One step of `U_ω = D_ω S`. `phases` must cover the target indices
/// `offset - 1 ..= end + 1` of the state.
pub fn apply_step(state: &WalkState, coin: &CoinParams, phases: &PhaseSequence) -> Result<WalkState> {
    let (lo, hi) = (state.offset() - 1, state.end() + 1);
    if !phases.covers(lo, hi) {
        return Err(Error::Window(format!(
            "phases cover {}..={}, step needs {lo}..={hi}",
            phases.start(),
            phases.end()
        )));
    }
    Ok(shift_step(state, coin, |m| cis(-phases.at(m))))
}

/// One step of `S (C_k ⊗ 1)` with a site-dependent coin applied before the shift.
pub fn apply_coin_step(state: &WalkState, coin_at: impl Fn(i64) -> Mat2) -> WalkState {
    let src = state.amplitudes();
    let (k0, _) = state.site_range();
    let mut out = vec![ZERO; src.len() + 4];
    for (p, pair) in src.chunks_exact(2).enumerate() {
        let c = coin_at(k0 + p as i64);
        let up = c[(0, 0)] * pair[0] + c[(0, 1)] * pair[1];
        let down = c[(1, 0)] * pair[0] + c[(1, 1)] * pair[1];
        // up → site k+1 (index 2k+2), down → site k-1 (index 2k-1)
        out[2 * p + 4] += up;
        out[2 * p + 1] += down;
    }
    WalkState::from_amplitudes(state.offset() - 2, out)
}

/// `U_ω(n, 0) ψ` in the chosen regime.
pub fn evolve(state: &WalkState, coin: &CoinParams, n: usize, regime: Regime) -> Result<WalkState> {
    let mut w = Walker::new(state, *coin, regime, n)?;
    for _ in 0..n {
        w.step()?;
    }
    Ok(w.into_state())
}

/// `<X^L>_ψ(n)` for `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSeries {
    pub order: u32,
    pub values: Vec<f64>,
}

pub fn moment_series(
    initial: &WalkState,
    coin: &CoinParams,
    regime: Regime,
    orders: &[u32],
    n_max: usize,
) -> Result<Vec<MomentSeries>> {
    let mut w = Walker::new(initial, *coin, regime, n_max)?;
    let mut out: Vec<MomentSeries> =
        orders.iter().map(|&order| MomentSeries { order, values: Vec::with_capacity(n_max + 1) }).collect();
    loop {
        for s in out.iter_mut() {
            s.values.push(w.state().position_moment(s.order));
        }
        if w.time() == n_max {
            break;
        }
        w.step()?;
    }
    Ok(out)
}
