//! Temporal disorder: one random coin phase pair per time step, shared by all
//! sites. Averaged over the phases, the quantum site distribution equals that
//! of a classical persistent random walk, which is computed here exactly.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coin::{CoinParams, PhaseDistribution};
use crate::evolution::{temporal_phases, StepPhases, Walker};
use crate::linalg::{cis, mat2, Mat2, Vec2};
use crate::seeds::replica_seed;
use crate::state::WalkState;
use crate::stats::{CompensatedSum, MeanStderr};
use crate::{Error, Result, C64};

const NORM_TOL: f64 = 1e-12;

/// Classical walk: first step `+1` with probability `a`, then repeat the
/// previous step with probability `persist = t²` or reverse it with `flip = r²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersistentRWParams {
    pub a: f64,
    pub b: f64,
    pub persist: f64,
    pub flip: f64,
}

impl PersistentRWParams {
    pub fn new(a: f64, persist: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&persist) {
            return Err(Error::Domain(format!("probabilities must lie in [0, 1], got a = {a}, persist = {persist}")));
        }
        Ok(Self { a, b: 1.0 - a, persist, flip: 1.0 - persist })
    }
}

fn check_coin_state(phi0: [C64; 2]) -> Result<()> {
    let n = phi0[0].norm_sqr() + phi0[1].norm_sqr();
    if (n - 1.0).abs() > NORM_TOL {
        return Err(Error::Validation(format!("initial coin state must be normalized, |φ₀|² = {n}")));
    }
    Ok(())
}

/// Parameters of the persistent walk induced by `φ₀ = α|↑⟩ + β|↓⟩`:
/// `a = |α|²t² + |β|²r² - 2 Re(ᾱβ) r t`.
pub fn prw_params(phi0: [C64; 2], coin: &CoinParams) -> Result<PersistentRWParams> {
    check_coin_state(phi0)?;
    let [al, be] = phi0;
    let (r, t) = (coin.r(), coin.t());
    let a = al.norm_sqr() * t * t + be.norm_sqr() * r * r - 2.0 * (al.conj() * be).re * r * t;
    let a = a.clamp(0.0, 1.0);
    Ok(PersistentRWParams { a, b: 1.0 - a, persist: t * t, flip: r * r })
}

/// Site probabilities at time `n` on `k = -n..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionTable {
    pub n: usize,
    /// `probs[i]` is the weight of site `k = i - n`.
    pub probs: Vec<f64>,
    /// True for the classical table, where sites of the wrong parity are exact zeros.
    pub parity: bool,
}

impl DistributionTable {
    pub fn get(&self, k: i64) -> f64 {
        let i = k + self.n as i64;
        if i < 0 {
            return 0.0;
        }
        self.probs.get(i as usize).copied().unwrap_or(0.0)
    }

    pub fn sites(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let n = self.n as i64;
        self.probs.iter().enumerate().map(move |(i, &p)| (i as i64 - n, p))
    }

    pub fn total(&self) -> f64 {
        let mut s = CompensatedSum::new();
        self.probs.iter().for_each(|&p| s.add(p));
        s.value()
    }

    /// `Σ_k k^L w_k`, compensated.
    pub fn moment(&self, order: u32) -> f64 {
        let mut s = CompensatedSum::new();
        for (k, p) in self.sites() {
            if p != 0.0 {
                s.add((k as f64).powi(order as i32) * p);
            }
        }
        s.value()
    }

    /// `Σ_k e^{iyk} w_k`.
    pub fn characteristic(&self, y: C64) -> C64 {
        self.sites().map(|(k, p)| (C64::new(0.0, 1.0) * y * k as f64).exp() * p).sum()
    }

    /// Largest weight on a site whose parity differs from `n`.
    pub fn parity_violation(&self) -> f64 {
        self.sites().filter(|(k, _)| (k - self.n as i64).rem_euclid(2) != 0).map(|(_, p)| p.abs()).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["n", "k", "w"])?;
        for (k, p) in self.sites() {
            w.write_record([self.n.to_string(), k.to_string(), p.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `W_k(n)` for one realization of the per-step phases, from `φ₀ ⊗ |0⟩`.
pub fn quantum_distribution(
    coin: &CoinParams,
    phases: &[StepPhases],
    phi0: [C64; 2],
    n: usize,
) -> Result<DistributionTable> {
    check_coin_state(phi0)?;
    if phases.len() < n {
        return Err(Error::Window(format!("{} step phases given, {n} steps requested", phases.len())));
    }
    let mut w = Walker::with_step_phases(&WalkState::local(phi0, 0), *coin, &phases[..n]);
    for _ in 0..n {
        w.step()?;
    }
    let nn = n as i64;
    let probs = (-nn..=nn).map(|k| w.state().site_probability(k)).collect();
    Ok(DistributionTable { n, probs, parity: false })
}

/// Subnormal tail weights are dropped: they cost orders of magnitude more
/// time per operation and contribute below `1e-300` in total.
#[inline]
fn flush(w: f64) -> f64 {
    if w < f64::MIN_POSITIVE {
        0.0
    } else {
        w
    }
}

/// Exact persistent-walk distribution by the forward recursion
/// `w⁺_k(n+1) = r² w⁻_{k-1}(n) + t² w⁺_{k-1}(n)`,
/// `w⁻_k(n+1) = t² w⁻_{k+1}(n) + r² w⁺_{k+1}(n)`, from `w⁺_1(1) = a`, `w⁻_{-1}(1) = b`.
pub struct PrwRecursion {
    params: PersistentRWParams,
    n: usize,
    cap: usize,
    plus: Vec<f64>,
    minus: Vec<f64>,
    scratch: (Vec<f64>, Vec<f64>),
}

impl PrwRecursion {
    /// State at `n = 1`, with room for `n_max` steps.
    pub fn new(params: PersistentRWParams, n_max: usize) -> Self {
        let cap = n_max.max(1);
        let len = 2 * cap + 1;
        let mut plus = vec![0.0; len];
        let mut minus = vec![0.0; len];
        plus[cap + 1] = params.a;
        minus[cap - 1] = params.b;
        Self { params, n: 1, cap, plus, minus, scratch: (vec![0.0; len], vec![0.0; len]) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn step(&mut self) {
        assert!(self.n < self.cap, "recursion capacity {} exhausted", self.cap);
        let (p, q) = (self.params.persist, self.params.flip);
        let (np, nm) = (&mut self.scratch.0, &mut self.scratch.1);
        let c = self.cap as i64;
        let n = self.n as i64;
        // support after the step: k ∈ [-(n+1), n+1]
        for k in -(n + 1)..=(n + 1) {
            let i = (k + c) as usize;
            np[i] = flush(if k > -n { q * self.minus[i - 1] + p * self.plus[i - 1] } else { 0.0 });
            nm[i] = flush(if k < n { p * self.minus[i + 1] + q * self.plus[i + 1] } else { 0.0 });
        }
        std::mem::swap(&mut self.plus, np);
        std::mem::swap(&mut self.minus, nm);
        self.n += 1;
    }

    /// `w_k(n) = w⁺_k(n) + w⁻_k(n)` on `k = -n..=n`.
    pub fn table(&self) -> DistributionTable {
        let (c, n) = (self.cap as i64, self.n as i64);
        let probs = (-n..=n).map(|k| self.plus[(k + c) as usize] + self.minus[(k + c) as usize]).collect();
        DistributionTable { n: self.n, probs, parity: true }
    }

    /// `Σ_k k^L w_k(n)` without building a table.
    pub fn moment(&self, order: u32) -> f64 {
        let (c, n) = (self.cap as i64, self.n as i64);
        let mut s = CompensatedSum::new();
        for k in (-n..=n).step_by(2) {
            let w = self.plus[(k + c) as usize] + self.minus[(k + c) as usize];
            if w != 0.0 {
                s.add((k as f64).powi(order as i32) * w);
            }
        }
        s.value()
    }
}

pub fn prw_distribution(params: &PersistentRWParams, n: usize) -> Result<DistributionTable> {
    if n == 0 {
        return Ok(DistributionTable { n: 0, probs: vec![1.0], parity: true });
    }
    let mut rec = PrwRecursion::new(*params, n);
    while rec.n() < n {
        rec.step();
    }
    Ok(rec.table())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteComparison {
    pub k: i64,
    pub exact: f64,
    pub mean: f64,
    pub stderr: f64,
    /// `(mean - exact)/stderr`; zero when both the deviation and the stderr vanish.
    pub z_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McComparison {
    pub n: usize,
    pub replicas: usize,
    pub seed: u64,
    pub sites: Vec<SiteComparison>,
    pub max_abs_deviation: f64,
    pub max_abs_z: f64,
}

impl McComparison {
    /// Every site within `k` standard errors, with an absolute floor of `1e-12`
    /// for sites whose sample variance vanishes.
    pub fn within(&self, k: f64) -> bool {
        self.sites.iter().all(|s| (s.mean - s.exact).abs() <= k * s.stderr + 1e-12)
    }
}

/// Average `W_k(n)` over independent realizations and compare with `w_k(n)`.
pub fn mc_vs_exact(
    coin: &CoinParams,
    phi0: [C64; 2],
    dist: PhaseDistribution,
    n: usize,
    replicas: usize,
    seed: u64,
) -> Result<McComparison> {
    dist.validate()?;
    let m = dist.mean_exp_minus_i();
    if m.norm() > 1e-12 {
        return Err(Error::Hypothesis(format!(
            "phase law {} has E[e^{{-iω}}] = {m}; the classical reduction needs zero circular mean",
            dist.label()
        )));
    }
    if replicas < 2 {
        return Err(Error::Domain("at least two replicas are needed for an error bar".into()));
    }
    let exact = prw_distribution(&prw_params(phi0, coin)?, n)?;
    let runs: Vec<Vec<f64>> = (0..replicas as u64)
        .into_par_iter()
        .map(|i| {
            let ph = temporal_phases(dist, replica_seed(seed, i), n)?;
            Ok(quantum_distribution(coin, &ph, phi0, n)?.probs)
        })
        .collect::<Result<_>>()?;
    let mut sites = Vec::with_capacity(exact.probs.len());
    let (mut max_dev, mut max_z) = (0.0f64, 0.0f64);
    for (i, (k, w)) in exact.sites().enumerate() {
        let xs: Vec<f64> = runs.iter().map(|r| r[i]).collect();
        let st = MeanStderr::from_samples(&xs);
        let dev = st.mean - w;
        let z = if st.stderr > 0.0 { dev / st.stderr } else if dev.abs() <= 1e-12 { 0.0 } else { f64::INFINITY };
        max_dev = max_dev.max(dev.abs());
        max_z = max_z.max(z.abs());
        sites.push(SiteComparison { k, exact: w, mean: st.mean, stderr: st.stderr, z_score: z });
    }
    Ok(McComparison { n, replicas, seed, sites, max_abs_deviation: max_dev, max_abs_z: max_z })
}

/// `M(y) = [[t² e^{iy}, r² e^{iy}], [r² e^{-iy}, t² e^{-iy}]]`.
pub fn transition_symbol(y: C64, params: &PersistentRWParams) -> Mat2 {
    let (ep, em) = ((C64::new(0.0, 1.0) * y).exp(), (C64::new(0.0, -1.0) * y).exp());
    let (p, q) = (params.persist, params.flip);
    mat2(ep * p, ep * q, em * q, em * p)
}

/// `Ψ_n(y) = (1, 1) · M(y)^{n-1} Φ_1(y)` with `Φ_1 = (a e^{iy}, b e^{-iy})`.
pub fn generating_function(y: C64, n: usize, params: &PersistentRWParams) -> Result<C64> {
    if n == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    let m = transition_symbol(y, params);
    let i = C64::new(0.0, 1.0);
    let mut phi = Vec2::new((i * y).exp() * params.a, (-i * y).exp() * params.b);
    for _ in 1..n {
        phi = m * phi;
    }
    Ok(phi[0] + phi[1])
}

/// Gaussian limit `e^{-(t²/2r²) y²}` of `Ψ_τ(y/√τ)`.
pub fn gaussian_limit(y: f64, coin: &CoinParams) -> Result<f64> {
    let ratio = diffusion_ratio(coin)?;
    Ok((-0.5 * ratio * y * y).exp())
}

fn diffusion_ratio(coin: &CoinParams) -> Result<f64> {
    if coin.r() == 0.0 {
        return Err(Error::DivergentDiffusion);
    }
    Ok(coin.t().powi(2) / coin.r().powi(2))
}

/// `(L-1)!!`, with `(-1)!! = 1`.
fn double_factorial_odd(l: u32) -> f64 {
    (1..l).step_by(2).map(|j| j as f64).product()
}

/// `D(L) = (L-1)!! (t²/r²)^{L/2}` for even `L`, zero for odd `L`.
pub fn diffusion_constant(l: u32, coin: &CoinParams) -> Result<f64> {
    if l == 0 {
        return Err(Error::Domain("moment order must be at least 1".into()));
    }
    let ratio = diffusion_ratio(coin)?;
    if l % 2 == 1 {
        return Ok(0.0);
    }
    Ok(double_factorial_odd(l) * ratio.powi(l as i32 / 2))
}

/// Probabilists' Hermite polynomial at zero, from `He_{n+1}(0) = -n He_{n-1}(0)`.
pub fn hermite_at_zero(l: u32) -> f64 {
    let (mut prev, mut cur) = (1.0, 0.0); // He_0, He_1
    if l == 0 {
        return prev;
    }
    for n in 1..l {
        let next = -(n as f64) * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `lim Σ_k (ik)^L w_k(τ)/τ^{L/2} = (t²/r²)^{L/2} He_L(0) (-1)^L`.
pub fn hermite_moment_limit(l: u32, coin: &CoinParams) -> Result<f64> {
    let ratio = diffusion_ratio(coin)?;
    let sign = if l.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(ratio.powf(l as f64 / 2.0) * hermite_at_zero(l) * sign)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub n: usize,
    pub moment: f64,
    /// `Σ_k k^L w_k(n) / n^{L/2}`.
    pub ratio: f64,
}

/// Scaled exact moments at every `n` of an increasing list, in one recursion pass.
pub fn moment_scaling(l: u32, coin: &CoinParams, phi0: [C64; 2], n_list: &[usize]) -> Result<Vec<ScalingPoint>> {
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("n_list must be strictly increasing".into()));
    }
    if n_list.first() == Some(&0) {
        return Err(Error::Domain("n_list entries must be at least 1".into()));
    }
    let params = prw_params(phi0, coin)?;
    let Some(&n_max) = n_list.last() else {
        return Ok(Vec::new());
    };
    let mut rec = PrwRecursion::new(params, n_max);
    let mut out = Vec::with_capacity(n_list.len());
    for &n in n_list {
        while rec.n() < n {
            rec.step();
        }
        let m = rec.moment(l);
        out.push(ScalingPoint { n, moment: m, ratio: m / (n as f64).powf(l as f64 / 2.0) });
    }
    Ok(out)
}

/// Write `n,L,moment,ratio`.
pub fn write_scaling_csv<W: Write>(l: u32, rows: &[ScalingPoint], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["n", "L", "moment", "ratio"])?;
    for p in rows {
        w.write_record([p.n.to_string(), l.to_string(), p.moment.to_string(), p.ratio.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `φ₀ = (|↑⟩ + i|↓⟩)/√2`, for which `a = b = 1/2` for every coin.
pub fn balanced_coin_state() -> [C64; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [C64::new(h, 0.0), C64::new(0.0, h)]
}

/// The per-step coin `[[t e^{-iω⁺}, -r e^{-iω⁺}], [r e^{-iω⁻}, t e^{-iω⁻}]]` acting before the shift.
pub fn step_coin(coin: &CoinParams, p: StepPhases) -> Mat2 {
    let (t, r) = (coin.t(), coin.r());
    mat2(cis(-p.up) * t, cis(-p.up) * -r, cis(-p.down) * r, cis(-p.down) * t)
}
