//! Resolvent matrix elements `G_z(k, l) = <e_k, (U - z)⁻¹ e_l>` of truncated
//! band unitaries, fractional moments and exponential-decay fits.

use std::collections::BTreeMap;
use std::io::Write;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::banded::{BandLu, BandMatrix};
use crate::coin::{sample_phases, CoinParams, PhaseDistribution, PhaseSequence};
use crate::evolution::{band_column, check_band_window, Truncation};
use crate::seeds::replica_seed;
use crate::stats::{fit_line, MeanStderr};
use crate::transfer::{generalized_eigenvector, Eigenvector, Side};
use crate::{Error, Result, C64};

/// Minimal distance of `|z|` from the unit circle.
pub const UNIT_CIRCLE_MARGIN: f64 = 1e-3;
/// Residual bound for the direct solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Relative Wronskian bound for the formula route.
pub const WRONSKIAN_TOLERANCE: f64 = 1e-12;

/// Validate a spectral parameter for resolvent evaluation.
pub fn check_spectral_parameter(z: C64) -> Result<()> {
    if !z.is_finite() || z.norm() == 0.0 {
        return Err(Error::Domain(format!("spectral parameter must be finite and nonzero, got {z}")));
    }
    if (z.norm() - 1.0).abs() < UNIT_CIRCLE_MARGIN {
        return Err(Error::Conditioning { modulus: z.norm() });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreensQuery {
    pub z: C64,
    pub k: i64,
    pub l: i64,
    pub window: RangeInclusive<i64>,
    pub truncation: Truncation,
}

impl GreensQuery {
    /// Query on the finite truncation of `window`.
    pub fn new(z: C64, k: i64, l: i64, window: RangeInclusive<i64>) -> Result<Self> {
        Self::with_truncation(z, k, l, window, Truncation::Finite)
    }

    pub fn with_truncation(z: C64, k: i64, l: i64, window: RangeInclusive<i64>, truncation: Truncation) -> Result<Self> {
        check_spectral_parameter(z)?;
        if !window.contains(&k) || !window.contains(&l) {
            return Err(Error::Window(format!("indices ({k}, {l}) outside window {window:?}")));
        }
        Ok(Self { z, k, l, window, truncation })
    }
}

/// Factored `U - z` on a window, reusable for many columns.
#[derive(Debug, Clone)]
pub struct Resolvent {
    z: C64,
    lo: i64,
    hi: i64,
    matrix: BandMatrix,
    lu: BandLu,
}

impl Resolvent {
    pub fn new(
        z: C64,
        coin: &CoinParams,
        phases: &PhaseSequence,
        window: RangeInclusive<i64>,
        truncation: Truncation,
    ) -> Result<Self> {
        check_spectral_parameter(z)?;
        check_band_window(&window, phases)?;
        let (lo, hi) = (*window.start(), *window.end());
        let n = (hi - lo + 1) as usize;
        let mut m = BandMatrix::zeros(n, 2, 2);
        for j in lo..=hi {
            for (i, v) in band_column(j, lo, hi, coin, phases, truncation) {
                m.add((i - lo) as usize, (j - lo) as usize, v);
            }
            m.add((j - lo) as usize, (j - lo) as usize, -z);
        }
        let lu = m.clone().factor()?;
        Ok(Self { z, lo, hi, matrix: m, lu })
    }

    pub fn z(&self) -> C64 {
        self.z
    }

    pub fn window(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    /// Column `G(·, l)` indexed from `lo`, with the residual of `(U - z)g = e_l` checked.
    pub fn column(&self, l: i64) -> Result<Vec<C64>> {
        if l < self.lo || l > self.hi {
            return Err(Error::Window(format!("column {l} outside {}..={}", self.lo, self.hi)));
        }
        let idx = (l - self.lo) as usize;
        let mut e = vec![C64::new(0.0, 0.0); self.lu.dim()];
        e[idx] = C64::new(1.0, 0.0);
        let g = self.lu.solve(&e);
        let r = self.matrix.matvec(&g);
        let residual = r
            .iter()
            .enumerate()
            .map(|(i, v)| (if i == idx { v - 1.0 } else { *v }).norm())
            .fold(0.0, f64::max);
        let scale = g.iter().map(|v| v.norm()).fold(1.0, f64::max);
        if residual > RESIDUAL_TOLERANCE * scale {
            return Err(Error::Residual { residual, tolerance: RESIDUAL_TOLERANCE * scale });
        }
        Ok(g)
    }

    pub fn entry(&self, k: i64, l: i64) -> Result<C64> {
        if k < self.lo || k > self.hi {
            return Err(Error::Window(format!("row {k} outside {}..={}", self.lo, self.hi)));
        }
        Ok(self.column(l)?[(k - self.lo) as usize])
    }
}

/// `G(k, l)` by a banded solve.
pub fn greens_direct(q: &GreensQuery, coin: &CoinParams, phases: &PhaseSequence) -> Result<C64> {
    Resolvent::new(q.z, coin, phases, q.window.clone(), q.truncation)?.entry(q.k, q.l)
}

/// Boundary solutions `φ^a` (left) and `φ^b` (right) of a finite window.
#[derive(Debug, Clone)]
pub struct GreensFormula {
    z: C64,
    phi_a: Eigenvector,
    phi_b: Eigenvector,
}

impl GreensFormula {
    pub fn new(z: C64, coin: &CoinParams, phases: &PhaseSequence, window: RangeInclusive<i64>) -> Result<Self> {
        check_spectral_parameter(z)?;
        let phi_a = generalized_eigenvector(z, coin, phases, window.clone(), Side::Plus)?;
        let phi_b = generalized_eigenvector(z, coin, phases, window, Side::Minus)?;
        Ok(Self { z, phi_a, phi_b })
    }

    pub fn phi_a(&self) -> &Eigenvector {
        &self.phi_a
    }

    pub fn phi_b(&self) -> &Eigenvector {
        &self.phi_b
    }

    /// `Δ_n = φ^a_{2n} φ^b_{2n-1} - φ^a_{2n-1} φ^b_{2n}`, checked against its own scale.
    pub fn wronskian(&self, n2: i64) -> Result<C64> {
        let (a, b) = (&self.phi_a, &self.phi_b);
        let p = a.at(n2) * b.at(n2 - 1);
        let q = a.at(n2 - 1) * b.at(n2);
        let d = p - q;
        let scale = p.norm() + q.norm();
        if scale == 0.0 || d.norm() < WRONSKIAN_TOLERANCE * scale {
            return Err(Error::NearEigenvalue { value: if scale == 0.0 { 0.0 } else { d.norm() / scale } });
        }
        Ok(d)
    }

    /// `G(k, l)` for `l ∈ [2n₀ + 1, 2m₀]`.
    ///
    /// With `2n` the even index of the pair `{2n-1, 2n}` holding `l` and `c` its partner:
    /// `G(k, l) = φ^b_c φ^a_k / (z Δ_n)` for `k ≤ 2n - 1`, and `φ^a_c φ^b_k / (z Δ_n)` for `k ≥ 2n`.
    pub fn entry(&self, k: i64, l: i64) -> Result<C64> {
        let (lo, hi) = (self.phi_a.start, self.phi_a.end());
        if l < lo + 1 || l > hi || k < lo || k > hi {
            return Err(Error::Window(format!(
                "formula route covers rows {lo}..={hi} and columns {}..={hi}, got ({k}, {l})",
                lo + 1
            )));
        }
        let n2 = if l.rem_euclid(2) == 0 { l } else { l + 1 };
        let partner = if l == n2 { n2 - 1 } else { n2 };
        let delta = self.wronskian(n2)?;
        let num = if k < n2 {
            self.phi_b.at(partner) * self.phi_a.at(k)
        } else {
            self.phi_a.at(partner) * self.phi_b.at(k)
        };
        Ok(num / (self.z * delta))
    }

    /// Corner element `G(2n₀, 2m₀)`.
    pub fn corner(&self) -> Result<C64> {
        self.entry(self.phi_a.start, self.phi_a.end())
    }
}

/// `G(k, l)` from the boundary solutions; finite truncation only.
pub fn greens_formula(q: &GreensQuery, coin: &CoinParams, phases: &PhaseSequence) -> Result<C64> {
    if q.truncation != Truncation::Finite {
        return Err(Error::Validation("the formula route is implemented for the finite truncation".into()));
    }
    GreensFormula::new(q.z, coin, phases, q.window.clone())?.entry(q.k, q.l)
}

/// Monte Carlo estimate of `E|G(k, l)|^s` for one index pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEstimate {
    pub k: i64,
    pub l: i64,
    pub mean: f64,
    pub stderr: f64,
}

/// Estimate averaged over all requested pairs at one distance `|k - l|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceEstimate {
    pub distance: i64,
    pub mean: f64,
    pub stderr: f64,
    pub replicas: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionalMomentEstimate {
    pub s: f64,
    pub re_z: f64,
    pub im_z: f64,
    pub pairs: Vec<PairEstimate>,
    pub by_distance: Vec<DistanceEstimate>,
}

/// Inputs of [`fractional_moment`].
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalMomentSpec {
    pub z: C64,
    pub s: f64,
    pub pairs: Vec<(i64, i64)>,
    pub window: RangeInclusive<i64>,
    pub dist: PhaseDistribution,
    pub coin: CoinParams,
    pub replicas: usize,
    pub seed: u64,
}

/// Default pair list: column `l`, rows `l + d` for `d = 4, 8, ..., d_max`,
/// and a finite window padded by `2 d_max` on both sides.
pub fn default_pairs(l: i64, d_max: i64) -> (Vec<(i64, i64)>, RangeInclusive<i64>) {
    let pairs = (1..=d_max / 4).map(|i| (l + 4 * i, l)).collect();
    let lo = l - 2 * d_max;
    let hi = l + d_max + 2 * d_max;
    (pairs, (lo - lo.rem_euclid(2))..=(hi + hi.rem_euclid(2)))
}

/// `E|G(k, l)|^s` over independent phase realizations; one factorization per
/// replica and one solve per distinct column.
pub fn fractional_moment(spec: &FractionalMomentSpec) -> Result<FractionalMomentEstimate> {
    if !(spec.s > 0.0 && spec.s < 1.0) {
        return Err(Error::Domain(format!("fractional exponent must lie in (0, 1), got {}", spec.s)));
    }
    if spec.replicas < 2 {
        return Err(Error::Domain("at least two replicas are needed for an error bar".into()));
    }
    if spec.pairs.is_empty() {
        return Err(Error::Domain("empty pair list".into()));
    }
    check_spectral_parameter(spec.z)?;
    let (lo, hi) = (*spec.window.start(), *spec.window.end());
    for &(k, l) in &spec.pairs {
        if !(lo..=hi).contains(&k) || !(lo..=hi).contains(&l) {
            return Err(Error::Window(format!("pair ({k}, {l}) outside window {lo}..={hi}")));
        }
    }
    let mut columns: Vec<i64> = spec.pairs.iter().map(|p| p.1).collect();
    columns.sort_unstable();
    columns.dedup();

    let samples: Vec<Vec<f64>> = (0..spec.replicas as u64)
        .into_par_iter()
        .map(|i| {
            let phases = sample_phases(spec.dist, spec.window.clone(), replica_seed(spec.seed, i))?;
            let res = Resolvent::new(spec.z, &spec.coin, &phases, spec.window.clone(), Truncation::Finite)?;
            let cols: BTreeMap<i64, Vec<C64>> =
                columns.iter().map(|&l| res.column(l).map(|g| (l, g))).collect::<Result<_>>()?;
            Ok(spec.pairs.iter().map(|&(k, l)| cols[&l][(k - lo) as usize].norm().powf(spec.s)).collect())
        })
        .collect::<Result<_>>()?;

    let pairs: Vec<PairEstimate> = spec
        .pairs
        .iter()
        .enumerate()
        .map(|(p, &(k, l))| {
            let xs: Vec<f64> = samples.iter().map(|row| row[p]).collect();
            let m = MeanStderr::from_samples(&xs);
            PairEstimate { k, l, mean: m.mean, stderr: m.stderr }
        })
        .collect();

    let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (p, &(k, l)) in spec.pairs.iter().enumerate() {
        groups.entry((k - l).abs()).or_default().push(p);
    }
    let by_distance = groups
        .into_iter()
        .map(|(d, idx)| {
            let xs: Vec<f64> =
                samples.iter().map(|row| idx.iter().map(|&p| row[p]).sum::<f64>() / idx.len() as f64).collect();
            let m = MeanStderr::from_samples(&xs);
            DistanceEstimate { distance: d, mean: m.mean, stderr: m.stderr, replicas: spec.replicas }
        })
        .collect();

    Ok(FractionalMomentEstimate { s: spec.s, re_z: spec.z.re, im_z: spec.z.im, pairs, by_distance })
}

/// Write `distance,s,re_z,im_z,mean,stderr,replicas`.
pub fn write_fm_csv<W: Write>(est: &FractionalMomentEstimate, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["distance", "s", "re_z", "im_z", "mean", "stderr", "replicas"])?;
    for d in &est.by_distance {
        w.write_record([
            d.distance.to_string(),
            est.s.to_string(),
            est.re_z.to_string(),
            est.im_z.to_string(),
            d.mean.to_string(),
            d.stderr.to_string(),
            d.replicas.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Fit of `E ≈ C e^{-α d}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    #[serde(rename = "C_hat")]
    pub c_hat: f64,
    pub alpha_hat: f64,
    pub alpha_stderr: f64,
    /// 95% interval for `α` (normal quantile).
    pub ci_low: f64,
    pub ci_high: f64,
    pub r_squared: f64,
    pub reduced_chi2: f64,
    /// `|slope| / stderr(slope)` of the log-linear regression.
    pub slope_significance: f64,
}

const Z95: f64 = 1.959_963_984_540_054;

/// Weighted least squares of `log E` on `d`. Weights are `(mean/stderr)²`
/// (delta-method variance of the log); rows with zero stderr make the fit unweighted.
pub fn decay_fit(table: &[DistanceEstimate]) -> Result<DecayFit> {
    let mut distances: Vec<i64> = table.iter().map(|r| r.distance).collect();
    distances.sort_unstable();
    distances.dedup();
    if distances.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 distinct distances, got {}", distances.len())));
    }
    if let Some(bad) = table.iter().find(|r| !(r.mean > 0.0) || !r.mean.is_finite()) {
        return Err(Error::Fit(format!("nonpositive estimate {} at distance {}", bad.mean, bad.distance)));
    }
    let x: Vec<f64> = table.iter().map(|r| r.distance as f64).collect();
    let y: Vec<f64> = table.iter().map(|r| r.mean.ln()).collect();
    let weighted = table.iter().all(|r| r.stderr > 0.0 && r.stderr.is_finite());
    let w: Vec<f64> = table.iter().map(|r| (r.mean / r.stderr).powi(2)).collect();
    let fit = fit_line(&x, &y, weighted.then_some(w.as_slice()))
        .ok_or_else(|| Error::Fit("degenerate regression".into()))?;
    let alpha = -fit.slope;
    Ok(DecayFit {
        c_hat: fit.intercept.exp(),
        alpha_hat: alpha,
        alpha_stderr: fit.slope_stderr,
        ci_low: alpha - Z95 * fit.slope_stderr,
        ci_high: alpha + Z95 * fit.slope_stderr,
        r_squared: fit.r_squared,
        reduced_chi2: fit.reduced_chi2,
        slope_significance: if fit.slope_stderr > 0.0 { fit.slope.abs() / fit.slope_stderr } else { f64::INFINITY },
    })
}
