//! Transfer matrices of `(U - z)ψ = 0`, Lyapunov exponents, the real 4×4
//! embedding and generalized eigenvectors with a boundary condition.

use std::io::Write;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coin::{sample_phases, CoinParams, PhaseDistribution, PhaseSequence};
use crate::evolution::{build_band_matrix, Truncation};
use crate::linalg::{cis, det2, frobenius, inverse2, mat2, spectral_radius2, Mat2, Mat4};
use crate::seeds::replica_seed;
use crate::stats::MeanStderr;
use crate::{Error, Result, C64};

/// `T_z(θ, η)` with
///
/// ```text
/// (ψ_{2n+1}, ψ_{2n}) = T_z(ω_{2n}, ω_{2n-1}) (ψ_{2n-1}, ψ_{2n-2})
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub z: C64,
    pub theta: f64,
    pub eta: f64,
    pub coin: CoinParams,
    pub matrix: Mat2,
}

impl TransferMatrix {
    /// Exact determinant `e^{-i(θ-η)}`.
    pub fn expected_det(&self) -> C64 {
        cis(-(self.theta - self.eta))
    }

    pub fn det(&self) -> C64 {
        det2(&self.matrix)
    }
}

fn check_z_and_coin(z: C64, coin: &CoinParams) -> Result<()> {
    if coin.t() == 0.0 {
        return Err(Error::SingularCoin);
    }
    if z.norm() == 0.0 || !z.is_finite() {
        return Err(Error::Domain(format!("spectral parameter must be finite and nonzero, got {z}")));
    }
    Ok(())
}

#[inline]
fn raw_transfer(z: C64, theta: f64, eta: f64, r: f64, t: f64) -> Mat2 {
    let pre = cis(-theta) / (z * t);
    mat2(
        (z * z * cis(eta + theta) + r * r) * pre,
        pre * (-r * t),
        pre * (-r * t),
        pre * (t * t),
    )
}

pub fn transfer_matrix(z: C64, theta: f64, eta: f64, coin: &CoinParams) -> Result<TransferMatrix> {
    check_z_and_coin(z, coin)?;
    Ok(TransferMatrix { z, theta, eta, coin: *coin, matrix: raw_transfer(z, theta, eta, coin.r(), coin.t()) })
}

/// `log ‖P‖_F` for a product `P = M_n ⋯ M_1` (first factor applied first),
/// rescaling the running product to unit norm after every multiplication.
pub fn log_norm_of_product<I: IntoIterator<Item = Mat2>>(factors: I) -> f64 {
    let mut p = Mat2::identity();
    let mut log = 0.0;
    let mut first = true;
    for m in factors {
        p = if first { m } else { m * p };
        first = false;
        let n = frobenius(&p);
        log += n.ln();
        p /= C64::from(n);
    }
    log
}

/// Same as [`log_norm_of_product`] but multiplying the real embeddings `τ(M_j)`.
/// Returns `log ‖τ(P)‖_F = log ‖P‖_F + log √2`.
pub fn log_norm_of_tau_product<I: IntoIterator<Item = Mat2>>(factors: I) -> f64 {
    let mut p = Mat4::identity();
    let mut log = 0.0;
    let mut first = true;
    for m in factors {
        let tm = tau_embed(&m);
        p = if first { tm } else { tm * p };
        first = false;
        let n = p.norm();
        log += n.ln();
        p /= n;
    }
    log
}

fn transfer_factors<'a>(
    z: C64,
    coin: &CoinParams,
    phases: &'a PhaseSequence,
    n: usize,
) -> impl Iterator<Item = Mat2> + 'a {
    let (r, t) = (coin.r(), coin.t());
    (1..=n as i64).map(move |j| raw_transfer(z, phases.at(2 * j), phases.at(2 * j - 1), r, t))
}

fn check_product_inputs(z: C64, coin: &CoinParams, phases: &PhaseSequence, n: usize) -> Result<()> {
    check_z_and_coin(z, coin)?;
    if n == 0 {
        return Err(Error::Domain("product length must be at least 1".into()));
    }
    if !phases.covers(1, 2 * n as i64) {
        return Err(Error::Window(format!(
            "product of length {n} needs phases on 1..={}, have {}..={}",
            2 * n,
            phases.start(),
            phases.end()
        )));
    }
    Ok(())
}

/// `log ‖T_z(ω_{2n}, ω_{2n-1}) ⋯ T_z(ω_2, ω_1)‖_F`.
pub fn product_log_norm(z: C64, coin: &CoinParams, phases: &PhaseSequence, n: usize) -> Result<f64> {
    check_product_inputs(z, coin, phases, n)?;
    Ok(log_norm_of_product(transfer_factors(z, coin, phases, n)))
}

/// [`product_log_norm`] computed through 4×4 real embeddings, `log √2` removed.
pub fn product_log_norm_tau(z: C64, coin: &CoinParams, phases: &PhaseSequence, n: usize) -> Result<f64> {
    check_product_inputs(z, coin, phases, n)?;
    Ok(log_norm_of_tau_product(transfer_factors(z, coin, phases, n)) - 0.5 * 2f64.ln())
}

/// Replica estimate of `γ(z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub re_z: f64,
    pub im_z: f64,
    pub gamma_hat: f64,
    pub stderr: f64,
    pub n: usize,
    pub replicas: usize,
    /// Set when the phase law has no bounded density, so positivity is not guaranteed.
    pub warning: Option<String>,
}

/// Which product route [`lyapunov_estimate_with`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductRoute {
    Complex,
    Embedded,
}

/// Mean of `log ‖T_z(ω, n)‖ / n` over independent replicas.
pub fn lyapunov_estimate(
    z: C64,
    coin: &CoinParams,
    dist: PhaseDistribution,
    n: usize,
    replicas: usize,
    seed: u64,
) -> Result<LyapunovEstimate> {
    lyapunov_estimate_with(z, coin, dist, n, replicas, seed, ProductRoute::Complex)
}

pub fn lyapunov_estimate_with(
    z: C64,
    coin: &CoinParams,
    dist: PhaseDistribution,
    n: usize,
    replicas: usize,
    seed: u64,
    route: ProductRoute,
) -> Result<LyapunovEstimate> {
    check_z_and_coin(z, coin)?;
    dist.validate()?;
    if replicas < 2 {
        return Err(Error::Domain("at least two replicas are needed for an error bar".into()));
    }
    let samples: Vec<f64> = (0..replicas as u64)
        .into_par_iter()
        .map(|i| {
            let phases = sample_phases(dist, 1..=2 * n as i64, replica_seed(seed, i))?;
            let log = match route {
                ProductRoute::Complex => product_log_norm(z, coin, &phases, n)?,
                ProductRoute::Embedded => product_log_norm_tau(z, coin, &phases, n)?,
            };
            Ok(log / n as f64)
        })
        .collect::<Result<_>>()?;
    let stats = MeanStderr::from_samples(&samples);
    let warning = (!dist.has_bounded_density()).then(|| {
        format!("{} has no bounded density; positivity of the exponent is not guaranteed", dist.label())
    });
    Ok(LyapunovEstimate {
        re_z: z.re,
        im_z: z.im,
        gamma_hat: stats.mean,
        stderr: stats.stderr,
        n,
        replicas,
        warning,
    })
}

/// Points `R e^{iφ}` of a polar grid, radii outer loop.
pub fn annulus_grid(radii: &[f64], angles: usize) -> Vec<C64> {
    radii
        .iter()
        .flat_map(|&r| (0..angles).map(move |a| C64::from_polar(r, std::f64::consts::TAU * a as f64 / angles as f64)))
        .collect()
}

/// Write scan rows `re_z,im_z,gamma_hat,stderr,n,replicas`.
pub fn write_lyapunov_csv<W: Write>(rows: &[LyapunovEstimate], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["re_z", "im_z", "gamma_hat", "stderr", "n", "replicas"])?;
    for e in rows {
        w.write_record([
            e.re_z.to_string(),
            e.im_z.to_string(),
            e.gamma_hat.to_string(),
            e.stderr.to_string(),
            e.n.to_string(),
            e.replicas.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Real 4×4 image of a complex 2×2 matrix, each entry `a ↦ Re a·I + Im a·J`
/// with `J = [[0, 1], [-1, 0]]`.
pub fn tau_embed(a: &Mat2) -> Mat4 {
    let mut out = Mat4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let v = a[(i, j)];
            let (r, c) = (2 * i, 2 * j);
            out[(r, c)] = v.re;
            out[(r + 1, c + 1)] = v.re;
            out[(r, c + 1)] = v.im;
            out[(r + 1, c)] = -v.im;
        }
    }
    out
}

/// `M = T(η,θ) T(η,η)⁻¹ T(θ,θ)⁻¹ T(θ,η)` and its spectral radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub matrix: Mat2,
    pub spectral_radius: f64,
}

pub fn noncompactness_witness(z: C64, theta: f64, eta: f64, coin: &CoinParams) -> Result<Witness> {
    check_z_and_coin(z, coin)?;
    if coin.r() == 0.0 {
        return Err(Error::Domain("noncompactness witness needs r > 0".into()));
    }
    if (theta - eta).rem_euclid(std::f64::consts::TAU) == 0.0 {
        return Err(Error::DegenerateWitness);
    }
    let m = witness_product(z, theta, eta, coin)?;
    Ok(Witness { matrix: m, spectral_radius: spectral_radius2(&m) })
}

/// The four-factor product without the `θ ≠ η` precondition.
pub fn witness_product(z: C64, theta: f64, eta: f64, coin: &CoinParams) -> Result<Mat2> {
    check_z_and_coin(z, coin)?;
    let t = |a: f64, b: f64| raw_transfer(z, a, b, coin.r(), coin.t());
    let inv = |m: Mat2| inverse2(&m).ok_or(Error::SingularCoin);
    Ok(t(eta, theta) * inv(t(eta, eta))? * inv(t(theta, theta))? * t(theta, eta))
}

/// Closed form `1 + (r/t)[[(r/t)|e^{iδ}-1|², e^{iδ}-1], [e^{-iδ}-1, 0]]`, `δ = θ - η`.
pub fn witness_closed_form(theta: f64, eta: f64, coin: &CoinParams) -> Mat2 {
    let q = coin.r() / coin.t();
    let e = cis(theta - eta) - 1.0;
    Mat2::identity() + mat2(C64::from(q * e.norm_sqr()), e, e.conj(), C64::from(0.0)) * C64::from(q)
}

/// Which boundary a generalized eigenvector satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// `(U⁺ - z)φ = 0` on `l²({2n₀, ...})`, seeded at the left end.
    Plus,
    /// `(U⁻ - z)φ = 0` on `l²({..., 2m₀})`, seeded at the right end.
    Minus,
}

/// Components `φ_m` for `m` in `start..start+values.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenvector {
    pub start: i64,
    pub values: Vec<C64>,
}

impl Eigenvector {
    pub fn at(&self, m: i64) -> C64 {
        self.values[(m - self.start) as usize]
    }

    pub fn end(&self) -> i64 {
        self.start + self.values.len() as i64 - 1
    }
}

/// Solution of `(U^± - z)φ = 0` on `window = 2n₀..=2m₀`, built from the boundary
/// rows and the transfer recursion.
///
/// Plus: `φ_{2n₀+1} = e^{iω_{2n₀}}(z - r e^{-iω_{2n₀}}) φ_{2n₀} / t`, starting from the
/// unit vector `(φ_{2n₀+1}, φ_{2n₀}) ∝ (z e^{iω_{2n₀}} - r, t)` and moving right.
/// Minus: `φ_{2m₀-1} = e^{-iω_{2m₀-1}} φ_{2m₀} / z` and
/// `φ_{2m₀-2} = (z e^{iω_{2m₀}} φ_{2m₀} + r φ_{2m₀-1}) / t`, then inverse transfer
/// matrices moving left.
///
/// Components grow like `e^{γ |m - boundary|/2}`; windows of a few thousand
/// indices stay well inside `f64` range for `|z|` near one.
pub fn generalized_eigenvector(
    z: C64,
    coin: &CoinParams,
    phases: &PhaseSequence,
    window: RangeInclusive<i64>,
    side: Side,
) -> Result<Eigenvector> {
    check_z_and_coin(z, coin)?;
    let (lo, hi) = (*window.start(), *window.end());
    if lo.rem_euclid(2) != 0 || hi.rem_euclid(2) != 0 || hi - lo < 2 {
        return Err(Error::Window(format!("eigenvector window must have even endpoints and length ≥ 3, got {lo}..={hi}")));
    }
    if !phases.covers(lo, hi) {
        return Err(Error::Window(format!(
            "phases cover {}..={}, eigenvector needs {lo}..={hi}",
            phases.start(),
            phases.end()
        )));
    }
    let (r, t) = (coin.r(), coin.t());
    let len = (hi - lo + 1) as usize;
    let mut v = vec![C64::new(0.0, 0.0); len];
    let ix = |m: i64| (m - lo) as usize;
    match side {
        Side::Plus => {
            let w0 = phases.at(lo);
            let a = z * cis(w0) - r;
            let norm = (a.norm_sqr() + t * t).sqrt();
            v[ix(lo)] = C64::from(t / norm);
            v[ix(lo + 1)] = a / norm;
            // pair (ψ_{2n-1}, ψ_{2n-2}) → (ψ_{2n+1}, ψ_{2n})
            let mut n2 = lo + 2;
            while n2 <= hi {
                let tm = raw_transfer(z, phases.at(n2), phases.at(n2 - 1), r, t);
                let (p1, p0) = (v[ix(n2 - 1)], v[ix(n2 - 2)]);
                v[ix(n2)] = tm[(1, 0)] * p1 + tm[(1, 1)] * p0;
                if n2 < hi {
                    v[ix(n2 + 1)] = tm[(0, 0)] * p1 + tm[(0, 1)] * p0;
                }
                n2 += 2;
            }
        }
        Side::Minus => {
            let top = C64::new(1.0, 0.0);
            let below = cis(-phases.at(hi - 1)) * top / z;
            let below2 = (z * cis(phases.at(hi)) * top + r * below) / t;
            let norm = (below.norm_sqr() + below2.norm_sqr()).sqrt();
            v[ix(hi)] = top / norm;
            v[ix(hi - 1)] = below / norm;
            v[ix(hi - 2)] = below2 / norm;
            // (ψ_{2n+1}, ψ_{2n}) → (ψ_{2n-1}, ψ_{2n-2}) with T(ω_{2n}, ω_{2n-1})⁻¹
            let mut n2 = hi - 2;
            while n2 - 2 >= lo {
                let tm = raw_transfer(z, phases.at(n2), phases.at(n2 - 1), r, t);
                let inv = inverse2(&tm).ok_or(Error::SingularCoin)?;
                let (p1, p0) = (v[ix(n2 + 1)], v[ix(n2)]);
                v[ix(n2 - 1)] = inv[(0, 0)] * p1 + inv[(0, 1)] * p0;
                v[ix(n2 - 2)] = inv[(1, 0)] * p1 + inv[(1, 1)] * p0;
                n2 -= 2;
            }
        }
    }
    Ok(Eigenvector { start: lo, values: v })
}

/// Largest relative residual `|((U^± - z)φ)_m| / max_{|j-m|≤2} |φ_j|` over the
/// rows of the semifinite operator that lie fully inside the window.
pub fn eigenvector_residual(
    z: C64,
    coin: &CoinParams,
    phases: &PhaseSequence,
    phi: &Eigenvector,
    side: Side,
) -> Result<f64> {
    let (lo, hi) = (phi.start, phi.end());
    let trunc = match side {
        Side::Plus => Truncation::SemifinitePlus,
        Side::Minus => Truncation::SemifiniteMinus,
    };
    let u = build_band_matrix(lo..=hi, coin, phases, trunc)?;
    let (a, b) = u.exact_range();
    let img = u.matrix().apply(&phi.values);
    let mut worst = 0.0f64;
    for m in a..=b {
        let res = (img[(m - lo) as usize] - z * phi.at(m)).norm();
        let scale = ((m - 2).max(lo)..=(m + 2).min(hi)).map(|j| phi.at(j).norm()).fold(0.0, f64::max);
        if scale > 0.0 {
            worst = worst.max(res / scale);
        }
    }
    Ok(worst)
}
