//! Deterministic walks in quasi-momentum space.
//!
//! With `f(x) = Σ_k ψ(k) e^{-ikx}` the walk `S (C ⊗ 1)` becomes multiplication by
//! `V(x) = diag(e^{-ix}, e^{ix}) C`. Writing the eigenvalues as `e^{iφ_j(x)}`,
//! `⟨X²⟩(n)/n² → B = (1/2π) ∫ Σ_j φ_j'(x)² ‖P_j(x) f(x)‖² dx`.

use std::f64::consts::TAU;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::linalg::{cis, det2, eigenvalues2, mat2, unitarity_defect, Mat2, Vec2, I};
use crate::state::WalkState;
use crate::{Error, Result, C64};

const UNITARY_TOL: f64 = 1e-12;

fn check_unitary(coin: &Mat2) -> Result<()> {
    let d = unitarity_defect(coin);
    if d > UNITARY_TOL {
        return Err(Error::Validation(format!("coin is not unitary (defect {d:e})")));
    }
    Ok(())
}

fn is_diagonal(coin: &Mat2) -> bool {
    coin[(0, 1)] == C64::new(0.0, 0.0) && coin[(1, 0)] == C64::new(0.0, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolMatrix {
    pub x: f64,
    pub matrix: Mat2,
}

#[inline]
fn symbol_raw(x: f64, coin: &Mat2) -> Mat2 {
    let (em, ep) = (cis(-x), cis(x));
    mat2(em * coin[(0, 0)], em * coin[(0, 1)], ep * coin[(1, 0)], ep * coin[(1, 1)])
}

/// `V(x) = diag(e^{-ix}, e^{ix}) C`.
pub fn symbol(x: f64, coin: &Mat2) -> Result<SymbolMatrix> {
    check_unitary(coin)?;
    Ok(SymbolMatrix { x, matrix: symbol_raw(x, coin) })
}

/// Eigenvalue `α`, phase velocity `φ' = tr'/(i(2α - tr))` and projector
/// `P = (V - α_other)/(α - α_other)` for each branch at `x`, in the given order.
fn eigensystem(x: f64, coin: &Mat2) -> [(C64, f64, Mat2); 2] {
    let v = symbol_raw(x, coin);
    if is_diagonal(coin) {
        let p0 = mat2(C64::from(1.0), C64::from(0.0), C64::from(0.0), C64::from(0.0));
        let p1 = Mat2::identity() - p0;
        return [(v[(0, 0)], -1.0, p0), (v[(1, 1)], 1.0, p1)];
    }
    let tr = v[(0, 0)] + v[(1, 1)];
    let dtr = -I * cis(-x) * coin[(0, 0)] + I * cis(x) * coin[(1, 1)];
    let [a0, a1] = eigenvalues2(&v);
    let id = Mat2::identity();
    let branch = |a: C64, b: C64| {
        let vel = (dtr / (I * (2.0 * a - tr))).re;
        let p = (v - id * b) / (a - b);
        (a, vel, p)
    };
    [branch(a0, a1), branch(a1, a0)]
}

fn wrap_pm_pi(x: f64) -> f64 {
    let y = (x + std::f64::consts::PI).rem_euclid(TAU) - std::f64::consts::PI;
    if y == -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        y
    }
}

/// Branch-tracked eigensystem of `V(x)` on the grid `x_i = 2π i / N`.
#[derive(Debug, Clone)]
pub struct BandsData {
    pub xs: Vec<f64>,
    /// Continuous (unwrapped) eigenphases per branch.
    pub phases: [Vec<f64>; 2],
    /// Exact `dφ/dx` per branch.
    pub velocities: [Vec<f64>; 2],
    /// Centered finite differences of the eigenphase, step `1e-5`.
    pub fd_velocities: [Vec<f64>; 2],
    pub projectors: [Vec<Mat2>; 2],
    /// Largest `||α| - 1|` seen.
    pub max_modulus_defect: f64,
}

const FD_STEP: f64 = 1e-5;

pub fn bands(coin: &Mat2, grid_size: usize) -> Result<BandsData> {
    check_unitary(coin)?;
    if grid_size < 16 {
        return Err(Error::Domain(format!("grid_size must be at least 16, got {grid_size}")));
    }
    let xs: Vec<f64> = (0..grid_size).map(|i| TAU * i as f64 / grid_size as f64).collect();
    let mut phases = [Vec::with_capacity(grid_size), Vec::with_capacity(grid_size)];
    let mut velocities = [Vec::with_capacity(grid_size), Vec::with_capacity(grid_size)];
    let mut fd = [Vec::with_capacity(grid_size), Vec::with_capacity(grid_size)];
    let mut projectors = [Vec::with_capacity(grid_size), Vec::with_capacity(grid_size)];
    let mut max_defect = 0.0f64;
    let mut prev: Option<[C64; 2]> = None;
    for &x in &xs {
        let mut es = eigensystem(x, coin);
        if let Some(p) = prev {
            // nearest-phase matching against the previous grid point
            let keep = (es[0].0 - p[0]).norm() + (es[1].0 - p[1]).norm();
            let swap = (es[1].0 - p[0]).norm() + (es[0].0 - p[1]).norm();
            if swap < keep && !is_diagonal(coin) {
                es.swap(0, 1);
            }
        }
        for j in 0..2 {
            let (a, vel, p) = es[j];
            max_defect = max_defect.max((a.norm() - 1.0).abs());
            let ph = a.arg();
            let unwrapped = match phases[j].last() {
                Some(&last) => last + wrap_pm_pi(ph - last),
                None => ph,
            };
            phases[j].push(unwrapped);
            velocities[j].push(vel);
            projectors[j].push(p);
            fd[j].push(fd_velocity(x, coin, a));
        }
        prev = Some([es[0].0, es[1].0]);
    }
    Ok(BandsData { xs, phases, velocities, fd_velocities: fd, projectors, max_modulus_defect: max_defect })
}

/// Finite-difference phase velocity of the branch through `alpha` at `x`.
fn fd_velocity(x: f64, coin: &Mat2, alpha: C64) -> f64 {
    let at_x = eigensystem(x, coin);
    let j = if (at_x[0].0 - alpha).norm() <= (at_x[1].0 - alpha).norm() { 0 } else { 1 };
    let follow = |y: f64| {
        let es = eigensystem(y, coin);
        if is_diagonal(coin) || (es[0].0 - alpha).norm() <= (es[1].0 - alpha).norm() {
            es[if is_diagonal(coin) { j } else { 0 }].0
        } else {
            es[1].0
        }
    };
    let (p, m) = (follow(x + FD_STEP), follow(x - FD_STEP));
    wrap_pm_pi(p.arg() - m.arg()) / (2.0 * FD_STEP)
}

impl BandsData {
    /// Largest distance between neighbouring eigenphases along a branch.
    pub fn max_phase_jump(&self) -> f64 {
        self.phases
            .iter()
            .flat_map(|ph| ph.windows(2).map(|w| (w[1] - w[0]).abs()))
            .fold(0.0, f64::max)
    }

    pub fn max_fd_mismatch(&self) -> f64 {
        (0..2)
            .flat_map(|j| self.velocities[j].iter().zip(&self.fd_velocities[j]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }

    /// Rows `x,branch,eigenphase,group_velocity` with the eigenphase in `[0, 2π)`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["x", "branch", "eigenphase", "group_velocity"])?;
        for (i, x) in self.xs.iter().enumerate() {
            for j in 0..2 {
                w.write_record([
                    x.to_string(),
                    j.to_string(),
                    self.phases[j][i].rem_euclid(TAU).to_string(),
                    self.velocities[j][i].to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Default quadrature grid.
pub const DEFAULT_GRID: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallisticEstimate {
    pub b: f64,
    /// `|B_N - B_{N/2}|`, the change from halving the grid.
    pub error: f64,
    pub grid_size: usize,
}

/// `f(x) = Σ_k (ψ_{2k}, ψ_{2k+1}) e^{-ikx}`.
pub fn fourier_transform(state: &WalkState, x: f64) -> Vec2 {
    let (k0, _) = state.site_range();
    let mut f = Vec2::zeros();
    for (i, pair) in state.amplitudes().chunks_exact(2).enumerate() {
        let e = cis(-((k0 + i as i64) as f64) * x);
        f[0] += pair[0] * e;
        f[1] += pair[1] * e;
    }
    f
}

fn ballistic_integrand(x: f64, coin: &Mat2, state: &WalkState) -> f64 {
    let f = fourier_transform(state, x);
    eigensystem(x, coin).iter().map(|(_, v, p)| v * v * (p * f).norm_squared()).sum()
}

/// `B` by the periodic trapezoid rule on `grid_size` points (even, ≥ 16).
pub fn ballistic_constant_on_grid(coin: &Mat2, initial: &WalkState, grid_size: usize) -> Result<BallisticEstimate> {
    check_unitary(coin)?;
    if grid_size < 16 || !grid_size.is_multiple_of(2) {
        return Err(Error::Domain(format!("grid_size must be even and at least 16, got {grid_size}")));
    }
    let values: Vec<f64> =
        (0..grid_size).map(|i| ballistic_integrand(TAU * i as f64 / grid_size as f64, coin, initial)).collect();
    let full = values.iter().sum::<f64>() / grid_size as f64;
    let half = values.iter().step_by(2).sum::<f64>() / (grid_size / 2) as f64;
    Ok(BallisticEstimate { b: full, error: (full - half).abs(), grid_size })
}

pub fn ballistic_constant(coin: &Mat2, initial: &WalkState) -> Result<BallisticEstimate> {
    ballistic_constant_on_grid(coin, initial, DEFAULT_GRID)
}

/// Eigenvalues of `V(x)` are independent of `x` exactly when `a = d = 0`.
pub fn is_off_diagonal(coin: &Mat2) -> bool {
    coin[(0, 0)] == C64::new(0.0, 0.0) && coin[(1, 1)] == C64::new(0.0, 0.0)
}

/// `det V(x) = det C` for every `x`.
pub fn symbol_det(coin: &Mat2) -> C64 {
    det2(coin)
}
