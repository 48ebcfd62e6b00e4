//! Finitely supported walk states in the relabeled basis.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::stats::CompensatedSum;
use crate::{Error, Result, C64};

/// Amplitudes below this magnitude at the window edges may be trimmed.
pub const TRIM_THRESHOLD: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn as_str(&self) -> &'static str {
        match self {
            Spin::Up => "up",
            Spin::Down => "down",
        }
    }
}

/// Relabeled index of `spin ⊗ |site>`.
#[inline]
pub fn relabel(spin: Spin, site: i64) -> i64 {
    match spin {
        Spin::Up => 2 * site,
        Spin::Down => 2 * site + 1,
    }
}

/// Physical site `k` of relabeled index `m ∈ {2k, 2k+1}`.
#[inline]
pub fn site_of(m: i64) -> i64 {
    m.div_euclid(2)
}

#[inline]
pub fn spin_of(m: i64) -> Spin {
    if m.rem_euclid(2) == 0 {
        Spin::Up
    } else {
        Spin::Down
    }
}

/// A vector in `C^2 ⊗ l^2(Z)` supported on whole sites `offset/2 ..`.
///
/// The window always starts at an even relabeled index and has even length,
/// so it holds both spin components of every site it touches.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkState {
    offset: i64,
    amps: Vec<C64>,
}

/// Unit vector on `spin ⊗ |site>`.
pub fn basis_state(spin: Spin, site: i64) -> WalkState {
    WalkState::basis(spin, site)
}

impl WalkState {
    pub fn basis(spin: Spin, site: i64) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); 2];
        amps[(relabel(spin, site) - 2 * site) as usize] = C64::new(1.0, 0.0);
        Self { offset: 2 * site, amps }
    }

    /// `φ₀ ⊗ |site>` for a coin vector `φ₀ = (up, down)`.
    pub fn local(coin_state: [C64; 2], site: i64) -> Self {
        Self { offset: 2 * site, amps: coin_state.to_vec() }
    }

    /// State from amplitudes on consecutive relabeled indices starting at `offset`.
    /// The window is widened to whole sites.
    pub fn from_amplitudes(offset: i64, amps: Vec<C64>) -> Self {
        let mut s = Self { offset, amps };
        if s.offset.rem_euclid(2) != 0 {
            s.offset -= 1;
            s.amps.insert(0, C64::new(0.0, 0.0));
        }
        if !s.amps.len().is_multiple_of(2) {
            s.amps.push(C64::new(0.0, 0.0));
        }
        s
    }

    /// All-zero state covering sites `lo..=hi`.
    pub fn zeros(lo_site: i64, hi_site: i64) -> Self {
        let len = 2 * (hi_site - lo_site + 1).max(0) as usize;
        Self { offset: 2 * lo_site, amps: vec![C64::new(0.0, 0.0); len] }
    }

    /// Smallest relabeled index held.
    pub fn offset(&self) -> i64 {
        self.offset
    }

    /// Largest relabeled index held.
    pub fn end(&self) -> i64 {
        self.offset + self.amps.len() as i64 - 1
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn site_range(&self) -> (i64, i64) {
        (site_of(self.offset), site_of(self.end()))
    }

    pub fn amplitude(&self, m: i64) -> C64 {
        if m < self.offset {
            return C64::new(0.0, 0.0);
        }
        self.amps.get((m - self.offset) as usize).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        for a in &self.amps {
            acc.add(a.norm_sqr());
        }
        acc.value()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 {
            return Err(Error::Validation("cannot normalize the zero vector".into()));
        }
        Ok(Self { offset: self.offset, amps: self.amps.iter().map(|a| a / n).collect() })
    }

    /// `|ψ_{2k}|² + |ψ_{2k+1}|²`.
    pub fn site_probability(&self, k: i64) -> f64 {
        self.amplitude(2 * k).norm_sqr() + self.amplitude(2 * k + 1).norm_sqr()
    }

    /// `(site, probability)` for every site in the window.
    pub fn site_distribution(&self) -> Vec<(i64, f64)> {
        self.amps
            .chunks_exact(2)
            .enumerate()
            .map(|(i, p)| (site_of(self.offset) + i as i64, p[0].norm_sqr() + p[1].norm_sqr()))
            .collect()
    }

    /// `<X^L> = Σ_k k^L (|ψ_{2k}|² + |ψ_{2k+1}|²)` in the site coordinate.
    pub fn position_moment(&self, order: u32) -> f64 {
        self.moment_with(|k| (k as f64).powi(order as i32))
    }

    /// `<|X|^L>`.
    pub fn abs_position_moment(&self, order: u32) -> f64 {
        self.moment_with(|k| (k.unsigned_abs() as f64).powi(order as i32))
    }

    fn moment_with(&self, weight: impl Fn(i64) -> f64) -> f64 {
        let mut acc = CompensatedSum::new();
        for (k, p) in self.site_distribution() {
            if p != 0.0 {
                acc.add(weight(k) * p);
            }
        }
        acc.value()
    }

    /// Drop whole sites at the edges whose amplitudes are all below [`TRIM_THRESHOLD`].
    pub fn trim(&mut self) {
        let small = |p: &[C64]| p.iter().all(|a| a.norm() < TRIM_THRESHOLD);
        let mut head = 0;
        while head + 2 < self.amps.len() && small(&self.amps[head..head + 2]) {
            head += 2;
        }
        let mut tail = self.amps.len();
        while tail > head + 2 && small(&self.amps[tail - 2..tail]) {
            tail -= 2;
        }
        if head > 0 || tail < self.amps.len() {
            self.amps = self.amps[head..tail].to_vec();
            self.offset += head as i64;
        }
    }

    /// Write the state as CSV with header `site,spin,re,im`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["site", "spin", "re", "im"])?;
        for (i, a) in self.amps.iter().enumerate() {
            let m = self.offset + i as i64;
            w.write_record([
                site_of(m).to_string(),
                spin_of(m).as_str().to_string(),
                a.re.to_string(),
                a.im.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
