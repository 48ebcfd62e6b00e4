//! Complex banded matrices and LU factorization with partial pivoting.
//!
//! Storage follows the usual band layout: row `i` keeps columns
//! `i - kl ..= i + kl + ku`, the extra `kl` superdiagonals holding fill-in
//! created by row interchanges.

use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<C64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self { n, kl, ku, data: vec![ZERO; n * (2 * kl + ku + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn width(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let off = j as isize - i as isize + self.kl as isize;
        if i < self.n && j < self.n && off >= 0 && (off as usize) < self.width() {
            Some(i * self.width() + off as usize)
        } else {
            None
        }
    }

    /// Entry `(i, j)`; zero outside the stored band.
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.slot(i, j).map_or(ZERO, |s| self.data[s])
    }

    /// Set entry `(i, j)`, which must lie within `kl` below and `ku` above the diagonal.
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i}, {j}) outside band kl = {}, ku = {}",
            self.kl,
            self.ku
        );
        let s = self.slot(i, j).expect("index in range");
        self.data[s] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: C64) {
        let cur = self.get(i, j);
        self.set(i, j, cur + v);
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let a = i.saturating_sub(self.kl);
                let b = (i + self.ku).min(self.n - 1);
                (a..=b).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Factor in place. A zero pivot reports its column.
    pub fn factor(mut self) -> Result<BandLu> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + kl).min(n.saturating_sub(1));
            let mut p = k;
            let mut best = self.get(k, k).norm();
            for i in k + 1..=last_row {
                let v = self.get(i, k).norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::SingularSystem(k));
            }
            piv[k] = p;
            let last_col = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.slot(k, j).unwrap(), self.slot(p, j).unwrap());
                    self.data.swap(a, b);
                }
            }
            let pivot = self.get(k, k);
            for i in k + 1..=last_row {
                let s = self.slot(i, k).unwrap();
                if self.data[s] == ZERO {
                    continue;
                }
                let l = self.data[s] / pivot;
                self.data[s] = l;
                for j in k + 1..=last_col {
                    let u = self.get(k, j);
                    if u != ZERO {
                        let t = self.slot(i, j).unwrap();
                        self.data[t] -= l * u;
                    }
                }
            }
        }
        Ok(BandLu { a: self, piv })
    }
}

/// `P A = L U` for a band matrix; `L` multipliers stay in the subdiagonals.
#[derive(Debug, Clone)]
pub struct BandLu {
    a: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn dim(&self) -> usize {
        self.a.n
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [C64]) {
        let (n, kl, ku) = (self.a.n, self.a.kl, self.a.ku);
        assert_eq!(x.len(), n);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk != ZERO {
                for i in k + 1..=(k + kl).min(n - 1) {
                    x[i] -= self.a.get(i, k) * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..=(k + kl + ku).min(n - 1) {
                s -= self.a.get(k, j) * x[j];
            }
            x[k] = s / self.a.get(k, k);
        }
    }
}
