//! Complex banded matrices with LU factorization (partial pivoting).

use super::C64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("singular banded matrix: zero pivot in column {column}")]
pub struct SingularBand {
    pub column: usize,
}

/// Square band matrix with `kl` sub- and `ku` super-diagonals. Each row keeps
/// `2 kl + ku + 1` slots starting at column `i - kl`, leaving room for pivot fill.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<C64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![C64::new(0.0, 0.0); n * width],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kl(&self) -> usize {
        self.kl
    }

    pub fn ku(&self) -> usize {
        self.ku
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    /// Whether (i, j) lies inside the declared band.
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku && i < self.n && j < self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        if j + self.kl < i || j > i + self.kl + self.ku {
            C64::new(0.0, 0.0)
        } else {
            self.data[self.slot(i, j)]
        }
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: C64) {
        assert!(self.in_band(i, j), "entry ({i},{j}) outside band");
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        assert!(self.in_band(i, j), "entry ({i},{j}) outside band");
        let s = self.slot(i, j);
        self.data[s] = v;
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.n];
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            let base = i * self.width + self.kl - i;
            let mut acc = C64::new(0.0, 0.0);
            for (j, xj) in x.iter().enumerate().take(hi + 1).skip(lo) {
                acc += self.data[base + j] * xj;
            }
            *yi = acc;
        }
        y
    }

    /// Conjugate-transpose product.
    pub fn matvec_adjoint(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.n];
        for (i, xi) in x.iter().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            let base = i * self.width + self.kl - i;
            for (j, yj) in y.iter_mut().enumerate().take(hi + 1).skip(lo) {
                *yj += self.data[base + j].conj() * xi;
            }
        }
        y
    }

    /// LU factorization with row pivoting, consuming the matrix.
    pub fn factor(mut self) -> Result<BandLu, SingularBand> {
        let n = self.n;
        let kl = self.kl;
        let reach = kl + self.ku;
        let mut piv = vec![0usize; n];
        let scale = self.data.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        for j in 0..n {
            let last_row = (j + kl).min(n - 1);
            let mut p = j;
            let mut best = self.get(j, j).norm();
            for i in (j + 1)..=last_row {
                let v = self.get(i, j).norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || best < 1e-300 * scale.max(1e-300) {
                return Err(SingularBand { column: j });
            }
            piv[j] = p;
            let last_col = (j + reach).min(n - 1);
            if p != j {
                for col in j..=last_col {
                    let a = self.slot(j, col);
                    let b = self.slot(p, col);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.slot(j, j)];
            let inv = C64::new(1.0, 0.0) / pivot;
            let jbase = j * self.width + kl - j;
            for i in (j + 1)..=last_row {
                let sij = self.slot(i, j);
                let m = self.data[sij] * inv;
                self.data[sij] = m;
                if m.re == 0.0 && m.im == 0.0 {
                    continue;
                }
                let ibase = i * self.width + kl - i;
                for col in (j + 1)..=last_col {
                    let u = self.data[jbase + col];
                    self.data[ibase + col] -= m * u;
                }
            }
        }
        Ok(BandLu { m: self, piv })
    }
}

#[derive(Clone, Debug)]
pub struct BandLu {
    m: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn n(&self) -> usize {
        self.m.n
    }

    pub fn solve_in_place(&self, b: &mut [C64]) {
        let n = self.m.n;
        let kl = self.m.kl;
        let reach = kl + self.m.ku;
        let w = self.m.width;
        for j in 0..n {
            let p = self.piv[j];
            if p != j {
                b.swap(j, p);
            }
            let bj = b[j];
            if bj.re == 0.0 && bj.im == 0.0 {
                continue;
            }
            let last_row = (j + kl).min(n - 1);
            for i in (j + 1)..=last_row {
                let m = self.m.data[i * w + kl + j - i];
                b[i] -= m * bj;
            }
        }
        for j in (0..n).rev() {
            let base = j * w + kl - j;
            let last_col = (j + reach).min(n - 1);
            let mut acc = b[j];
            for col in (j + 1)..=last_col {
                acc -= self.m.data[base + col] * b[col];
            }
            b[j] = acc / self.m.data[base + j];
        }
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
