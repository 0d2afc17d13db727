//! Banded matrices with an LU factorization using partial pivoting.
//!
//! Storage follows the LAPACK general-band layout: column-major with
//! `2 kl + ku + 1` rows per column, the extra `kl` rows holding the fill-in
//! created by row interchanges.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular: zero pivot in column {0}")]
    Singular(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ld = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            ld,
            data: vec![0.0; ld * n],
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

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i + self.ku >= j && j + self.kl >= i
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.ld + self.kl + self.ku + i - j
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// Panics outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            self.in_band(i, j),
            "({i}, {j}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            self.in_band(i, j),
            "({i}, {j}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    fn col_range(&self, j: usize) -> std::ops::Range<usize> {
        j.saturating_sub(self.ku)..(j + self.kl + 1).min(self.n)
    }

    /// Visit every stored entry inside the band.
    pub fn for_each(&self, mut f: impl FnMut(usize, usize, f64)) {
        for j in 0..self.n {
            for i in self.col_range(j) {
                f(i, j, self.data[self.idx(i, j)]);
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for i in self.col_range(j) {
                y[i] += self.data[self.idx(i, j)] * xj;
            }
        }
        y
    }

    pub fn scale_rows(&mut self, r: &[f64]) {
        for j in 0..self.n {
            for i in self.col_range(j) {
                let k = self.idx(i, j);
                self.data[k] *= r[i];
            }
        }
    }

    pub fn scale_cols(&mut self, c: &[f64]) {
        for j in 0..self.n {
            for i in self.col_range(j) {
                let k = self.idx(i, j);
                self.data[k] *= c[j];
            }
        }
    }

    /// `diag(d) + alpha * self`.
    pub fn scaled_plus_diag(&self, alpha: f64, d: &[f64]) -> Self {
        let mut out = self.clone();
        for v in out.data.iter_mut() {
            *v *= alpha;
        }
        for (i, &di) in d.iter().enumerate() {
            if di != 0.0 {
                out.add(i, i, di);
            }
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.n]; self.n];
        self.for_each(|i, j, v| a[i][j] = v);
        a
    }

    pub fn factor(mut self) -> Result<BandLu, LinalgError> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let kv = ku + kl;
        let mut piv = vec![0usize; n];
        // fill-in rows must start from zero
        for j in 0..n {
            for r in 0..kl {
                self.data[j * self.ld + r] = 0.0;
            }
        }
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0usize;
            let mut best = -1.0;
            for i in 0..=km {
                let v = self.data[self.idx(j + i, j)].abs();
                if v > best {
                    best = v;
                    jp = i;
                }
            }
            piv[j] = j + jp;
            if best == 0.0 || !best.is_finite() {
                return Err(LinalgError::Singular(j));
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let a = self.idx(j, c);
                    let b = self.idx(j + jp, c);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(j, j)];
            let inv = 1.0 / pivot;
            for i in 1..=km {
                let k = self.idx(j + i, j);
                self.data[k] *= inv;
            }
            for c in j + 1..=ju {
                let a = self.data[self.idx(j, c)];
                if a == 0.0 {
                    continue;
                }
                for i in 1..=km {
                    let l = self.data[self.idx(j + i, j)];
                    let k = self.idx(j + i, c);
                    self.data[k] -= l * a;
                }
            }
            debug_assert!(ju < j + kv + 1);
        }
        Ok(BandLu { lu: self, piv })
    }
}

#[derive(Clone, Debug)]
pub struct BandLu {
    lu: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn n(&self) -> usize {
        self.lu.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<(), LinalgError> {
        let a = &self.lu;
        let n = a.n;
        if b.len() != n {
            return Err(LinalgError::Dimension {
                expected: n,
                got: b.len(),
            });
        }
        for j in 0..n {
            let p = self.piv[j];
            if p != j {
                b.swap(j, p);
            }
            let bj = b[j];
            if bj != 0.0 {
                let km = a.kl.min(n - 1 - j);
                for i in 1..=km {
                    b[j + i] -= a.data[a.idx(j + i, j)] * bj;
                }
            }
        }
        let kv = a.kl + a.ku;
        for j in (0..n).rev() {
            b[j] /= a.data[a.idx(j, j)];
            let bj = b[j];
            if bj != 0.0 {
                for i in j.saturating_sub(kv)..j {
                    b[i] -= a.data[a.idx(i, j)] * bj;
                }
            }
        }
        Ok(())
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }
}
