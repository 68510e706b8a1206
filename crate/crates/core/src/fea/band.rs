//! Symmetric positive-definite banded storage and Cholesky factorization.

use crate::error::{Error, Result};

/// Lower band of a symmetric matrix, stored row by row: row `i` keeps
/// columns `i - bw ..= i` (entries left of column 0 are padding).
#[derive(Debug, Clone)]
pub(crate) struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (j + self.bw - i)
    }

    /// Adds `v` at `(i, j)`; only the lower triangle is stored, so callers
    /// pass each off-diagonal pair once with `i >= j`.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    /// `y = A x` using the symmetric band.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let row = &self.data[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            let start = lo + self.bw - i;
            let mut acc = row[self.bw] * x[i];
            for (j, &a) in (lo..i).zip(&row[start..self.bw]) {
                acc += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += acc;
        }
        y
    }

    /// In-place Cholesky `A = L L^T`. Fails on a non-positive pivot, which
    /// for a stiffness matrix means the structure is not fully constrained.
    pub fn cholesky(mut self) -> Result<CholeskyFactor> {
        let w = self.bw + 1;
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..=i {
                let klo = lo.max(j.saturating_sub(self.bw));
                let (ri, rj) = (i * w + self.bw - i, j * w + self.bw - j);
                let s = self.data[ri + j]
                    - dot(&self.data[ri + klo..ri + j], &self.data[rj + klo..rj + j]);
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::Solve(format!(
                            "stiffness matrix not positive definite at reduced DOF {i} (pivot {s:e}); \
                             the structure is likely insufficiently constrained"
                        )));
                    }
                    self.data[ri + i] = s.sqrt();
                } else {
                    self.data[ri + j] = s / self.data[rj + j];
                }
            }
        }
        Ok(CholeskyFactor { l: self })
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub(crate) struct CholeskyFactor {
    l: BandMatrix,
}

impl CholeskyFactor {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.l.n, self.l.bw);
        let w = bw + 1;
        let d = &self.l.data;
        let mut y = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let ri = i * w + bw - i;
            let s = y[i] - dot(&d[ri + lo..ri + i], &y[lo..i]);
            y[i] = s / d[ri + i];
        }
        for i in (0..n).rev() {
            let ri = i * w + bw - i;
            y[i] /= d[ri + i];
            let yi = y[i];
            let lo = i.saturating_sub(bw);
            for (k, &l) in (lo..i).zip(&d[ri + lo..ri + i]) {
                y[k] -= l * yi;
            }
        }
        y
    }
}
