use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WmarError};

/// Dense `n × n` matrix, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(WmarError::InvalidArgument("matrix dimension 0".into()));
        }
        if data.len() != n * n {
            return Err(WmarError::InvalidArgument(format!(
                "{} entries for a {n}x{n} matrix",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(WmarError::InvalidArgument("non-finite matrix entry".into()));
        }
        Ok(SquareMatrix { n, data })
    }

    pub fn zeros(n: usize) -> Self {
        SquareMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(WmarError::InvalidArgument("rows are not square".into()));
        }
        Self::new(n, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn transpose(&self) -> SquareMatrix {
        let n = self.n;
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t.data[j * n + i] = self.data[i * n + j];
            }
        }
        t
    }

    pub(crate) fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.rows()
            .map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn mul_t_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (r, &vi) in self.rows().zip(v) {
            for (o, a) in out.iter_mut().zip(r) {
                *o += a * vi;
            }
        }
        out
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }
}

/// Largest singular value, by power iteration on `AᵀA`.
pub fn spectral_norm(a: &SquareMatrix) -> f64 {
    let n = a.n();
    // fixed, non-symmetric start vector so no eigenvector is orthogonal by construction
    let mut v: Vec<f64> = (0..n).map(|k| 1.0 + 0.5 * ((k + 1) as f64).sin()).collect();
    normalize(&mut v);
    let mut prev = f64::NAN;
    let mut sigma2 = 0.0;
    for _ in 0..200_000 {
        let u = a.mul_t_vec(&a.mul_vec(&v));
        sigma2 = v.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>();
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v = u.into_iter().map(|x| x / norm).collect();
        if (sigma2 - prev).abs() <= 1e-14 * sigma2 {
            break;
        }
        prev = sigma2;
    }
    sigma2.max(0.0).sqrt()
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
}

/// Eigenvalues of a symmetric matrix, ascending.
pub(crate) fn symmetric_eigenvalues(a: &SquareMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = a.to_nalgebra().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}
