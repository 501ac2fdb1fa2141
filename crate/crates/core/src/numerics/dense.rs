//! Small dense complex linear solves.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Conjugate-transpose times vector.
    pub fn adjoint_matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.rows);
        let mut out = vec![Complex64::new(0.0, 0.0); self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a.conj() * xi;
            }
        }
        out
    }

    pub fn matmul(&self, o: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, o.rows);
        let mut out = DenseMatrix::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let orow = &o.data[k * o.cols..(k + 1) * o.cols];
                let out_row = &mut out.data[i * o.cols..(i + 1) * o.cols];
                for (r, b) in out_row.iter_mut().zip(orow) {
                    *r += a * b;
                }
            }
        }
        out
    }

    pub fn sub(&self, o: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Result of a dense solve: the solution and a cheap condition estimate
/// (ratio of largest to smallest pivot modulus).
#[derive(Debug, Clone)]
pub struct Solve {
    pub x: Vec<Complex64>,
    pub condition_estimate: f64,
}

/// Gaussian elimination with partial pivoting.
pub fn lu_solve(m: &DenseMatrix, rhs: &[Complex64]) -> Result<Solve> {
    let n = m.rows;
    assert_eq!(m.cols, n, "square matrix required");
    assert_eq!(rhs.len(), n);
    let mut a = m.data.clone();
    let mut b = rhs.to_vec();
    let (mut pmax, mut pmin) = (0.0f64, f64::INFINITY);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i * n + col].norm().total_cmp(&a[j * n + col].norm()))
            .unwrap();
        let p = a[piv * n + col].norm();
        if p < 1e-300 {
            return Err(Error::Singular(p));
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        pmax = pmax.max(p);
        pmin = pmin.min(p);
        let inv = a[col * n + col].inv();
        for r in col + 1..n {
            let f = a[r * n + col] * inv;
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in col..n {
                let v = a[col * n + k];
                a[r * n + k] -= f * v;
            }
            let bc = b[col];
            b[r] -= f * bc;
        }
    }
    // Relative pivot floor: catches exactly dependent rows that survive
    // elimination as roundoff-sized pivots.
    if pmin < 1e-14 * pmax {
        return Err(Error::Singular(pmin));
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= a[i * n + k] * x[k];
        }
        x[i] = s / a[i * n + i];
    }
    Ok(Solve { x, condition_estimate: pmax / pmin })
}

/// Reference solve for small systems: the same elimination carried out in
/// double-double precision, with the double-precision condition estimate.
pub fn cross_solve_oracle(m: &DenseMatrix, rhs: &[Complex64]) -> Result<Solve> {
    let cond = lu_solve(m, rhs)?.condition_estimate;
    let x = super::dd::lu_solve_extended(m, rhs)?;
    Ok(Solve { x, condition_estimate: cond })
}
