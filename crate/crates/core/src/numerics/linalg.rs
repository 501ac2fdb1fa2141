//! Three-dimensional complex vectors and matrices over a generic scalar.
//!
//! The pairing `⟨a, b⟩ = Σ aⱼbⱼ` is bilinear (no conjugation) everywhere in
//! this crate. The same code runs over plain [`Complex64`] values and over
//! [`Jet`](super::Jet)s, so every recursion can carry Taylor data along.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Branch of the square root with strictly positive imaginary part.
///
/// Rejects `w ∈ [0, ∞)` where the branch is ambiguous.
pub fn sqrt_upper(w: Complex64) -> Result<Complex64> {
    if w.im == 0.0 && w.re >= 0.0 {
        return Err(Error::AmbiguousBranch(w.re));
    }
    let s = w.sqrt();
    Ok(if s.im > 0.0 { s } else { -s })
}

/// Scalar ring used by the generic vector code.
pub trait Scalar:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn scale(&self, c: Complex64) -> Self;
    fn zero_like(&self) -> Self;
    /// Constant-term value (the value itself for plain numbers).
    fn value(&self) -> Complex64;
}

impl Scalar for Complex64 {
    fn scale(&self, c: Complex64) -> Self {
        self * c
    }
    fn zero_like(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn value(&self) -> Complex64 {
        *self
    }
}

/// A 3-vector over a scalar ring.
#[derive(Debug, Clone, PartialEq)]
pub struct V3<T>(pub [T; 3]);

/// Complex 3-vector.
pub type C3Vector = V3<Complex64>;

impl<T: Scalar> V3<T> {
    pub fn new(a: T, b: T, c: T) -> Self {
        V3([a, b, c])
    }

    pub fn zero_like(t: &T) -> Self {
        let z = t.zero_like();
        V3([z.clone(), z.clone(), z])
    }

    pub fn cross(&self, o: &Self) -> Self {
        let [a1, a2, a3] = &self.0;
        let [b1, b2, b3] = &o.0;
        V3([
            a2.clone() * b3.clone() - a3.clone() * b2.clone(),
            a3.clone() * b1.clone() - a1.clone() * b3.clone(),
            a1.clone() * b2.clone() - a2.clone() * b1.clone(),
        ])
    }

    /// Bilinear pairing `Σ aⱼbⱼ`.
    pub fn dot(&self, o: &Self) -> T {
        self.0[0].clone() * o.0[0].clone()
            + self.0[1].clone() * o.0[1].clone()
            + self.0[2].clone() * o.0[2].clone()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        V3([self.0[0].scale(c), self.0[1].scale(c), self.0[2].scale(c)])
    }

    /// Multiply every component by a scalar of the ring.
    pub fn mul_scalar(&self, s: &T) -> Self {
        V3([
            self.0[0].clone() * s.clone(),
            self.0[1].clone() * s.clone(),
            self.0[2].clone() * s.clone(),
        ])
    }

    pub fn values(&self) -> C3Vector {
        V3([self.0[0].value(), self.0[1].value(), self.0[2].value()])
    }

    pub fn map<U, F: Fn(&T) -> U>(&self, f: F) -> V3<U> {
        V3([f(&self.0[0]), f(&self.0[1]), f(&self.0[2])])
    }
}

impl<T: Scalar> Add for V3<T> {
    type Output = V3<T>;
    fn add(self, o: Self) -> Self {
        let [a, b, c] = self.0;
        let [d, e, f] = o.0;
        V3([a + d, b + e, c + f])
    }
}

impl<T: Scalar> Sub for V3<T> {
    type Output = V3<T>;
    fn sub(self, o: Self) -> Self {
        let [a, b, c] = self.0;
        let [d, e, f] = o.0;
        V3([a - d, b - e, c - f])
    }
}

impl<T: Scalar> Neg for V3<T> {
    type Output = V3<T>;
    fn neg(self) -> Self {
        let [a, b, c] = self.0;
        V3([-a, -b, -c])
    }
}

impl C3Vector {
    pub fn from_real(v: [f64; 3]) -> Self {
        V3(v.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn zeros() -> Self {
        V3([Complex64::new(0.0, 0.0); 3])
    }

    pub fn basis(i: usize) -> Self {
        let mut v = Self::zeros();
        v.0[i] = Complex64::new(1.0, 0.0);
        v
    }

    /// Euclidean (Hermitian) norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// A 3×3 matrix over a scalar ring, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct M3<T>(pub [[T; 3]; 3]);

/// Complex 3×3 matrix.
pub type C3Matrix = M3<Complex64>;

impl<T: Scalar> M3<T> {
    pub fn from_columns(c0: &V3<T>, c1: &V3<T>, c2: &V3<T>) -> Self {
        M3(std::array::from_fn(|i| {
            [c0.0[i].clone(), c1.0[i].clone(), c2.0[i].clone()]
        }))
    }

    pub fn column(&self, j: usize) -> V3<T> {
        V3(std::array::from_fn(|i| self.0[i][j].clone()))
    }

    pub fn transpose(&self) -> Self {
        M3(std::array::from_fn(|i| std::array::from_fn(|j| self.0[j][i].clone())))
    }

    pub fn apply(&self, v: &V3<T>) -> V3<T> {
        V3(std::array::from_fn(|i| {
            self.0[i][0].clone() * v.0[0].clone()
                + self.0[i][1].clone() * v.0[1].clone()
                + self.0[i][2].clone() * v.0[2].clone()
        }))
    }

    pub fn matmul(&self, o: &Self) -> Self {
        M3(std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                self.0[i][0].clone() * o.0[0][j].clone()
                    + self.0[i][1].clone() * o.0[1][j].clone()
                    + self.0[i][2].clone() * o.0[2][j].clone()
            })
        }))
    }

    pub fn add(&self, o: &Self) -> Self {
        M3(std::array::from_fn(|i| {
            std::array::from_fn(|j| self.0[i][j].clone() + o.0[i][j].clone())
        }))
    }

    pub fn sub(&self, o: &Self) -> Self {
        M3(std::array::from_fn(|i| {
            std::array::from_fn(|j| self.0[i][j].clone() - o.0[i][j].clone())
        }))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        M3(std::array::from_fn(|i| std::array::from_fn(|j| self.0[i][j].scale(c))))
    }

    pub fn mul_scalar(&self, s: &T) -> Self {
        M3(std::array::from_fn(|i| {
            std::array::from_fn(|j| self.0[i][j].clone() * s.clone())
        }))
    }

    pub fn det(&self) -> T {
        let m = &self.0;
        m[0][0].clone() * (m[1][1].clone() * m[2][2].clone() - m[1][2].clone() * m[2][1].clone())
            - m[0][1].clone()
                * (m[1][0].clone() * m[2][2].clone() - m[1][2].clone() * m[2][0].clone())
            + m[0][2].clone()
                * (m[1][0].clone() * m[2][1].clone() - m[1][1].clone() * m[2][0].clone())
    }

    /// Adjugate, so that `A · adj(A) = det(A) I`.
    pub fn adjugate(&self) -> Self {
        let m = &self.0;
        let c = |r0: usize, r1: usize, c0: usize, c1: usize| {
            m[r0][c0].clone() * m[r1][c1].clone() - m[r0][c1].clone() * m[r1][c0].clone()
        };
        M3([
            [c(1, 2, 1, 2), -c(0, 2, 1, 2), c(0, 1, 1, 2)],
            [-c(1, 2, 0, 2), c(0, 2, 0, 2), -c(0, 1, 0, 2)],
            [c(1, 2, 0, 1), -c(0, 2, 0, 1), c(0, 1, 0, 1)],
        ])
    }

    pub fn values(&self) -> C3Matrix {
        M3(std::array::from_fn(|i| std::array::from_fn(|j| self.0[i][j].value())))
    }
}

impl C3Matrix {
    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            m.0[i][i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn zeros() -> Self {
        M3([[Complex64::new(0.0, 0.0); 3]; 3])
    }

    /// Outer product `a bᵀ` (no conjugation).
    pub fn outer(a: &C3Vector, b: &C3Vector) -> Self {
        M3(std::array::from_fn(|i| std::array::from_fn(|j| a.0[i] * b.0[j])))
    }

    /// Matrix of `w ↦ v × w`.
    pub fn cross_matrix(v: &C3Vector) -> Self {
        let z = Complex64::new(0.0, 0.0);
        let [a, b, c] = v.0;
        M3([[z, -c, b], [c, z, -a], [-b, a, z]])
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn frobenius(&self) -> f64 {
        self.0.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Inverse via the adjugate; fails on a vanishing determinant.
    pub fn inverse(&self) -> Result<Self> {
        let d = self.det();
        if d.norm() < 1e-300 {
            return Err(Error::Singular(d.norm()));
        }
        Ok(self.adjugate().scale(d.inv()))
    }

    /// Eigenvalues from the characteristic cubic, polished by Newton steps.
    pub fn eigenvalues(&self) -> [Complex64; 3] {
        let m = &self.0;
        let tr = m[0][0] + m[1][1] + m[2][2];
        let minors = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2]
            - m[0][2] * m[2][0]
            + m[1][1] * m[2][2]
            - m[1][2] * m[2][1];
        let det = self.det();
        // λ³ - tr λ² + minors λ - det
        super::cubic_roots(-tr, minors, -det)
    }
}
