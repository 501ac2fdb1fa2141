//! Double-double complex arithmetic for reference solves.
//!
//! Only what the dense oracle needs: add, sub, mul, div and a partial
//! pivoting elimination. Roughly 32 significant digits.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

use super::dense::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    Dd { hi: s, lo: e }
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

impl Dd {
    fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let s = two_sum(self.hi, o.hi);
        let t = two_sum(self.lo, o.lo);
        let s = quick_two_sum(s.hi, s.lo + t.hi);
        quick_two_sum(s.hi, s.lo + t.lo)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        quick_two_sum(p, e)
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::from(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::from(q2);
        let q3 = r.hi / o.hi;
        quick_two_sum(q1, q2) + Dd::from(q3)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Cdd {
    re: Dd,
    im: Dd,
}

impl Cdd {
    fn from(c: Complex64) -> Cdd {
        Cdd { re: Dd::from(c.re), im: Dd::from(c.im) }
    }

    fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    fn norm_approx(self) -> f64 {
        self.re.hi.hypot(self.im.hi)
    }

    fn sub(self, o: Cdd) -> Cdd {
        Cdd { re: self.re - o.re, im: self.im - o.im }
    }

    fn mul(self, o: Cdd) -> Cdd {
        Cdd { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }

    fn div(self, o: Cdd) -> Cdd {
        let d = o.re * o.re + o.im * o.im;
        let n = self.mul(Cdd { re: o.re, im: -o.im });
        Cdd { re: n.re / d, im: n.im / d }
    }
}

/// Gaussian elimination with partial pivoting carried out in double-double
/// precision; inputs are taken as exact.
pub fn lu_solve_extended(m: &DenseMatrix, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = m.rows;
    assert_eq!(m.cols, n);
    let mut a: Vec<Cdd> = m.data.iter().map(|&c| Cdd::from(c)).collect();
    let mut b: Vec<Cdd> = rhs.iter().map(|&c| Cdd::from(c)).collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i * n + col].norm_approx().total_cmp(&a[j * n + col].norm_approx()))
            .unwrap();
        let p = a[piv * n + col].norm_approx();
        if p < 1e-300 {
            return Err(Error::Singular(p));
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        for r in col + 1..n {
            let f = a[r * n + col].div(a[col * n + col]);
            for k in col..n {
                a[r * n + k] = a[r * n + k].sub(f.mul(a[col * n + k]));
            }
            b[r] = b[r].sub(f.mul(b[col]));
        }
    }
    let mut x = vec![Cdd::default(); n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s = s.sub(a[i * n + k].mul(x[k]));
        }
        x[i] = s.div(a[i * n + i]);
    }
    Ok(x.into_iter().map(Cdd::to_c64).collect())
}
