//! Truncated multivariate Taylor series.
//!
//! A [`Jet`] stores the coefficients `c_α` of `Σ c_α (x - x₀)^α` for all
//! multi-indices with `|α| ≤ p`. Monomials are ordered by total degree, so a
//! jet of lower order is a prefix of one of higher order. Each jet carries its
//! own valid order and binary operations return the smaller of the two.

use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use super::linalg::{sqrt_upper, Scalar};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Monomial bookkeeping shared by all jets with the same variable count and
/// maximal order.
#[derive(Debug)]
pub struct Layout {
    nvars: usize,
    max_order: usize,
    exps: Vec<Vec<u8>>,
    degree: Vec<usize>,
    /// `offsets[d]` = number of monomials of degree `< d`.
    offsets: Vec<usize>,
    /// `mul[i][j]` = index of `x^(αᵢ+αⱼ)` for `|αⱼ| ≤ P - |αᵢ|`.
    mul: Vec<Vec<u32>>,
    /// `raise[v][i]` = index of `αᵢ + e_v` when its degree is within `P`.
    raise: Vec<Vec<Option<u32>>>,
    pos: HashMap<Vec<u8>, usize>,
}

impl Layout {
    fn build(nvars: usize, max_order: usize) -> Layout {
        let mut exps: Vec<Vec<u8>> = Vec::new();
        let mut offsets = vec![0];
        for d in 0..=max_order {
            let mut level = Vec::new();
            gen_degree(nvars, d, &mut vec![0u8; nvars], 0, &mut level);
            // Lexicographically descending so x1 powers come first.
            level.sort_by(|a, b| b.cmp(a));
            exps.extend(level);
            offsets.push(exps.len());
        }
        let degree: Vec<usize> = exps.iter().map(|e| e.iter().map(|&x| x as usize).sum()).collect();
        let pos: HashMap<Vec<u8>, usize> =
            exps.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let mut mul = Vec::with_capacity(exps.len());
        for (i, ei) in exps.iter().enumerate() {
            let lim = offsets[max_order - degree[i] + 1];
            let row: Vec<u32> = exps[..lim]
                .iter()
                .map(|ej| {
                    let s: Vec<u8> = ei.iter().zip(ej).map(|(a, b)| a + b).collect();
                    pos[&s] as u32
                })
                .collect();
            mul.push(row);
        }
        let raise = (0..nvars)
            .map(|v| {
                exps.iter()
                    .map(|e| {
                        let mut s = e.clone();
                        s[v] += 1;
                        pos.get(&s).map(|&k| k as u32)
                    })
                    .collect()
            })
            .collect();
        Layout { nvars, max_order, exps, degree, offsets, mul, raise, pos }
    }

    /// Shared layout for `nvars` variables up to total degree `max_order`.
    pub fn get(nvars: usize, max_order: usize) -> Arc<Layout> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Layout>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap();
        guard
            .entry((nvars, max_order))
            .or_insert_with(|| Arc::new(Layout::build(nvars, max_order)))
            .clone()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Number of monomials of degree at most `p`.
    pub fn len(&self, p: usize) -> usize {
        self.offsets[p + 1]
    }

    pub fn exponent(&self, i: usize) -> &[u8] {
        &self.exps[i]
    }

    pub fn index_of(&self, exps: &[u8]) -> Option<usize> {
        self.pos.get(exps).copied()
    }
}

fn gen_degree(nvars: usize, d: usize, cur: &mut Vec<u8>, v: usize, out: &mut Vec<Vec<u8>>) {
    if v + 1 == nvars {
        cur[v] = d as u8;
        out.push(cur.clone());
        return;
    }
    for k in 0..=d {
        cur[v] = k as u8;
        gen_degree(nvars, d - k, cur, v + 1, out);
    }
}

/// Truncated Taylor series in several variables with complex coefficients.
#[derive(Debug, Clone)]
pub struct Jet {
    layout: Arc<Layout>,
    order: usize,
    coeffs: Vec<Complex64>,
}

impl PartialEq for Jet {
    fn eq(&self, o: &Self) -> bool {
        self.order == o.order && self.coeffs == o.coeffs
    }
}

impl Jet {
    pub fn constant(layout: &Arc<Layout>, c: Complex64) -> Jet {
        let p = layout.max_order;
        let mut coeffs = vec![ZERO; layout.len(p)];
        coeffs[0] = c;
        Jet { layout: layout.clone(), order: p, coeffs }
    }

    pub fn real(layout: &Arc<Layout>, c: f64) -> Jet {
        Jet::constant(layout, Complex64::new(c, 0.0))
    }

    /// The coordinate function `x_v` expanded around `x_v = x0`.
    pub fn variable(layout: &Arc<Layout>, v: usize, x0: f64) -> Jet {
        let mut j = Jet::real(layout, x0);
        if layout.max_order >= 1 {
            let mut e = vec![0u8; layout.nvars];
            e[v] = 1;
            j.coeffs[layout.pos[&e]] = Complex64::new(1.0, 0.0);
        }
        j
    }

    pub fn from_coeffs(layout: &Arc<Layout>, order: usize, mut coeffs: Vec<Complex64>) -> Jet {
        assert!(order <= layout.max_order);
        coeffs.resize(layout.len(order), ZERO);
        Jet { layout: layout.clone(), order, coeffs }
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn value(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Coefficient of the monomial with the given exponents (zero above the
    /// valid order).
    pub fn coefficient(&self, exps: &[u8]) -> Complex64 {
        match self.layout.index_of(exps) {
            Some(i) if i < self.coeffs.len() => self.coeffs[i],
            _ => ZERO,
        }
    }

    /// Drop all terms of degree above `p`.
    pub fn truncate(&self, p: usize) -> Jet {
        let p = p.min(self.order);
        Jet {
            layout: self.layout.clone(),
            order: p,
            coeffs: self.coeffs[..self.layout.len(p)].to_vec(),
        }
    }

    pub fn zero_like(&self) -> Jet {
        Jet {
            layout: self.layout.clone(),
            order: self.order,
            coeffs: vec![ZERO; self.coeffs.len()],
        }
    }

    pub fn scale(&self, c: Complex64) -> Jet {
        Jet {
            layout: self.layout.clone(),
            order: self.order,
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    pub fn add_constant(&self, c: Complex64) -> Jet {
        let mut r = self.clone();
        r.coeffs[0] += c;
        r
    }

    fn zip(&self, o: &Jet, f: impl Fn(Complex64, Complex64) -> Complex64) -> Jet {
        debug_assert!(Arc::ptr_eq(&self.layout, &o.layout));
        let p = self.order.min(o.order);
        let n = self.layout.len(p);
        Jet {
            layout: self.layout.clone(),
            order: p,
            coeffs: (0..n).map(|i| f(self.coeffs[i], o.coeffs[i])).collect(),
        }
    }

    pub fn add_ref(&self, o: &Jet) -> Jet {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub_ref(&self, o: &Jet) -> Jet {
        self.zip(o, |a, b| a - b)
    }

    pub fn mul_ref(&self, o: &Jet) -> Jet {
        debug_assert!(Arc::ptr_eq(&self.layout, &o.layout));
        let lay = &self.layout;
        let p = self.order.min(o.order);
        let mut out = vec![ZERO; lay.len(p)];
        for i in 0..lay.len(p) {
            let a = self.coeffs[i];
            if a == ZERO {
                continue;
            }
            let lim = lay.len(p - lay.degree[i]);
            let row = &lay.mul[i][..lim];
            for (k, b) in row.iter().zip(&o.coeffs[..lim]) {
                out[*k as usize] += a * b;
            }
        }
        Jet { layout: lay.clone(), order: p, coeffs: out }
    }

    /// `Σ cₙ (self - self₀)ⁿ` by Horner's rule.
    fn compose(&self, c: &[Complex64]) -> Jet {
        let mut t = self.clone();
        t.coeffs[0] = ZERO;
        let mut acc = Jet::constant(&self.layout, c[self.order]).truncate(self.order);
        for n in (0..self.order).rev() {
            acc = acc.mul_ref(&t).add_constant(c[n]);
        }
        acc
    }

    pub fn recip(&self) -> Result<Jet> {
        let a0 = self.value();
        if a0 == ZERO {
            return Err(Error::ZeroConstantTerm);
        }
        let inv = a0.inv();
        let mut c = Vec::with_capacity(self.order + 1);
        let mut t = inv;
        for _ in 0..=self.order {
            c.push(t);
            t *= -inv;
        }
        Ok(self.compose(&c))
    }

    /// Square root continuing the given value of `√a₀`.
    pub fn sqrt_with(&self, s0: Complex64) -> Result<Jet> {
        let a0 = self.value();
        if a0 == ZERO {
            return Err(Error::ZeroConstantTerm);
        }
        let inv = a0.inv();
        let mut c = Vec::with_capacity(self.order + 1);
        let mut binom = Complex64::new(1.0, 0.0);
        let mut pw = Complex64::new(1.0, 0.0);
        for n in 0..=self.order {
            c.push(s0 * binom * pw);
            binom *= (0.5 - n as f64) / (n as f64 + 1.0);
            pw *= inv;
        }
        Ok(self.compose(&c))
    }

    /// Square root on the branch `Im √ > 0` at the base point.
    pub fn sqrt_upper(&self) -> Result<Jet> {
        self.sqrt_with(sqrt_upper(self.value())?)
    }

    /// Principal square root.
    pub fn sqrt(&self) -> Result<Jet> {
        self.sqrt_with(self.value().sqrt())
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let mut c = Vec::with_capacity(self.order + 1);
        let mut f = 1.0;
        for n in 0..=self.order {
            if n > 0 {
                f /= n as f64;
            }
            c.push(e * f);
        }
        self.compose(&c)
    }

    fn trig(&self, shift: usize) -> Jet {
        let a0 = self.value();
        let cyc = [a0.sin(), a0.cos(), -a0.sin(), -a0.cos()];
        let mut c = Vec::with_capacity(self.order + 1);
        let mut f = 1.0;
        for n in 0..=self.order {
            if n > 0 {
                f /= n as f64;
            }
            c.push(cyc[(n + shift) % 4] * f);
        }
        self.compose(&c)
    }

    pub fn sin(&self) -> Jet {
        self.trig(0)
    }

    pub fn cos(&self) -> Jet {
        self.trig(1)
    }

    /// Partial derivative in variable `v`; the order drops by one.
    pub fn derivative(&self, v: usize) -> Result<Jet> {
        if self.order == 0 {
            return Err(Error::OrderUnderflow);
        }
        let lay = &self.layout;
        let p = self.order - 1;
        let coeffs = (0..lay.len(p))
            .map(|i| {
                let k = lay.raise[v][i].expect("raise within order") as usize;
                self.coeffs[k] * (lay.exps[i][v] as f64 + 1.0)
            })
            .collect();
        Ok(Jet { layout: lay.clone(), order: p, coeffs })
    }

    /// Evaluate the polynomial at displacement `dx` from the base point.
    pub fn evaluate(&self, dx: &[f64]) -> Complex64 {
        let lay = &self.layout;
        let mut pows: Vec<Vec<f64>> = dx
            .iter()
            .map(|&d| {
                let mut v = vec![1.0; self.order + 1];
                for k in 1..=self.order {
                    v[k] = v[k - 1] * d;
                }
                v
            })
            .collect();
        pows.truncate(lay.nvars);
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let m: f64 = lay.exps[i].iter().zip(&pows).map(|(&e, p)| p[e as usize]).product();
                c * m
            })
            .sum()
    }

    /// Split off variable 0: returns the coefficients of `x₀ᵏ` as jets in the
    /// remaining variables, for `k = 0..=order`.
    pub fn split_first(&self) -> Vec<Jet> {
        let lay = &self.layout;
        let sub = Layout::get(lay.nvars - 1, lay.max_order);
        let mut out: Vec<Jet> = (0..=self.order)
            .map(|k| Jet::constant(&sub, ZERO).truncate(self.order - k))
            .collect();
        for (i, c) in self.coeffs.iter().enumerate() {
            let e = &lay.exps[i];
            let k = e[0] as usize;
            let j = sub.pos[&e[1..].to_vec()];
            out[k].coeffs[j] = *c;
        }
        out
    }

    /// Inverse of [`Jet::split_first`]: `Σ x₀ᵏ parts[k]` on `layout`, which has
    /// one more variable than the parts. Missing powers are exact zeros.
    pub fn join_first(parts: &[Jet], layout: &Arc<Layout>) -> Jet {
        let order = parts
            .iter()
            .enumerate()
            .map(|(k, p)| k + p.order)
            .min()
            .unwrap_or(layout.max_order)
            .min(layout.max_order);
        let coeffs = (0..layout.len(order))
            .map(|i| {
                let e = &layout.exps[i];
                match parts.get(e[0] as usize) {
                    Some(p) => p.coefficient(&e[1..]),
                    None => ZERO,
                }
            })
            .collect();
        Jet { layout: layout.clone(), order, coeffs }
    }

    /// Largest coefficient modulus among monomials of degree `≤ p`.
    pub fn max_abs_upto(&self, p: usize) -> f64 {
        let n = self.layout.len(p.min(self.order));
        self.coeffs[..n].iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        self.add_ref(&o)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self.sub_ref(&o)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        self.mul_ref(&o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Scalar for Jet {
    fn scale(&self, c: Complex64) -> Self {
        Jet::scale(self, c)
    }
    fn zero_like(&self) -> Self {
        Jet::zero_like(self)
    }
    fn value(&self) -> Complex64 {
        Jet::value(self)
    }
}
