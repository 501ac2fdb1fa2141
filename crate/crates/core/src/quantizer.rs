//! Left quantization of scalar symbols on the flat torus `(ℝ/2πℤ)²`, as dense
//! matrices on an `n × n` grid, with the composition and norm experiments
//! built on it.
//!
//! For a grid function `f`, `Op_h(a) f(x) = Σ_k a(x, hk) f̂(k) e^{i⟨k, x⟩}`
//! with `f̂(k) = n⁻² Σ_y f(y) e^{−i⟨k, y⟩}` and `k ∈ [−n/2, n/2)²`.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{log_log_slope, DenseMatrix};

/// Largest grid size per axis; matrices are `n² × n²`.
pub const MAX_GRID: usize = 64;

/// Relative symbol variation past the Nyquist frequency above which a
/// quantization carries an [`AliasWarning`].
pub const ALIAS_THRESHOLD: f64 = 1e-8;

const NORM_TOL: f64 = 1e-13;
const NORM_MAX_ITER: usize = 400;
const NORM_SEED: u64 = 0x5eed;

/// A scalar symbol `a(x', η)` with `η = hξ'` already scaled.
pub type Symbol<'a> = dyn Fn([f64; 2], [f64; 2]) -> Complex64 + Sync + 'a;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AliasWarning {
    pub fraction: f64,
}

impl fmt::Display for AliasWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "symbol variation past the Nyquist frequency is {:.3e} of its mass on the grid", self.fraction)
    }
}

/// Frequencies `−n/2, …, n/2 − 1`.
pub fn frequencies(n: usize) -> Vec<i64> {
    let half = (n / 2) as i64;
    (0..n as i64).map(|k| k - half).collect()
}

pub fn grid_point(n: usize, i: usize) -> f64 {
    2.0 * std::f64::consts::PI * i as f64 / n as f64
}

/// `e^{2πi j/n}` for `j = 0, …, n−1`.
fn twiddles(n: usize) -> Vec<Complex64> {
    (0..n).map(|j| Complex64::from_polar(1.0, grid_point(n, j))).collect()
}

fn wrap(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

#[derive(Debug, Clone)]
pub struct GridOperator {
    pub n: usize,
    pub h: f64,
    /// Rows and columns indexed by `i₁ n + i₂`.
    pub matrix: DenseMatrix,
    pub tag: String,
    pub alias_fraction: f64,
}

impl GridOperator {
    pub fn dim(&self) -> usize {
        self.n * self.n
    }

    pub fn alias_warning(&self) -> Option<AliasWarning> {
        (self.alias_fraction > ALIAS_THRESHOLD).then_some(AliasWarning { fraction: self.alias_fraction })
    }

    pub fn is_diagonal(&self) -> bool {
        let d = self.dim();
        (0..d).all(|i| (0..d).all(|j| i == j || self.matrix[(i, j)] == Complex64::new(0.0, 0.0)))
    }

    /// Operator norm; exact for diagonal matrices, power iteration otherwise.
    pub fn norm(&self) -> NormEstimate {
        if self.is_diagonal() {
            let value = (0..self.dim()).map(|i| self.matrix[(i, i)].norm()).fold(0.0, f64::max);
            return NormEstimate { value, iterations: 0, converged: true };
        }
        operator_norm(self)
    }
}

/// A linear map on grid functions, given by its action and adjoint action.
pub trait LinearMap: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64>;
    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64>;
}

impl LinearMap for GridOperator {
    fn dim(&self) -> usize {
        self.n * self.n
    }
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.matrix.matvec(x)
    }
    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.matrix.adjoint_matvec(x)
    }
}

fn check_grid(n: usize, h: f64) -> Result<()> {
    if !(2..=MAX_GRID).contains(&n) || !n.is_multiple_of(2) {
        return Err(Error::Config(format!("grid size must be even and in [2, {MAX_GRID}], got {n}")));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Config(format!("h must be positive and finite, got {h}")));
    }
    Ok(())
}

/// Mass of the symbol's variation past the grid lattice, as a fraction of
/// its mass on the lattice, over a subsample of grid rows. For
/// `k ∈ [−n, n)²` outside the lattice the variation is `a(x, hk)` minus the
/// value at the nearest lattice frequency, so symbols that are constant in
/// `ξ` near the Nyquist frequency do not register.
fn alias_fraction(a: &Symbol, h: f64, n: usize) -> f64 {
    let stride = (n / 8).max(1);
    let wide = frequencies(2 * n);
    let half = (n / 2) as i64;
    let clamp = |k: i64| k.clamp(-half, half - 1);
    let (mut inside, mut outside) = (0.0, 0.0);
    for i1 in (0..n).step_by(stride) {
        for i2 in (0..n).step_by(stride) {
            let x = [grid_point(n, i1), grid_point(n, i2)];
            let at = |k1: i64, k2: i64| a(x, [h * k1 as f64, h * k2 as f64]);
            for &k1 in &wide {
                for &k2 in &wide {
                    let (c1, c2) = (clamp(k1), clamp(k2));
                    if (c1, c2) == (k1, k2) {
                        inside += at(k1, k2).norm_sqr();
                    } else {
                        outside += (at(k1, k2) - at(c1, c2)).norm_sqr();
                    }
                }
            }
        }
    }
    if inside > 0.0 {
        outside / inside
    } else if outside > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Dense left quantization of `a` on the `n × n` grid.
///
/// Rows whose symbol values do not depend on the frequency are assembled as
/// exact multiplication rows, so `Op_h(1)` is the identity bit for bit.
pub fn quantize(a: &Symbol, tag: &str, h: f64, n: usize) -> Result<GridOperator> {
    check_grid(n, h)?;
    let ks = frequencies(n);
    let w = twiddles(n);
    let d = n * n;
    let rows: Vec<Vec<Complex64>> = (0..d)
        .into_par_iter()
        .map(|row| {
            let (i1, i2) = (row / n, row % n);
            let x = [grid_point(n, i1), grid_point(n, i2)];
            let c: Vec<Complex64> = ks.iter().flat_map(|&k1| ks.iter().map(move |&k2| (k1, k2))).map(|(k1, k2)| a(x, [h * k1 as f64, h * k2 as f64])).collect();
            let mut out = vec![Complex64::new(0.0, 0.0); d];
            if c.iter().all(|v| *v == c[0]) {
                out[row] = c[0];
                return out;
            }
            // t[k₁][y₂] = Σ_{k₂} c[k₁][k₂] e^{ik₂(x₂−y₂)}
            let mut t = vec![Complex64::new(0.0, 0.0); d];
            for a1 in 0..n {
                for y2 in 0..n {
                    let mut s = Complex64::new(0.0, 0.0);
                    for (a2, &k2) in ks.iter().enumerate() {
                        s += c[a1 * n + a2] * w[wrap(k2 * (i2 as i64 - y2 as i64), n)];
                    }
                    t[a1 * n + y2] = s;
                }
            }
            let scale = 1.0 / d as f64;
            for y1 in 0..n {
                for y2 in 0..n {
                    let mut s = Complex64::new(0.0, 0.0);
                    for (a1, &k1) in ks.iter().enumerate() {
                        s += w[wrap(k1 * (i1 as i64 - y1 as i64), n)] * t[a1 * n + y2];
                    }
                    out[y1 * n + y2] = s * scale;
                }
            }
            out
        })
        .collect();
    let matrix = DenseMatrix { rows: d, cols: d, data: rows.into_iter().flatten().collect() };
    Ok(GridOperator { n, h, matrix, tag: tag.to_string(), alias_fraction: alias_fraction(a, h, n) })
}

/// Unitary 2D DFT between grid values and lattice coefficients ordered as in
/// [`frequencies`]; `inverse` maps coefficients back to grid values.
fn unitary_dft(n: usize, f: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let ks = frequencies(n);
    let w = twiddles(n);
    // kernel(a, i) = e^{∓i k_a x_i}
    let kernel = |a: usize, i: usize| if inverse { w[wrap(ks[a] * i as i64, n)] } else { w[wrap(-ks[a] * i as i64, n)] };
    let pass = |src: &[Complex64], along_second: bool| {
        let mut dst = vec![Complex64::new(0.0, 0.0); n * n];
        for fixed in 0..n {
            for o in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    let (from, kk) = if inverse { (j, kernel(j, o)) } else { (j, kernel(o, j)) };
                    let idx = if along_second { fixed * n + from } else { from * n + fixed };
                    s += src[idx] * kk;
                }
                let out = if along_second { fixed * n + o } else { o * n + fixed };
                dst[out] = s;
            }
        }
        dst
    };
    let t = pass(f, true);
    pass(&t, false).into_iter().map(|v| v / n as f64).collect()
}

/// Orthogonal projection onto grid functions whose frequencies satisfy
/// `|k|∞ < n/2 − guard`.
#[derive(Debug, Clone, Copy)]
pub struct BandProjection {
    pub n: usize,
    pub guard: usize,
}

impl BandProjection {
    pub fn apply(&self, f: &[Complex64]) -> Vec<Complex64> {
        if self.guard == 0 {
            return f.to_vec();
        }
        let n = self.n;
        let limit = (n / 2) as i64 - self.guard as i64;
        let ks = frequencies(n);
        let mut g = unitary_dft(n, f, false);
        for (a1, &k1) in ks.iter().enumerate() {
            for (a2, &k2) in ks.iter().enumerate() {
                if k1.abs() >= limit || k2.abs() >= limit {
                    g[a1 * n + a2] = Complex64::new(0.0, 0.0);
                }
            }
        }
        unitary_dft(n, &g, true)
    }
}

/// `(A B − C) P` for grid operators `A, B, C` and a band projection `P`.
pub struct Defect<'a> {
    pub a: &'a GridOperator,
    pub b: &'a GridOperator,
    pub ab: &'a GridOperator,
    pub band: BandProjection,
}

impl LinearMap for Defect<'_> {
    fn dim(&self) -> usize {
        self.a.dim()
    }
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let px = self.band.apply(x);
        let l = self.a.apply(&self.b.apply(&px));
        let r = self.ab.apply(&px);
        l.iter().zip(&r).map(|(u, v)| u - v).collect()
    }
    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        let l = self.b.apply_adjoint(&self.a.apply_adjoint(x));
        let r = self.ab.apply_adjoint(x);
        let d: Vec<Complex64> = l.iter().zip(&r).map(|(u, v)| u - v).collect();
        self.band.apply(&d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal
/// `a` and off-diagonal `b`, by Sturm-count bisection.
fn tridiagonal_max(a: &[f64], b: &[f64]) -> f64 {
    let m = a.len();
    let radius = |i: usize| (if i > 0 { b[i - 1].abs() } else { 0.0 }) + (if i + 1 < m { b[i].abs() } else { 0.0 });
    let mut lo = (0..m).map(|i| a[i] - radius(i)).fold(f64::INFINITY, f64::min);
    let mut hi = (0..m).map(|i| a[i] + radius(i)).fold(f64::NEG_INFINITY, f64::max);
    // Number of eigenvalues below x.
    let below = |x: f64| {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..m {
            let off = if i > 0 { b[i - 1] * b[i - 1] } else { 0.0 };
            d = a[i] - x - if i > 0 { off / d } else { 0.0 };
            if d == 0.0 {
                d = -f64::EPSILON * (x.abs() + 1.0);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid) == m {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Largest singular value: Lanczos iteration with full reorthogonalization
/// on `A*A` from a fixed random start, i.e. power iteration with the whole
/// Krylov space retained. Stops when the top Ritz value settles.
pub fn operator_norm(op: &dyn LinearMap) -> NormEstimate {
    let d = op.dim();
    let steps = d.min(NORM_MAX_ITER);
    let mut rng = ChaCha8Rng::seed_from_u64(NORM_SEED);
    let dot = |u: &[Complex64], v: &[Complex64]| -> Complex64 { u.iter().zip(v).map(|(a, b)| a.conj() * b).sum() };
    let norm = |v: &[Complex64]| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let mut q: Vec<Complex64> = (0..d).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let s = norm(&q);
    q.iter_mut().for_each(|c| *c /= s);
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    let mut prev = f64::NAN;
    for it in 1..=steps {
        let mut w = op.apply_adjoint(&op.apply(&q));
        alpha.push(dot(&q, &w).re);
        basis.push(q);
        for _ in 0..2 {
            for u in &basis {
                let c = dot(u, &w);
                w.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
            }
        }
        let top = tridiagonal_max(&alpha, &beta).max(0.0);
        let b = norm(&w);
        let settled = (top - prev).abs() <= NORM_TOL * top;
        if settled || b <= NORM_TOL * top.max(f64::MIN_POSITIVE) || it == steps {
            return NormEstimate { value: top.sqrt(), iterations: it, converged: settled || b <= NORM_TOL * top || it == d };
        }
        prev = top;
        beta.push(b);
        q = w.into_iter().map(|c| c / b).collect();
    }
    NormEstimate { value: prev.sqrt(), iterations: steps, converged: false }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefectRow {
    pub h: f64,
    pub defect: f64,
    pub norm: NormEstimate,
    /// Largest alias fraction among the three quantizations.
    pub alias_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefectCurve {
    pub rows: Vec<DefectRow>,
    /// Log-log slope of the defect in `h`; NaN when a defect vanishes.
    pub slope: f64,
}

/// `‖(Op_h(a) Op_h(b) − Op_h(ab)) P‖` for each `h`, where the symbols may
/// depend on `h` and `P` drops the `guard` outermost frequency shells, so
/// that index wrap-around at the Nyquist frequency does not enter.
pub fn composition_defect(
    a: &(dyn Fn(f64, [f64; 2], [f64; 2]) -> Complex64 + Sync),
    b: &(dyn Fn(f64, [f64; 2], [f64; 2]) -> Complex64 + Sync),
    h_list: &[f64],
    n: usize,
    guard: usize,
) -> Result<DefectCurve> {
    if guard >= n / 2 {
        return Err(Error::Config(format!("guard {guard} leaves no frequencies on an n = {n} grid")));
    }
    let rows = h_list
        .par_iter()
        .map(|&h| {
            let fa = |x: [f64; 2], e: [f64; 2]| a(h, x, e);
            let fb = |x: [f64; 2], e: [f64; 2]| b(h, x, e);
            let fab = |x: [f64; 2], e: [f64; 2]| a(h, x, e) * b(h, x, e);
            let oa = quantize(&fa, "a", h, n)?;
            let ob = quantize(&fb, "b", h, n)?;
            let oab = quantize(&fab, "ab", h, n)?;
            let norm = operator_norm(&Defect { a: &oa, b: &ob, ab: &oab, band: BandProjection { n, guard } });
            let alias_fraction = oa.alias_fraction.max(ob.alias_fraction).max(oab.alias_fraction);
            Ok(DefectRow { h, defect: norm.value, norm, alias_fraction })
        })
        .collect::<Result<Vec<_>>>()?;
    let slope = if rows.len() >= 2 && rows.iter().all(|r| r.defect > 0.0) {
        let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
        let ds: Vec<f64> = rows.iter().map(|r| r.defect).collect();
        log_log_slope(&hs, &ds)
    } else {
        f64::NAN
    };
    Ok(DefectCurve { rows, slope })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormRow {
    pub h: f64,
    pub theta: f64,
    pub norm: NormEstimate,
    pub alias_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormCurve {
    pub rows: Vec<NormRow>,
    /// `(h, exponent)`: log-log slope of the norm against `θ⁻¹` at each `h`.
    pub exponents: Vec<(f64, f64)>,
}

/// `‖Op_h(a_θ)‖` over the `(h, θ)` grid and the fitted growth exponent in `θ⁻¹`.
pub fn boundedness_check(
    a: &(dyn Fn(f64, [f64; 2], [f64; 2]) -> Complex64 + Sync),
    h_list: &[f64],
    theta_list: &[f64],
    n: usize,
) -> Result<NormCurve> {
    let cells: Vec<(f64, f64)> = h_list.iter().flat_map(|&h| theta_list.iter().map(move |&t| (h, t))).collect();
    let rows = cells
        .par_iter()
        .map(|&(h, theta)| {
            let f = |x: [f64; 2], e: [f64; 2]| a(theta, x, e);
            let op = quantize(&f, "a", h, n)?;
            Ok(NormRow { h, theta, norm: op.norm(), alias_fraction: op.alias_fraction })
        })
        .collect::<Result<Vec<_>>>()?;
    let exponents = h_list
        .iter()
        .map(|&h| {
            let sel: Vec<&NormRow> = rows.iter().filter(|r| r.h == h).collect();
            let inv: Vec<f64> = sel.iter().map(|r| 1.0 / r.theta).collect();
            let v: Vec<f64> = sel.iter().map(|r| r.norm.value).collect();
            (h, if sel.len() >= 2 { log_log_slope(&inv, &v) } else { f64::NAN })
        })
        .collect();
    Ok(NormCurve { rows, exponents })
}

/// Flat root symbol `ρ = √(z² − |η|²)`, `Im ρ > 0`, for `z = 1 + iθ` and
/// `ε₀μ₀ = 1`.
pub fn flat_rho(theta: f64, eta: [f64; 2]) -> Complex64 {
    let z = Complex64::new(1.0, theta);
    let w = z * z - (eta[0] * eta[0] + eta[1] * eta[1]);
    // `i√(−w)` with the principal root has positive imaginary part.
    Complex64::i() * (-w).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn dft_oracle(a: &Symbol, h: f64, n: usize) -> DenseMatrix {
        let d = n * n;
        let ks = frequencies(n);
        let mut m = DenseMatrix::zeros(d, d);
        for r in 0..d {
            let x = [grid_point(n, r / n), grid_point(n, r % n)];
            for col in 0..d {
                let y = [grid_point(n, col / n), grid_point(n, col % n)];
                let mut s = c(0.0, 0.0);
                for &k1 in &ks {
                    for &k2 in &ks {
                        let ph = k1 as f64 * (x[0] - y[0]) + k2 as f64 * (x[1] - y[1]);
                        s += a(x, [h * k1 as f64, h * k2 as f64]) * Complex64::from_polar(1.0, ph);
                    }
                }
                m[(r, col)] = s / d as f64;
            }
        }
        m
    }

    fn max_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
        a.data.iter().zip(&b.data).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn identity_and_multiplication_are_exact() {
        let one = |_: [f64; 2], _: [f64; 2]| c(1.0, 0.0);
        let op = quantize(&one, "1", 0.1, 8).unwrap();
        assert_eq!(op.matrix, DenseMatrix::identity(64));
        assert_eq!(op.norm().value, 1.0);
        let mult = |x: [f64; 2], _: [f64; 2]| c(x[0].cos(), x[1].sin());
        let op = quantize(&mult, "a(x)", 0.1, 8).unwrap();
        for i in 0..64 {
            for j in 0..64 {
                let want = if i == j { mult([grid_point(8, i / 8), grid_point(8, i % 8)], [0.0; 2]) } else { c(0.0, 0.0) };
                assert_eq!(op.matrix[(i, j)], want);
            }
        }
    }

    #[test]
    fn matches_direct_sum() {
        // Shift-then-filter symbol.
        let a = |x: [f64; 2], e: [f64; 2]| Complex64::from_polar(1.0, x[1]) * (-(e[0] * e[0] + 0.5 * e[1] * e[1])).exp();
        for n in [4, 6, 8] {
            let op = quantize(&a, "shift", 0.3, n).unwrap();
            assert!(max_diff(&op.matrix, &dft_oracle(&a, 0.3, n)) < 1e-13);
        }
    }

    #[test]
    fn shift_then_filter_structure() {
        // a = e^{i x₂} b(hξ): Op(a) = (multiply by e^{ix₂}) ∘ b(hD).
        let n = 8;
        let h = 0.25;
        let b = |e: [f64; 2]| c(1.0 / (1.0 + e[0] * e[0] + e[1] * e[1]), e[0]);
        let a = |x: [f64; 2], e: [f64; 2]| Complex64::from_polar(1.0, x[1]) * b(e);
        let shift = quantize(&|x: [f64; 2], _: [f64; 2]| Complex64::from_polar(1.0, x[1]), "s", h, n).unwrap();
        let filt = quantize(&|_: [f64; 2], e: [f64; 2]| b(e), "b", h, n).unwrap();
        let op = quantize(&a, "a", h, n).unwrap();
        assert!(max_diff(&op.matrix, &shift.matrix.matmul(&filt.matrix)) < 1e-14);
    }

    #[test]
    fn multiplier_is_conjugated_diagonal() {
        let n = 8;
        let b = |_: [f64; 2], e: [f64; 2]| c(e[0].cos(), e[1]);
        let op = quantize(&b, "b", 0.4, n).unwrap();
        let ks = frequencies(n);
        for (a1, &k1) in ks.iter().enumerate() {
            for (a2, &k2) in ks.iter().enumerate() {
                let mut e = vec![c(0.0, 0.0); n * n];
                e[a1 * n + a2] = c(1.0, 0.0);
                let f = unitary_dft(n, &e, true);
                let g = op.apply(&f);
                let want = b([0.0; 2], [0.4 * k1 as f64, 0.4 * k2 as f64]);
                for (u, v) in g.iter().zip(&f) {
                    assert!((u - want * v).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn left_order_composition_is_exact() {
        // Op(a(x)) Op(b(hξ)) = Op(a b) for left quantization.
        let a = |_: f64, x: [f64; 2], _: [f64; 2]| c(x[0].cos(), 0.5 * (2.0 * x[1]).sin());
        let b = |_: f64, _: [f64; 2], e: [f64; 2]| (-((e[0] - 0.5).powi(2) + (e[1] - 0.3).powi(2))).exp().into();
        let curve = composition_defect(&a, &b, &[0.25, 0.125], 8, 0).unwrap();
        assert!(curve.rows.iter().all(|r| r.defect < 1e-13), "{curve:?}");
        // Multipliers commute.
        let b2 = |_: f64, _: [f64; 2], e: [f64; 2]| c(e[1].sin(), 1.0);
        let curve = composition_defect(&b, &b2, &[0.25], 8, 0).unwrap();
        assert!(curve.rows[0].defect < 1e-13);
    }

    #[test]
    fn reverse_composition_is_order_h() {
        let a = |_: f64, _: [f64; 2], e: [f64; 2]| (-((e[0] - 0.5).powi(2) + (e[1] - 0.3).powi(2))).exp().into();
        let b = |_: f64, x: [f64; 2], _: [f64; 2]| c(x[0].cos() + 0.5 * (2.0 * x[1]).sin(), 0.0);
        let hs = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
        let curve = composition_defect(&a, &b, &hs, 16, 2).unwrap();
        assert!((curve.slope - 1.0).abs() < 0.15, "{curve:?}");
    }

    #[test]
    fn adjoint_is_order_h() {
        // Op(ā)* − Op(a) = O(h) for an x- and ξ-dependent symbol.
        let a = |x: [f64; 2], e: [f64; 2]| c(x[0].cos(), x[1].sin()) * (-(e[0] * e[0] + e[1] * e[1])).exp() + c(0.0, e[0]).exp();
        let mut defects = Vec::new();
        let hs = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
        for h in hs {
            let op = quantize(&a, "a", h, 16).unwrap();
            let conj = quantize(&|x: [f64; 2], e: [f64; 2]| a(x, e).conj(), "a*", h, 16).unwrap();
            let d = DenseMatrix { rows: 256, cols: 256, data: (0..256 * 256).map(|k| conj.matrix[(k % 256, k / 256)].conj()).collect() }.sub(&op.matrix);
            struct M(DenseMatrix);
            impl LinearMap for M {
                fn dim(&self) -> usize {
                    self.0.rows
                }
                fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
                    self.0.matvec(x)
                }
                fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
                    self.0.adjoint_matvec(x)
                }
            }
            defects.push(operator_norm(&M(d)).value);
        }
        let s = log_log_slope(&hs, &defects);
        assert!(s > 0.8, "{defects:?} {s}");
    }

    #[test]
    fn rho_inverse_norm_is_explicit() {
        // For the multiplier ρ⁻¹ the norm is the lattice maximum of |ρ⁻¹|.
        let n = 16;
        let h = 1.0 / 8.0;
        for theta in [0.1, 0.3, 0.9] {
            let f = |_: [f64; 2], e: [f64; 2]| flat_rho(theta, e).inv();
            let op = quantize(&f, "rho^-1", h, n).unwrap();
            let ks = frequencies(n);
            let want = ks.iter().flat_map(|&a| ks.iter().map(move |&b| (a, b))).map(|(a, b)| f([0.0; 2], [h * a as f64, h * b as f64]).norm()).fold(0.0, f64::max);
            let got = op.norm();
            assert!(got.converged, "{got:?}");
            assert!((got.value - want).abs() < 1e-8 * want, "{got:?} {want}");
            assert!(want <= (2.0 * theta).powf(-0.5) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn alias_warning_fires() {
        let slow = |_: [f64; 2], e: [f64; 2]| c(1.0 / (1.0 + e[0] * e[0] + e[1] * e[1]), 0.0);
        assert!(quantize(&slow, "s", 0.1, 8).unwrap().alias_warning().is_some());
        let fast = |_: [f64; 2], e: [f64; 2]| c((-(e[0] * e[0] + e[1] * e[1]) * 4.0).exp(), 0.0);
        assert!(quantize(&fast, "f", 1.0, 16).unwrap().alias_warning().is_none());
        let flat = |x: [f64; 2], _: [f64; 2]| c(x[0].cos(), 0.0);
        assert_eq!(quantize(&flat, "a(x)", 0.1, 8).unwrap().alias_fraction, 0.0);
    }

    #[test]
    fn rejects_bad_grids() {
        let one = |_: [f64; 2], _: [f64; 2]| c(1.0, 0.0);
        assert!(quantize(&one, "1", 0.1, 65).is_err());
        assert!(quantize(&one, "1", 0.1, 7).is_err());
        assert!(quantize(&one, "1", 0.0, 8).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn band_projection_is_idempotent(v in proptest::collection::vec(-1.0f64..1.0, 128), guard in 0usize..4) {
            let f: Vec<Complex64> = (0..64).map(|i| c(v[i], v[64 + i])).collect();
            let p = BandProjection { n: 8, guard };
            let pf = p.apply(&f);
            let ppf = p.apply(&pf);
            for (a, b) in pf.iter().zip(&ppf) {
                prop_assert!((a - b).norm() < 1e-13);
            }
            let nf: f64 = f.iter().map(|c| c.norm_sqr()).sum();
            let npf: f64 = pf.iter().map(|c| c.norm_sqr()).sum();
            prop_assert!(npf <= nf * (1.0 + 1e-12));
        }
    }
}
