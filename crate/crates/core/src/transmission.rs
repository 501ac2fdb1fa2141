//! Transmission eigenvalues of two constant media on the ball: per-mode
//! determinants, winding-number counts, the parabolic region scan and the
//! symbols `T`, `T̃`, `T₁`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{MediaField, SurfaceChart};
use crate::mie::{exact_mode_impedance, riccati_bessel, Polarization};
use crate::numerics::{C3Matrix, C3Vector};
use crate::spectral::{boundary_values, cal_b, rho, SpectralParameter, SymbolMatrix};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative size of `D` against its two terms below which a contour point
/// counts as a zero.
pub const CONTOUR_ZERO_TOL: f64 = 1e-10;

/// Contour perturbations tried before giving up on a rectangle.
const MAX_RETRIES: usize = 3;

/// Target phase change per contour step.
const PHASE_STEP: f64 = 0.5;

/// Allowed gap between the observed phase change of a step and the one
/// predicted from `D'/D`.
const PREDICTION_TOL: f64 = 0.25;

/// Step halvings allowed before a contour point is declared a zero.
const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransmissionConfig {
    pub eps1: f64,
    pub mu1: f64,
    pub eps2: f64,
    pub mu2: f64,
    pub c1: f64,
    pub c2: f64,
    pub radius: f64,
    /// Largest mode index scanned.
    pub l_max: usize,
    /// Region constant `C` in `Im λ ≥ C(Re λ + 1)^p`.
    pub c_region: f64,
    pub exponent: f64,
    /// Lower edge used where `C(Re λ + 1)^p` falls below it.
    pub im_floor: f64,
    /// Upper edge of the scanned region.
    pub im_max: f64,
}

impl Default for TransmissionConfig {
    fn default() -> Self {
        TransmissionConfig {
            eps1: 4.0,
            mu1: 1.0,
            eps2: 1.0,
            mu2: 1.0,
            c1: 1.0,
            c2: 1.0,
            radius: 1.0,
            l_max: 40,
            c_region: 1.0,
            exponent: 5.0 / 7.0,
            im_floor: 0.05,
            im_max: 120.0,
        }
    }
}

impl TransmissionConfig {
    /// `c₁/μ₁ = c₂/μ₂` and `ε₁μ₁ ≠ ε₂μ₂`.
    pub fn within_hypotheses(&self) -> bool {
        let a = self.c1 / self.mu1;
        let b = self.c2 / self.mu2;
        let n1 = self.eps1 * self.mu1;
        let n2 = self.eps2 * self.mu2;
        (a - b).abs() <= 1e-12 * a.abs().max(b.abs()) && (n1 - n2).abs() > 1e-12 * n1.max(n2)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [self.eps1, self.mu1, self.eps2, self.mu2, self.c1, self.c2, self.radius];
        if pos.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config("media, weights and radius must be positive".into()));
        }
        if self.l_max == 0 || self.im_floor <= 0.0 || self.im_max <= self.im_floor || self.exponent < 0.0 {
            return Err(Error::Config("need l_max >= 1, 0 < im_floor < im_max, exponent >= 0".into()));
        }
        Ok(())
    }

    /// Lower edge of the region at `Re λ = x`.
    pub fn lower_edge(&self, c: f64, x: f64) -> f64 {
        (c * (x + 1.0).powf(self.exponent)).max(self.im_floor)
    }
}

/// `D = mantissa · e^{log_scale}`. `rel` is `|D|` over the sum of the sizes
/// of its two terms; `log_derivative` is `D'(λ)/D(λ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Determinant {
    pub mantissa: Complex64,
    pub log_scale: f64,
    pub rel: f64,
    pub log_derivative: Complex64,
}

impl Determinant {
    pub fn value(&self) -> Complex64 {
        self.mantissa * self.log_scale.exp()
    }
}

/// `D = c₁Z₁ − c₂Z₂` with both interior denominators cleared:
/// `D_TE = i(c₁s₁ψ'(x₁)ψ(x₂) − c₂s₂ψ'(x₂)ψ(x₁))`,
/// `D_TM = −i(c₁s₁ψ(x₁)ψ'(x₂) − c₂s₂ψ(x₂)ψ'(x₁))`, with `s_j = √(ε_j/μ_j)`
/// and `x_j = λ√(ε_jμ_j)R`.
pub fn mode_determinant(cfg: &TransmissionConfig, l: usize, pol: Polarization, lambda: Complex64) -> Result<Determinant> {
    let k1 = (cfg.eps1 * cfg.mu1).sqrt() * cfg.radius;
    let k2 = (cfg.eps2 * cfg.mu2).sqrt() * cfg.radius;
    let (x1, x2) = (lambda * k1, lambda * k2);
    let a = riccati_bessel(l, x1)?;
    let b = riccati_bessel(l, x2)?;
    let ll = (l * (l + 1)) as f64;
    // ψ'' = −(1 − ℓ(ℓ+1)/x²)ψ.
    let a2 = -(1.0 - ll / (x1 * x1)) * a.psi;
    let b2 = -(1.0 - ll / (x2 * x2)) * b.psi;
    let s1 = cfg.c1 * (cfg.eps1 / cfg.mu1).sqrt();
    let s2 = cfg.c2 * (cfg.eps2 / cfg.mu2).sqrt();
    let (t1, t2, dt, f) = match pol {
        Polarization::Te => (
            a.dpsi * b.psi * s1,
            b.dpsi * a.psi * s2,
            (a2 * b.psi * k1 + a.dpsi * b.dpsi * k2) * s1 - (b2 * a.psi * k2 + b.dpsi * a.dpsi * k1) * s2,
            I,
        ),
        Polarization::Tm => (
            a.psi * b.dpsi * s1,
            b.psi * a.dpsi * s2,
            (a.dpsi * b.dpsi * k1 + a.psi * b2 * k2) * s1 - (b.dpsi * a.dpsi * k2 + b.psi * a2 * k1) * s2,
            -I,
        ),
    };
    let d = (t1 - t2) * f;
    let size = t1.norm() + t2.norm();
    // Ratio of scaled quantities; normalize first so tiny mantissas do not
    // underflow in the complex division.
    let n = d.norm();
    let log_derivative = if n > 0.0 { (dt * f / n) / (d / n) } else { Complex64::new(f64::INFINITY, 0.0) };
    Ok(Determinant {
        mantissa: d,
        log_scale: a.scale + b.scale,
        rel: if size > 0.0 { n / size } else { 0.0 },
        log_derivative,
    })
}

/// The same determinant through the impedances: `(c₁Z₁ − c₂Z₂)·den₁·den₂`.
pub fn mode_determinant_direct(cfg: &TransmissionConfig, l: usize, pol: Polarization, lambda: Complex64) -> Result<Complex64> {
    let gap = impedance_gap(cfg, l, pol, lambda)?;
    let x1 = lambda * (cfg.eps1 * cfg.mu1).sqrt() * cfg.radius;
    let x2 = lambda * (cfg.eps2 * cfg.mu2).sqrt() * cfg.radius;
    let (p1, d1) = riccati_bessel(l, x1)?.unscaled();
    let (p2, d2) = riccati_bessel(l, x2)?.unscaled();
    Ok(match pol {
        Polarization::Te => gap * p1 * p2,
        Polarization::Tm => gap * d1 * d2,
    })
}

/// `c₁Z₁ − c₂Z₂`.
pub fn impedance_gap(cfg: &TransmissionConfig, l: usize, pol: Polarization, lambda: Complex64) -> Result<Complex64> {
    let z1 = exact_mode_impedance(l, lambda, cfg.eps1, cfg.mu1, cfg.radius, pol)?.value;
    let z2 = exact_mode_impedance(l, lambda, cfg.eps2, cfg.mu2, cfg.radius, pol)?.value;
    Ok(z1 * cfg.c1 - z2 * cfg.c2)
}

/// Axis-aligned rectangle in the `λ`-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub re: (f64, f64),
    pub im: (f64, f64),
}

impl Rect {
    pub fn new(re0: f64, re1: f64, im0: f64, im1: f64) -> Self {
        Rect { re: (re0, re1), im: (im0, im1) }
    }

    pub fn is_degenerate(&self) -> bool {
        self.re.1 <= self.re.0 || self.im.1 <= self.im.0
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re.0 && z.re <= self.re.1 && z.im >= self.im.0 && z.im <= self.im.1
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re.0, self.im.0),
            Complex64::new(self.re.1, self.im.0),
            Complex64::new(self.re.1, self.im.1),
            Complex64::new(self.re.0, self.im.1),
        ]
    }

    fn widen(&self, d: f64) -> Rect {
        Rect::new(self.re.0 - d, self.re.1 + d, self.im.0 - d, self.im.1 + d)
    }
}

struct Walker<'a> {
    cfg: &'a TransmissionConfig,
    l: usize,
    pol: Polarization,
}

impl Walker<'_> {
    /// `(D/|D|, D'/D)`; only the phase is used, and tiny mantissas would
    /// underflow in complex division.
    fn eval(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let d = mode_determinant(self.cfg, self.l, self.pol, z)?;
        let a = d.mantissa.norm();
        if d.rel < CONTOUR_ZERO_TOL || a == 0.0 || !a.is_finite() || !d.log_derivative.is_finite() {
            return Err(Error::ContourThroughZero);
        }
        Ok((d.mantissa / a, d.log_derivative))
    }

    /// Change of `arg D` along `t ↦ path(t)`, `t ∈ [0, 1]`.
    ///
    /// Each step is sized from `|D'/D|` and accepted only when its observed
    /// phase change matches `Im ∫ D'/D dλ` by the trapezoid rule, so a full
    /// turn cannot hide inside a step.
    fn walk(&self, path: &dyn Fn(f64) -> Complex64) -> Result<f64> {
        let mut t = 0.0;
        let mut z = path(0.0);
        let (mut f, mut g) = self.eval(z)?;
        let mut total = 0.0;
        let speed = |t: f64| {
            let e = 1e-7;
            let (a, b) = (path((t - e).max(0.0)), path((t + e).min(1.0)));
            (b - a).norm() / ((t + e).min(1.0) - (t - e).max(0.0))
        };
        let mut last_dt = f64::INFINITY;
        while t < 1.0 {
            let rate = g.norm() * speed(t) + 1e-300;
            let mut dt = (PHASE_STEP / rate).min(2.0 * last_dt).min(1.0 - t);
            let mut halvings = 0;
            loop {
                let t2 = if dt >= 1.0 - t { 1.0 } else { t + dt };
                let tm = 0.5 * (t + t2);
                let (zm, z2) = (path(tm), path(t2));
                let (fm, gm) = self.eval(zm)?;
                let (f2, g2) = self.eval(z2)?;
                let (o1, o2) = ((fm / f).arg(), (f2 / fm).arg());
                let p1 = (0.5 * (g + gm) * (zm - z)).im;
                let p2 = (0.5 * (gm + g2) * (z2 - zm)).im;
                let whole = (f2 / f).arg();
                if (o1 - p1).abs() <= PREDICTION_TOL
                    && (o2 - p2).abs() <= PREDICTION_TOL
                    && (o1 + o2 - whole).abs() < 1e-6
                    && whole.abs() <= 2.0 * PHASE_STEP
                {
                    total += whole;
                    last_dt = t2 - t;
                    t = t2;
                    z = z2;
                    f = f2;
                    g = g2;
                    break;
                }
                halvings += 1;
                if halvings > MAX_HALVINGS {
                    return Err(Error::ContourThroughZero);
                }
                dt = 0.5 * (tm - t);
            }
        }
        Ok(total)
    }

    fn segment(&self, a: Complex64, b: Complex64) -> Result<f64> {
        self.walk(&|t| a + (b - a) * t)
    }

    fn rect_winding(&self, r: &Rect) -> Result<i64> {
        let c = r.corners();
        let mut total = 0.0;
        for k in 0..4 {
            total += self.segment(c[k], c[(k + 1) % 4])?;
        }
        to_count(total)
    }
}

fn to_count(total: f64) -> Result<i64> {
    let w = total / std::f64::consts::TAU;
    if (w - w.round()).abs() > 0.05 {
        return Err(Error::ContourThroughZero);
    }
    Ok(w.round() as i64)
}

/// Number of zeros of `D` inside `rect` by the argument principle. A contour
/// that meets a zero is moved outward by a small fraction of its size, at
/// most three times.
pub fn count_zeros(cfg: &TransmissionConfig, l: usize, pol: Polarization, rect: &Rect) -> Result<usize> {
    if rect.is_degenerate() {
        return Ok(0);
    }
    let w = Walker { cfg, l, pol };
    let size = (rect.re.1 - rect.re.0).min(rect.im.1 - rect.im.0);
    let mut r = *rect;
    for attempt in 0..=MAX_RETRIES {
        match w.rect_winding(&r) {
            Ok(n) if n >= 0 => return Ok(n as usize),
            Ok(_) => return Err(Error::ContourThroughZero),
            Err(Error::ContourThroughZero) if attempt < MAX_RETRIES => r = r.widen(1e-7 * size * (attempt + 1) as f64),
            Err(e) => return Err(e),
        }
    }
    Err(Error::ContourThroughZero)
}

/// Newton's method on `c₁Z₁ − c₂Z₂` with a central-difference derivative,
/// abandoned once the iterate leaves `box_`.
fn newton(cfg: &TransmissionConfig, l: usize, pol: Polarization, start: Complex64, box_: &Rect) -> Option<Complex64> {
    let f = |z: Complex64| impedance_gap(cfg, l, pol, z).ok();
    let mut z = start;
    for _ in 0..60 {
        let fz = f(z)?;
        let d = 1e-6 * z.norm().max(1.0);
        let df = (f(z + d)? - f(z - d)?) / (2.0 * d);
        if df.norm() == 0.0 {
            return None;
        }
        let step = fz / df;
        z -= step;
        if !z.is_finite() || !box_.contains(z) {
            return None;
        }
        if step.norm() <= 1e-13 * z.norm().max(1.0) {
            return Some(z);
        }
    }
    None
}

/// Zeros inside `rect`, located by recursive subdivision and polished by
/// Newton's method.
pub fn find_zeros(cfg: &TransmissionConfig, l: usize, pol: Polarization, rect: &Rect) -> Result<Vec<Complex64>> {
    let n = count_zeros(cfg, l, pol, rect)?;
    let mut out = Vec::new();
    locate(cfg, l, pol, rect, n, 0, &mut out)?;
    Ok(out)
}

fn locate(cfg: &TransmissionConfig, l: usize, pol: Polarization, rect: &Rect, n: usize, depth: usize, out: &mut Vec<Complex64>) -> Result<()> {
    if n == 0 {
        return Ok(());
    }
    let size = (rect.re.1 - rect.re.0).max(rect.im.1 - rect.im.0);
    if n == 1 || size < 1e-6 || depth > 40 {
        let centre = Complex64::new(0.5 * (rect.re.0 + rect.re.1), 0.5 * (rect.im.0 + rect.im.1));
        if let Some(z) = newton(cfg, l, pol, centre, &rect.widen(size)) {
            if rect.widen(1e-9 * size.max(1.0)).contains(z) {
                out.extend(std::iter::repeat_n(z, n));
                return Ok(());
            }
        }
        if size < 1e-6 || depth > 40 {
            out.extend(std::iter::repeat_n(centre, n));
            return Ok(());
        }
    }
    // Split slightly off-centre so that the new edges avoid symmetric zeros.
    let sr = rect.re.0 + 0.5137 * (rect.re.1 - rect.re.0);
    let si = rect.im.0 + 0.4871 * (rect.im.1 - rect.im.0);
    let quads = [
        Rect::new(rect.re.0, sr, rect.im.0, si),
        Rect::new(sr, rect.re.1, rect.im.0, si),
        Rect::new(sr, rect.re.1, si, rect.im.1),
        Rect::new(rect.re.0, sr, si, rect.im.1),
    ];
    for q in &quads {
        let m = count_zeros(cfg, l, pol, q)?;
        locate(cfg, l, pol, q, m, depth + 1, out)?;
    }
    Ok(())
}

/// Winding count over the region `{0 ≤ Re λ ≤ λ_max, lower_edge ≤ Im λ ≤ im_max}`
/// along its outer boundary.
fn region_count(cfg: &TransmissionConfig, l: usize, pol: Polarization, lambda_max: f64, c: f64) -> Result<i64> {
    let w = Walker { cfg, l, pol };
    let bottom = |t: f64| {
        let x = t * lambda_max;
        Complex64::new(x, cfg.lower_edge(c, x))
    };
    let mut total = w.walk(&bottom)?;
    let br = bottom(1.0);
    let tr = Complex64::new(lambda_max, cfg.im_max);
    let tl = Complex64::new(0.0, cfg.im_max);
    total += w.segment(br, tr)?;
    total += w.segment(tr, tl)?;
    total += w.segment(tl, bottom(0.0))?;
    to_count(total)
}

/// Count for one mode, nudging `C` by a relative `1e-9` when the lower edge
/// meets a zero.
fn region_count_retry(cfg: &TransmissionConfig, l: usize, pol: Polarization, lambda_max: f64, c: f64) -> Result<i64> {
    let mut cc = c;
    for attempt in 0..=MAX_RETRIES {
        match region_count(cfg, l, pol, lambda_max, cc) {
            Err(Error::ContourThroughZero) if attempt < MAX_RETRIES => cc = c * (1.0 + 1e-9 * (attempt + 1) as f64) + 1e-12,
            r => return r,
        }
    }
    Err(Error::ContourThroughZero)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeCount {
    pub l: usize,
    pub pol: Polarization,
    pub count: i64,
    /// Located zeros inside the region (only for modes with `count > 0`).
    pub zeros: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionReport {
    pub c: f64,
    pub exponent: f64,
    pub lambda_max: f64,
    pub within_hypotheses: bool,
    pub modes: Vec<ModeCount>,
}

impl RegionReport {
    pub fn total(&self) -> i64 {
        self.modes.iter().map(|m| m.count).sum()
    }

    pub fn violators(&self) -> impl Iterator<Item = (usize, Polarization, Complex64)> + '_ {
        self.modes.iter().flat_map(|m| m.zeros.iter().map(move |z| (m.l, m.pol, *z)))
    }

    pub fn label(&self) -> &'static str {
        if self.within_hypotheses {
            "within hypotheses"
        } else {
            "outside hypotheses (needs c₁/μ₁ = c₂/μ₂ and ε₁μ₁ ≠ ε₂μ₂)"
        }
    }
}

fn modes(cfg: &TransmissionConfig) -> Vec<(usize, Polarization)> {
    (1..=cfg.l_max).flat_map(|l| [(l, Polarization::Te), (l, Polarization::Tm)]).collect()
}

/// Zeros of one mode in the region, by tiles of unit width in `Re λ`.
fn region_zeros(cfg: &TransmissionConfig, l: usize, pol: Polarization, lambda_max: f64, c: f64) -> Result<Vec<Complex64>> {
    let mut out = Vec::new();
    let tiles = lambda_max.ceil() as usize;
    for k in 0..tiles {
        let a = k as f64 * lambda_max / tiles as f64;
        let b = (k + 1) as f64 * lambda_max / tiles as f64;
        let rect = Rect::new(a, b, cfg.lower_edge(c, a), cfg.im_max);
        for z in find_zeros(cfg, l, pol, &rect)? {
            if z.im >= cfg.lower_edge(c, z.re) && !out.iter().any(|w: &Complex64| (w - z).norm() < 1e-8) {
                out.push(z);
            }
        }
    }
    Ok(out)
}

/// Winding counts over `{0 < Re λ ≤ λ_max, C(Re λ + 1)^p ≤ Im λ ≤ im_max}`
/// for every mode `ℓ ≤ l_max` and both polarizations. Modes with a nonzero
/// count have their zeros located.
pub fn region_scan(cfg: &TransmissionConfig, lambda_max: f64, c: f64) -> Result<RegionReport> {
    cfg.validate()?;
    let results: Vec<Result<ModeCount>> = modes(cfg)
        .into_par_iter()
        .map(|(l, pol)| {
            let count = region_count_retry(cfg, l, pol, lambda_max, c)?;
            let zeros = if count != 0 { region_zeros(cfg, l, pol, lambda_max, c)? } else { Vec::new() };
            Ok(ModeCount { l, pol, count, zeros })
        })
        .collect();
    let modes = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(RegionReport { c, exponent: cfg.exponent, lambda_max, within_hypotheses: cfg.within_hypotheses(), modes })
}

fn total_count(cfg: &TransmissionConfig, lambda_max: f64, c: f64) -> Result<i64> {
    let counts: Vec<Result<i64>> = modes(cfg).into_par_iter().map(|(l, pol)| region_count_retry(cfg, l, pol, lambda_max, c)).collect();
    counts.into_iter().sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    /// Smallest `C` found with an empty region, up to `tol`.
    pub c: f64,
    /// Largest `C` tried with a nonempty region.
    pub c_below: f64,
    pub iterations: usize,
}

/// Bisection for the smallest `C` whose region is free of zeros.
pub fn calibrate_c(cfg: &TransmissionConfig, lambda_max: f64, tol: f64) -> Result<Calibration> {
    cfg.validate()?;
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut iterations = 0;
    while total_count(cfg, lambda_max, hi)? != 0 {
        lo = hi;
        hi *= 2.0;
        iterations += 1;
        if hi > cfg.im_max {
            return Err(Error::Config("no root-free region below im_max".into()));
        }
    }
    if total_count(cfg, lambda_max, lo)? == 0 {
        return Ok(Calibration { c: lo, c_below: lo, iterations });
    }
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        iterations += 1;
        if total_count(cfg, lambda_max, mid)? == 0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Calibration { c: hi, c_below: lo, iterations })
}

/// `T`, `T̃`, `T₁` and `w` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct TSymbols {
    pub t: C3Matrix,
    pub t_tilde: C3Matrix,
    pub t1: C3Matrix,
    pub w: Complex64,
}

/// `T = (c₁/μ₁)(ρ₁I + ρ₁⁻¹B) − (c₂/μ₂)(ρ₂I + ρ₂⁻¹B)`, which under
/// `c₁/μ₁ = c₂/μ₂` equals `(c₁/μ₁)(ρ₁ − ρ₂)(I − (ρ₁ρ₂)⁻¹B) = wT̃`; `T̃ = (ρ₁ + ρ₂)⁻¹(I − (ρ₁ρ₂)⁻¹B)`,
/// `T₁ = ⟨ξ'⟩⁻¹(ρ₁ + ρ₂)(I + (ρ₁ρ₂ − r₀)⁻¹B)` and
/// `w = z²(c₁/μ₁)(ε₁μ₁ − ε₂μ₂)`, with `⟨ξ'⟩ = (1 + r₀)^{1/2}`.
#[allow(clippy::too_many_arguments)]
pub fn t_symbols(z: Complex64, beta: &C3Vector, eps1: f64, mu1: f64, eps2: f64, mu2: f64, c1: f64, c2: f64) -> Result<TSymbols> {
    let (n1, n2) = (eps1 * mu1, eps2 * mu2);
    if (n1 - n2).abs() <= 1e-14 * n1.max(n2) {
        return Err(Error::CoincidentMedia);
    }
    let r0 = beta.dot(beta).re;
    let (p1, p2) = (rho(r0, z, n1)?, rho(r0, z, n2)?);
    let b = cal_b(beta);
    let id = C3Matrix::identity();
    let minus = id.sub(&b.scale((p1 * p2).inv()));
    let plus = id.add(&b.scale((p1 * p2 - r0).inv()));
    let k = c1 / mu1;
    let w = z * z * k * (n1 - n2);
    let side = |c: f64, p: Complex64| id.scale(p).add(&b.scale(p.inv())).scale(Complex64::new(c, 0.0));
    Ok(TSymbols {
        t: side(c1 / mu1, p1).sub(&side(c2 / mu2, p2)),
        t_tilde: minus.scale((p1 + p2).inv()),
        t1: plus.scale((p1 + p2) / (1.0 + r0).sqrt()),
        w,
    })
}

/// `T`, `T̃` and `T₁` as fields over `(x', ξ')`.
pub fn symbol_t(
    sp: SpectralParameter,
    chart: &SurfaceChart,
    media1: &MediaField,
    media2: &MediaField,
    c1: f64,
    c2: f64,
) -> (SymbolMatrix, SymbolMatrix, SymbolMatrix) {
    let make = |name: &'static str, pick: fn(TSymbols) -> C3Matrix| {
        let (chart, m1, m2) = (chart.clone(), media1.clone(), media2.clone());
        SymbolMatrix::new(name, true, true, move |x, xi| {
            let (g, e1, u1) = boundary_values(&chart, &m1, x)?;
            let (_, e2, u2) = boundary_values(&chart, &m2, x)?;
            Ok(pick(t_symbols(sp.z, &g.beta(xi), e1, u1, e2, u2, c1, c2)?))
        })
    };
    (make("T", |s| s.t), make("T~", |s| s.t_tilde), make("T1", |s| s.t1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{cutoff_eta, m_matrix, DEFAULT_C0};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cfg() -> TransmissionConfig {
        TransmissionConfig { l_max: 5, ..Default::default() }
    }

    #[test]
    fn identical_media_vanish() {
        let k = TransmissionConfig { eps1: 1.0, ..cfg() };
        for pol in [Polarization::Te, Polarization::Tm] {
            let d = mode_determinant(&k, 3, pol, c(4.0, 1.5)).unwrap();
            assert_eq!(d.mantissa, c(0.0, 0.0));
        }
        assert!(!k.within_hypotheses());
    }

    /// Reflection: the determinant inherits `Z(λ̄) = −conj Z(λ)`, so
    /// `D(λ̄) = ± conj D(λ)` with the sign fixed per polarization.
    #[test]
    fn reflection_symmetry() {
        for pol in [Polarization::Te, Polarization::Tm] {
            let a = mode_determinant(&cfg(), 2, pol, c(3.0, 1.0)).unwrap().value();
            let b = mode_determinant(&cfg(), 2, pol, c(3.0, -1.0)).unwrap().value();
            let d = mode_determinant(&cfg(), 2, pol, c(-3.0, 1.0)).unwrap().value();
            assert!((a + b.conj()).norm() <= 1e-12 * a.norm() || (a - b.conj()).norm() <= 1e-12 * a.norm());
            assert!((a - d.conj()).norm() <= 1e-12 * a.norm() || (a + d.conj()).norm() <= 1e-12 * a.norm());
        }
    }

    proptest! {
        #[test]
        fn two_paths_agree(l in 1usize..30, re in 0.3f64..50.0, im in 0.05f64..20.0) {
            for pol in [Polarization::Te, Polarization::Tm] {
                let a = mode_determinant(&cfg(), l, pol, c(re, im)).unwrap().value();
                let b = mode_determinant_direct(&cfg(), l, pol, c(re, im)).unwrap();
                prop_assert!((a - b).norm() <= 1e-10 * a.norm().max(b.norm()), "{a} {b}");
            }
        }
    }

    #[test]
    fn log_derivative_matches_difference_quotient() {
        let h = 1e-5;
        for l in [1usize, 4, 15] {
            for pol in [Polarization::Te, Polarization::Tm] {
                for z in [c(2.0, 0.5), c(7.3, 3.1), c(0.4, 0.1)] {
                    let d = mode_determinant(&cfg(), l, pol, z).unwrap();
                    let fd = |dz: Complex64| {
                        let v = |w| mode_determinant(&cfg(), l, pol, w).unwrap().value();
                        (v(z + dz) - v(z - dz)) / (2.0 * dz)
                    };
                    let g = (fd(c(h, 0.0)) + fd(c(0.0, h))) * 0.5 / d.value();
                    assert!((g - d.log_derivative).norm() < 1e-6 * g.norm().max(1.0), "l={l} {pol:?} {z}: {g} vs {}", d.log_derivative);
                }
            }
        }
    }

    #[test]
    fn empty_rectangle_and_deep_region() {
        let r = Rect::new(1.0, 1.0, 2.0, 5.0);
        assert_eq!(count_zeros(&cfg(), 2, Polarization::Te, &r).unwrap(), 0);
        let deep = Rect::new(1.0, 30.0, 20.0, 60.0);
        for l in 1..=5 {
            for pol in [Polarization::Te, Polarization::Tm] {
                assert_eq!(count_zeros(&cfg(), l, pol, &deep).unwrap(), 0);
            }
        }
    }

    #[test]
    fn winding_matches_located_zeros() {
        let k = cfg();
        for l in 1..=5 {
            for pol in [Polarization::Te, Polarization::Tm] {
                let rect = Rect::new(0.5, 30.0, 0.05, 30.0);
                let n = count_zeros(&k, l, pol, &rect).unwrap();
                let zs = find_zeros(&k, l, pol, &rect).unwrap();
                assert_eq!(zs.len(), n, "l={l} {pol:?}");
                for z in zs {
                    assert!(impedance_gap(&k, l, pol, z).unwrap().norm() < 1e-8, "{z}");
                }
            }
        }
    }

    #[test]
    fn known_zero_is_located() {
        // A zero found independently (arbitrary-precision Newton) for TE, ℓ = 1.
        let zs = find_zeros(&cfg(), 1, Polarization::Te, &Rect::new(4.0, 5.0, 0.1, 2.0)).unwrap();
        assert_eq!(zs.len(), 1);
        assert!((zs[0] - c(4.5478, 0.651)).norm() < 1e-3, "{}", zs[0]);
    }

    #[test]
    fn upper_strip_has_zeros() {
        let k = TransmissionConfig { l_max: 3, ..cfg() };
        let rep = region_scan(&k, 20.0, 0.0).unwrap();
        assert!(rep.total() > 0);
        assert_eq!(rep.total() as usize, rep.violators().count());
        assert!(rep.within_hypotheses);
    }

    #[test]
    fn outside_hypotheses_is_labelled() {
        let k = TransmissionConfig { c1: 2.0, ..cfg() };
        assert!(!k.within_hypotheses());
        let k = TransmissionConfig { eps1: 1.0, mu1: 1.0, eps2: 1.0, mu2: 1.0, ..cfg() };
        assert!(!k.within_hypotheses());
    }

    #[test]
    fn inversion_identity_and_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let z = c(rng.gen_range(0.2..1.0), rng.gen_range(0.01..1.0));
            let beta = C3Vector::from_real([rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), 0.0]);
            let s = t_symbols(z, &beta, 4.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
            let r0 = beta.dot(&beta).re;
            let (p1, p2) = (rho(r0, z, 4.0).unwrap(), rho(r0, z, 1.0).unwrap());
            let plus = C3Matrix::identity().add(&cal_b(&beta).scale((p1 * p2 - r0).inv()));
            let minus = C3Matrix::identity().sub(&cal_b(&beta).scale((p1 * p2).inv()));
            assert!(plus.matmul(&minus).sub(&C3Matrix::identity()).max_abs() <= 1e-12);
            let prod = s.t1.matmul(&s.t_tilde).sub(&C3Matrix::identity().scale(c((1.0 + r0).sqrt().recip(), 0.0)));
            assert!(prod.max_abs() <= 1e-12);
            assert!(s.t.sub(&s.t_tilde.scale(s.w)).max_abs() <= 1e-12 * s.t.max_abs().max(1.0));
            // T is z(c₁m₁ − c₂m₂).
            let diff = m_matrix(z, &beta, 4.0, 1.0).unwrap().sub(&m_matrix(z, &beta, 1.0, 1.0).unwrap()).scale(z);
            assert!(s.t.sub(&diff).max_abs() <= 1e-12 * s.t.max_abs().max(1.0));
        }
    }

    #[test]
    fn zero_covector_symbol() {
        let z = c(1.0, 0.3);
        let s = t_symbols(z, &C3Vector::zeros(), 4.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let expect = (z * 2.0 + z).inv();
        assert!(s.t_tilde.sub(&C3Matrix::identity().scale(expect)).max_abs() < 1e-15);
        assert!(matches!(t_symbols(z, &C3Vector::zeros(), 2.0, 1.0, 1.0, 2.0, 1.0, 1.0), Err(Error::CoincidentMedia)));
    }

    /// `|(r₀ − ρ₁ρ₂)⁻¹|` is `O(θ⁻¹)` where `η = 1` and `O(r₀⁻¹)` beyond.
    #[test]
    fn resolvent_decay() {
        let mut worst_near: f64 = 0.0;
        let mut worst_far: f64 = 0.0;
        for i in 0..40 {
            let theta = 10f64.powf(-3.0 + 3.0 * i as f64 / 39.0);
            let z = c(1.0, theta);
            for j in 0..200 {
                let r0 = 10f64.powf(-2.0 + 6.0 * j as f64 / 199.0);
                let (p1, p2) = (rho(r0, z, 4.0).unwrap(), rho(r0, z, 1.0).unwrap());
                let v = (r0 - p1 * p2).inv().norm();
                if cutoff_eta(r0, DEFAULT_C0) > 0.0 {
                    worst_near = worst_near.max(v * theta);
                } else {
                    worst_far = worst_far.max(v * r0);
                }
            }
        }
        assert!(worst_near < 10.0 && worst_far < 10.0, "{worst_near} {worst_far}");
    }
}
