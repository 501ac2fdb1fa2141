//! Riccati-Bessel functions at complex argument and the exact per-mode
//! impedances of the Maxwell problem on the ball with constant media.
//!
//! Impedance convention: for a mode with boundary datum `f = ν × E` and inward
//! normal `ν`, the value `Z` satisfies `ν × H = Z (ν × f)` on the mode's
//! tangential subspace. This is the convention of the boundary symbol `m`,
//! which acts on `ν × f`; in the flat limit `Z_TE → ρ/(zμ)` and
//! `Z_TM → zε/ρ`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{MediaField, SurfaceChart};
use crate::numerics::{C3Matrix, C3Vector};
use crate::spectral::{m_matrix, split_lambda};
use crate::transport::{build_table, Gauge};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Resonance threshold relative to `|ψ| + |ψ'|`.
pub const RESONANCE_TOL: f64 = 1e-12;

/// Below this `|x|` the power series is used directly.
const SERIES_RADIUS: f64 = 0.5;

/// Relative mismatch between the upward and downward evaluations above
/// which the series is used instead.
const RECURRENCE_TOL: f64 = 1e-8;

/// Largest `|x|` at which the series is trusted as a fallback; beyond it the
/// cancellation in the alternating sum exceeds the recurrence error.
const SERIES_FALLBACK_RADIUS: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarization {
    Te,
    Tm,
}

impl Polarization {
    pub fn label(&self) -> &'static str {
        match self {
            Polarization::Te => "TE",
            Polarization::Tm => "TM",
        }
    }
}

/// How a value was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Series,
    Downward,
    /// Downward, confirmed by the upward recurrence.
    Checked,
    /// The two recurrences disagreed and the series was used.
    Fallback,
}

/// `(ψ, ψ') e^{-scale}`; the true pair is recovered by [`Scaled::unscaled`].
/// The exponent starts at `|Im x|` and absorbs any further growth or decay
/// met along the recurrence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub psi: Complex64,
    pub dpsi: Complex64,
    pub scale: f64,
    pub method: Method,
}

impl Scaled {
    pub fn unscaled(&self) -> (Complex64, Complex64) {
        let s = self.scale.exp();
        (self.psi * s, self.dpsi * s)
    }

    /// `ψ'/ψ`, independent of the scaling.
    pub fn log_derivative(&self) -> Complex64 {
        self.dpsi / self.psi
    }
}

/// `sin x e^{-|Im x|}` and `cos x e^{-|Im x|}`.
fn scaled_trig(x: Complex64) -> (Complex64, Complex64) {
    let (a, b) = (x.re, x.im);
    let e = (-2.0 * b.abs()).exp();
    let ch = 0.5 * (1.0 + e);
    let sh = 0.5 * (1.0 - e) * b.signum();
    (Complex64::new(a.sin() * ch, a.cos() * sh), Complex64::new(a.cos() * ch, -a.sin() * sh))
}

/// `ψ_ℓ(x) = x^{ℓ+1} Σₙ (−x²/2)ⁿ / (n! (2ℓ+2n+1)!!)` and its derivative,
/// summed until the terms stop contributing.
pub fn riccati_series(l: usize, x: Complex64) -> (Complex64, Complex64) {
    let mut dfact = 1.0;
    for k in 0..=l {
        dfact *= (2 * k + 1) as f64;
    }
    let w = -x * x * 0.5;
    let mut term = Complex64::new(1.0 / dfact, 0.0);
    let (mut s, mut ds) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for n in 0..2000 {
        let p = (l + 1 + 2 * n) as f64;
        s += term;
        ds += term * p;
        let next = term * w / ((n + 1) as f64 * (2 * (l + n) + 3) as f64);
        if next.norm() <= 1e-18 * s.norm() && n > 2 {
            break;
        }
        term = next;
    }
    let xl = x.powu(l as u32);
    (s * xl * x, ds * xl)
}

/// Start index for the downward log-derivative recurrence.
fn start_index(l: usize, x: Complex64) -> usize {
    let a = x.norm();
    (l as f64).max(a + 4.0 * a.cbrt() + 2.0) as usize + 16
}

/// Returns `(ψ, ψ')e^{-s}` and `s`.
fn downward(l: usize, x: Complex64) -> (Complex64, Complex64, f64) {
    let n0 = start_index(l, x);
    let mut d = vec![Complex64::new(0.0, 0.0); n0 + 1];
    for n in (1..=n0).rev() {
        let q = n as f64 / x;
        d[n - 1] = q - (d[n] + q).inv();
    }
    let (mut psi, _) = scaled_trig(x);
    let mut scale = x.im.abs();
    for (n, dn) in d.iter().enumerate().take(l + 1).skip(1) {
        psi /= dn + n as f64 / x;
        let a = psi.norm();
        if !(1e-100..=1e100).contains(&a) {
            scale += a.ln();
            psi /= a;
        }
    }
    (psi, d[l] * psi, scale)
}

fn upward(l: usize, x: Complex64) -> (Complex64, Complex64) {
    let (s, c) = scaled_trig(x);
    let (mut prev, mut cur) = (c, s);
    for n in 0..l {
        let next = cur * ((2 * n + 1) as f64) / x - prev;
        prev = cur;
        cur = next;
    }
    (cur, prev - cur * (l as f64) / x)
}

fn rel_gap(a: (Complex64, Complex64), b: (Complex64, Complex64)) -> f64 {
    let scale = a.0.norm() + a.1.norm();
    ((a.0 - b.0).norm() + (a.1 - b.1).norm()) / scale
}

/// `ψ_ℓ(x) = x j_ℓ(x)` and `ψ'_ℓ(x)` in scaled form.
///
/// The log-derivative `ψ'/ψ` runs downward from an index above
/// `max(ℓ, |x| + 4|x|^{1/3})` and `ψ` is rebuilt from `ψ₀ = sin x` through
/// the ratios. For `|x| > ℓ` the upward recurrence on `ψ` is also stable
/// when `|Im x|` is moderate (`|Im x| ≲ 10` in practice), and the two are
/// compared there; a mismatch switches to the power series when `|x| ≤ 20`.
/// With larger `|Im x|` the upward values lose accuracy and the downward
/// result is kept.
pub fn riccati_bessel(l: usize, x: Complex64) -> Result<Scaled> {
    if x.norm() == 0.0 {
        return Err(Error::ZeroFrequency);
    }
    let scale = x.im.abs();
    if x.norm() < SERIES_RADIUS {
        let (p, dp) = riccati_series(l, x);
        let s = (-scale).exp();
        return Ok(Scaled { psi: p * s, dpsi: dp * s, scale, method: Method::Series });
    }
    let (psi, dpsi, s_down) = downward(l, x);
    let down = Scaled { psi, dpsi, scale: s_down, method: Method::Downward };
    if x.norm() <= l as f64 {
        return Ok(down);
    }
    let up = upward(l, x);
    let shift = (scale - s_down).exp();
    if rel_gap((psi, dpsi), (up.0 * shift, up.1 * shift)) <= RECURRENCE_TOL {
        return Ok(Scaled { method: Method::Checked, ..down });
    }
    if x.norm() > SERIES_FALLBACK_RADIUS {
        return Ok(down);
    }
    let (p, dp) = riccati_series(l, x);
    let s = (-scale).exp();
    Ok(Scaled { psi: p * s, dpsi: dp * s, scale, method: Method::Fallback })
}

/// `χ_ℓ(x) = x y_ℓ(x)` and `χ'_ℓ(x)` by upward recurrence, scaled by
/// `e^{-|Im x|}`. With this sign `ψχ' − ψ'χ = 1`.
pub fn riccati_bessel_second(l: usize, x: Complex64) -> Result<Scaled> {
    if x.norm() == 0.0 {
        return Err(Error::ZeroFrequency);
    }
    let (s, c) = scaled_trig(x);
    let (mut prev, mut cur) = (s, -c);
    for n in 0..l {
        let next = cur * ((2 * n + 1) as f64) / x - prev;
        prev = cur;
        cur = next;
    }
    Ok(Scaled { psi: cur, dpsi: prev - cur * (l as f64) / x, scale: x.im.abs(), method: Method::Downward })
}

/// Exact impedance of one vector spherical harmonic mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeImpedance {
    pub l: usize,
    pub pol: Polarization,
    pub lambda: Complex64,
    pub eps: f64,
    pub mu: f64,
    pub radius: f64,
    pub value: Complex64,
}

/// `Z_TE = i√(ε/μ) ψ'_ℓ(kR)/ψ_ℓ(kR)` and `Z_TM = −i√(ε/μ) ψ_ℓ(kR)/ψ'_ℓ(kR)`
/// with `k = λ√(εμ)`.
pub fn exact_mode_impedance(l: usize, lambda: Complex64, eps: f64, mu: f64, radius: f64, pol: Polarization) -> Result<ModeImpedance> {
    if l == 0 {
        return Err(Error::Config("mode index must be at least 1".into()));
    }
    let x = lambda * (eps * mu).sqrt() * radius;
    let rb = riccati_bessel(l, x)?;
    let size = rb.psi.norm() + rb.dpsi.norm();
    let c = (eps / mu).sqrt();
    let value = match pol {
        Polarization::Te => {
            if rb.psi.norm() < RESONANCE_TOL * size {
                return Err(Error::InteriorResonance(rb.psi.norm() / size));
            }
            I * c * rb.dpsi / rb.psi
        }
        Polarization::Tm => {
            if rb.dpsi.norm() < RESONANCE_TOL * size {
                return Err(Error::InteriorResonance(rb.dpsi.norm() / size));
            }
            -I * c * rb.psi / rb.dpsi
        }
    };
    Ok(ModeImpedance { l, pol, lambda, eps, mu, radius, value })
}

/// `(u⊥ᵀ M u⊥, ûᵀ M û)` with `û = β/|β|` and `u⊥ = ν × û`: the TE and TM
/// eigenvalues of a symbol on the tangent plane.
pub fn mode_eigenvalues(mat: &C3Matrix, nu: &C3Vector, beta: &C3Vector) -> (Complex64, Complex64) {
    let ub = beta.scale(Complex64::new(1.0 / beta.norm(), 0.0));
    let up = nu.cross(&ub);
    (up.dot(&mat.apply(&up)), ub.dot(&mat.apply(&ub)))
}

/// One row of the comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct DtnRow {
    pub l: usize,
    pub pol: Polarization,
    pub lambda: Complex64,
    /// `None` when the mode sits on an interior resonance.
    pub exact: Option<Complex64>,
    pub order0: Complex64,
    pub order1: Complex64,
    pub err_order0: f64,
    pub err_order1: f64,
}

/// Compare exact impedances with the symbol eigenvalues at
/// `r₀ = h²ℓ(ℓ+1)/R²`.
///
/// Order 0 is `m`; order 1 is `m + h ι_ν B₁,₀`, the boundary trace through
/// level one of the parametrix, evaluated on the equator of the sphere.
pub fn dtn_compare(ls: &[usize], lambda: Complex64, eps: f64, mu: f64, radius: f64) -> Result<Vec<DtnRow>> {
    let sp = split_lambda(lambda)?;
    let chart = SurfaceChart::Sphere { radius };
    let media = MediaField::constant(eps, mu);
    let x0 = [std::f64::consts::FRAC_PI_2, 0.0];
    let mut rows = Vec::with_capacity(2 * ls.len());
    for &l in ls {
        let r0 = sp.h * sp.h * (l * (l + 1)) as f64 / (radius * radius);
        let xi = [0.0, radius * r0.sqrt()];
        let at = build_table(&chart, &media, &sp, x0, xi, 2, Gauge::Compatible)?;
        let beta = at.geom.beta(xi);
        let nu = at.geom.nu0();
        let m = m_matrix(sp.z, &beta, eps, mu)?;
        let (m_te, m_tm) = mode_eigenvalues(&m, &nu, &beta);
        let (t_te, t_tm) = mode_eigenvalues(&at.truncated_symbol(sp.h, 1), &nu, &beta);
        for (pol, o0, o1) in [(Polarization::Te, m_te, t_te), (Polarization::Tm, m_tm, t_tm)] {
            let exact = match exact_mode_impedance(l, lambda, eps, mu, radius, pol) {
                Ok(z) => Some(z.value),
                Err(Error::InteriorResonance(_)) => None,
                Err(e) => return Err(e),
            };
            let (e0, e1) = match exact {
                Some(v) => ((o0 - v).norm(), (o1 - v).norm()),
                None => (f64::NAN, f64::NAN),
            };
            rows.push(DtnRow { l, pol, lambda, exact, order0: o0, order1: o1, err_order0: e0, err_order1: e1 });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1e-300)
    }

    #[test]
    fn closed_forms() {
        for x in [c(0.3, 0.0), c(2.0, 1.0), c(7.5, -3.0), c(0.2, 0.4), c(40.0, 2.0)] {
            let (p0, d0) = riccati_bessel(0, x).unwrap().unscaled();
            assert!(close(p0, x.sin(), 1e-13) && close(d0, x.cos(), 1e-13));
            let (p1, _) = riccati_bessel(1, x).unwrap().unscaled();
            assert!(close(p1, x.sin() / x - x.cos(), 1e-12), "{x}");
        }
    }

    #[test]
    fn matches_series_at_complex_argument() {
        let x = c(3.0, 4.0);
        let rb = riccati_bessel(10, x).unwrap();
        let (p, dp) = rb.unscaled();
        let (sp, sdp) = riccati_series(10, x);
        assert!(close(p, sp, 1e-12) && close(dp, sdp, 1e-12));
    }

    #[test]
    fn ode_residual() {
        for (l, x) in [(3usize, c(2.0, 0.5)), (12, c(5.0, -1.0)), (1, c(30.0, 3.0)), (40, c(10.0, 10.0))] {
            let d = 1e-3;
            let f = |t: Complex64| riccati_bessel(l, t).unwrap().unscaled().1;
            let p = riccati_bessel(l, x).unwrap().unscaled().0;
            let second = (f(x - 2.0 * d) - 8.0 * f(x - d) + 8.0 * f(x + d) - f(x + 2.0 * d)) / (12.0 * d);
            let ll = (l * (l + 1)) as f64;
            let res = second + (1.0 - ll / (x * x)) * p;
            assert!(res.norm() <= 1e-8 * p.norm(), "l={l} x={x}: {}", res.norm() / p.norm());
        }
    }

    #[test]
    fn wronskian_over_decades() {
        for l in [0usize, 1, 5, 20] {
            for r in [0.1, 0.7, 3.0, 25.0, 200.0] {
                for im in [0.0f64, 0.5, 2.0] {
                    let x = c(r, im.min(r));
                    let a = riccati_bessel(l, x).unwrap();
                    let b = riccati_bessel_second(l, x).unwrap();
                    let w = a.psi * b.dpsi - a.dpsi * b.psi;
                    let expect = (-a.scale - b.scale).exp();
                    assert!((w - expect).norm() <= 1e-9 * expect, "l={l} x={x}: {w} vs {expect}");
                }
            }
        }
    }

    #[test]
    fn large_imaginary_argument_stays_finite() {
        let rb = riccati_bessel(5, c(3.0, 900.0)).unwrap();
        assert!(rb.psi.is_finite() && rb.dpsi.is_finite());
        assert_eq!(rb.scale, 900.0);
        assert!((rb.log_derivative() - c(0.0, -1.0)).norm() < 1e-2);
    }

    #[test]
    fn upward_agreement_is_checked() {
        assert_eq!(riccati_bessel(3, c(20.0, 1.0)).unwrap().method, Method::Checked);
        assert_eq!(riccati_bessel(30, c(2.0, 1.0)).unwrap().method, Method::Downward);
        assert_eq!(riccati_bessel(3, c(0.1, 0.1)).unwrap().method, Method::Series);
    }

    /// `u'' + (k² − ℓ(ℓ+1)/r²) u = 0` by RK4 in `t = ln r`.
    fn radial_log_derivative(l: usize, k: Complex64, radius: f64) -> Complex64 {
        let ll = (l * (l + 1)) as f64;
        let r_start: f64 = 1e-3 * radius;
        let corr = |r: f64| 1.0 - k * k * r * r / (2.0 * (2 * l + 3) as f64);
        let mut u = corr(r_start) * r_start.powi(l as i32 + 1);
        let mut v = (l + 1) as f64 * r_start.powi(l as i32) * corr(r_start)
            - k * k * r_start.powi(l as i32 + 2) / (2 * l + 3) as f64;
        let (t0, t1) = (r_start.ln(), radius.ln());
        let steps = 20000;
        let dt = (t1 - t0) / steps as f64;
        let rhs = |t: f64, u: Complex64, v: Complex64| {
            let r = t.exp();
            (r * v, (ll / r - k * k * r) * u)
        };
        for s in 0..steps {
            let t = t0 + s as f64 * dt;
            let (a1, b1) = rhs(t, u, v);
            let (a2, b2) = rhs(t + dt / 2.0, u + a1 * dt / 2.0, v + b1 * dt / 2.0);
            let (a3, b3) = rhs(t + dt / 2.0, u + a2 * dt / 2.0, v + b2 * dt / 2.0);
            let (a4, b4) = rhs(t + dt, u + a3 * dt, v + b3 * dt);
            u += (a1 + 2.0 * a2 + 2.0 * a3 + a4) * dt / 6.0;
            v += (b1 + 2.0 * b2 + 2.0 * b3 + b4) * dt / 6.0;
        }
        v / u
    }

    #[test]
    fn radial_ode_oracle() {
        for (l, lambda, eps, mu, radius) in [(1usize, c(0.0, 5.0), 1.0f64, 1.0, 1.0), (4, c(3.0, 1.0), 2.0, 1.5, 1.3)] {
            let k = lambda * (eps * mu).sqrt();
            let d = radial_log_derivative(l, k, radius);
            let cst = (eps / mu).sqrt();
            let te = I * cst * d / k;
            let tm = -I * cst * k / d;
            let z_te = exact_mode_impedance(l, lambda, eps, mu, radius, Polarization::Te).unwrap().value;
            let z_tm = exact_mode_impedance(l, lambda, eps, mu, radius, Polarization::Tm).unwrap().value;
            assert!(close(z_te, te, 1e-9), "{z_te} vs {te}");
            assert!(close(z_tm, tm, 1e-9), "{z_tm} vs {tm}");
        }
    }

    #[test]
    fn flat_limit() {
        let (eps, mu) = (2.0, 1.5);
        let z = c(1.0, 0.4);
        let h = 1e-2;
        for radius in [1e1, 1e2, 1e3] {
            let lambda = z / h;
            let l = (0.8 * radius / h).round() as usize;
            let r0 = h * h * (l * (l + 1)) as f64 / (radius * radius);
            let rho = crate::spectral::rho(r0, z, eps * mu).unwrap();
            let te = exact_mode_impedance(l, lambda, eps, mu, radius, Polarization::Te).unwrap().value;
            let tm = exact_mode_impedance(l, lambda, eps, mu, radius, Polarization::Tm).unwrap().value;
            let gap = (te - rho / (z * mu)).norm() + (tm - z * eps / rho).norm();
            assert!(gap < 10.0 / radius, "R={radius}: {gap}");
        }
    }

    #[test]
    fn resonance_is_reported() {
        assert!(exact_mode_impedance(1, c(0.0, 1.0), 1.0, 1.0, 1.0, Polarization::Te).is_ok());
        // First zero of ψ₁: tan x = x.
        let mut t: f64 = 4.4934;
        for _ in 0..50 {
            t -= (t.tan() - t) / (1.0 / t.cos().powi(2) - 1.0);
        }
        let r = exact_mode_impedance(1, c(t, 0.0), 1.0, 1.0, 1.0, Polarization::Te);
        assert!(matches!(r, Err(Error::InteriorResonance(_))));
    }

    /// `ψ_ℓ` has real Taylor coefficients, and the factor `i` in front of
    /// `λ` turns the reflection into `Z(λ̄) = −conj Z(λ)`, equivalently
    /// `Z(−λ̄) = conj Z(λ)`.
    #[test]
    fn conjugation_symmetry() {
        for pol in [Polarization::Te, Polarization::Tm] {
            let a = exact_mode_impedance(2, c(3.0, 1.0), 1.0, 1.0, 1.0, pol).unwrap().value;
            let b = exact_mode_impedance(2, c(3.0, -1.0), 1.0, 1.0, 1.0, pol).unwrap().value;
            let d = exact_mode_impedance(2, c(-3.0, 1.0), 1.0, 1.0, 1.0, pol).unwrap().value;
            assert!((a + b.conj()).norm() <= 1e-12 * a.norm());
            assert!((a - d.conj()).norm() <= 1e-12 * a.norm());
        }
    }

    proptest! {
        #[test]
        fn impedance_conjugation(l in 1usize..30, re in 0.5f64..40.0, im in 0.2f64..10.0, eps in 0.5f64..4.0, mu in 0.5f64..4.0) {
            for pol in [Polarization::Te, Polarization::Tm] {
                let a = exact_mode_impedance(l, c(re, im), eps, mu, 1.0, pol).unwrap().value;
                let b = exact_mode_impedance(l, c(re, -im), eps, mu, 1.0, pol).unwrap().value;
                prop_assert!((a + b.conj()).norm() <= 1e-10 * a.norm());
            }
        }

        #[test]
        fn wronskian_random(l in 0usize..25, r in 0.1f64..150.0, im in -3.0f64..3.0) {
            let x = c(r, im);
            let a = riccati_bessel(l, x).unwrap();
            let b = riccati_bessel_second(l, x).unwrap();
            let w = a.psi * b.dpsi - a.dpsi * b.psi;
            let expect = (-a.scale - b.scale).exp();
            prop_assert!((w - expect).norm() <= 1e-9 * expect);
        }
    }

    #[test]
    fn dtn_orders_improve() {
        let (eps, mu, radius) = (1.0, 1.0, 1.0);
        let z = c(1.0, 0.5);
        let mut prev: Option<(f64, f64)> = None;
        for h in [1.0f64 / 40.0, 1.0 / 80.0, 1.0 / 160.0] {
            let l = (0.5 / h).round() as usize;
            let rows = dtn_compare(&[l], z / h, eps, mu, radius).unwrap();
            let e0 = rows.iter().map(|r| r.err_order0).fold(0.0, f64::max);
            let e1 = rows.iter().map(|r| r.err_order1).fold(0.0, f64::max);
            assert!(e1 < e0);
            if let Some((p0, p1)) = prev {
                assert!((p0 / e0).log2() > 0.9 && (p1 / e1).log2() > 1.7, "{p0} {e0} {p1} {e1}");
            }
            prev = Some((e0, e1));
        }
    }
}
