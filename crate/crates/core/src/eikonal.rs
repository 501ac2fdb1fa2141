//! The complex phase `φ = Σ x₁ᵏφₖ(x')` solving `⟨γ∇φ, γ∇φ⟩ = z²εμ` to a
//! prescribed order in `x₁`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{GammaSeries, MediaField, MediaSeries};
use crate::numerics::{C3Matrix, C3Vector, Jet, V3};
use crate::spectral::SpectralParameter;

/// Default size of the retained normal layer.
pub const DEFAULT_DELTA: f64 = 0.1;

/// Extra `x₁` orders summed when evaluating the residual tail.
pub(crate) const TAIL_TERMS: usize = 80;

const MAX_HALVINGS: u32 = 40;

/// Phase coefficients at a base point `(x', ξ')`.
#[derive(Debug, Clone)]
pub struct PhaseSeries {
    pub x0: [f64; 2],
    pub xi: [f64; 2],
    pub sp: SpectralParameter,
    /// Highest stored coefficient; the eikonal equation holds through `x₁ⁿ⁻¹`.
    pub n: usize,
    /// `φ₀..φₙ` as `x'`-jets. `φ₀ = −⟨x' − x'₀, ξ'⟩`.
    pub phi: Vec<Jet>,
    /// `eₖ = ((k+1)φₖ₊₁, ∂₂φₖ, ∂₃φₖ)` for `k = 0..=n` (with `φₙ₊₁ = 0`).
    pub e: Vec<V3<Jet>>,
    /// `ψₖ = Σ γₗ eₖ₋ₗ`, the `x₁ᵏ` coefficient of `γ∇φ`, for `k = 0..n`.
    pub psi: Vec<V3<Jet>>,
    pub media: MediaSeries,
    pub rho: Complex64,
    pub delta: f64,
    /// How many times `δ` was halved to restore `Im φ ≥ x₁ Im ρ / 2`.
    pub delta_halvings: u32,
    gamma_vals: Vec<C3Matrix>,
    eps_mu_vals: Vec<Complex64>,
}

/// Solve the eikonal recursion for `φ₀..φₙ` at the base point of `geom`.
pub fn eikonal_coeffs(
    geom: &GammaSeries,
    media: &MediaField,
    sp: &SpectralParameter,
    xi: [f64; 2],
    n: usize,
) -> Result<PhaseSeries> {
    if n < 1 || geom.gamma.len() < n {
        return Err(Error::OrderBudgetExceeded { requested: n, budget: geom.gamma.len() });
    }
    let ms = geom.media_series(media, n + 1)?;
    let em = geom.media_values(media, n + TAIL_TERMS + 1)?[2].clone();
    phase_from_series(geom, ms, em, sp, xi, n)
}

/// As [`eikonal_coeffs`], with the media given by their `x₁`-series (jets)
/// and the base-point values of `εμ` used for the residual tail.
pub fn phase_from_series(
    geom: &GammaSeries,
    ms: MediaSeries,
    eps_mu_vals: Vec<Complex64>,
    sp: &SpectralParameter,
    xi: [f64; 2],
    n: usize,
) -> Result<PhaseSeries> {
    if n < 1 || geom.gamma.len() < n || ms.eps_mu.len() < n {
        return Err(Error::OrderBudgetExceeded { requested: n, budget: geom.gamma.len() });
    }
    let lay = &geom.layout;
    let c = |v: f64| Complex64::new(v, 0.0);
    let z2 = sp.z * sp.z;

    let x2 = Jet::variable(lay, 0, 0.0).truncate(geom.order());
    let x3 = Jet::variable(lay, 1, 0.0).truncate(geom.order());
    let phi0 = (x2.scale(c(xi[0])) + x3.scale(c(xi[1]))).scale(c(-1.0));
    let beta = geom.beta_jet(xi);
    let rho = ms.eps_mu[0].scale(z2).sub_ref(&beta.dot(&beta)).sqrt_upper()?;
    if rho.value().norm() < 1e-14 {
        return Err(Error::DegenerateRho(rho.value().norm()));
    }
    let two_rho_inv = rho.scale(c(2.0)).recip()?;
    let nu = &geom.nu;
    let gamma = &geom.gamma;

    let grad = |f: &Jet| -> Result<[Jet; 2]> {
        let g = |v| {
            f.derivative(v)
                .map_err(|_| Error::OrderBudgetExceeded { requested: n, budget: geom.order() })
        };
        Ok([g(0)?, g(1)?])
    };

    let mut phi = vec![phi0, rho.clone()];
    let mut e: Vec<V3<Jet>> = Vec::with_capacity(n + 1);
    let mut psi: Vec<V3<Jet>> = Vec::with_capacity(n);
    for k in 0..n {
        // ê_k: e_k without its φ_{k+1} entry.
        let [d2, d3] = grad(&phi[k])?;
        let hat = V3([d2.zero_like(), d2, d3]);
        let mut psi_hat = gamma[0].apply(&hat);
        for l in 1..=k {
            psi_hat = psi_hat + gamma[l].apply(&e[k - l]);
        }
        if k >= 1 {
            let mut s = psi[0].dot(&psi_hat).scale(c(2.0));
            for l in 1..k {
                s = s + psi[l].dot(&psi[k - l]);
            }
            let num = ms.eps_mu[k].scale(z2).sub_ref(&s);
            phi.push(num.mul_ref(&two_rho_inv).scale(c(1.0 / (k as f64 + 1.0))));
        }
        let lead = phi[k + 1].scale(c(k as f64 + 1.0));
        let mut ek = hat;
        ek.0[0] = lead.clone();
        psi.push(psi_hat + nu.mul_scalar(&lead));
        e.push(ek);
    }
    let [d2, d3] = grad(&phi[n])?;
    e.push(V3([d2.zero_like(), d2, d3]));

    let mut ps = PhaseSeries {
        x0: geom.x0,
        xi,
        sp: *sp,
        n,
        phi,
        e,
        psi,
        media: ms,
        rho: rho.value(),
        delta: DEFAULT_DELTA,
        delta_halvings: 0,
        gamma_vals: geom.gamma_values(n + TAIL_TERMS + 1),
        eps_mu_vals,
    };
    ps.enforce_positivity();
    Ok(ps)
}

impl PhaseSeries {
    /// Upper end `2δ·min(1, |ρ|³)` of the retained normal layer.
    pub fn region_limit(&self) -> f64 {
        2.0 * self.delta * self.rho.norm().powi(3).min(1.0)
    }

    /// `φ(x₁)` at the base point (`φ₀` vanishes there).
    pub fn phase_at(&self, x1: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for p in self.phi.iter().rev() {
            acc = acc * x1 + p.value();
        }
        acc
    }

    /// Smallest value of `Im φ − x₁ Im ρ / 2` over sampled points of the layer.
    pub fn positivity_margin(&self) -> f64 {
        let lim = self.region_limit();
        (1..=128)
            .map(|i| {
                let x1 = lim * i as f64 / 128.0;
                self.phase_at(x1).im - 0.5 * x1 * self.rho.im
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn enforce_positivity(&mut self) {
        while self.positivity_margin() < 0.0 && self.delta_halvings < MAX_HALVINGS {
            self.delta *= 0.5;
            self.delta_halvings += 1;
        }
    }

    /// Values at the base point of `eₖ`, `k = 0..=n`.
    pub fn e_values(&self) -> Vec<C3Vector> {
        self.e.iter().map(|v| v.values()).collect()
    }

    /// Largest `|coefficient of x₁ᵏ|` in `⟨γ∇φ, γ∇φ⟩ − z²εμ` for `k < n`,
    /// taken over all `x'`-jet coefficients.
    pub fn coefficient_defect(&self) -> f64 {
        let z2 = self.sp.z * self.sp.z;
        let mut worst: f64 = 0.0;
        for k in 0..self.n {
            let mut s = self.media.eps_mu[k].scale(-z2);
            for l in 0..=k {
                s = s + self.psi[l].dot(&self.psi[k - l]);
            }
            worst = worst.max(s.max_abs_upto(s.order()));
        }
        worst
    }
}

/// `⟨γ∇φ, γ∇φ⟩ − z²εμ` at `(x₁, x'₀)`.
///
/// Coefficients below `x₁ⁿ` vanish by construction and are not summed; the
/// returned value is the tail `Σ_{k≥n} cₖ x₁ᵏ`, truncated once the geometric
/// series has converged.
pub fn eikonal_residual(ps: &PhaseSeries, x1: f64) -> Result<Complex64> {
    let limit = ps.region_limit();
    if !(x1 > 0.0 && x1 <= limit) {
        return Err(Error::OutsideRetainedRegion { x1, limit });
    }
    let e = ps.e_values();
    let g = &ps.gamma_vals;
    let m = g.len();
    let psi: Vec<C3Vector> = (0..m)
        .map(|k| {
            let lo = k.saturating_sub(ps.n);
            (lo..=k).fold(C3Vector::zeros(), |acc, l| acc + g[l].apply(&e[k - l]))
        })
        .collect();
    let z2 = ps.sp.z * ps.sp.z;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut pw = x1.powi(ps.n as i32);
    for k in ps.n..m {
        let mut ck = -z2 * ps.eps_mu_vals[k];
        for l in 0..=k {
            ck += psi[l].dot(&psi[k - l]);
        }
        acc += ck * pw;
        pw *= x1;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Profile, SurfaceChart};

    fn sp() -> SpectralParameter {
        SpectralParameter::from_hz(0.01, Complex64::new(1.0, 0.3)).unwrap()
    }

    fn sphere_phase(n: usize, xi: [f64; 2]) -> PhaseSeries {
        let chart = SurfaceChart::Sphere { radius: 1.0 };
        let geom = GammaSeries::new(&chart, [1.1, 0.4], n + 1, n + 2).unwrap();
        eikonal_coeffs(&geom, &MediaField::constant(1.0, 1.0), &sp(), xi, n).unwrap()
    }

    #[test]
    fn flat_phase_is_linear() {
        let geom = GammaSeries::new(&SurfaceChart::Plane, [0.3, -0.2], 7, 8).unwrap();
        let ps = eikonal_coeffs(&geom, &MediaField::constant(2.0, 1.5), &sp(), [0.7, -1.2], 6).unwrap();
        for p in &ps.phi[2..] {
            assert!(p.max_abs_upto(p.order()) == 0.0);
        }
        for x1 in [1e-3, 1e-2, 0.1] {
            assert!(eikonal_residual(&ps, x1).unwrap().norm() < 1e-13);
        }
        let r0 = 0.7f64.powi(2) + 1.2f64.powi(2);
        let z = sp().z;
        assert!((ps.rho - crate::spectral::rho(r0, z, 3.0).unwrap()).norm() < 1e-14);
    }

    #[test]
    fn sphere_coefficients_vanish() {
        let ps = sphere_phase(6, [0.8, 0.5]);
        assert!(ps.coefficient_defect() < 1e-11, "{}", ps.coefficient_defect());
    }

    #[test]
    fn tail_matches_direct_evaluation() {
        // Direct evaluation with exact γ; only meaningful where the residual
        // is well above rounding.
        let n = 3;
        let chart = SurfaceChart::Sphere { radius: 1.0 };
        let x0 = [1.1, 0.4];
        let geom = GammaSeries::new(&chart, x0, n + 1, n + 2).unwrap();
        let ps = eikonal_coeffs(&geom, &MediaField::constant(1.0, 1.0), &sp(), [0.8, 0.5], n).unwrap();
        let x1: f64 = 0.05;
        let mut grad = C3Vector::zeros();
        for (k, e) in ps.e_values().iter().enumerate() {
            grad = grad + e.scale(Complex64::new(x1.powi(k as i32), 0.0));
        }
        let psi = geom.gamma_exact(x1).unwrap().apply(&grad);
        let direct = psi.dot(&psi) - ps.sp.z * ps.sp.z;
        let tail = eikonal_residual(&ps, x1).unwrap();
        assert!((direct - tail).norm() < 1e-12 * (1.0 + tail.norm()) + 1e-14, "{direct} {tail}");
    }

    #[test]
    fn sphere_residual_order() {
        let ps = sphere_phase(4, [0.8, 0.5]);
        let a = eikonal_residual(&ps, 1e-2).unwrap().norm();
        let b = eikonal_residual(&ps, 1e-3).unwrap().norm();
        let slope = (a / b).log10();
        assert!((slope - 4.0).abs() < 0.2, "{slope}");
        let ps6 = sphere_phase(6, [0.8, 0.5]);
        assert!(eikonal_residual(&ps6, 1e-2).unwrap().norm() < a);
    }

    #[test]
    fn imaginary_part_grows() {
        let ps = sphere_phase(5, [2.0, 1.0]);
        assert!(ps.positivity_margin() >= 0.0);
        for i in 1..=20 {
            let x1 = ps.region_limit() * i as f64 / 20.0;
            assert!(ps.phase_at(x1).im >= x1 * ps.rho.im / 2.0);
        }
    }

    #[test]
    fn outside_region_rejected() {
        let ps = sphere_phase(3, [0.8, 0.5]);
        let lim = ps.region_limit();
        assert!(matches!(eikonal_residual(&ps, 2.0 * lim), Err(Error::OutsideRetainedRegion { .. })));
        assert!(eikonal_residual(&ps, 0.0).is_err());
    }

    #[test]
    fn rotated_chart_agrees() {
        // Same physical point and covector in two charts of the unit sphere
        // related by a rotation about the polar axis. The chart change is a
        // translation in x', so φ₀ is the same function in both.
        let (a, b) = (0.7f64.cos(), 0.7f64.sin());
        let rot = [[a, -b, 0.0], [b, a, 0.0], [0.0, 0.0, 1.0]];
        let rotated = SurfaceChart::RotatedSphere { radius: 1.0, rotation: rot };
        let plain = SurfaceChart::Sphere { radius: 1.0 };
        let x0 = [1.0, 0.3];
        let g1 = GammaSeries::new(&plain, x0, 6, 7).unwrap();
        let p = g1.surface_point().unwrap();
        // Rᵀp in spherical coordinates.
        let q: [f64; 3] = std::array::from_fn(|i| (0..3).map(|k| rot[k][i] * p[k]).sum());
        let y0 = [q[2].acos(), q[1].atan2(q[0])];
        let g2 = GammaSeries::new(&rotated, y0, 6, 7).unwrap();
        assert!((0..3).all(|i| (g2.surface_point().unwrap()[i] - p[i]).abs() < 1e-12));
        let xi = [0.9, -0.4];
        let beta = g1.beta(xi);
        let eta = [beta.dot(&g2.ds[0].values()).re, beta.dot(&g2.ds[1].values()).re];
        let media = MediaField { eps: Profile::Radial { value: 2.0, curvature: 0.3 }, mu: Profile::Constant { value: 1.0 } };
        let p1 = eikonal_coeffs(&g1, &media, &sp(), xi, 5).unwrap();
        let p2 = eikonal_coeffs(&g2, &media, &sp(), eta, 5).unwrap();
        for k in 1..=5 {
            let (u, v) = (p1.phi[k].value(), p2.phi[k].value());
            assert!((u - v).norm() < 1e-10 * (1.0 + u.norm()), "k={k}: {u} vs {v}");
        }
    }
}
