//! Sweeps behind the verification commands. Each returns measured numbers;
//! callers compare them with their own tolerances.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crosssys::{oracle_disagreement, relative_residual, sample_admissible, solve_cross_system, CrossSystemInput};
use crate::eikonal::{eikonal_coeffs, eikonal_residual};
use crate::error::{Error, Result};
use crate::geometry::{GammaSeries, MediaField, SurfaceChart};
use crate::mie::{dtn_compare, exact_mode_impedance, Polarization};
use crate::numerics::{log_log_slope, C3Matrix, C3Vector};
use crate::spectral::{cal_b, rho, SpectralParameter, DEFAULT_C0};
use crate::transmission::t_symbols;
use crate::transport::{boundary_symbol, build_table, AmplitudeTable, Gauge};

fn real(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// Random base point away from the coordinate poles.
fn base_point(rng: &mut ChaCha8Rng, chart: &SurfaceChart) -> [f64; 2] {
    match chart {
        SurfaceChart::Plane => [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)],
        _ => [rng.gen_range(0.2..std::f64::consts::PI - 0.2), rng.gen_range(-3.0..3.0)],
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentityOptions {
    pub points: usize,
    pub seed: u64,
    pub z: Complex64,
    pub eps: f64,
    pub mu: f64,
    /// Second medium for the transmission identities.
    pub eps2: f64,
    pub mu2: f64,
    /// Added to every entry of `γₖ` before the checks; fault injection.
    pub gamma_perturbation: f64,
}

impl Default for IdentityOptions {
    fn default() -> Self {
        IdentityOptions {
            points: 10_000,
            seed: 1,
            z: Complex64::new(1.0, 0.3),
            eps: 4.0,
            mu: 1.0,
            eps2: 1.0,
            mu2: 1.0,
            gamma_perturbation: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityRow {
    pub name: &'static str,
    pub chart: String,
    pub points: usize,
    pub max_residual: f64,
}

pub const IDENTITY_NAMES: [&str; 6] = [
    "normal-gamma-orthogonality",
    "normal-beta-orthogonality",
    "rank-one-square",
    "leading-magnetic-trace",
    "transmission-inversion",
    "transmission-product",
];

/// Pointwise algebraic identities at random `(x', ξ')` of each chart.
pub fn identity_suite(charts: &[SurfaceChart], opts: &IdentityOptions) -> Result<Vec<IdentityRow>> {
    let mut out = Vec::new();
    for (ci, chart) in charts.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(ci as u64));
        let samples: Vec<([f64; 2], [f64; 2], [f64; 3])> = (0..opts.points)
            .map(|_| {
                let x0 = base_point(&mut rng, chart);
                let xi = [rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0)];
                let g = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                (x0, xi, g)
            })
            .collect();
        let per_point: Vec<[f64; 6]> = samples
            .par_iter()
            .map(|&(x0, xi, g)| identity_residuals(chart, x0, xi, g, opts))
            .collect::<Result<_>>()?;
        for (k, name) in IDENTITY_NAMES.iter().enumerate() {
            let worst = per_point.iter().map(|r| r[k]).fold(0.0, f64::max);
            out.push(IdentityRow { name, chart: chart.label(), points: opts.points, max_residual: worst });
        }
    }
    Ok(out)
}

fn identity_residuals(chart: &SurfaceChart, x0: [f64; 2], xi: [f64; 2], g: [f64; 3], opts: &IdentityOptions) -> Result<[f64; 6]> {
    let terms = 6;
    let geom = GammaSeries::new(chart, x0, 1, 0)?;
    let nu = geom.nu0();
    let clean = geom.gamma_values(terms);
    let mut gammas = clean.clone();
    for gk in &mut gammas {
        for row in gk.0.iter_mut() {
            for e in row.iter_mut() {
                *e += opts.gamma_perturbation;
            }
        }
    }
    let mut r_gamma: f64 = 0.0;
    for gk in &gammas {
        for col in [1, 2] {
            let v = gk.column(col);
            r_gamma = r_gamma.max(nu.dot(&v).norm() / v.norm().max(1.0));
        }
    }
    let beta_of = |g: &C3Matrix| g.column(1).scale(real(xi[0])) + g.column(2).scale(real(xi[1]));
    let perturbed = beta_of(&gammas[0]);
    let r_beta = nu.dot(&perturbed).norm() / perturbed.norm().max(1.0);
    // The remaining identities need a tangent β to be well posed.
    let beta = beta_of(&clean[0]);
    let r0 = beta.dot(&beta).re;
    let b = cal_b(&beta);
    let r_square = b.matmul(&b).sub(&b.scale(real(r0))).max_abs() / (r0 * r0).max(1.0);

    // Leading magnetic amplitude: the cross system with vanishing sources.
    let nuv = nu.0.map(|c| c.re);
    let gt = C3Vector::from_real(g);
    let gt = gt.clone() - nu.scale(nu.dot(&gt));
    let rh = rho(r0, opts.z, opts.eps * opts.mu)?;
    let input = CrossSystemInput {
        rho: rh,
        nu: nuv,
        beta: beta.0.map(|c| c.re),
        z: opts.z,
        eps0: opts.eps,
        mu0: opts.mu,
        a_sharp: C3Vector::zeros(),
        b_sharp: C3Vector::zeros(),
        g: gt.clone(),
    };
    let sol = solve_cross_system(&input)?;
    let nxg = nu.cross(&gt);
    let lhs = nu.cross(&sol.b).scale(opts.z * opts.mu);
    let rhs = nxg.scale(rh) + beta.scale(beta.dot(&nxg) / rh);
    let r_trace = (lhs - rhs.clone()).norm() / rhs.norm().max(1e-300);

    let (p1, p2) = (rho(r0, opts.z, opts.eps * opts.mu)?, rho(r0, opts.z, opts.eps2 * opts.mu2)?);
    let id = C3Matrix::identity();
    let plus = id.add(&b.scale((p1 * p2 - real(r0)).inv()));
    let minus = id.sub(&b.scale((p1 * p2).inv()));
    let r_inv = plus.matmul(&minus).sub(&id).max_abs();
    let ts = t_symbols(opts.z, &beta, opts.eps, opts.mu, opts.eps2, opts.mu2, opts.mu, opts.mu2)?;
    let r_prod = ts.t1.matmul(&ts.t_tilde).sub(&id.scale(real((1.0 + r0).sqrt().recip()))).max_abs() * (1.0 + r0).sqrt();
    Ok([r_gamma, r_beta, r_square, r_trace, r_inv, r_prod])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossReport {
    pub samples: usize,
    pub max_residual: f64,
    pub max_oracle_gap: f64,
    /// `|ρ|` at the worst oracle gap.
    pub worst_rho: f64,
}

/// Closed-form cross-system solves at random admissible inputs with
/// `|ρ|` log-uniform in `[rho_min, rho_max]`.
pub fn cross_sweep(samples: usize, seed: u64, rho_min: f64, rho_max: f64) -> Result<CrossReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<(f64, CrossSystemInput)> = (0..samples)
        .map(|_| {
            let mag = (rho_min.ln() + rng.gen_range(0.0..1.0) * (rho_max / rho_min).ln()).exp();
            let ratio = rng.gen_range(0.0..2.0);
            (mag, sample_admissible(&mut rng, mag, ratio * mag))
        })
        .collect();
    let res: Vec<(f64, f64, f64)> = inputs
        .par_iter()
        .map(|(mag, inp)| Ok((relative_residual(inp)?, oracle_disagreement(inp)?, *mag)))
        .collect::<Result<_>>()?;
    let max_residual = res.iter().map(|r| r.0).fold(0.0, f64::max);
    let worst = res.iter().copied().fold((0.0, 0.0), |acc, r| if r.1 > acc.0 { (r.1, r.2) } else { acc });
    Ok(CrossReport { samples, max_residual, max_oracle_gap: worst.0, worst_rho: worst.1 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EikonalRow {
    pub order: usize,
    pub x1: Vec<f64>,
    pub residual: Vec<f64>,
    pub slope: f64,
}

/// `|eikonal residual|` against `x₁` at orders `orders`, at one base point.
pub fn eikonal_sweep(chart: &SurfaceChart, media: &MediaField, sp: &SpectralParameter, x0: [f64; 2], xi: [f64; 2], orders: &[usize], x1: &[f64]) -> Result<Vec<EikonalRow>> {
    orders
        .par_iter()
        .map(|&n| {
            let geom = GammaSeries::new(chart, x0, n + 1, n + 2)?;
            let ps = eikonal_coeffs(&geom, media, sp, xi, n)?;
            let residual = x1.iter().map(|&t| eikonal_residual(&ps, t).map(|r| r.norm())).collect::<Result<Vec<_>>>()?;
            let slope = if residual.iter().all(|r| *r > 0.0) { log_log_slope(x1, &residual) } else { f64::NAN };
            Ok(EikonalRow { order: n, x1: x1.to_vec(), residual, slope })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportChecks {
    /// `max |ν × a_{j,0}|` over `j ≥ 1` and the three data columns.
    pub boundary: f64,
    /// `max |Σ_l ⟨ψ_{k−l}, a_{0,l}⟩|` over `k < n`.
    pub normalization: f64,
}

pub fn transport_checks(at: &AmplitudeTable) -> TransportChecks {
    let nu = at.geom.nu0();
    let mut boundary: f64 = 0.0;
    for j in 1..at.n {
        let a = at.a_matrix(j, 0);
        for c in 0..3 {
            boundary = boundary.max(nu.cross(&a.column(c)).norm());
        }
    }
    let mut normalization: f64 = 0.0;
    for k in 0..at.n {
        for c in 0..3 {
            let mut s = at.phase.psi[k].dot(&at.a[0][0][c]);
            for l in 1..=k.min(at.kmax(0)) {
                s = s + at.phase.psi[k - l].dot(&at.a[0][l][c]);
            }
            normalization = normalization.max(s.value().norm());
        }
    }
    TransportChecks { boundary, normalization }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediaIndependence {
    pub points: usize,
    pub media: usize,
    /// Largest entrywise gap of `μ₀ m̃` from the first medium's value.
    pub max_gap: f64,
    pub min_r0: f64,
}

/// `μ₀ m̃` on the sphere at random points with `r₀ ∈ [r0_min, 16 r0_min]`
/// for each medium in `media`.
pub fn media_independence(radius: f64, sp: &SpectralParameter, media: &[(f64, f64)], points: usize, seed: u64, r0_min: f64) -> Result<MediaIndependence> {
    let chart = SurfaceChart::Sphere { radius };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<([f64; 2], [f64; 2])> = (0..points)
        .map(|_| {
            let x0 = base_point(&mut rng, &chart);
            let dir = rng.gen_range(0.0..std::f64::consts::TAU);
            let r0 = r0_min * rng.gen_range(1.0f64..16.0);
            // r₀ = (ξ₂² + ξ₃²/sin²x₂)/R² on the sphere.
            let s = x0[0].sin();
            (x0, [radius * r0.sqrt() * dir.cos(), radius * r0.sqrt() * dir.sin() * s])
        })
        .collect();
    let res: Vec<(f64, f64)> = samples
        .par_iter()
        .map(|&(x0, xi)| {
            let mut reference: Option<C3Matrix> = None;
            let mut gap: f64 = 0.0;
            let mut r0 = f64::INFINITY;
            for &(eps, mu) in media {
                let at = build_table(&chart, &MediaField::constant(eps, mu), sp, x0, xi, 2, Gauge::Compatible)?;
                let bs = boundary_symbol(&at, 1, DEFAULT_C0)?;
                r0 = r0.min(bs.r0);
                let scaled = bs.m_tilde.scale(real(mu));
                match &reference {
                    None => reference = Some(scaled),
                    Some(r) => gap = gap.max(scaled.sub(r).max_abs()),
                }
            }
            Ok((gap, r0))
        })
        .collect::<Result<_>>()?;
    Ok(MediaIndependence {
        points,
        media: media.len(),
        max_gap: res.iter().map(|r| r.0).fold(0.0, f64::max),
        min_r0: res.iter().map(|r| r.1).fold(f64::INFINITY, f64::min),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub l: usize,
    pub pol: Polarization,
    pub lambda: Complex64,
    pub exact: Option<Complex64>,
    pub err_order0: f64,
    pub err_order1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Convergence {
    pub rows: Vec<ConvergenceRow>,
    /// `(pol, order-0 slope, order-1 slope)` in `h`.
    pub slopes: Vec<(Polarization, f64, f64)>,
}

/// Per-mode DtN errors at `λ = (1 + iθ)/h` with `ℓ` nearest `fraction/h`.
pub fn dtn_convergence(hs: &[f64], theta: f64, fraction: f64, eps: f64, mu: f64, radius: f64) -> Result<Convergence> {
    let z = Complex64::new(1.0, theta);
    let per_h: Vec<Vec<ConvergenceRow>> = hs
        .par_iter()
        .map(|&h| {
            let l = ((fraction / h).round() as usize).max(1);
            let rows = dtn_compare(&[l], z / h, eps, mu, radius)?;
            Ok(rows.into_iter().map(|r| ConvergenceRow { h, l, pol: r.pol, lambda: r.lambda, exact: r.exact, err_order0: r.err_order0, err_order1: r.err_order1 }).collect())
        })
        .collect::<Result<_>>()?;
    let rows: Vec<ConvergenceRow> = per_h.into_iter().flatten().collect();
    let slopes = [Polarization::Te, Polarization::Tm]
        .into_iter()
        .map(|pol| {
            let sel: Vec<&ConvergenceRow> = rows.iter().filter(|r| r.pol == pol).collect();
            let h: Vec<f64> = sel.iter().map(|r| r.h).collect();
            let e0: Vec<f64> = sel.iter().map(|r| r.err_order0).collect();
            let e1: Vec<f64> = sel.iter().map(|r| r.err_order1).collect();
            (pol, log_log_slope(&h, &e0), log_log_slope(&h, &e1))
        })
        .collect();
    Ok(Convergence { rows, slopes })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCell {
    pub h: f64,
    pub theta: f64,
    /// `max_ℓ |Z_ℓ| θ^{1/2} / ⟨hℓ/R⟩` over both polarizations.
    pub max_ratio: f64,
    pub argmax_l: usize,
    pub argmax_pol: Polarization,
}

/// Exact impedances at `λ = (1 + iθ)/h` for `ℓ ≤ l_max`, normalized by
/// `θ^{−1/2}⟨hℓ/R⟩`, where `⟨t⟩ = (1 + t²)^{1/2}`.
pub fn impedance_bound(hs: &[f64], thetas: &[f64], l_max: usize, eps: f64, mu: f64, radius: f64) -> Result<Vec<BoundCell>> {
    let cells: Vec<(f64, f64)> = hs.iter().flat_map(|&h| thetas.iter().map(move |&t| (h, t))).collect();
    cells
        .par_iter()
        .map(|&(h, theta)| {
            let lambda = Complex64::new(1.0, theta) / h;
            let mut best = (0.0, 1, Polarization::Te);
            for l in 1..=l_max {
                let weight = (1.0 + (h * l as f64 / radius).powi(2)).sqrt();
                for pol in [Polarization::Te, Polarization::Tm] {
                    let v = match exact_mode_impedance(l, lambda, eps, mu, radius, pol) {
                        Ok(z) => z.value.norm() * theta.sqrt() / weight,
                        Err(Error::InteriorResonance(_)) => continue,
                        Err(e) => return Err(e),
                    };
                    if v > best.0 {
                        best = (v, l, pol);
                    }
                }
            }
            Ok(BoundCell { h, theta, max_ratio: best.0, argmax_l: best.1, argmax_pol: best.2 })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identities_hold_and_perturbation_is_caught() {
        let charts = [SurfaceChart::Sphere { radius: 1.0 }, SurfaceChart::Ellipsoid { a: 1.0, b: 1.3, c: 0.8 }];
        let opts = IdentityOptions { points: 200, ..Default::default() };
        for row in identity_suite(&charts, &opts).unwrap() {
            assert!(row.max_residual <= 1e-12, "{row:?}");
        }
        let bad = IdentityOptions { points: 20, gamma_perturbation: 1e-3, ..Default::default() };
        let rows = identity_suite(&charts[..1], &bad).unwrap();
        assert!(rows.iter().find(|r| r.name == "normal-gamma-orthogonality").unwrap().max_residual > 1e-4);
    }

    #[test]
    fn plane_identities_are_exact() {
        let rows = identity_suite(&[SurfaceChart::Plane], &IdentityOptions { points: 100, ..Default::default() }).unwrap();
        for r in rows.iter().filter(|r| r.name.starts_with("normal")) {
            assert_eq!(r.max_residual, 0.0, "{r:?}");
        }
    }

    #[test]
    fn cross_sweep_small() {
        let r = cross_sweep(300, 3, 1e-3, 1e3).unwrap();
        assert!(r.max_residual <= 1e-12 && r.max_oracle_gap <= 1e-11, "{r:?}");
    }

    #[test]
    fn impedance_bound_is_finite() {
        let cells = impedance_bound(&[1.0 / 20.0], &[0.1, 1.0], 40, 1.0, 1.0, 1.0).unwrap();
        assert!(cells.iter().all(|c| c.max_ratio.is_finite() && c.max_ratio > 0.0));
    }
}
