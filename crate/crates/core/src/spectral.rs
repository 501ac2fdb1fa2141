//! Frequency bookkeeping `(h, z, θ)`, the root symbol `ρ`, the rank-one
//! matrix `B`, the principal symbol `m` and its flattened form `m₀`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{GammaSeries, MediaField, SurfaceChart};
use crate::numerics::{sqrt_upper, C3Matrix, C3Vector, Jet, M3, V3};

/// Default cutoff constant for `η`.
pub const DEFAULT_C0: f64 = 10.0;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `λ` split into the semiclassical scale `h`, `z = hλ` and `θ = |Im z|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParameter {
    pub lambda: Complex64,
    pub h: f64,
    pub z: Complex64,
    pub theta: f64,
}

impl SpectralParameter {
    /// Parameter with a prescribed `h` and `z` (so `λ = z/h`).
    pub fn from_hz(h: f64, z: Complex64) -> Result<Self> {
        split_lambda(z / h)
    }
}

pub fn split_lambda(lambda: Complex64) -> Result<SpectralParameter> {
    if lambda.re == 0.0 && lambda.im == 0.0 {
        return Err(Error::ZeroFrequency);
    }
    if lambda.im == 0.0 {
        return Err(Error::RealFrequency(lambda.re));
    }
    let h = if lambda.re.abs() >= lambda.im.abs() { 1.0 / lambda.re.abs() } else { 1.0 / lambda.im.abs() };
    let z = lambda * h;
    Ok(SpectralParameter { lambda, h, z, theta: z.im.abs() })
}

/// `ρ = √(−r₀ + z²ε₀μ₀)` with `Im ρ > 0`.
pub fn rho(r0: f64, z: Complex64, eps0_mu0: f64) -> Result<Complex64> {
    sqrt_upper(z * z * eps0_mu0 - r0)
}

/// `Bg = ⟨β, g⟩β`.
pub fn cal_b(beta: &C3Vector) -> C3Matrix {
    C3Matrix::outer(beta, beta)
}

/// `m = (zμ₀)⁻¹(ρI + ρ⁻¹B)`.
pub fn m_matrix(z: Complex64, beta: &C3Vector, eps0: f64, mu0: f64) -> Result<C3Matrix> {
    let r0 = beta.dot(beta).re;
    let rho = rho(r0, z, eps0 * mu0)?;
    Ok(C3Matrix::identity()
        .scale(rho)
        .add(&cal_b(beta).scale(rho.inv()))
        .scale((z * mu0).inv()))
}

/// `m₀ = i(zμ₀)⁻¹√r₀ (I − r₀⁻¹B)`.
pub fn m0_matrix(z: Complex64, beta: &C3Vector, mu0: f64) -> Result<C3Matrix> {
    let r0 = beta.dot(beta).re;
    if r0 <= 0.0 {
        return Err(Error::ZeroFrequencyCovector);
    }
    let p = C3Matrix::identity().sub(&cal_b(beta).scale(Complex64::new(1.0 / r0, 0.0)));
    Ok(p.scale(I * r0.sqrt() / (z * mu0)))
}

/// `m₀` with `β` given as a jet (used for `ξ'`-derivatives).
pub fn m0_jet(z: Complex64, beta: &V3<Jet>, mu0: f64) -> Result<M3<Jet>> {
    let r0 = beta.dot(beta);
    if r0.value().re <= 0.0 {
        return Err(Error::ZeroFrequencyCovector);
    }
    let sq = r0.sqrt()?;
    let inv = r0.recip()?;
    let one = r0.zero_like().add_constant(Complex64::new(1.0, 0.0));
    let p = M3(std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let d = if i == j { one.clone() } else { one.zero_like() };
            d - beta.0[i].mul_ref(&beta.0[j]).mul_ref(&inv)
        })
    }));
    Ok(p.mul_scalar(&sq).scale(I / (z * mu0)))
}

/// Transverse-electric eigenvalue `ρ/(zμ₀)` (on the complement of `β`).
pub fn te_eigenvalue(rho: Complex64, z: Complex64, mu0: f64) -> Complex64 {
    rho / (z * mu0)
}

/// Transverse-magnetic eigenvalue `zε₀/ρ` (on `span β`).
pub fn tm_eigenvalue(rho: Complex64, z: Complex64, eps0: f64) -> Complex64 {
    z * eps0 / rho
}

fn bump(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Smooth cutoff: 1 for `r₀ ≤ C₀`, 0 for `r₀ ≥ 2C₀`.
pub fn cutoff_eta(r0: f64, c0: f64) -> f64 {
    let t = (2.0 * c0 - r0) / c0;
    if t >= 1.0 {
        1.0
    } else if t <= 0.0 {
        0.0
    } else {
        bump(t) / (bump(t) + bump(1.0 - t))
    }
}

/// `η(r₀)` on a jet argument.
pub fn cutoff_eta_jet(r0: &Jet, c0: f64) -> Result<Jet> {
    let v = r0.value().re;
    let one = r0.zero_like().add_constant(Complex64::new(1.0, 0.0));
    if v <= c0 {
        return Ok(one);
    }
    if v >= 2.0 * c0 {
        return Ok(one.zero_like());
    }
    let t = r0.scale(Complex64::new(-1.0 / c0, 0.0)).add_constant(Complex64::new(2.0, 0.0));
    let s = one.sub_ref(&t);
    let f = t.recip()?.scale(Complex64::new(-1.0, 0.0)).exp();
    let g = s.recip()?.scale(Complex64::new(-1.0, 0.0)).exp();
    Ok(f.mul_ref(&f.add_ref(&g).recip()?))
}

type SymbolFn = dyn Fn([f64; 2], [f64; 2]) -> Result<C3Matrix> + Send + Sync;

/// Matrix-valued symbol on the cotangent bundle of a chart.
#[derive(Clone)]
pub struct SymbolMatrix {
    pub name: &'static str,
    pub depends_on_eps: bool,
    pub depends_on_mu: bool,
    f: Arc<SymbolFn>,
}

impl fmt::Debug for SymbolMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymbolMatrix")
            .field("name", &self.name)
            .field("depends_on_eps", &self.depends_on_eps)
            .field("depends_on_mu", &self.depends_on_mu)
            .finish()
    }
}

impl SymbolMatrix {
    pub fn new(
        name: &'static str,
        depends_on_eps: bool,
        depends_on_mu: bool,
        f: impl Fn([f64; 2], [f64; 2]) -> Result<C3Matrix> + Send + Sync + 'static,
    ) -> Self {
        SymbolMatrix { name, depends_on_eps, depends_on_mu, f: Arc::new(f) }
    }

    pub fn eval(&self, x: [f64; 2], xi: [f64; 2]) -> Result<C3Matrix> {
        (self.f)(x, xi)
    }
}

pub(crate) fn boundary_values(chart: &SurfaceChart, media: &MediaField, x: [f64; 2]) -> Result<(GammaSeries, f64, f64)> {
    let g = GammaSeries::new(chart, x, 1, 1)?;
    let y = g.surface_point()?;
    Ok((g, media.eps.value_at(y), media.mu.value_at(y)))
}

/// The principal symbol `m` as a field over `(x', ξ')`.
pub fn symbol_m(sp: SpectralParameter, chart: &SurfaceChart, media: &MediaField) -> SymbolMatrix {
    let (chart, media) = (chart.clone(), media.clone());
    SymbolMatrix::new("m", true, true, move |x, xi| {
        let (g, e0, m0) = boundary_values(&chart, &media, x)?;
        m_matrix(sp.z, &g.beta(xi), e0, m0)
    })
}

/// The flattened symbol `m₀` as a field over `(x', ξ')`.
pub fn symbol_m0(sp: SpectralParameter, chart: &SurfaceChart, media: &MediaField) -> SymbolMatrix {
    let (chart, media) = (chart.clone(), media.clone());
    SymbolMatrix::new("m0", false, true, move |x, xi| {
        let (g, _, m0) = boundary_values(&chart, &media, x)?;
        m0_matrix(sp.z, &g.beta(xi), m0)
    })
}
