//! Boundary charts, normal coordinates `y = s(x') + x₁ν(x')`, the matrix
//! `γ = (∂y/∂x)⁻ᵀ` as a series in `x₁`, and media series.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{C3Matrix, C3Vector, Jet, Layout, M3, V3};

/// Jet order used when the caller does not ask for a specific budget.
pub const DEFAULT_JET_ORDER: usize = 8;

/// Analytic parametrization of a boundary patch.
///
/// Spherical charts use `x₂` = colatitude and `x₃` = azimuth. The normal is
/// the inward one (pointing into the domain).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfaceChart {
    /// `s(x') = (0, x₂, x₃)`, domain `x₁ > 0`.
    Plane,
    Sphere { radius: f64 },
    /// Sphere composed with a fixed rotation (rows of an orthogonal matrix).
    RotatedSphere { radius: f64, rotation: [[f64; 3]; 3] },
    Ellipsoid { a: f64, b: f64, c: f64 },
}

impl SurfaceChart {
    pub fn label(&self) -> String {
        match self {
            SurfaceChart::Plane => "plane".into(),
            SurfaceChart::Sphere { radius } => format!("sphere({radius})"),
            SurfaceChart::RotatedSphere { radius, .. } => format!("rotated-sphere({radius})"),
            SurfaceChart::Ellipsoid { a, b, c } => format!("ellipsoid({a},{b},{c})"),
        }
    }

    /// Chart domain box in `x'`.
    pub fn domain(&self) -> [(f64, f64); 2] {
        match self {
            SurfaceChart::Plane => [(-1e3, 1e3), (-1e3, 1e3)],
            _ => [(1e-3, std::f64::consts::PI - 1e-3), (-std::f64::consts::PI, std::f64::consts::PI)],
        }
    }

    /// Sign that turns `∂₂s × ∂₃s` into the inward normal.
    fn orientation(&self) -> f64 {
        match self {
            SurfaceChart::Plane => 1.0,
            _ => -1.0,
        }
    }

    /// `s(x')` evaluated on jets of the two surface coordinates.
    pub fn surface(&self, x2: &Jet, x3: &Jet) -> V3<Jet> {
        let r = |v: f64| Complex64::new(v, 0.0);
        match self {
            SurfaceChart::Plane => V3([x2.zero_like(), x2.clone(), x3.clone()]),
            SurfaceChart::Sphere { radius } => {
                Self::ellipsoid_map(x2, x3, [*radius; 3])
            }
            SurfaceChart::RotatedSphere { radius, rotation } => {
                let p = Self::ellipsoid_map(x2, x3, [*radius; 3]);
                V3(std::array::from_fn(|i| {
                    p.0[0].scale(r(rotation[i][0]))
                        + p.0[1].scale(r(rotation[i][1]))
                        + p.0[2].scale(r(rotation[i][2]))
                }))
            }
            SurfaceChart::Ellipsoid { a, b, c } => Self::ellipsoid_map(x2, x3, [*a, *b, *c]),
        }
    }

    fn ellipsoid_map(th: &Jet, ph: &Jet, axes: [f64; 3]) -> V3<Jet> {
        let (st, ct) = (th.sin(), th.cos());
        let (sp, cp) = (ph.sin(), ph.cos());
        let r = |v: f64| Complex64::new(v, 0.0);
        V3([
            st.mul_ref(&cp).scale(r(axes[0])),
            st.mul_ref(&sp).scale(r(axes[1])),
            ct.scale(r(axes[2])),
        ])
    }

    /// Tangent vectors and inward unit normal on jets in variables `v2, v3`
    /// of the layout of `x2`. Orders drop by one.
    pub fn frame(&self, x2: &Jet, x3: &Jet, v2: usize, v3: usize) -> Result<Frame> {
        let s = self.surface(x2, x3);
        let d2 = V3(s.0.clone().map(|c| c.derivative(v2).expect("chart order ≥ 1")));
        let d3 = V3(s.0.clone().map(|c| c.derivative(v3).expect("chart order ≥ 1")));
        let n = d2.cross(&d3);
        let nn = n.dot(&n);
        if nn.value().norm() < 1e-24 {
            return Err(Error::FocalDegeneracy);
        }
        let inv = nn.sqrt()?.recip()?.scale(Complex64::new(self.orientation(), 0.0));
        let nu = n.mul_scalar(&inv);
        Ok(Frame { s, d2, d3, nu })
    }
}

/// Surface point, tangent vectors `∂₂s, ∂₃s` and inward normal as jets.
#[derive(Debug, Clone)]
pub struct Frame {
    pub s: V3<Jet>,
    pub d2: V3<Jet>,
    pub d3: V3<Jet>,
    pub nu: V3<Jet>,
}

/// Scalar profile of a material coefficient as a function of `y ∈ ℝ³`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant { value: f64 },
    /// `value + ⟨gradient, y⟩`
    Affine { value: f64, gradient: [f64; 3] },
    /// `value · (1 + curvature·|y|²)`
    Radial { value: f64, curvature: f64 },
    /// `value + amplitude · exp(−|y − center|²/width²)`
    Gaussian { value: f64, amplitude: f64, center: [f64; 3], width: f64 },
}

impl Profile {
    pub fn eval(&self, y: &V3<Jet>) -> Jet {
        let c = |v: f64| Complex64::new(v, 0.0);
        let one = y.0[0].zero_like().add_constant(c(1.0));
        match self {
            Profile::Constant { value } => one.scale(c(*value)),
            Profile::Affine { value, gradient } => {
                let mut acc = one.scale(c(*value));
                for i in 0..3 {
                    acc = acc + y.0[i].scale(c(gradient[i]));
                }
                acc
            }
            Profile::Radial { value, curvature } => {
                (one + y.dot(y).scale(c(*curvature))).scale(c(*value))
            }
            Profile::Gaussian { value, amplitude, center, width } => {
                let d = V3(std::array::from_fn(|i| y.0[i].add_constant(c(-center[i]))));
                let e = d.dot(&d).scale(c(-1.0 / (width * width))).exp();
                one.scale(c(*value)) + e.scale(c(*amplitude))
            }
        }
    }

    pub fn value_at(&self, y: [f64; 3]) -> f64 {
        let l = Layout::get(3, 0);
        let yj = V3(y.map(|v| Jet::real(&l, v)));
        self.eval(&yj).value().re
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Profile::Constant { .. })
    }
}

/// Permittivity and permeability fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediaField {
    pub eps: Profile,
    pub mu: Profile,
}

impl MediaField {
    pub fn constant(eps: f64, mu: f64) -> Self {
        MediaField { eps: Profile::Constant { value: eps }, mu: Profile::Constant { value: mu } }
    }

    pub fn is_constant(&self) -> bool {
        self.eps.is_constant() && self.mu.is_constant()
    }
}

/// Taylor coefficients in `x₁` of `ε`, `μ` and `εμ` as `x'`-jets.
#[derive(Debug, Clone)]
pub struct MediaSeries {
    pub eps: Vec<Jet>,
    pub mu: Vec<Jet>,
    pub eps_mu: Vec<Jet>,
}

impl MediaSeries {
    pub fn eps0(&self) -> f64 {
        self.eps[0].value().re
    }

    pub fn mu0(&self) -> f64 {
        self.mu[0].value().re
    }
}

/// Local geometric data at a base point: frame jets, `γₖ` and media series.
#[derive(Debug, Clone)]
pub struct GammaSeries {
    pub chart: SurfaceChart,
    pub x0: [f64; 2],
    pub layout: Arc<Layout>,
    pub nu: V3<Jet>,
    pub ds: [V3<Jet>; 2],
    pub dnu: [V3<Jet>; 2],
    /// `γₖ(x')` for `k = 0..terms`.
    pub gamma: Vec<M3<Jet>>,
    j0inv: C3Matrix,
    kmat: C3Matrix,
}

impl GammaSeries {
    /// Build `γ₀..γ_{terms-1}` as jets of order `budget` around `x0`.
    pub fn new(chart: &SurfaceChart, x0: [f64; 2], terms: usize, budget: usize) -> Result<Self> {
        let top = budget + 2;
        let layout = Layout::get(2, top);
        let x2 = Jet::variable(&layout, 0, x0[0]);
        let x3 = Jet::variable(&layout, 1, x0[1]);
        let fr = chart.frame(&x2, &x3, 0, 1)?;
        let dnu = [
            V3(fr.nu.0.clone().map(|c| c.derivative(0).unwrap())),
            V3(fr.nu.0.clone().map(|c| c.derivative(1).unwrap())),
        ];
        let j0 = M3::from_columns(&fr.nu, &fr.d2, &fr.d3);
        let zero = V3::zero_like(&fr.nu.0[0]);
        let j1 = M3::from_columns(&zero, &dnu[0], &dnu[1]);
        let det = j0.det();
        if det.value().norm() < 1e-12 {
            return Err(Error::FocalDegeneracy);
        }
        let j0inv = j0.adjugate().mul_scalar(&det.recip()?);
        let k = j0inv.matmul(&j1);
        let mut gamma = Vec::with_capacity(terms);
        let mut pw = j0inv.clone();
        for _ in 0..terms {
            gamma.push(truncate_m(&pw.transpose(), budget));
            pw = k.matmul(&pw).scale(Complex64::new(-1.0, 0.0));
        }
        Ok(GammaSeries {
            chart: chart.clone(),
            x0,
            nu: truncate_v(&fr.nu, budget),
            ds: [truncate_v(&fr.d2, budget), truncate_v(&fr.d3, budget)],
            dnu: [truncate_v(&dnu[0], budget), truncate_v(&dnu[1], budget)],
            j0inv: j0inv.values(),
            kmat: k.values(),
            layout,
            gamma,
        })
    }

    pub fn order(&self) -> usize {
        self.gamma[0].0[0][0].order()
    }

    pub fn nu0(&self) -> C3Vector {
        self.nu.values()
    }

    /// Values at the base point of `γₖ` for `k = 0..terms`, without any
    /// `x'`-derivatives.
    pub fn gamma_values(&self, terms: usize) -> Vec<C3Matrix> {
        let mut out = Vec::with_capacity(terms);
        let mut pw = self.j0inv.clone();
        for _ in 0..terms {
            out.push(pw.transpose());
            pw = self.kmat.matmul(&pw).scale(Complex64::new(-1.0, 0.0));
        }
        out
    }

    /// `β(x', ξ') = Σ ξₖ γ₀ζₖ` as a jet in `x'` (fixed `ξ'`).
    pub fn beta_jet(&self, xi: [f64; 2]) -> V3<Jet> {
        let g = &self.gamma[0];
        let c = |v: f64| Complex64::new(v, 0.0);
        g.column(1).scale(c(xi[0])) + g.column(2).scale(c(xi[1]))
    }

    pub fn beta(&self, xi: [f64; 2]) -> C3Vector {
        self.beta_jet(xi).values()
    }

    pub fn r0(&self, xi: [f64; 2]) -> f64 {
        let b = self.beta(xi);
        b.dot(&b).re
    }

    /// `γ` summed at a given `x₁` (base point values only).
    pub fn gamma_at(&self, x1: f64, terms: usize) -> C3Matrix {
        let mut acc = C3Matrix::zeros();
        let mut p = 1.0;
        for g in self.gamma_values(terms) {
            acc = acc.add(&g.scale(Complex64::new(p, 0.0)));
            p *= x1;
        }
        acc
    }

    /// Exact `γ(x₁, x'₀)` by inverting the Jacobian directly.
    pub fn gamma_exact(&self, x1: f64) -> Result<C3Matrix> {
        let j0 = self.j0inv.inverse()?;
        // J = J₀ (I + x₁K)
        let j = j0.matmul(&C3Matrix::identity().add(&self.kmat.scale(Complex64::new(x1, 0.0))));
        Ok(j.inverse()?.transpose())
    }

    /// Media coefficients in `x₁` as `x'`-jets for `k = 0..terms`.
    ///
    /// The 3-variable layout shares the maximal order with `self.layout`, so
    /// the split jets live on the same 2-variable layout.
    pub fn media_series(&self, media: &MediaField, terms: usize) -> Result<MediaSeries> {
        let top = self.layout.max_order();
        let l3 = Layout::get(3, top);
        let t = Jet::variable(&l3, 0, 0.0);
        let x2 = Jet::variable(&l3, 1, self.x0[0]);
        let x3 = Jet::variable(&l3, 2, self.x0[1]);
        let fr = self.chart.frame(&x2, &x3, 1, 2)?;
        let y = fr.s.clone() + fr.nu.mul_scalar(&t);
        let eps = media.eps.eval(&y);
        let mu = media.mu.eval(&y);
        let em = eps.mul_ref(&mu);
        let budget = self.order();
        let cut = |j: Jet| -> Vec<Jet> {
            let mut parts = j.split_first();
            parts.truncate(terms);
            parts.into_iter().map(|p| p.truncate(budget)).collect()
        };
        let (eps, mu, eps_mu) = (cut(eps), cut(mu), cut(em));
        if eps.len() < terms {
            return Err(Error::OrderBudgetExceeded { requested: terms, budget: eps.len() });
        }
        Ok(MediaSeries { eps, mu, eps_mu })
    }

    /// Values of the media coefficients in `x₁` at the base point up to
    /// `terms` (a one-variable expansion, cheap at high order).
    pub fn media_values(&self, media: &MediaField, terms: usize) -> Result<[Vec<Complex64>; 3]> {
        let l1 = Layout::get(1, terms.max(1) - 1);
        let nu = self.nu0();
        let s = self.surface_point()?;
        let t = Jet::variable(&l1, 0, 0.0);
        let y = V3(std::array::from_fn(|i| t.scale(nu.0[i]).add_constant(Complex64::new(s[i], 0.0))));
        let eps = media.eps.eval(&y);
        let mu = media.mu.eval(&y);
        let em = eps.mul_ref(&mu);
        let take = |j: &Jet| (0..terms).map(|k| j.coefficient(&[k as u8])).collect::<Vec<_>>();
        Ok([take(&eps), take(&mu), take(&em)])
    }

    pub fn surface_point(&self) -> Result<[f64; 3]> {
        let l = Layout::get(2, 0);
        let s = self
            .chart
            .surface(&Jet::real(&l, self.x0[0]), &Jet::real(&l, self.x0[1]))
            .values();
        Ok(s.0.map(|c| c.re))
    }
}

fn truncate_v(v: &V3<Jet>, p: usize) -> V3<Jet> {
    v.map(|c| c.truncate(p))
}

fn truncate_m(m: &M3<Jet>, p: usize) -> M3<Jet> {
    M3(std::array::from_fn(|i| std::array::from_fn(|j| m.0[i][j].truncate(p))))
}

/// Geometry at `x'` with `terms` coefficients of `γ` and the default jet order.
pub fn gamma_series(chart: &SurfaceChart, x0: [f64; 2], terms: usize) -> Result<GammaSeries> {
    GammaSeries::new(chart, x0, terms, DEFAULT_JET_ORDER)
}

/// `β(x', ξ')` at a point of a chart.
pub fn beta(chart: &SurfaceChart, x0: [f64; 2], xi: [f64; 2]) -> Result<C3Vector> {
    Ok(GammaSeries::new(chart, x0, 1, 1)?.beta(xi))
}
