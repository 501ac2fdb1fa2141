//! Amplitudes of the parametrix `Ẽ = e^{iφ/h} Σ hʲaⱼ`, `H̃ = e^{iφ/h} Σ hʲbⱼ`
//! with `aⱼ = Σ x₁ᵏ a_{j,k}`, the boundary trace `ν × H̃` and the
//! correction `m̃ = n + B♭₁,₀`.
//!
//! Entries are stored as matrices acting on the boundary datum `f̃ = ν × f`:
//! the recursion runs on the three constant data `f̃ = e₁, e₂, e₃`.

use num_complex::Complex64;

use crate::crosssys::{compatibility_defect, CrossContext};
use crate::eikonal::{eikonal_coeffs, phase_from_series, PhaseSeries};
use crate::error::{Error, Result};
use crate::geometry::{GammaSeries, MediaField, SurfaceChart};
use crate::numerics::{C3Matrix, C3Vector, Jet, Layout, V3};
use crate::spectral::{cutoff_eta, cutoff_eta_jet, m0_jet, m_matrix, SpectralParameter};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Extra `x₁` orders summed in [`maxwell_residual`].
const TAIL_TERMS: usize = 40;

/// How the free tangential part of `a_{j,k}`, `k ≥ 1`, is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gauge {
    /// Chosen so that the level `j + 1` systems stay solvable; with this
    /// choice both Maxwell equations hold order by order.
    Compatible,
    /// `ν × a_{j,k} = 0` for every `k ≥ 1`. Leaves the tangential part of
    /// the second equation unsolved from level one on.
    NormalOnly,
}

/// One amplitude coefficient for each of the three data `f̃ = e_c`.
pub type Columns = [V3<Jet>; 3];

#[derive(Debug, Clone)]
pub struct AmplitudeTable {
    pub x0: [f64; 2],
    pub xi: [f64; 2],
    pub sp: SpectralParameter,
    /// Number of `h`-levels and of guaranteed `x₁` orders.
    pub n: usize,
    pub gauge: Gauge,
    /// `a[j][k]` for `k ≤ K_j = 2n − 2 − j`.
    pub a: Vec<Vec<Columns>>,
    pub b: Vec<Vec<Columns>>,
    /// `ν × b_{j,0}`, assembled by its own closed form.
    pub nu_cross_b: Vec<Columns>,
    /// `ν × a_{j,k}`.
    pub tangential: Vec<Vec<Columns>>,
    pub geom: GammaSeries,
    pub media: MediaField,
    pub phase: PhaseSeries,
}

fn budget_err(geom: &GammaSeries, requested: usize) -> Error {
    Error::OrderBudgetExceeded { requested, budget: geom.order() }
}

fn columns_zero(t: &Jet) -> Columns {
    std::array::from_fn(|_| V3::zero_like(t))
}

fn values(c: &Columns) -> C3Matrix {
    let v = c.clone().map(|x| x.values());
    C3Matrix::from_columns(&v[0], &v[1], &v[2])
}

struct Engine<'a> {
    ctx: CrossContext<Jet>,
    psi: &'a [V3<Jet>],
    /// `γₗζᵢ` for `i = 2, 3`.
    gz: Vec<[V3<Jet>; 2]>,
    zmu: Vec<Jet>,
    zeps: Vec<Jet>,
    geom: &'a GammaSeries,
    /// `ν × β` and `(ρ² + r₀)⁻¹` for the tangential solve.
    q: V3<Jet>,
    em_inv: Option<Jet>,
}

impl Engine<'_> {
    fn grad(&self, v: &V3<Jet>, i: usize) -> Result<V3<Jet>> {
        let d: Vec<Jet> = v
            .0
            .iter()
            .map(|c| c.derivative(i).map_err(|_| budget_err(self.geom, c.order())))
            .collect::<Result<_>>()?;
        Ok(V3([d[0].clone(), d[1].clone(), d[2].clone()]))
    }

    /// Coefficient of `x₁ᵏ` in `(γ∇) × a` for `a = Σ x₁ᵐ row[m]`, datum `c`.
    fn curl(&self, row: &[Columns], k: usize, c: usize) -> Result<V3<Jet>> {
        let mut acc = V3::zero_like(&self.ctx.rho);
        if let Some(next) = row.get(k + 1) {
            acc = acc + self.ctx.nu.cross(&next[c]).scale(Complex64::new(k as f64 + 1.0, 0.0));
        }
        for m in 0..=k.min(row.len().saturating_sub(1)) {
            let l = k - m;
            for i in 0..2 {
                acc = acc + self.gz[l][i].cross(&self.grad(&row[m][c], i)?);
            }
        }
        Ok(acc)
    }

    /// Right-hand sides `(a♯_{j,k}, b♯_{j,k})` from everything of lower order.
    fn sharp(&self, a: &[Vec<Columns>], b: &[Vec<Columns>], j: usize, k: usize, c: usize) -> Result<(V3<Jet>, V3<Jet>)> {
        let mut ash = V3::zero_like(&self.ctx.rho);
        let mut bsh = ash.clone();
        for l in 0..k {
            let (al, bl) = (&a[j][l][c], &b[j][l][c]);
            ash = ash + bl.mul_scalar(&self.zmu[k - l]) - self.psi[k - l].cross(al);
            bsh = bsh - self.psi[k - l].cross(bl) - al.mul_scalar(&self.zeps[k - l]);
        }
        if j >= 1 {
            ash = ash + self.curl(&a[j - 1], k, c)?.scale(I);
            bsh = bsh + self.curl(&b[j - 1], k, c)?.scale(I);
        }
        Ok((ash, bsh))
    }

    /// Tangent `g` with `2ρ ν×g − 2ρ⁻¹⟨ν×β, g⟩β = t`.
    fn tangential_inverse(&self, t: &V3<Jet>) -> V3<Jet> {
        let s = self.ctx.nu.cross(t).scale(Complex64::new(-0.5, 0.0));
        let em_inv = self.em_inv.as_ref().expect("tangential solve needs z²ε₀μ₀ ≠ 0");
        let qs = self.q.dot(&s).mul_ref(em_inv);
        (s - self.q.mul_scalar(&qs)).mul_scalar(&self.ctx.rho_inv)
    }
}

/// Run the amplitude recursion at the base point of `ps`.
///
/// Levels `j = 0..n` are computed for `x₁` orders `k ≤ 2n − 2 − j`, which
/// is what it takes for the equations to hold through `x₁ⁿ⁻¹` on every
/// level. The phase must carry `φ` through order `2n − 1`.
pub fn transport_coeffs(
    ps: &PhaseSeries,
    geom: &GammaSeries,
    media: &MediaField,
    sp: &SpectralParameter,
    n: usize,
    gauge: Gauge,
) -> Result<AmplitudeTable> {
    let k0 = 2 * n - 2;
    if n < 1 || ps.psi.len() < k0 + 1 || geom.gamma.len() < k0 + 1 {
        return Err(Error::OrderBudgetExceeded { requested: 2 * n - 1, budget: ps.n.min(geom.gamma.len()) });
    }
    let c = |v: f64| Complex64::new(v, 0.0);
    let nu = geom.nu.clone();
    let beta = geom.beta_jet(ps.xi);
    let rho = ps.phi[1].clone();
    let zmu: Vec<Jet> = ps.media.mu.iter().map(|m| m.scale(sp.z)).collect();
    let zeps: Vec<Jet> = ps.media.eps.iter().map(|m| m.scale(sp.z)).collect();
    let ctx = CrossContext {
        nu: nu.clone(),
        beta: beta.clone(),
        rho: rho.clone(),
        rho_inv: rho.recip()?,
        zmu: zmu[0].clone(),
        zmu_inv: zmu[0].recip()?,
    };
    let em = rho.mul_ref(&rho).add_ref(&beta.dot(&beta));
    let eng = Engine {
        q: nu.cross(&beta),
        em_inv: match gauge {
            Gauge::Compatible => Some(em.recip().map_err(|_| Error::DegenerateRho(0.0))?),
            Gauge::NormalOnly => None,
        },
        ctx,
        psi: &ps.psi,
        gz: geom.gamma.iter().map(|g| [g.column(1), g.column(2)]).collect(),
        zmu,
        zeps,
        geom,
    };

    let jtop = n - 1;
    let kmax = |j: usize| k0 - j;
    let mut a: Vec<Vec<Columns>> = vec![Vec::new(); n];
    let mut b: Vec<Vec<Columns>> = vec![Vec::new(); n];
    let mut tang: Vec<Vec<Columns>> = vec![Vec::new(); n];
    let mut nxb: Vec<Columns> = Vec::with_capacity(n);
    let zero = columns_zero(&rho);

    for d in 0..=k0 {
        for j in 0..=d.min(jtop) {
            let k = d - j;
            if k > kmax(j) {
                continue;
            }
            let mut acol = zero.clone();
            let mut bcol = zero.clone();
            let mut gcol = zero.clone();
            let mut ncol = zero.clone();
            for col in 0..3 {
                let (ash, bsh) = eng.sharp(&a, &b, j, k, col)?;
                let g = if j == 0 && k == 0 {
                    let e = V3(std::array::from_fn(|i| Jet::real(&geom.layout, if i == col { 1.0 } else { 0.0 })));
                    nu.cross(&e).scale(c(-1.0))
                } else if k >= 1 && j < jtop && gauge == Gauge::Compatible {
                    // Tentative solve with g = 0, then fix g from the
                    // solvability of the (j+1, k−1) system, which is affine in g.
                    let trial = eng.ctx.solve(&ash, &bsh, &V3::zero_like(&rho));
                    a[j].push(std::array::from_fn(|i| if i == col { trial.a.clone() } else { acol[i].clone() }));
                    b[j].push(std::array::from_fn(|i| if i == col { trial.b.clone() } else { bcol[i].clone() }));
                    let (ash1, bsh1) = eng.sharp(&a, &b, j + 1, k - 1, col)?;
                    a[j].pop();
                    b[j].pop();
                    let defect = compatibility_defect(&eng.ctx, &ash1, &bsh1);
                    let t = defect.scale(-1.0 / (I * k as f64));
                    eng.tangential_inverse(&t)
                } else {
                    V3::zero_like(&rho)
                };
                let sol = eng.ctx.solve(&ash, &bsh, &g);
                acol[col] = sol.a;
                bcol[col] = sol.b;
                gcol[col] = g;
                ncol[col] = sol.nu_cross_b;
            }
            a[j].push(acol);
            b[j].push(bcol);
            tang[j].push(gcol);
            if k == 0 {
                nxb.push(ncol);
            }
        }
    }
    Ok(AmplitudeTable {
        x0: geom.x0,
        xi: ps.xi,
        sp: *sp,
        n,
        gauge,
        a,
        b,
        nu_cross_b: nxb,
        tangential: tang,
        geom: geom.clone(),
        media: media.clone(),
        phase: ps.clone(),
    })
}

/// Geometry, phase and amplitudes at `(x', ξ')` with a jet budget sized
/// for `n` levels.
pub fn build_table(
    chart: &SurfaceChart,
    media: &MediaField,
    sp: &SpectralParameter,
    x0: [f64; 2],
    xi: [f64; 2],
    n: usize,
    gauge: Gauge,
) -> Result<AmplitudeTable> {
    let geom = GammaSeries::new(chart, x0, 2 * n + 1, 2 * n + 2)?;
    let ps = eikonal_coeffs(&geom, media, sp, xi, 2 * n - 1)?;
    transport_coeffs(&ps, &geom, media, sp, n, gauge)
}

impl AmplitudeTable {
    /// `A_{j,k}` at the base point.
    pub fn a_matrix(&self, j: usize, k: usize) -> C3Matrix {
        values(&self.a[j][k])
    }

    pub fn b_matrix(&self, j: usize, k: usize) -> C3Matrix {
        values(&self.b[j][k])
    }

    /// `ι_ν B_{j,0}` at the base point.
    pub fn boundary_matrix(&self, j: usize) -> C3Matrix {
        values(&self.nu_cross_b[j])
    }

    /// Highest `x₁` order stored on level `j`.
    pub fn kmax(&self, j: usize) -> usize {
        self.a[j].len() - 1
    }

    /// `Σ_{j≤J} hʲ ι_ν B_{j,0}`.
    pub fn truncated_symbol(&self, h: f64, jmax: usize) -> C3Matrix {
        let mut acc = C3Matrix::zeros();
        let mut p = 1.0;
        for j in 0..=jmax.min(self.n - 1) {
            acc = acc.add(&self.boundary_matrix(j).scale(Complex64::new(p, 0.0)));
            p *= h;
        }
        acc
    }
}

/// `χ = φ₀(x₁/δ) φ₀(x₁/(|ρ|³δ))` with the same smooth step as `η`.
pub fn cutoff_chi(x1: f64, rho: Complex64, delta: f64) -> f64 {
    cutoff_eta(x1, delta) * cutoff_eta(x1, rho.norm().powi(3) * delta)
}

fn cutoff_chi_slope(x1: f64, rho: Complex64, delta: f64) -> Result<f64> {
    let l = Layout::get(1, 1);
    let t = Jet::variable(&l, 0, x1);
    let chi = cutoff_eta_jet(&t, delta)?.mul_ref(&cutoff_eta_jet(&t, rho.norm().powi(3) * delta)?);
    Ok(chi.coefficient(&[1]).re)
}

/// `e^{−iφ/h}(h∇×Ẽ − izμH̃, h∇×H̃ + izεẼ)` at `(x₁, x'₀)` for the cut-off
/// parametrix; column `c` is the response to `f̃ = e_c`.
///
/// Every term of the double series in `h` and `x₁` is summed, including the
/// orders that vanish by construction, so the value also exposes rounding.
pub fn maxwell_residual(at: &AmplitudeTable, x1: f64, h: f64) -> Result<(C3Matrix, C3Matrix)> {
    let ps = &at.phase;
    let limit = ps.region_limit();
    if !(x1 > 0.0 && x1 <= limit) {
        return Err(Error::OutsideRetainedRegion { x1, limit });
    }
    let kk = at.kmax(0) + TAIL_TERMS;
    let gv = at.geom.gamma_values(kk + 1);
    let [eps, mu, _] = at.geom.media_values(&at.media, kk + 1)?;
    let ev = ps.e_values();
    let psi: Vec<C3Vector> = (0..=kk)
        .map(|k| (k.saturating_sub(ps.n)..=k).fold(C3Vector::zeros(), |s, l| s + gv[l].apply(&ev[k - l])))
        .collect();
    let z = at.sp.z;
    let nu = at.geom.nu0();
    let series = |row: &[Columns], c: usize| -> Result<(Vec<C3Vector>, Vec<[C3Vector; 2]>)> {
        let mut v = Vec::with_capacity(row.len());
        let mut dv = Vec::with_capacity(row.len());
        for col in row {
            v.push(col[c].values());
            let d = |i: usize| -> Result<C3Vector> {
                let parts: Vec<Complex64> = col[c]
                    .0
                    .iter()
                    .map(|x| x.derivative(i).map(|y| y.value()).map_err(|_| budget_err(&at.geom, 1)))
                    .collect::<Result<_>>()?;
                Ok(V3([parts[0], parts[1], parts[2]]))
            };
            dv.push([d(0)?, d(1)?]);
        }
        Ok((v, dv))
    };
    // Coefficient of x₁ᵏ in (γ∇) × a.
    let curl = |v: &[C3Vector], dv: &[[C3Vector; 2]], k: usize| -> C3Vector {
        let mut acc = C3Vector::zeros();
        if k + 1 < v.len() {
            acc = acc + nu.cross(&v[k + 1]).scale(Complex64::new(k as f64 + 1.0, 0.0));
        }
        for m in 0..=k.min(v.len() - 1) {
            for i in 0..2 {
                acc = acc + gv[k - m].column(i + 1).cross(&dv[m][i]);
            }
        }
        acc
    };
    let chi = cutoff_chi(x1, ps.rho, ps.delta);
    let dchi = cutoff_chi_slope(x1, ps.rho, ps.delta)?;
    let mut out = [C3Matrix::zeros(), C3Matrix::zeros()];
    for c in 0..3 {
        let mut r1 = C3Vector::zeros();
        let mut r2 = C3Vector::zeros();
        let mut sum_a = C3Vector::zeros();
        let mut sum_b = C3Vector::zeros();
        let mut hp = 1.0;
        for j in 0..at.n {
            let (av, adv) = series(&at.a[j], c)?;
            let (bv, bdv) = series(&at.b[j], c)?;
            let mut xp = 1.0;
            for k in 0..=kk {
                let mut t1 = C3Vector::zeros();
                let mut t2 = C3Vector::zeros();
                for l in 0..av.len().min(k + 1) {
                    t1 = t1 + psi[k - l].cross(&av[l]) - bv[l].scale(z * mu[k - l]);
                    t2 = t2 + psi[k - l].cross(&bv[l]) + av[l].scale(z * eps[k - l]);
                }
                t1 = t1 - curl(&av, &adv, k).scale(I * h);
                t2 = t2 - curl(&bv, &bdv, k).scale(I * h);
                let w = Complex64::new(hp * xp, 0.0);
                r1 = r1 + t1.scale(w);
                r2 = r2 + t2.scale(w);
                if k < av.len() {
                    sum_a = sum_a + av[k].scale(w);
                    sum_b = sum_b + bv[k].scale(w);
                }
                xp *= x1;
            }
            hp *= h;
        }
        // h∇×(χ e^{iφ/h} a) = χ(⋯) + hχ' ν × a.
        let v1 = r1.scale(I * chi) + nu.cross(&sum_a).scale(Complex64::new(h * dchi, 0.0));
        let v2 = r2.scale(I * chi) + nu.cross(&sum_b).scale(Complex64::new(h * dchi, 0.0));
        for i in 0..3 {
            out[0].0[i][c] = v1.0[i];
            out[1].0[i][c] = v2.0[i];
        }
    }
    Ok((out[0].clone(), out[1].clone()))
}

/// Boundary symbols at a base point.
#[derive(Debug, Clone)]
pub struct BoundarySymbol {
    /// Principal symbol `m = (zμ₀)⁻¹(ρI + ρ⁻¹B)`.
    pub m: C3Matrix,
    /// `ι_ν B_{j,0}` for `j ≤ J`.
    pub levels: Vec<C3Matrix>,
    /// Commutator correction `n = Σⱼ nⱼ`.
    pub n: C3Matrix,
    /// `B♭₁,₀ = (1 − η) B̃♭₁,₀`.
    pub b_flat: C3Matrix,
    /// `m̃ = n + B♭₁,₀`.
    pub m_tilde: C3Matrix,
    pub r0: f64,
}

impl BoundarySymbol {
    /// `M_h^{(J)} = Σ_{j≤J} hʲ ι_ν B_{j,0}`.
    pub fn truncated(&self, h: f64) -> C3Matrix {
        let mut acc = C3Matrix::zeros();
        let mut p = 1.0;
        for l in &self.levels {
            acc = acc.add(&l.scale(Complex64::new(p, 0.0)));
            p *= h;
        }
        acc
    }

    /// `m + h m̃`.
    pub fn corrected(&self, h: f64) -> C3Matrix {
        self.m.add(&self.m_tilde.scale(Complex64::new(h, 0.0)))
    }
}

/// `n = −i Σⱼ Σ_{|α|=1} ∂^α_{x'}νⱼ ∂^α_{ξ'}((1−η)m₀) ι_ν Iⱼ` at the base point.
pub fn commutator_n(geom: &GammaSeries, z: Complex64, mu0: f64, xi: [f64; 2], c0: f64) -> Result<C3Matrix> {
    let r0 = geom.r0(xi);
    if cutoff_eta(r0, c0) == 1.0 {
        return Ok(C3Matrix::zeros());
    }
    let l = Layout::get(2, 1);
    let xj = [Jet::variable(&l, 0, xi[0]), Jet::variable(&l, 1, xi[1])];
    let g0 = geom.gamma_values(1)[0].clone();
    let beta = V3(std::array::from_fn(|i| xj[0].scale(g0.0[i][1]) + xj[1].scale(g0.0[i][2])));
    let r0j = beta.dot(&beta);
    let one_minus_eta = cutoff_eta_jet(&r0j, c0)?.scale(Complex64::new(-1.0, 0.0)).add_constant(Complex64::new(1.0, 0.0));
    let m0 = m0_jet(z, &beta, mu0)?.mul_scalar(&one_minus_eta);
    let nu = geom.nu0();
    let iota = C3Matrix::cross_matrix(&nu);
    let dnu = [geom.dnu[0].values(), geom.dnu[1].values()];
    let mut acc = C3Matrix::zeros();
    for alpha in 0..2 {
        let dm = crate::numerics::M3(std::array::from_fn(|r| {
            std::array::from_fn(|s| m0.0[r][s].coefficient(if alpha == 0 { &[1, 0] } else { &[0, 1] }))
        }));
        for j in 0..3 {
            let ij = C3Matrix::cross_matrix(&C3Vector::basis(j));
            acc = acc.add(&dm.matmul(&iota).matmul(&ij).scale(dnu[alpha].0[j]));
        }
    }
    Ok(acc.scale(-I))
}

/// Points on the circle used for the `ε → 0` limit in [`flattened_b10`].
const FLAT_POINTS: usize = 32;

/// `B̃♭₁,₀`: the level-one boundary coefficient with `ρ` replaced by `i√r₀`,
/// before the `(1 − η)` factor.
///
/// The substitution is the value at `s = 0` of the construction with `ε`
/// replaced by `sε`. In the compatible gauge intermediate terms carry
/// `(ρ² + r₀)⁻¹ = (s z²ε₀μ₀)⁻¹` while the boundary coefficient itself is
/// analytic at `s = 0`, so the value is taken as the mean over a circle
/// `|s| = r₀/(4|z²ε₀μ₀|)`, inside the disc where `ρ` stays analytic. The
/// normal-only gauge has no such factor and is evaluated at `ε = 0` directly.
pub fn flattened_b10(
    geom: &GammaSeries,
    media: &MediaField,
    sp: &SpectralParameter,
    xi: [f64; 2],
    gauge: Gauge,
) -> Result<C3Matrix> {
    let r0 = geom.r0(xi);
    if r0 <= 0.0 {
        return Err(Error::ZeroFrequencyCovector);
    }
    let n_phase = 3;
    let ms = geom.media_series(media, n_phase + 1)?;
    let em = geom.media_values(media, n_phase + crate::eikonal::TAIL_TERMS + 1)?[2].clone();
    let level_one = |s: Complex64| -> Result<C3Matrix> {
        let mut scaled = ms.clone();
        scaled.eps = ms.eps.iter().map(|e| e.scale(s)).collect();
        scaled.eps_mu = ms.eps_mu.iter().map(|e| e.scale(s)).collect();
        let emv = em.iter().map(|e| e * s).collect();
        let ps = phase_from_series(geom, scaled, emv, sp, xi, n_phase)?;
        Ok(transport_coeffs(&ps, geom, media, sp, 2, gauge)?.boundary_matrix(1))
    };
    match gauge {
        Gauge::NormalOnly => level_one(Complex64::new(0.0, 0.0)),
        Gauge::Compatible => {
            let kappa = (sp.z * sp.z * em[0]).norm();
            let radius = if kappa > 0.0 { 0.25 * r0 / kappa } else { 1.0 };
            let mut acc = C3Matrix::zeros();
            for k in 0..FLAT_POINTS {
                let t = std::f64::consts::TAU * (k as f64 + 0.5) / FLAT_POINTS as f64;
                acc = acc.add(&level_one(Complex64::from_polar(radius, t))?);
            }
            Ok(acc.scale(Complex64::new(1.0 / FLAT_POINTS as f64, 0.0)))
        }
    }
}

/// Assemble `m`, the levels `ι_ν B_{j,0}` (`j ≤ jmax`), `n`, `B♭₁,₀` and `m̃`.
pub fn boundary_symbol(at: &AmplitudeTable, jmax: usize, c0: f64) -> Result<BoundarySymbol> {
    let beta = at.geom.beta(at.xi);
    let r0 = beta.dot(&beta).re;
    let (eps0, mu0) = (at.phase.media.eps0(), at.phase.media.mu0());
    let m = m_matrix(at.sp.z, &beta, eps0, mu0)?;
    let levels = (0..=jmax.min(at.n - 1)).map(|j| at.boundary_matrix(j)).collect();
    let n = commutator_n(&at.geom, at.sp.z, mu0, at.xi, c0)?;
    let w = 1.0 - cutoff_eta(r0, c0);
    let b_flat = if w == 0.0 {
        C3Matrix::zeros()
    } else {
        flattened_b10(&at.geom, &at.media, &at.sp, at.xi, Gauge::Compatible)?.scale(Complex64::new(w, 0.0))
    };
    Ok(BoundarySymbol { m, levels, m_tilde: n.add(&b_flat), n, b_flat, r0 })
}

/// Tangential datum `g_{j,k} = ν × a_{j,k}` as values, one column per `f̃`.
pub fn tangential_matrix(at: &AmplitudeTable, j: usize, k: usize) -> C3Matrix {
    values(&at.tangential[j][k])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Profile;
    use crate::spectral::DEFAULT_C0;
    use std::f64::consts::FRAC_PI_2;

    fn sp() -> SpectralParameter {
        SpectralParameter::from_hz(0.01, Complex64::new(1.0, 0.3)).unwrap()
    }

    fn sphere(n: usize, media: &MediaField, x0: [f64; 2], xi: [f64; 2]) -> AmplitudeTable {
        build_table(&SurfaceChart::Sphere { radius: 1.0 }, media, &sp(), x0, xi, n, Gauge::Compatible).unwrap()
    }

    #[test]
    fn flat_chart_has_no_corrections() {
        let at = build_table(&SurfaceChart::Plane, &MediaField::constant(2.0, 1.0), &sp(), [0.1, 0.2], [0.7, -0.3], 3, Gauge::Compatible)
            .unwrap();
        for k in 1..=at.kmax(0) {
            assert!(at.a_matrix(0, k).max_abs() < 1e-15 && at.b_matrix(0, k).max_abs() < 1e-15);
        }
        for j in 1..3 {
            for k in 0..=at.kmax(j) {
                assert!(at.a_matrix(j, k).max_abs() < 1e-15 && at.b_matrix(j, k).max_abs() < 1e-15);
            }
        }
        let bs = boundary_symbol(&at, 1, DEFAULT_C0).unwrap();
        assert!(bs.m_tilde.max_abs() == 0.0);
        for x1 in [1e-3, 1e-2] {
            let (v1, v2) = maxwell_residual(&at, x1, 0.01).unwrap();
            assert!(v1.max_abs() < 1e-14 && v2.max_abs() < 1e-14);
        }
    }

    #[test]
    fn leading_amplitude_closed_form() {
        let at = sphere(2, &MediaField::constant(1.5, 2.0), [1.0, 0.5], [0.6, -0.9]);
        let nu = at.geom.nu0();
        let beta = at.geom.beta(at.xi);
        let rho = at.phase.rho;
        let a00 = at.a_matrix(0, 0);
        for c in 0..3 {
            let g = nu.cross(&C3Vector::basis(c)).scale(Complex64::new(-1.0, 0.0));
            let want = nu.cross(&g).scale(Complex64::new(-1.0, 0.0)) + nu.scale(nu.dot(&beta.cross(&g)) / rho);
            assert!((a00.column(c) - want).norm() < 1e-13);
        }
    }

    #[test]
    fn boundary_condition_on_higher_levels() {
        let at = sphere(4, &MediaField::constant(1.0, 1.0), [1.1, 0.4], [0.8, 0.5]);
        let nu = at.geom.nu0();
        for j in 1..4 {
            let a = at.a_matrix(j, 0);
            for c in 0..3 {
                assert!(nu.cross(&a.column(c)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn normalization_of_leading_amplitude() {
        let n = 4;
        let at = sphere(n, &MediaField::constant(1.0, 1.0), [1.1, 0.4], [0.8, 0.5]);
        for k in 0..n {
            for c in 0..3 {
                let mut s = at.phase.psi[k].dot(&at.a[0][0][c]);
                for l in 1..=k {
                    s = s + at.phase.psi[k - l].dot(&at.a[0][l][c]);
                }
                assert!(s.value().norm() < 1e-10, "k={k}: {}", s.value());
            }
        }
    }

    #[test]
    fn every_level_system_is_solvable() {
        let n = 3;
        let at = sphere(n, &MediaField { eps: Profile::Radial { value: 2.0, curvature: 0.2 }, mu: Profile::Constant { value: 1.0 } }, [0.9, 0.1], [1.2, 0.4]);
        // Rebuild the right-hand sides from the table and check compatibility.
        let ps = &at.phase;
        let zmu: Vec<Jet> = ps.media.mu.iter().map(|m| m.scale(at.sp.z)).collect();
        let zeps: Vec<Jet> = ps.media.eps.iter().map(|m| m.scale(at.sp.z)).collect();
        let rho = ps.phi[1].clone();
        let eng = Engine {
            ctx: CrossContext {
                nu: at.geom.nu.clone(),
                beta: at.geom.beta_jet(at.xi),
                rho_inv: rho.recip().unwrap(),
                rho,
                zmu_inv: zmu[0].recip().unwrap(),
                zmu: zmu[0].clone(),
            },
            psi: &ps.psi,
            gz: at.geom.gamma.iter().map(|g| [g.column(1), g.column(2)]).collect(),
            zmu,
            zeps,
            geom: &at.geom,
            q: at.geom.nu.cross(&at.geom.beta_jet(at.xi)),
            em_inv: None,
        };
        for j in 0..n {
            for k in 0..=at.kmax(j) {
                for c in 0..3 {
                    let (ash, bsh) = eng.sharp(&at.a, &at.b, j, k, c).unwrap();
                    let d = compatibility_defect(&eng.ctx, &ash, &bsh).values().norm();
                    assert!(d < 1e-10, "j={j} k={k}: {d:e}");
                }
            }
        }
    }

    #[test]
    fn leading_trace_is_principal_symbol() {
        for (x0, xi) in [([1.1, 0.4], [0.8, 0.5]), ([2.0, -1.0], [-3.0, 1.5])] {
            let at = sphere(2, &MediaField::constant(2.0, 3.0), x0, xi);
            let bs = boundary_symbol(&at, 1, DEFAULT_C0).unwrap();
            let nu = at.geom.nu0();
            let p = C3Matrix::identity().sub(&C3Matrix::outer(&nu, &nu));
            let lhs = bs.levels[0].matmul(&p);
            let rhs = bs.m.matmul(&p);
            assert!(lhs.sub(&rhs).max_abs() < 1e-12 * (1.0 + rhs.max_abs()));
        }
    }

    #[test]
    fn level_one_matches_mode_expansion() {
        // Exact sphere impedances expanded in h at fixed r₀ give these
        // first-order terms for TE (f̃ ⊥ β) and TM (f̃ ∥ β) at the equator.
        let z = sp().z;
        for (eps, mu) in [(1.0, 1.0), (2.0, 3.0)] {
            for r0 in [0.25f64, 2.0, 30.0] {
                let at = sphere(2, &MediaField::constant(eps, mu), [FRAC_PI_2, 0.0], [0.0, r0.sqrt()]);
                let m1 = at.boundary_matrix(1);
                let rho = crate::spectral::rho(r0, z, eps * mu).unwrap();
                let te = -I * r0 / (2.0 * z * mu * rho * rho);
                let tm = I * r0 * z * eps / (2.0 * rho.powi(4));
                assert!((m1.0[2][2] - te).norm() < 1e-12 * (1.0 + te.norm()));
                assert!((m1.0[1][1] - tm).norm() < 1e-12 * (1.0 + tm.norm()));
                assert!(m1.0[1][2].norm() < 1e-13 && m1.0[2][1].norm() < 1e-13);
            }
        }
    }

    #[test]
    fn correction_is_media_independent() {
        let z = sp().z;
        let pts = [([1.0, 0.3], [4.0, 3.5]), ([2.2, -0.7], [-6.0, 2.0])];
        for (x0, xi) in pts {
            let mut reference: Option<C3Matrix> = None;
            for (eps, mu) in [(1.0, 1.0), (4.0, 1.0), (2.0, 3.0), (1.0, 5.0), (std::f64::consts::PI, std::f64::consts::E)] {
                let at = sphere(2, &MediaField::constant(eps, mu), x0, xi);
                let bs = boundary_symbol(&at, 1, DEFAULT_C0).unwrap();
                assert!(bs.r0 > 2.0 * DEFAULT_C0);
                let scaled = bs.m_tilde.scale(Complex64::new(mu, 0.0));
                match &reference {
                    None => reference = Some(scaled),
                    Some(r) => assert!(scaled.sub(r).max_abs() < 1e-10, "{}", scaled.sub(r).max_abs()),
                }
            }
        }
        // At the equator with azimuthal ξ', μ₀B♭ is i/(2z) on the direction
        // orthogonal to β and vanishes along β.
        let at = sphere(2, &MediaField::constant(1.0, 1.0), [FRAC_PI_2, 0.0], [0.0, 6.0]);
        let bs = boundary_symbol(&at, 1, DEFAULT_C0).unwrap();
        assert!((bs.b_flat.0[2][2] - I / (2.0 * z)).norm() < 1e-12);
        assert!(bs.b_flat.0[1][1].norm() < 1e-12);
    }

    #[test]
    fn commutator_vanishes_inside_cutoff() {
        let at = sphere(2, &MediaField::constant(1.0, 1.0), [1.1, 0.4], [0.8, 0.5]);
        let bs = boundary_symbol(&at, 1, DEFAULT_C0).unwrap();
        assert!(bs.r0 < DEFAULT_C0);
        assert!(bs.n.max_abs() == 0.0 && bs.b_flat.max_abs() == 0.0);
    }

    #[test]
    fn chi_profile() {
        let rho = Complex64::new(0.3, 0.4);
        assert_eq!(cutoff_chi(0.0, Complex64::new(2.0, 1.0), 0.1), 1.0);
        assert_eq!(cutoff_chi(0.3, Complex64::new(2.0, 1.0), 0.1), 0.0);
        let v = cutoff_chi(1.5 * 0.1 * 0.125, rho, 0.1);
        assert!(v > 0.0 && v < 1.0);
    }

    #[test]
    fn residual_scales_with_h() {
        let at = sphere(3, &MediaField::constant(1.0, 1.0), [1.1, 0.4], [0.8, 0.5]);
        let x1 = 1e-3;
        let r = |h: f64| maxwell_residual(&at, x1, h).unwrap().0.max_abs();
        let slope = (r(1e-2) / r(1e-3)).log10();
        assert!((slope - 3.0).abs() < 0.1, "{slope}");
    }
}
