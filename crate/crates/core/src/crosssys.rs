//! Closed-form solution of the algebraic system
//!
//! ```text
//! ψ₀ × a − zμ₀ b = a♯
//! ψ₀ × b + zε₀ a = b♯
//! ν × a = g
//! ```
//!
//! with `ψ₀ = ρν − β`, `⟨β, ν⟩ = 0` and `⟨g, ν⟩ = 0`.
//!
//! Since `⟨ψ₀, ψ₀⟩ = z²ε₀μ₀`, the first two equations have rank four as a
//! system in `(a, b)`. The closed form uses the first equation, the normal
//! component of the second and the third; the remaining two components of
//! the second hold exactly when `zμ₀b♯ + ψ₀ × a♯` is parallel to `ψ₀`
//! (see [`compatibility_defect`]).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{C3Vector, DenseMatrix, Scalar, V3};

/// Coefficients of the system at one point, generic over the scalar ring so
/// the same formulas run on jets.
#[derive(Debug, Clone)]
pub struct CrossContext<T> {
    pub nu: V3<T>,
    pub beta: V3<T>,
    pub rho: T,
    pub rho_inv: T,
    /// `zμ₀`
    pub zmu: T,
    /// `(zμ₀)⁻¹`
    pub zmu_inv: T,
}

/// Solution `(a, b)` together with the separately assembled `ν × b`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSolution<T> {
    pub a: V3<T>,
    pub b: V3<T>,
    pub nu_cross_b: V3<T>,
}

impl<T: Scalar> CrossContext<T> {
    /// `⟨ν, a⟩` from the normal component of the second equation.
    pub fn normal_component(&self, a_sh: &V3<T>, b_sh: &V3<T>, g: &V3<T>) -> T {
        let (nu, beta) = (&self.nu, &self.beta);
        let ri = &self.rho_inv;
        let ri2 = ri.clone() * ri.clone();
        ri.clone() * nu.dot(&beta.cross(g)) - ri2.clone() * beta.cross(a_sh).dot(nu)
            + self.zmu.clone() * ri2 * b_sh.dot(nu)
    }

    pub fn solve(&self, a_sh: &V3<T>, b_sh: &V3<T>, g: &V3<T>) -> CrossSolution<T> {
        let (nu, beta) = (&self.nu, &self.beta);
        let ri = &self.rho_inv;
        let an = self.normal_component(a_sh, b_sh, g);
        let nxg = nu.cross(g);
        let a = nu.mul_scalar(&an) - nxg.clone();
        // zμ₀ b = ρg − a♯ − β × a
        let bxn = beta.cross(nu);
        let zb = g.mul_scalar(&self.rho) + beta.cross(&nxg) - bxn.mul_scalar(&an) - a_sh.clone();
        let b = zb.mul_scalar(&self.zmu_inv);
        let bxa = beta.cross(a_sh);
        let big = beta.cross(g);
        let zrho_mu = self.zmu.clone() * ri.clone();
        let znb = nxg.mul_scalar(&self.rho) + big.clone() - nu.mul_scalar(&nu.dot(&big))
            + beta.mul_scalar(&(ri.clone() * beta.dot(&nxg)))
            - bxa.mul_scalar(ri)
            + nu.mul_scalar(&(ri.clone() * bxa.dot(nu)))
            + b_sh.mul_scalar(&zrho_mu)
            - nu.mul_scalar(&(zrho_mu * b_sh.dot(nu)));
        CrossSolution { a, b, nu_cross_b: znb.mul_scalar(&self.zmu_inv) }
    }
}

/// Plain-number input of the cross system.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSystemInput {
    pub rho: Complex64,
    pub nu: [f64; 3],
    pub beta: [f64; 3],
    pub z: Complex64,
    pub eps0: f64,
    pub mu0: f64,
    pub a_sharp: C3Vector,
    pub b_sharp: C3Vector,
    pub g: C3Vector,
}

impl CrossSystemInput {
    pub fn psi0(&self) -> C3Vector {
        C3Vector::from_real(self.nu).scale(self.rho) - C3Vector::from_real(self.beta)
    }

    fn context(&self) -> CrossContext<Complex64> {
        let zmu = self.z * self.mu0;
        CrossContext {
            nu: C3Vector::from_real(self.nu),
            beta: C3Vector::from_real(self.beta),
            rho: self.rho,
            rho_inv: self.rho.inv(),
            zmu,
            zmu_inv: zmu.inv(),
        }
    }

    /// Residuals of the three equations.
    pub fn residuals(&self, a: &C3Vector, b: &C3Vector) -> [C3Vector; 3] {
        let psi = self.psi0();
        let c = |v: f64| Complex64::new(v, 0.0);
        [
            psi.cross(a) - b.scale(self.z * self.mu0) - self.a_sharp.clone(),
            psi.cross(b) + a.scale(self.z * c(self.eps0)) - self.b_sharp.clone(),
            C3Vector::from_real(self.nu).cross(a) - self.g.clone(),
        ]
    }

    /// Scale used to make residuals relative.
    pub fn scale(&self) -> f64 {
        let r = self.rho.norm().max(1.0);
        let z = (self.z.norm() * self.mu0.max(self.eps0)).max(1.0);
        let b = C3Vector::from_real(self.beta).norm().max(1.0);
        (self.a_sharp.norm() + self.b_sharp.norm() + self.g.norm()) * r * z * b
    }
}

/// Solve the cross system in closed form.
pub fn solve_cross_system(input: &CrossSystemInput) -> Result<CrossSolution<Complex64>> {
    if input.rho.norm() < 1e-14 {
        return Err(Error::DegenerateRho(input.rho.norm()));
    }
    let nu = C3Vector::from_real(input.nu);
    let bn = C3Vector::from_real(input.beta).dot(&nu).norm();
    if bn > 1e-13 * (1.0 + C3Vector::from_real(input.beta).norm()) {
        return Err(Error::NotTangent { what: "<beta, nu>", value: bn });
    }
    let gn = input.g.dot(&nu).norm();
    if gn > 1e-13 * (1.0 + input.g.norm()) {
        return Err(Error::NotTangent { what: "<g, nu>", value: gn });
    }
    Ok(input.context().solve(&input.a_sharp, &input.b_sharp, &input.g))
}

/// `zμ₀b♯ + ψ₀ × a♯ − (⟨ν, ·⟩/ρ) ψ₀`: vanishes exactly when the system is
/// solvable. The subtracted multiple of `ψ₀` is the one fixed by the normal
/// component, so this is zero iff the vector is parallel to `ψ₀`.
pub fn compatibility_defect<T: Scalar>(ctx: &CrossContext<T>, a_sh: &V3<T>, b_sh: &V3<T>) -> V3<T> {
    let psi = ctx.nu.mul_scalar(&ctx.rho) - ctx.beta.clone();
    let w = b_sh.mul_scalar(&ctx.zmu) + psi.cross(a_sh);
    let k = w.dot(&ctx.nu) * ctx.rho_inv.clone();
    w - psi.mul_scalar(&k)
}

/// The 6×6 linear system in `(a, b)` formed by the first equation, the
/// normal component of the second, and the two tangential components of the
/// third (in the basis `t₁`, `ν × t₁`). Independent of the closed form.
pub fn dense_system(input: &CrossSystemInput) -> (DenseMatrix, Vec<Complex64>) {
    let c = |v: f64| Complex64::new(v, 0.0);
    let psi = input.psi0();
    let nu = C3Vector::from_real(input.nu);
    let zmu = input.z * input.mu0;
    let zeps = input.z * input.eps0;
    let px = crate::numerics::C3Matrix::cross_matrix(&psi);
    let nx = crate::numerics::C3Matrix::cross_matrix(&nu);
    let mut m = DenseMatrix::zeros(6, 6);
    let mut rhs = vec![c(0.0); 6];
    for i in 0..3 {
        for j in 0..3 {
            m[(i, j)] = px.0[i][j];
        }
        m[(i, 3 + i)] = -zmu;
        rhs[i] = input.a_sharp.0[i];
    }
    // ν · (ψ₀ × b + zε₀ a) = ν · b♯
    let nu_px = (0..3).map(|j| (0..3).map(|i| nu.0[i] * px.0[i][j]).sum::<Complex64>());
    for (j, v) in nu_px.enumerate() {
        m[(3, 3 + j)] = v;
        m[(3, j)] = zeps * nu.0[j];
    }
    rhs[3] = input.b_sharp.dot(&nu);
    let pick = if input.nu[0].abs() < 0.9 { 0 } else { 1 };
    let e = C3Vector::basis(pick);
    let t1 = e.clone() - nu.scale(nu.dot(&e));
    let t1 = t1.scale(c(1.0 / t1.norm()));
    let t2 = nu.cross(&t1);
    for (r, t) in [t1, t2].iter().enumerate() {
        for j in 0..3 {
            m[(4 + r, j)] = (0..3).map(|i| t.0[i] * nx.0[i][j]).sum();
        }
        rhs[4 + r] = t.dot(&input.g);
    }
    (m, rhs)
}

/// Random admissible input: unit normal, tangent `β` of length `beta_norm`,
/// `|ρ| = rho_mag` with `Im ρ > 0`, `z` fixed by `ρ² + r₀ = z²ε₀μ₀`, and
/// random data `a♯`, `g` with `b♯` chosen so the system is solvable.
pub fn sample_admissible<R: rand::Rng>(rng: &mut R, rho_mag: f64, beta_norm: f64) -> CrossSystemInput {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let unit = |rng: &mut R| loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            break v.map(|x| x / n);
        }
    };
    let nu = unit(rng);
    let r = unit(rng);
    let d: f64 = r.iter().zip(&nu).map(|(a, b)| a * b).sum();
    let t: [f64; 3] = std::array::from_fn(|i| r[i] - d * nu[i]);
    let tn = (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt();
    let beta: [f64; 3] = t.map(|x| x * beta_norm / tn);
    let (eps0, mu0) = (rng.gen_range(0.5..3.0), rng.gen_range(0.5..3.0));
    let rho = c(rng.gen_range(-1.0..1.0), rng.gen_range(0.05..1.0));
    let rho = rho * (rho_mag / rho.norm());
    let r0: f64 = beta.iter().map(|x| x * x).sum();
    let z = ((rho * rho + r0) / (eps0 * mu0)).sqrt();
    let mut rc = || C3Vector::new(
        c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
    );
    let a_sharp = rc();
    let g = rc();
    let nuv = C3Vector::from_real(nu);
    let g = g.clone() - nuv.scale(g.dot(&nuv));
    let kappa = rc().0[0];
    let mut inp = CrossSystemInput {
        rho,
        nu,
        beta,
        z,
        eps0,
        mu0,
        a_sharp,
        b_sharp: C3Vector::zeros(),
        g,
    };
    let psi = inp.psi0();
    inp.b_sharp = (psi.scale(kappa) - psi.cross(&inp.a_sharp)).scale((z * mu0).inv());
    inp
}

/// Relative difference between the closed form and the dense reference
/// solve, normalized by the reference solution size.
pub fn oracle_disagreement(input: &CrossSystemInput) -> Result<f64> {
    let s = solve_cross_system(input)?;
    let (m, rhs) = dense_system(input);
    let x = crate::numerics::cross_solve_oracle(&m, &rhs)?.x;
    let xa = V3([x[0], x[1], x[2]]);
    let xb = V3([x[3], x[4], x[5]]);
    let size = xa.norm() + xb.norm();
    Ok(((xa - s.a).norm() + (xb - s.b).norm()) / size.max(1e-300))
}

/// Largest residual of the three equations relative to the input scale.
pub fn relative_residual(input: &CrossSystemInput) -> Result<f64> {
    let s = solve_cross_system(input)?;
    let scale = input.scale().max(s.a.norm() + s.b.norm());
    Ok(input.residuals(&s.a, &s.b).iter().map(|r| r.norm()).fold(0.0, f64::max) / scale)
}
