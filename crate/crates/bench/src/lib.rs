//! Benchmark fixtures.

use dtn_core::crosssys::CrossSystemInput;
use dtn_core::numerics::V3;
use num_complex::Complex64;

/// An admissible cross-system input: `β` and `g` tangent, `z` on the
/// characteristic variety and `b♯` chosen so the system is solvable.
pub fn cross_input(rho: Complex64) -> CrossSystemInput {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let s = 0.5f64.sqrt();
    let beta = [0.3, -0.3, 1.2];
    let (eps0, mu0) = (2.0, 1.5);
    let r0: f64 = beta.iter().map(|x| x * x).sum();
    let z = ((rho * rho + r0) / (eps0 * mu0)).sqrt();
    let mut inp = CrossSystemInput {
        rho,
        nu: [s, s, 0.0],
        beta,
        z,
        eps0,
        mu0,
        a_sharp: V3([c(0.2, 0.1), c(-0.4, 0.3), c(1.0, -0.5)]),
        b_sharp: V3([c(0.0, 0.0); 3]),
        g: V3([c(0.4, 0.3), c(-0.4, -0.3), c(0.2, -0.8)]),
    };
    let psi = inp.psi0();
    inp.b_sharp = (psi.scale(c(0.7, -0.2)) - psi.cross(&inp.a_sharp)).scale((z * mu0).inv());
    inp
}
