//! Shared oracles for the integration tests and the acceptance harness.
#![allow(dead_code)]

use dtn_core::numerics::{Jet, Layout, M3, V3};
use dtn_core::transport::AmplitudeTable;
use num_complex::Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Largest coefficient of `x₁ᵏ` (`k < n`, all `x'`-monomials) in the two
/// Maxwell transport equations on levels `j < n`, evaluated in three-variable
/// jets with the exact `γ = J⁻ᵀ` (no `x₁`-series of `γ` involved).
///
/// With `pointwise` only the base-point values are compared; otherwise every
/// `x'`-monomial is. Returns `(eq1, eq2)` and the lowest `x'` order checked.
pub fn equation_defects(at: &AmplitudeTable, pointwise: bool) -> (f64, f64, usize) {
    let geom = &at.geom;
    let l3 = Layout::get(3, geom.layout.max_order());
    let t = Jet::variable(&l3, 0, 0.0);
    let x2 = Jet::variable(&l3, 1, at.x0[0]);
    let x3 = Jet::variable(&l3, 2, at.x0[1]);
    let fr = geom.chart.frame(&x2, &x3, 1, 2).unwrap();
    let dn = |v: usize| V3(fr.nu.0.clone().map(|c| c.derivative(v).unwrap()));
    let c2 = fr.d2.clone() + dn(1).mul_scalar(&t);
    let c3 = fr.d3.clone() + dn(2).mul_scalar(&t);
    let j = M3::from_columns(&fr.nu, &c2, &c3);
    let gamma = j.adjugate().mul_scalar(&j.det().recip().unwrap()).transpose();
    let phi = Jet::join_first(&at.phase.phi, &l3);
    let grad = V3([phi.derivative(0).unwrap(), phi.derivative(1).unwrap(), phi.derivative(2).unwrap()]);
    let psi = gamma.apply(&grad);
    let y = fr.s.clone() + fr.nu.mul_scalar(&t);
    let eps = at.media.eps.eval(&y).scale(at.sp.z);
    let mu = at.media.mu.eval(&y).scale(at.sp.z);
    let lift = |row: &Vec<dtn_core::transport::Columns>, c: usize| -> V3<Jet> {
        V3(std::array::from_fn(|i| {
            let parts: Vec<Jet> = row.iter().map(|col| col[c].0[i].clone()).collect();
            Jet::join_first(&parts, &l3)
        }))
    };
    let curl = |a: &V3<Jet>| -> V3<Jet> {
        let mut acc = V3::zero_like(&t);
        for i in 0..3 {
            let d = V3(a.0.clone().map(|x| x.derivative(i).unwrap()));
            acc = acc + gamma.column(i).cross(&d);
        }
        acc
    };
    let n = at.n;
    let (mut e1, mut e2, mut checked) = (0.0f64, 0.0f64, usize::MAX);
    for c in 0..3 {
        let mut prev: Option<(V3<Jet>, V3<Jet>)> = None;
        for jj in 0..n {
            let a = lift(&at.a[jj], c);
            let b = lift(&at.b[jj], c);
            let mut r1 = psi.cross(&a) - b.mul_scalar(&mu);
            let mut r2 = psi.cross(&b) + a.mul_scalar(&eps);
            if let Some((pa, pb)) = &prev {
                r1 = r1 - curl(pa).scale(I);
                r2 = r2 - curl(pb).scale(I);
            }
            for (r, e) in [(&r1, &mut e1), (&r2, &mut e2)] {
                for comp in &r.0 {
                    let parts = comp.split_first();
                    assert!(parts.len() >= n, "oracle jets too short");
                    for p in parts.iter().take(n) {
                        checked = checked.min(p.order());
                        *e = e.max(if pointwise { p.value().norm() } else { p.max_abs_upto(p.order()) });
                    }
                }
            }
            prev = Some((a, b));
        }
    }
    (e1, e2, checked)
}
