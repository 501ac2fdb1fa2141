//! Lanczos norms against a dense singular-value decomposition.

use dtn_core::quantizer::{composition_defect, flat_rho, operator_norm, quantize, BandProjection, Defect, LinearMap};
use nalgebra::DMatrix;
use num_complex::Complex64;

fn dense_norm(op: &dyn LinearMap) -> f64 {
    let d = op.dim();
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    for j in 0..d {
        let mut e = vec![Complex64::new(0.0, 0.0); d];
        e[j] = Complex64::new(1.0, 0.0);
        for (i, v) in op.apply(&e).into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    m.singular_values().max()
}

#[test]
fn norms_match_dense_svd() {
    let n = 16;
    let symbols: Vec<(&str, Box<dyn Fn([f64; 2], [f64; 2]) -> Complex64 + Sync>)> = vec![
        ("rho^-1", Box::new(|x: [f64; 2], e: [f64; 2]| (1.0 + 0.3 * x[0].cos()) * flat_rho(0.2, e).inv())),
        ("rho", Box::new(|x: [f64; 2], e: [f64; 2]| (1.0 + 0.3 * x[1].sin()) * flat_rho(0.5, e) / (1.0 + e[0] * e[0] + e[1] * e[1]))),
        ("mixed", Box::new(|x: [f64; 2], e: [f64; 2]| Complex64::new(x[0].cos(), x[1].sin()) * (-(e[0] * e[0] + e[1] * e[1])).exp() + Complex64::new(0.0, e[0]).exp())),
    ];
    for h in [0.25, 1.0 / 16.0] {
        for (tag, a) in &symbols {
            let op = quantize(a.as_ref(), tag, h, n).unwrap();
            let got = operator_norm(&op);
            let want = dense_norm(&op);
            assert!(got.converged, "{tag}: {got:?}");
            assert!((got.value - want).abs() <= 1e-6 * want, "{tag} h={h}: {} vs {want}", got.value);
        }
    }
}

#[test]
fn defect_norm_matches_dense_svd() {
    let n = 16;
    let h = 1.0 / 8.0;
    let a = |x: [f64; 2], e: [f64; 2]| Complex64::new((-(e[0] - 0.5).powi(2) - (e[1] - 0.3).powi(2)).exp(), 0.0) * (1.0 + 0.0 * x[0]);
    let b = |x: [f64; 2], _: [f64; 2]| Complex64::new(x[0].cos() + 0.5 * (2.0 * x[1]).sin(), 0.0);
    let ab = |x: [f64; 2], e: [f64; 2]| a(x, e) * b(x, e);
    let (oa, ob, oab) = (quantize(&a, "a", h, n).unwrap(), quantize(&b, "b", h, n).unwrap(), quantize(&ab, "ab", h, n).unwrap());
    for guard in [0, 2] {
        let d = Defect { a: &oa, b: &ob, ab: &oab, band: BandProjection { n, guard } };
        let got = operator_norm(&d).value;
        let want = dense_norm(&d);
        assert!((got - want).abs() <= 1e-6 * want, "guard={guard}: {got} vs {want}");
    }
    let wa = |_: f64, x: [f64; 2], e: [f64; 2]| a(x, e);
    let wb = |_: f64, x: [f64; 2], e: [f64; 2]| b(x, e);
    let curve = composition_defect(&wa, &wb, &[h], n, 2).unwrap();
    let d = Defect { a: &oa, b: &ob, ab: &oab, band: BandProjection { n, guard: 2 } };
    assert!((curve.rows[0].defect - dense_norm(&d)).abs() < 1e-6 * curve.rows[0].defect);
}
