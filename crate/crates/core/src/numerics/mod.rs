//! Complex scalar, vector, jet and dense linear-algebra primitives.

pub mod dd;
pub mod dense;
pub mod jet;
pub mod linalg;

pub use dd::lu_solve_extended;
pub use dense::{cross_solve_oracle, lu_solve, DenseMatrix, Solve};
pub use jet::{Jet, Layout};
pub use linalg::{sqrt_upper, C3Matrix, C3Vector, Scalar, M3, V3};

use num_complex::Complex64;

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Roots of the monic cubic `t³ + a t² + b t + c` by Durand–Kerner iteration.
pub fn cubic_roots(a: Complex64, b: Complex64, c: Complex64) -> [Complex64; 3] {
    let p = |t: Complex64| ((t + a) * t + b) * t + c;
    let scale = 1.0 + a.norm().max(b.norm().sqrt()).max(c.norm().cbrt());
    let seed = Complex64::new(0.4, 0.9);
    let mut r = [seed * scale, seed * seed * scale, seed * seed * seed * scale];
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..3 {
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..3 {
                if j != i {
                    den *= r[i] - r[j];
                }
            }
            if den.norm() == 0.0 {
                den = Complex64::new(1e-300, 0.0);
            }
            let step = p(r[i]) / den;
            r[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved <= 1e-16 * scale {
            break;
        }
    }
    r
}
