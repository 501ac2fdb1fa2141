use std::path::Path;

use dtn_core::geometry::{MediaField, SurfaceChart};
use dtn_core::suite::IdentityOptions;
use dtn_core::transmission::TransmissionConfig;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable that replaces the built-in default tolerance.
pub const TOLERANCE_ENV: &str = "DTN_TOLERANCE";
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Everything a run needs. Missing fields take their defaults; unknown
/// fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for random test points.
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    /// Residual tolerance for the exact checks (identities, boundary
    /// condition, normalization, flat eikonal).
    pub tolerance: Option<f64>,
    pub identities: IdentitiesConfig,
    pub eikonal: EikonalConfig,
    pub residual: ResidualConfig,
    pub dtn_compare: DtnCompareConfig,
    pub te_scan: TeScanConfig,
    pub quantizer: QuantizerConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            threads: 0,
            tolerance: None,
            identities: IdentitiesConfig::default(),
            eikonal: EikonalConfig::default(),
            residual: ResidualConfig::default(),
            dtn_compare: DtnCompareConfig::default(),
            te_scan: TeScanConfig::default(),
            quantizer: QuantizerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentitiesConfig {
    pub charts: Vec<SurfaceChart>,
    pub points: usize,
    pub z: Complex64,
    pub eps: f64,
    pub mu: f64,
    pub eps2: f64,
    pub mu2: f64,
    /// Fault injection: added to every entry of the coordinate Jacobian
    /// series before the checks.
    pub gamma_perturbation: f64,
}

impl Default for IdentitiesConfig {
    fn default() -> Self {
        let o = IdentityOptions::default();
        IdentitiesConfig {
            charts: vec![SurfaceChart::Sphere { radius: 1.0 }, SurfaceChart::Ellipsoid { a: 1.0, b: 1.3, c: 0.8 }],
            points: o.points,
            z: o.z,
            eps: o.eps,
            mu: o.mu,
            eps2: o.eps2,
            mu2: o.mu2,
            gamma_perturbation: o.gamma_perturbation,
        }
    }
}

impl IdentitiesConfig {
    pub fn options(&self, seed: u64) -> IdentityOptions {
        IdentityOptions {
            points: self.points,
            seed,
            z: self.z,
            eps: self.eps,
            mu: self.mu,
            eps2: self.eps2,
            mu2: self.mu2,
            gamma_perturbation: self.gamma_perturbation,
        }
    }
}

/// One base point of the phase construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PointConfig {
    pub chart: SurfaceChart,
    pub media: MediaField,
    pub h: f64,
    pub z: Complex64,
    pub x0: [f64; 2],
    pub xi: [f64; 2],
}

impl Default for PointConfig {
    fn default() -> Self {
        PointConfig {
            chart: SurfaceChart::Sphere { radius: 1.0 },
            media: MediaField::constant(1.0, 1.0),
            h: 0.01,
            z: Complex64::new(1.0, 0.3),
            x0: [1.1, 0.4],
            xi: [2.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EikonalConfig {
    pub point: PointConfig,
    pub orders: Vec<usize>,
    pub x1: Vec<f64>,
    /// Pass when every fitted slope is at least `N − slope_margin`.
    pub slope_margin: f64,
}

impl Default for EikonalConfig {
    fn default() -> Self {
        EikonalConfig {
            point: PointConfig::default(),
            orders: (3..=8).collect(),
            x1: (0..7).map(|i| 10f64.powf(-4.0 + 0.5 * i as f64)).collect(),
            slope_margin: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResidualConfig {
    pub point: PointConfig,
    /// Amplitude levels.
    pub levels: usize,
    /// Sample depths as fractions of the retained layer.
    pub x1_fractions: Vec<f64>,
}

impl Default for ResidualConfig {
    fn default() -> Self {
        ResidualConfig {
            point: PointConfig { xi: [0.8, 0.5], ..PointConfig::default() },
            levels: 4,
            x1_fractions: vec![0.05, 0.1, 0.2, 0.4, 0.8],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DtnCompareConfig {
    pub h: Vec<f64>,
    /// `λ = (1 + iθ)/h`.
    pub theta: f64,
    /// Mode index nearest `fraction/h`.
    pub fraction: f64,
    pub eps: f64,
    pub mu: f64,
    pub radius: f64,
    pub min_slope_order0: f64,
    pub min_slope_order1: f64,
}

impl Default for DtnCompareConfig {
    fn default() -> Self {
        DtnCompareConfig {
            h: (0..6).map(|k| 1.0 / (40.0 * 2f64.powi(k))).collect(),
            theta: 0.5,
            fraction: 0.5,
            eps: 1.0,
            mu: 1.0,
            radius: 1.0,
            min_slope_order0: 0.9,
            min_slope_order1: 1.7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanMode {
    /// Report counts; never fails on roots.
    Inform,
    /// Fail when the region holds any root.
    Certify,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TeScanConfig {
    pub mode: ScanMode,
    pub lambda_max: f64,
    /// Region constant; omitted, it is calibrated first.
    pub c: Option<f64>,
    /// Relative bisection tolerance of the calibration.
    pub calibration_tol: f64,
    pub transmission: TransmissionConfig,
}

impl Default for TeScanConfig {
    fn default() -> Self {
        TeScanConfig { mode: ScanMode::Inform, lambda_max: 60.0, c: None, calibration_tol: 1e-3, transmission: TransmissionConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantizerConfig {
    pub n: usize,
    pub guard: usize,
    pub composition_h: Vec<f64>,
    pub norm_h: Vec<f64>,
    pub theta: Vec<f64>,
    pub slope_tol: f64,
    pub exponent_tol: f64,
}

impl Default for QuantizerConfig {
    fn default() -> Self {
        QuantizerConfig {
            n: 32,
            guard: 4,
            composition_h: (3..=8).map(|j| 0.5f64.powi(j)).collect(),
            norm_h: vec![1.0 / 8.0, 1.0 / 16.0],
            theta: vec![0.05, 0.1, 0.2, 0.4, 0.8],
            slope_tol: 0.2,
            exponent_tol: 0.15,
        }
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(bad(format!("{name} must be positive and finite (got {v})")))
    }
}

fn all_positive(name: &str, v: &[f64]) -> Result<(), CliError> {
    if v.is_empty() {
        return Err(bad(format!("{name} must not be empty")));
    }
    v.iter().try_for_each(|x| positive(name, *x))
}

fn finite(name: &str, v: &[f64]) -> Result<(), CliError> {
    match v.iter().find(|x| !x.is_finite()) {
        Some(x) => Err(bad(format!("{name} must be finite (got {x})"))),
        None => Ok(()),
    }
}

fn chart(c: &SurfaceChart) -> Result<(), CliError> {
    match c {
        SurfaceChart::Plane => Ok(()),
        SurfaceChart::Sphere { radius } | SurfaceChart::RotatedSphere { radius, .. } => positive("chart radius", *radius),
        SurfaceChart::Ellipsoid { a, b, c } => all_positive("ellipsoid semi-axes", &[*a, *b, *c]),
    }
}

impl PointConfig {
    fn validate(&self) -> Result<(), CliError> {
        chart(&self.chart)?;
        positive("h", self.h)?;
        finite("z", &[self.z.re, self.z.im])?;
        finite("x0", &self.x0)?;
        finite("xi", &self.xi)
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))
    }

    /// Fills the tolerance from the environment or the built-in default.
    pub fn resolve_tolerance(&mut self, env: Option<&str>) -> Result<(), CliError> {
        if self.tolerance.is_none() {
            self.tolerance = Some(match env {
                Some(s) => s.trim().parse().map_err(|_| bad(format!("{TOLERANCE_ENV}={s} is not a number")))?,
                None => DEFAULT_TOLERANCE,
            });
        }
        Ok(())
    }

    pub fn tol(&self) -> f64 {
        self.tolerance.unwrap_or(DEFAULT_TOLERANCE)
    }

    /// Checks every numeric field; run before any dispatch.
    pub fn validate(&self) -> Result<(), CliError> {
        positive("tolerance", self.tol())?;

        let id = &self.identities;
        if id.charts.is_empty() || id.points == 0 {
            return Err(bad("identities needs at least one chart and one point"));
        }
        id.charts.iter().try_for_each(chart)?;
        all_positive("identities media", &[id.eps, id.mu, id.eps2, id.mu2])?;
        finite("identities.z", &[id.z.re, id.z.im, id.gamma_perturbation])?;

        let ek = &self.eikonal;
        ek.point.validate()?;
        if ek.orders.is_empty() || ek.orders.contains(&0) {
            return Err(bad("eikonal.orders must be nonempty and >= 1"));
        }
        all_positive("eikonal.x1", &ek.x1)?;
        positive("eikonal.slope_margin", ek.slope_margin)?;

        let rs = &self.residual;
        rs.point.validate()?;
        if rs.levels == 0 {
            return Err(bad("residual.levels must be >= 1"));
        }
        all_positive("residual.x1_fractions", &rs.x1_fractions)?;
        if rs.x1_fractions.iter().any(|f| *f > 1.0) {
            return Err(bad("residual.x1_fractions must lie in (0, 1]"));
        }

        let d = &self.dtn_compare;
        all_positive("dtn_compare.h", &d.h)?;
        all_positive("dtn_compare parameters", &[d.theta, d.fraction, d.eps, d.mu, d.radius])?;
        finite("dtn_compare slopes", &[d.min_slope_order0, d.min_slope_order1])?;

        let t = &self.te_scan;
        positive("te_scan.lambda_max", t.lambda_max)?;
        positive("te_scan.calibration_tol", t.calibration_tol)?;
        if let Some(c) = t.c {
            if !(c.is_finite() && c >= 0.0) {
                return Err(bad(format!("te_scan.c must be >= 0 (got {c})")));
            }
        }
        t.transmission.validate().map_err(CliError::Core)?;

        let q = &self.quantizer;
        if q.n < 2 || !q.n.is_multiple_of(2) || 2 * q.guard >= q.n {
            return Err(bad("quantizer.n must be even and >= 2, with 2*guard < n"));
        }
        all_positive("quantizer.composition_h", &q.composition_h)?;
        all_positive("quantizer.norm_h", &q.norm_h)?;
        all_positive("quantizer.theta", &q.theta)?;
        all_positive("quantizer tolerances", &[q.slope_tol, q.exponent_tol])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let mut c = RunConfig::default();
        c.resolve_tolerance(None).unwrap();
        c.validate().unwrap();
        let text = toml::to_string(&c).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn tolerance_precedence() {
        let mut c = RunConfig::default();
        c.resolve_tolerance(Some("1e-9")).unwrap();
        assert_eq!(c.tol(), 1e-9);
        let mut c = RunConfig { tolerance: Some(1e-6), ..RunConfig::default() };
        c.resolve_tolerance(Some("1e-9")).unwrap();
        assert_eq!(c.tol(), 1e-6);
        assert!(RunConfig::default().resolve_tolerance(Some("tight")).is_err());
    }

    #[test]
    fn rejects_bad_fields() {
        let parse = |s: &str| toml::from_str::<RunConfig>(s);
        assert!(parse("unknown = 1").is_err());
        let c = parse("[dtn_compare]\nh = [0.1, -0.05]").unwrap();
        assert!(c.validate().is_err());
        let c = parse("[quantizer]\nn = 7").unwrap();
        assert!(c.validate().is_err());
        let c = parse("[eikonal.point]\nh = nan").unwrap();
        assert!(c.validate().is_err());
        let c = parse("[[identities.charts]]\nkind = \"sphere\"\nradius = 0.0").unwrap();
        assert!(c.validate().is_err());
    }
}
