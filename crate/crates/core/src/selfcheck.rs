//! Analytic oracles run by the `selfcheck` command.

use std::fmt;

use num_complex::Complex64;

use crate::correlations::fwhm;
use crate::dispersion::{anisotropy_radius_from, ANISOTROPY_SINC_ROOT};
use crate::grid::{Grid, GridKind};
use crate::kernels::{KernelLabel, KernelMatrix};
use crate::schmidt::decompose;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {:<24} {}", self.name, self.detail)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelfCheckOptions {
    /// First root of the sinc² half-power condition used by the anisotropy
    /// radius check. Changing it is a negative control.
    pub sinc_root: f64,
}

impl Default for SelfCheckOptions {
    fn default() -> Self {
        SelfCheckOptions { sinc_root: ANISOTROPY_SINC_ROOT }
    }
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

/// Schmidt spectrum of `exp(-a(x²+y²) - bxy)`: `λ_n² = (1-t²) t^{2n}`.
pub fn gaussian_schmidt_law(a: f64, b: f64, n: usize) -> (Vec<f64>, f64) {
    let s = ((a - 0.5 * b) / (a + 0.5 * b)).sqrt();
    let t = (s - 1.0) / (s + 1.0);
    let t2 = t * t;
    let lam_sq = (0..n).map(|k| (1.0 - t2) * t2.powi(k as i32)).collect();
    (lam_sq, (1.0 + t2) / (1.0 - t2))
}

fn gaussian_schmidt() -> CheckResult {
    let (a, b) = (1.0, 1.2);
    let g = match Grid::composite_gauss_legendre(GridKind::Radial, -9.0, 9.0, 24, 8) {
        Ok(g) => g,
        Err(e) => return check("gaussian_schmidt", false, e.to_string()),
    };
    let k = KernelMatrix::from_fn(KernelLabel::Custom("gaussian".into()), &g, &g, |x, y| {
        Complex64::new((-a * (x * x + y * y) - b * x * y).exp(), 0.0)
    });
    let d = match decompose(&k) {
        Ok(d) => d,
        Err(e) => return check("gaussian_schmidt", false, e.to_string()),
    };
    let (law, kk) = gaussian_schmidt_law(a, b, 8);
    let err = law
        .iter()
        .zip(&d.coefficients)
        .map(|(l, c)| (l - c * c).abs())
        .fold(0.0, f64::max);
    let kerr = (d.schmidt_number - kk).abs() / kk;
    check(
        "gaussian_schmidt",
        err < 1e-4 && kerr < 1e-4,
        format!("max |λ²-law| = {err:.2e}, K = {:.6} (law {kk:.6})", d.schmidt_number),
    )
}

fn separable() -> CheckResult {
    let g = Grid::composite_gauss_legendre(GridKind::Spectral, -6.0, 6.0, 12, 8).expect("valid grid");
    let k = KernelMatrix::from_fn(KernelLabel::Custom("separable".into()), &g, &g, |x, y| {
        let f = Complex64::new(-0.5 * x * x, 0.3 * x).exp();
        let h = Complex64::new(-(y - 0.5).powi(2), -0.7 * y * y).exp() * (1.0 + 0.1 * y);
        f * h
    });
    match decompose(&k) {
        Ok(d) => check(
            "separable_kernel",
            (d.schmidt_number - 1.0).abs() < 1e-6,
            format!("K = {:.12}", d.schmidt_number),
        ),
        Err(e) => check("separable_kernel", false, e.to_string()),
    }
}

fn gaussian_fwhm() -> CheckResult {
    let sigma = 0.37;
    let x: Vec<f64> = (0..2001).map(|i| -3.0 + 6.0 * i as f64 / 2000.0).collect();
    let y: Vec<f64> = x.iter().map(|v| (-v * v / (2.0 * sigma * sigma)).exp()).collect();
    let exact = 2.0 * (2.0 * std::f64::consts::LN_2).sqrt() * sigma;
    match fwhm(&x, &y) {
        Ok(w) => {
            let rel = (w - exact).abs() / exact;
            check("gaussian_fwhm", rel < 1e-4, format!("FWHM = {w:.8} (exact {exact:.8}), rel err {rel:.1e}"))
        }
        Err(e) => check("gaussian_fwhm", false, e.to_string()),
    }
}

fn anisotropy_hand_value(opts: &SelfCheckOptions) -> CheckResult {
    let w = anisotropy_radius_from(1.658, 0.123, 8e-3, opts.sinc_root);
    let um = w * 1e6;
    check(
        "anisotropy_radius",
        (um - 270.0).abs() <= 2.0,
        format!("w_p^a = {um:.2} um from n_p = 1.658, dn/dθ = 0.123, L = 8 mm (expect 270 ± 2)"),
    )
}

fn quadrature_exactness() -> CheckResult {
    let (lo, hi) = (-0.7, 1.9);
    let mut worst = 0.0f64;
    for n in [2usize, 5, 8, 16] {
        let g = match Grid::gauss_legendre(GridKind::Radial, lo, hi, n) {
            Ok(g) => g,
            Err(e) => return check("quadrature_exactness", false, e.to_string()),
        };
        for p in 0..(2 * n) as i32 {
            let vals: Vec<f64> = g.points().iter().map(|x| x.powi(p)).collect();
            let exact = (hi.powi(p + 1) - lo.powi(p + 1)) / (p + 1) as f64;
            let scale = (hi.abs().max(lo.abs())).powi(p + 1).max(1.0);
            worst = worst.max((g.integrate(&vals) - exact).abs() / scale);
        }
    }
    check("quadrature_exactness", worst < 1e-12, format!("max scaled error {worst:.1e} up to degree 2n-1"))
}

pub fn run(opts: &SelfCheckOptions) -> Vec<CheckResult> {
    vec![
        gaussian_schmidt(),
        separable(),
        gaussian_fwhm(),
        anisotropy_hand_value(opts),
        quadrature_exactness(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for r in run(&SelfCheckOptions::default()) {
            assert!(r.passed, "{r}");
        }
    }

    #[test]
    fn wrong_sinc_root_fails() {
        let r = run(&SelfCheckOptions { sinc_root: 1.0 });
        assert!(!r.iter().find(|c| c.name == "anisotropy_radius").unwrap().passed);
    }

    #[test]
    fn law_is_normalized() {
        let (l, k) = gaussian_schmidt_law(1.0, 0.5, 400);
        assert!((l.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let p: f64 = l.iter().map(|x| x * x).sum();
        assert!((1.0 / p - k).abs() < 1e-10);
    }
}
