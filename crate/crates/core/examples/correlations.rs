//! Intensity profiles, auto- and cross-correlation widths and the
//! width-ratio mode numbers at the default working point.
//!
//!     cargo run --release --example correlations

use std::f64::consts::PI;

use twinbeam::analysis::{analyze_spectral, analyze_transverse};
use twinbeam::config::RunConfig;
use twinbeam::correlations::AzimuthalCorrelations;
use twinbeam::dispersion::solve_geometry;
use twinbeam::kernels::TransverseModel;

fn main() -> twinbeam::Result<()> {
    let cfg = RunConfig::bundled_default();
    let crystal = cfg.crystal()?;
    let g = solve_geometry(&crystal, cfg.pump.lambda_p0)?;

    let t = analyze_transverse(&crystal, &g, &cfg.pump, &cfg.numerics, 0)?;
    let r = &t.radial;
    println!("radial [rad/m]: intensity {:.1}, |A| {:.1}, |A|^2 {:.1}, cross {:.1}",
        r.intensity.fwhm, r.auto_abs.fwhm, r.auto_sq.fwhm, r.cross.fwhm);
    println!("azimuthal [mrad]: |A| {:.3}, |A|^2 {:.3}, cross {:.3}",
        1e3 * t.azimuthal_auto.fwhm, 1e3 * t.azimuthal_auto_sq.fwhm, 1e3 * t.azimuthal_cross.fwhm);
    println!("K_k {:.3} vs width ratio {:.3}", t.summary.k_k, t.kdelta_k()?);
    println!("K_phi {:.1} vs width ratio {:.1}", t.summary.k_phi, t.kdelta_phi()?);

    let s = analyze_spectral(&crystal, &g, &cfg.pump, None, &cfg.numerics, 0)?;
    let w = &s.widths;
    println!("spectral [rad/ps]: intensity {:.3}, |A| {:.4}, cross {:.4}",
        1e-12 * w.intensity.fwhm, 1e-12 * w.auto_abs.fwhm, 1e-12 * w.cross.fwhm);
    println!("K_omega {:.2} vs width ratio {:.2}", s.k_omega, s.kdelta_omega()?);

    // Photons leave on opposite sides of the ring, and the correlation only
    // depends on the angle difference.
    let model = TransverseModel::new(&g, &crystal, &cfg.pump);
    let az = AzimuthalCorrelations::new(&model, cfg.numerics.band_exponent, 601);
    let d = 0.5 * t.azimuthal_cross.fwhm;
    let c = |phi: f64| az.cross(phi, phi + PI + d);
    println!("C(0.3, 0.3 + pi + d) = {:.9e}, C(2.0, 2.0 + pi + d) = {:.9e}", c(0.3), c(2.0));
    Ok(())
}
