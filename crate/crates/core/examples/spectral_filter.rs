//! Narrowing the spectral mode number with Gaussian passbands on both arms.
//!
//!     cargo run --release --example spectral_filter

use twinbeam::analysis::analyze_spectral;
use twinbeam::config::RunConfig;
use twinbeam::dispersion::solve_geometry;

fn main() -> twinbeam::Result<()> {
    let cfg = RunConfig::bundled_default();
    let crystal = cfg.crystal()?;
    let g = solve_geometry(&crystal, cfg.pump.lambda_p0)?;
    println!("filter [nm]  K_omega  KDelta_omega  Delta_n [rad/ps]");
    for width in [None, Some(16.0), Some(4.0), Some(1.0), Some(0.25)] {
        let s = analyze_spectral(&crystal, &g, &cfg.pump, width.map(|w| w * 1e-9), &cfg.numerics, 0)?;
        let label = width.map_or("none".to_string(), |w| format!("{w}"));
        println!("{label:>11} {:>8.3} {:>13.3} {:>17.4}", s.k_omega, s.kdelta_omega()?, 1e-12 * s.widths.intensity.fwhm);
    }
    Ok(())
}
