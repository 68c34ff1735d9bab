//! Azimuthal orders of the transverse amplitude and the transverse mode
//! numbers for a range of pump radii.
//!
//!     cargo run --release --example transverse_modes

use twinbeam::analysis::analyze_transverse;
use twinbeam::config::RunConfig;
use twinbeam::dispersion::solve_geometry;

fn main() -> twinbeam::Result<()> {
    let cfg = RunConfig::bundled_default();
    let crystal = cfg.crystal()?;
    let geometry = solve_geometry(&crystal, cfg.pump.lambda_p0)?;
    println!("w_p [mm]   K_kphi     K_k      K_phi   m_cut");
    for w_mm in [0.3, 0.5, 1.0, 2.0] {
        let mut pump = cfg.pump.clone();
        pump.w_p = w_mm * 1e-3;
        let t = analyze_transverse(&crystal, &geometry, &pump, &cfg.numerics, 0)?;
        let s = &t.summary;
        println!("{w_mm:>7.2} {:>9.1} {:>8.3} {:>9.1} {:>7}", s.k_kphi, s.k_k, s.k_phi, t.m_cut);
    }

    let t = analyze_transverse(&crystal, &geometry, &cfg.pump, &cfg.numerics, 4)?;
    println!("\nw_p = 1 mm, selected orders:");
    println!("     m   ||T_m||^2     K_m");
    let n0 = t.summary.orders[0].norm_sq;
    for o in t.summary.orders.iter().step_by(8) {
        println!("{:>6} {:>11.4e} {:>7.3}", o.m, o.norm_sq / n0, 1.0 / o.purity);
    }
    if let Some(d) = &t.order_zero {
        let l: Vec<String> = d.coefficients.iter().take(4).map(|c| format!("{:.4}", c * c)).collect();
        println!("m = 0 radial lambda_q^2: {}", l.join(", "));
    }
    Ok(())
}
