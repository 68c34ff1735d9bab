//! Schmidt decomposition of the spectral two-photon amplitude.
//!
//!     cargo run --release --example spectral_modes [bandwidth_nm]

use twinbeam::analysis::spectral_kernel;
use twinbeam::config::RunConfig;
use twinbeam::dispersion::solve_geometry;
use twinbeam::kernels::duration_for_bandwidth;
use twinbeam::schmidt::{count_nodes, decompose_keeping, kernel_schmidt_number};

fn main() -> twinbeam::Result<()> {
    let nm: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.2);
    let mut cfg = RunConfig::bundled_default();
    cfg.pump.tau_p = duration_for_bandwidth(cfg.pump.lambda_p0, nm * 1e-9);
    let crystal = cfg.crystal()?;
    let geometry = solve_geometry(&crystal, cfg.pump.lambda_p0)?;

    let (_, kernel) = spectral_kernel(&crystal, &geometry, &cfg.pump, None, &cfg.numerics)?;
    let (n, _) = kernel.shape();
    println!("pump bandwidth {nm} nm, {n} x {n} grid, {} stored entries", kernel.stored_entries());

    let d = decompose_keeping(&kernel, 8)?;
    println!("K_omega = {:.3} (purity route {:.3})", d.schmidt_number, kernel_schmidt_number(&kernel)?);
    println!("  q  lambda_q^2   nodes");
    for q in 0..8 {
        println!("{q:>3}  {:.4e}  {:>5}", d.coefficients[q].powi(2), count_nodes(&d.signal_modes[q]));
    }
    Ok(())
}
