//! Refractive indices, the degenerate emission geometry and the anisotropy
//! radius of the default BBO crystal.
//!
//!     cargo run --example geometry

use twinbeam::dispersion::{
    anisotropy_radius, index_extraordinary, index_ordinary, solve_geometry, BboDispersion, CrystalConfig,
};

fn main() -> twinbeam::Result<()> {
    for set in [BboDispersion::Kato1986, BboDispersion::Eimerl1987] {
        let crystal = CrystalConfig::bbo(set, 8e-3, 36.3f64.to_radians())?;
        let g = solve_geometry(&crystal, 349e-9)?;
        println!("{}", set.name());
        println!("  n_o(698 nm)          = {:.6}", index_ordinary(698e-9, &crystal)?);
        println!("  n_e(349 nm, 36.3 deg) = {:.6}", index_extraordinary(349e-9, crystal.cut_angle, &crystal)?);
        println!("  dn_p/dtheta          = {:.5} /rad", g.dn_p_dtheta);
        println!("  internal angle       = {:.4} deg", g.theta_s_int.to_degrees());
        println!("  external angle       = {:.4} deg", g.theta_s_ext.to_degrees());
        println!("  k_perp at the ring   = {:.6e} rad/m", g.k_perp_s0());
        println!("  anisotropy radius    = {:.1} um", anisotropy_radius(&crystal, &g) * 1e6);
    }
    Ok(())
}
