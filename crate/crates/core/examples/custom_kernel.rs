//! Schmidt decomposition of an arbitrary kernel supplied as a closure, here
//! the double Gaussian whose spectrum is known in closed form.
//!
//!     cargo run --release --example custom_kernel

use twinbeam::grid::{Grid, GridKind};
use twinbeam::kernels::{KernelLabel, KernelMatrix};
use twinbeam::schmidt::decompose_keeping;
use twinbeam::selfcheck::gaussian_schmidt_law;
use twinbeam::Complex64;

fn main() -> twinbeam::Result<()> {
    let (a, b) = (1.0, 1.8);
    let grid = Grid::composite_gauss_legendre(GridKind::Spectral, -12.0, 12.0, 32, 8)?;
    let k = KernelMatrix::from_fn(KernelLabel::Custom("double gaussian".into()), &grid, &grid, |x, y| {
        Complex64::new(0.0, 0.4 * (x - y)).exp() * (-a * (x * x + y * y) - b * x * y).exp()
    });
    let d = decompose_keeping(&k, 6)?;
    let (law, kk) = gaussian_schmidt_law(a, b, 6);
    println!("K = {:.8} (closed form {kk:.8})", d.schmidt_number);
    for (q, l) in law.iter().enumerate() {
        println!("{q}  {:.10}  {l:.10}", d.coefficients[q].powi(2));
    }
    Ok(())
}
