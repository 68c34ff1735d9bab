use std::f64::consts::PI;

use proptest::prelude::*;
use twinbeam::config::RunConfig;
use twinbeam::correlations::{auto_correlation, fwhm, AzimuthalCorrelations, Variable};
use twinbeam::dispersion::{
    index_extraordinary, index_ordinary, index_principal_extraordinary, solve_geometry, CrystalConfig,
};
use twinbeam::grid::{Grid, GridKind};
use twinbeam::io::{fmt_f64, read_csv, write_csv};
use twinbeam::kernels::{build_transverse_component, KernelLabel, KernelMatrix, Numerics, PumpConfig, TransverseModel};
use twinbeam::schmidt::{count_nodes, decompose, schmidt_number};
use twinbeam::selfcheck::gaussian_schmidt_law;
use twinbeam::Complex64;

fn grid(half: f64, panels: usize) -> Grid {
    Grid::composite_gauss_legendre(GridKind::Spectral, -half, half, panels, 8).unwrap()
}

/// A smooth, non-separable, chirped test kernel.
fn chirped(a: f64, b: f64, chirp: f64, shift: f64) -> KernelMatrix {
    let g = grid(10.0, 16);
    KernelMatrix::from_fn(KernelLabel::Custom("chirped".into()), &g, &g, move |x, y| {
        let amp = (-a * (x * x + y * y) - b * x * y - shift * x).exp();
        Complex64::from_polar(amp, chirp * (x * x - y) + 0.2 * x * y)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn schmidt_coefficients_are_normalized(a in 0.6f64..1.5, b in -1.0f64..1.0, c in -0.5f64..0.5, s in -0.5f64..0.5) {
        let d = decompose(&chirped(a, b, c, s)).unwrap();
        let sum: f64 = d.coefficients.iter().map(|l| l * l).sum();
        prop_assert!((sum - 1.0).abs() < 1e-10);
        prop_assert!(d.coefficients.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(d.schmidt_number >= 1.0 - 1e-12);
    }

    #[test]
    fn weighted_svd_reconstructs_kernel(a in 0.6f64..1.5, b in -1.0f64..1.0, c in -0.5f64..0.5) {
        let k = chirped(a, b, c, 0.1);
        let d = decompose(&k).unwrap();
        let rec = d.reconstruct(usize::MAX);
        let (n, m) = k.shape();
        let (ws, wi) = (k.row_grid().weights(), k.col_grid().weights());
        let (mut err, mut tot) = (0.0, 0.0);
        for i in 0..n {
            for j in 0..m {
                let v = k.get(i, j) / d.norm;
                err += ws[i] * wi[j] * (rec[i * m + j] - v).norm_sqr();
                tot += ws[i] * wi[j] * v.norm_sqr();
            }
        }
        prop_assert!((err / tot).sqrt() < 1e-6);
    }

    #[test]
    fn modes_are_orthonormal(a in 0.6f64..1.5, b in -1.0f64..1.0) {
        let d = decompose(&chirped(a, b, 0.3, 0.0)).unwrap();
        let w = d.signal_grid.weights();
        for p in 0..4 {
            for q in 0..4 {
                let s: Complex64 = (0..w.len()).map(|i| d.signal_modes[p][i].conj() * d.signal_modes[q][i] * w[i]).sum();
                let e = if p == q { 1.0 } else { 0.0 };
                prop_assert!((s - e).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn separable_kernels_have_one_mode(s1 in 0.3f64..2.0, s2 in 0.3f64..2.0, c1 in -1.0f64..1.0, c2 in -1.0f64..1.0, x0 in -1.0f64..1.0) {
        let g = grid(12.0, 16);
        let k = KernelMatrix::from_fn(KernelLabel::Custom("product".into()), &g, &g, |x, y| {
            let f = Complex64::from_polar((-(x - x0).powi(2) / (2.0 * s1 * s1)).exp(), c1 * x * x);
            let h = Complex64::from_polar((-y * y / (2.0 * s2 * s2)).exp(), c2 * y);
            f * h
        });
        let d = decompose(&k).unwrap();
        prop_assert!((d.schmidt_number - 1.0).abs() < 1e-6);
    }

    #[test]
    fn gaussian_kernel_follows_geometric_law(a in 0.8f64..1.5, r in -0.8f64..0.8) {
        let b = 2.0 * a * r;
        let g = grid(14.0, 24);
        let k = KernelMatrix::from_fn(KernelLabel::Custom("gauss".into()), &g, &g, |x, y| {
            Complex64::new((-a * (x * x + y * y) - b * x * y).exp(), 0.0)
        });
        let d = decompose(&k).unwrap();
        let (law, kk) = gaussian_schmidt_law(a, b, 10);
        for (q, l) in law.iter().enumerate() {
            prop_assert!((d.coefficients[q].powi(2) - l).abs() < 1e-4, "q = {}", q);
        }
        prop_assert!((d.schmidt_number - kk).abs() < 1e-4 * kk);
    }

    #[test]
    fn hermite_gauss_modes_have_q_nodes(a in 0.8f64..1.4, r in 0.3f64..0.8) {
        let b = 2.0 * a * r;
        let g = grid(14.0, 24);
        let k = KernelMatrix::from_fn(KernelLabel::Custom("gauss".into()), &g, &g, |x, y| {
            Complex64::new((-a * (x * x + y * y) - b * x * y).exp(), 0.0)
        });
        let d = decompose(&k).unwrap();
        for q in 0..=5 {
            prop_assert_eq!(count_nodes(&d.signal_modes[q]), q);
            prop_assert_eq!(count_nodes(&d.idler_modes[q]), q);
        }
    }

    #[test]
    fn auto_correlation_equals_schmidt_sum(a in 0.6f64..1.5, b in -1.0f64..1.0, c in -0.5f64..0.5) {
        let k = chirped(a, b, c, 0.0);
        let auto = auto_correlation(&k, Variable::Spectral);
        let d = decompose(&k).unwrap();
        let n = k.row_grid().len();
        let n2 = d.norm * d.norm;
        let (mut err, mut tot) = (0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for q in 0..d.coefficients.len() {
                    s += d.coefficients[q].powi(2) * d.signal_modes[q][i].conj() * d.signal_modes[q][j];
                }
                err += (auto.get(i, j) - s * n2).norm_sqr();
                tot += auto.get(i, j).norm_sqr();
            }
        }
        prop_assert!((err / tot).sqrt() < 1e-8);
    }

    #[test]
    fn schmidt_number_of_uniform_spectrum(n in 1usize..200) {
        let c = vec![(1.0 / n as f64).sqrt(); n];
        prop_assert!((schmidt_number(&c).unwrap() - n as f64).abs() < 1e-9 * n as f64);
    }

    #[test]
    fn gaussian_fwhm_is_exact(sigma in 0.05f64..2.0, x0 in -1.0f64..1.0) {
        let x: Vec<f64> = (0..4001).map(|i| x0 - 8.0 + 16.0 * i as f64 / 4000.0).collect();
        let y: Vec<f64> = x.iter().map(|v| (-(v - x0).powi(2) / (2.0 * sigma * sigma)).exp()).collect();
        let exact = 2.0 * (2.0 * std::f64::consts::LN_2).sqrt() * sigma;
        prop_assert!((fwhm(&x, &y).unwrap() - exact).abs() < 1e-3 * exact);
    }

    #[test]
    fn gauss_legendre_is_exact_to_degree_2n_minus_1(n in 1usize..24, lo in -3.0f64..0.0, span in 0.1f64..4.0) {
        let hi = lo + span;
        let g = Grid::gauss_legendre(GridKind::Radial, lo, hi, n).unwrap();
        for p in 0..(2 * n) as i32 {
            let v: Vec<f64> = g.points().iter().map(|x| x.powi(p)).collect();
            let exact = (hi.powi(p + 1) - lo.powi(p + 1)) / (p + 1) as f64;
            let scale = hi.abs().max(lo.abs()).max(1.0).powi(p + 1);
            prop_assert!((g.integrate(&v) - exact).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn extraordinary_index_lies_between_principal_values(l in 0.25e-6f64..1.1e-6, theta in 0.0f64..FRAC_PI_2_) {
        let c = CrystalConfig::default_bbo();
        let no = index_ordinary(l, &c).unwrap();
        let ne = index_principal_extraordinary(l, &c).unwrap();
        let n = index_extraordinary(l, theta, &c).unwrap();
        prop_assert!(n <= no + 1e-15 && n >= ne - 1e-15);
    }

    #[test]
    fn csv_floats_round_trip(v in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 1..40)) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.csv");
        let rows: Vec<Vec<String>> = v.iter().map(|x| vec![fmt_f64(*x)]).collect();
        write_csv(&p, &["values".into()], &["v"], &rows).unwrap();
        prop_assert_eq!(read_csv(&p).unwrap().floats("v").unwrap(), v);
    }

    #[test]
    fn config_round_trips(w in 0.1e-3f64..3e-3, bw in 0.01e-9f64..3e-9, scale in 0.5f64..3.0) {
        let mut cfg = RunConfig::bundled_default();
        cfg.pump = PumpConfig::from_bandwidth(cfg.pump.lambda_p0, w, bw).unwrap();
        cfg.numerics.grid_scale = scale;
        let again = RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        prop_assert_eq!(&again, &cfg);
        prop_assert_eq!(again.hash(), cfg.hash());
    }
}

const FRAC_PI_2_: f64 = std::f64::consts::FRAC_PI_2;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn azimuthal_auto_correlation_is_stationary(offset in -PI..PI, w_mm in 0.3f64..2.0) {
        let crystal = CrystalConfig::default_bbo();
        let g = solve_geometry(&crystal, 349e-9).unwrap();
        let pump = PumpConfig::from_bandwidth(349e-9, w_mm * 1e-3, 0.2e-9).unwrap();
        let model = TransverseModel::new(&g, &crystal, &pump);
        let az = AzimuthalCorrelations::new(&model, 36.0, 401);
        let d = az.window() / 8.0;
        let base = Grid::uniform(GridKind::Azimuthal, -d, d, 9).unwrap();
        let moved = Grid::uniform(GridKind::Azimuthal, offset - d, offset + d, 9).unwrap();
        let a = az.auto_matrix(&base);
        let b = az.auto_matrix(&moved);
        let scale = a.get(4, 4).norm();
        for i in 0..9 {
            for j in 0..9 {
                prop_assert!((a.get(i, j) - b.get(i, j)).norm() < 1e-10 * scale);
                // Same integral on a differently aligned lattice.
                let expect = az.auto(base.points()[j] - base.points()[i]);
                prop_assert!((a.get(i, j) - expect).norm() < 1e-8 * scale);
            }
        }
    }

    #[test]
    fn transverse_components_are_symmetric(m in 0usize..3000) {
        let crystal = CrystalConfig::default_bbo();
        let g = solve_geometry(&crystal, 349e-9).unwrap();
        let pump = PumpConfig::from_bandwidth(349e-9, 1e-3, 0.2e-9).unwrap();
        let nm = Numerics::default();
        let model = TransverseModel::new(&g, &crystal, &pump);
        let rg = model.radial_grid(&nm).unwrap();
        let t = build_transverse_component(m as i64, &g, &crystal, &pump, &nm, &rg, &rg).unwrap();
        prop_assert!(t.transpose_asymmetry() < 1e-12);
    }
}
