//! Birefringent dispersion of a uniaxial crystal and the degenerate type-I
//! (e -> o + o) phase-matching geometry.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Root of `sin(x)/x = 1/e`, rounded as used in the anisotropy radius.
pub const ANISOTROPY_SINC_ROOT: f64 = 2.2;

/// Step of the central difference used for `dn_p/dtheta`, rad.
pub const ANGLE_DIFF_STEP: f64 = 1e-4;

/// Sellmeier-type dispersion model with the wavelength in micrometres:
///
/// `n^2 = a + sum_j B_j / (lambda^2 - C_j) + sum_k D_k lambda^(2k)`
///
/// `poles` holds the `(B_j, C_j)` pairs and `powers` the `D_1, D_2, ...`
/// coefficients of the infrared polynomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sellmeier {
    pub a: f64,
    #[serde(default)]
    pub poles: Vec<[f64; 2]>,
    #[serde(default)]
    pub powers: Vec<f64>,
}

impl Sellmeier {
    /// Refractive index at a wavelength given in micrometres. No window check.
    pub fn index_um(&self, lambda_um: f64) -> f64 {
        let l2 = lambda_um * lambda_um;
        let mut n2 = self.a;
        for [b, c] in &self.poles {
            n2 += b / (l2 - c);
        }
        let mut p = l2;
        for d in &self.powers {
            n2 += d * p;
            p *= l2;
        }
        n2.sqrt()
    }
}

/// Published beta-barium-borate coefficient sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BboDispersion {
    /// K. Kato, IEEE J. Quantum Electron. 22, 1013 (1986).
    Kato1986,
    /// D. Eimerl et al., J. Appl. Phys. 62, 1968 (1987).
    Eimerl1987,
}

impl BboDispersion {
    pub fn name(self) -> &'static str {
        match self {
            BboDispersion::Kato1986 => "BBO, Kato 1986",
            BboDispersion::Eimerl1987 => "BBO, Eimerl et al. 1987",
        }
    }

    /// `(ordinary, extraordinary)` models.
    pub fn coefficients(self) -> (Sellmeier, Sellmeier) {
        match self {
            BboDispersion::Kato1986 => (
                Sellmeier { a: 2.7405, poles: vec![[0.0184, 0.0179]], powers: vec![-0.0155] },
                Sellmeier { a: 2.3730, poles: vec![[0.0128, 0.0156]], powers: vec![-0.0044] },
            ),
            BboDispersion::Eimerl1987 => (
                Sellmeier { a: 2.7359, poles: vec![[0.01878, 0.01822]], powers: vec![-0.01354] },
                Sellmeier { a: 2.3753, poles: vec![[0.01224, 0.01667]], powers: vec![-0.01516] },
            ),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interaction {
    /// Extraordinary pump, ordinary signal and idler.
    #[serde(rename = "type-I-eoo")]
    TypeIEoo,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrystalConfig {
    pub name: String,
    /// Crystal length, m.
    pub length: f64,
    /// Angle between the optical axis and the pump propagation direction, rad.
    pub cut_angle: f64,
    pub ordinary: Sellmeier,
    pub extraordinary: Sellmeier,
    /// Validity window of the dispersion data, m.
    pub window: (f64, f64),
    pub interaction: Interaction,
}

impl CrystalConfig {
    pub fn bbo(set: BboDispersion, length: f64, cut_angle: f64) -> Result<Self> {
        let (ordinary, extraordinary) = set.coefficients();
        let c = CrystalConfig {
            name: set.name().to_string(),
            length,
            cut_angle,
            ordinary,
            extraordinary,
            window: (0.2e-6, 1.2e-6),
            interaction: Interaction::TypeIEoo,
        };
        c.validate()?;
        Ok(c)
    }

    /// The 8 mm, 36.3 deg crystal with the default coefficient set.
    pub fn default_bbo() -> Self {
        Self::bbo(BboDispersion::Kato1986, 8e-3, 36.3f64.to_radians())
            .expect("built-in crystal is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::invalid("crystal.length", "must be positive"));
        }
        if !(self.cut_angle > 0.0 && self.cut_angle < FRAC_PI_2) {
            return Err(Error::invalid("crystal.cut_angle_deg", "must lie in (0, 90) degrees"));
        }
        let (lo, hi) = self.window;
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::invalid("crystal.window", "need 0 < min < max"));
        }
        for j in 0..=200 {
            let lambda = lo + (hi - lo) * j as f64 / 200.0;
            for (model, field) in [
                (&self.ordinary, "crystal.ordinary"),
                (&self.extraordinary, "crystal.extraordinary"),
            ] {
                let n = model.index_um(lambda * 1e6);
                if !(n > 1.0 && n.is_finite()) {
                    return Err(Error::invalid(
                        field,
                        format!("index {n} at {lambda:.3e} m is not > 1"),
                    ));
                }
            }
        }
        Ok(())
    }

    fn check_window(&self, lambda: f64) -> Result<()> {
        let (min, max) = self.window;
        if lambda >= min && lambda <= max {
            Ok(())
        } else {
            Err(Error::Domain { wavelength: lambda, min, max })
        }
    }
}

/// Ordinary index `n_o(lambda)`, wavelength in metres.
pub fn index_ordinary(lambda: f64, crystal: &CrystalConfig) -> Result<f64> {
    crystal.check_window(lambda)?;
    Ok(crystal.ordinary.index_um(lambda * 1e6))
}

/// Principal extraordinary index (propagation perpendicular to the axis).
pub fn index_principal_extraordinary(lambda: f64, crystal: &CrystalConfig) -> Result<f64> {
    crystal.check_window(lambda)?;
    Ok(crystal.extraordinary.index_um(lambda * 1e6))
}

/// Extraordinary index for propagation at `theta` to the optical axis,
/// `1/n^2 = cos^2/n_o^2 + sin^2/n_e^2`.
pub fn index_extraordinary(lambda: f64, theta: f64, crystal: &CrystalConfig) -> Result<f64> {
    if !(0.0..=FRAC_PI_2).contains(&theta) {
        return Err(Error::AngleOutOfRange(theta));
    }
    let no = index_ordinary(lambda, crystal)?;
    let ne = index_principal_extraordinary(lambda, crystal)?;
    let (s, c) = theta.sin_cos();
    Ok(1.0 / (c * c / (no * no) + s * s / (ne * ne)).sqrt())
}

/// `dn_e/dtheta` by a central difference with step [`ANGLE_DIFF_STEP`].
pub fn extraordinary_index_slope(lambda: f64, theta: f64, crystal: &CrystalConfig) -> Result<f64> {
    let h = ANGLE_DIFF_STEP;
    let up = index_extraordinary(lambda, (theta + h).min(FRAC_PI_2), crystal)?;
    let down = index_extraordinary(lambda, (theta - h).max(0.0), crystal)?;
    Ok((up - down) / ((theta + h).min(FRAC_PI_2) - (theta - h).max(0.0)))
}

/// Ordinary wave number `n_o(omega) omega / c`, rad/m.
pub fn ordinary_wave_number(omega: f64, crystal: &CrystalConfig) -> Result<f64> {
    let lambda = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / omega;
    Ok(index_ordinary(lambda, crystal)? * omega / SPEED_OF_LIGHT)
}

/// Extraordinary wave number along the pump direction, rad/m.
pub fn pump_wave_number(omega: f64, crystal: &CrystalConfig) -> Result<f64> {
    let lambda = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / omega;
    Ok(index_extraordinary(lambda, crystal.cut_angle, crystal)? * omega / SPEED_OF_LIGHT)
}

/// Central wavelengths, emission angles and wave numbers of the
/// phase-matched degenerate configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Geometry {
    pub lambda_p0: f64,
    pub lambda_s0: f64,
    pub lambda_i0: f64,
    /// External radial emission angles, rad.
    pub theta_s_ext: f64,
    pub theta_i_ext: f64,
    /// Internal radial emission angles, rad.
    pub theta_s_int: f64,
    pub theta_i_int: f64,
    /// Wave-number magnitudes at the central frequencies, rad/m.
    pub k_p0: f64,
    pub k_s0: f64,
    pub k_i0: f64,
    /// Pump index at the centre.
    pub n_p: f64,
    /// `dn_p/dtheta_p` at the centre, per rad.
    pub dn_p_dtheta: f64,
}

impl Geometry {
    pub fn omega_p0(&self) -> f64 {
        2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / self.lambda_p0
    }

    pub fn omega_s0(&self) -> f64 {
        2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / self.lambda_s0
    }

    pub fn omega_i0(&self) -> f64 {
        2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / self.lambda_i0
    }

    /// Central radial transverse wave number of the signal ring, rad/m.
    pub fn k_perp_s0(&self) -> f64 {
        self.k_s0 * self.theta_s_int.sin()
    }

    pub fn k_perp_i0(&self) -> f64 {
        self.k_i0 * self.theta_i_int.sin()
    }

    /// Relative longitudinal mismatch at the centre.
    pub fn central_mismatch(&self) -> f64 {
        (self.k_p0 - self.k_s0 * self.theta_s_int.cos() - self.k_i0 * self.theta_i_int.cos())
            / self.k_p0
    }
}

/// Longitudinal mismatch `k_p - 2 k_s cos(theta)` of the degenerate
/// configuration for a trial internal angle, rad/m.
pub fn degenerate_mismatch(crystal: &CrystalConfig, lambda_p0: f64, theta_int: f64) -> Result<f64> {
    let omega_p = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / lambda_p0;
    let k_p = pump_wave_number(omega_p, crystal)?;
    let k_s = ordinary_wave_number(0.5 * omega_p, crystal)?;
    Ok(k_p - 2.0 * k_s * theta_int.cos())
}

/// Degenerate (`lambda_s0 = lambda_i0 = 2 lambda_p0`) phase-matching geometry.
pub fn solve_geometry(crystal: &CrystalConfig, lambda_p0: f64) -> Result<Geometry> {
    solve_geometry_with_signal(crystal, lambda_p0, 2.0 * lambda_p0)
}

/// As [`solve_geometry`], rejecting any signal wavelength other than the
/// degenerate one.
pub fn solve_geometry_with_signal(
    crystal: &CrystalConfig,
    lambda_p0: f64,
    lambda_s0: f64,
) -> Result<Geometry> {
    let expected = 2.0 * lambda_p0;
    if ((lambda_s0 - expected) / expected).abs() > 1e-12 {
        return Err(Error::NonDegenerate { signal: lambda_s0, expected });
    }
    let lambda_i0 = 1.0 / (1.0 / lambda_p0 - 1.0 / lambda_s0);
    let omega_p = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / lambda_p0;
    let k_p0 = pump_wave_number(omega_p, crystal)?;
    let n_s = index_ordinary(lambda_s0, crystal)?;
    let k_s0 = n_s * 0.5 * omega_p / SPEED_OF_LIGHT;
    let k_i0 = k_s0;

    // Transverse components cancel for equal angles; the longitudinal
    // balance k_p = 2 k_s cos(theta) fixes the angle.
    let cos_int = k_p0 / (k_s0 + k_i0);
    if cos_int > 1.0 {
        return Err(Error::NotPhaseMatchable { k_pump: k_p0, k_pair: k_s0 + k_i0 });
    }
    let theta_int = cos_int.acos();
    let sin_ext = n_s * theta_int.sin();
    if sin_ext >= 1.0 {
        return Err(Error::NotPhaseMatchable { k_pump: k_p0, k_pair: k_s0 + k_i0 });
    }
    let theta_ext = sin_ext.asin();

    Ok(Geometry {
        lambda_p0,
        lambda_s0,
        lambda_i0,
        theta_s_ext: theta_ext,
        theta_i_ext: theta_ext,
        theta_s_int: theta_int,
        theta_i_int: theta_int,
        k_p0,
        k_s0,
        k_i0,
        n_p: index_extraordinary(lambda_p0, crystal.cut_angle, crystal)?,
        dn_p_dtheta: extraordinary_index_slope(lambda_p0, crystal.cut_angle, crystal)?,
    })
}

/// `w_p^a = |dn_p/dtheta| L / (n_p x_e)`.
pub fn anisotropy_radius_from(n_p: f64, dn_p_dtheta: f64, length: f64, sinc_root: f64) -> f64 {
    dn_p_dtheta.abs() * length / (n_p * sinc_root)
}

/// Pump radius below which birefringent anisotropy distorts the transverse
/// mode structure, m.
pub fn anisotropy_radius(crystal: &CrystalConfig, geometry: &Geometry) -> f64 {
    anisotropy_radius_from(geometry.n_p, geometry.dn_p_dtheta, crystal.length, ANISOTROPY_SINC_ROOT)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bbo() -> CrystalConfig {
        CrystalConfig::default_bbo()
    }

    // Kato 1986 evaluated independently (python, float64):
    // n_o(0.698 um) = sqrt(2.7405 + 0.0184/(0.487204 - 0.0179) - 0.0155*0.487204)
    const NO_698_KATO: f64 = 1.664_979_079_115_347;

    #[test]
    fn ordinary_index_golden_value() {
        let n = index_ordinary(698e-9, &bbo()).unwrap();
        assert!((n - NO_698_KATO).abs() < 1e-12, "{n}");
        assert_eq!(n, index_ordinary(698e-9, &bbo()).unwrap());
    }

    #[test]
    fn out_of_window_is_domain_error() {
        let err = index_ordinary(0.1e-6, &bbo()).unwrap_err();
        assert!(matches!(err, Error::Domain { .. }));
        assert!(err.to_string().contains("validity window"));
        assert!(index_extraordinary(1.5e-6, 0.3, &bbo()).is_err());
    }

    #[test]
    fn extraordinary_limits_and_bounds() {
        let c = bbo();
        for &l in &[0.25e-6, 349e-9, 698e-9, 1.1e-6] {
            let no = index_ordinary(l, &c).unwrap();
            let ne = index_principal_extraordinary(l, &c).unwrap();
            assert!((index_extraordinary(l, 0.0, &c).unwrap() - no).abs() < 1e-15);
            assert!((index_extraordinary(l, FRAC_PI_2, &c).unwrap() - ne).abs() < 1e-15);
            let mut prev = no;
            for j in 1..=90 {
                let n = index_extraordinary(l, (j as f64).to_radians(), &c).unwrap();
                assert!(n <= prev + 1e-15, "monotone in theta");
                assert!(n >= ne.min(no) - 1e-15 && n <= ne.max(no) + 1e-15);
                prev = n;
            }
        }
        assert!(index_extraordinary(349e-9, -0.1, &c).is_err());
    }

    #[test]
    fn pump_index_and_slope_near_quoted_values() {
        let c = bbo();
        let th = 36.3f64.to_radians();
        let n_p = index_extraordinary(349e-9, th, &c).unwrap();
        assert!((n_p - 1.658).abs() < 0.01, "{n_p}");
        let slope = extraordinary_index_slope(349e-9, th, &c).unwrap();
        assert!((slope.abs() - 0.123).abs() < 0.005, "{slope}");
    }

    #[test]
    fn slope_matches_analytic_derivative() {
        let c = bbo();
        let th = 0.6;
        let no = index_ordinary(349e-9, &c).unwrap();
        let ne = index_principal_extraordinary(349e-9, &c).unwrap();
        let n = index_extraordinary(349e-9, th, &c).unwrap();
        let exact = -0.5 * n.powi(3) * (2.0 * th).sin() * (1.0 / (ne * ne) - 1.0 / (no * no));
        let fd = extraordinary_index_slope(349e-9, th, &c).unwrap();
        assert!((fd - exact).abs() < 1e-8 * exact.abs());
    }

    #[test]
    fn geometry_is_phase_matched_and_symmetric() {
        let c = bbo();
        let g = solve_geometry(&c, 349e-9).unwrap();
        assert_eq!(g.theta_s_int, g.theta_i_int);
        assert_eq!(g.theta_s_ext, g.theta_i_ext);
        assert!(g.central_mismatch().abs() < 1e-10);
        let lhs = 1.0 / g.lambda_p0;
        let rhs = 1.0 / g.lambda_s0 + 1.0 / g.lambda_i0;
        assert!(((lhs - rhs) / lhs).abs() < 1e-12);
    }

    #[test]
    fn non_degenerate_and_unmatchable_are_rejected() {
        let c = bbo();
        assert!(matches!(
            solve_geometry_with_signal(&c, 349e-9, 700e-9),
            Err(Error::NonDegenerate { .. })
        ));
        // Collinear cut angle is about 32.8 deg; below it no real angle exists.
        let low = CrystalConfig::bbo(BboDispersion::Kato1986, 8e-3, 30f64.to_radians()).unwrap();
        assert!(matches!(solve_geometry(&low, 349e-9), Err(Error::NotPhaseMatchable { .. })));
    }

    #[test]
    fn anisotropy_radius_hand_values() {
        let w = anisotropy_radius_from(1.658, 0.123, 8e-3, ANISOTROPY_SINC_ROOT);
        assert!((w - 270e-6).abs() < 2e-6, "{w}");
        let w4 = anisotropy_radius_from(1.658, 0.123, 4e-3, ANISOTROPY_SINC_ROOT);
        assert!((w4 - 135e-6).abs() < 1e-6);
        assert!((anisotropy_radius_from(1.658, -0.123, 16e-3, 2.2) - 2.0 * w).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(CrystalConfig::bbo(BboDispersion::Kato1986, 0.0, 0.6).is_err());
        assert!(CrystalConfig::bbo(BboDispersion::Kato1986, 8e-3, 1.7).is_err());
        let mut c = bbo();
        c.ordinary.a = -3.0;
        assert!(c.validate().is_err());
    }
}
