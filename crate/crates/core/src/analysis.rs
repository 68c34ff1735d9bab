//! End-to-end pipelines for one parameter point: transverse and spectral
//! mode numbers, widths and the derived metrics.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::correlations::{
    intensity_profile, kdelta, section_widths, AzimuthalCorrelations, Profile1D, SectionWidths,
};
use crate::dispersion::{anisotropy_radius, solve_geometry, CrystalConfig, Geometry};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridKind};
use crate::kernels::{
    build_spectral_kernel_with, KernelMatrix, Numerics, PumpConfig, RadialSection, SpectralModel,
    TransverseComponents, TransverseModel,
};
use crate::schmidt::{
    decompose_keeping, kernel_schmidt_number, transverse_summary, OrderSpectrum,
    SchmidtDecomposition, TransverseModeSummary,
};
use crate::sweeps::{apply_spectral_filter, FilteredAmplitude};

/// Orders whose Frobenius norm exceeds this fraction of the `m = 0` norm
/// define the reported `m_cut`.
pub const M_CUT_RATIO: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct TransverseAnalysis {
    pub radial_grid: Grid,
    /// Radial signal intensity over every azimuthal order, on `radial_grid`.
    pub intensity: Profile1D,
    pub summary: TransverseModeSummary,
    /// Largest order whose Frobenius norm is at least [`M_CUT_RATIO`] of the
    /// `m = 0` norm.
    pub m_cut: usize,
    /// Last order included in the mode numbers.
    pub m_end: usize,
    /// Set when `numerics.m_max` stopped the order scan early.
    pub truncated: bool,
    pub radial: SectionWidths,
    pub azimuthal_auto: Profile1D,
    pub azimuthal_auto_sq: Profile1D,
    pub azimuthal_cross: Profile1D,
    /// Radial Schmidt modes of the `m = 0` order, when requested.
    pub order_zero: Option<SchmidtDecomposition>,
}

impl TransverseAnalysis {
    pub fn kdelta_k(&self) -> Result<f64> {
        kdelta(self.radial.intensity.fwhm, self.radial.auto_abs.fwhm)
    }

    pub fn kdelta_phi(&self) -> Result<f64> {
        kdelta(2.0 * PI, self.azimuthal_auto.fwhm)
    }
}

/// Smallest `m` in `(lo, hi]` with `pred(m)` true, assuming `pred` is
/// monotone and `pred(hi)` holds.
fn bisect(mut lo: usize, mut hi: usize, pred: impl Fn(usize) -> bool) -> usize {
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

pub fn analyze_transverse(
    crystal: &CrystalConfig,
    geometry: &Geometry,
    pump: &PumpConfig,
    numerics: &Numerics,
    keep_modes: usize,
) -> Result<TransverseAnalysis> {
    let model = TransverseModel::new(geometry, crystal, pump);
    let grid = model.radial_grid(numerics)?;

    // Beyond about 3 w_p k_perp the order norms are below 1e-4; 5 leaves
    // ample room.
    let m_est = ((5.0 * pump.w_p * model.k_perp0).ceil() as usize).clamp(1, numerics.m_max.max(1));
    let comps = TransverseComponents::new(&model, &grid, &grid, numerics, m_est);
    if comps.is_negligible() {
        return Err(Error::NoSignal(0.0));
    }
    let intensity = Profile1D::new(grid.clone(), comps.intensity())?;
    let t0 = comps.component(0);
    let n0 = t0.weighted_norm_sq();
    if !(n0 > 0.0) {
        return Err(Error::NoSignal(n0));
    }
    let ratio = |m: usize| (comps.component(m).weighted_norm_sq() / n0).sqrt();

    let truncated = ratio(m_est) >= numerics.m_norm_cutoff;
    let m_end = if truncated {
        m_est
    } else {
        bisect(0, m_est, |m| ratio(m) < numerics.m_norm_cutoff)
    };
    let m_cut = if ratio(m_est) >= M_CUT_RATIO {
        m_est
    } else {
        bisect(0, m_est, |m| ratio(m) < M_CUT_RATIO) - 1
    };

    let samples = numerics.scaled_m_samples().min(m_end + 1);
    let mut ms: Vec<usize> = (0..samples)
        .map(|k| (m_end as f64 * k as f64 / (samples - 1).max(1) as f64).round() as usize)
        .collect();
    ms.dedup();
    let orders = ms
        .par_iter()
        .map(|&m| {
            if m == 0 {
                OrderSpectrum::from_kernel(0, &t0)
            } else {
                OrderSpectrum::from_kernel(m, &comps.component(m))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = transverse_summary(&orders)?;

    let order_zero = if keep_modes > 0 { Some(decompose_keeping(&t0, keep_modes)?) } else { None };

    let section = RadialSection::new(model.clone(), model.band_halfwidth(numerics));
    let radial = section_widths(
        &section,
        grid.points(),
        &grid,
        model.k_perp0,
        numerics.scaled_section_points(),
        GridKind::Radial,
    )?;

    let az = AzimuthalCorrelations::new(&model, numerics.band_exponent, numerics.scaled_section_points());
    let (azimuthal_auto, azimuthal_auto_sq, azimuthal_cross) = az.sections()?;

    Ok(TransverseAnalysis {
        radial_grid: grid,
        intensity,
        summary,
        m_cut,
        m_end,
        truncated,
        radial,
        azimuthal_auto,
        azimuthal_auto_sq,
        azimuthal_cross,
        order_zero,
    })
}

#[derive(Clone, Debug)]
pub struct SpectralAnalysis {
    pub grid: Grid,
    /// Signal intensity spectrum on `grid`.
    pub intensity: Profile1D,
    pub k_omega: f64,
    pub widths: SectionWidths,
    /// Filter FWHM in wavelength, if one was applied.
    pub filter: Option<f64>,
    pub decomposition: Option<SchmidtDecomposition>,
}

impl SpectralAnalysis {
    pub fn kdelta_omega(&self) -> Result<f64> {
        kdelta(self.widths.intensity.fwhm, self.widths.auto_abs.fwhm)
    }
}

/// The spectral kernel of a configuration, filtered when `filter` is set.
pub fn spectral_kernel(
    crystal: &CrystalConfig,
    geometry: &Geometry,
    pump: &PumpConfig,
    filter: Option<f64>,
    numerics: &Numerics,
) -> Result<(SpectralModel, KernelMatrix)> {
    let model = SpectralModel::new(geometry, crystal, pump, numerics);
    let grid = model.grid(numerics)?;
    let mut kernel = build_spectral_kernel_with(&model, &grid, &grid)?;
    if let Some(width) = filter {
        kernel = apply_spectral_filter(&kernel, geometry, width)?;
    }
    if kernel.is_negligible() {
        return Err(Error::NoSignal(kernel.max_abs()));
    }
    Ok((model, kernel))
}

pub fn analyze_spectral(
    crystal: &CrystalConfig,
    geometry: &Geometry,
    pump: &PumpConfig,
    filter: Option<f64>,
    numerics: &Numerics,
    keep_modes: usize,
) -> Result<SpectralAnalysis> {
    let (model, kernel) = spectral_kernel(crystal, geometry, pump, filter, numerics)?;
    let k_omega = kernel_schmidt_number(&kernel)?;
    let intensity = intensity_profile(&kernel)?;
    let decomposition =
        if keep_modes > 0 { Some(decompose_keeping(&kernel, keep_modes)?) } else { None };
    let grid = kernel.row_grid().clone();
    let points = numerics.scaled_section_points();
    let widths = match filter {
        Some(width) => {
            let amp = FilteredAmplitude::new(&model, geometry, width)?;
            section_widths(&amp, grid.points(), &grid, geometry.omega_i0(), points, GridKind::Spectral)?
        }
        None => section_widths(&model, grid.points(), &grid, geometry.omega_i0(), points, GridKind::Spectral)?,
    };
    Ok(SpectralAnalysis { grid, intensity, k_omega, widths, filter, decomposition })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricGroup {
    Geometry,
    Transverse,
    Spectral,
}

#[derive(Clone, Copy, Debug)]
pub struct MetricInfo {
    pub name: &'static str,
    pub unit: &'static str,
    pub group: MetricGroup,
}

const fn info(name: &'static str, unit: &'static str, group: MetricGroup) -> MetricInfo {
    MetricInfo { name, unit, group }
}

/// Every metric the pipelines can report, in output order.
pub const METRICS: &[MetricInfo] = &[
    info("w_p_a", "m", MetricGroup::Geometry),
    info("theta_ext", "deg", MetricGroup::Geometry),
    info("n_p", "1", MetricGroup::Geometry),
    info("dn_p_dtheta", "1/rad", MetricGroup::Geometry),
    info("K_kphi", "1", MetricGroup::Transverse),
    info("K_k", "1", MetricGroup::Transverse),
    info("K_phi", "1", MetricGroup::Transverse),
    info("KDelta_k", "1", MetricGroup::Transverse),
    info("KDelta_phi", "1", MetricGroup::Transverse),
    info("KDelta_kphi", "1", MetricGroup::Transverse),
    info("Delta_n_k", "rad/m", MetricGroup::Transverse),
    info("Delta_A_k", "rad/m", MetricGroup::Transverse),
    info("Delta_A2_k", "rad/m", MetricGroup::Transverse),
    info("Delta_C_k", "rad/m", MetricGroup::Transverse),
    info("Delta_n_phi", "rad", MetricGroup::Transverse),
    info("Delta_A_phi", "rad", MetricGroup::Transverse),
    info("Delta_A2_phi", "rad", MetricGroup::Transverse),
    info("Delta_C_phi", "rad", MetricGroup::Transverse),
    info("m_cut", "1", MetricGroup::Transverse),
    info("m_end", "1", MetricGroup::Transverse),
    info("K_omega", "1", MetricGroup::Spectral),
    info("KDelta_omega", "1", MetricGroup::Spectral),
    info("Delta_n_omega", "rad/s", MetricGroup::Spectral),
    info("Delta_A_omega", "rad/s", MetricGroup::Spectral),
    info("Delta_A2_omega", "rad/s", MetricGroup::Spectral),
    info("Delta_C_omega", "rad/s", MetricGroup::Spectral),
];

pub fn metric_info(name: &str) -> Option<&'static MetricInfo> {
    METRICS.iter().find(|m| m.name == name)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Metric {
    pub name: &'static str,
    pub unit: &'static str,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Metrics {
    pub entries: Vec<Metric>,
}

impl Metrics {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|m| m.name == name).map(|m| m.value)
    }

    fn push(&mut self, name: &'static str, value: f64) {
        let unit = metric_info(name).map(|m| m.unit).unwrap_or("1");
        self.entries.push(Metric { name, unit, value });
    }

    /// Keeps only `names`, in the given order.
    pub fn select(&self, names: &[String]) -> Result<Metrics> {
        let mut out = Metrics::default();
        for n in names {
            let m = self
                .entries
                .iter()
                .find(|m| m.name == n)
                .ok_or_else(|| Error::invalid("outputs", format!("metric `{n}` was not computed")))?;
            out.entries.push(m.clone());
        }
        Ok(out)
    }
}

/// Results of a full single-point analysis.
#[derive(Clone, Debug)]
pub struct PointAnalysis {
    pub crystal: CrystalConfig,
    pub geometry: Geometry,
    pub transverse: Option<TransverseAnalysis>,
    pub spectral: Option<SpectralAnalysis>,
    pub metrics: Metrics,
}

/// Runs the pipelines needed for `names` (all metrics when empty).
pub fn analyze_point(config: &RunConfig, names: &[String], keep_modes: usize) -> Result<PointAnalysis> {
    for n in names {
        if metric_info(n).is_none() {
            return Err(Error::invalid("outputs", format!("unknown metric `{n}`")));
        }
    }
    let wants = |g: MetricGroup| {
        names.is_empty() || names.iter().any(|n| metric_info(n).map(|m| m.group) == Some(g))
    };
    let crystal = config.crystal()?;
    let pump = config.pump.clone();
    let numerics = &config.numerics;
    let geometry = solve_geometry(&crystal, pump.lambda_p0)?;

    let mut metrics = Metrics::default();
    metrics.push("w_p_a", anisotropy_radius(&crystal, &geometry));
    metrics.push("theta_ext", geometry.theta_s_ext.to_degrees());
    metrics.push("n_p", geometry.n_p);
    metrics.push("dn_p_dtheta", geometry.dn_p_dtheta);

    let transverse = if wants(MetricGroup::Transverse) {
        let t = analyze_transverse(&crystal, &geometry, &pump, numerics, keep_modes)?;
        let kd_k = t.kdelta_k()?;
        let kd_phi = t.kdelta_phi()?;
        metrics.push("K_kphi", t.summary.k_kphi);
        metrics.push("K_k", t.summary.k_k);
        metrics.push("K_phi", t.summary.k_phi);
        metrics.push("KDelta_k", kd_k);
        metrics.push("KDelta_phi", kd_phi);
        metrics.push("KDelta_kphi", kd_k * kd_phi);
        metrics.push("Delta_n_k", t.radial.intensity.fwhm);
        metrics.push("Delta_A_k", t.radial.auto_abs.fwhm);
        metrics.push("Delta_A2_k", t.radial.auto_sq.fwhm);
        metrics.push("Delta_C_k", t.radial.cross.fwhm);
        metrics.push("Delta_n_phi", 2.0 * PI);
        metrics.push("Delta_A_phi", t.azimuthal_auto.fwhm);
        metrics.push("Delta_A2_phi", t.azimuthal_auto_sq.fwhm);
        metrics.push("Delta_C_phi", t.azimuthal_cross.fwhm);
        metrics.push("m_cut", t.m_cut as f64);
        metrics.push("m_end", t.m_end as f64);
        Some(t)
    } else {
        None
    };

    let spectral = if wants(MetricGroup::Spectral) {
        let s = analyze_spectral(&crystal, &geometry, &pump, config.filter_width, numerics, keep_modes)?;
        metrics.push("K_omega", s.k_omega);
        metrics.push("KDelta_omega", s.kdelta_omega()?);
        metrics.push("Delta_n_omega", s.widths.intensity.fwhm);
        metrics.push("Delta_A_omega", s.widths.auto_abs.fwhm);
        metrics.push("Delta_A2_omega", s.widths.auto_sq.fwhm);
        metrics.push("Delta_C_omega", s.widths.cross.fwhm);
        Some(s)
    } else {
        None
    };

    if let Some(bad) = metrics.entries.iter().find(|m| !m.value.is_finite()) {
        return Err(Error::invalid(bad.name, "metric is not finite"));
    }
    let metrics = if names.is_empty() { metrics } else { metrics.select(names)? };
    Ok(PointAnalysis { crystal, geometry, transverse, spectral, metrics })
}

/// Metrics only.
pub fn compute_metrics(config: &RunConfig, names: &[String]) -> Result<Metrics> {
    Ok(analyze_point(config, names, 0)?.metrics)
}
