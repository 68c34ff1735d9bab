//! Pump envelopes and the discretized two-photon amplitudes.
//!
//! The transverse amplitude depends on the azimuths only through
//! `dphi = phi_s - phi_i - pi`, so it is handled one azimuthal order at a
//! time: [`TransverseComponents`] samples the amplitude once on a lattice in
//! `dphi` and projects out any order `m` on demand. The spectral amplitude is
//! built directly on a pair of frequency grids.
//!
//! Kernels are stored as banded rows: entries where the pump envelope has
//! dropped below `exp(-band_exponent)` of its peak are not stored and read as
//! zero.

use std::f64::consts::{LN_2, PI};
use std::ops::Range;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::{
    ordinary_wave_number, pump_wave_number, CrystalConfig, Geometry, SPEED_OF_LIGHT,
};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridKind};

#[derive(Clone, Debug, PartialEq)]
pub struct PumpConfig {
    pub lambda_p0: f64,
    /// Transverse radius, m.
    pub w_p: f64,
    /// Pulse duration, s.
    pub tau_p: f64,
    pub normal_incidence: bool,
}

/// Duration of a Gaussian pulse whose intensity spectrum has FWHM
/// `bandwidth` (m of wavelength) around `lambda_p0`.
pub fn duration_for_bandwidth(lambda_p0: f64, bandwidth: f64) -> f64 {
    let omega = 2.0 * PI * SPEED_OF_LIGHT / lambda_p0;
    4.0 * PI * (2.0 * LN_2).sqrt() * SPEED_OF_LIGHT / (omega * omega * bandwidth)
}

impl PumpConfig {
    pub fn new(lambda_p0: f64, w_p: f64, tau_p: f64) -> Result<Self> {
        let p = PumpConfig { lambda_p0, w_p, tau_p, normal_incidence: true };
        p.validate()?;
        Ok(p)
    }

    pub fn from_bandwidth(lambda_p0: f64, w_p: f64, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::invalid("pump.bandwidth", "must be positive"));
        }
        Self::new(lambda_p0, w_p, duration_for_bandwidth(lambda_p0, bandwidth))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_p0 > 0.0 && self.lambda_p0.is_finite()) {
            return Err(Error::invalid("pump.lambda_p0", "must be positive"));
        }
        if !(self.w_p > 0.0 && self.w_p.is_finite()) {
            return Err(Error::invalid("pump.w_p", "must be positive"));
        }
        if !(self.tau_p > 0.0 && self.tau_p.is_finite()) {
            return Err(Error::invalid("pump.tau_p", "must be positive"));
        }
        if !self.normal_incidence {
            return Err(Error::invalid("pump.normal_incidence", "only normal incidence is modelled"));
        }
        Ok(())
    }

    pub fn omega_p0(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.lambda_p0
    }

    /// Intensity FWHM of the pump spectrum in wavelength, m.
    pub fn bandwidth(&self) -> f64 {
        let w = self.omega_p0();
        4.0 * PI * (2.0 * LN_2).sqrt() * SPEED_OF_LIGHT / (w * w * self.tau_p)
    }
}

/// `E_p(q) = w_p / sqrt(2 pi) exp(-w_p^2 q^2 / 4)`, normalized so that
/// `|E_p|^2` integrates to one over the transverse plane.
pub fn pump_spatial_spectrum(q: f64, pump: &PumpConfig) -> Complex64 {
    let w = pump.w_p;
    Complex64::new(w / (2.0 * PI).sqrt() * (-w * w * q * q / 4.0).exp(), 0.0)
}

/// `E_p(omega) = sqrt(tau / sqrt(2 pi)) exp(-tau^2 (omega - omega_p0)^2 / 4)`.
pub fn pump_spectrum(omega: f64, pump: &PumpConfig) -> Complex64 {
    let t = pump.tau_p;
    let d = omega - pump.omega_p0();
    Complex64::new((t / (2.0 * PI).sqrt()).sqrt() * (-t * t * d * d / 4.0).exp(), 0.0)
}

pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `exp(-i a) sinc(a)` with `a = mismatch * length / 2`.
pub fn phase_matching(mismatch: f64, length: f64) -> Complex64 {
    let a = 0.5 * mismatch * length;
    let s = sinc(a);
    Complex64::new(a.cos() * s, -a.sin() * s)
}

/// Discretization settings shared by every grid builder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    /// Grid nodes per characteristic width of the kernel.
    pub points_per_width: f64,
    /// Multiplies every grid density (convergence studies).
    pub grid_scale: f64,
    /// Nodes per Gauss-Legendre panel.
    pub gl_order: usize,
    /// A grid ends where the marginal intensity falls below this fraction of
    /// its peak.
    pub span_threshold: f64,
    /// Entries with pump envelope below `exp(-band_exponent)` are dropped.
    pub band_exponent: f64,
    /// Number of azimuthal orders evaluated explicitly.
    pub m_samples: usize,
    /// Hard ceiling on the azimuthal order.
    pub m_max: usize,
    /// Orders whose kernel norm is below this fraction of the `m = 0` norm
    /// are dropped.
    pub m_norm_cutoff: f64,
    /// Nodes of the uniform axes used for sections and widths.
    pub section_points: usize,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            points_per_width: 4.0,
            grid_scale: 1.0,
            gl_order: 8,
            span_threshold: 1e-3,
            band_exponent: 36.0,
            m_samples: 64,
            m_max: 50_000,
            m_norm_cutoff: 1e-4,
            section_points: 1201,
            workers: 0,
        }
    }
}

impl Numerics {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, f: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("numerics.{f}"), "must be positive"))
            }
        };
        pos(self.points_per_width, "points_per_width")?;
        pos(self.grid_scale, "grid_scale")?;
        pos(self.band_exponent, "band_exponent")?;
        pos(self.m_norm_cutoff, "m_norm_cutoff")?;
        if !(self.span_threshold > 0.0 && self.span_threshold < 1.0) {
            return Err(Error::invalid("numerics.span_threshold", "must lie in (0, 1)"));
        }
        if self.gl_order == 0 {
            return Err(Error::invalid("numerics.gl_order", "must be at least 1"));
        }
        if self.m_samples < 2 {
            return Err(Error::invalid("numerics.m_samples", "must be at least 2"));
        }
        if self.section_points < 11 {
            return Err(Error::invalid("numerics.section_points", "must be at least 11"));
        }
        Ok(())
    }

    pub fn density(&self) -> f64 {
        self.points_per_width * self.grid_scale
    }

    pub fn scaled_section_points(&self) -> usize {
        ((self.section_points as f64 * self.grid_scale).round() as usize) | 1
    }

    pub fn scaled_m_samples(&self) -> usize {
        ((self.m_samples as f64 * self.grid_scale).round() as usize).max(2)
    }

    /// Pump-envelope cut expressed as a multiple of the envelope's `1/e`
    /// amplitude half-width.
    pub fn band_factor(&self) -> f64 {
        self.band_exponent.sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelLabel {
    /// Azimuthal order `m` of the transverse amplitude.
    Transverse { m: usize },
    /// Transverse amplitude at `phi_s = 0`, `phi_i = pi`.
    RadialSection,
    Spectral,
    Custom(String),
}

impl std::fmt::Display for KernelLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KernelLabel::Transverse { m } => write!(f, "T_{m}"),
            KernelLabel::RadialSection => write!(f, "T_section"),
            KernelLabel::Spectral => write!(f, "F_L"),
            KernelLabel::Custom(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandRow {
    pub start: usize,
    pub values: Vec<Complex64>,
}

impl BandRow {
    pub fn columns(&self) -> Range<usize> {
        self.start..self.start + self.values.len()
    }
}

/// Discretized two-photon amplitude: rows follow the signal grid, columns the
/// idler grid.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix {
    label: KernelLabel,
    row_grid: Grid,
    col_grid: Grid,
    rows: Vec<BandRow>,
    negligible: bool,
}

impl KernelMatrix {
    /// Dense kernel from a pointwise function of the grid coordinates.
    pub fn from_fn<F>(label: KernelLabel, row_grid: &Grid, col_grid: &Grid, f: F) -> Self
    where
        F: Fn(f64, f64) -> Complex64 + Sync,
    {
        let cols = col_grid.points();
        let rows = row_grid
            .points()
            .par_iter()
            .map(|&x| BandRow { start: 0, values: cols.iter().map(|&y| f(x, y)).collect() })
            .collect();
        KernelMatrix {
            label,
            row_grid: row_grid.clone(),
            col_grid: col_grid.clone(),
            rows,
            negligible: false,
        }
    }

    /// Banded kernel; `band(i)` gives the stored column range of row `i` and
    /// `f(i, j)` the entry.
    pub fn try_from_band<B, F>(
        label: KernelLabel,
        row_grid: &Grid,
        col_grid: &Grid,
        band: B,
        f: F,
    ) -> Result<Self>
    where
        B: Fn(usize) -> Range<usize> + Sync,
        F: Fn(usize, usize) -> Result<Complex64> + Sync,
    {
        let rows = (0..row_grid.len())
            .into_par_iter()
            .map(|i| {
                let r = band(i);
                let values = r.clone().map(|j| f(i, j)).collect::<Result<Vec<_>>>()?;
                Ok(BandRow { start: r.start, values })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(KernelMatrix {
            label,
            row_grid: row_grid.clone(),
            col_grid: col_grid.clone(),
            rows,
            negligible: false,
        })
    }

    pub(crate) fn from_rows(
        label: KernelLabel,
        row_grid: &Grid,
        col_grid: &Grid,
        rows: Vec<BandRow>,
        negligible: bool,
    ) -> Self {
        KernelMatrix { label, row_grid: row_grid.clone(), col_grid: col_grid.clone(), rows, negligible }
    }

    pub fn label(&self) -> &KernelLabel {
        &self.label
    }

    pub fn row_grid(&self) -> &Grid {
        &self.row_grid
    }

    pub fn col_grid(&self) -> &Grid {
        &self.col_grid
    }

    pub fn rows(&self) -> &[BandRow] {
        &self.rows
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.row_grid.len(), self.col_grid.len())
    }

    /// Set when the grids miss the phase-matching ring and the kernel carries
    /// no appreciable amplitude.
    pub fn is_negligible(&self) -> bool {
        self.negligible
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let r = &self.rows[i];
        if j >= r.start && j < r.start + r.values.len() {
            r.values[j - r.start]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn stored_entries(&self) -> usize {
        self.rows.iter().map(|r| r.values.len()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.rows.iter().flat_map(|r| r.values.iter()).map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.rows.iter().flat_map(|r| r.values.iter()).all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// `sum_ij w_i w_j |K_ij|^2`, the discretized squared L2 norm.
    pub fn weighted_norm_sq(&self) -> f64 {
        let wr = self.row_grid.weights();
        let wc = self.col_grid.weights();
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                wr[i]
                    * r.values
                        .iter()
                        .enumerate()
                        .map(|(k, v)| wc[r.start + k] * v.norm_sqr())
                        .sum::<f64>()
            })
            .sum()
    }

    /// Row-major dense copy of `W_r^{1/2} K W_c^{1/2}`.
    pub fn weighted_dense(&self) -> Vec<Complex64> {
        let (n, m) = self.shape();
        let wr = self.row_grid.weights();
        let wc = self.col_grid.weights();
        let mut out = vec![Complex64::new(0.0, 0.0); n * m];
        for (i, r) in self.rows.iter().enumerate() {
            let si = wr[i].sqrt();
            for (k, v) in r.values.iter().enumerate() {
                let j = r.start + k;
                out[i * m + j] = v * (si * wc[j].sqrt());
            }
        }
        out
    }

    /// Largest `|K_ij - K_ji|` relative to the largest entry. Requires a
    /// square kernel.
    pub fn transpose_asymmetry(&self) -> f64 {
        let (n, m) = self.shape();
        assert_eq!(n, m, "transpose asymmetry needs a square kernel");
        let mut worst = 0.0f64;
        for (i, r) in self.rows.iter().enumerate() {
            for (k, v) in r.values.iter().enumerate() {
                let j = r.start + k;
                worst = worst.max((v - self.get(j, i)).norm());
            }
        }
        let scale = self.max_abs();
        if scale > 0.0 {
            worst / scale
        } else {
            0.0
        }
    }

    /// Applies `f(x, y, value)` to every stored entry.
    pub fn map<F>(&self, label: KernelLabel, f: F) -> Self
    where
        F: Fn(f64, f64, Complex64) -> Complex64 + Sync,
    {
        let xs = self.row_grid.points();
        let ys = self.col_grid.points();
        let rows = self
            .rows
            .par_iter()
            .enumerate()
            .map(|(i, r)| BandRow {
                start: r.start,
                values: r
                    .values
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| f(xs[i], ys[r.start + k], v))
                    .collect(),
            })
            .collect();
        KernelMatrix { rows, label, ..self.clone() }
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        self.map(self.label.clone(), |_, _, v| v * factor)
    }
}

/// A two-photon amplitude that can be evaluated anywhere, used for sections
/// on axes finer than the decomposition grids. Values include the measure
/// factors of the Schmidt problem.
pub trait TwoPhotonAmplitude: Sync {
    fn amplitude(&self, s: f64, i: f64) -> Result<Complex64>;

    /// Idler interval outside which the amplitude is negligible for signal
    /// coordinate `s`.
    fn support(&self, s: f64) -> (f64, f64);
}

/// Closed-form transverse amplitude with the geometry constants resolved.
#[derive(Clone, Debug, PartialEq)]
pub struct TransverseModel {
    pub k_pump: f64,
    pub k_signal: f64,
    pub k_idler: f64,
    pub length: f64,
    pub pump: PumpConfig,
    /// Central radial transverse wave number, rad/m.
    pub k_perp0: f64,
    pub tan_theta: f64,
}

impl TransverseModel {
    pub fn new(geometry: &Geometry, crystal: &CrystalConfig, pump: &PumpConfig) -> Self {
        TransverseModel {
            k_pump: geometry.k_p0,
            k_signal: geometry.k_s0,
            k_idler: geometry.k_i0,
            length: crystal.length,
            pump: pump.clone(),
            k_perp0: geometry.k_perp_s0(),
            tan_theta: geometry.theta_s_int.tan(),
        }
    }

    /// `T(k_s, k_i, dphi)` with `dphi = 0` for antiparallel transverse wave
    /// vectors, the longitudinal mismatch taken from exact z-components.
    pub fn amplitude(&self, ks: f64, ki: f64, dphi: f64) -> Complex64 {
        let q2 = ks * ks + ki * ki - 2.0 * ks * ki * dphi.cos();
        let q2 = q2.max(0.0);
        let kzp = (self.k_pump * self.k_pump - q2).max(0.0).sqrt();
        let kzs = (self.k_signal * self.k_signal - ks * ks).max(0.0).sqrt();
        let kzi = (self.k_idler * self.k_idler - ki * ki).max(0.0).sqrt();
        let delta = kzp - (kzs + kzi);
        pump_spatial_spectrum(q2.sqrt(), &self.pump) * phase_matching(delta, self.length)
    }

    /// Half-width in `|k_s - k_i|` beyond which the pump envelope is dropped.
    pub fn band_halfwidth(&self, numerics: &Numerics) -> f64 {
        2.0 * numerics.band_factor() / self.pump.w_p
    }

    /// Grid spacing resolving both the pump envelope and the sinc
    /// oscillation along the ring.
    pub fn radial_spacing(&self, numerics: &Numerics) -> f64 {
        let pump = 2.0 / self.pump.w_p;
        let sinc = 2.0 * PI / (self.length * self.tan_theta.abs());
        pump.min(sinc) / numerics.density()
    }

    /// Composite Gauss-Legendre grid centred on the emission ring, ending
    /// where the radial marginal drops below the span threshold.
    pub fn radial_grid(&self, numerics: &Numerics) -> Result<Grid> {
        let h = self.radial_spacing(numerics);
        let section = RadialSection::new(self.clone(), self.band_halfwidth(numerics));
        let k0 = self.k_perp0;
        let limit = k0.min(self.k_signal - k0) * 0.999;
        let marginal = |x: f64| marginal_intensity(&section, k0 + x, h / 2.0);
        let half = bracket_half_width(marginal, h, numerics.span_threshold, limit)?;
        centred_grid(GridKind::Radial, k0, half, h, numerics.gl_order)
    }
}

/// `sqrt(k_s k_i) T(k_s, k_i, 0)`: the amplitude at `phi_s = 0`,
/// `phi_i = pi` with the radial measure absorbed.
#[derive(Clone, Debug)]
pub struct RadialSection {
    pub model: TransverseModel,
    band: f64,
}

impl RadialSection {
    pub fn new(model: TransverseModel, band_halfwidth: f64) -> Self {
        RadialSection { model, band: band_halfwidth }
    }

    pub fn value(&self, ks: f64, ki: f64) -> Complex64 {
        (ks * ki).sqrt() * self.model.amplitude(ks, ki, 0.0)
    }
}

impl TwoPhotonAmplitude for RadialSection {
    fn amplitude(&self, s: f64, i: f64) -> Result<Complex64> {
        Ok(self.value(s, i))
    }

    fn support(&self, s: f64) -> (f64, f64) {
        ((s - self.band).max(0.0), s + self.band)
    }
}

/// `int |K(s, y)|^2 dy` over the support of row `s`, trapezoid with step
/// at most `h`.
pub fn marginal_intensity<A: TwoPhotonAmplitude + ?Sized>(amp: &A, s: f64, h: f64) -> Result<f64> {
    let (a, b) = amp.support(s);
    let n = (((b - a) / h).ceil() as usize).max(8);
    let step = (b - a) / n as f64;
    let mut acc = 0.0;
    for j in 0..=n {
        let w = if j == 0 || j == n { 0.5 } else { 1.0 };
        acc += w * amp.amplitude(s, a + step * j as f64)?.norm_sqr();
    }
    Ok(acc * step)
}

/// Scans `f` outwards from zero on both sides in doubling blocks until a
/// whole block stays below `threshold` times the running peak; returns the
/// largest `|x|` still above it, capped at `limit`.
pub fn bracket_half_width<F>(f: F, step: f64, threshold: f64, limit: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut peak = f(0.0)?;
    let mut last_above = [0.0f64, 0.0];
    let mut block_end = 16usize;
    let mut k = 1usize;
    loop {
        let mut block_max = 0.0f64;
        while k <= block_end {
            let x = step * k as f64;
            if x > limit {
                return Ok(limit);
            }
            for (side, sign) in [1.0f64, -1.0].into_iter().enumerate() {
                let v = f(sign * x)?;
                if v > peak {
                    peak = v;
                }
                block_max = block_max.max(v);
                if v > threshold * peak {
                    last_above[side] = x;
                }
            }
            k += 1;
        }
        if !(peak > 0.0) {
            return Err(Error::NoSignal(peak));
        }
        if block_max < threshold * peak {
            let half = last_above[0].max(last_above[1]) + step;
            return Ok(half.min(limit));
        }
        block_end *= 2;
    }
}

fn centred_grid(kind: GridKind, centre: f64, half: f64, h: f64, order: usize) -> Result<Grid> {
    let n = (2.0 * half / h).ceil() as usize;
    let panels = n.div_ceil(order).max(2);
    // An even panel count keeps the centre on a panel edge, so the node set
    // is mirror symmetric about it.
    let panels = panels + panels % 2;
    Grid::composite_gauss_legendre(kind, centre - half, centre + half, panels, order)
}

/// Azimuthal orders of the transverse amplitude on a pair of radial grids.
///
/// The amplitude is even in `dphi` and concentrated within a few
/// `1/(w_p k_perp)` of zero, so it is sampled on a symmetric lattice over
/// that window only; the order-`m` component then reduces to a cosine sum.
pub struct TransverseComponents {
    row_grid: Grid,
    col_grid: Grid,
    bands: Vec<Range<usize>>,
    lattice: Vec<f64>,
    lattice_weights: Vec<f64>,
    /// Per row: band columns times lattice points, already multiplied by
    /// `sqrt(k_s k_i)`.
    samples: Vec<Vec<Complex64>>,
    negligible: bool,
    m_top: usize,
}

impl TransverseComponents {
    /// Samples the amplitude so that orders up to `m_top` are resolved.
    pub fn new(
        model: &TransverseModel,
        row_grid: &Grid,
        col_grid: &Grid,
        numerics: &Numerics,
        m_top: usize,
    ) -> Self {
        let w = model.pump.w_p;
        let k_min = row_grid.lower().min(col_grid.lower()).max(1e-12 * model.k_perp0);
        let scale = w * model.k_perp0;
        let h = ((2.0f64).sqrt() / (4.0 * scale * numerics.grid_scale))
            .min(PI / (4.0 * m_top.max(1) as f64));
        let window = (1.05 * 2.0 * numerics.band_factor() / (w * k_min)).min(PI);
        let j_max = (window / h).ceil() as usize;
        let (lattice, lattice_weights): (Vec<f64>, Vec<f64>) = if h * j_max as f64 >= PI {
            // Window reaches the full circle: plain periodic trapezoid.
            let n_half = (PI / h).ceil() as usize;
            let h = PI / n_half as f64;
            (0..=n_half)
                .map(|j| {
                    let c = if j == 0 || j == n_half { 1.0 } else { 2.0 };
                    (h * j as f64, c * h / (2.0 * PI))
                })
                .unzip()
        } else {
            (0..=j_max)
                .map(|j| {
                    let c = if j == 0 { 1.0 } else { 2.0 };
                    (h * j as f64, c * h / (2.0 * PI))
                })
                .unzip()
        };

        let band = model.band_halfwidth(numerics);
        let ks = row_grid.points();
        let ki = col_grid.points();
        let bands: Vec<Range<usize>> = ks
            .iter()
            .map(|&x| {
                let lo = ki.partition_point(|&y| (x - y) > band);
                let hi = ki.partition_point(|&y| (y - x) <= band);
                lo..hi.max(lo)
            })
            .collect();
        let samples: Vec<Vec<Complex64>> = bands
            .par_iter()
            .enumerate()
            .map(|(i, r)| {
                let mut out = Vec::with_capacity(r.len() * lattice.len());
                for j in r.clone() {
                    let measure = (ks[i] * ki[j]).sqrt();
                    for &phi in &lattice {
                        out.push(measure * model.amplitude(ks[i], ki[j], phi));
                    }
                }
                out
            })
            .collect();

        let reference = model.k_perp0 * w / (2.0 * PI).sqrt();
        let peak = samples
            .iter()
            .flat_map(|row| row.iter().step_by(lattice.len()))
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        TransverseComponents {
            row_grid: row_grid.clone(),
            col_grid: col_grid.clone(),
            bands,
            lattice,
            lattice_weights,
            samples,
            negligible: peak < 1e-8 * reference,
            m_top,
        }
    }

    pub fn lattice(&self) -> &[f64] {
        &self.lattice
    }

    pub fn m_top(&self) -> usize {
        self.m_top
    }

    /// Signal intensity summed over every order, `sum_m int |sqrt(k_s k_i)
    /// T_m|^2 dk_i`, evaluated through Parseval on the azimuthal lattice.
    pub fn intensity(&self) -> Vec<f64> {
        let wi = self.col_grid.weights();
        let nl = self.lattice.len();
        self.bands
            .par_iter()
            .zip(&self.samples)
            .map(|(r, row)| {
                let mut acc = 0.0;
                for (c, j) in r.clone().enumerate() {
                    let mut inner = 0.0;
                    for (v, lw) in row[c * nl..(c + 1) * nl].iter().zip(&self.lattice_weights) {
                        inner += lw * v.norm_sqr();
                    }
                    acc += wi[j] * inner;
                }
                acc
            })
            .collect()
    }

    pub fn is_negligible(&self) -> bool {
        self.negligible
    }

    /// `sqrt(k_s k_i) T_m(k_s, k_i)` with
    /// `T_m = (1/2pi) int T(k_s, k_i, dphi) exp(-i m dphi) ddphi`.
    pub fn component(&self, m: usize) -> KernelMatrix {
        let coeffs: Vec<f64> = self
            .lattice
            .iter()
            .zip(&self.lattice_weights)
            .map(|(&phi, &w)| w * (m as f64 * phi).cos())
            .collect();
        let nl = self.lattice.len();
        let rows = self
            .bands
            .par_iter()
            .zip(self.samples.par_iter())
            .map(|(r, s)| BandRow {
                start: r.start,
                values: s
                    .chunks_exact(nl)
                    .map(|chunk| {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for (v, c) in chunk.iter().zip(&coeffs) {
                            acc += v * c;
                        }
                        acc
                    })
                    .collect(),
            })
            .collect();
        KernelMatrix::from_rows(
            KernelLabel::Transverse { m },
            &self.row_grid,
            &self.col_grid,
            rows,
            self.negligible,
        )
    }
}

/// Order-`m` azimuthal component of the transverse amplitude, radial measure
/// absorbed. For many orders build one [`TransverseComponents`] instead.
pub fn build_transverse_component(
    m: i64,
    geometry: &Geometry,
    crystal: &CrystalConfig,
    pump: &PumpConfig,
    numerics: &Numerics,
    radial_grid_s: &Grid,
    radial_grid_i: &Grid,
) -> Result<KernelMatrix> {
    let m = m.unsigned_abs() as usize;
    if m > numerics.m_max {
        return Err(Error::invalid("m", format!("|m| = {m} exceeds numerics.m_max")));
    }
    let model = TransverseModel::new(geometry, crystal, pump);
    Ok(TransverseComponents::new(&model, radial_grid_s, radial_grid_i, numerics, m).component(m))
}

/// Closed-form spectral amplitude at fixed internal emission angles.
#[derive(Clone, Debug)]
pub struct SpectralModel {
    pub crystal: CrystalConfig,
    pub pump: PumpConfig,
    pub omega_s0: f64,
    pub omega_i0: f64,
    pub cos_theta: f64,
    band: f64,
}

impl SpectralModel {
    pub fn new(
        geometry: &Geometry,
        crystal: &CrystalConfig,
        pump: &PumpConfig,
        numerics: &Numerics,
    ) -> Self {
        SpectralModel {
            crystal: crystal.clone(),
            pump: pump.clone(),
            omega_s0: geometry.omega_s0(),
            omega_i0: geometry.omega_i0(),
            cos_theta: geometry.theta_s_int.cos(),
            band: 2.0 * numerics.band_factor() / pump.tau_p,
        }
    }

    /// Half-width in `omega_s + omega_i - omega_p0` beyond which the pump
    /// envelope is dropped.
    pub fn band_halfwidth(&self) -> f64 {
        self.band
    }

    /// Entry given precomputed signal and idler wave numbers.
    fn amplitude_with(&self, ws: f64, wi: f64, ks: f64, ki: f64) -> Result<Complex64> {
        let sum = ws + wi;
        let kp = pump_wave_number(sum, &self.crystal)?;
        let delta = kp - self.cos_theta * (ks + ki);
        let pre = ws * wi / (ks * ki).sqrt();
        Ok(pump_spectrum(sum, &self.pump) * phase_matching(delta, self.crystal.length) * pre)
    }

    /// Group-velocity mismatch `dk_p/domega - cos(theta) dk_s/domega`, s/m.
    pub fn group_mismatch(&self) -> Result<f64> {
        let d = 1e-6 * self.omega_s0;
        let wp = self.omega_s0 + self.omega_i0;
        let dkp = (pump_wave_number(wp + d, &self.crystal)?
            - pump_wave_number(wp - d, &self.crystal)?)
            / (2.0 * d);
        let dks = (ordinary_wave_number(self.omega_s0 + d, &self.crystal)?
            - ordinary_wave_number(self.omega_s0 - d, &self.crystal)?)
            / (2.0 * d);
        Ok(dkp - self.cos_theta * dks)
    }

    pub fn spacing(&self, numerics: &Numerics) -> Result<f64> {
        let pump = 2.0 / self.pump.tau_p;
        let sinc = 2.0 * PI / (self.crystal.length * self.group_mismatch()?.abs());
        Ok(pump.min(sinc) / numerics.density())
    }

    /// Symmetric composite Gauss-Legendre grid around `omega_s0`.
    pub fn grid(&self, numerics: &Numerics) -> Result<Grid> {
        let h = self.spacing(numerics)?;
        let (lo, hi) = self.crystal.window;
        let w_max = 2.0 * PI * SPEED_OF_LIGHT / lo;
        let w_min = 2.0 * PI * SPEED_OF_LIGHT / hi;
        // Partner frequencies reach `band` beyond the mirror image of the
        // signal, so the signal range shrinks by that much.
        let limit = ((self.omega_s0 - w_min).min(w_max - self.omega_s0) - self.band) * 0.999;
        if !(limit > 0.0) {
            return Err(Error::Grid(format!(
                "pump band {:.3e} rad/s leaves no signal range inside the dispersion window",
                self.band
            )));
        }
        let marginal = |x: f64| marginal_intensity(self, self.omega_s0 + x, h / 2.0);
        let half = bracket_half_width(marginal, h, numerics.span_threshold, limit)?;
        centred_grid(GridKind::Spectral, self.omega_s0, half, h, numerics.gl_order)
    }
}

impl TwoPhotonAmplitude for SpectralModel {
    fn amplitude(&self, s: f64, i: f64) -> Result<Complex64> {
        let ks = ordinary_wave_number(s, &self.crystal)?;
        let ki = ordinary_wave_number(i, &self.crystal)?;
        self.amplitude_with(s, i, ks, ki)
    }

    fn support(&self, s: f64) -> (f64, f64) {
        let c = self.pump.omega_p0() - s;
        (c - self.band, c + self.band)
    }
}

/// Spectral amplitude
/// `(w_s w_i / sqrt(k_s k_i)) E_p(w_s + w_i) exp(-i dk L/2) sinc(dk L/2)`
/// on a pair of frequency grids.
pub fn build_spectral_kernel(
    geometry: &Geometry,
    crystal: &CrystalConfig,
    pump: &PumpConfig,
    numerics: &Numerics,
    spectral_grid_s: &Grid,
    spectral_grid_i: &Grid,
) -> Result<KernelMatrix> {
    let model = SpectralModel::new(geometry, crystal, pump, numerics);
    build_spectral_kernel_with(&model, spectral_grid_s, spectral_grid_i)
}

pub fn build_spectral_kernel_with(
    model: &SpectralModel,
    grid_s: &Grid,
    grid_i: &Grid,
) -> Result<KernelMatrix> {
    let ws = grid_s.points();
    let wi = grid_i.points();
    let ks = ws
        .iter()
        .map(|&w| ordinary_wave_number(w, &model.crystal))
        .collect::<Result<Vec<_>>>()?;
    let ki = wi
        .iter()
        .map(|&w| ordinary_wave_number(w, &model.crystal))
        .collect::<Result<Vec<_>>>()?;
    let wp0 = model.pump.omega_p0();
    let band = model.band;
    let k = KernelMatrix::try_from_band(
        KernelLabel::Spectral,
        grid_s,
        grid_i,
        |i| {
            let lo = wi.partition_point(|&y| (ws[i] + y) - wp0 < -band);
            let hi = wi.partition_point(|&y| (ws[i] + y) - wp0 <= band);
            lo..hi.max(lo)
        },
        |i, j| model.amplitude_with(ws[i], wi[j], ks[i], ki[j]),
    )?;
    let k_s0 = ordinary_wave_number(model.omega_s0, &model.crystal)?;
    let reference =
        model.omega_s0 * model.omega_i0 / k_s0 * pump_spectrum(wp0, &model.pump).re;
    let negligible = k.max_abs() < 1e-8 * reference;
    Ok(KernelMatrix { negligible, ..k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::solve_geometry;

    fn setup(w_p: f64, bandwidth: f64) -> (CrystalConfig, Geometry, PumpConfig) {
        let c = CrystalConfig::default_bbo();
        let g = solve_geometry(&c, 349e-9).unwrap();
        let p = PumpConfig::from_bandwidth(349e-9, w_p, bandwidth).unwrap();
        (c, g, p)
    }

    #[test]
    fn pump_spatial_peak_and_one_over_e_point() {
        let p = PumpConfig::new(349e-9, 1e-3, 1e-12).unwrap();
        let peak = pump_spatial_spectrum(0.0, &p).re;
        assert!((peak - 1e-3 / (2.0 * PI).sqrt()).abs() < 1e-18);
        assert!((peak - 3.989e-4).abs() < 1e-7);
        let e = pump_spatial_spectrum(2.0 / p.w_p, &p).re;
        assert!((e / peak - (-1.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn pump_spatial_power_is_unity() {
        let p = PumpConfig::new(349e-9, 0.7e-3, 1e-12).unwrap();
        let g = Grid::composite_gauss_legendre(GridKind::Radial, 0.0, 20.0 / p.w_p, 20, 8).unwrap();
        let vals: Vec<f64> = g
            .points()
            .iter()
            .map(|&q| 2.0 * PI * q * pump_spatial_spectrum(q, &p).norm_sqr())
            .collect();
        assert!((g.integrate(&vals) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pump_spectrum_peak_and_bandwidth() {
        let p = PumpConfig::from_bandwidth(349e-9, 1e-3, 0.2e-9).unwrap();
        let w0 = p.omega_p0();
        assert!((pump_spectrum(w0, &p).re - (p.tau_p / (2.0 * PI).sqrt()).sqrt()).abs() < 1e-20);
        assert!((p.bandwidth() - 0.2e-9).abs() < 1e-22);

        // Intensity FWHM measured in wavelength.
        let half = |sign: f64| {
            let (mut a, mut b) = (0.0, sign * 10.0 / p.tau_p);
            let peak = pump_spectrum(w0, &p).norm_sqr();
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if pump_spectrum(w0 + m, &p).norm_sqr() > 0.5 * peak {
                    a = m;
                } else {
                    b = m;
                }
            }
            w0 + 0.5 * (a + b)
        };
        let lam = |w: f64| 2.0 * PI * SPEED_OF_LIGHT / w;
        let fwhm = lam(half(-1.0)) - lam(half(1.0));
        assert!((fwhm / 0.2e-9 - 1.0).abs() < 1e-3, "{fwhm}");

        let p2 = PumpConfig::new(349e-9, 1e-3, 2.0 * p.tau_p).unwrap();
        assert!((p2.bandwidth() / p.bandwidth() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn sinc_and_phase_matching_are_finite() {
        assert_eq!(sinc(0.0), 1.0);
        assert!((sinc(PI)).abs() < 1e-15);
        let v = phase_matching(0.0, 8e-3);
        assert_eq!(v, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn pump_config_validation() {
        assert!(PumpConfig::new(349e-9, 0.0, 1e-12).is_err());
        assert!(PumpConfig::new(349e-9, 1e-3, -1.0).is_err());
        let err = PumpConfig::new(349e-9, f64::NAN, 1e-12).unwrap_err();
        assert!(err.to_string().contains("pump.w_p"));
    }

    #[test]
    fn transverse_component_is_symmetric_and_centred() {
        let (c, g, p) = setup(1e-3, 0.2e-9);
        let nm = Numerics::default();
        let model = TransverseModel::new(&g, &c, &p);
        let grid = model.radial_grid(&nm).unwrap();
        let comps = TransverseComponents::new(&model, &grid, &grid, &nm, 8);
        let t0 = comps.component(0);
        assert!(!t0.is_negligible());
        assert!(t0.transpose_asymmetry() < 1e-10);
        assert!(comps.component(7).transpose_asymmetry() < 1e-10);

        // Diagonal ridge of |T_0| peaks at the phase-matched ring.
        let k0 = g.k_perp_s0();
        let diag: Vec<f64> = (0..grid.len()).map(|i| t0.get(i, i).norm()).collect();
        let imax = (0..diag.len()).max_by(|&a, &b| diag[a].total_cmp(&diag[b])).unwrap();
        let cell = grid.max_spacing();
        assert!((grid.points()[imax] - k0).abs() <= cell, "{} vs {k0}", grid.points()[imax]);
    }

    #[test]
    fn grids_off_the_ring_are_flagged() {
        let (c, g, p) = setup(1e-3, 0.2e-9);
        let nm = Numerics::default();
        let model = TransverseModel::new(&g, &c, &p);
        let k0 = g.k_perp_s0();
        // |k_s - k_i| far beyond the pump spectrum.
        let rows = Grid::gauss_legendre(GridKind::Radial, 0.2 * k0, 0.3 * k0, 32).unwrap();
        let cols = Grid::gauss_legendre(GridKind::Radial, 0.7 * k0, 0.8 * k0, 32).unwrap();
        let comps = TransverseComponents::new(&model, &rows, &cols, &nm, 4);
        assert!(comps.is_negligible());
        assert!(comps.component(0).is_negligible());
    }

    #[test]
    fn spectral_kernel_symmetry_and_ridge() {
        let (c, g, p) = setup(1e-3, 0.5e-9);
        let nm = Numerics::default();
        let model = SpectralModel::new(&g, &c, &p, &nm);
        let grid = model.grid(&nm).unwrap();
        let k = build_spectral_kernel_with(&model, &grid, &grid).unwrap();
        assert!(k.is_finite());
        assert!(k.transpose_asymmetry() < 1e-10);
        // Along every significant row the largest entry sits near
        // omega_s + omega_i = omega_p0.
        let w = grid.points();
        let wp0 = p.omega_p0();
        let peak = k.max_abs();
        for i in (0..grid.len()).step_by(17) {
            let r = &k.rows()[i];
            if r.values.iter().map(|v| v.norm()).fold(0.0, f64::max) < 1e-2 * peak {
                continue;
            }
            let (jmax, _) = r
                .values
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
                .unwrap();
            let s = w[i] + w[r.start + jmax];
            assert!((s - wp0).abs() < 4.0 / p.tau_p, "row {i} of {}: {}", grid.len(), (s - wp0) * p.tau_p);
        }
    }

    #[test]
    fn spectral_grid_outside_window_is_domain_error() {
        let (c, g, p) = setup(1e-3, 0.5e-9);
        let nm = Numerics::default();
        let w0 = g.omega_s0();
        let wide = Grid::uniform(GridKind::Spectral, 0.1 * w0, 1.9 * w0, 16).unwrap();
        let err = build_spectral_kernel(&g, &c, &p, &nm, &wide, &wide).unwrap_err();
        assert!(matches!(err, Error::Domain { .. }));
    }

    #[test]
    fn bracket_finds_gaussian_edge() {
        let half = bracket_half_width(|x: f64| Ok((-x * x).exp()), 0.01, 1e-3, 1e9).unwrap();
        let exact = (1e3f64).ln().sqrt();
        assert!((half - exact).abs() < 0.02, "{half}");
        let capped = bracket_half_width(|x: f64| Ok((-x * x).exp()), 0.01, 1e-3, 1.0).unwrap();
        assert_eq!(capped, 1.0);
    }
}
