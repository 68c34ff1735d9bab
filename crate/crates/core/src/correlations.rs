//! Intensity profiles, auto- and cross-correlation functions, their widths
//! and the width-ratio mode count.

use faer::{Mat, Side};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridKind};
use crate::kernels::{KernelMatrix, TransverseModel, TwoPhotonAmplitude};

/// Integrated intensities below this are treated as no signal.
pub const SIGNAL_FLOOR: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    Radial,
    Azimuthal,
    Spectral,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorrelationKind {
    AutoAmplitude,
    CrossIntensity,
}

/// Full width at half maximum of `y` around its largest sample, with linear
/// interpolation between the samples bracketing each crossing.
pub fn fwhm(x: &[f64], y: &[f64]) -> Result<f64> {
    let (l, r) = half_max_crossings(x, y, Interpolation::Linear)?;
    Ok(r - l)
}

/// As [`fwhm`] but locating the crossings on a local cubic through four
/// neighbouring samples.
pub fn fwhm_cubic(x: &[f64], y: &[f64]) -> Result<f64> {
    let (l, r) = half_max_crossings(x, y, Interpolation::Cubic)?;
    Ok(r - l)
}

#[derive(Clone, Copy)]
enum Interpolation {
    Linear,
    Cubic,
}

fn argmax(y: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in y.iter().enumerate() {
        if *v > y[best] {
            best = i;
        }
    }
    best
}

fn half_max_crossings(x: &[f64], y: &[f64], how: Interpolation) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::Empty("section samples"));
    }
    let p = argmax(y);
    let half = 0.5 * y[p];
    if !(half > 0.0) {
        return Err(Error::NoSignal(y[p]));
    }
    let mut j = p;
    while j > 0 && y[j] > half {
        j -= 1;
    }
    if y[j] > half {
        return Err(Error::GridTooNarrow("lower"));
    }
    let left = crossing(x, y, j, half, how);
    let mut k = p;
    while k + 1 < y.len() && y[k] > half {
        k += 1;
    }
    if y[k] > half {
        return Err(Error::GridTooNarrow("upper"));
    }
    let right = crossing(x, y, k - 1, half, how);
    Ok((left, right))
}

/// Crossing of `half` between samples `j` and `j + 1`.
fn crossing(x: &[f64], y: &[f64], j: usize, half: f64, how: Interpolation) -> f64 {
    let lin = x[j] + (half - y[j]) * (x[j + 1] - x[j]) / (y[j + 1] - y[j]);
    match how {
        Interpolation::Linear => lin,
        Interpolation::Cubic => {
            if j == 0 || j + 2 >= x.len() {
                return lin;
            }
            let xs = [x[j - 1], x[j], x[j + 1], x[j + 2]];
            let ys = [y[j - 1], y[j], y[j + 1], y[j + 2]];
            let f = |t: f64| {
                let mut acc = 0.0;
                for a in 0..4 {
                    let mut l = 1.0;
                    for b in 0..4 {
                        if a != b {
                            l *= (t - xs[b]) / (xs[a] - xs[b]);
                        }
                    }
                    acc += ys[a] * l;
                }
                acc - half
            };
            let (mut a, mut b) = (x[j], x[j + 1]);
            let fa = f(a);
            if fa * f(b) > 0.0 {
                return lin;
            }
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                if f(m) * fa > 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            0.5 * (a + b)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Profile1D {
    pub axis: Grid,
    pub values: Vec<f64>,
    pub fwhm: f64,
    pub peak_location: f64,
}

impl Profile1D {
    pub fn new(axis: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != axis.len() {
            return Err(Error::Grid("profile length differs from its axis".into()));
        }
        let fwhm = fwhm(axis.points(), &values)?;
        let peak_location = axis.points()[argmax(&values)];
        Ok(Profile1D { axis, values, fwhm, peak_location })
    }

    pub fn integral(&self) -> f64 {
        self.axis.integrate(&self.values)
    }

    /// Rescales so that `int values dx / reference = 1`.
    pub fn normalized(&self, reference: f64) -> Result<Self> {
        let total = self.integral();
        if !(total > SIGNAL_FLOOR) {
            return Err(Error::NoSignal(total));
        }
        let s = reference / total;
        Ok(Profile1D { values: self.values.iter().map(|v| v * s).collect(), ..self.clone() })
    }

    pub fn fwhm_cubic(&self) -> Result<f64> {
        fwhm_cubic(self.axis.points(), &self.values)
    }
}

/// Signal intensity `n(x_i) = sum_j w_j |K_ij|^2` on the kernel's row grid.
pub fn intensity_profile(kernel: &KernelMatrix) -> Result<Profile1D> {
    let wc = kernel.col_grid().weights();
    let values: Vec<f64> = kernel
        .rows()
        .iter()
        .map(|r| r.values.iter().enumerate().map(|(k, v)| wc[r.start + k] * v.norm_sqr()).sum())
        .collect();
    let total = kernel.row_grid().integrate(&values);
    if !(total > SIGNAL_FLOOR) {
        return Err(Error::NoSignal(total));
    }
    Profile1D::new(kernel.row_grid().clone(), values)
}

/// Radial signal intensity from the amplitude section at `phi_s = 0`,
/// `phi_i = pi` (radial measure already in the kernel).
pub fn intensity_radial(section: &KernelMatrix) -> Result<Profile1D> {
    intensity_profile(section)
}

/// Signal intensity spectrum from the spectral kernel.
pub fn intensity_spectrum(kernel: &KernelMatrix) -> Result<Profile1D> {
    intensity_profile(kernel)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Correlation2D {
    pub row_axis: Grid,
    pub col_axis: Grid,
    /// Row-major.
    pub values: Vec<Complex64>,
    pub kind: CorrelationKind,
    pub variable: Variable,
}

impl Correlation2D {
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.col_axis.len() + j]
    }

    /// Largest `|A_ij - conj(A_ji)|` relative to the largest entry.
    pub fn hermitian_error(&self) -> f64 {
        let n = self.row_axis.len();
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
                scale = scale.max(self.get(i, j).norm());
            }
        }
        if scale > 0.0 {
            worst / scale
        } else {
            0.0
        }
    }

    /// Smallest and largest eigenvalue of the (Hermitian) matrix.
    pub fn eigenvalue_range(&self) -> Result<(f64, f64)> {
        let n = self.row_axis.len();
        let m = Mat::<Complex64>::from_fn(n, n, |i, j| self.get(i, j));
        let ev = m
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|_| Error::SvdNoConvergence { rows: n, cols: n, norm: 0.0, max_abs: 0.0 })?;
        Ok((ev[0], ev[n - 1]))
    }

    /// Modulus along row `x` with the column fixed at the node nearest to
    /// `center`.
    pub fn section(&self, center: f64) -> Vec<f64> {
        let j = self.col_axis.nearest(center);
        (0..self.row_axis.len()).map(|i| self.get(i, j).norm()).collect()
    }
}

/// `A(x, x') = sum_j w_j conj(K(x, y_j)) K(x', y_j)`.
pub fn auto_correlation(kernel: &KernelMatrix, variable: Variable) -> Correlation2D {
    let n = kernel.row_grid().len();
    let wc = kernel.col_grid().weights();
    let rows = kernel.rows();
    let values: Vec<Complex64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let ri = &rows[i];
            (0..n).map(move |k| {
                let rk = &rows[k];
                let lo = ri.start.max(rk.start);
                let hi = (ri.start + ri.values.len()).min(rk.start + rk.values.len());
                let mut acc = Complex64::new(0.0, 0.0);
                for j in lo..hi.max(lo) {
                    acc += ri.values[j - ri.start].conj() * rk.values[j - rk.start] * wc[j];
                }
                acc
            })
        })
        .collect();
    Correlation2D {
        row_axis: kernel.row_grid().clone(),
        col_axis: kernel.row_grid().clone(),
        values,
        kind: CorrelationKind::AutoAmplitude,
        variable,
    }
}

/// `C(x, y) = |K(x, y)|^2`.
pub fn cross_correlation(kernel: &KernelMatrix, variable: Variable) -> Correlation2D {
    let (n, m) = kernel.shape();
    let mut values = vec![Complex64::new(0.0, 0.0); n * m];
    for (i, r) in kernel.rows().iter().enumerate() {
        for (k, v) in r.values.iter().enumerate() {
            values[i * m + r.start + k] = Complex64::new(v.norm_sqr(), 0.0);
        }
    }
    Correlation2D {
        row_axis: kernel.row_grid().clone(),
        col_axis: kernel.col_grid().clone(),
        values,
        kind: CorrelationKind::CrossIntensity,
        variable,
    }
}

/// FWHM of the modulus of a correlation section through `center`.
pub fn section_width(corr: &Correlation2D, center: f64) -> Result<f64> {
    fwhm(corr.row_axis.points(), &corr.section(center))
}

/// `K^Delta = Delta n / Delta A`.
pub fn mode_ratio_kdelta(intensity: &Profile1D, auto_width: f64) -> Result<f64> {
    kdelta(intensity.fwhm, auto_width)
}

pub fn kdelta(intensity_width: f64, auto_width: f64) -> Result<f64> {
    if !(auto_width > 0.0 && auto_width.is_finite()) {
        return Err(Error::invalid("auto_width", "must be positive"));
    }
    if !(intensity_width > 0.0 && intensity_width.is_finite()) {
        return Err(Error::invalid("intensity_width", "must be positive"));
    }
    Ok(intensity_width / auto_width)
}

/// Evaluates a non-negative function on a coarse set of nodes, locates its
/// half-maximum crossings, then re-samples uniformly around them.
pub fn refined_section<F>(f: F, coarse: &[f64], points: usize, kind: GridKind) -> Result<Profile1D>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let coarse_vals = coarse.par_iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    let (l, r) = half_max_crossings(coarse, &coarse_vals, Interpolation::Linear)?;
    let lo0 = coarse[0];
    let hi0 = coarse[coarse.len() - 1];
    let mut pad = 0.5 * (r - l);
    for _ in 0..4 {
        let a = (l - pad).max(lo0);
        let b = (r + pad).min(hi0);
        let axis = Grid::uniform(kind, a, b, points)?;
        let vals = axis.points().par_iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
        match Profile1D::new(axis, vals) {
            Err(Error::GridTooNarrow(_)) if a > lo0 || b < hi0 => pad *= 2.0,
            other => return other,
        }
    }
    Err(Error::GridTooNarrow("both"))
}

/// Widths of the intensity, auto- and cross-correlation sections of an
/// amplitude, measured on fine uniform axes.
#[derive(Clone, Debug, PartialEq)]
pub struct SectionWidths {
    /// Signal intensity profile.
    pub intensity: Profile1D,
    /// `|A(x, x_peak)|`, `x_peak` the intensity peak.
    pub auto_abs: Profile1D,
    /// `|A(x, x_peak)|^2`.
    pub auto_sq: Profile1D,
    /// `|K(x, y_ref)|^2`.
    pub cross: Profile1D,
}

/// Sections of `amp`: integrals over the idler run on `idler`, sections are
/// refined from the `coarse` signal nodes; `cross_ref` fixes the idler
/// coordinate of the cross-correlation section.
pub fn section_widths<A: TwoPhotonAmplitude + ?Sized>(
    amp: &A,
    coarse: &[f64],
    idler: &Grid,
    cross_ref: f64,
    points: usize,
    kind: GridKind,
) -> Result<SectionWidths> {
    let y = idler.points();
    let w = idler.weights();
    let row = |x: f64| -> Result<(usize, Vec<Complex64>)> {
        let (a, b) = amp.support(x);
        let r = idler.index_range(a, b);
        let vals = r.clone().map(|j| amp.amplitude(x, y[j])).collect::<Result<Vec<_>>>()?;
        Ok((r.start, vals))
    };
    let intensity = refined_section(
        |x| {
            let (s, v) = row(x)?;
            Ok(v.iter().enumerate().map(|(k, a)| w[s + k] * a.norm_sqr()).sum())
        },
        coarse,
        points,
        kind,
    )?;
    let total = intensity.integral();
    if !(total > SIGNAL_FLOOR) {
        return Err(Error::NoSignal(total));
    }
    let (ref_start, ref_row) = row(intensity.peak_location)?;
    let auto = |x: f64| -> Result<f64> {
        let (s, v) = row(x)?;
        let lo = s.max(ref_start);
        let hi = (s + v.len()).min(ref_start + ref_row.len());
        let mut acc = Complex64::new(0.0, 0.0);
        for j in lo..hi.max(lo) {
            acc += v[j - s].conj() * ref_row[j - ref_start] * w[j];
        }
        Ok(acc.norm())
    };
    let auto_abs = refined_section(auto, coarse, points, kind)?;
    let auto_sq = refined_section(|x| Ok(auto(x)?.powi(2)), coarse, points, kind)?;
    let cross = refined_section(|x| Ok(amp.amplitude(x, cross_ref)?.norm_sqr()), coarse, points, kind)?;
    Ok(SectionWidths { intensity, auto_abs, auto_sq, cross })
}

/// Azimuthal correlations at the central radial wave numbers, built from
/// `g(dphi) = k_perp0 T(k_perp0, k_perp0, dphi)`.
#[derive(Clone, Debug)]
pub struct AzimuthalCorrelations {
    model: TransverseModel,
    step: f64,
    window: f64,
}

impl AzimuthalCorrelations {
    /// `points` lattice nodes span the window where the pump envelope exceeds
    /// `exp(-band_exponent)`.
    pub fn new(model: &TransverseModel, band_exponent: f64, points: usize) -> Self {
        let window = (2.0 * band_exponent.sqrt() / (model.pump.w_p * model.k_perp0)).min(std::f64::consts::PI);
        let step = 2.0 * window / (points.max(3) - 1) as f64;
        AzimuthalCorrelations { model: model.clone(), step, window }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    fn lattice_half(&self) -> usize {
        (self.window / self.step).round() as usize
    }

    pub fn amplitude(&self, dphi: f64) -> Complex64 {
        let k0 = self.model.k_perp0;
        k0 * self.model.amplitude(k0, k0, dphi)
    }

    /// `A(delta) = int conj(g(u)) g(u + delta) du`, trapezoid on the lattice.
    pub fn auto(&self, delta: f64) -> Complex64 {
        let j = self.lattice_half() as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        for k in -j..=j {
            let u = self.step * k as f64;
            acc += self.amplitude(u).conj() * self.amplitude(u + delta);
        }
        acc * self.step
    }

    /// `A(phi_s, phi_s')` with the idler azimuth integrated on a lattice
    /// covering every row.
    pub fn auto_matrix(&self, phis: &Grid) -> Correlation2D {
        let p = phis.points();
        let lo = p[0] - self.window;
        let hi = p[p.len() - 1] + self.window;
        let n_u = ((hi - lo) / self.step).ceil() as usize;
        let us: Vec<f64> = (0..=n_u).map(|k| lo + self.step * k as f64).collect();
        let table: Vec<Vec<Complex64>> =
            p.par_iter().map(|&phi| us.iter().map(|&u| self.amplitude(phi - u)).collect()).collect();
        let n = p.len();
        let values = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let table = &table;
                (0..n).map(move |k| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (a, b) in table[i].iter().zip(&table[k]) {
                        acc += a.conj() * b;
                    }
                    acc * self.step
                })
            })
            .collect();
        Correlation2D {
            row_axis: phis.clone(),
            col_axis: phis.clone(),
            values,
            kind: CorrelationKind::AutoAmplitude,
            variable: Variable::Azimuthal,
        }
    }

    /// `C(phi_s, phi_i) = |g(phi_s - phi_i - pi)|^2`, angle wrapped to
    /// `(-pi, pi]`.
    pub fn cross(&self, phi_s: f64, phi_i: f64) -> f64 {
        self.amplitude(wrap(phi_s - phi_i - std::f64::consts::PI)).norm_sqr()
    }

    pub fn cross_matrix(&self, phi_s: &Grid, phi_i: &Grid) -> Correlation2D {
        let values = phi_s
            .points()
            .iter()
            .flat_map(|&a| phi_i.points().iter().map(move |&b| (a, b)))
            .map(|(a, b)| Complex64::new(self.cross(a, b), 0.0))
            .collect();
        Correlation2D {
            row_axis: phi_s.clone(),
            col_axis: phi_i.clone(),
            values,
            kind: CorrelationKind::CrossIntensity,
            variable: Variable::Azimuthal,
        }
    }

    /// `(|A|, |A|^2, C)` profiles over the angle difference.
    pub fn sections(&self) -> Result<(Profile1D, Profile1D, Profile1D)> {
        let j = self.lattice_half();
        let axis = Grid::uniform(
            GridKind::Azimuthal,
            -self.step * j as f64,
            self.step * j as f64,
            2 * j + 1,
        )?;
        let a: Vec<f64> = axis.points().par_iter().map(|&d| self.auto(d).norm()).collect();
        let a2: Vec<f64> = a.iter().map(|v| v * v).collect();
        let c: Vec<f64> = axis.points().iter().map(|&d| self.amplitude(d).norm_sqr()).collect();
        Ok((
            Profile1D::new(axis.clone(), a)?,
            Profile1D::new(axis.clone(), a2)?,
            Profile1D::new(axis, c)?,
        ))
    }
}

fn wrap(x: f64) -> f64 {
    let t = 2.0 * std::f64::consts::PI;
    let y = (x + std::f64::consts::PI).rem_euclid(t) - std::f64::consts::PI;
    if y <= -std::f64::consts::PI {
        y + t
    } else {
        y
    }
}
