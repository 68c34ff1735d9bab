//! Schmidt decomposition of discretized two-photon amplitudes and the mode
//! numbers built from it.

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kernels::{KernelLabel, KernelMatrix};

/// Coefficients with `lambda^2` below this are ignored in mode numbers.
pub const COEFFICIENT_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct SchmidtDecomposition {
    pub label: KernelLabel,
    /// `lambda_q`, descending, `sum lambda_q^2 = 1`.
    pub coefficients: Vec<f64>,
    /// Signal mode functions sampled on `signal_grid`, orthonormal under its
    /// weights.
    pub signal_modes: Vec<Vec<Complex64>>,
    pub idler_modes: Vec<Vec<Complex64>>,
    pub signal_grid: Grid,
    pub idler_grid: Grid,
    pub schmidt_number: f64,
    /// Discretized L2 norm of the kernel before normalization.
    pub norm: f64,
}

impl SchmidtDecomposition {
    /// `sum_q lambda_q f_q(x_i) g_q(y_j)` over the first `rank` stored modes.
    pub fn reconstruct(&self, rank: usize) -> Vec<Complex64> {
        let n = self.signal_grid.len();
        let m = self.idler_grid.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n * m];
        for q in 0..rank.min(self.signal_modes.len()) {
            let l = self.coefficients[q];
            let f = &self.signal_modes[q];
            let g = &self.idler_modes[q];
            for i in 0..n {
                let a = f[i] * l;
                for j in 0..m {
                    out[i * m + j] += a * g[j];
                }
            }
        }
        out
    }

    /// `sum_q lambda_q^4`.
    pub fn purity(&self) -> f64 {
        1.0 / self.schmidt_number
    }
}

fn check_kernel(kernel: &KernelMatrix) -> Result<f64> {
    if !kernel.is_finite() {
        return Err(Error::invalid("kernel", "contains non-finite entries"));
    }
    let n2 = kernel.weighted_norm_sq();
    if !(n2 > 0.0) {
        return Err(Error::ZeroNorm);
    }
    Ok(n2)
}

/// Weighted SVD of `W_s^{1/2} K W_i^{1/2}` keeping every mode.
pub fn decompose(kernel: &KernelMatrix) -> Result<SchmidtDecomposition> {
    decompose_keeping(kernel, usize::MAX)
}

/// As [`decompose`] but stores only the first `keep` mode pairs; all
/// coefficients are kept.
pub fn decompose_keeping(kernel: &KernelMatrix, keep: usize) -> Result<SchmidtDecomposition> {
    let norm_sq = check_kernel(kernel)?;
    let (n, m) = kernel.shape();
    let dense = kernel.weighted_dense();
    let mat = Mat::<Complex64>::from_fn(n, m, |i, j| dense[i * m + j]);
    let svd = mat.svd().map_err(|_| Error::SvdNoConvergence {
        rows: n,
        cols: m,
        norm: norm_sq.sqrt(),
        max_abs: kernel.max_abs(),
    })?;
    let s: Vec<f64> = svd.S().column_vector().iter().map(|v| v.re).collect();
    let total: f64 = s.iter().map(|v| v * v).sum();
    if !(total > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let coefficients: Vec<f64> = s.iter().map(|v| v / total.sqrt()).collect();
    let schmidt_number = schmidt_number(&coefficients)?;

    let u = svd.U();
    let v = svd.V();
    let ws = kernel.row_grid().weights();
    let wi = kernel.col_grid().weights();
    let count = keep.min(s.len());
    let mut signal_modes = Vec::with_capacity(count);
    let mut idler_modes = Vec::with_capacity(count);
    for q in 0..count {
        let mut f: Vec<Complex64> = (0..n).map(|i| u[(i, q)] / ws[i].sqrt()).collect();
        // K = U S V^H, so the idler partner is conj(V).
        let mut g: Vec<Complex64> = (0..m).map(|j| v[(j, q)].conj() / wi[j].sqrt()).collect();
        let phase = fix_phase(&mut f);
        for x in g.iter_mut() {
            *x *= phase.conj();
        }
        signal_modes.push(f);
        idler_modes.push(g);
    }
    Ok(SchmidtDecomposition {
        label: kernel.label().clone(),
        coefficients,
        signal_modes,
        idler_modes,
        signal_grid: kernel.row_grid().clone(),
        idler_grid: kernel.col_grid().clone(),
        schmidt_number,
        norm: norm_sq.sqrt(),
    })
}

/// Rotates `f` so its largest-magnitude sample is real positive; returns
/// the applied unit phase factor.
fn fix_phase(f: &mut [Complex64]) -> Complex64 {
    let mut best = 0;
    for (i, v) in f.iter().enumerate() {
        if v.norm() > f[best].norm() {
            best = i;
        }
    }
    let r = f[best].norm();
    if r == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let phase = f[best].conj() / r;
    for x in f.iter_mut() {
        *x *= phase;
    }
    phase
}

/// `K = 1 / sum lambda_q^4` for coefficients with `sum lambda_q^2 = 1`.
pub fn schmidt_number(coefficients: &[f64]) -> Result<f64> {
    if coefficients.is_empty() {
        return Err(Error::Empty("Schmidt coefficients"));
    }
    let mut sq: Vec<f64> = coefficients.iter().map(|l| l * l).collect();
    let total: f64 = sq.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::Unnormalized(total));
    }
    sq.sort_by(f64::total_cmp);
    let p: f64 = sq.iter().filter(|&&v| v >= COEFFICIENT_FLOOR).map(|v| v * v).sum();
    Ok(1.0 / p)
}

/// Purity `sum lambda^4 = ||M M^H||_F^2 / ||M||_F^4` of the weighted kernel,
/// without a decomposition. Exploits the row bands.
pub fn kernel_purity(kernel: &KernelMatrix) -> Result<f64> {
    let norm_sq = check_kernel(kernel)?;
    let wr = kernel.row_grid().weights();
    let wc = kernel.col_grid().weights();
    let rows: Vec<(usize, Vec<Complex64>)> = kernel
        .rows()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let si = wr[i].sqrt();
            let v = r
                .values
                .iter()
                .enumerate()
                .map(|(k, x)| x * (si * wc[r.start + k].sqrt()))
                .collect();
            (r.start, v)
        })
        .collect();
    let per_row: Vec<f64> = (0..rows.len())
        .into_par_iter()
        .map(|i| {
            let (si, ref vi) = rows[i];
            let ei = si + vi.len();
            let mut acc = 0.0;
            for (k, (sk, vk)) in rows.iter().enumerate().skip(i) {
                let ek = sk + vk.len();
                let lo = si.max(*sk);
                let hi = ei.min(ek);
                if lo >= hi {
                    continue;
                }
                let mut g = Complex64::new(0.0, 0.0);
                for j in lo..hi {
                    g += vi[j - si] * vk[j - sk].conj();
                }
                let c = if k == i { 1.0 } else { 2.0 };
                acc += c * g.norm_sqr();
            }
            acc
        })
        .collect();
    let gram: f64 = per_row.iter().sum();
    Ok(gram / (norm_sq * norm_sq))
}

/// `K` through the purity route; agrees with the SVD route to rounding.
pub fn kernel_schmidt_number(kernel: &KernelMatrix) -> Result<f64> {
    Ok(1.0 / kernel_purity(kernel)?)
}

/// Mode spectrum of one azimuthal order.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderSpectrum {
    pub m: usize,
    /// Discretized squared L2 norm of the order-`m` kernel.
    pub norm_sq: f64,
    /// `sum_l lambda_{ml}^4` of the normalized order-`m` spectrum.
    pub purity: f64,
}

impl OrderSpectrum {
    pub fn from_decomposition(m: usize, d: &SchmidtDecomposition) -> Self {
        OrderSpectrum { m, norm_sq: d.norm * d.norm, purity: d.purity() }
    }

    pub fn from_kernel(m: usize, kernel: &KernelMatrix) -> Result<Self> {
        Ok(OrderSpectrum { m, norm_sq: kernel.weighted_norm_sq(), purity: kernel_purity(kernel)? })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransverseModeSummary {
    pub orders: Vec<OrderSpectrum>,
    /// Overall number of transverse modes.
    pub k_kphi: f64,
    /// Radial mode number from the `m = 0` spectrum.
    pub k_k: f64,
    /// Azimuthal mode number `K_kphi / K_k`; the factorization is approximate.
    pub k_phi: f64,
}

/// Joins per-order spectra into the transverse mode numbers.
///
/// Orders `m` and `-m` contribute equally, so only `m >= 0` is supplied.
/// Orders need not be contiguous: norms and purities are interpolated
/// linearly between the supplied ones, and orders past the last one are
/// taken as empty.
pub fn transverse_summary(orders: &[OrderSpectrum]) -> Result<TransverseModeSummary> {
    if orders.is_empty() {
        return Err(Error::Empty("azimuthal orders"));
    }
    let mut sorted = orders.to_vec();
    sorted.sort_by_key(|o| o.m);
    if sorted[0].m != 0 {
        return Err(Error::invalid("orders", "the m = 0 order is required"));
    }
    if sorted.windows(2).any(|w| w[0].m == w[1].m) {
        return Err(Error::invalid("orders", "duplicate azimuthal order"));
    }
    let weight = |m: usize| if m == 0 { 1.0 } else { 2.0 };

    // (norm, norm^2 * purity) for every integer order.
    let mut norms = Vec::new();
    let mut sq_pur = Vec::new();
    for w in sorted.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let span = (b.m - a.m) as f64;
        for m in a.m..b.m {
            let t = (m - a.m) as f64 / span;
            let n = a.norm_sq + t * (b.norm_sq - a.norm_sq);
            let p = a.purity + t * (b.purity - a.purity);
            norms.push(weight(m) * n);
            sq_pur.push(weight(m) * n * n * p);
        }
    }
    let last = sorted.last().expect("non-empty");
    norms.push(weight(last.m) * last.norm_sq);
    sq_pur.push(weight(last.m) * last.norm_sq * last.norm_sq * last.purity);

    let total: f64 = norms.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let joint: f64 = sq_pur.iter().sum::<f64>() / (total * total);
    let k_kphi = 1.0 / joint;
    let k_k = 1.0 / sorted[0].purity;
    Ok(TransverseModeSummary { orders: sorted, k_kphi, k_k, k_phi: k_kphi / k_k })
}

/// Number of nodes of a complex mode function: interior minima of `|f|`
/// inside its support (`|f|` above 5% of the peak) that fall below half of
/// both neighbouring maxima.
pub fn count_nodes(mode: &[Complex64]) -> usize {
    let a: Vec<f64> = mode.iter().map(|v| v.norm()).collect();
    let peak = a.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return 0;
    }
    let lo = a.iter().position(|&v| v > 0.05 * peak).unwrap_or(0);
    let hi = a.iter().rposition(|&v| v > 0.05 * peak).unwrap_or(0);
    let mut nodes = 0;
    let mut top = a[lo];
    let mut valley: Option<f64> = None;
    for &v in &a[lo..=hi] {
        match valley {
            None => {
                if v > top {
                    top = v;
                } else if v < 0.5 * top {
                    valley = Some(v);
                }
            }
            Some(vmin) => {
                if v < vmin {
                    valley = Some(v);
                } else if v > 2.0 * vmin {
                    nodes += 1;
                    valley = None;
                    top = v;
                }
            }
        }
    }
    nodes
}
