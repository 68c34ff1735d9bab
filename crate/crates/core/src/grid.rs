//! One-dimensional quadrature grids.
//!
//! Every continuous variable of the two-photon amplitudes (radial wave
//! number, azimuthal angle, angular frequency) is discretized on a [`Grid`]:
//! an ordered set of nodes together with quadrature weights, so that
//! `sum_j w_j f(x_j)` approximates the integral of `f` over the covered
//! interval.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    /// Radial transverse wave number, rad/m.
    Radial,
    /// Azimuthal angle, rad.
    Azimuthal,
    /// Angular frequency, rad/s.
    Spectral,
}

impl GridKind {
    pub fn unit(self) -> &'static str {
        match self {
            GridKind::Radial => "rad/m",
            GridKind::Azimuthal => "rad",
            GridKind::Spectral => "rad/s",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GridKind::Radial => "radial",
            GridKind::Azimuthal => "azimuthal",
            GridKind::Spectral => "spectral",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    weights: Vec<f64>,
    kind: GridKind,
    lower: f64,
    upper: f64,
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1],
/// ascending.
pub fn gauss_legendre_reference(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

impl Grid {
    /// Builds a grid from explicit nodes and weights, checking the invariants.
    pub fn from_parts(
        kind: GridKind,
        lower: f64,
        upper: f64,
        points: Vec<f64>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Grid("no points".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::Grid(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if !(lower.is_finite() && upper.is_finite() && upper > lower) {
            return Err(Error::Grid(format!("bad interval [{lower}, {upper}]")));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Grid("points not strictly increasing".into()));
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::Grid("non-positive weight".into()));
        }
        let total: f64 = weights.iter().sum();
        let span = upper - lower;
        if ((total - span) / span).abs() > 1e-10 {
            return Err(Error::Grid(format!(
                "weights sum to {total:e}, interval length is {span:e}"
            )));
        }
        Ok(Grid { points, weights, kind, lower, upper })
    }

    pub fn gauss_legendre(kind: GridKind, lower: f64, upper: f64, n: usize) -> Result<Self> {
        Self::composite_gauss_legendre(kind, lower, upper, 1, n)
    }

    /// `panels` equal sub-intervals, each carrying an `order`-point
    /// Gauss-Legendre rule. Keeps node spacing nearly uniform for large
    /// point counts.
    pub fn composite_gauss_legendre(
        kind: GridKind,
        lower: f64,
        upper: f64,
        panels: usize,
        order: usize,
    ) -> Result<Self> {
        if panels == 0 || order == 0 {
            return Err(Error::Grid("need at least one panel and one node".into()));
        }
        let (xr, wr) = gauss_legendre_reference(order);
        let width = (upper - lower) / panels as f64;
        let mut points = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let a = lower + width * p as f64;
            let mid = a + 0.5 * width;
            for (x, w) in xr.iter().zip(&wr) {
                points.push(mid + 0.5 * width * x);
                weights.push(0.5 * width * w);
            }
        }
        Self::from_parts(kind, lower, upper, points, weights)
    }

    /// Trapezoid rule on `n >= 2` equally spaced nodes including both ends.
    pub fn uniform(kind: GridKind, lower: f64, upper: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Grid("uniform grid needs at least two points".into()));
        }
        let h = (upper - lower) / (n - 1) as f64;
        let points = (0..n).map(|j| lower + h * j as f64).collect();
        let mut weights = vec![h; n];
        weights[0] = 0.5 * h;
        weights[n - 1] = 0.5 * h;
        Self::from_parts(kind, lower, upper, points, weights)
    }

    /// Periodic trapezoid rule on `[start, start + 2 pi)` with `n` nodes.
    pub fn periodic(kind: GridKind, start: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Grid("periodic grid needs at least one point".into()));
        }
        let h = 2.0 * PI / n as f64;
        let points = (0..n).map(|j| start + h * j as f64).collect();
        Self::from_parts(kind, start, start + 2.0 * PI, points, vec![h; n])
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn span(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Index range of nodes inside the closed interval `[a, b]`.
    pub fn index_range(&self, a: f64, b: f64) -> std::ops::Range<usize> {
        let lo = self.points.partition_point(|&x| x < a);
        let hi = self.points.partition_point(|&x| x <= b);
        lo..hi.max(lo)
    }

    /// Index of the node closest to `x`.
    pub fn nearest(&self, x: f64) -> usize {
        let i = self.points.partition_point(|&p| p < x);
        if i == 0 {
            0
        } else if i == self.points.len() {
            i - 1
        } else if (self.points[i] - x).abs() < (x - self.points[i - 1]).abs() {
            i
        } else {
            i - 1
        }
    }

    /// Largest gap between neighbouring nodes.
    pub fn max_spacing(&self) -> f64 {
        self.points.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_is_exact_for_polynomials_up_to_degree_2n_minus_1() {
        for n in [1usize, 2, 5, 8, 16] {
            let g = Grid::gauss_legendre(GridKind::Radial, -1.0, 2.0, n).unwrap();
            for deg in 0..(2 * n) {
                let vals: Vec<f64> = g.points().iter().map(|x| x.powi(deg as i32)).collect();
                let exact = (2f64.powi(deg as i32 + 1) - (-1f64).powi(deg as i32 + 1))
                    / (deg as f64 + 1.0);
                let got = g.integrate(&vals);
                assert!(
                    (got - exact).abs() <= 1e-12 * exact.abs().max(1.0),
                    "n={n} deg={deg}: {got} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn reference_nodes_match_closed_form_for_three_points() {
        let (x, w) = gauss_legendre_reference(3);
        let r = (3.0f64 / 5.0).sqrt();
        assert!((x[0] + r).abs() < 1e-15 && x[1].abs() < 1e-15 && (x[2] - r).abs() < 1e-15);
        assert!((w[0] - 5.0 / 9.0).abs() < 1e-15 && (w[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn weights_cover_interval() {
        let g = Grid::composite_gauss_legendre(GridKind::Spectral, 3.0, 11.0, 7, 8).unwrap();
        assert_eq!(g.len(), 56);
        let s: f64 = g.weights().iter().sum();
        assert!((s - 8.0).abs() < 1e-12);
        let u = Grid::uniform(GridKind::Azimuthal, -1.0, 1.0, 11).unwrap();
        assert!((u.weights().iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let p = Grid::periodic(GridKind::Azimuthal, 0.0, 64).unwrap();
        assert!((p.weights().iter().sum::<f64>() - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn rejects_broken_grids() {
        assert!(Grid::from_parts(GridKind::Radial, 0.0, 1.0, vec![0.5, 0.5], vec![0.5, 0.5]).is_err());
        assert!(Grid::from_parts(GridKind::Radial, 0.0, 1.0, vec![0.2, 0.7], vec![1.0, -0.0]).is_err());
        assert!(Grid::from_parts(GridKind::Radial, 0.0, 1.0, vec![0.2, 0.7], vec![0.3, 0.3]).is_err());
        assert!(Grid::uniform(GridKind::Radial, 0.0, 1.0, 1).is_err());
    }

    #[test]
    fn index_range_and_nearest() {
        let g = Grid::uniform(GridKind::Radial, 0.0, 10.0, 11).unwrap();
        assert_eq!(g.index_range(2.5, 6.0), 3..7);
        assert_eq!(g.index_range(20.0, 30.0).len(), 0);
        assert_eq!(g.nearest(4.4), 4);
        assert_eq!(g.nearest(4.6), 5);
        assert_eq!(g.nearest(-3.0), 0);
        assert_eq!(g.nearest(99.0), 10);
    }

    #[test]
    fn periodic_trapezoid_is_spectrally_accurate() {
        let g = Grid::periodic(GridKind::Azimuthal, 0.0, 32).unwrap();
        let vals: Vec<f64> = g.points().iter().map(|p| (p.cos()).exp()).collect();
        // 2 pi I_0(1)
        let exact = 2.0 * PI * 1.266_065_877_752_008_4;
        assert!((g.integrate(&vals) - exact).abs() < 1e-13);
    }
}
