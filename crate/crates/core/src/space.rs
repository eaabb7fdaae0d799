//! Discretized model spaces, coverings by charts, and squared partitions of unity.
//!
//! The circle and the torus are sampled on uniform periodic grids with step
//! `1/n`. Charts are open arcs (circle) or open squares (torus) placed
//! periodically; sup-norms over the space become maxima over grid points.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize), serde(rename_all = "lowercase"))]
pub enum SpaceKind {
    Circle,
    Torus,
}

impl SpaceKind {
    pub fn dim(self) -> usize {
        match self {
            SpaceKind::Circle => 1,
            SpaceKind::Torus => 2,
        }
    }
}

/// Uniform periodic sample of the circle (`n` points) or torus (`n²` points).
///
/// Torus point `(i, j)` has index `i + n j` and coordinates `(i/n, j/n)`.
/// Neighbors are listed as `[+x, −x]` or `[+x, −x, +y, −y]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleGrid {
    kind: SpaceKind,
    resolution: usize,
    coords: Vec<f64>,
    neighbors: Vec<usize>,
}

impl SampleGrid {
    pub fn new(kind: SpaceKind, n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::GridTooCoarse(n));
        }
        let step = 1.0 / n as f64;
        let (coords, neighbors) = match kind {
            SpaceKind::Circle => {
                let coords = (0..n).map(|i| i as f64 * step).collect();
                let neighbors = (0..n).flat_map(|i| [(i + 1) % n, (i + n - 1) % n]).collect();
                (coords, neighbors)
            }
            SpaceKind::Torus => {
                let mut coords = Vec::with_capacity(2 * n * n);
                let mut neighbors = Vec::with_capacity(4 * n * n);
                for j in 0..n {
                    for i in 0..n {
                        coords.extend([i as f64 * step, j as f64 * step]);
                        neighbors.extend([
                            (i + 1) % n + n * j,
                            (i + n - 1) % n + n * j,
                            i + n * ((j + 1) % n),
                            i + n * ((j + n - 1) % n),
                        ]);
                    }
                }
                (coords, neighbors)
            }
        };
        Ok(Self { kind, resolution: n, coords, neighbors })
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self, p: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[p * d..(p + 1) * d]
    }

    pub fn neighbors(&self, p: usize) -> &[usize] {
        let k = 2 * self.dim();
        &self.neighbors[p * k..(p + 1) * k]
    }

    /// One step in the positive direction of `axis`.
    pub fn forward(&self, p: usize, axis: usize) -> usize {
        self.neighbors(p)[2 * axis]
    }

    /// Every adjacent pair once, as `(p, forward(p, axis))`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.len()).flat_map(move |p| (0..self.dim()).map(move |axis| (p, self.forward(p, axis))))
    }
}

/// Signed periodic offset in `[-1/2, 1/2]`.
fn wrap(t: f64) -> f64 {
    t - t.round()
}

/// Finite covering by `m` congruent open charts.
///
/// Circle: `m ≥ 3` arcs of width `side` centered at `(k + ½)/m`.
/// Torus: `m = k²` squares of side `side` centered at `((a + ½)/k, (b + ½)/k)`,
/// chart index `a + k b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Covering {
    grid: Arc<SampleGrid>,
    side: f64,
    per_axis: usize,
    centers: Vec<[f64; 2]>,
    masks: Vec<Vec<bool>>,
    members: Vec<Vec<usize>>,
}

impl Covering {
    pub fn new(grid: Arc<SampleGrid>, charts: usize, side: f64) -> Result<Self> {
        if !(side > 0.0 && side < 1.0) {
            return Err(Error::InvalidCovering(format!("chart side {side} must lie in (0, 1)")));
        }
        let (per_axis, centers) = match grid.kind() {
            SpaceKind::Circle => {
                if charts < 3 {
                    return Err(Error::InvalidCovering(format!("circle needs at least 3 arcs, got {charts}")));
                }
                let centers = (0..charts).map(|k| [(k as f64 + 0.5) / charts as f64, 0.0]).collect();
                (charts, centers)
            }
            SpaceKind::Torus => {
                let k = (charts as f64).sqrt().round() as usize;
                if k * k != charts || k < 2 {
                    return Err(Error::InvalidCovering(format!(
                        "torus charts must be k² with k ≥ 2, got {charts}"
                    )));
                }
                let mut centers = Vec::with_capacity(charts);
                for b in 0..k {
                    for a in 0..k {
                        centers.push([(a as f64 + 0.5) / k as f64, (b as f64 + 0.5) / k as f64]);
                    }
                }
                (k, centers)
            }
        };
        let half = 0.5 * side;
        let dim = grid.dim();
        let masks: Vec<Vec<bool>> = centers
            .iter()
            .map(|c| {
                (0..grid.len())
                    .map(|p| {
                        grid.coords(p).iter().zip(c.iter()).take(dim).all(|(x, c)| wrap(x - c).abs() < half)
                    })
                    .collect()
            })
            .collect();
        let members: Vec<Vec<usize>> =
            (0..grid.len()).map(|p| (0..charts).filter(|&a| masks[a][p]).collect()).collect();
        if let Some(p) = members.iter().position(Vec::is_empty) {
            return Err(Error::Uncovered(p));
        }
        Ok(Self { grid, side, per_axis, centers, masks, members })
    }

    /// The 2×2 wrap-around covering of the torus by squares of side 0.6.
    pub fn default_torus(grid: Arc<SampleGrid>) -> Result<Self> {
        Self::new(grid, 4, 0.6)
    }

    pub fn grid(&self) -> &Arc<SampleGrid> {
        &self.grid
    }

    pub fn chart_count(&self) -> usize {
        self.centers.len()
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    /// Charts per axis (`k` on the torus, `m` on the circle).
    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn center(&self, chart: usize) -> &[f64] {
        &self.centers[chart][..self.grid.dim()]
    }

    pub fn contains(&self, chart: usize, p: usize) -> bool {
        self.masks[chart][p]
    }

    pub fn mask(&self, chart: usize) -> &[bool] {
        &self.masks[chart]
    }

    /// Charts containing point `p`, ascending.
    pub fn charts_at(&self, p: usize) -> &[usize] {
        &self.members[p]
    }

    /// Intersection of the membership masks of `charts`.
    pub fn overlap_mask(&self, charts: &[usize]) -> Vec<bool> {
        (0..self.grid.len()).map(|p| charts.iter().all(|&a| self.masks[a][p])).collect()
    }

    pub fn overlap_points(&self, charts: &[usize]) -> Vec<usize> {
        (0..self.grid.len()).filter(|&p| charts.iter().all(|&a| self.masks[a][p])).collect()
    }

    /// Offset of `p` from the center of `chart`, per axis, in `(-side/2, side/2)`.
    pub fn local_offset(&self, chart: usize, p: usize) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (d, (x, c)) in self.grid.coords(p).iter().zip(self.center(chart)).enumerate() {
            out[d] = wrap(x - c);
        }
        out
    }

    /// Lift of `p` to the universal cover, taken next to the chart's center.
    pub fn lift(&self, chart: usize, p: usize) -> [f64; 2] {
        let off = self.local_offset(chart, p);
        let c = self.center(chart);
        let mut out = [0.0; 2];
        for d in 0..c.len() {
            out[d] = c[d] + off[d];
        }
        out
    }

    /// Deck translation `lift_α(p) − lift_β(p)` on an overlap point.
    pub fn translation(&self, alpha: usize, beta: usize, p: usize) -> [i64; 2] {
        let (a, b) = (self.lift(alpha, p), self.lift(beta, p));
        [(a[0] - b[0]).round() as i64, (a[1] - b[1]).round() as i64]
    }

    pub(crate) fn same_as(&self, other: &Covering) -> bool {
        core::ptr::eq(self, other) || self == other
    }
}

/// Radial bump profile on `|u| < 1`, equal to 1 at the center and 0 at the rim.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize), serde(rename_all = "lowercase"))]
pub enum BumpProfile {
    /// `cos²(π u / 2)`, i.e. the raised cosine.
    Cosine,
    /// `1 − 2u²` for `|u| ≤ ½`, `2(1 − |u|)²` beyond; C¹ and piecewise quadratic.
    Quadratic,
}

impl BumpProfile {
    pub fn eval(self, u: f64) -> f64 {
        let u = u.abs();
        if u >= 1.0 {
            return 0.0;
        }
        match self {
            BumpProfile::Cosine => {
                let c = (core::f64::consts::FRAC_PI_2 * u).cos();
                c * c
            }
            BumpProfile::Quadratic => {
                if u <= 0.5 {
                    1.0 - 2.0 * u * u
                } else {
                    2.0 * (1.0 - u) * (1.0 - u)
                }
            }
        }
    }
}

/// Functions `φ_α` supported in the charts with `Σ_α φ_α² = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionOfUnity {
    covering: Arc<Covering>,
    profile: BumpProfile,
    values: Vec<f64>,
}

impl PartitionOfUnity {
    pub fn new(covering: Arc<Covering>, profile: BumpProfile) -> Result<Self> {
        let m = covering.chart_count();
        let grid = covering.grid().clone();
        let half = 0.5 * covering.side();
        let mut values = vec![0.0; m * grid.len()];
        for p in 0..grid.len() {
            let row = &mut values[p * m..(p + 1) * m];
            for &a in covering.charts_at(p) {
                let off = covering.local_offset(a, p);
                row[a] = off[..grid.dim()].iter().map(|&t| profile.eval(t / half)).product();
            }
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm > 0.0) {
                return Err(Error::Uncovered(p));
            }
            for v in row.iter_mut() {
                *v /= norm;
            }
        }
        Ok(Self { covering, profile, values })
    }

    pub fn covering(&self) -> &Arc<Covering> {
        &self.covering
    }

    pub fn profile(&self) -> BumpProfile {
        self.profile
    }

    #[inline]
    pub fn phi(&self, chart: usize, p: usize) -> f64 {
        self.values[p * self.covering.chart_count() + chart]
    }

    /// All `φ_α(p)` for one point.
    pub fn at(&self, p: usize) -> &[f64] {
        let m = self.covering.chart_count();
        &self.values[p * m..(p + 1) * m]
    }

    /// `max_x |Σ_α φ_α(x)² − 1|`
    pub fn max_square_sum_deviation(&self) -> f64 {
        (0..self.covering.grid().len())
            .map(|p| (self.at(p).iter().map(|v| v * v).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}
