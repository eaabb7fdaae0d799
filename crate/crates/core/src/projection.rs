//! Projection fields: extraction from almost projections by a spectral cut
//! at ½, and comparison.

use alloc::sync::Arc;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::assembly::HermitianField;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::par;
use crate::space::SampleGrid;
use crate::spectral::{operator_norm, Eigen, Hermitian};

/// Per-point tolerance on `‖P² − P‖`.
pub const IDEMPOTENCY_TOL: f64 = 1e-9;
/// Per-point tolerance on `|trace P − rank|`.
pub const TRACE_TOL: f64 = 1e-6;

/// A projection of constant rank at every grid point, with an orthonormal
/// frame of its range.
#[derive(Clone, Debug)]
pub struct ProjectionField {
    field: HermitianField,
    frames: Vec<CMatrix>,
    rank: usize,
}

fn cut(eig: &Eigen) -> (Hermitian, CMatrix) {
    (eig.map(|t| if t > 0.5 { 1.0 } else { 0.0 }), eig.frame_above(0.5))
}

impl ProjectionField {
    /// Validates a field of projections; frames come from the spectral cut.
    pub fn new(field: HermitianField) -> Result<Self> {
        let frames = par::try_map_indices(field.len(), |p| Ok(field.at(p).eig()?.frame_above(0.5)))?;
        Self::from_parts(field, frames)
    }

    fn from_parts(field: HermitianField, frames: Vec<CMatrix>) -> Result<Self> {
        let grid = field.grid().clone();
        check_rank_constant(&grid, &frames)?;
        let rank = frames.first().map_or(0, CMatrix::cols);
        let checks = par::try_map_indices(field.len(), |p| {
            let m = field.at(p).as_matrix();
            let idem = operator_norm(&(&(m * m) - m))?;
            let dev = (m.trace().re - rank as f64).abs();
            Ok((idem, dev))
        })?;
        for (p, &(idem, dev)) in checks.iter().enumerate() {
            if idem > IDEMPOTENCY_TOL {
                return Err(Error::NotAlmostProjection(idem));
            }
            if dev > TRACE_TOL {
                return Err(Error::NonIntegerTrace { point: p, deviation: dev });
            }
        }
        let pf = Self { field, frames, rank };
        pf.check_continuity()?;
        Ok(pf)
    }

    fn check_continuity(&self) -> Result<()> {
        let edges: Vec<(usize, usize)> = self.grid().edges().collect();
        let dists = par::try_map_indices(edges.len(), |e| {
            let (a, b) = edges[e];
            operator_norm(&(self.at(a).as_matrix() - self.at(b).as_matrix()))
        })?;
        for (&(a, b), &distance) in edges.iter().zip(&dists) {
            if !(distance < 1.0) {
                return Err(Error::Discontinuous { a, b, distance });
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &Arc<SampleGrid> {
        self.field.grid()
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn at(&self, p: usize) -> &Hermitian {
        self.field.at(p)
    }

    /// Orthonormal basis of the range at `p`, as columns.
    pub fn frame(&self, p: usize) -> &CMatrix {
        &self.frames[p]
    }

    pub fn frames(&self) -> &[CMatrix] {
        &self.frames
    }

    pub fn as_field(&self) -> &HermitianField {
        &self.field
    }

    /// `1 − P`.
    pub fn complement(&self) -> Result<Self> {
        let d = self.dim();
        let values = par::try_map_indices(self.field.len(), |p| {
            let c = Hermitian::new(&CMatrix::identity(d) - self.at(p).as_matrix())?;
            Ok(cut(&c.eig()?))
        })?;
        self.rebuild(values)
    }

    /// `P ⊕ P′` pointwise.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        self.field.check_compatible(&other.field).or_else(|e| match e {
            Error::DimensionMismatch { .. } => Ok(()),
            e => Err(e),
        })?;
        let values = par::try_map_indices(self.field.len(), |p| {
            let h = Hermitian::new(CMatrix::direct_sum(self.at(p).as_matrix(), other.at(p).as_matrix()))?;
            Ok(cut(&h.eig()?))
        })?;
        self.rebuild(values)
    }

    fn rebuild(&self, values: Vec<(Hermitian, CMatrix)>) -> Result<Self> {
        let (hs, frames): (Vec<_>, Vec<_>) = values.into_iter().unzip();
        Self::from_parts(HermitianField::new(self.grid().clone(), hs)?, frames)
    }
}

fn check_rank_constant(grid: &SampleGrid, frames: &[CMatrix]) -> Result<()> {
    for (a, b) in grid.edges() {
        let (ra, rb) = (frames[a].cols(), frames[b].cols());
        if ra != rb {
            return Err(Error::RankJump { a, rank_a: ra, b, rank_b: rb });
        }
    }
    Ok(())
}

/// `max_x ‖F(x) − F(x)²‖`.
pub fn almost_projection_defect(f: &HermitianField) -> Result<f64> {
    par::try_max(f.len(), |p| {
        let m = f.at(p).as_matrix();
        operator_norm(&(m - &(m * m)))
    })
}

/// Result of a spectral cut.
#[derive(Clone, Debug)]
pub struct Extraction {
    pub projection: ProjectionField,
    /// `d* = max ‖F − F²‖`
    pub defect: f64,
    /// Guaranteed half-width `½√(1 − 4d*)` of the spectral gap around ½.
    pub gap: f64,
    /// Smallest measured `|λ − ½|` over all eigenvalues and points.
    pub measured_gap: f64,
    /// `max ‖F − P‖`
    pub distance: f64,
    /// `½ − gap`, the bound on `distance`.
    pub gap_bound: f64,
}

/// Projects onto the eigenspaces above ½ at every point.
pub fn extract_projection(f: &HermitianField) -> Result<Extraction> {
    let defect = almost_projection_defect(f)?;
    if !(defect < 0.25) {
        return Err(Error::NotAlmostProjection(defect));
    }
    let per_point = par::try_map_indices(f.len(), |p| {
        let eig = f.at(p).eig()?;
        let gap = eig.values.iter().fold(f64::INFINITY, |acc, v| acc.min((v - 0.5).abs()));
        let (proj, frame) = cut(&eig);
        let distance = operator_norm(&(f.at(p).as_matrix() - proj.as_matrix()))?;
        Ok((proj, frame, gap, distance))
    })?;
    let mut values = Vec::with_capacity(per_point.len());
    let mut frames = Vec::with_capacity(per_point.len());
    let (mut measured_gap, mut distance) = (f64::INFINITY, 0.0f64);
    for (proj, frame, g, d) in per_point {
        values.push(proj);
        frames.push(frame);
        measured_gap = measured_gap.min(g);
        distance = distance.max(d);
    }
    let projection = ProjectionField::from_parts(HermitianField::new(f.grid().clone(), values)?, frames)?;
    let gap = 0.5 * (1.0 - 4.0 * defect).max(0.0).sqrt();
    Ok(Extraction { projection, defect, gap, measured_gap, distance, gap_bound: 0.5 - gap })
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Comparison {
    pub distance: f64,
    pub isomorphic: bool,
}

pub fn compare_projections(p: &ProjectionField, q: &ProjectionField) -> Result<Comparison> {
    let distance = p.as_field().distance(q.as_field())?;
    Ok(Comparison { distance, isomorphic: distance < 1.0 })
}
