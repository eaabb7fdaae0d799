//! Rank and first Chern number of projection fields, the K⁰ relation between
//! `ξ(g⁺, g⁻)` and `η(g±)`, and independence from the partition of unity.

use alloc::string::String;
use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::assembly::{assemble_all, measure_lemma_chain, q_distance_to_diagonal, HermitianField, LemmaReport};
use crate::cocycle::{cocycle_defect, epsilon_above, CocyclePair};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::par;
use crate::projection::{compare_projections, extract_projection, Comparison, Extraction, ProjectionField};
use crate::space::{PartitionOfUnity, SampleGrid, SpaceKind};
use crate::strictly_below;

/// Links with `|det|` below this are treated as singular.
pub const SINGULAR_LINK: f64 = 1e-8;

pub fn bundle_rank(p: &ProjectionField) -> usize {
    p.rank()
}

fn link(frames: &[CMatrix], a: usize, b: usize) -> Result<Complex64> {
    let overlap = &frames[a].adjoint() * &frames[b];
    let det = overlap.determinant()?;
    let n = det.norm();
    if n < SINGULAR_LINK {
        return Err(Error::SingularOverlap { a, b, det: n });
    }
    Ok(det / n)
}

/// Lattice field-strength Chern number of the frames over a torus grid.
///
/// Each plaquette with lower-left corner `p₀` is traversed counterclockwise,
/// `p₀ → p₁ = p₀ + x̂ → p₂ = p₁ + ŷ → p₃ = p₀ + ŷ → p₀`.
pub fn chern_number_from_frames(grid: &SampleGrid, frames: &[CMatrix]) -> Result<i64> {
    if grid.kind() != SpaceKind::Torus {
        return Err(Error::NotTorus);
    }
    if frames.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), found: frames.len() });
    }
    let links = par::try_map_indices(grid.len(), |p| {
        Ok([link(frames, p, grid.forward(p, 0))?, link(frames, p, grid.forward(p, 1))?])
    })?;
    let flux: f64 = (0..grid.len())
        .map(|p0| {
            let p1 = grid.forward(p0, 0);
            let p3 = grid.forward(p0, 1);
            let loop_ = links[p0][0] * links[p1][1] * links[p3][0].conj() * links[p0][1].conj();
            loop_.arg()
        })
        .sum();
    Ok((flux / core::f64::consts::TAU).round() as i64)
}

pub fn chern_number(p: &ProjectionField) -> Result<i64> {
    chern_number_from_frames(p.grid(), p.frames())
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Margins {
    /// Almost-projection defect of the field the projection was cut from.
    pub defect: f64,
    /// Guaranteed spectral half-gap around ½.
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct InvariantsReport {
    pub rank: usize,
    /// Present on torus grids only.
    pub chern: Option<i64>,
    pub margins: Margins,
    pub provenance: String,
}

impl InvariantsReport {
    pub fn of(extraction: &Extraction, provenance: impl Into<String>) -> Result<Self> {
        let p = &extraction.projection;
        let chern = match p.grid().kind() {
            SpaceKind::Torus => Some(chern_number(p)?),
            SpaceKind::Circle => None,
        };
        Ok(Self {
            rank: p.rank(),
            chern,
            margins: Margins { defect: extraction.defect, gap: extraction.gap },
            provenance: provenance.into(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BoundCheck {
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Almost-cocycle hypothesis `mε < 1/4`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AlmostCocycleHypothesis {
    pub defect_plus: f64,
    pub defect_minus: f64,
    /// Smallest `ε` above both cocycle defects.
    pub epsilon: f64,
    pub m_epsilon: f64,
    pub holds: bool,
}

/// An extraction that either succeeded, or failed because the field was not
/// an almost projection.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ExtractionOutcome {
    /// `max ‖F − F²‖` of the source field.
    pub defect: f64,
    pub invariants: Option<InvariantsReport>,
}

impl ExtractionOutcome {
    fn run(field: &HermitianField, provenance: &str) -> Result<(Self, Option<Extraction>)> {
        match extract_projection(field) {
            Ok(e) => {
                let inv = InvariantsReport::of(&e, provenance)?;
                Ok((Self { defect: e.defect, invariants: Some(inv) }, Some(e)))
            }
            Err(Error::NotAlmostProjection(defect)) => Ok((Self { defect, invariants: None }, None)),
            Err(e) => Err(e),
        }
    }

    pub fn extracted(&self) -> bool {
        self.invariants.is_some()
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct KRelationReport {
    pub hypothesis: AlmostCocycleHypothesis,
    pub eta_plus: ExtractionOutcome,
    pub eta_minus: ExtractionOutcome,
    pub xi: ExtractionOutcome,
    /// `rank ξ = (mN − rank η₊) + rank η₋`; absent when an extraction failed.
    pub rank_identity: Option<bool>,
    /// `c₁(ξ) = c₁(η₋) − c₁(η₊)`; torus only.
    pub chern_identity: Option<bool>,
    /// `‖Q − diag(1 − A₊, A₋)‖` vs `4√(mε)`.
    pub q_vs_diagonal: BoundCheck,
    /// `max ‖A± − B±‖` vs `mε`.
    pub a_vs_b: BoundCheck,
}

impl KRelationReport {
    /// All three extractions succeeded and the integer identities hold.
    pub fn identities_hold(&self) -> bool {
        let torus = self.xi.invariants.as_ref().is_some_and(|x| x.chern.is_some());
        self.rank_identity == Some(true) && (!torus || self.chern_identity == Some(true))
    }

    pub fn all_pass(&self) -> bool {
        self.hypothesis.holds && self.identities_hold() && self.q_vs_diagonal.pass && self.a_vs_b.pass
    }

    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.hypothesis.holds {
            out.push("m_epsilon");
        }
        for (name, o) in [("eta_plus", &self.eta_plus), ("eta_minus", &self.eta_minus), ("xi", &self.xi)] {
            if !o.extracted() {
                out.push(name);
            }
        }
        if self.rank_identity == Some(false) {
            out.push("rank_identity");
        }
        if self.chern_identity == Some(false) {
            out.push("chern_identity");
        }
        if !self.q_vs_diagonal.pass {
            out.push("q_vs_diagonal");
        }
        if !self.a_vs_b.pass {
            out.push("a_vs_b");
        }
        out
    }
}

/// Extracts `η(g⁺)`, `η(g⁻)` from `A±` and `ξ` from `Q`, and compares their
/// invariants. Fields that are not almost projections are reported, not
/// treated as errors.
pub fn verify_k_relation(pair: &CocyclePair, pou: &PartitionOfUnity) -> Result<KRelationReport> {
    let defect_plus = cocycle_defect(&pair.plus)?;
    let defect_minus = cocycle_defect(&pair.minus)?;
    let m = pair.chart_count();
    let epsilon = epsilon_above(defect_plus.max(defect_minus));
    let m_epsilon = m as f64 * epsilon;
    let hypothesis = AlmostCocycleHypothesis { defect_plus, defect_minus, epsilon, m_epsilon, holds: m_epsilon < 0.25 };

    let stages = assemble_all(pair, pou)?;
    let (eta_plus, _) = ExtractionOutcome::run(&stages.a_plus, "eta_plus")?;
    let (eta_minus, _) = ExtractionOutcome::run(&stages.a_minus, "eta_minus")?;
    let (xi, _) = ExtractionOutcome::run(&stages.q, "xi")?;

    let mn = m * pair.fiber_dim();
    let (mut rank_identity, mut chern_identity) = (None, None);
    if let (Some(p), Some(q), Some(x)) = (&eta_plus.invariants, &eta_minus.invariants, &xi.invariants) {
        rank_identity = Some(p.rank <= mn && x.rank == mn - p.rank + q.rank);
        if let (Some(cx), Some(cp), Some(cq)) = (x.chern, p.chern, q.chern) {
            chern_identity = Some(cx == cq - cp);
        }
    }
    let q_diag = q_distance_to_diagonal(&stages)?;
    let a_b = stages.a_plus.distance(&stages.b_plus)?.max(stages.a_minus.distance(&stages.b_minus)?);
    let q_bound = 4.0 * m_epsilon.sqrt();
    Ok(KRelationReport {
        hypothesis,
        eta_plus,
        eta_minus,
        xi,
        rank_identity,
        chern_identity,
        q_vs_diagonal: BoundCheck { measured: q_diag, bound: q_bound, pass: strictly_below(q_diag, q_bound) },
        a_vs_b: BoundCheck { measured: a_b, bound: m_epsilon, pass: strictly_below(a_b, m_epsilon) },
    })
}

/// One projection extracted under each of two partitions.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ProjectionPairReport {
    pub first: ExtractionOutcome,
    pub second: ExtractionOutcome,
    /// Present when both extractions succeeded.
    pub comparison: Option<Comparison>,
    pub invariants_equal: bool,
}

impl ProjectionPairReport {
    fn new(f1: &HermitianField, f2: &HermitianField, label: &str) -> Result<Self> {
        let (first, e1) = ExtractionOutcome::run(f1, &alloc::format!("{label}/pou1"))?;
        let (second, e2) = ExtractionOutcome::run(f2, &alloc::format!("{label}/pou2"))?;
        let comparison = match (&e1, &e2) {
            (Some(a), Some(b)) => Some(compare_projections(&a.projection, &b.projection)?),
            _ => None,
        };
        let invariants_equal = match (&first.invariants, &second.invariants) {
            (Some(a), Some(b)) => a.rank == b.rank && a.chern == b.chern,
            _ => false,
        };
        Ok(Self { first, second, comparison, invariants_equal })
    }

    pub fn pass(&self) -> bool {
        self.comparison.is_some_and(|c| c.isomorphic) && self.invariants_equal
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct IndependenceReport {
    pub lemmas: [LemmaReport; 2],
    /// `ξ` extracted from `Q`.
    pub xi: ProjectionPairReport,
    /// `η(g⁺)` extracted from `A₊`.
    pub eta_plus: ProjectionPairReport,
}

impl IndependenceReport {
    /// `ξ` is isomorphic under both partitions with equal invariants.
    pub fn pass(&self) -> bool {
        self.xi.pass()
    }

    pub fn lemmas_pass(&self) -> bool {
        self.lemmas.iter().all(LemmaReport::all_pass)
    }
}

/// Runs the chain under both partitions and compares the extracted projections.
pub fn partition_independence(
    pair: &CocyclePair,
    pou1: &PartitionOfUnity,
    pou2: &PartitionOfUnity,
) -> Result<IndependenceReport> {
    if !pou1.covering().same_as(pou2.covering()) {
        return Err(Error::CoveringMismatch);
    }
    let s1 = assemble_all(pair, pou1)?;
    let s2 = assemble_all(pair, pou2)?;
    let lemmas = [measure_lemma_chain(pair, &s1)?, measure_lemma_chain(pair, &s2)?];
    let xi = ProjectionPairReport::new(&s1.q, &s2.q, "xi")?;
    let eta_plus = ProjectionPairReport::new(&s1.a_plus, &s2.a_plus, "eta_plus")?;
    Ok(IndependenceReport { lemmas, xi, eta_plus })
}

/// Multiplies every frame on the right by a unitary; the range is unchanged.
pub fn regauge(frames: &[CMatrix], gauges: &[CMatrix]) -> Result<Vec<CMatrix>> {
    frames.iter().zip(gauges).map(|(f, g)| f.try_mul(g)).collect()
}
