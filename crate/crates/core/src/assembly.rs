//! Assembly of `A±`, `B± = f(A±)` and `Q`, and the measured-vs-bound chain.

use alloc::sync::Arc;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

use crate::cocycle::{generalized_pair_defect, CocyclePair, UnitaryCocycleField};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::par;
use crate::space::{PartitionOfUnity, SampleGrid};
use crate::spectral::{operator_norm, Hermitian, ScalarFunction};
use crate::strictly_below;

/// A selfadjoint matrix at every grid point.
#[derive(Clone, Debug)]
pub struct HermitianField {
    grid: Arc<SampleGrid>,
    dim: usize,
    values: Vec<Hermitian>,
}

impl HermitianField {
    pub fn new(grid: Arc<SampleGrid>, values: Vec<Hermitian>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: values.len() });
        }
        let dim = values.first().map_or(0, Hermitian::dim);
        if let Some(bad) = values.iter().find(|h| h.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: bad.dim() });
        }
        Ok(Self { grid, dim, values })
    }

    pub fn grid(&self) -> &Arc<SampleGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at(&self, p: usize) -> &Hermitian {
        &self.values[p]
    }

    pub fn values(&self) -> &[Hermitian] {
        &self.values
    }

    /// Largest symmetrization residual recorded on ingest.
    pub fn max_ingest_residual(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, h| acc.max(h.ingest_residual()))
    }

    /// `max_x ‖F(x) − G(x)‖`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        par::try_max(self.len(), |p| operator_norm(&(self.at(p).as_matrix() - other.at(p).as_matrix())))
    }

    /// Applies `func` pointwise through the spectral decomposition.
    pub fn apply(&self, func: ScalarFunction) -> Result<Self> {
        let values = par::try_map_indices(self.len(), |p| self.at(p).eig()?.apply(func))?;
        Ok(Self { grid: self.grid.clone(), dim: self.dim, values })
    }

    pub(crate) fn check_compatible(&self, other: &Self) -> Result<()> {
        if !Arc::ptr_eq(&self.grid, &other.grid) && *self.grid != *other.grid {
            return Err(Error::CoveringMismatch);
        }
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        Ok(())
    }
}

fn check_pou(field: &UnitaryCocycleField, pou: &PartitionOfUnity) -> Result<()> {
    if !field.covering().same_as(pou.covering()) {
        return Err(Error::CoveringMismatch);
    }
    Ok(())
}

fn assemble_point(field: &UnitaryCocycleField, pou: &PartitionOfUnity, p: usize) -> CMatrix {
    let n = field.fiber_dim();
    let m = field.chart_count();
    let mut out = CMatrix::zeros(m * n, m * n);
    let phi = pou.at(p);
    for &a in field.covering().charts_at(p) {
        for &b in field.covering().charts_at(p) {
            let w = phi[a] * phi[b];
            if w != 0.0 {
                out.set_block(a * n, b * n, &field.get(a, b, p).unwrap().scale(w));
            }
        }
    }
    out
}

/// `(A)_αβ(x) = φ_α(x) φ_β(x) g_αβ(x)`, zero where either bump vanishes.
pub fn assemble_a_single(field: &UnitaryCocycleField, pou: &PartitionOfUnity) -> Result<HermitianField> {
    check_pou(field, pou)?;
    let values = par::try_map_indices(pou.covering().grid().len(), |p| Hermitian::new(assemble_point(field, pou, p)))?;
    HermitianField::new(field.covering().grid().clone(), values)
}

pub fn assemble_a(pair: &CocyclePair, pou: &PartitionOfUnity) -> Result<(HermitianField, HermitianField)> {
    Ok((assemble_a_single(&pair.plus, pou)?, assemble_a_single(&pair.minus, pou)?))
}

/// `B = f(A)` with `f` the clamp to `[0, 1]`.
pub fn clamp_to_b(a: &HermitianField) -> Result<HermitianField> {
    a.apply(ScalarFunction::Clamp)
}

fn q_point(b_plus: &Hermitian, b_minus: &Hermitian) -> Result<Hermitian> {
    let d = b_plus.dim();
    let kappa = b_plus.eig()?.apply(ScalarFunction::Kappa)?;
    b_minus.eig()?.apply(ScalarFunction::Kappa)?;
    let mut q = CMatrix::zeros(2 * d, 2 * d);
    q.set_block(0, 0, &(&CMatrix::identity(d) - b_plus.as_matrix()));
    q.set_block(0, d, kappa.as_matrix());
    q.set_block(d, 0, kappa.as_matrix());
    q.set_block(d, d, b_minus.as_matrix());
    Hermitian::new(q)
}

/// `Q = [[1 − B₊, κ(B₊)], [κ(B₊), B₋]]`.
pub fn assemble_q(b_plus: &HermitianField, b_minus: &HermitianField) -> Result<HermitianField> {
    b_plus.check_compatible(b_minus)?;
    let values = par::try_map_indices(b_plus.len(), |p| q_point(b_plus.at(p), b_minus.at(p)))?;
    HermitianField::new(b_plus.grid().clone(), values)
}

/// Every field in the chain.
#[derive(Clone, Debug)]
pub struct Stages {
    pub a_plus: HermitianField,
    pub a_minus: HermitianField,
    pub b_plus: HermitianField,
    pub b_minus: HermitianField,
    pub q: HermitianField,
}

pub fn assemble_all(pair: &CocyclePair, pou: &PartitionOfUnity) -> Result<Stages> {
    let (a_plus, a_minus) = assemble_a(pair, pou)?;
    let b_plus = clamp_to_b(&a_plus)?;
    let b_minus = clamp_to_b(&a_minus)?;
    let q = assemble_q(&b_plus, &b_minus)?;
    Ok(Stages { a_plus, a_minus, b_plus, b_minus, q })
}

fn l6_coefficients(m: f64) -> (f64, f64) {
    let base = 2.0 * (16.0 * m).ln() * (2.0 * (m + 3.0)).sqrt();
    (base, m * base)
}

/// `C(m) = max(2 ln(16m) √(2(m+3)) m^{1/4}, 2m ln(16m) √(2(m+3)) m^{1/4} + m)`.
pub fn c_constant(m: usize) -> f64 {
    let m = m as f64;
    let (g, h) = l6_coefficients(m);
    let q = m.powf(0.25);
    (g * q).max(h * q + m)
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LemmaCheck {
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

impl LemmaCheck {
    fn strict(measured: f64, bound: f64) -> Self {
        Self { measured, bound, pass: strictly_below(measured, bound) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LemmaParams {
    pub m: usize,
    #[cfg_attr(feature = "serde", serde(rename = "N"))]
    pub n: usize,
    pub epsilon: f64,
    #[cfg_attr(feature = "serde", serde(rename = "C_m"))]
    pub c_m: f64,
    pub delta: f64,
    pub delta_below_one: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Hypothesis {
    pub pair_defect: f64,
    pub holds: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "UPPERCASE"))]
pub struct Lemmas {
    /// `‖(A± − A±²)(A₊ − A₋)‖` vs `mε`
    pub l2: LemmaCheck,
    /// `‖A±‖` vs `m`
    pub l3: LemmaCheck,
    /// `‖g(A₊) − g(A₋)‖` vs `2(m+3)√(mε)`
    pub l4: LemmaCheck,
    /// `‖g(B₊) − g(B₋)‖`
    pub l6: LemmaCheck,
    /// `‖h(B₊) − h(B₋)‖`
    #[cfg_attr(feature = "serde", serde(rename = "L6h"))]
    pub l6h: LemmaCheck,
    /// `‖(B± − B±²)(B₊ − B₋)‖` vs `2C(m)ε^{1/4}`
    pub l7: LemmaCheck,
    /// `‖Q − Q²‖` vs `3√δ`
    pub l8: LemmaCheck,
    /// `‖g(B₊) − g(B₋)‖` vs `δ`
    #[cfg_attr(feature = "serde", serde(rename = "L8_hyp"))]
    pub l8_hyp: LemmaCheck,
}

impl Lemmas {
    pub fn iter(&self) -> impl Iterator<Item = (&'static str, &LemmaCheck)> {
        [
            ("L2", &self.l2),
            ("L3", &self.l3),
            ("L4", &self.l4),
            ("L6", &self.l6),
            ("L6h", &self.l6h),
            ("L7", &self.l7),
            ("L8", &self.l8),
            ("L8_hyp", &self.l8_hyp),
        ]
        .into_iter()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LemmaReport {
    pub params: LemmaParams,
    pub hypothesis: Hypothesis,
    pub lemmas: Lemmas,
    /// `1/4 − 3√δ`; positive when the bound chain alone certifies `Q` as an
    /// almost projection.
    pub theorem_margin: f64,
}

impl LemmaReport {
    pub fn all_pass(&self) -> bool {
        self.hypothesis.holds && self.lemmas.iter().all(|(_, c)| c.pass)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        let mut out: Vec<&'static str> = self.lemmas.iter().filter(|(_, c)| !c.pass).map(|(k, _)| k).collect();
        if !self.hypothesis.holds {
            out.insert(0, "hypothesis");
        }
        out
    }
}

#[derive(Clone, Copy, Default)]
struct PointMeasures {
    l2: f64,
    l3: f64,
    l4: f64,
    l6: f64,
    l6h: f64,
    l7: f64,
    l8: f64,
}

impl PointMeasures {
    fn join(self, o: Self) -> Self {
        Self {
            l2: self.l2.max(o.l2),
            l3: self.l3.max(o.l3),
            l4: self.l4.max(o.l4),
            l6: self.l6.max(o.l6),
            l6h: self.l6h.max(o.l6h),
            l7: self.l7.max(o.l7),
            l8: self.l8.max(o.l8),
        }
    }
}

fn g_of(x: &CMatrix) -> CMatrix {
    x - &(x * x)
}

fn measure_point(stages: &Stages, p: usize) -> Result<PointMeasures> {
    let (ap, am) = (stages.a_plus.at(p).as_matrix(), stages.a_minus.at(p).as_matrix());
    let (bp, bm) = (stages.b_plus.at(p).as_matrix(), stages.b_minus.at(p).as_matrix());
    let q = stages.q.at(p).as_matrix();

    let da = ap - am;
    let db = bp - bm;
    let (gap, gam) = (g_of(ap), g_of(am));
    let (gbp, gbm) = (g_of(bp), g_of(bm));
    let l2 = operator_norm(&(&gap * &da))?.max(operator_norm(&(&gam * &da))?);
    let l3 = stages.a_plus.at(p).norm()?.max(stages.a_minus.at(p).norm()?);
    let l4 = operator_norm(&(&gap - &gam))?;
    let l6 = operator_norm(&(&gbp - &gbm))?;
    let l6h = operator_norm(&(&(bp * &gbp) - &(bm * &gbm)))?;
    let l7 = operator_norm(&(&gbp * &db))?.max(operator_norm(&(&gbm * &db))?);
    let l8 = operator_norm(&g_of(q))?;
    Ok(PointMeasures { l2, l3, l4, l6, l6h, l7, l8 })
}

/// Measures every bound of the chain on already assembled fields.
pub fn measure_lemma_chain(pair: &CocyclePair, stages: &Stages) -> Result<LemmaReport> {
    let defect = generalized_pair_defect(pair)?;
    let sup = par::try_map_indices(stages.q.len(), |p| measure_point(stages, p))?
        .into_iter()
        .fold(PointMeasures::default(), PointMeasures::join);

    let m = pair.chart_count();
    let mf = m as f64;
    let eps = pair.epsilon;
    let c_m = c_constant(m);
    let delta = 2.0 * c_m * eps.powf(0.25);
    let (g_coef, h_coef) = l6_coefficients(mf);
    let me = mf * eps;

    let lemmas = Lemmas {
        l2: LemmaCheck::strict(sup.l2, me),
        l3: LemmaCheck { measured: sup.l3, bound: mf, pass: sup.l3 <= mf },
        l4: LemmaCheck::strict(sup.l4, 2.0 * (mf + 3.0) * me.sqrt()),
        l6: LemmaCheck::strict(sup.l6, g_coef * me.powf(0.25)),
        l6h: LemmaCheck::strict(sup.l6h, h_coef * me.powf(0.25) + me),
        l7: LemmaCheck::strict(sup.l7, delta),
        l8: LemmaCheck::strict(sup.l8, 3.0 * delta.sqrt()),
        l8_hyp: LemmaCheck::strict(sup.l6, delta),
    };
    Ok(LemmaReport {
        params: LemmaParams { m, n: pair.fiber_dim(), epsilon: eps, c_m, delta, delta_below_one: delta < 1.0 },
        hypothesis: Hypothesis { pair_defect: defect.max(), holds: defect.pass },
        lemmas,
        theorem_margin: 0.25 - 3.0 * delta.sqrt(),
    })
}

/// Assembles the chain for `pair` under `pou` and measures every bound.
pub fn verify_lemma_chain(pair: &CocyclePair, pou: &PartitionOfUnity) -> Result<LemmaReport> {
    measure_lemma_chain(pair, &assemble_all(pair, pou)?)
}

/// `max_x ‖Q(x) − diag(1 − A₊(x), A₋(x))‖`.
pub fn q_distance_to_diagonal(stages: &Stages) -> Result<f64> {
    let d = stages.a_plus.dim();
    par::try_max(stages.q.len(), |p| {
        let mut diag = CMatrix::zeros(2 * d, 2 * d);
        diag.set_block(0, 0, &(&CMatrix::identity(d) - stages.a_plus.at(p).as_matrix()));
        diag.set_block(d, d, stages.a_minus.at(p).as_matrix());
        operator_norm(&(stages.q.at(p).as_matrix() - &diag))
    })
}

/// Conjugates every fiber of `field` by the constant block `I_m ⊗ W`.
pub fn conjugate_blocks(field: &HermitianField, w: &CMatrix) -> Result<HermitianField> {
    let n = w.rows();
    if !field.dim().is_multiple_of(n.max(1)) {
        return Err(Error::DimensionMismatch { expected: n, found: field.dim() });
    }
    let blocks = field.dim() / n;
    let mut big = CMatrix::zeros(field.dim(), field.dim());
    for k in 0..blocks {
        big.set_block(k * n, k * n, w);
    }
    let big_adj = big.adjoint();
    let values = par::try_map_indices(field.len(), |p| Hermitian::new(&(&big * field.at(p).as_matrix()) * &big_adj))?;
    HermitianField::new(field.grid().clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::{identity_cocycle, perturb_to_almost_pair, torus_line_bundle};
    use crate::space::{BumpProfile, Covering, SpaceKind};
    use num_complex::Complex64;

    fn unit(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn torus_pou(n: usize) -> PartitionOfUnity {
        let g = Arc::new(SampleGrid::new(SpaceKind::Torus, n).unwrap());
        let cov = Arc::new(Covering::default_torus(g).unwrap());
        PartitionOfUnity::new(cov, BumpProfile::Cosine).unwrap()
    }

    #[test]
    fn c_constant_value() {
        let m = 4.0f64;
        let expected = 2.0 * m * (16.0 * m).ln() * (2.0 * (m + 3.0)).sqrt() * m.powf(0.25) + m;
        assert!((c_constant(4) - expected).abs() < 1e-12);
        assert!((c_constant(4) - 180.1).abs() < 0.1);
    }

    #[test]
    fn identity_cocycle_gives_projection() {
        let pou = torus_pou(16);
        let id = identity_cocycle(pou.covering().clone(), 2);
        let a = assemble_a_single(&id, &pou).unwrap();
        assert_eq!(a.dim(), 8);
        for p in 0..a.len() {
            let m = a.at(p).as_matrix();
            assert!((&(m * m) - m).frobenius_norm() < 1e-12);
            assert!((m.trace().re - 2.0).abs() < 1e-12);
        }
        assert!(clamp_to_b(&a).unwrap().distance(&a).unwrap() < 1e-12);
    }

    #[test]
    fn clamp_example() {
        let g = Arc::new(SampleGrid::new(SpaceKind::Circle, 4).unwrap());
        let a = HermitianField::new(g, (0..4).map(|_| Hermitian::from_real_diag(&[-0.2, 0.5, 1.3])).collect()).unwrap();
        let b = clamp_to_b(&a).unwrap();
        let expected = CMatrix::from_real_diag(&[0.0, 0.5, 1.0]);
        assert!(b.at(2).as_matrix().max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn equal_b_fields_give_exact_q() {
        let g = Arc::new(SampleGrid::new(SpaceKind::Circle, 4).unwrap());
        let b = Hermitian::new(CMatrix::from_fn(2, 2, |r, c| match (r, c) {
            (0, 0) => unit(0.3),
            (1, 1) => unit(0.6),
            (0, 1) => Complex64::new(0.1, 0.2),
            _ => Complex64::new(0.1, -0.2),
        }))
        .unwrap();
        let field = HermitianField::new(g, (0..4).map(|_| b.clone()).collect()).unwrap();
        let q = assemble_q(&field, &field).unwrap();
        let m = q.at(0).as_matrix();
        assert!((&(m * m) - m).frobenius_norm() < 1e-12);
        assert!((m.trace().re - 2.0).abs() < 1e-12);
    }

    #[test]
    fn q_rejects_out_of_range_spectrum() {
        let g = Arc::new(SampleGrid::new(SpaceKind::Circle, 4).unwrap());
        let bad = HermitianField::new(g, (0..4).map(|_| Hermitian::from_real_diag(&[1.5])).collect()).unwrap();
        assert!(matches!(assemble_q(&bad, &bad), Err(Error::SpectrumOutOfDomain(_))));
    }

    #[test]
    fn equal_families_measure_zero() {
        let pou = torus_pou(16);
        let line = torus_line_bundle(pou.covering().clone(), 1).unwrap();
        let pair = CocyclePair::new(line.clone(), line, 0.01).unwrap();
        let r = verify_lemma_chain(&pair, &pou).unwrap();
        for (name, c) in r.lemmas.iter() {
            if name != "L3" {
                assert!(c.measured < 1e-10, "{name}: {}", c.measured);
            }
            assert!(c.pass);
        }
        assert!((r.lemmas.l3.measured - 1.0).abs() < 1e-12);
        assert!(r.all_pass());
    }

    #[test]
    fn perturbed_pair_passes_chain() {
        let pou = torus_pou(16);
        let id = identity_cocycle(pou.covering().clone(), 2);
        let pair = perturb_to_almost_pair(&id, 0.05, 3).unwrap();
        let r = verify_lemma_chain(&pair, &pou).unwrap();
        assert!(r.all_pass(), "{:?}", r.failures());
        assert!(r.lemmas.l2.measured > 0.0);
    }

    #[test]
    fn mismatched_covering_rejected() {
        let pou = torus_pou(16);
        let other = torus_pou(8);
        let id = identity_cocycle(other.covering().clone(), 1);
        assert!(matches!(assemble_a_single(&id, &pou), Err(Error::CoveringMismatch)));
    }
}
