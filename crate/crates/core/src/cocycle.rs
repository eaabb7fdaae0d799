//! Unitary transition data on chart overlaps.
//!
//! A [`UnitaryCocycleField`] stores `g_αβ(x) ∈ U(N)` for every ordered chart
//! pair and every grid point in the overlap. The reverse direction is stored
//! as the exact adjoint, and the diagonal as the identity, so
//! `g_βα = g_αβ*` and `g_αα = I` hold bit for bit.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::almostrep::{ConstantCocycle, RepMap};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::par;
use crate::space::{Covering, SpaceKind};
use crate::spectral::{operator_norm, Hermitian};

/// Unitarity tolerance `‖g*g − I‖` accepted on construction.
pub const UNITARY_TOL: f64 = 1e-10;

/// Smallest `ε` with `sup < ε`.
pub fn epsilon_above(sup: f64) -> f64 {
    sup.next_up()
}

#[derive(Clone, Debug)]
pub struct UnitaryCocycleField {
    covering: Arc<Covering>,
    fiber_dim: usize,
    // Indexed by `alpha * m + beta`, then by grid point.
    values: Vec<Vec<Option<CMatrix>>>,
}

impl UnitaryCocycleField {
    /// Builds a field from `f(α, β, point)`, called once per unordered pair
    /// `α < β` and overlap point.
    pub fn from_fn(
        covering: Arc<Covering>,
        fiber_dim: usize,
        mut f: impl FnMut(usize, usize, usize) -> Result<CMatrix>,
    ) -> Result<Self> {
        let m = covering.chart_count();
        let npts = covering.grid().len();
        let mut values = vec![vec![None; npts]; m * m];
        let eye = CMatrix::identity(fiber_dim);
        for p in 0..npts {
            let charts = covering.charts_at(p);
            for (i, &a) in charts.iter().enumerate() {
                values[a * m + a][p] = Some(eye.clone());
                for &b in &charts[i + 1..] {
                    let g = f(a, b, p)?;
                    if g.rows() != fiber_dim || g.cols() != fiber_dim {
                        return Err(Error::DimensionMismatch { expected: fiber_dim, found: g.rows() });
                    }
                    if !g.is_finite() {
                        return Err(Error::NonFinite);
                    }
                    let residual = (&g.gram() - &eye).frobenius_norm();
                    if residual > UNITARY_TOL {
                        return Err(Error::NotUnitary { alpha: a, beta: b, point: p, residual });
                    }
                    values[b * m + a][p] = Some(g.adjoint());
                    values[a * m + b][p] = Some(g);
                }
            }
        }
        Ok(Self { covering, fiber_dim, values })
    }

    pub fn covering(&self) -> &Arc<Covering> {
        &self.covering
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    pub fn chart_count(&self) -> usize {
        self.covering.chart_count()
    }

    /// `g_αβ(p)`, defined only on the overlap.
    #[inline]
    pub fn get(&self, alpha: usize, beta: usize, p: usize) -> Option<&CMatrix> {
        self.values[alpha * self.chart_count() + beta][p].as_ref()
    }

    /// Blockwise `diag(self, other)`.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if !self.covering.same_as(&other.covering) {
            return Err(Error::CoveringMismatch);
        }
        Self::from_fn(self.covering.clone(), self.fiber_dim + other.fiber_dim, |a, b, p| {
            Ok(CMatrix::direct_sum(self.get(a, b, p).unwrap(), other.get(a, b, p).unwrap()))
        })
    }

    /// `W g_αβ W*` for a fixed unitary `W`.
    pub fn conjugated(&self, w: &CMatrix) -> Result<Self> {
        let wa = w.adjoint();
        Self::from_fn(self.covering.clone(), self.fiber_dim, |a, b, p| {
            Ok(&(w * self.get(a, b, p).unwrap()) * &wa)
        })
    }

    /// Pointwise product `g_αβ(x) h_αβ(x)` (not a cocycle operation; used
    /// to perturb fields).
    fn pointwise_product(&self, other: &Self) -> Result<Self> {
        Self::from_fn(self.covering.clone(), self.fiber_dim, |a, b, p| {
            Ok(self.get(a, b, p).unwrap() * other.get(a, b, p).unwrap())
        })
    }
}

/// The exact cocycle `g_αβ = I_N`.
pub fn identity_cocycle(covering: Arc<Covering>, fiber_dim: usize) -> UnitaryCocycleField {
    UnitaryCocycleField::from_fn(covering, fiber_dim, |_, _, _| Ok(CMatrix::identity(fiber_dim)))
        .expect("identity is unitary")
}

/// `g_αβ(x) = π(γ_αβ(x))` for a locally constant group cocycle `γ`.
pub fn constant_cocycle_from_rep(gamma: &ConstantCocycle, rep: &RepMap) -> Result<UnitaryCocycleField> {
    for g in gamma.values() {
        rep.check_inverse(g)?;
    }
    UnitaryCocycleField::from_fn(gamma.covering().clone(), rep.dim(), |a, b, p| {
        Ok(rep.eval(gamma.get(a, b, p).expect("overlap point")))
    })
}

/// Exact U(1) cocycle of the torus line bundle of the given degree.
///
/// Uses the factor of automorphy `j((a, b), (x, y)) = exp(2πi · degree · b x)`
/// and sets `g_αβ(p) = j(lift_α(p) − lift_β(p), lift_β(p))`.
pub fn torus_line_bundle(covering: Arc<Covering>, degree: i64) -> Result<UnitaryCocycleField> {
    if covering.grid().kind() != SpaceKind::Torus {
        return Err(Error::NotTorus);
    }
    let cov = covering.clone();
    UnitaryCocycleField::from_fn(covering, 1, move |a, b, p| {
        let t = cov.translation(a, b, p);
        let x = cov.lift(b, p)[0];
        let angle = 2.0 * core::f64::consts::PI * (degree * t[1]) as f64 * x;
        Ok(CMatrix::from_diag(&[Complex64::from_polar(1.0, angle)]))
    })
}

fn random_unit_hermitian(rng: &mut ChaCha8Rng, n: usize) -> Result<CMatrix> {
    let m = CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let h = Hermitian::new(m)?;
    let norm = h.norm()?;
    Ok(h.into_matrix().scale(1.0 / norm.max(f64::MIN_POSITIVE)))
}

/// Unitary field `exp(i · amplitude · H_αβ(x))` with smooth Hermitian
/// directions `‖H_αβ(x)‖ ≤ 1`, periodic in `x`.
pub fn random_smooth_field(
    covering: Arc<Covering>,
    fiber_dim: usize,
    amplitude: f64,
    seed: u64,
) -> Result<UnitaryCocycleField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = covering.chart_count();
    let dim = covering.grid().dim();
    // One smooth direction per unordered chart pair.
    let mut directions = Vec::new();
    for _ in 0..m * m {
        let h1 = random_unit_hermitian(&mut rng, fiber_dim)?;
        let h2 = random_unit_hermitian(&mut rng, fiber_dim)?;
        let wave: [f64; 2] = [rng.gen_range(1..=2) as f64, rng.gen_range(1..=2) as f64];
        let shift: f64 = rng.gen_range(0.0..core::f64::consts::TAU);
        directions.push((h1, h2, wave, shift));
    }
    let grid = covering.grid().clone();
    UnitaryCocycleField::from_fn(covering, fiber_dim, move |a, b, p| {
        let (h1, h2, wave, shift) = &directions[a * m + b];
        let x = grid.coords(p);
        let phase = core::f64::consts::TAU * (0..dim).map(|d| wave[d] * x[d]).sum::<f64>() + shift;
        let h = &h1.scale(0.5 * phase.cos()) + &h2.scale(0.5 * phase.sin());
        let eig = Hermitian::new(h)?.eig()?;
        let phases: Vec<Complex64> =
            eig.values.iter().map(|&l| Complex64::from_polar(1.0, amplitude * l)).collect();
        Ok(&(&eig.frame * &CMatrix::from_diag(&phases)) * &eig.frame.adjoint())
    })
}

/// Evaluates `f` on every ordered tuple of charts containing each point and
/// returns the maximum.
fn sup_over_points(
    covering: &Covering,
    f: impl Fn(usize, &[usize]) -> Result<f64> + Sync + Send,
) -> Result<f64> {
    par::try_max(covering.grid().len(), |p| f(p, covering.charts_at(p)))
}

/// `max ‖g_αβ g_βγ − g_αγ‖` over ordered triples and triple-overlap points.
pub fn cocycle_defect(field: &UnitaryCocycleField) -> Result<f64> {
    sup_over_points(field.covering(), |p, charts| {
        let mut best: f64 = 0.0;
        for &a in charts {
            for &b in charts {
                let gab = field.get(a, b, p).unwrap();
                for &c in charts {
                    let e = &(gab * field.get(b, c, p).unwrap()) - field.get(a, c, p).unwrap();
                    best = best.max(operator_norm(&e)?);
                }
            }
        }
        Ok(best)
    })
}

/// Two cocycle fields on one covering, with the `ε` of the generalized-pair condition.
#[derive(Clone, Debug)]
pub struct CocyclePair {
    pub plus: UnitaryCocycleField,
    pub minus: UnitaryCocycleField,
    pub epsilon: f64,
}

impl CocyclePair {
    pub fn new(plus: UnitaryCocycleField, minus: UnitaryCocycleField, epsilon: f64) -> Result<Self> {
        if !plus.covering.same_as(&minus.covering) {
            return Err(Error::CoveringMismatch);
        }
        if plus.fiber_dim != minus.fiber_dim {
            return Err(Error::DimensionMismatch { expected: plus.fiber_dim, found: minus.fiber_dim });
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidEpsilon(epsilon));
        }
        Ok(Self { plus, minus, epsilon })
    }

    /// Pair whose `ε` is the smallest value above its measured defect.
    pub fn with_measured_epsilon(plus: UnitaryCocycleField, minus: UnitaryCocycleField) -> Result<Self> {
        let mut pair = Self::new(plus, minus, 1.0)?;
        let d = generalized_pair_defect(&pair)?;
        pair.epsilon = epsilon_above(d.lhs_plus.max(d.lhs_minus));
        Ok(pair)
    }

    pub fn covering(&self) -> &Arc<Covering> {
        self.plus.covering()
    }

    pub fn fiber_dim(&self) -> usize {
        self.plus.fiber_dim
    }

    pub fn chart_count(&self) -> usize {
        self.plus.chart_count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PairDefect {
    pub lhs_plus: f64,
    pub lhs_minus: f64,
    pub epsilon: f64,
    pub pass: bool,
}

impl PairDefect {
    pub fn max(&self) -> f64 {
        self.lhs_plus.max(self.lhs_minus)
    }
}

/// Per-point scratch for the quadruple sups.
struct PointTerms {
    charts: Vec<usize>,
    // diff[γ][δ] = g⁺_γδ − g⁻_γδ, indexed by position in `charts`
    diff: Vec<CMatrix>,
    // defect_{±}[α][β][γ] = g_αβ g_βγ − g_αγ
    defect_plus: Vec<CMatrix>,
    defect_minus: Vec<CMatrix>,
}

impl PointTerms {
    fn new(pair: &CocyclePair, p: usize) -> Self {
        let charts = pair.covering().charts_at(p).to_vec();
        let k = charts.len();
        let mut diff = Vec::with_capacity(k * k);
        for &c in &charts {
            for &d in &charts {
                diff.push(pair.plus.get(c, d, p).unwrap() - pair.minus.get(c, d, p).unwrap());
            }
        }
        let defects = |field: &UnitaryCocycleField| {
            let mut out = Vec::with_capacity(k * k * k);
            for &a in &charts {
                for &b in &charts {
                    let gab = field.get(a, b, p).unwrap();
                    for &c in &charts {
                        out.push(&(gab * field.get(b, c, p).unwrap()) - field.get(a, c, p).unwrap());
                    }
                }
            }
            out
        };
        Self { defect_plus: defects(&pair.plus), defect_minus: defects(&pair.minus), charts, diff }
    }

    fn len(&self) -> usize {
        self.charts.len()
    }
}

fn product_norm(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.frobenius_norm() == 0.0 || b.frobenius_norm() == 0.0 {
        return Ok(0.0);
    }
    operator_norm(&(a * b))
}

/// Right-multiplied sups `max ‖(g_αβ g_βγ − g_αγ)(g⁺_γδ − g⁻_γδ)‖` for each family.
fn right_sups(pair: &CocyclePair) -> Result<(f64, f64)> {
    let per_point = par::try_map_indices(pair.covering().grid().len(), |p| {
        let t = PointTerms::new(pair, p);
        let k = t.len();
        let (mut plus, mut minus): (f64, f64) = (0.0, 0.0);
        for abc in 0..k * k * k {
            let c = abc % k;
            for d in 0..k {
                let diff = &t.diff[c * k + d];
                plus = plus.max(product_norm(&t.defect_plus[abc], diff)?);
                minus = minus.max(product_norm(&t.defect_minus[abc], diff)?);
            }
        }
        Ok((plus, minus))
    })?;
    Ok(per_point.into_iter().fold((0.0, 0.0), |acc, v| (acc.0.max(v.0), acc.1.max(v.1))))
}

pub fn generalized_pair_defect(pair: &CocyclePair) -> Result<PairDefect> {
    let (lhs_plus, lhs_minus) = right_sups(pair)?;
    Ok(PairDefect {
        lhs_plus,
        lhs_minus,
        epsilon: pair.epsilon,
        pass: crate::strictly_below(lhs_plus, pair.epsilon) && crate::strictly_below(lhs_minus, pair.epsilon),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AdjointReport {
    /// `max ‖(g⁺_δα − g⁻_δα)(g±_αβ g±_βγ − g±_αγ)‖` over both families.
    pub lhs_left: f64,
    /// The right-multiplied sup it must equal.
    pub lhs_right: f64,
    pub epsilon: f64,
    pub pass: bool,
    /// `|lhs_left − lhs_right| ≤ 1e-12`
    pub consistent: bool,
}

pub fn check_adjoint_symmetry(pair: &CocyclePair) -> Result<AdjointReport> {
    let lhs_left = par::try_max(pair.covering().grid().len(), |p| {
        let t = PointTerms::new(pair, p);
        let k = t.len();
        let mut best: f64 = 0.0;
        for abc in 0..k * k * k {
            let a = abc / (k * k);
            for d in 0..k {
                let diff = &t.diff[d * k + a];
                best = best.max(product_norm(diff, &t.defect_plus[abc])?);
                best = best.max(product_norm(diff, &t.defect_minus[abc])?);
            }
        }
        Ok(best)
    })?;
    let (rp, rm) = right_sups(pair)?;
    let lhs_right = rp.max(rm);
    Ok(AdjointReport {
        lhs_left,
        lhs_right,
        epsilon: pair.epsilon,
        pass: crate::strictly_below(lhs_left, pair.epsilon),
        consistent: (lhs_left - lhs_right).abs() <= 1e-12,
    })
}

/// `g⁺ = base`, `g⁻ = base · exp(i · strength · H(x))` with random smooth
/// Hermitian directions `‖H‖ ≤ 1`.
///
/// The pair's `ε` is the smallest value above the larger of the two cocycle
/// defects, making both families `ε`-almost cocycles.
pub fn perturb_to_almost_pair(base: &UnitaryCocycleField, strength: f64, seed: u64) -> Result<CocyclePair> {
    if !(0.0..=0.5).contains(&strength) {
        return Err(Error::InvalidStrength(strength));
    }
    let wiggle = random_smooth_field(base.covering.clone(), base.fiber_dim, strength, seed)?;
    let minus = base.pointwise_product(&wiggle)?;
    let eps = cocycle_defect(base)?.max(cocycle_defect(&minus)?);
    CocyclePair::new(base.clone(), minus, epsilon_above(eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::SampleGrid;

    fn torus_cover(n: usize) -> Arc<Covering> {
        let g = Arc::new(SampleGrid::new(SpaceKind::Torus, n).unwrap());
        Arc::new(Covering::default_torus(g).unwrap())
    }

    fn circle_cover() -> Arc<Covering> {
        let g = Arc::new(SampleGrid::new(SpaceKind::Circle, 32).unwrap());
        Arc::new(Covering::new(g, 3, 0.4).unwrap())
    }

    #[test]
    fn identity_field_is_exact() {
        let f = identity_cocycle(circle_cover(), 2);
        for p in 0..32 {
            for &a in f.covering().charts_at(p) {
                for &b in f.covering().charts_at(p) {
                    assert_eq!(f.get(a, b, p).unwrap(), &CMatrix::identity(2));
                }
            }
        }
        assert_eq!(cocycle_defect(&f).unwrap(), 0.0);
        let pair = CocyclePair::new(f.clone(), f, 0.1).unwrap();
        let d = generalized_pair_defect(&pair).unwrap();
        assert_eq!(d.max(), 0.0);
        assert!(d.pass);
    }

    #[test]
    fn inverse_symmetry_is_exact() {
        let f = random_smooth_field(torus_cover(8), 3, 1.0, 9).unwrap();
        for p in 0..64 {
            for &a in f.covering().charts_at(p) {
                assert_eq!(f.get(a, a, p).unwrap(), &CMatrix::identity(3));
                for &b in f.covering().charts_at(p) {
                    assert_eq!(f.get(b, a, p).unwrap(), &f.get(a, b, p).unwrap().adjoint());
                }
            }
        }
    }

    #[test]
    fn non_unitary_values_are_rejected() {
        let r = UnitaryCocycleField::from_fn(circle_cover(), 1, |_, _, _| {
            Ok(CMatrix::from_real_diag(&[1.5]))
        });
        assert!(matches!(r, Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn single_phase_defect() {
        // Replace g_01 at one quadruple-overlap point by e^{0.1 i} g_01.
        let cov = torus_cover(16);
        let target = cov.overlap_points(&[0, 1, 2, 3])[0];
        let f = UnitaryCocycleField::from_fn(cov, 1, |a, b, p| {
            let phase = if (a, b, p) == (0, 1, target) { 0.1 } else { 0.0 };
            Ok(CMatrix::from_diag(&[Complex64::from_polar(1.0, phase)]))
        })
        .unwrap();
        let expected = (Complex64::from_polar(1.0, 0.1) - 1.0).norm();
        assert!((cocycle_defect(&f).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.09996).abs() < 1e-5);
    }

    #[test]
    fn line_bundle_cocycle_is_exact() {
        let f = torus_line_bundle(torus_cover(16), 1).unwrap();
        assert!(cocycle_defect(&f).unwrap() < 1e-13);
        assert!(matches!(torus_line_bundle(circle_cover(), 1), Err(Error::NotTorus)));
    }

    #[test]
    fn equal_families_have_zero_pair_defect() {
        let u = random_smooth_field(torus_cover(12), 2, 1.0, 4).unwrap();
        assert!(cocycle_defect(&u).unwrap() > 0.1);
        let pair = CocyclePair::new(u.clone(), u, 1e-30).unwrap();
        let d = generalized_pair_defect(&pair).unwrap();
        assert_eq!(d.max(), 0.0);
        assert!(d.pass);
        let adj = check_adjoint_symmetry(&pair).unwrap();
        assert_eq!(adj.lhs_left, 0.0);
        assert!(adj.pass && adj.consistent);
    }

    #[test]
    fn exact_families_have_zero_pair_defect() {
        let cov = torus_cover(12);
        let pair = CocyclePair::new(
            torus_line_bundle(cov.clone(), 1).unwrap(),
            identity_cocycle(cov, 1),
            1e-3,
        )
        .unwrap();
        assert!(generalized_pair_defect(&pair).unwrap().max() < 1e-13);
    }

    #[test]
    fn block_pair_is_generalized_but_not_almost() {
        let cov = torus_cover(12);
        let u = random_smooth_field(cov.clone(), 1, 1.0, 17).unwrap();
        let plus = u.direct_sum(&torus_line_bundle(cov.clone(), 1).unwrap()).unwrap();
        let minus = u.direct_sum(&identity_cocycle(cov, 1)).unwrap();
        assert!(cocycle_defect(&plus).unwrap() > 0.1);
        assert!(cocycle_defect(&minus).unwrap() > 0.1);
        let pair = CocyclePair::with_measured_epsilon(plus, minus).unwrap();
        let d = generalized_pair_defect(&pair).unwrap();
        assert!(d.max() < 1e-12, "{d:?}");
        assert!(check_adjoint_symmetry(&pair).unwrap().lhs_left < 1e-12);
    }

    #[test]
    fn adjoint_variant_matches_right_variant() {
        let cov = torus_cover(10);
        let plus = random_smooth_field(cov.clone(), 2, 0.4, 1).unwrap();
        let minus = random_smooth_field(cov, 2, 0.4, 2).unwrap();
        let pair = CocyclePair::with_measured_epsilon(plus, minus).unwrap();
        let adj = check_adjoint_symmetry(&pair).unwrap();
        assert!(adj.lhs_right > 0.0);
        assert!(adj.consistent, "{adj:?}");
        assert!(adj.pass);
    }

    #[test]
    fn perturbation_bounds() {
        let base = identity_cocycle(torus_cover(12), 2);
        let pair = perturb_to_almost_pair(&base, 0.05, 7).unwrap();
        let minus_defect = cocycle_defect(&pair.minus).unwrap();
        assert!(minus_defect > 0.0 && minus_defect <= 3.0 * 0.05, "{minus_defect}");
        let d = generalized_pair_defect(&pair).unwrap();
        assert!(d.max() < 2.0 * pair.epsilon);

        let zero = perturb_to_almost_pair(&base, 0.0, 7).unwrap();
        assert!(generalized_pair_defect(&zero).unwrap().max() < 1e-20);
        for p in 0..144 {
            for &a in base.covering().charts_at(p) {
                for &b in base.covering().charts_at(p) {
                    assert!(zero.minus.get(a, b, p).unwrap().max_abs_diff(base.get(a, b, p).unwrap()) < 1e-15);
                }
            }
        }
        assert!(matches!(perturb_to_almost_pair(&base, 0.6, 1), Err(Error::InvalidStrength(_))));
    }

    #[test]
    fn constant_conjugation_preserves_defect() {
        let cov = torus_cover(10);
        let f = random_smooth_field(cov, 2, 0.8, 3).unwrap();
        let w = random_smooth_field(torus_cover(10), 2, 2.0, 99).unwrap().get(0, 1, 0).unwrap().clone();
        let g = f.conjugated(&w).unwrap();
        assert!((cocycle_defect(&f).unwrap() - cocycle_defect(&g).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn mismatched_pairs_are_rejected() {
        let a = identity_cocycle(torus_cover(8), 1);
        let b = identity_cocycle(torus_cover(8), 2);
        assert!(matches!(CocyclePair::new(a.clone(), b, 0.1), Err(Error::DimensionMismatch { .. })));
        let c = identity_cocycle(torus_cover(10), 1);
        assert!(matches!(CocyclePair::new(a.clone(), c, 0.1), Err(Error::CoveringMismatch)));
        assert!(matches!(CocyclePair::new(a.clone(), a, 0.0), Err(Error::InvalidEpsilon(_))));
    }
}
