//! Almost representations of ℤ² and the cocycle pairs they induce on the torus.
//!
//! The torus is the quotient of ℝ² by ℤ², so chart lifts to ℝ² differ by
//! deck translations on every overlap. Those translations form a locally
//! constant ℤ²-valued cocycle `γ`; composing with a map `π: ℤ² → U(N)` gives
//! transition data `π(γ_αβ)`, exact when `π` is a representation.

use alloc::collections::BTreeSet;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Neg};

use num_complex::Complex64;

use crate::cocycle::{constant_cocycle_from_rep, epsilon_above, CocyclePair, PairDefect};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::space::{Covering, SpaceKind};
use crate::spectral::operator_norm;

/// `a^j b^k` in ℤ² written additively as `(j, k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GroupElement(pub i64, pub i64);

impl GroupElement {
    pub const IDENTITY: Self = GroupElement(0, 0);

    pub fn inverse(self) -> Self {
        -self
    }

    /// Elements with `j > 0`, or `j = 0` and `k ≥ 0`, are evaluated in normal
    /// form; the rest through their inverse.
    fn is_canonical(self) -> bool {
        self.0 > 0 || (self.0 == 0 && self.1 >= 0)
    }
}

impl Add for GroupElement {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        GroupElement(self.0 + rhs.0, self.1 + rhs.1)
    }
}

impl Neg for GroupElement {
    type Output = Self;

    fn neg(self) -> Self {
        GroupElement(-self.0, -self.1)
    }
}

/// A map `π: ℤ² → U(N)` determined by the images `U`, `V` of the generators.
///
/// `π(j, k) = U^j V^k` on canonical elements and `π(g) = π(g⁻¹)*` otherwise,
/// so `π(g⁻¹) = π(g)⁻¹` holds exactly even when `U` and `V` do not commute.
#[derive(Clone, Debug, PartialEq)]
pub struct RepMap {
    u: CMatrix,
    v: CMatrix,
}

impl RepMap {
    pub fn new(u: CMatrix, v: CMatrix) -> Result<Self> {
        let n = u.rows();
        for m in [&u, &v] {
            if m.rows() != n || m.cols() != n {
                return Err(Error::DimensionMismatch { expected: n, found: m.cols() });
            }
            let residual = (&m.gram() - &CMatrix::identity(n)).frobenius_norm();
            if residual > crate::cocycle::UNITARY_TOL {
                return Err(Error::NotUnitary { alpha: 0, beta: 0, point: 0, residual });
            }
        }
        Ok(Self { u, v })
    }

    /// The trivial representation on `C^n`.
    pub fn trivial(n: usize) -> Self {
        Self { u: CMatrix::identity(n), v: CMatrix::identity(n) }
    }

    /// A genuine representation by commuting diagonal phases.
    pub fn diagonal(u_angles: &[f64], v_angles: &[f64]) -> Result<Self> {
        let phases = |a: &[f64]| a.iter().map(|&t| Complex64::from_polar(1.0, t)).collect::<Vec<_>>();
        Self::new(CMatrix::from_diag(&phases(u_angles)), CMatrix::from_diag(&phases(v_angles)))
    }

    pub fn voiculescu(n: usize) -> Self {
        let (u, v) = voiculescu_pair(n);
        Self { u, v }
    }

    pub fn dim(&self) -> usize {
        self.u.rows()
    }

    pub fn generators(&self) -> (&CMatrix, &CMatrix) {
        (&self.u, &self.v)
    }

    pub fn eval(&self, g: GroupElement) -> CMatrix {
        if !g.is_canonical() {
            return self.eval(-g).adjoint();
        }
        let mut out = CMatrix::identity(self.dim());
        for _ in 0..g.0 {
            out = &out * &self.u;
        }
        let v_step = if g.1 >= 0 { self.v.clone() } else { self.v.adjoint() };
        for _ in 0..g.1.unsigned_abs() {
            out = &out * &v_step;
        }
        out
    }

    /// Verifies `π(g⁻¹) = π(g)⁻¹` (within 1e-12).
    pub fn check_inverse(&self, g: GroupElement) -> Result<()> {
        let a = self.eval(g);
        let b = self.eval(-g);
        if (&a * &b).max_abs_diff(&CMatrix::identity(self.dim())) > 1e-12 {
            return Err(Error::InverseViolation(g));
        }
        Ok(())
    }
}

/// Clock and shift: `U = diag(1, ω, …, ω^{n−1})`, `ω = e^{2πi/n}`, and the
/// cyclic shift `V e_k = e_{k+1}`. `‖UV − VU‖ = |ω − 1| = 2 sin(π/n)`.
pub fn voiculescu_pair(n: usize) -> (CMatrix, CMatrix) {
    assert!(n >= 2, "Voiculescu pair needs n ≥ 2");
    let omega = |k: usize| Complex64::from_polar(1.0, core::f64::consts::TAU * k as f64 / n as f64);
    let u = CMatrix::from_diag(&(0..n).map(omega).collect::<Vec<_>>());
    let v = CMatrix::from_fn(n, n, |r, c| {
        if r == (c + 1) % n {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    (u, v)
}

/// Locally constant ℤ²-valued cocycle `γ_αβ(x) = lift_α(x) − lift_β(x)`.
///
/// On the 2×2 torus covering each pairwise overlap has two components with
/// different translations, so values are stored per overlap point.
#[derive(Clone, Debug)]
pub struct ConstantCocycle {
    covering: Arc<Covering>,
    values: Vec<Vec<Option<GroupElement>>>,
}

impl ConstantCocycle {
    /// Deck-translation cocycle of any covering (circle translations live in
    /// the first component).
    pub fn from_lifts(covering: Arc<Covering>) -> Result<Self> {
        let m = covering.chart_count();
        let npts = covering.grid().len();
        let mut values = vec![vec![None; npts]; m * m];
        for p in 0..npts {
            for &a in covering.charts_at(p) {
                for &b in covering.charts_at(p) {
                    let t = covering.translation(a, b, p);
                    values[a * m + b][p] = Some(GroupElement(t[0], t[1]));
                }
            }
        }
        let gamma = Self { covering, values };
        gamma.verify()?;
        Ok(gamma)
    }

    pub fn covering(&self) -> &Arc<Covering> {
        &self.covering
    }

    pub fn get(&self, alpha: usize, beta: usize, p: usize) -> Option<GroupElement> {
        self.values[alpha * self.covering.chart_count() + beta][p]
    }

    /// Distinct values taken anywhere.
    pub fn values(&self) -> BTreeSet<GroupElement> {
        self.values.iter().flatten().flatten().copied().collect()
    }

    /// Exact relation `γ_αβ + γ_βγ = γ_αγ` and `γ_βα = −γ_αβ` on every overlap.
    pub fn verify(&self) -> Result<()> {
        for p in 0..self.covering.grid().len() {
            let charts = self.covering.charts_at(p);
            for &a in charts {
                for &b in charts {
                    let ab = self.get(a, b, p).unwrap();
                    if self.get(b, a, p) != Some(-ab) {
                        return Err(Error::GroupCocycleRelation(a, b, a, p));
                    }
                    for &c in charts {
                        if ab + self.get(b, c, p).unwrap() != self.get(a, c, p).unwrap() {
                            return Err(Error::GroupCocycleRelation(a, b, c, p));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Every `γ_αβ`, every sum `γ_αβ + γ_βγ` on triple overlaps, and their inverses.
    pub fn required_elements(&self) -> BTreeSet<GroupElement> {
        let mut out = BTreeSet::new();
        for p in 0..self.covering.grid().len() {
            let charts = self.covering.charts_at(p);
            for &a in charts {
                for &b in charts {
                    let ab = self.get(a, b, p).unwrap();
                    out.insert(ab);
                    for &c in charts {
                        out.insert(ab + self.get(b, c, p).unwrap());
                    }
                }
            }
        }
        let inverses: Vec<GroupElement> = out.iter().map(|g| -*g).collect();
        out.extend(inverses);
        out
    }
}

/// The deck-translation cocycle of a wrap-around torus covering.
pub fn torus_constant_cocycle(covering: Arc<Covering>) -> Result<ConstantCocycle> {
    if covering.grid().kind() != SpaceKind::Torus {
        return Err(Error::NotTorus);
    }
    ConstantCocycle::from_lifts(covering)
}

/// Finite subset of ℤ² containing the identity and closed under inverses.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteSubset {
    elements: BTreeSet<GroupElement>,
}

impl FiniteSubset {
    pub fn new(elements: impl IntoIterator<Item = GroupElement>) -> Result<Self> {
        let elements: BTreeSet<GroupElement> = elements.into_iter().collect();
        if !elements.contains(&GroupElement::IDENTITY) || elements.iter().any(|g| !elements.contains(&-*g)) {
            return Err(Error::InvalidSubset);
        }
        Ok(Self { elements })
    }

    /// All `(j, k)` with `|j|, |k| ≤ radius`.
    pub fn ball(radius: i64) -> Self {
        let r = radius.max(0);
        let elements = (-r..=r).flat_map(|j| (-r..=r).map(move |k| GroupElement(j, k))).collect();
        Self { elements }
    }

    pub fn contains(&self, g: GroupElement) -> bool {
        self.elements.contains(&g)
    }

    pub fn iter(&self) -> impl Iterator<Item = GroupElement> + '_ {
        self.elements.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RepDefect {
    /// `max ‖(π₊(gh) − π₊(g)π₊(h))(π₊(γ) − π₋(γ))‖`
    pub lhs_plus: f64,
    /// Same with `π₋` in the first factor.
    pub lhs_minus: f64,
}

impl RepDefect {
    pub fn lhs(&self) -> f64 {
        self.lhs_plus.max(self.lhs_minus)
    }

    pub fn pass(&self, epsilon: f64) -> bool {
        crate::strictly_below(self.lhs(), epsilon)
    }
}

fn check_dims(plus: &RepMap, minus: &RepMap) -> Result<()> {
    if plus.dim() != minus.dim() {
        return Err(Error::RepDimension { expected: plus.dim(), found: minus.dim() });
    }
    Ok(())
}

fn pair_term(plus: &RepMap, minus: &RepMap, g: GroupElement, h: GroupElement, c: GroupElement) -> Result<(f64, f64)> {
    let diff = &plus.eval(c) - &minus.eval(c);
    if diff.frobenius_norm() == 0.0 {
        return Ok((0.0, 0.0));
    }
    let term = |rep: &RepMap| -> Result<f64> {
        let e = &rep.eval(g + h) - &(&rep.eval(g) * &rep.eval(h));
        if e.frobenius_norm() == 0.0 {
            return Ok(0.0);
        }
        operator_norm(&(&e * &diff))
    };
    Ok((term(plus)?, term(minus)?))
}

/// Defect of a pair of generalized representations over `F³`.
pub fn generalized_rep_defect(plus: &RepMap, minus: &RepMap, subset: &FiniteSubset) -> Result<RepDefect> {
    check_dims(plus, minus)?;
    for g in subset.iter() {
        plus.check_inverse(g)?;
        minus.check_inverse(g)?;
    }
    let elems: Vec<GroupElement> = subset.iter().collect();
    let diffs: Vec<CMatrix> = elems.iter().map(|&c| &plus.eval(c) - &minus.eval(c)).collect();
    let defects = |rep: &RepMap| -> Vec<CMatrix> {
        let images: Vec<CMatrix> = elems.iter().map(|&g| rep.eval(g)).collect();
        let mut out = Vec::with_capacity(elems.len() * elems.len());
        for (i, &g) in elems.iter().enumerate() {
            for (j, &h) in elems.iter().enumerate() {
                out.push(&rep.eval(g + h) - &(&images[i] * &images[j]));
            }
        }
        out
    };
    let (dp, dm) = (defects(plus), defects(minus));
    let norm = |a: &CMatrix, b: &CMatrix| -> Result<f64> {
        if a.frobenius_norm() == 0.0 || b.frobenius_norm() == 0.0 {
            Ok(0.0)
        } else {
            operator_norm(&(a * b))
        }
    };
    let (mut lhs_plus, mut lhs_minus): (f64, f64) = (0.0, 0.0);
    for (e_plus, e_minus) in dp.iter().zip(&dm) {
        for diff in &diffs {
            lhs_plus = lhs_plus.max(norm(e_plus, diff)?);
            lhs_minus = lhs_minus.max(norm(e_minus, diff)?);
        }
    }
    Ok(RepDefect { lhs_plus, lhs_minus })
}

/// The representation-level defect restricted to the `(γ_αβ, γ_βγ, γ_γδ)`
/// triples that occur on quadruple overlaps.
pub fn restricted_rep_defect(plus: &RepMap, minus: &RepMap, gamma: &ConstantCocycle) -> Result<RepDefect> {
    check_dims(plus, minus)?;
    let mut occurring = BTreeSet::new();
    let cov = gamma.covering();
    for p in 0..cov.grid().len() {
        let charts = cov.charts_at(p);
        for &a in charts {
            for &b in charts {
                for &c in charts {
                    for &d in charts {
                        occurring.insert((
                            gamma.get(a, b, p).unwrap(),
                            gamma.get(b, c, p).unwrap(),
                            gamma.get(c, d, p).unwrap(),
                        ));
                    }
                }
            }
        }
    }
    let (mut lhs_plus, mut lhs_minus): (f64, f64) = (0.0, 0.0);
    for (g, h, c) in occurring {
        let (tp, tm) = pair_term(plus, minus, g, h, c)?;
        lhs_plus = lhs_plus.max(tp);
        lhs_minus = lhs_minus.max(tm);
    }
    Ok(RepDefect { lhs_plus, lhs_minus })
}

/// A cocycle pair induced from a pair of generalized representations.
#[derive(Clone, Debug)]
pub struct InducedPair {
    pub pair: CocyclePair,
    /// Defect over all of `F³`.
    pub rep_defect: RepDefect,
}

/// `(π₊(γ_αβ), π₋(γ_αβ))`. The pair's `ε` is the smallest value above the
/// representation-level defect over `F`.
pub fn induce_pair(
    plus: &RepMap,
    minus: &RepMap,
    gamma: &ConstantCocycle,
    subset: &FiniteSubset,
) -> Result<InducedPair> {
    check_dims(plus, minus)?;
    let missing: Vec<GroupElement> =
        gamma.required_elements().into_iter().filter(|g| !subset.contains(*g)).collect();
    if !missing.is_empty() {
        return Err(Error::SubsetTooSmall(missing));
    }
    let rep_defect = generalized_rep_defect(plus, minus, subset)?;
    let pair = CocyclePair::new(
        constant_cocycle_from_rep(gamma, plus)?,
        constant_cocycle_from_rep(gamma, minus)?,
        epsilon_above(rep_defect.lhs()),
    )?;
    Ok(InducedPair { pair, rep_defect })
}

impl InducedPair {
    pub fn pair_defect(&self) -> Result<PairDefect> {
        crate::cocycle::generalized_pair_defect(&self.pair)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::{cocycle_defect, generalized_pair_defect, identity_cocycle};
    use crate::space::SampleGrid;

    fn torus_cover(n: usize) -> Arc<Covering> {
        let g = Arc::new(SampleGrid::new(SpaceKind::Torus, n).unwrap());
        Arc::new(Covering::default_torus(g).unwrap())
    }

    fn commutator_norm(n: usize) -> f64 {
        let (u, v) = voiculescu_pair(n);
        operator_norm(&(&(&u * &v) - &(&v * &u))).unwrap()
    }

    #[test]
    fn voiculescu_commutator() {
        assert!((commutator_norm(2) - 2.0).abs() < 1e-12);
        assert!((commutator_norm(4) - 2f64.sqrt()).abs() < 1e-12);
        let mut last = f64::INFINITY;
        for n in 2..=64 {
            let c = commutator_norm(n);
            assert!((c - 2.0 * (core::f64::consts::PI / n as f64).sin()).abs() < 1e-12, "n={n}");
            assert!(c < last);
            last = c;
        }
    }

    #[test]
    fn evaluation_respects_inverses() {
        let rep = RepMap::voiculescu(5);
        for j in -3..=3 {
            for k in -3..=3 {
                rep.check_inverse(GroupElement(j, k)).unwrap();
            }
        }
        assert_eq!(rep.eval(GroupElement::IDENTITY), CMatrix::identity(5));
        let (u, v) = rep.generators();
        assert_eq!(rep.eval(GroupElement(1, 1)), u * v);
        assert_eq!(rep.eval(GroupElement(-1, 1)), (u * &v.adjoint()).adjoint());
    }

    #[test]
    fn torus_translations() {
        let cov = torus_cover(32);
        let gamma = torus_constant_cocycle(cov.clone()).unwrap();
        // Charts 0 and 1 are horizontal neighbours: the inner strip is
        // non-wrapping, the strip at x = 0 wraps.
        let inner = 16 + 32 * 8; // (0.5, 0.25)
        let outer = 32 * 8; // (0.0, 0.25)
        assert_eq!(gamma.get(0, 1, inner), Some(GroupElement(0, 0)));
        assert_eq!(gamma.get(0, 1, outer), Some(GroupElement(-1, 0)));
        assert_eq!(gamma.get(1, 0, outer), Some(GroupElement(1, 0)));
        assert_eq!(gamma.get(0, 2, 8), Some(GroupElement(0, -1)));
        assert_eq!(gamma.get(3, 0, 0), Some(GroupElement(1, 1)));
        assert_eq!(gamma.get(0, 3, 16 + 32 * 16), Some(GroupElement(0, 0)));
        gamma.verify().unwrap();
        assert!(gamma.values().iter().all(|g| g.0.abs() <= 1 && g.1.abs() <= 1));
    }

    #[test]
    fn circle_is_not_a_torus_covering() {
        let g = Arc::new(SampleGrid::new(SpaceKind::Circle, 16).unwrap());
        let cov = Arc::new(Covering::new(g, 3, 0.4).unwrap());
        assert!(matches!(torus_constant_cocycle(cov.clone()), Err(Error::NotTorus)));
        let gamma = ConstantCocycle::from_lifts(cov).unwrap();
        assert!(gamma.values().contains(&GroupElement(1, 0)));
    }

    #[test]
    fn rep_defect_degenerate_cases() {
        let f = FiniteSubset::ball(2);
        let v = RepMap::voiculescu(4);
        assert_eq!(generalized_rep_defect(&v, &v, &f).unwrap().lhs(), 0.0);
        let a = RepMap::diagonal(&[0.3, 1.1], &[2.0, -0.4]).unwrap();
        let b = RepMap::trivial(2);
        assert!(generalized_rep_defect(&a, &b, &f).unwrap().lhs() < 1e-14);
        assert!(matches!(
            generalized_rep_defect(&v, &b, &f),
            Err(Error::RepDimension { expected: 4, found: 2 })
        ));
    }

    #[test]
    fn subsets_must_be_symmetric() {
        assert!(FiniteSubset::new([GroupElement(0, 0), GroupElement(1, 0)]).is_err());
        assert!(FiniteSubset::new([GroupElement(1, 0), GroupElement(-1, 0)]).is_err());
        assert_eq!(FiniteSubset::ball(2).len(), 25);
    }

    #[test]
    fn induced_pairs() {
        let cov = torus_cover(16);
        let gamma = torus_constant_cocycle(cov.clone()).unwrap();
        let f = FiniteSubset::ball(2);

        let trivial = induce_pair(&RepMap::trivial(2), &RepMap::trivial(2), &gamma, &f).unwrap();
        assert_eq!(cocycle_defect(&trivial.pair.plus).unwrap(), 0.0);
        for p in 0..256 {
            for &a in cov.charts_at(p) {
                for &b in cov.charts_at(p) {
                    assert_eq!(
                        trivial.pair.plus.get(a, b, p),
                        identity_cocycle(cov.clone(), 2).get(a, b, p)
                    );
                }
            }
        }

        let genuine = RepMap::diagonal(&[0.7], &[-1.9]).unwrap();
        let exact = induce_pair(&genuine, &RepMap::trivial(1), &gamma, &f).unwrap();
        assert!(cocycle_defect(&exact.pair.plus).unwrap() < 1e-14);

        let v = RepMap::voiculescu(8);
        let same = induce_pair(&v, &v, &gamma, &f).unwrap();
        assert_eq!(generalized_pair_defect(&same.pair).unwrap().max(), 0.0);
        let d = cocycle_defect(&same.pair.plus).unwrap();
        assert!(d > 0.0 && d <= 2.0 * (core::f64::consts::PI / 8.0).sin() + 1e-12);

        let mixed = induce_pair(&v, &RepMap::trivial(8), &gamma, &f).unwrap();
        let pair_defect = mixed.pair_defect().unwrap();
        let restricted = restricted_rep_defect(&v, &RepMap::trivial(8), &gamma).unwrap();
        assert!((pair_defect.lhs_plus - restricted.lhs_plus).abs() < 1e-14);
        assert!((pair_defect.lhs_minus - restricted.lhs_minus).abs() < 1e-14);
        assert!(pair_defect.max() <= mixed.rep_defect.lhs());
        assert!(pair_defect.max() > 0.0);
        assert!(pair_defect.pass);
    }

    #[test]
    fn too_small_subsets_are_rejected() {
        let gamma = torus_constant_cocycle(torus_cover(16)).unwrap();
        let only_identity = FiniteSubset::new([GroupElement::IDENTITY]).unwrap();
        match induce_pair(&RepMap::trivial(1), &RepMap::trivial(1), &gamma, &only_identity) {
            Err(Error::SubsetTooSmall(missing)) => assert!(missing.contains(&GroupElement(1, 1))),
            other => panic!("unexpected {other:?}"),
        }
    }
}
