//! Hermitian spectral calculus.
//!
//! The eigensolver reduces a Hermitian matrix to real symmetric tridiagonal
//! form with Householder reflections, rotates the off-diagonal phases away,
//! and finishes with implicit QL iterations. Functional calculus is then
//! `F · fn(Λ) · F*` on the resulting orthonormal frame.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Eigenvalues outside `[0, 1]` by at most this much are clamped before `κ`.
pub const KAPPA_WINDOW: f64 = 1e-10;

/// Eigenvalues this close to 0 or 1 are rounding noise of an exact 0 or 1.
/// `κ` sends them to 0, since `√(t − t²)` would amplify `1e-16` to `1e-8`.
pub const EIGEN_NOISE: f64 = 1e-13;

/// A square matrix that is exactly selfadjoint.
///
/// Construction goes through `(M + M*) / 2`; the distance between the input
/// and its Hermitian part is kept as [`Hermitian::ingest_residual`].
#[derive(Clone, Debug, PartialEq)]
pub struct Hermitian {
    matrix: CMatrix,
    ingest_residual: f64,
}

impl Hermitian {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch { expected: matrix.rows(), found: matrix.cols() });
        }
        if !matrix.is_finite() {
            return Err(Error::NonFinite);
        }
        if matrix.is_exactly_hermitian() {
            return Ok(Self { matrix, ingest_residual: 0.0 });
        }
        let sym = matrix.hermitian_part();
        let ingest_residual = sym.max_abs_diff(&matrix);
        Ok(Self { matrix: sym, ingest_residual })
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        Self { matrix: CMatrix::from_real_diag(diag), ingest_residual: 0.0 }
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: CMatrix::identity(n), ingest_residual: 0.0 }
    }

    pub fn zeros(n: usize) -> Self {
        Self { matrix: CMatrix::zeros(n, n), ingest_residual: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Largest entrywise change made by symmetrization on ingest.
    pub fn ingest_residual(&self) -> f64 {
        self.ingest_residual
    }

    pub fn eig(&self) -> Result<Eigen> {
        hermitian_eig(self)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        hermitian_eigenvalues(self)
    }

    /// Operator norm, i.e. the spectral radius.
    pub fn norm(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.iter().fold(0.0, |acc, v| acc.max(v.abs())))
    }
}

/// Eigen-decomposition `H = F Λ F*` with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns.
    pub frame: CMatrix,
}

impl Eigen {
    /// `F · diag(f(λ)) · F*`.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Hermitian {
        let mapped: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        Hermitian { matrix: conjugate_diag(&self.frame, &mapped), ingest_residual: 0.0 }
    }

    pub fn apply(&self, func: ScalarFunction) -> Result<Hermitian> {
        if func == ScalarFunction::Kappa {
            if let Some(&bad) = self
                .values
                .iter()
                .find(|&&v| !(-KAPPA_WINDOW..=1.0 + KAPPA_WINDOW).contains(&v))
            {
                return Err(Error::SpectrumOutOfDomain(bad));
            }
        }
        Ok(self.map(|t| func.eval(t)))
    }

    /// Columns of the frame whose eigenvalue exceeds `cut`.
    pub fn frame_above(&self, cut: f64) -> CMatrix {
        let keep: Vec<usize> = (0..self.values.len()).filter(|&i| self.values[i] > cut).collect();
        let n = self.frame.rows();
        CMatrix::from_fn(n, keep.len(), |r, c| self.frame[(r, keep[c])])
    }

    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

/// `F · diag(d) · F*`, exactly Hermitian.
fn conjugate_diag(frame: &CMatrix, diag: &[f64]) -> CMatrix {
    let n = frame.rows();
    let k = frame.cols();
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut s = Complex64::zero();
            for (c, &d) in diag.iter().enumerate().take(k) {
                if d != 0.0 {
                    s += frame[(i, c)] * frame[(j, c)].conj() * d;
                }
            }
            out[(i, j)] = s;
            out[(j, i)] = s.conj();
        }
        out[(i, i)] = Complex64::new(out[(i, i)].re, 0.0);
    }
    out
}

/// The scalar functions used by the assembly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalarFunction {
    /// 0 below 0, identity on [0, 1], 1 above 1.
    Clamp,
    /// `t - t²`
    GPoly,
    /// `t (t - t²)`
    HPoly,
    /// `√(t - t²)` on [0, 1]
    Kappa,
    /// `max(t, 0)`
    PosPart,
    AbsVal,
}

impl ScalarFunction {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            ScalarFunction::Clamp => t.clamp(0.0, 1.0),
            ScalarFunction::GPoly => t - t * t,
            ScalarFunction::HPoly => t * (t - t * t),
            ScalarFunction::Kappa => {
                let s = t.clamp(0.0, 1.0);
                if !(EIGEN_NOISE..=1.0 - EIGEN_NOISE).contains(&s) {
                    return 0.0;
                }
                (s - s * s).sqrt()
            }
            ScalarFunction::PosPart => t.max(0.0),
            ScalarFunction::AbsVal => t.abs(),
        }
    }
}

pub fn apply_scalar_function(h: &Hermitian, func: ScalarFunction) -> Result<Hermitian> {
    h.eig()?.apply(func)
}

/// Largest singular value.
pub fn operator_norm(m: &CMatrix) -> Result<f64> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    if m.rows() == 0 || m.cols() == 0 {
        return Ok(0.0);
    }
    if m.is_exactly_hermitian() {
        let h = Hermitian { matrix: m.clone(), ingest_residual: 0.0 };
        return h.norm();
    }
    // Work with the smaller Gram matrix.
    let gram = if m.rows() < m.cols() { m.adjoint().gram() } else { m.gram() };
    let top = hermitian_eigenvalues(&Hermitian { matrix: gram, ingest_residual: 0.0 })?
        .last()
        .copied()
        .unwrap_or(0.0);
    Ok(top.max(0.0).sqrt())
}

pub fn hermitian_eig(h: &Hermitian) -> Result<Eigen> {
    let (values, frame) = decompose(h.as_matrix(), true)?;
    Ok(Eigen { values, frame: frame.expect("vectors requested") })
}

pub fn hermitian_eigenvalues(h: &Hermitian) -> Result<Vec<f64>> {
    Ok(decompose(h.as_matrix(), false)?.0)
}

fn decompose(m: &CMatrix, want_vectors: bool) -> Result<(Vec<f64>, Option<CMatrix>)> {
    let n = m.rows();
    if n == 0 {
        return Ok((Vec::new(), want_vectors.then(|| CMatrix::zeros(0, 0))));
    }
    let (mut diag, mut offdiag, mut frame) = tridiagonalize(m, want_vectors);
    tql2(&mut diag, &mut offdiag, frame.as_mut())?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diag[a].partial_cmp(&diag[b]).unwrap_or(core::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| diag[i]).collect();
    let frame = frame.map(|f| CMatrix::from_fn(n, n, |r, c| f[(r, order[c])]));
    Ok((values, frame))
}

/// Householder reduction of a Hermitian matrix to a real symmetric tridiagonal
/// matrix `T = W* A W`.
///
/// Returns the diagonal, the off-diagonal in the layout `tql2` expects
/// (`e[i]` couples `i` and `i + 1`, `e[n-1] = 0`), and `W` when requested.
fn tridiagonalize(m: &CMatrix, want_vectors: bool) -> (Vec<f64>, Vec<f64>, Option<CMatrix>) {
    let n = m.rows();
    let mut a = m.clone();
    let mut q = want_vectors.then(|| CMatrix::identity(n));
    let mut v = vec![Complex64::zero(); n];
    let mut p = vec![Complex64::zero(); n];

    for k in 0..n.saturating_sub(2) {
        let lo = k + 1;
        let len = n - lo;
        let x0 = a[(lo, k)];
        let tail: f64 = (lo + 1..n).map(|i| a[(i, k)].norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let alpha = (x0.norm_sqr() + tail).sqrt();
        let x0_abs = x0.norm();
        let phase = if x0_abs > 0.0 { x0 / x0_abs } else { Complex64::new(1.0, 0.0) };

        v[0] = x0 + phase * alpha;
        for i in 1..len {
            v[i] = a[(lo + i, k)];
        }
        let h = 2.0 * alpha * (alpha + x0_abs);
        let c = 2.0 / h;

        // p = c A v on the trailing block.
        for i in 0..len {
            let mut s = Complex64::zero();
            for j in 0..len {
                s += a[(lo + i, lo + j)] * v[j];
            }
            p[i] = s * c;
        }
        let vp: Complex64 = (0..len).map(|i| v[i].conj() * p[i]).sum();
        let kk = 0.5 * c * vp.re;
        for i in 0..len {
            p[i] -= v[i] * kk;
        }
        // A <- A - v w* - w v*
        for i in 0..len {
            for j in 0..len {
                let delta = v[i] * p[j].conj() + p[i] * v[j].conj();
                a[(lo + i, lo + j)] -= delta;
            }
            a[(lo + i, lo + i)] = Complex64::new(a[(lo + i, lo + i)].re, 0.0);
        }
        let beta = -phase * alpha;
        a[(lo, k)] = beta;
        a[(k, lo)] = beta.conj();
        for i in lo + 1..n {
            a[(i, k)] = Complex64::zero();
            a[(k, i)] = Complex64::zero();
        }

        if let Some(q) = q.as_mut() {
            for r in 0..n {
                let mut t = Complex64::zero();
                for i in 0..len {
                    t += q[(r, lo + i)] * v[i];
                }
                let t = t * c;
                for i in 0..len {
                    q[(r, lo + i)] -= t * v[i].conj();
                }
            }
        }
    }

    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    let mut offdiag = vec![0.0; n];
    // Rotate the complex off-diagonal onto the positive reals: D* T D.
    let mut phase = Complex64::new(1.0, 0.0);
    let mut phases = vec![phase; n];
    for i in 0..n - 1 {
        let e = a[(i + 1, i)];
        let r = e.norm();
        offdiag[i] = r;
        if r > 0.0 {
            phase *= e / r;
        }
        phases[i + 1] = phase;
    }
    if let Some(q) = q.as_mut() {
        for r in 0..n {
            for (c, ph) in phases.iter().enumerate() {
                q[(r, c)] *= ph;
            }
        }
    }
    (diag, offdiag, q)
}

/// Implicit QL with Wilkinson shifts on a real symmetric tridiagonal matrix,
/// applying the rotations to the columns of `z` when present.
fn tql2(d: &mut [f64], e: &mut [f64], mut z: Option<&mut CMatrix>) -> Result<()> {
    let n = d.len();
    let eps = f64::EPSILON;
    let max_iter = 30 * n.max(1);
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > max_iter {
                    return Err(Error::NoConvergence(max_iter));
                }
                let g0 = d[l];
                let mut p = (d[l + 1] - g0) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g0 - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = z.as_deref_mut() {
                        for k in 0..n {
                            let zi1 = z[(k, i + 1)];
                            let zi = z[(k, i)];
                            z[(k, i + 1)] = zi * s + zi1 * c;
                            z[(k, i)] = zi * c - zi1 * s;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Outcome of comparing positive parts of two selfadjoint matrices against
/// the bound `2 ln(16 m) √δ`, `δ = ‖a − b‖`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct KatoReport {
    pub lhs: f64,
    pub rhs: f64,
    pub delta: f64,
    pub pass: bool,
}

pub fn kato_bound_check(a: &Hermitian, b: &Hermitian, m: f64) -> Result<KatoReport> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    if !(m >= 1.0) {
        return Err(Error::KatoHypothesis(format!("bound parameter m = {m} must be at least 1")));
    }
    let (na, nb) = (a.norm()?, b.norm()?);
    if na > m || nb > m {
        return Err(Error::KatoHypothesis(format!("norms {na} and {nb} must not exceed m = {m}")));
    }
    let delta = operator_norm(&(a.as_matrix() - b.as_matrix()))?;
    if delta > 1.0 {
        return Err(Error::KatoHypothesis(format!("‖a − b‖ = {delta} exceeds 1")));
    }
    let pa = apply_scalar_function(a, ScalarFunction::PosPart)?;
    let pb = apply_scalar_function(b, ScalarFunction::PosPart)?;
    let lhs = operator_norm(&(pa.as_matrix() - pb.as_matrix()))?;
    let rhs = 2.0 * (16.0 * m).ln() * delta.sqrt();
    let pass = lhs < rhs || (delta == 0.0 && lhs <= crate::ROUNDOFF_FLOOR);
    Ok(KatoReport { lhs, rhs, delta, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> Hermitian {
        let m = CMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        Hermitian::new(m).unwrap()
    }

    fn residuals(h: &Hermitian, e: &Eigen) -> (f64, f64) {
        let rebuilt = conjugate_diag(&e.frame, &e.values);
        let recon = (h.as_matrix() - &rebuilt).frobenius_norm();
        let ortho = (&e.frame.gram() - &CMatrix::identity(h.dim())).frobenius_norm();
        (recon, ortho)
    }

    #[test]
    fn diagonal_input_gives_sorted_values_and_permutation_frame() {
        let h = Hermitian::from_real_diag(&[3.0, 1.0, 2.0]);
        let e = h.eig().unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
        for c in 0..3 {
            let nonzero = (0..3).filter(|&r| e.frame[(r, c)].norm() > 0.5).count();
            assert_eq!(nonzero, 1);
        }
    }

    #[test]
    fn pauli_x_eigenvalues() {
        let m = CMatrix::from_fn(2, 2, |r, c| Complex64::new(if r != c { 1.0 } else { 0.0 }, 0.0));
        let e = Hermitian::new(m).unwrap().eig().unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-15);
        assert!((e.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_hermitian_residuals_are_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 3, 8, 17, 40] {
            let h = random_hermitian(&mut rng, n);
            let e = h.eig().unwrap();
            let (recon, ortho) = residuals(&h, &e);
            let scale = h.norm().unwrap().max(1.0);
            assert!(recon <= 1e-10 * scale, "n={n} recon={recon}");
            assert!(ortho <= 1e-10, "n={n} ortho={ortho}");
            let values_only = h.eigenvalues().unwrap();
            for (a, b) in values_only.iter().zip(&e.values) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_spectrum_is_handled() {
        // A rank-2 projection in dimension 5 conjugated by a dense unitary.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = random_hermitian(&mut rng, 5).eig().unwrap().frame;
        let p = conjugate_diag(&w, &[1.0, 0.0, 1.0, 0.0, 0.0]);
        let h = Hermitian::new(p).unwrap();
        let e = h.eig().unwrap();
        assert!(e.values[..3].iter().all(|v| v.abs() < 1e-14));
        assert!(e.values[3..].iter().all(|v| (v - 1.0).abs() < 1e-14));
        let (recon, ortho) = residuals(&h, &e);
        assert!(recon < 1e-13 && ortho < 1e-13);
    }

    #[test]
    fn ingest_symmetrizes() {
        let m = CMatrix::from_vec(
            2,
            2,
            vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.2),
                Complex64::new(1.0, 0.0),
                Complex64::new(2.0, 0.0),
            ],
        )
        .unwrap();
        let h = Hermitian::new(m).unwrap();
        assert!(h.as_matrix().is_exactly_hermitian());
        assert!((h.ingest_residual() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn scalar_functions_on_diagonals() {
        let h = Hermitian::from_real_diag(&[-0.2, 0.5, 1.3]);
        let b = apply_scalar_function(&h, ScalarFunction::Clamp).unwrap();
        assert!(b.as_matrix().max_abs_diff(&CMatrix::from_real_diag(&[0.0, 0.5, 1.0])) < 1e-15);

        let k = apply_scalar_function(&Hermitian::from_real_diag(&[0.25]), ScalarFunction::Kappa).unwrap();
        assert!((k.as_matrix()[(0, 0)].re - 0.1875f64.sqrt()).abs() < 1e-15);
        assert!((k.as_matrix()[(0, 0)].re - 0.43301).abs() < 1e-5);

        assert!(matches!(
            apply_scalar_function(&h, ScalarFunction::Kappa),
            Err(Error::SpectrumOutOfDomain(_))
        ));
        // Rounding leaks just outside [0, 1] are clamped.
        let leak = Hermitian::from_real_diag(&[-5e-11, 1.0 + 5e-11]);
        let k = apply_scalar_function(&leak, ScalarFunction::Kappa).unwrap();
        assert_eq!(k.as_matrix().frobenius_norm(), 0.0);
        assert_eq!(ScalarFunction::Kappa.eval(1e-16), 0.0);
        assert!(ScalarFunction::Kappa.eval(1e-12) > 9e-7);
    }

    #[test]
    fn g_vanishes_on_projections() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = random_hermitian(&mut rng, 4).eig().unwrap().frame;
        let p = Hermitian::new(conjugate_diag(&w, &[1.0, 1.0, 0.0, 0.0])).unwrap();
        let g = apply_scalar_function(&p, ScalarFunction::GPoly).unwrap();
        assert!(operator_norm(g.as_matrix()).unwrap() < 1e-14);
    }

    #[test]
    fn operator_norm_examples() {
        assert_eq!(operator_norm(&CMatrix::identity(3)).unwrap(), 1.0);
        assert_eq!(operator_norm(&CMatrix::from_real_diag(&[2.0, -5.0])).unwrap(), 5.0);
        let mut bad = CMatrix::identity(2);
        bad[(0, 1)] = Complex64::new(f64::NAN, 0.0);
        assert_eq!(operator_norm(&bad), Err(Error::NonFinite));
        // rectangular
        let col = CMatrix::from_fn(3, 1, |_, _| Complex64::new(1.0, 0.0));
        assert!((operator_norm(&col).unwrap() - 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn kato_examples() {
        let a = Hermitian::from_real_diag(&[1.0, -1.0]);
        let r = kato_bound_check(&a, &a, 2.0).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.pass);

        let r = kato_bound_check(
            &Hermitian::from_real_diag(&[0.5]),
            &Hermitian::from_real_diag(&[-0.5]),
            1.0,
        )
        .unwrap();
        assert!((r.lhs - 0.5).abs() < 1e-15);
        assert!((r.rhs - 2.0 * 16f64.ln()).abs() < 1e-12);
        assert!((r.rhs - 5.545).abs() < 1e-3);
        assert!(r.pass);
    }

    #[test]
    fn kato_hypothesis_violations_are_reported() {
        let big = Hermitian::from_real_diag(&[3.0]);
        let small = Hermitian::from_real_diag(&[2.9]);
        assert!(matches!(kato_bound_check(&big, &small, 2.0), Err(Error::KatoHypothesis(_))));
        let far = Hermitian::from_real_diag(&[-1.0]);
        assert!(matches!(kato_bound_check(&big, &far, 4.0), Err(Error::KatoHypothesis(_))));
        assert!(matches!(kato_bound_check(&far, &far, 0.5), Err(Error::KatoHypothesis(_))));
    }
}
