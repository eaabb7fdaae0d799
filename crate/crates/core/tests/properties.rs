use std::sync::Arc;

use cocycle_core::assembly::{assemble_all, conjugate_blocks, verify_lemma_chain};
use cocycle_core::cocycle::{identity_cocycle, perturb_to_almost_pair, random_smooth_field, torus_line_bundle, CocyclePair};
use cocycle_core::invariants::{chern_number, chern_number_from_frames, regauge};
use cocycle_core::projection::{extract_projection, ProjectionField};
use cocycle_core::space::{BumpProfile, Covering, PartitionOfUnity, SampleGrid, SpaceKind};
use cocycle_core::spectral::{kato_bound_check, operator_norm, Hermitian, ScalarFunction};
use cocycle_core::{CMatrix, Complex64};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let e = Hermitian::new(random_matrix(rng, n)).unwrap().eig().unwrap();
    let phases: Vec<Complex64> = (0..n).map(|_| Complex64::from_polar(1.0, rng.gen_range(0.0..6.3))).collect();
    &(&e.frame * &CMatrix::from_diag(&phases)) * &e.frame.adjoint()
}

fn torus_pou(n: usize, profile: BumpProfile) -> PartitionOfUnity {
    let g = Arc::new(SampleGrid::new(SpaceKind::Torus, n).unwrap());
    PartitionOfUnity::new(Arc::new(Covering::default_torus(g).unwrap()), profile).unwrap()
}

fn line_projection(pou: &PartitionOfUnity, degree: i64) -> ProjectionField {
    let line = torus_line_bundle(pou.covering().clone(), degree).unwrap();
    let pair = CocyclePair::new(line.clone(), line, 0.01).unwrap();
    extract_projection(&assemble_all(&pair, pou).unwrap().a_plus).unwrap().projection
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn functional_calculus_is_unitarily_covariant(seed in any::<u64>(), n in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = Hermitian::new(random_matrix(&mut rng, n)).unwrap();
        let w = random_unitary(&mut rng, n);
        let conj = Hermitian::new(&(&w * h.as_matrix()) * &w.adjoint()).unwrap();
        for func in [ScalarFunction::Clamp, ScalarFunction::GPoly, ScalarFunction::PosPart, ScalarFunction::AbsVal] {
            let lhs = conj.eig().unwrap().apply(func).unwrap();
            let rhs = &(&w * h.eig().unwrap().apply(func).unwrap().as_matrix()) * &w.adjoint();
            prop_assert!(lhs.as_matrix().max_abs_diff(&rhs) < 1e-10);
        }
    }

    #[test]
    fn g_after_clamp_is_positive_part_of_g(t in -3.0f64..3.0) {
        let lhs = ScalarFunction::GPoly.eval(ScalarFunction::Clamp.eval(t));
        let rhs = ScalarFunction::PosPart.eval(ScalarFunction::GPoly.eval(t));
        prop_assert!((lhs - rhs).abs() < 1e-15);
    }

    #[test]
    fn operator_norm_is_submultiplicative(seed in any::<u64>(), n in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (random_matrix(&mut rng, n), random_matrix(&mut rng, n));
        let ab = operator_norm(&(&a * &b)).unwrap();
        prop_assert!(ab <= operator_norm(&a).unwrap() * operator_norm(&b).unwrap() * (1.0 + 1e-12));
        prop_assert!(operator_norm(&(&a + &b)).unwrap() <= (operator_norm(&a).unwrap() + operator_norm(&b).unwrap()) * (1.0 + 1e-12));
    }

    #[test]
    fn kato_bound_holds(seed in any::<u64>(), n in 1usize..9, scale in 0.0f64..0.1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Hermitian::new(random_matrix(&mut rng, n).scale(1.5)).unwrap();
        let e = Hermitian::new(random_matrix(&mut rng, n)).unwrap();
        let e = e.as_matrix().scale(scale / e.norm().unwrap().max(1e-300));
        let b = Hermitian::new(a.as_matrix() + &e).unwrap();
        prop_assume!(a.norm().unwrap() <= 4.0 && b.norm().unwrap() <= 4.0);
        prop_assert!(kato_bound_check(&a, &b, 4.0).unwrap().pass);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn extraction_is_idempotent(seed in any::<u64>(), strength in 0.0f64..0.3) {
        let pou = torus_pou(8, BumpProfile::Cosine);
        let pair = perturb_to_almost_pair(&identity_cocycle(pou.covering().clone(), 2), strength, seed).unwrap();
        let e = extract_projection(&assemble_all(&pair, &pou).unwrap().q).unwrap();
        let again = extract_projection(e.projection.as_field()).unwrap();
        prop_assert!(again.projection.as_field().distance(e.projection.as_field()).unwrap() < 1e-12);
        prop_assert_eq!(again.projection.rank(), e.projection.rank());
        prop_assert!(e.measured_gap >= e.gap - 1e-9);
        prop_assert!(e.distance <= e.gap_bound + 1e-9);
    }

    #[test]
    fn extraction_is_unitarily_covariant(seed in any::<u64>()) {
        let pou = torus_pou(8, BumpProfile::Cosine);
        let pair = perturb_to_almost_pair(&identity_cocycle(pou.covering().clone(), 1), 0.2, seed).unwrap();
        let a = assemble_all(&pair, &pou).unwrap().a_minus;
        let w = random_unitary(&mut ChaCha8Rng::seed_from_u64(seed ^ 1), 4);
        let p = extract_projection(&a).unwrap().projection;
        let lhs = extract_projection(&conjugate_blocks(&a, &w).unwrap()).unwrap().projection;
        let rhs = conjugate_blocks(p.as_field(), &w).unwrap();
        prop_assert!(lhs.as_field().distance(&rhs).unwrap() < 1e-10);
    }

    #[test]
    fn chern_number_is_gauge_invariant(seed in any::<u64>(), degree in -2i64..=2) {
        let pou = torus_pou(16, BumpProfile::Cosine);
        let p = line_projection(&pou, degree);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gauges: Vec<CMatrix> = (0..p.frames().len()).map(|_| random_unitary(&mut rng, p.rank())).collect();
        let frames = regauge(p.frames(), &gauges).unwrap();
        prop_assert_eq!(chern_number_from_frames(p.grid(), &frames).unwrap(), chern_number(&p).unwrap());
        prop_assert_eq!(chern_number(&p).unwrap().abs(), degree.abs());
    }

    #[test]
    fn chern_number_is_additive(d1 in -2i64..=2, d2 in -2i64..=2) {
        let pou = torus_pou(16, BumpProfile::Cosine);
        let (p1, p2) = (line_projection(&pou, d1), line_projection(&pou, d2));
        let sum = p1.direct_sum(&p2).unwrap();
        prop_assert_eq!(chern_number(&sum).unwrap(), chern_number(&p1).unwrap() + chern_number(&p2).unwrap());
        prop_assert_eq!(sum.rank(), 2);
    }

    #[test]
    fn rank_and_complement_fill_the_fiber(seed in any::<u64>(), n in 1usize..4) {
        let pou = torus_pou(8, BumpProfile::Quadratic);
        let pair = perturb_to_almost_pair(&identity_cocycle(pou.covering().clone(), n), 0.1, seed).unwrap();
        let p = extract_projection(&assemble_all(&pair, &pou).unwrap().q).unwrap().projection;
        let c = p.complement().unwrap();
        prop_assert_eq!(p.rank() + c.rank(), p.dim());
        prop_assert_eq!(chern_number(&p).unwrap(), -chern_number(&c).unwrap());
    }

    #[test]
    fn lemma_measurements_survive_block_conjugation(seed in any::<u64>()) {
        let pou = torus_pou(8, BumpProfile::Cosine);
        let pair = perturb_to_almost_pair(&random_smooth_field(pou.covering().clone(), 2, 0.7, seed).unwrap(), 0.05, seed).unwrap();
        let w = random_unitary(&mut ChaCha8Rng::seed_from_u64(seed ^ 7), 2);
        let conj = CocyclePair::new(pair.plus.conjugated(&w).unwrap(), pair.minus.conjugated(&w).unwrap(), pair.epsilon).unwrap();
        let (r1, r2) = (verify_lemma_chain(&pair, &pou).unwrap(), verify_lemma_chain(&conj, &pou).unwrap());
        for ((name, a), (_, b)) in r1.lemmas.iter().zip(r2.lemmas.iter()) {
            prop_assert!((a.measured - b.measured).abs() < 1e-10, "{}: {} vs {}", name, a.measured, b.measured);
        }
    }
}

#[test]
fn lemma_measurements_shrink_with_strength() {
    let pou = torus_pou(8, BumpProfile::Cosine);
    let base = random_smooth_field(pou.covering().clone(), 2, 0.8, 5).unwrap();
    let reports: Vec<_> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&s| verify_lemma_chain(&perturb_to_almost_pair(&base, s, 9).unwrap(), &pou).unwrap())
        .collect();
    for w in reports.windows(2) {
        for ((name, big), (_, small)) in w[0].lemmas.iter().zip(w[1].lemmas.iter()) {
            if name == "L3" {
                continue;
            }
            assert!(small.measured < big.measured, "{name}: {} !< {}", small.measured, big.measured);
        }
    }
}

#[test]
fn equal_families_give_exact_q() {
    let pou = torus_pou(16, BumpProfile::Cosine);
    let u = random_smooth_field(pou.covering().clone(), 2, 1.0, 3).unwrap();
    let pair = CocyclePair::new(u.clone(), u, 0.01).unwrap();
    let stages = assemble_all(&pair, &pou).unwrap();
    for p in 0..stages.q.len() {
        let q = stages.q.at(p).as_matrix();
        assert!(operator_norm(&(q - &(q * q))).unwrap() <= 1e-10);
    }
    let e = extract_projection(&stages.q).unwrap();
    assert_eq!(e.projection.rank(), 8);
    assert_eq!(chern_number(&e.projection).unwrap(), 0);
}
