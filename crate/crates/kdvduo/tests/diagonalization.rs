use kdvduo::diagonalization::{
    compute_decoupling, conjugation_defect, from_diagonal, to_diagonal, solve_forward_via_diagonalization,
    transform_boundary_and_sources,
};
use kdvduo::linear::solve_forward_linear;
use kdvduo::mms::{coupled_problem, Profile};
use kdvduo::{BoundaryData, Grid, SourcePair, StatePair, SystemParams, ValidatedParams};
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_params(rng: &mut ChaCha8Rng) -> ValidatedParams {
    let b: f64 = rng.random_range(0.05..10.0);
    let c = rng.random_range(0.05..10.0);
    let a = rng.random_range(-0.99..0.99) / b.sqrt();
    SystemParams::new(a, b, c, rng.random_range(0.0..2.0)).validate().unwrap()
}

#[test]
fn conjugation_is_exact_for_random_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let p = random_params(&mut rng);
        let d = compute_decoupling(&p).unwrap();
        assert!(conjugation_defect(&p, &d) <= 1e-12, "{p:?}");
        assert!(d.alpha_plus >= d.alpha_minus && d.alpha_minus > 0.0);
        assert!((d.alpha_plus * d.alpha_minus - p.gap() / p.c).abs() < 1e-10 * d.alpha_plus * d.alpha_plus);
    }
}

#[test]
fn uncoupled_case_is_the_identity() {
    let p = SystemParams::new(0.0, 1.0, 3.0, 1.0).validate().unwrap();
    let d = compute_decoupling(&p).unwrap();
    assert_eq!(d.m, [[1.0, 0.0], [0.0, 1.0]]);
    assert_eq!(d.coefficients(), [1.0, 1.0 / 3.0]);
}

proptest! {
    #[test]
    fn state_round_trip(a in -0.9f64..0.9, c in 0.1f64..5.0, u in prop::collection::vec(-5.0f64..5.0, 8)) {
        let p = SystemParams::new(a, 1.0, c, 0.5).validate().unwrap();
        let d = compute_decoupling(&p).unwrap();
        let s = StatePair::new(u.clone(), u.iter().rev().copied().collect());
        let back = from_diagonal(&to_diagonal(&s, &d).unwrap(), &d).unwrap();
        prop_assert!(back.sub(&s).max_abs() < 1e-10 * (1.0 + s.max_abs()));
    }
}

#[test]
fn mismatched_lengths_are_rejected() {
    let p = SystemParams::new(0.3, 1.0, 1.0, 1.0).validate().unwrap();
    let d = compute_decoupling(&p).unwrap();
    assert!(to_diagonal(&StatePair::new(vec![0.0; 3], vec![0.0; 4]), &d).is_err());
    let g = Grid::new(1.0, 1.0, 11, 10).unwrap();
    let mut bd = BoundaryData::zeros(g.nt);
    bd.g1.pop();
    assert!(transform_boundary_and_sources(&bd, &SourcePair::zeros(&g), &d).is_err());
}

#[test]
fn forced_problem_matches_monolithic_solver() {
    let p = SystemParams::new(0.5, 1.0, 1.0, 1.0).validate().unwrap();
    let g = Grid::new(1.0, 1.0, 101, 1000).unwrap();
    let (init, bd, src) = coupled_problem(&p, &g, Profile::Sine2, Profile::Cosine);
    let (a, _) = solve_forward_linear(&p, &g, &init, &bd, Some(&src)).unwrap();
    let b = solve_forward_via_diagonalization(&p, &g, &init, &bd, Some(&src)).unwrap();
    let d = a.slices.iter().zip(&b.trajectory.slices).map(|(x, y)| x.sub(y).max_abs()).fold(0.0, f64::max);
    assert!(d < 1e-3, "{d}");
    assert!(b.iterations > 1 && b.residual <= 1e-10);
}
