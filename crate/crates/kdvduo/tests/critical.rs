use std::f64::consts::PI;

use kdvduo::critical::{
    alpha_index, build_roots, critical_length, default_p_grid, elementary_symmetric, enumerate_candidates,
    length_for_alpha, printed_alpha_index, spectral_witness, symbol_roots, verify_vieta, witness_matrix,
    witness_sigma, CriticalCandidate, CriticalIndex, IndexConvention,
};
use kdvduo::{Error, SystemParams, ValidatedParams};

fn params() -> ValidatedParams {
    SystemParams::new(0.5, 1.0, 1.0, 1.0).validate().unwrap()
}

fn brute_alpha(idx: [u32; 5]) -> i64 {
    let s: Vec<i64> = idx.iter().scan(0i64, |acc, &x| { *acc += x as i64; Some(*acc) }).collect();
    let sigma = (5 * idx[0] + 4 * idx[1] + 3 * idx[2] + 2 * idx[3] + idx[4]) as i64;
    6 * s.iter().map(|x| x * x).sum::<i64>() - sigma * sigma
}

fn all_indices(max: u32) -> impl Iterator<Item = [u32; 5]> {
    let n = max + 1;
    (0..n.pow(5)).map(move |mut k| {
        std::array::from_fn(|_| {
            let d = k % n;
            k /= n;
            d
        })
    })
}

#[test]
fn alpha_matches_brute_force() {
    for idx in all_indices(4) {
        let got = alpha_index(CriticalIndex(idx));
        if idx == [0; 5] {
            assert_eq!(got, Err(Error::AllZeroIndex));
        } else {
            assert_eq!(got.unwrap(), brute_alpha(idx), "{idx:?}");
        }
    }
}

#[test]
fn alpha_is_positive_and_symmetric_under_reversal() {
    for idx in all_indices(3).filter(|i| *i != [0; 5]) {
        let mut rev = idx;
        rev.reverse();
        let a = alpha_index(CriticalIndex(idx)).unwrap();
        assert!(a > 0);
        assert_eq!(a, alpha_index(CriticalIndex(rev)).unwrap());
    }
}

fn candidate_with_length(p: &ValidatedParams, idx: CriticalIndex, length: f64) -> CriticalCandidate {
    let (xi, pv) = build_roots(p, idx, length);
    CriticalCandidate {
        index: idx,
        alpha: 0,
        length,
        xi: Some(xi),
        p: Some(pv),
        vieta_residuals: None,
        consistent: false,
        degenerate: false,
        multiplicity: 1,
    }
}

#[test]
fn sum_of_squares_relation_fixes_the_quadratic_form() {
    let p = params();
    let idx = CriticalIndex([1, 1, 1, 1, 1]);
    assert_eq!(alpha_index(idx).unwrap(), 105);
    assert_eq!(printed_alpha_index(idx).unwrap(), 104);
    let good = verify_vieta(&p, &candidate_with_length(&p, idx, critical_length(&p, idx).unwrap())).unwrap();
    assert!(good[1] < 1e-12, "{good:?}");
    let bad = verify_vieta(&p, &candidate_with_length(&p, idx, length_for_alpha(&p, 104.0).unwrap())).unwrap();
    assert!(bad[1] > 1e-3, "{bad:?}");
}

#[test]
fn first_root_needs_the_length_factor() {
    let p = params();
    let idx = CriticalIndex([2, 0, 1, 0, 1]);
    let length = critical_length(&p, idx).unwrap();
    let (mut xi, _) = build_roots(&p, idx, length);
    assert!(elementary_symmetric(&xi)[0].abs() < 1e-12);
    // the same spacing started from -(pi/3) sigma without 1/L
    let shift = -PI / 3.0 * idx.weighted_sum() as f64 - xi[0];
    xi.iter_mut().for_each(|x| *x += shift);
    assert!(elementary_symmetric(&xi)[0].abs() > 1e-3);
}

#[test]
fn enumerated_candidates_meet_the_first_two_relations() {
    let p = params();
    let cands = enumerate_candidates(&p, 20.0, IndexConvention::WithZero).unwrap();
    assert!(!cands.is_empty());
    for w in cands.windows(2) {
        assert!(w[0].length < w[1].length);
    }
    for c in &cands {
        let r = c.vieta_residuals.unwrap();
        assert!(r[0] <= 1e-10 && r[1] <= 1e-10, "{:?} {r:?}", c.index);
        assert!(c.length <= 20.0 * (1.0 + 1e-12));
        let rep = c.index;
        assert_eq!(alpha_index(rep).unwrap(), c.alpha);
    }
    let smallest = cands[0].length;
    assert!((smallest - PI * (0.75f64 * 5.0 / 3.0).sqrt()).abs() < 1e-12);
    assert!((smallest - 3.5124).abs() < 1e-4);
}

#[test]
fn positive_convention_is_a_subset() {
    let p = params();
    let all = enumerate_candidates(&p, 20.0, IndexConvention::WithZero).unwrap();
    let pos = enumerate_candidates(&p, 20.0, IndexConvention::Positive).unwrap();
    assert!(pos.len() < all.len());
    assert!(pos.iter().all(|c| !c.index.has_zero()));
    assert!(pos.iter().all(|c| all.iter().any(|a| a.alpha == c.alpha)));
    assert_eq!(pos[0].alpha, 105);
}

#[test]
fn candidates_need_positive_r() {
    let p = SystemParams::new(0.5, 1.0, 1.0, 0.0).validate().unwrap();
    assert!(matches!(enumerate_candidates(&p, 20.0, IndexConvention::WithZero), Err(Error::NonpositiveR(_))));
}

#[test]
fn missing_roots_are_reported() {
    let p = params();
    let mut c = CriticalCandidate::new(&p, CriticalIndex([1, 0, 0, 0, 0])).unwrap();
    c.xi = None;
    assert_eq!(verify_vieta(&p, &c), Err(Error::RootsNotPopulated));
}

#[test]
fn roots_sum_to_zero() {
    let p = params();
    for pv in [-20.0, -1.0, 2.5, 30.0] {
        let s: num_complex::Complex64 = symbol_roots(&p, pv).iter().sum();
        assert!(s.norm() < 1e-9, "{s}");
    }
}

#[test]
fn witness_matrix_shape_and_scaling() {
    let m = witness_matrix(&params(), 1.0, 2.0).unwrap();
    assert_eq!((m.nrows(), m.ncols()), (10, 6));
    for j in 0..6 {
        assert!((m.column(j).norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn witness_stays_away_from_zero_at_unit_length() {
    let w = spectral_witness(&params(), 1.0, &default_p_grid(200)).unwrap();
    assert!(w.min_sigma >= 1e-3, "{}", w.min_sigma);
    assert!(w.skipped.is_empty());
    assert_eq!(w.lambda_scan.len(), 400);
}

#[test]
fn witness_rejects_degenerate_inputs() {
    let p = params();
    assert!(matches!(witness_sigma(&p, 1.0, 0.0), Err(Error::DegenerateSymbol { .. })));
    assert!(spectral_witness(&p, 1.0, &[]).is_err());
    assert!(spectral_witness(&p, -1.0, &[1.0]).is_err());
}
