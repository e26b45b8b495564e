use kdvduo::time_sobolev::{
    fractional_time_operator, mean_free, periodic_l2, sobolev_norm, SobolevMode, SobolevSpec,
};
use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_periodic(nt: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w: Vec<f64> = (0..nt).map(|_| rng.random_range(-1.0..1.0)).collect();
    w.push(w[0]);
    w
}

/// Dense oracle from the eigendecomposition of the periodic second difference.
fn dense_operator(nt: usize, horizon: f64, sigma: f64, spec: &SobolevSpec) -> DMatrix<f64> {
    let dt = horizon / nt as f64;
    let mut lap = DMatrix::zeros(nt, nt);
    for j in 0..nt {
        lap[(j, j)] = 2.0 / (dt * dt);
        lap[(j, (j + 1) % nt)] -= 1.0 / (dt * dt);
        lap[(j, (j + nt - 1) % nt)] -= 1.0 / (dt * dt);
    }
    let eig = lap.symmetric_eigen();
    let symbols = eig.eigenvalues.map(|theta| {
        let mu = 2.0 * (theta.max(0.0).sqrt() * dt / 2.0).min(1.0).asin() / dt;
        // rounding can leave a tiny positive eigenvalue for the constant mode
        let mu = if mu < 1e-6 { 0.0 } else { mu };
        spec.symbol(mu, sigma)
    });
    &eig.eigenvectors * DMatrix::from_diagonal(&symbols) * eig.eigenvectors.transpose()
}

#[test]
fn matches_dense_oracle() {
    let nt = 48;
    for mode in [SobolevMode::Homogeneous, SobolevMode::Inhomogeneous] {
        let spec = SobolevSpec::new(-1.0 / 3.0, 1.5, mode).unwrap();
        let w = random_periodic(nt, 4);
        let out = fractional_time_operator(&w, -1.0 / 3.0, &spec).unwrap();
        let dense = dense_operator(nt, 1.5, -1.0 / 3.0, &spec) * DVector::from_column_slice(&w[..nt]);
        let err = (0..nt).map(|j| (out[j] - dense[j]).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-8 * dense.amax(), "{mode:?} {err}");
    }
}

#[test]
fn inverse_pair_is_identity() {
    let spec = SobolevSpec::new(1.0 / 3.0, 2.0, SobolevMode::Homogeneous).unwrap();
    let w = mean_free(&random_periodic(100, 8)).unwrap();
    for sigma in [1.0 / 3.0, 1.0 / 6.0, 0.5] {
        let back = fractional_time_operator(&fractional_time_operator(&w, sigma, &spec).unwrap(), -sigma, &spec).unwrap();
        let err = back.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{sigma}: {err}");
    }
}

#[test]
fn smoothing_norm_identity() {
    let spec = SobolevSpec::new(-1.0 / 3.0, 2.0, SobolevMode::Homogeneous).unwrap();
    let w = mean_free(&random_periodic(90, 12)).unwrap();
    let smoothed = fractional_time_operator(&w, -1.0 / 6.0, &spec).unwrap();
    let a = periodic_l2(&smoothed, 2.0).unwrap();
    let b = sobolev_norm(&w, &spec).unwrap();
    assert!((a - b).abs() < 1e-10 * b);
}

#[test]
fn zero_and_identity_cases() {
    let spec = SobolevSpec::new(0.0, 1.0, SobolevMode::Homogeneous).unwrap();
    assert_eq!(sobolev_norm(&[0.0; 11], &spec).unwrap(), 0.0);
    let w = mean_free(&random_periodic(30, 1)).unwrap();
    let out = fractional_time_operator(&w, 0.0, &spec).unwrap();
    assert!(out.iter().zip(&w).all(|(a, b)| (a - b).abs() < 1e-14));
}

#[test]
fn homogeneous_and_inhomogeneous_are_equivalent() {
    let nt = 128;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = SobolevSpec::new(1.0 / 3.0, 1.0, SobolevMode::Homogeneous).unwrap();
    let i = SobolevSpec { mode: SobolevMode::Inhomogeneous, ..h };
    for _ in 0..20 {
        let amps: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..=nt)
            .map(|n| {
                let t = n as f64 / nt as f64;
                amps.iter().enumerate().map(|(k, a)| a * (2.0 * std::f64::consts::PI * (k + 1) as f64 * t).sin()).sum()
            })
            .collect();
        let ratio = sobolev_norm(&w, &i).unwrap() / sobolev_norm(&w, &h).unwrap();
        assert!((0.5..=2.0).contains(&ratio), "{ratio}");
    }
}

#[test]
fn symmetric_in_trapezoid_pairing() {
    let spec = SobolevSpec::new(-1.0 / 3.0, 1.0, SobolevMode::Homogeneous).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let nt = 40;
    let a: Vec<f64> = (0..=nt).map(|_| rng.random_range(-1.0..1.0)).collect();
    let b: Vec<f64> = (0..=nt).map(|_| rng.random_range(-1.0..1.0)).collect();
    let w: Vec<f64> = (0..=nt).map(|n| if n == 0 || n == nt { 0.5 } else { 1.0 }).collect();
    let pair = |x: &[f64], y: &[f64]| x.iter().zip(y).zip(&w).map(|((p, q), r)| p * q * r).sum::<f64>();
    let ka = fractional_time_operator(&a, -1.0 / 3.0, &spec).unwrap();
    let kb = fractional_time_operator(&b, -1.0 / 3.0, &spec).unwrap();
    assert!((pair(&ka, &b) - pair(&a, &kb)).abs() < 1e-13);
}
