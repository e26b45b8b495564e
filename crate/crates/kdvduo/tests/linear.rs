use kdvduo::diagonalization::solve_forward_via_diagonalization;
use kdvduo::linear::{
    cubic_characteristic_roots, extract_traces, solve_adjoint, solve_airy_ibvp, solve_forward_linear, transpose_defect,
    AdjointMode, CoupledSolver,
};
use kdvduo::mms::{coupled_error, coupled_error_diagonal, observed_orders, scalar_error, Profile};
use kdvduo::norms::x_norm;
use kdvduo::{BoundaryData, Grid, StatePair, SystemParams, Trajectory};
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params() -> kdvduo::ValidatedParams {
    SystemParams::new(0.5, 1.0, 1.0, 1.0).validate().unwrap()
}

const LEVELS: [(usize, usize); 3] = [(51, 250), (101, 1000), (201, 4000)];

fn random_state(g: &Grid, rng: &mut ChaCha8Rng) -> StatePair {
    let coeffs: Vec<[f64; 2]> = (0..6).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
    let coeffs = &coeffs;
    let field = |k: usize| {
        move |x: f64| {
            coeffs.iter().enumerate().map(|(j, c)| c[k] * ((j + 1) as f64 * std::f64::consts::PI * x / g.length).sin() / (j + 1) as f64).sum()
        }
    };
    StatePair::from_fn(g, field(0), field(1))
}

#[test]
fn zero_data_gives_zero_trajectory() {
    let g = Grid::new(1.0, 0.5, 21, 20).unwrap();
    let z = vec![0.0; g.nt + 1];
    let sol = solve_airy_ibvp(1.0, &g, &vec![0.0; g.nx], &z, &z, &z, None).unwrap();
    assert!(sol.slices.iter().flatten().all(|&x| x == 0.0));
    let (traj, _) = solve_forward_linear(&params(), &g, &StatePair::zeros(g.nx), &BoundaryData::zeros(g.nt), None).unwrap();
    assert!(traj.slices.iter().all(|s| s.max_abs() == 0.0));
}

#[test]
fn constants_are_stationary() {
    let g = Grid::new(1.0, 1.0, 31, 40).unwrap();
    let c = vec![2.5; g.nt + 1];
    let sol = solve_airy_ibvp(1.3, &g, &vec![2.5; g.nx], &c, &c, &vec![0.0; g.nt + 1], None).unwrap();
    let dev = sol.slices.iter().flatten().map(|x| (x - 2.5).abs()).fold(0.0, f64::max);
    assert!(dev < 1e-11, "{dev}");
}

#[test]
fn scalar_solver_is_second_order() {
    for profile in [Profile::Sine2, Profile::Cosine] {
        let mut errs = Vec::new();
        let mut dxs = Vec::new();
        for (nx, nt) in LEVELS {
            let g = Grid::new(1.0, 1.0, nx, nt).unwrap();
            errs.push(scalar_error(1.0, &g, profile).unwrap());
            dxs.push(g.dx());
        }
        let orders = observed_orders(&errs, &dxs);
        assert!(orders.iter().all(|&o| o >= 1.8), "{profile:?} {errs:?} {orders:?}");
    }
}

#[test]
fn coupled_solver_is_second_order() {
    let p = params();
    let mut errs = Vec::new();
    let mut dxs = Vec::new();
    for (nx, nt) in LEVELS {
        let g = Grid::new(1.0, 1.0, nx, nt).unwrap();
        errs.push(coupled_error(&p, &g, Profile::Sine2, Profile::Cosine).unwrap());
        dxs.push(g.dx());
    }
    let orders = observed_orders(&errs, &dxs);
    assert!(orders.iter().all(|&o| o >= 1.8), "{errs:?} {orders:?}");
}

#[test]
fn decoupled_case_matches_scalar_solver() {
    let p = SystemParams::new(0.0, 1.0, 2.0, 0.0).validate().unwrap();
    let g = Grid::new(1.0, 0.5, 41, 100).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let init = random_state(&g, &mut rng);
    let mut bd = BoundaryData::zeros(g.nt);
    for n in 1..=g.nt {
        bd.h0[n] = (g.t(n) * 3.0).sin();
        bd.h2[n] = g.t(n);
    }
    let (traj, _) = solve_forward_linear(&p, &g, &init, &bd, None).unwrap();
    let sol = solve_airy_ibvp(1.0, &g, &init.u, &bd.h0, &bd.h1, &bd.h2, None).unwrap();
    let diff = traj.slices.iter().zip(&sol.slices).flat_map(|(s, u)| s.u.iter().zip(u).map(|(a, b)| (a - b).abs())).fold(0.0, f64::max);
    assert!(diff < 1e-10, "{diff}");
}

#[test]
fn characteristic_roots() {
    assert!(cubic_characteristic_roots(1.0, 1.0, 0.0).iter().all(|z| z.norm() == 0.0));
    let r = cubic_characteristic_roots(1.0, 1.0, 1.0);
    assert!((r[0] - Complex64::i()).norm() < 1e-15);
    assert!((r[1] - Complex64::new(3f64.sqrt() / 2.0, -0.5)).norm() < 1e-15);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let (a, rho, l): (f64, f64, f64) = (rng.random_range(0.1..3.0), rng.random_range(0.0..4.0), rng.random_range(0.1..5.0));
        let s = Complex64::i() * a * (rho * l).powi(3);
        for z in cubic_characteristic_roots(a, l, rho) {
            assert!((s + a * z.powi(3)).norm() <= 1e-10 * s.norm().max(1e-300));
        }
    }
}

#[test]
fn trace_stencils_are_exact_on_quadratics() {
    let g = Grid::new(1.0, 1.0, 101, 2).unwrap();
    let s = StatePair::from_fn(&g, |x| x * x, |x| (std::f64::consts::PI * x).sin());
    let traj = Trajectory { slices: vec![s.clone(), s.clone(), s] };
    let t = extract_traces(&traj, &g).unwrap();
    assert!((t.u[1][1][0] - 2.0).abs() < 1e-12);
    assert!((t.u[2][1][0] - 2.0).abs() < 1e-10);
    assert!((t.v[1][0][0] - std::f64::consts::PI).abs() < 2e-3);
    let coarse = Grid { nx: 4, ..g };
    assert!(extract_traces(&traj, &coarse).is_err());
}

#[test]
fn homogeneous_evolution_is_dissipative() {
    let p = params();
    let g = Grid::new(1.0, 1.0, 101, 300).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..3 {
        let init = random_state(&g, &mut rng);
        let (traj, _) = solve_forward_linear(&p, &g, &init, &BoundaryData::zeros(g.nt), None).unwrap();
        let norms: Vec<f64> = traj.slices.iter().map(|s| x_norm(s, &p, &g).unwrap()).collect();
        for w in norms.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-8), "{} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn transpose_identity_holds() {
    let p = params();
    let g = Grid::new(1.0, 0.5, 41, 60).unwrap();
    let solver = CoupledSolver::new(&p, &g).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let init = random_state(&g, &mut rng);
        let z = random_state(&g, &mut rng);
        let mut bd = BoundaryData::zeros(g.nt);
        for c in kdvduo::Channel::ALL {
            for x in bd.channel_mut(c).iter_mut() {
                *x = rng.random_range(-1.0..1.0);
            }
        }
        let d = transpose_defect(&solver, &init, &bd, &z).unwrap();
        assert!(d < 1e-12, "{d}");
    }
}

#[test]
fn adjoint_modes_agree() {
    let p = params();
    let mut diffs = Vec::new();
    for (nx, nt) in [(51, 250), (101, 1000)] {
        let g = Grid::new(1.0, 1.0, nx, nt).unwrap();
        let s4 = |x: f64| (std::f64::consts::PI * x).sin().powi(4);
        let fin = StatePair::from_fn(&g, s4, |x| 0.5 * s4(x) * (1.0 + x));
        let (ta, _) = solve_adjoint(&p, &g, &fin, AdjointMode::Pde).unwrap();
        let (tb, _) = solve_adjoint(&p, &g, &fin, AdjointMode::Transpose).unwrap();
        // compare away from the terminal layer and the boundary closures
        let d = ta.slices[..nt * 9 / 10]
            .iter()
            .zip(&tb.slices)
            .flat_map(|(a, b)| (3..nx - 3).map(move |i| (a.u[i] - b.u[i]).abs().max((a.v[i] - b.v[i]).abs())))
            .fold(0.0, f64::max);
        let mms = coupled_error(&p, &g, Profile::Sine2, Profile::Cosine).unwrap();
        assert!(d <= 10.0 * mms, "nx={nx}: {d} vs {mms}");
        diffs.push(d);
    }
    assert!(diffs[1] < diffs[0]);
}

#[test]
fn diagonalized_solver_matches_monolithic() {
    let p = params();
    let g = Grid::new(1.0, 1.0, 101, 1000).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mms = coupled_error(&p, &g, Profile::Sine2, Profile::Cosine).unwrap();
    let mms_diag = coupled_error_diagonal(&p, &g, Profile::Sine2, Profile::Cosine).unwrap();
    assert!(mms_diag < 2.0 * mms);
    for _ in 0..2 {
        let init = random_state(&g, &mut rng);
        let (a, _) = solve_forward_linear(&p, &g, &init, &BoundaryData::zeros(g.nt), None).unwrap();
        let b = solve_forward_via_diagonalization(&p, &g, &init, &BoundaryData::zeros(g.nt), None).unwrap();
        let d = a.slices.iter().zip(&b.trajectory.slices).map(|(x, y)| x.sub(y).max_abs()).fold(0.0, f64::max);
        assert!(d <= 10.0 * mms, "{d} vs {mms}");
    }
}

#[test]
fn no_transport_needs_one_pass() {
    let p = SystemParams::new(0.5, 1.0, 1.0, 0.0).validate().unwrap();
    let g = Grid::new(1.0, 0.5, 31, 50).unwrap();
    let init = StatePair::from_fn(&g, |x| (3.0 * x).sin(), |x| x * (1.0 - x));
    let sol = solve_forward_via_diagonalization(&p, &g, &init, &BoundaryData::zeros(g.nt), None).unwrap();
    assert_eq!(sol.iterations, 1);
    let (a, _) = solve_forward_linear(&p, &g, &init, &BoundaryData::zeros(g.nt), None).unwrap();
    let d = a.slices.iter().zip(&sol.trajectory.slices).map(|(x, y)| x.sub(y).max_abs()).fold(0.0, f64::max);
    assert!(d < 1e-11, "{d}");
}
