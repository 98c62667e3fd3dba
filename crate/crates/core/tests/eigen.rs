//! Solvers against the brute-force oracle, dilation covariance, and the
//! monotone behaviour of the inverse-iteration trace.

use std::f64::consts::PI;
use std::sync::Arc;

use subeigen::oracle::brute_force_lambda;
use subeigen::{build_grid, inverse_iteration, rayleigh_minimize, residual, Grid, GroupDescriptor, SolverConfig};

fn tiny_grids() -> Vec<Arc<Grid>> {
    vec![
        build_grid(GroupDescriptor::euclidean2(), &[(0.0, 1.0); 2], &[3, 3]).unwrap(),
        build_grid(GroupDescriptor::euclidean2(), &[(0.0, 2.0), (0.0, 1.0)], &[5, 4]).unwrap(),
        build_grid(GroupDescriptor::heisenberg1(), &[(0.0, 1.0); 3], &[2, 2, 3]).unwrap(),
        build_grid(GroupDescriptor::heisenberg1(), &[(-1.0, 1.0), (-1.0, 1.0), (-0.5, 0.5)], &[3, 3, 2]).unwrap(),
    ]
}

fn pairs_for(g: &Grid) -> Vec<(f64, f64)> {
    let nu = g.group().homogeneous_dim();
    let all = [(2.0, 2.0), (1.5, 1.5), (1.5, 2.0), (2.0, 1.5), (2.0, 3.0), (3.0, 2.0), (3.0, 4.0)];
    all.into_iter()
        .filter(|&(p, q)| subeigen::check_exponents(p, q, nu).is_ok())
        .collect()
}

#[test]
fn solvers_match_the_oracle() {
    for g in tiny_grids() {
        for (p, q) in pairs_for(&g) {
            let oracle = brute_force_lambda(&g, p, q, 32, 11).unwrap();
            let mut cfg = SolverConfig::new(&g, p, q);
            // Several local minima are possible once q > p.
            if q > p {
                cfg.starts = 32;
            }
            let inv = inverse_iteration(&cfg, None).unwrap();
            let ray = rayleigh_minimize(&cfg, None).unwrap();
            for (name, lam) in [("inverse", inv.lambda_hat), ("rayleigh", ray.lambda_hat)] {
                let gap = (lam - oracle.lambda_star).abs() / oracle.lambda_star;
                assert!(gap <= 1e-4, "{name} on {:?} p={p} q={q}: {lam} vs {}", g.resolution(), oracle.lambda_star);
            }
        }
    }
}

#[test]
fn dense_oracle_eigenpair_has_tiny_residual() {
    for g in tiny_grids() {
        let o = subeigen::oracle::dense_lambda(&g).unwrap();
        let r = residual(&o.minimizer, o.lambda_star, 2.0, 2.0).unwrap();
        assert!(r <= 1e-10, "{r}");
    }
}

#[test]
fn three_node_chain() {
    // One interior row with h = 1 in x; the y direction contributes 2/h_y².
    let g = build_grid(GroupDescriptor::euclidean2(), &[(0.0, 4.0), (0.0, 2.0)], &[3, 1]).unwrap();
    let cfg = SolverConfig::new(&g, 2.0, 2.0);
    let chain = 2.0 - 2f64.sqrt();
    let inv = inverse_iteration(&cfg, None).unwrap();
    let dense = brute_force_lambda(&g, 2.0, 2.0, 32, 0).unwrap();
    assert!((inv.lambda_hat - 2.0 - chain).abs() < 1e-8, "{}", inv.lambda_hat);
    assert!((dense.lambda_star - 2.0 - chain).abs() < 1e-12);
}

#[test]
fn unit_square_converges_to_two_pi_squared() {
    let g = build_grid(GroupDescriptor::euclidean2(), &[(0.0, 1.0); 2], &[64, 64]).unwrap();
    let cfg = SolverConfig::new(&g, 2.0, 2.0);
    let target = 2.0 * PI * PI;
    for res in [inverse_iteration(&cfg, None).unwrap(), rayleigh_minimize(&cfg, None).unwrap()] {
        assert!(res.converged);
        assert!((res.lambda_hat / target - 1.0).abs() <= 0.01, "{:?}: {}", res.method, res.lambda_hat);
    }
}

#[test]
fn inverse_iteration_trace_is_monotone() {
    let grids = [
        build_grid(GroupDescriptor::euclidean2(), &[(0.0, 1.0); 2], &[12, 12]).unwrap(),
        build_grid(GroupDescriptor::heisenberg1(), &[(0.0, 1.0); 3], &[6, 6, 6]).unwrap(),
    ];
    for g in &grids {
        for (p, q) in pairs_for(g) {
            let cfg = SolverConfig::new(g, p, q);
            let res = inverse_iteration(&cfg, None).unwrap();
            assert!(res.converged, "p={p} q={q}");
            let slack = 10.0 * cfg.inner.tol_grad;
            for w in res.mu_trace.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + slack), "p={p} q={q}: {} -> {}", w[0], w[1]);
            }
            let last = res.mu_trace.len() - 1;
            assert!((res.unorm_trace[last] - res.mu_trace[last]).abs() <= 1e-4 * res.lambda_hat);
        }
    }
}

#[test]
fn dilation_covariance() {
    let bases = [
        build_grid(GroupDescriptor::euclidean2(), &[(0.0, 1.0), (0.0, 1.5)], &[10, 12]).unwrap(),
        build_grid(GroupDescriptor::heisenberg1(), &[(-1.0, 1.0), (0.0, 1.0), (-0.5, 0.5)], &[5, 4, 6]).unwrap(),
    ];
    for base in &bases {
        let nu = base.group().homogeneous_dim() as f64;
        for (p, q) in pairs_for(base) {
            let lam = inverse_iteration(&SolverConfig::new(base, p, q), None).unwrap().lambda_hat;
            for s in [0.5, 2.0] {
                let g = base.dilated(s).unwrap();
                let lam_s = inverse_iteration(&SolverConfig::new(&g, p, q), None).unwrap().lambda_hat;
                let expect = s.powf(nu - p - nu * p / q);
                let ratio = lam_s / lam;
                assert!((ratio / expect - 1.0).abs() <= 1e-6, "s={s} p={p} q={q}: {ratio} vs {expect}");
            }
        }
    }
}

#[test]
fn inner_solve_matches_brute_force_minimizer() {
    use rand::{Rng, SeedableRng};
    use subeigen::inner_solver::{solve_inner, InnerConfig};
    use subeigen::oracle::brute_force_inner;
    use subeigen::DualField;

    let g = build_grid(GroupDescriptor::euclidean2(), &[(0.0, 1.0); 2], &[3, 3]).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    for _ in 0..3 {
        let f = DualField::from_values(&g, (0..9).map(|_| rng.gen_range(-5.0..5.0)).collect()).unwrap();
        let z = solve_inner(&f, 4.0, &InnerConfig::for_exponent(4.0)).unwrap();
        let oracle = brute_force_inner(&f, 4.0, 32, 9).unwrap();
        let err = z
            .values()
            .iter()
            .zip(oracle.values())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err <= 1e-6, "sup error {err}");
    }
}
