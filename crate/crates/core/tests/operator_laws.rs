//! Structural laws of the discrete operators A and B on random fields.

use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subeigen::{apply_a, apply_b, build_grid, lq_norm, p_energy, pairing, Field, Grid, GroupDescriptor};

const PAIRS: usize = 1000;

fn grids() -> Vec<Arc<Grid>> {
    vec![
        build_grid(GroupDescriptor::euclidean2(), &[(0.0, 1.0), (-0.5, 1.5)], &[6, 5]).unwrap(),
        build_grid(GroupDescriptor::heisenberg1(), &[(-1.0, 1.0), (0.0, 1.0), (-0.5, 0.5)], &[4, 3, 4]).unwrap(),
    ]
}

fn random_field(g: &Arc<Grid>, rng: &mut ChaCha8Rng) -> Field {
    let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
    let values = (0..g.num_nodes()).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
    Field::from_values(g, values).unwrap()
}

fn unorm(u: &Field, p: f64) -> f64 {
    p_energy(u, p, 0.0).unwrap().powf(1.0 / p)
}

#[test]
fn h1_h2_homogeneity() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for g in grids() {
        for _ in 0..50 {
            let u = random_field(&g, &mut rng);
            let p = rng.gen_range(1.1..6.0);
            let q = rng.gen_range(1.1..6.0);
            let t: f64 = rng.gen_range(-4.0..4.0);
            let a = apply_a(&u, p, 0.0).unwrap();
            let at = apply_a(&u.scaled(t), p, 0.0).unwrap();
            let b = apply_b(&u, q).unwrap();
            let bt = apply_b(&u.scaled(t), q).unwrap();
            let (fa, fb) = (t.abs().powf(p - 2.0) * t, t.abs().powf(q - 2.0) * t);
            let amax = a.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let bmax = b.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (x, y) in a.values().iter().zip(at.values()) {
                assert!((fa * x - y).abs() <= 1e-12 * fa.abs() * amax, "H1 p={p} t={t}");
            }
            for (x, y) in b.values().iter().zip(bt.values()) {
                assert!((fb * x - y).abs() <= 1e-12 * fb.abs() * bmax, "H2 q={q} t={t}");
            }
        }
    }
}

#[test]
fn h3_h4_hoelder_bounds_over_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for g in grids() {
        for _ in 0..PAIRS {
            let (v, w) = (random_field(&g, &mut rng), random_field(&g, &mut rng));
            let p = rng.gen_range(1.1..6.0);
            let q = rng.gen_range(1.1..6.0);
            let lhs = pairing(&apply_a(&v, p, 0.0).unwrap(), &w).unwrap();
            let rhs = unorm(&v, p).powf(p - 1.0) * unorm(&w, p);
            assert!(lhs <= rhs * (1.0 + 1e-12), "H3 p={p}: {lhs} > {rhs}");
            let lhs = pairing(&apply_b(&v, q).unwrap(), &w).unwrap();
            let rhs = lq_norm(&v, q).unwrap().powf(q - 1.0) * lq_norm(&w, q).unwrap();
            assert!(lhs <= rhs * (1.0 + 1e-12), "H4 q={q}: {lhs} > {rhs}");
        }
    }
}

#[test]
fn h3_h4_equality_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for g in grids() {
        for _ in 0..100 {
            let w = random_field(&g, &mut rng);
            let t = rng.gen_range(0.01..10.0);
            let v = w.scaled(t);
            let p = rng.gen_range(1.1..6.0);
            let q = rng.gen_range(1.1..6.0);
            let lhs = pairing(&apply_a(&v, p, 0.0).unwrap(), &w).unwrap();
            let rhs = unorm(&v, p).powf(p - 1.0) * unorm(&w, p);
            assert!((lhs - rhs).abs() <= 1e-12 * rhs, "H3 equality p={p}: {lhs} vs {rhs}");
            let lhs = pairing(&apply_b(&v, q).unwrap(), &w).unwrap();
            let rhs = lq_norm(&v, q).unwrap().powf(q - 1.0) * lq_norm(&w, q).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12 * rhs, "H4 equality q={q}: {lhs} vs {rhs}");
        }
        // t = 0 in H4 and the zero field in both.
        let w = random_field(&g, &mut rng);
        let zero = Field::zeros(&g);
        assert_eq!(pairing(&apply_b(&zero, 2.5).unwrap(), &w).unwrap(), 0.0);
        assert_eq!(pairing(&apply_a(&zero, 2.5, 0.0).unwrap(), &w).unwrap(), 0.0);
    }
}

#[test]
fn h3_is_strict_off_the_ray() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for g in grids() {
        let w = random_field(&g, &mut rng);
        let mut v = w.scaled(2.0);
        v.values_mut()[0] += 0.5 * w.sup_norm();
        let lhs = pairing(&apply_a(&v, 3.0, 0.0).unwrap(), &w).unwrap();
        let rhs = unorm(&v, 3.0).powi(2) * unorm(&w, 3.0);
        assert!(lhs < rhs * (1.0 - 1e-9));
    }
}

#[test]
fn coercivity_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for g in grids() {
        for _ in 0..200 {
            let v = random_field(&g, &mut rng);
            let p = rng.gen_range(1.1..6.0);
            let lhs = pairing(&apply_a(&v, p, 0.0).unwrap(), &v).unwrap();
            let rhs = p_energy(&v, p, 0.0).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12 * rhs, "p={p}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn monotonicity_over_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = f64::INFINITY;
    for g in grids() {
        for _ in 0..PAIRS {
            let p = rng.gen_range(1.1..6.0);
            let u = random_field(&g, &mut rng);
            let u = u.scaled(1.0 / unorm(&u, p));
            // Nearby pairs probe the roundoff floor.
            let v = if rng.gen_bool(0.5) {
                let v = random_field(&g, &mut rng);
                v.scaled(1.0 / unorm(&v, p))
            } else {
                u.combine(1.0, &random_field(&g, &mut rng), 1e-6).unwrap()
            };
            let da = apply_a(&u, p, 0.0).unwrap().combine(1.0, &apply_a(&v, p, 0.0).unwrap(), -1.0).unwrap();
            let value = pairing(&da, &u.combine(1.0, &v, -1.0).unwrap()).unwrap();
            assert!(value >= -1e-12, "p={p}: {value}");
            worst = worst.min(value);
        }
    }
    println!("smallest monotonicity pairing: {worst:e}");
}

/// ⟨|a|^{p−2}a − |b|^{p−2}b, a − b⟩ / ((|a|+|b|)^{p−2}|a−b|²)
fn vector_ratio(a: [f64; 2], b: [f64; 2], p: f64) -> (f64, f64) {
    let norm = |x: [f64; 2]| x[0].hypot(x[1]);
    let flux = |x: [f64; 2]| {
        let n = norm(x);
        let s = if n == 0.0 { 0.0 } else { n.powf(p - 2.0) };
        [s * x[0], s * x[1]]
    };
    let (fa, fb) = (flux(a), flux(b));
    let d = [a[0] - b[0], a[1] - b[1]];
    let lhs = (fa[0] - fb[0]) * d[0] + (fa[1] - fb[1]) * d[1];
    let rhs = (norm(a) + norm(b)).powf(p - 2.0) * (d[0] * d[0] + d[1] * d[1]);
    (lhs, lhs / rhs)
}

#[test]
fn vector_inequality_constant_is_positive() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for p in [1.5, 2.0, 3.0, 4.0] {
        let mut infimum = f64::INFINITY;
        for _ in 0..10_000 {
            let mut draw = || {
                let r = 10f64.powf(rng.gen_range(-3.0..3.0));
                [r * rng.gen_range(-1.0..1.0), r * rng.gen_range(-1.0..1.0)]
            };
            let (a, b) = (draw(), draw());
            let (lhs, ratio) = vector_ratio(a, b, p);
            assert!(lhs > 0.0, "p={p} a={a:?} b={b:?}");
            assert!(ratio > 0.0);
            infimum = infimum.min(ratio);
        }
        println!("p = {p}: empirical C(p) = {infimum:.6}");
        assert!(infimum > 0.0);
    }
}

#[test]
fn dual_norm_of_a_is_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for g in grids() {
        for _ in 0..100 {
            let p = rng.gen_range(1.1..6.0);
            let u = random_field(&g, &mut rng);
            let a = apply_a(&u, p, 0.0).unwrap();
            let bound = unorm(&u, p).powf(p - 1.0);
            // Basis test fields and u itself.
            for i in 0..g.num_nodes() {
                let mut e = Field::zeros(&g);
                e.values_mut()[i] = 1.0;
                let ratio = pairing(&a, &e).unwrap().abs() / unorm(&e, p);
                assert!(ratio <= bound * (1.0 + 1e-12));
            }
            let ratio = pairing(&a, &u).unwrap() / unorm(&u, p);
            assert!((ratio - bound).abs() <= 1e-12 * bound);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn b_is_odd_and_pairs_to_norm(values in prop::collection::vec(-100.0f64..100.0, 30), q in 1.05f64..6.0) {
        let g = build_grid(GroupDescriptor::euclidean2(), &[(0.0, 1.0); 2], &[6, 5]).unwrap();
        let u = Field::from_values(&g, values).unwrap();
        let b = apply_b(&u, q).unwrap();
        let bm = apply_b(&u.scaled(-1.0), q).unwrap();
        for (x, y) in b.values().iter().zip(bm.values()) {
            prop_assert_eq!(*x, -*y);
        }
        let norm = lq_norm(&u, q).unwrap();
        let paired = pairing(&b, &u).unwrap();
        prop_assert!((paired - norm.powf(q)).abs() <= 1e-12 * norm.powf(q).max(1e-300));
    }

    #[test]
    fn p2_action_is_additive(
        a in prop::collection::vec(-10.0f64..10.0, 48),
        b in prop::collection::vec(-10.0f64..10.0, 48),
    ) {
        let g = build_grid(GroupDescriptor::heisenberg1(), &[(0.0, 1.0); 3], &[4, 3, 4]).unwrap();
        let (u, v) = (Field::from_values(&g, a).unwrap(), Field::from_values(&g, b).unwrap());
        let sum = apply_a(&u.combine(1.0, &v, 1.0).unwrap(), 2.0, 0.0).unwrap();
        let parts = apply_a(&u, 2.0, 0.0).unwrap().combine(1.0, &apply_a(&v, 2.0, 0.0).unwrap(), 1.0).unwrap();
        for (x, y) in sum.values().iter().zip(parts.values()) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
        }
    }
}
