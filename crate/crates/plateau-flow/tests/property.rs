//! Property-based invariants.

use num_complex::Complex64;
use plateau_flow::mesh::{energy, Grid, SurfaceMap, TensorField};
use plateau_flow::moebius::{h_theta, h_theta_jac, mobius_angle, CutoffPair, DiffeoParams, SymTensor};
use plateau_flow::plateau::{isotonic_project, pava};
use proptest::prelude::*;
use std::f64::consts::PI;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pava_is_monotone_idempotent_projection(y in prop::collection::vec(-10.0f64..10.0, 1..24)) {
        let p = pava(&y);
        prop_assert_eq!(p.len(), y.len());
        for w in p.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12);
        }
        // Idempotence.
        let pp = pava(&p);
        for (a, b) in p.iter().zip(&pp) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        // Projection optimality against a family of feasible candidates.
        let cost: f64 = y.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum();
        let mut z = y.clone();
        z.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let alt: f64 = y.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum();
        prop_assert!(cost <= alt + 1e-9);
    }

    #[test]
    fn isotonic_projection_is_feasible(
        y in prop::collection::vec(-5.0f64..5.0, 6..20),
        anchor_val in -1.0f64..1.0,
    ) {
        let n = y.len();
        let anchors = vec![(0usize, anchor_val), (n / 2, anchor_val + 0.5), (n, anchor_val + 1.0)];
        let p = isotonic_project(&y, &anchors).unwrap();
        prop_assert_eq!(p[0], anchor_val);
        prop_assert_eq!(p[n / 2], anchor_val + 0.5);
        for w in p.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12);
        }
        prop_assert!(*p.last().unwrap() <= anchor_val + 1.0 + 1e-12);
    }

    #[test]
    fn mobius_lift_degree_one_and_monotone(
        re in -0.92f64..0.92,
        im in -0.92f64..0.92,
        phi in -20.0f64..20.0,
        theta in -10.0f64..10.0,
    ) {
        let b = Complex64::new(re, im);
        prop_assume!(b.norm() < 0.95);
        let f = mobius_angle(b, phi, theta).unwrap();
        let f_shift = mobius_angle(b, phi, theta + 2.0 * PI).unwrap();
        prop_assert!((f_shift - f - 2.0 * PI).abs() < 1e-11);
        let f_phi = mobius_angle(b, phi + 2.0 * PI, theta).unwrap();
        prop_assert!((f_phi - f - 2.0 * PI).abs() < 1e-11);
        // Strictly increasing.
        let d = 1e-5;
        let slope = (mobius_angle(b, phi, theta + d).unwrap() - f) / d;
        prop_assert!(slope > 0.0);
    }

    #[test]
    fn h_map_identity_band_and_monotone(
        re in -0.9f64..0.9,
        phi_p in -8.0f64..8.0,
        x in -1.0f64..1.0,
        theta in 0.0f64..(2.0 * PI),
    ) {
        let p = DiffeoParams::new(
            Complex64::new(re, 0.2 * re),
            Complex64::new(-0.3 * re, re),
            phi_p,
            -phi_p,
        ).unwrap();
        let cut = CutoffPair::standard();
        let tp = h_theta(&p, &cut, x, theta);
        if x.abs() <= 0.5 {
            prop_assert_eq!(tp, theta);
        }
        let (_, slope) = h_theta_jac(&p, &cut, x, theta);
        prop_assert!(slope > 0.0);
        // Degree one in theta.
        let wrap = h_theta(&p, &cut, x, theta + 2.0 * PI);
        prop_assert!((wrap - tp - 2.0 * PI).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn energy_is_conformally_invariant(seed in 0u64..1000) {
        let grid = Grid::new(8, 12).unwrap();
        let mut rng = plateau_flow::verify::test_rng(seed);
        let mut values = vec![0.0; grid.n_nodes() * 2];
        for i in 0..=grid.n_x {
            for j in 0..grid.n_theta {
                let (x, th) = (grid.x_of(i), grid.theta_of(j));
                let node = grid.node(i, j);
                values[node * 2] = x + 0.5 * th.sin();
                values[node * 2 + 1] = x * x - th.cos();
            }
        }
        let phi: Vec<f64> = (0..grid.n_theta).map(|j| grid.theta_of(j)).collect();
        let u = SurfaceMap { dim: 2, values, phi_plus: phi.clone(), phi_minus: phi };
        let mut g = TensorField::zeros(grid.n_tri());
        let mut g_scaled = TensorField::zeros(grid.n_tri());
        for t in 0..grid.n_tri() {
            let a = 0.5 + rand::Rng::gen::<f64>(&mut rng);
            let c = 0.5 + rand::Rng::gen::<f64>(&mut rng);
            let b = 0.5 * (a * c).sqrt() * (2.0 * rand::Rng::gen::<f64>(&mut rng) - 1.0);
            let base = SymTensor { xx: a, xt: b, tt: c };
            g.set(t, base);
            g_scaled.set(t, base.scale(0.01 + 10.0 * rand::Rng::gen::<f64>(&mut rng)));
        }
        let e1 = energy(&u, &g, &grid).unwrap();
        let e2 = energy(&u, &g_scaled, &grid).unwrap();
        prop_assert!((e1 - e2).abs() <= 1e-12 * e1.max(1.0));
    }
}
