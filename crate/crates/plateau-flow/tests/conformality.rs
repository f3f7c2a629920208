//! Grid study of the two conformality-defect estimators on an exactly
//! conformal surface (the catenoid interpolant): the plain per-triangle
//! L1 defect converges at first order, the recovered-gradient estimator at
//! second order. This pins the behavior the acceptance threshold relies on.

use plateau_flow::collar::{collar_chart, half_length_y, CollarParams};
use plateau_flow::hopf::{hopf_l1_recovered, MetricState};
use plateau_flow::mesh::{hopf_components, Grid, SurfaceMap};
use plateau_flow::moebius::{CutoffPair, DiffeoParams};

fn catenoid_ratios(n_x: usize, n_theta: usize) -> (f64, f64) {
    let z0 = 0.4f64;
    let (mut lo, mut hi) = (z0 / 1.1997, 4.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid * (z0 / mid).cosh() > 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    // Match the collar modulus to the catenoid's conformal half-length.
    let y_cat = z0 / c;
    let (mut lo, mut hi) = (1e-3, 100.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if half_length_y(CollarParams::new(1.0, mid).unwrap()) > y_cat {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let ell = 0.5 * (lo + hi);
    let grid = Grid::new(n_x, n_theta).unwrap();
    let chart = collar_chart(CollarParams::new(1.0, ell).unwrap()).unwrap();
    let st =
        MetricState::build(chart, DiffeoParams::identity(), CutoffPair::standard(), &grid).unwrap();
    let mut values = vec![0.0; grid.n_nodes() * 3];
    for i in 0..=grid.n_x {
        for j in 0..grid.n_theta {
            let s = chart.s_of_x(grid.x_of(i));
            let th = grid.theta_of(j);
            let node = grid.node(i, j);
            values[node * 3] = c * s.cosh() * th.cos();
            values[node * 3 + 1] = c * s.cosh() * th.sin();
            values[node * 3 + 2] = c * s;
        }
    }
    let phi: Vec<f64> = (0..grid.n_theta).map(|j| grid.theta_of(j)).collect();
    let u = SurfaceMap { dim: 3, values, phi_plus: phi.clone(), phi_minus: phi };
    let hopf = hopf_components(&u, &st.md).unwrap();
    let e = st.md.energy(&u);
    (st.md.tensor_l1(&hopf.re_phi) / e, hopf_l1_recovered(&u, &st) / e)
}

#[test]
fn recovered_estimator_is_second_order() {
    let (plain_c, rec_c) = catenoid_ratios(64, 48);
    let (plain_f, rec_f) = catenoid_ratios(128, 96);
    let plain_order = (plain_c / plain_f).log2();
    let rec_order = (rec_c / rec_f).log2();
    println!(
        "plain: {plain_c:.5} -> {plain_f:.5} (order {plain_order:.2}); \
         recovered: {rec_c:.5} -> {rec_f:.5} (order {rec_order:.2})"
    );
    assert!(plain_order > 0.8 && plain_order < 1.3, "plain order {plain_order}");
    assert!(rec_order >= 1.8, "recovered order {rec_order}");
    // The recovered estimator certifies near-conformality at the acceptance
    // grid, the plain one cannot.
    assert!(rec_c < 1e-2);
    assert!(plain_c > 1e-2);
}
